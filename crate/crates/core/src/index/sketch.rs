//! Bottom-k min-hash sketch over the distinct values of a column.
//!
//! The sketch keeps the `SKETCH_SLOTS` smallest 64-bit hashes. The bottom-k
//! of a union is computable from the two sketches, and an element of that
//! union sample belongs to a column iff it is in the column's own sketch, so
//! membership counts give an unbiased containment estimate without the size
//! skew that plagues Jaccard-to-containment conversion.

use serde::{Deserialize, Serialize};

use crate::hash::hash64;

pub const SKETCH_SLOTS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSketch {
    /// Ascending, distinct, at most `SKETCH_SLOTS` entries.
    hashes: Vec<u64>,
}

impl MinHashSketch {
    pub fn from_values<'a>(values: impl IntoIterator<Item = &'a str>, seed: u64) -> Self {
        let mut all: Vec<u64> = values
            .into_iter()
            .map(|v| hash64(seed, v.as_bytes()))
            .collect();
        all.sort_unstable();
        all.dedup();
        all.truncate(SKETCH_SLOTS);
        MinHashSketch { hashes: all }
    }

    pub fn hashes(&self) -> &[u64] {
        &self.hashes
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    /// Estimated fraction of this column's distinct values that appear in `other`.
    pub fn containment_in(&self, other: &MinHashSketch) -> f64 {
        if self.hashes.is_empty() {
            return 0.0;
        }
        // Merge the two sorted lists, keeping the first SKETCH_SLOTS of the union.
        let (a, b) = (&self.hashes, &other.hashes);
        let (mut i, mut j) = (0, 0);
        let mut in_self = 0usize;
        let mut in_both = 0usize;
        let mut taken = 0usize;
        while taken < SKETCH_SLOTS && (i < a.len() || j < b.len()) {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x == y => {
                    in_self += 1;
                    in_both += 1;
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    in_self += 1;
                    i += 1;
                }
                (Some(_), Some(_)) => j += 1,
                (Some(_), None) => {
                    in_self += 1;
                    i += 1;
                }
                (None, Some(_)) => j += 1,
                (None, None) => unreachable!(),
            }
            taken += 1;
        }
        if in_self == 0 {
            0.0
        } else {
            in_both as f64 / in_self as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::SKETCH_SEED;

    fn sketch(range: std::ops::Range<u32>) -> MinHashSketch {
        let vals: Vec<String> = range.map(|i| i.to_string()).collect();
        MinHashSketch::from_values(vals.iter().map(String::as_str), SKETCH_SEED)
    }

    #[test]
    fn small_sets_are_exact() {
        let a = sketch(1..4);
        let b = sketch(1..5);
        assert_eq!(a.containment_in(&b), 1.0);
        assert_eq!(b.containment_in(&a), 0.75);
    }

    #[test]
    fn empty_sketch_contains_nothing() {
        let e = MinHashSketch::from_values(std::iter::empty(), SKETCH_SEED);
        assert_eq!(e.containment_in(&sketch(0..10)), 0.0);
        assert_eq!(sketch(0..10).containment_in(&e), 0.0);
    }

    #[test]
    fn identical_large_sets() {
        let a = sketch(0..5000);
        assert_eq!(a.len(), SKETCH_SLOTS);
        assert_eq!(a.containment_in(&a.clone()), 1.0);
    }
}
