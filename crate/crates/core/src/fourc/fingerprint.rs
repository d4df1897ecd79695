use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::View;
use crate::hash::{hash128, CELL_SEED};
use crate::text::normalize_cell;

/// Hashes and key statistics of one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewFingerprint {
    pub view_id: String,
    pub schema: Vec<String>,
    pub row_hash_list: Vec<u128>,
    #[serde(skip)]
    pub row_hash_set: HashSet<u128>,
    /// Wrapping sum of the distinct row hashes.
    pub view_hash: u128,
    /// Distinct non-null values over row count, per schema attribute.
    pub key_scores: Vec<f64>,
}

impl ViewFingerprint {
    /// True when some row hash occurs more than once.
    pub fn has_duplicates(&self) -> bool {
        self.row_hash_set.len() != self.row_hash_list.len()
    }

    pub fn multiplicities(&self) -> HashMap<u128, usize> {
        let mut m = HashMap::new();
        for h in &self.row_hash_list {
            *m.entry(*h).or_default() += 1;
        }
        m
    }
}

pub fn cell_hash(attribute: &str, cell: &str) -> u128 {
    let cell = normalize_cell(cell);
    let mut buf = Vec::with_capacity(attribute.len() + 1 + cell.len());
    buf.extend_from_slice(attribute.as_bytes());
    buf.push(0x1f);
    buf.extend_from_slice(cell.as_bytes());
    hash128(CELL_SEED, &buf)
}

/// Order-independent: the wrapping sum of the cell hashes.
pub fn row_hash(schema: &[String], row: &[String]) -> u128 {
    schema
        .iter()
        .zip(row)
        .fold(0u128, |acc, (a, c)| acc.wrapping_add(cell_hash(a, c)))
}

pub fn fingerprint(view: &View) -> ViewFingerprint {
    let row_hash_list: Vec<u128> = view.rows.iter().map(|r| row_hash(&view.schema, r)).collect();
    let row_hash_set: HashSet<u128> = row_hash_list.iter().copied().collect();
    let view_hash = row_hash_set.iter().fold(0u128, |acc, h| acc.wrapping_add(*h));
    let n = view.rows.len();
    let key_scores = (0..view.schema.len())
        .map(|c| {
            if n == 0 {
                return 0.0;
            }
            let distinct: HashSet<&str> = view
                .rows
                .iter()
                .map(|r| r[c].as_str())
                .filter(|v| !v.is_empty())
                .collect();
            distinct.len() as f64 / n as f64
        })
        .collect();
    ViewFingerprint {
        view_id: view.view_id.clone(),
        schema: view.schema.clone(),
        row_hash_list,
        row_hash_set,
        view_hash,
        key_scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(rows: &[&[&str]]) -> View {
        View::new(
            "v",
            vec!["a".into(), "b".into()],
            rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        )
    }

    #[test]
    fn single_row_view_hash_is_row_hash() {
        let f = fingerprint(&view(&[&["1", "x"]]));
        assert_eq!(f.view_hash, f.row_hash_list[0]);
    }

    #[test]
    fn shuffled_rows_same_hash() {
        let a = fingerprint(&view(&[&["1", "x"], &["2", "y"], &["3", "z"]]));
        let b = fingerprint(&view(&[&["3", "z"], &["1", "x"], &["2", "y"]]));
        assert_eq!(a.view_hash, b.view_hash);
    }

    #[test]
    fn cells_are_tied_to_their_attribute() {
        let a = fingerprint(&view(&[&["x", "y"]]));
        let b = fingerprint(&view(&[&["y", "x"]]));
        assert_ne!(a.view_hash, b.view_hash);
    }

    #[test]
    fn key_scores() {
        let f = fingerprint(&view(&[&["1", "a"], &["2", "a"], &["3", "b"], &["4", "b"]]));
        assert_eq!(f.key_scores, vec![1.0, 0.5]);
    }
}
