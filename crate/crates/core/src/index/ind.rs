use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::ColumnProfile;
use crate::table::ColumnRef;

/// `from` is approximately included in `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionDependency {
    pub from: ColumnRef,
    pub to: ColumnRef,
    pub containment: f64,
    /// True when `containment` was computed from the full value sets.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndThresholds {
    pub containment: f64,
    pub uniqueness: f64,
    /// Exact verification runs only when both distinct sets are at most this large.
    pub exact_limit: usize,
}

impl Default for IndThresholds {
    fn default() -> Self {
        IndThresholds {
            containment: 0.8,
            uniqueness: 0.9,
            exact_limit: 100_000,
        }
    }
}

/// Estimates within this distance of the threshold go on to exact verification.
pub const ESTIMATE_SLACK: f64 = 0.15;

/// Distinct canonical values per column, available during an index build.
pub type ValueSets = HashMap<ColumnRef, HashSet<String>>;

pub fn exact_containment(from: &HashSet<String>, to: &HashSet<String>) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    let hit = from.iter().filter(|v| to.contains(*v)).count();
    hit as f64 / from.len() as f64
}

/// Find approximate inclusion dependencies among columns of distinct tables.
///
/// Sketch estimates screen every directed pair; when `value_sets` is given and
/// both sides fit `exact_limit`, the reported containment is exact. Output is
/// sorted by `(from, to)`.
pub fn find_inclusion_dependencies(
    profiles: &[ColumnProfile],
    value_sets: Option<&ValueSets>,
    thresholds: IndThresholds,
) -> Vec<InclusionDependency> {
    let n = profiles.len();
    let mut edges: Vec<InclusionDependency> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = &profiles[i];
            (0..n).filter_map(move |j| {
                let b = &profiles[j];
                if i == j || a.column_ref.table == b.column_ref.table {
                    return None;
                }
                if a.distinct_count == 0 || b.distinct_count == 0 {
                    return None;
                }
                if a.uniqueness < thresholds.uniqueness && b.uniqueness < thresholds.uniqueness {
                    return None;
                }
                let estimate = a.value_sketch.containment_in(&b.value_sketch);
                if estimate + ESTIMATE_SLACK < thresholds.containment {
                    return None;
                }
                let exact = value_sets.and_then(|sets| {
                    let sa = sets.get(&a.column_ref)?;
                    let sb = sets.get(&b.column_ref)?;
                    (sa.len() <= thresholds.exact_limit && sb.len() <= thresholds.exact_limit)
                        .then(|| exact_containment(sa, sb))
                });
                let (containment, is_exact) = match exact {
                    Some(c) => (c, true),
                    None => (estimate, false),
                };
                (containment >= thresholds.containment).then(|| InclusionDependency {
                    from: a.column_ref.clone(),
                    to: b.column_ref.clone(),
                    containment,
                    exact: is_exact,
                })
            })
        })
        .collect();
    edges.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
    edges
}
