use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::sketch::MinHashSketch;
use crate::table::ColumnRef;
use crate::text::{canonical, ValueType};

/// Per-column statistics. Counts exclude empty (null) cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub column_ref: ColumnRef,
    pub total_count: u64,
    pub distinct_count: u64,
    pub uniqueness: f64,
    pub value_sketch: MinHashSketch,
    pub inferred_type: ValueType,
}

/// Distinct non-null canonical values of a column.
pub fn distinct_values<'a>(values: impl IntoIterator<Item = &'a str>, ty: ValueType) -> HashSet<String> {
    values
        .into_iter()
        .map(|v| canonical(v, ty))
        .filter(|v| !v.is_empty())
        .collect()
}

/// Profile one column. Returns the profile and its distinct canonical values,
/// which the index builder keeps around for exact containment checks.
pub fn profile_column<S: AsRef<str>>(
    column_ref: ColumnRef,
    values: &[S],
    seed: u64,
) -> (ColumnProfile, HashSet<String>) {
    let ty = ValueType::infer(values.iter().map(AsRef::as_ref));
    let non_null: Vec<&str> = values
        .iter()
        .map(AsRef::as_ref)
        .filter(|v| !v.trim().is_empty())
        .collect();
    let distinct = distinct_values(non_null.iter().copied(), ty);
    let total = non_null.len() as u64;
    let distinct_count = distinct.len() as u64;
    let uniqueness = if total == 0 {
        0.0
    } else {
        distinct_count as f64 / total as f64
    };
    let sketch = MinHashSketch::from_values(distinct.iter().map(String::as_str), seed);
    (
        ColumnProfile {
            column_ref,
            total_count: total,
            distinct_count,
            uniqueness,
            value_sketch: sketch,
            inferred_type: ty,
        },
        distinct,
    )
}
