//! From a query view to joinable groups: candidate tables, candidate groups,
//! and join graphs.

mod graphs;
mod query_view;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

pub use graphs::{find_join_graphs, GraphEnumeration, GraphOptions, JoinGraph};
pub use query_view::{QueryView, ValueConstraint};

use crate::index::DiscoveryIndex;
use crate::table::{ColumnRef, TableId};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub attribute_hits: BTreeSet<String>,
    pub value_hits: BTreeSet<ValueConstraint>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.attribute_hits.len() + self.value_hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn union_with(&mut self, other: &ConstraintSet) {
        self.attribute_hits.extend(other.attribute_hits.iter().cloned());
        self.value_hits.extend(other.value_hits.iter().cloned());
    }

    /// True when `other` holds a constraint this set lacks.
    pub fn gains_from(&self, other: &ConstraintSet) -> bool {
        other.attribute_hits.iter().any(|a| !self.attribute_hits.contains(a))
            || other.value_hits.iter().any(|v| !self.value_hits.contains(v))
    }

    pub fn fulfills(&self, qv: &QueryView) -> bool {
        self.len() == qv.constraint_count()
    }
}

/// A relevant table with the constraints it satisfies and the column backing
/// each satisfied attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTable {
    pub table: TableId,
    pub constraints: ConstraintSet,
    pub columns: BTreeMap<String, ColumnRef>,
}

/// Tables relevant to `qv`. A table is relevant iff it satisfies at least one
/// attribute constraint; a value constraint counts only when the value lives
/// in the very column that satisfies its attribute.
pub fn find_candidate_tables(index: &DiscoveryIndex, qv: &QueryView) -> Vec<CandidateTable> {
    let mut by_table: BTreeMap<TableId, CandidateTable> = BTreeMap::new();
    for attr in &qv.attributes {
        for col in index.search_attribute(attr) {
            let entry = by_table.entry(col.table).or_insert_with(|| CandidateTable {
                table: col.table,
                constraints: ConstraintSet::default(),
                columns: BTreeMap::new(),
            });
            entry.constraints.attribute_hits.insert(attr.clone());
            entry.columns.entry(attr.clone()).or_insert(col);
        }
    }
    for vc in qv.value_constraints() {
        let attr_cols: HashSet<ColumnRef> = index.search_attribute(&vc.attribute).into_iter().collect();
        for col in index.search_value(&vc.value) {
            if attr_cols.contains(&col) {
                if let Some(ct) = by_table.get_mut(&col.table) {
                    ct.constraints.value_hits.insert(vc.clone());
                }
            }
        }
    }
    by_table.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateGroup {
    pub tables: BTreeSet<TableId>,
    pub fulfilled: ConstraintSet,
    /// Query attribute to the column projected for it, in query order.
    pub projection: Vec<(String, ColumnRef)>,
}

impl CandidateGroup {
    pub fn is_full(&self, qv: &QueryView) -> bool {
        self.fulfilled.fulfills(qv)
    }
}

/// Safety valve on group enumeration for very wide corpora.
pub const MAX_CANDIDATE_GROUPS: usize = 10_000;

/// Greedy candidate-group search.
///
/// Tables are ordered by constraint count (descending, ties by id). Each table
/// in turn seeds a group; a later table joins the group only when it adds a
/// constraint the group lacks. The search branches over every such table, so
/// every minimal cover is reached from its first member. A group is emitted as
/// soon as it fulfills the query view, or, partially fulfilled, when no later
/// table can extend it. Output is deduplicated by table set and sorted by
/// fulfilled count descending, then size ascending, then table ids.
pub fn find_candidate_groups(candidates: &[CandidateTable], qv: &QueryView) -> Vec<CandidateGroup> {
    let mut sorted: Vec<&CandidateTable> = candidates
        .iter()
        .filter(|c| !c.constraints.is_empty())
        .collect();
    sorted.sort_by(|a, b| {
        b.constraints
            .len()
            .cmp(&a.constraints.len())
            .then(a.table.cmp(&b.table))
    });

    let mut found: BTreeMap<BTreeSet<TableId>, ConstraintSet> = BTreeMap::new();
    for (ref_pos, reference) in sorted.iter().enumerate() {
        let mut members = vec![ref_pos];
        let cons = reference.constraints.clone();
        extend_group(&sorted, qv, ref_pos + 1, &mut members, cons, &mut found);
        if found.len() >= MAX_CANDIDATE_GROUPS {
            log::warn!("candidate group search truncated at {MAX_CANDIDATE_GROUPS} groups");
            break;
        }
    }

    let by_id: BTreeMap<TableId, &CandidateTable> = sorted.iter().map(|c| (c.table, *c)).collect();
    let mut groups: Vec<CandidateGroup> = found
        .into_iter()
        .map(|(tables, fulfilled)| {
            let projection = projection_for(&tables, &by_id, qv);
            CandidateGroup {
                tables,
                fulfilled,
                projection,
            }
        })
        .collect();
    groups.sort_by(|a, b| {
        b.fulfilled
            .len()
            .cmp(&a.fulfilled.len())
            .then(a.tables.len().cmp(&b.tables.len()))
            .then_with(|| a.tables.cmp(&b.tables))
    });
    groups
}

fn extend_group(
    sorted: &[&CandidateTable],
    qv: &QueryView,
    from: usize,
    members: &mut Vec<usize>,
    cons: ConstraintSet,
    found: &mut BTreeMap<BTreeSet<TableId>, ConstraintSet>,
) {
    if found.len() >= MAX_CANDIDATE_GROUPS {
        return;
    }
    if cons.fulfills(qv) {
        emit(sorted, members, cons, found);
        return;
    }
    let mut extended = false;
    for next in from..sorted.len() {
        let t = sorted[next];
        if !cons.gains_from(&t.constraints) {
            continue;
        }
        extended = true;
        let mut grown = cons.clone();
        grown.union_with(&t.constraints);
        members.push(next);
        extend_group(sorted, qv, next + 1, members, grown, found);
        members.pop();
    }
    if !extended {
        emit(sorted, members, cons, found);
    }
}

fn emit(
    sorted: &[&CandidateTable],
    members: &[usize],
    cons: ConstraintSet,
    found: &mut BTreeMap<BTreeSet<TableId>, ConstraintSet>,
) {
    let key: BTreeSet<TableId> = members.iter().map(|&i| sorted[i].table).collect();
    found.entry(key).or_insert(cons);
}

/// For each fulfilled attribute pick the backing column: a table carrying one
/// of the attribute's value hits wins, then the lowest table id.
fn projection_for(
    tables: &BTreeSet<TableId>,
    by_id: &BTreeMap<TableId, &CandidateTable>,
    qv: &QueryView,
) -> Vec<(String, ColumnRef)> {
    let mut out = Vec::new();
    for attr in &qv.attributes {
        let mut best: Option<(bool, &ColumnRef)> = None;
        for t in tables {
            let Some(ct) = by_id.get(t) else { continue };
            let Some(col) = ct.columns.get(attr) else { continue };
            let has_value = ct.constraints.value_hits.iter().any(|v| &v.attribute == attr);
            match best {
                Some((true, _)) => {}
                Some((false, _)) if !has_value => {}
                _ => best = Some((has_value, col)),
            }
        }
        if let Some((_, col)) = best {
            out.push((attr.clone(), col.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qv(attrs: &[&str], tuples: Vec<Vec<(&str, &str)>>) -> QueryView {
        QueryView::new(
            attrs.iter().copied(),
            tuples
                .into_iter()
                .map(|t| t.into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()),
        )
        .unwrap()
    }

    fn cand(id: u32, attrs: &[&str], values: &[(&str, &str)]) -> CandidateTable {
        let mut c = CandidateTable {
            table: TableId(id),
            constraints: ConstraintSet::default(),
            columns: BTreeMap::new(),
        };
        for a in attrs {
            c.constraints.attribute_hits.insert(a.to_string());
            c.columns.insert(a.to_string(), ColumnRef::new(TableId(id), *a));
        }
        for (a, v) in values {
            c.constraints.value_hits.insert(ValueConstraint {
                attribute: a.to_string(),
                value: v.to_string(),
            });
        }
        c
    }

    #[test]
    fn single_table_fulfilling_everything() {
        let q = qv(&["a", "b"], vec![]);
        let groups = find_candidate_groups(&[cand(0, &["a", "b"], &[]), cand(1, &["a"], &[])], &q);
        assert_eq!(groups[0].tables, BTreeSet::from([TableId(0)]));
        assert!(groups[0].is_full(&q));
        // The second table never extends the first (nothing new) and seeds a partial group.
        assert_eq!(groups.len(), 2);
        assert!(!groups[1].is_full(&q));
    }

    #[test]
    fn two_disjoint_tables() {
        let q = qv(&["a", "b"], vec![]);
        let groups = find_candidate_groups(&[cand(0, &["a"], &[]), cand(1, &["b"], &[])], &q);
        let full: Vec<_> = groups.iter().filter(|g| g.is_full(&q)).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].tables, BTreeSet::from([TableId(0), TableId(1)]));
    }

    #[test]
    fn ordering_prefers_more_constraints_then_fewer_tables() {
        let q = qv(&["a", "b", "c"], vec![]);
        let groups = find_candidate_groups(
            &[cand(0, &["a"], &[]), cand(1, &["b"], &[]), cand(2, &["c"], &[]), cand(3, &["a", "b"], &[])],
            &q,
        );
        for w in groups.windows(2) {
            let (x, y) = (&w[0], &w[1]);
            assert!(
                x.fulfilled.len() > y.fulfilled.len()
                    || (x.fulfilled.len() == y.fulfilled.len() && x.tables.len() <= y.tables.len())
            );
        }
        assert_eq!(groups[0].tables, BTreeSet::from([TableId(2), TableId(3)]));
    }

    #[test]
    fn projection_prefers_value_hit_column() {
        let q = qv(&["name"], vec![vec![("name", "x")]]);
        let groups = find_candidate_groups(&[cand(0, &["name"], &[]), cand(1, &["name"], &[("name", "x")])], &q);
        assert_eq!(groups[0].tables, BTreeSet::from([TableId(1)]));
        assert_eq!(groups[0].projection[0].1.table, TableId(1));
    }
}
