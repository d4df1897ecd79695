use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use viewdisc::fixtures::{employee_query, write_employee_corpus};
use viewdisc::search::{
    find_candidate_groups, find_candidate_tables, find_join_graphs, CandidateGroup, CandidateTable, ConstraintSet,
    GraphOptions, ValueConstraint,
};
use viewdisc::table::{ColumnRef, TableId};
use viewdisc::{build_index, IndexConfig, QueryView};

const ATTRS: [&str; 4] = ["a", "b", "c", "d"];

fn query(n_attrs: usize, values: &[usize]) -> QueryView {
    let attrs = &ATTRS[..n_attrs];
    let tuple: Vec<(String, String)> = values
        .iter()
        .filter(|&&i| i < n_attrs)
        .map(|&i| (attrs[i].to_string(), format!("val{i}")))
        .collect();
    QueryView::new(attrs.iter().copied(), [tuple]).unwrap()
}

/// Random candidate tables: each satisfies a random subset of the attribute
/// constraints and, for some of those, the value constraint too.
fn candidates(qv: &QueryView, masks: &[(u8, u8)]) -> Vec<CandidateTable> {
    let values: BTreeMap<String, ValueConstraint> =
        qv.value_constraints().into_iter().map(|v| (v.attribute.clone(), v)).collect();
    masks
        .iter()
        .enumerate()
        .map(|(t, &(attr_mask, value_mask))| {
            let mut cs = ConstraintSet::default();
            let mut columns = BTreeMap::new();
            for (i, a) in qv.attributes.iter().enumerate() {
                if attr_mask & (1 << i) == 0 {
                    continue;
                }
                cs.attribute_hits.insert(a.clone());
                columns.insert(a.clone(), ColumnRef::new(TableId(t as u32), a.clone()));
                if value_mask & (1 << i) != 0 {
                    if let Some(v) = values.get(a) {
                        cs.value_hits.insert(v.clone());
                    }
                }
            }
            CandidateTable {
                table: TableId(t as u32),
                constraints: cs,
                columns,
            }
        })
        .collect()
}

/// Every subset that fulfills the query while none of its proper subsets do.
fn minimal_covers(cands: &[CandidateTable], qv: &QueryView) -> BTreeSet<BTreeSet<TableId>> {
    let n = cands.len();
    let full = |mask: u32| {
        let mut cs = ConstraintSet::default();
        for (i, c) in cands.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cs.union_with(&c.constraints);
            }
        }
        cs.fulfills(qv)
    };
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << n) {
        if !full(mask) {
            continue;
        }
        let minimal = (0..n).filter(|i| mask & (1 << i) != 0).all(|i| !full(mask & !(1 << i)));
        if minimal {
            out.insert((0..n).filter(|i| mask & (1 << i) != 0).map(|i| cands[i].table).collect());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn no_minimal_cover_is_missed(
        n_attrs in 1usize..=4,
        values in proptest::collection::vec(0usize..4, 0..3),
        masks in proptest::collection::vec((1u8..16, 0u8..16), 1..=12),
    ) {
        let qv = query(n_attrs, &values);
        let attr_bits = (1u8 << n_attrs) - 1;
        let masks: Vec<(u8, u8)> = masks
            .into_iter()
            .map(|(a, v)| (a & attr_bits, v & a & attr_bits))
            .filter(|(a, _)| *a != 0)
            .collect();
        prop_assume!(!masks.is_empty());
        let cands = candidates(&qv, &masks);
        let groups = find_candidate_groups(&cands, &qv);
        let returned: BTreeSet<BTreeSet<TableId>> =
            groups.iter().filter(|g| g.is_full(&qv)).map(|g| g.tables.clone()).collect();
        for cover in minimal_covers(&cands, &qv) {
            prop_assert!(returned.contains(&cover), "missing minimal cover {:?}", cover);
        }
        // Recomputable fulfilled sets, sort order, no duplicates.
        let by_id: BTreeMap<TableId, &CandidateTable> = cands.iter().map(|c| (c.table, c)).collect();
        let mut seen = BTreeSet::new();
        for g in &groups {
            let mut cs = ConstraintSet::default();
            for t in &g.tables {
                cs.union_with(&by_id[t].constraints);
            }
            prop_assert_eq!(&cs, &g.fulfilled);
            prop_assert!(seen.insert(g.tables.clone()));
        }
        for w in groups.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            prop_assert!(
                a.fulfilled.len() > b.fulfilled.len()
                    || (a.fulfilled.len() == b.fulfilled.len() && a.tables.len() <= b.tables.len())
            );
        }
    }
}

#[test]
fn employee_corpus_groups_match_exhaustive_oracle() {
    let dir = tempfile::tempdir().unwrap();
    write_employee_corpus(dir.path()).unwrap();
    let idx = build_index(dir.path(), IndexConfig::default()).unwrap();
    let qv = QueryView::new(["employee", "address"], Vec::<Vec<(String, String)>>::new()).unwrap();
    let cands = find_candidate_tables(&idx, &qv);
    let groups = find_candidate_groups(&cands, &qv);
    let name = |t: &TableId| idx.table(*t).unwrap().name.clone();
    let full: BTreeSet<Vec<String>> = groups
        .iter()
        .filter(|g| g.is_full(&qv))
        .map(|g| g.tables.iter().map(name).collect())
        .collect();
    let expected: BTreeSet<Vec<String>> = minimal_covers(&cands, &qv)
        .iter()
        .map(|c| c.iter().map(name).collect())
        .collect();
    assert_eq!(full, expected);
    assert_eq!(
        expected,
        [
            vec!["employees", "billing_address"],
            vec!["employees", "staff_2019"],
            vec!["employees", "staff_2020"],
            vec!["employees", "customers"],
        ]
        .into_iter()
        .map(|v| {
            let mut v: Vec<String> = v.into_iter().map(String::from).collect();
            v.sort_by_key(|n| idx.table_by_name(n).unwrap().id);
            v
        })
        .collect()
    );
    // The value constraint is only credited to the employees table.
    let qv = employee_query();
    let cands = find_candidate_tables(&idx, &qv);
    let with_value: Vec<String> = cands
        .iter()
        .filter(|c| !c.constraints.value_hits.is_empty())
        .map(|c| name(&c.table))
        .collect();
    assert_eq!(with_value, vec!["employees"]);
}

/// Three tables where `a` and `c` share no edge but both link to `b`. With a
/// corpus this small the spanning subgraphs can be listed by hand.
#[test]
fn join_graphs_match_brute_force_spanning_subgraphs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("a.csv"), "id,x\n1,p\n2,q\n3,r\n").unwrap();
    std::fs::write(p.join("b.csv"), "id,ref,y\n1,10,s\n2,20,t\n3,30,u\n4,40,v\n").unwrap();
    std::fs::write(p.join("c.csv"), "ref,z\n10,m\n20,n\n30,o\n").unwrap();
    let idx = build_index(p, IndexConfig::default()).unwrap();
    let id = |n: &str| idx.table_by_name(n).unwrap().id;
    let qv = QueryView::new(["x", "y", "z"], Vec::<Vec<(String, String)>>::new()).unwrap();
    let cands = find_candidate_tables(&idx, &qv);
    let groups = find_candidate_groups(&cands, &qv);
    let g: &CandidateGroup = groups.iter().find(|g| g.tables.len() == 3).unwrap();
    let opts = GraphOptions {
        max_hops: 1,
        ..GraphOptions::default()
    };
    let graphs = find_join_graphs(&idx, g, &opts, None).graphs;

    // Brute force: every subset of the corpus edges among group tables that
    // connects all three tables and is a tree.
    let edges: Vec<_> = idx
        .join_graph()
        .edges()
        .iter()
        .filter(|e| g.tables.contains(&e.left.table) && g.tables.contains(&e.right.table))
        .cloned()
        .collect();
    let mut expected = BTreeSet::new();
    for mask in 1u32..(1 << edges.len()) {
        let chosen: BTreeSet<_> = (0..edges.len()).filter(|i| mask & (1 << i) != 0).map(|i| edges[i].clone()).collect();
        if chosen.len() != 2 {
            continue;
        }
        let mut reach = BTreeSet::from([id("a")]);
        for _ in 0..3 {
            for e in &chosen {
                if reach.contains(&e.left.table) || reach.contains(&e.right.table) {
                    reach.insert(e.left.table);
                    reach.insert(e.right.table);
                }
            }
        }
        if reach.len() == 3 {
            expected.insert(chosen);
        }
    }
    let got: BTreeSet<_> = graphs.iter().map(|g| g.edges.clone()).collect();
    assert!(!expected.is_empty());
    assert_eq!(got, expected);
    assert!(graphs.iter().all(|gr| gr.is_connected() && gr.nodes == g.tables));
}
