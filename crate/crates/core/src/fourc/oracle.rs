//! Reference classifier without chasing: every candidate pair is resolved by
//! comparing each differing row of one view with each of the other, cell by
//! cell.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    contradiction, differing_rows, pair_key, run, ComplementaryPair, Counters, FourCResult, KeyConflict, View,
};

pub fn no_chasing_oracle(views: &[View]) -> FourCResult {
    run(views, |fe| {
        let mut counters = Counters::default();
        let mut r = fe.result;
        let pos = |id: &str| fe.views.iter().position(|v| v.view_id == id).unwrap();
        let pairs = r.c34_pairs.clone();
        for p in &pairs {
            counters.pairs_full += 1;
            let (ia, ib) = (pos(&p.left), pos(&p.right));
            let (a, b) = (&fe.views[ia], &fe.views[ib]);
            let (left_rows, right_rows) = (differing_rows(&fe.fps[ia], &fe.fps[ib]), differing_rows(&fe.fps[ib], &fe.fps[ia]));
            let Some(k) = pair_key(&fe.fps[ia], &fe.fps[ib]) else {
                r.c3.push(ComplementaryPair {
                    left: p.left.clone(),
                    right: p.right.clone(),
                    left_rows: left_rows.clone(),
                    right_rows: right_rows.clone(),
                    no_key: true,
                });
                continue;
            };
            // value -> (left rows, right rows, differing attribute positions)
            let mut found: BTreeMap<String, (BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)> = BTreeMap::new();
            for &l in &left_rows {
                for &rr in &right_rows {
                    counters.cell_comparisons += 1;
                    let key = &a.rows[l][k];
                    if key.is_empty() || *key != b.rows[rr][k] {
                        continue;
                    }
                    let e = found.entry(key.clone()).or_default();
                    e.0.insert(l);
                    e.1.insert(rr);
                    for c in 0..r.schema.len() {
                        counters.cell_comparisons += 1;
                        if a.rows[l][c] != b.rows[rr][c] {
                            e.2.insert(c);
                        }
                    }
                }
            }
            if found.is_empty() {
                r.c3.push(ComplementaryPair {
                    left: p.left.clone(),
                    right: p.right.clone(),
                    left_rows: left_rows.clone(),
                    right_rows: right_rows.clone(),
                    no_key: false,
                });
                continue;
            }
            let rest = |v: &View, rows: &[usize]| -> Vec<usize> {
                rows.iter()
                    .copied()
                    .filter(|i| !found.contains_key(&v.rows[*i][k]))
                    .collect()
            };
            let remaining = (rest(a, &left_rows), rest(b, &right_rows));
            let conflicts = found
                .iter()
                .map(|(value, (ls, rs, cs))| KeyConflict {
                    value: value.clone(),
                    attributes: cs.iter().map(|c| r.schema[*c].clone()).collect(),
                    left_rows: ls.iter().copied().collect(),
                    right_rows: rs.iter().copied().collect(),
                })
                .collect();
            r.c4.push(contradiction(&r.schema, k, (a, b), conflicts, remaining, false));
        }
        r.c3.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
        r.c4.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
        (r, counters)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_view_is_its_own_group() {
        let r = no_chasing_oracle(&[View::new("v", vec!["a".into()], vec![vec!["1".into()]])]);
        assert_eq!(r.schemas[0].c1.len(), 1);
        assert!(r.schemas[0].c34_pairs.is_empty());
    }

    #[test]
    fn shared_key_differing_cells_is_contradiction() {
        let schema = vec!["k".to_string(), "x".to_string()];
        let a = View::new("a", schema.clone(), vec![vec!["1".into(), "p".into()], vec!["2".into(), "q".into()]]);
        let b = View::new("b", schema, vec![vec!["1".into(), "z".into()], vec!["3".into(), "q".into()]]);
        let r = no_chasing_oracle(&[a, b]);
        assert_eq!(r.schemas[0].c4.len(), 1);
        assert_eq!(r.schemas[0].c4[0].values, vec!["1"]);
        assert_eq!(r.schemas[0].c4[0].attribute, "x");
    }
}
