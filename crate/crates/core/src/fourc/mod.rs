//! 4C classification of candidate views: compatible, contained,
//! complementary and contradictory.
//!
//! Views are bucketed by schema. Within a bucket, equal row-hash sets form
//! compatible groups (C1); among group representatives, row-hash subsets give
//! containment (C2) and the remaining pairs are split into complementary (C3)
//! and contradictory (C4) by comparing the key values of their differing rows.
//! A confirmed contradiction is chased through the graph of unresolved pairs
//! with direct key lookups before any full comparison.

mod fingerprint;
mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fingerprint::{cell_hash, fingerprint, row_hash, ViewFingerprint};
pub use oracle::no_chasing_oracle;

use crate::engine::CandidateView;
use crate::error::Result;
use crate::table::Row;

/// A view as seen by the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub view_id: String,
    pub schema: Vec<String>,
    pub rows: Vec<Row>,
}

impl View {
    pub fn new(view_id: impl Into<String>, schema: Vec<String>, rows: Vec<Row>) -> Self {
        View {
            view_id: view_id.into(),
            schema,
            rows,
        }
    }

    pub fn from_candidate(cv: &CandidateView) -> Result<Self> {
        Ok(View::new(cv.view_id.clone(), cv.schema.clone(), cv.rows.to_vec()?))
    }

    /// Rows reordered to `schema`, which must be a permutation of ours.
    fn aligned_to(&self, schema: &[String]) -> View {
        if self.schema == schema {
            return self.clone();
        }
        let pos: Vec<usize> = schema
            .iter()
            .map(|a| self.schema.iter().position(|b| b == a).expect("same schema bucket"))
            .collect();
        View {
            view_id: self.view_id.clone(),
            schema: schema.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| pos.iter().map(|p| r[*p].clone()).collect())
                .collect(),
        }
    }
}

/// Below this key score no attribute is trusted as a key.
pub const KEY_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibleGroup {
    pub representative: String,
    pub members: Vec<String>,
    /// Members share a row set but not row multiplicities.
    pub multiplicity_mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Containment {
    pub container: String,
    pub contained: String,
}

/// A pair of representatives with rows on both sides missing from the
/// other. The differing rows are only listed once the pair is compared in
/// full; chased pairs never need them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementaryPair {
    pub left: String,
    pub right: String,
    pub left_rows: Vec<usize>,
    pub right_rows: Vec<usize>,
    /// No attribute cleared the key floor; the pair was not checked for
    /// contradictions.
    pub no_key: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyConflict {
    pub value: String,
    /// Attributes on which some left and right row with this key differ.
    pub attributes: Vec<String>,
    pub left_rows: Vec<usize>,
    pub right_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictoryPair {
    pub left: String,
    pub right: String,
    pub key: String,
    /// First differing attribute across the conflicts.
    pub attribute: String,
    pub values: Vec<String>,
    pub conflicts: Vec<KeyConflict>,
    /// Differing rows whose key is not contradictory. Empty when chased.
    pub left_rows: Vec<usize>,
    pub right_rows: Vec<usize>,
    /// Settled by key lookups from a marked neighbor; `values` is then the
    /// subset confirmed by those lookups.
    pub chased: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaResult {
    /// Sorted attribute names.
    pub signature: Vec<String>,
    /// Column order used for rows and key tie-breaks.
    pub schema: Vec<String>,
    pub c1: Vec<CompatibleGroup>,
    pub c2: Vec<Containment>,
    pub c34_pairs: Vec<CandidatePair>,
    pub c3: Vec<ComplementaryPair>,
    pub c4: Vec<ContradictoryPair>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub cell_comparisons: u64,
    pub key_lookups: u64,
    pub pairs_full: u64,
    pub pairs_chased: u64,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.cell_comparisons += o.cell_comparisons;
        self.key_lookups += o.key_lookups;
        self.pairs_full += o.pairs_full;
        self.pairs_chased += o.pairs_chased;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FourCResult {
    pub schemas: Vec<SchemaResult>,
    pub counters: Counters,
}

/// Bucket membership only, for comparing classifier runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Buckets {
    pub c1: BTreeSet<BTreeSet<String>>,
    pub c2: BTreeSet<(String, String)>,
    pub c3: BTreeSet<(String, String)>,
    pub c4: BTreeSet<(String, String, String)>,
}

impl FourCResult {
    pub fn buckets(&self) -> Buckets {
        let mut b = Buckets::default();
        for s in &self.schemas {
            for g in &s.c1 {
                b.c1.insert(g.members.iter().cloned().collect());
            }
            for c in &s.c2 {
                b.c2.insert((c.container.clone(), c.contained.clone()));
            }
            for p in &s.c3 {
                b.c3.insert((p.left.clone(), p.right.clone()));
            }
            for p in &s.c4 {
                b.c4.insert((p.left.clone(), p.right.clone(), p.key.clone()));
            }
        }
        b
    }

    pub fn schema_for(&self, view_id: &str) -> Option<&SchemaResult> {
        self.schemas
            .iter()
            .find(|s| s.c1.iter().any(|g| g.members.iter().any(|m| m == view_id)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Group view indices by sorted attribute signature.
pub fn classify_per_schema(views: &[View]) -> BTreeMap<Vec<String>, Vec<usize>> {
    let mut out: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (i, v) in views.iter().enumerate() {
        let mut sig = v.schema.clone();
        sig.sort();
        out.entry(sig).or_default().push(i);
    }
    out
}

/// Group by view hash, confirmed by row-set equality. The representative is
/// the lowest view id. Input order does not matter.
pub fn identify_c1(fps: &[ViewFingerprint]) -> Vec<CompatibleGroup> {
    let mut order: Vec<usize> = (0..fps.len()).collect();
    order.sort_by(|a, b| fps[*a].view_id.cmp(&fps[*b].view_id));
    let mut by_hash: HashMap<u128, Vec<Vec<usize>>> = HashMap::new();
    for i in order {
        let slot = by_hash.entry(fps[i].view_hash).or_default();
        match slot
            .iter_mut()
            .find(|g| fps[g[0]].row_hash_set == fps[i].row_hash_set)
        {
            Some(g) => g.push(i),
            None => slot.push(vec![i]),
        }
    }
    let mut groups: Vec<CompatibleGroup> = by_hash
        .into_values()
        .flatten()
        .map(|g| {
            let first = fps[g[0]].multiplicities();
            let mismatch = g[1..].iter().any(|i| fps[*i].multiplicities() != first);
            CompatibleGroup {
                representative: fps[g[0]].view_id.clone(),
                members: g.iter().map(|i| fps[*i].view_id.clone()).collect(),
                multiplicity_mismatch: mismatch,
            }
        })
        .collect();
    groups.sort_by(|a, b| a.representative.cmp(&b.representative));
    groups
}

/// Containment and candidate C3/C4 pairs among representatives. Pairs are
/// ordered by view id.
pub fn identify_c2_and_candidate_c3c4(reps: &[&ViewFingerprint]) -> (Vec<Containment>, Vec<CandidatePair>) {
    let mut reps: Vec<&ViewFingerprint> = reps.to_vec();
    reps.sort_by(|a, b| a.view_id.cmp(&b.view_id));
    let per_left: Vec<(Vec<Containment>, Vec<CandidatePair>)> = (0..reps.len())
        .into_par_iter()
        .map(|i| {
            let mut c2 = Vec::new();
            let mut c34 = Vec::new();
            for j in i + 1..reps.len() {
                let (a, b) = (reps[i], reps[j]);
                let a_missing = a.row_hash_set.iter().any(|h| !b.row_hash_set.contains(h));
                let b_missing = b.row_hash_set.iter().any(|h| !a.row_hash_set.contains(h));
                match (a_missing, b_missing) {
                    (true, false) => c2.push(Containment {
                        container: a.view_id.clone(),
                        contained: b.view_id.clone(),
                    }),
                    (false, true) => c2.push(Containment {
                        container: b.view_id.clone(),
                        contained: a.view_id.clone(),
                    }),
                    (true, true) => c34.push(CandidatePair {
                        left: a.view_id.clone(),
                        right: b.view_id.clone(),
                    }),
                    // Equal sets were grouped by C1 already.
                    (false, false) => {}
                }
            }
            (c2, c34)
        })
        .collect();
    let mut c2 = Vec::new();
    let mut c34 = Vec::new();
    for (a, b) in per_left {
        c2.extend(a);
        c34.extend(b);
    }
    c2.sort();
    (c2, c34)
}

/// Rows of `a` whose hash is absent from `b`.
pub(crate) fn differing_rows(a: &ViewFingerprint, b: &ViewFingerprint) -> Vec<usize> {
    a.row_hash_list
        .iter()
        .enumerate()
        .filter(|(_, h)| !b.row_hash_set.contains(h))
        .map(|(i, _)| i)
        .collect()
}

/// Most likely key of a pair: highest mean key score, ties to the leftmost
/// attribute. `None` below [`KEY_FLOOR`].
pub fn pair_key(a: &ViewFingerprint, b: &ViewFingerprint) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for c in 0..a.schema.len() {
        let s = (a.key_scores[c] + b.key_scores[c]) / 2.0;
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((c, s));
        }
    }
    best.filter(|(_, s)| *s >= KEY_FLOOR).map(|(c, _)| c)
}

/// Outcome of comparing one candidate pair.
pub(crate) enum PairClass {
    Complementary(ComplementaryPair),
    Contradictory(ContradictoryPair),
}

/// Attributes where some row of `ls` and some row of `rs` differ.
pub(crate) fn conflict_attributes(
    schema: &[String],
    a: &View,
    ls: &[usize],
    b: &View,
    rs: &[usize],
    counters: &mut Counters,
) -> Vec<String> {
    let mut out = Vec::new();
    for (c, attr) in schema.iter().enumerate() {
        let mut differs = false;
        'rows: for &l in ls {
            for &r in rs {
                counters.cell_comparisons += 1;
                if a.rows[l][c] != b.rows[r][c] {
                    differs = true;
                    break 'rows;
                }
            }
        }
        if differs {
            out.push(attr.clone());
        }
    }
    out
}

pub(crate) fn contradiction(
    schema: &[String],
    key: usize,
    pair: (&View, &View),
    conflicts: Vec<KeyConflict>,
    rest: (Vec<usize>, Vec<usize>),
    chased: bool,
) -> ContradictoryPair {
    let attribute = schema
        .iter()
        .find(|a| conflicts.iter().any(|k| k.attributes.contains(a)))
        .cloned()
        .unwrap_or_default();
    ContradictoryPair {
        left: pair.0.view_id.clone(),
        right: pair.1.view_id.clone(),
        key: schema[key].clone(),
        attribute,
        values: conflicts.iter().map(|k| k.value.clone()).collect(),
        conflicts,
        left_rows: rest.0,
        right_rows: rest.1,
        chased,
    }
}

/// Full comparison of a pair by grouping differing rows on the key.
fn process_pair(
    schema: &[String],
    pair: &CandidatePair,
    fa: &ViewFingerprint,
    fb: &ViewFingerprint,
    a: &View,
    b: &View,
    counters: &mut Counters,
) -> PairClass {
    counters.pairs_full += 1;
    let (left_rows, right_rows) = (differing_rows(fa, fb), differing_rows(fb, fa));
    let Some(k) = pair_key(fa, fb) else {
        return PairClass::Complementary(ComplementaryPair {
            left: pair.left.clone(),
            right: pair.right.clone(),
            left_rows,
            right_rows,
            no_key: true,
        });
    };
    let group = |v: &View, rows: &[usize], counters: &mut Counters| {
        let mut m: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for &i in rows {
            counters.cell_comparisons += 1;
            let key = &v.rows[i][k];
            if !key.is_empty() {
                m.entry(key.clone()).or_default().push(i);
            }
        }
        m
    };
    let ka = group(a, &left_rows, counters);
    let kb = group(b, &right_rows, counters);
    let mut conflicts = Vec::new();
    for (value, ls) in &ka {
        if let Some(rs) = kb.get(value) {
            let attributes = conflict_attributes(schema, a, ls, b, rs, counters);
            conflicts.push(KeyConflict {
                value: value.clone(),
                attributes,
                left_rows: ls.clone(),
                right_rows: rs.clone(),
            });
        }
    }
    let contradicted: HashSet<&str> = conflicts.iter().map(|c| c.value.as_str()).collect();
    let rest = |v: &View, rows: &[usize]| -> Vec<usize> {
        rows.iter()
            .copied()
            .filter(|i| !contradicted.contains(v.rows[*i][k].as_str()))
            .collect()
    };
    if conflicts.is_empty() {
        PairClass::Complementary(ComplementaryPair {
            left: pair.left.clone(),
            right: pair.right.clone(),
            left_rows,
            right_rows,
            no_key: false,
        })
    } else {
        let r = (rest(a, &left_rows), rest(b, &right_rows));
        PairClass::Contradictory(contradiction(schema, k, (a, b), conflicts, r, false))
    }
}

/// A verified contradiction carried by a node of the chasing graph.
#[derive(Debug, Clone)]
struct Mark {
    key: usize,
    values: Rc<Vec<String>>,
}

struct Chaser<'a> {
    schema: &'a [String],
    views: &'a [View],
    fps: &'a [ViewFingerprint],
    /// (view, key column) -> value -> row indices
    key_index: HashMap<(usize, usize), HashMap<String, Vec<usize>>>,
    counters: Counters,
}

impl Chaser<'_> {
    fn build_index(&mut self, view: usize, key: usize) {
        let views = self.views;
        self.key_index.entry((view, key)).or_insert_with(|| {
            let mut m: HashMap<String, Vec<usize>> = HashMap::new();
            for (i, r) in views[view].rows.iter().enumerate() {
                m.entry(r[key].clone()).or_default().push(i);
            }
            m
        });
    }

    /// Test a marked contradiction against pair (x, m) by key lookup only.
    fn chase(&mut self, x: usize, m: usize, mark: &Mark) -> Option<ContradictoryPair> {
        if pair_key(&self.fps[x], &self.fps[m]) != Some(mark.key) {
            return None;
        }
        // Keep the pair's canonical orientation.
        let (l, r) = if self.views[x].view_id < self.views[m].view_id { (x, m) } else { (m, x) };
        self.build_index(l, mark.key);
        self.build_index(r, mark.key);
        let (li, ri) = (&self.key_index[&(l, mark.key)], &self.key_index[&(r, mark.key)]);
        let (fl, fr) = (&self.fps[l], &self.fps[r]);
        let mut conflicts = Vec::new();
        for v in mark.values.iter() {
            self.counters.key_lookups += 2;
            let (Some(lr), Some(rr)) = (li.get(v), ri.get(v)) else {
                continue;
            };
            let ls: Vec<usize> = lr
                .iter()
                .copied()
                .filter(|i| !fr.row_hash_set.contains(&fl.row_hash_list[*i]))
                .collect();
            let rs: Vec<usize> = rr
                .iter()
                .copied()
                .filter(|i| !fl.row_hash_set.contains(&fr.row_hash_list[*i]))
                .collect();
            if ls.is_empty() || rs.is_empty() {
                continue;
            }
            let attributes = conflict_attributes(self.schema, &self.views[l], &ls, &self.views[r], &rs, &mut self.counters);
            conflicts.push(KeyConflict {
                value: v.clone(),
                attributes,
                left_rows: ls,
                right_rows: rs,
            });
        }
        if conflicts.is_empty() {
            return None;
        }
        self.counters.pairs_chased += 1;
        Some(contradiction(
            self.schema,
            mark.key,
            (&self.views[l], &self.views[r]),
            conflicts,
            (vec![], vec![]),
            true,
        ))
    }
}

/// Split candidate pairs into C3 and C4, chasing each confirmed
/// contradiction through the unresolved neighbors of its views.
pub fn identify_c3_and_c4(
    pairs: &[CandidatePair],
    fps: &[ViewFingerprint],
    views: &[View],
    schema: &[String],
) -> (Vec<ComplementaryPair>, Vec<ContradictoryPair>, Counters) {
    let pos: HashMap<&str, usize> = views.iter().enumerate().map(|(i, v)| (v.view_id.as_str(), i)).collect();
    let mut pending: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut neighbors: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for (n, p) in pairs.iter().enumerate() {
        let (a, b) = (pos[p.left.as_str()], pos[p.right.as_str()]);
        pending.insert((a.min(b), a.max(b)), n);
        neighbors.entry(a).or_default().insert(b);
        neighbors.entry(b).or_default().insert(a);
    }
    let mut ch = Chaser {
        schema,
        views,
        fps,
        key_index: HashMap::new(),
        counters: Counters::default(),
    };
    let mut c3 = Vec::new();
    let mut c4 = Vec::new();

    while let Some((&(a, b), &n)) = pending.iter().next() {
        pending.remove(&(a, b));
        let class = process_pair(schema, &pairs[n], &fps[a], &fps[b], &views[a], &views[b], &mut ch.counters);
        let found = match class {
            PairClass::Complementary(p) => {
                c3.push(p);
                continue;
            }
            PairClass::Contradictory(p) => p,
        };
        let key = schema.iter().position(|s| *s == found.key).unwrap();
        let mark = Mark {
            key,
            values: Rc::new(found.values.clone()),
        };
        c4.push(found);
        let mut work: Vec<(usize, Mark)> = vec![(a, mark.clone()), (b, mark)];
        while let Some((x, mark)) = work.pop() {
            let nbrs: Vec<usize> = neighbors.get(&x).map(|s| s.iter().copied().collect()).unwrap_or_default();
            for m in nbrs {
                let pk = (x.min(m), x.max(m));
                if !pending.contains_key(&pk) {
                    continue;
                }
                if let Some(p) = ch.chase(x, m, &mark) {
                    pending.remove(&pk);
                    // Reuse the parent's value list unless the chase narrowed it.
                    let values = if p.values.len() == mark.values.len() {
                        mark.values.clone()
                    } else {
                        Rc::new(p.values.clone())
                    };
                    let next = Mark { key: mark.key, values };
                    c4.push(p);
                    work.push((m, next));
                }
            }
        }
    }
    c3.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
    c4.sort_by(|x, y| (&x.left, &x.right).cmp(&(&y.left, &y.right)));
    (c3, c4, ch.counters)
}

/// Fingerprints, C1 and C2 for one bucket; shared by the classifier and the
/// oracle.
pub(crate) struct FrontEnd {
    pub views: Vec<View>,
    pub fps: Vec<ViewFingerprint>,
    pub result: SchemaResult,
}

pub(crate) fn front_end(all: &[View], idxs: &[usize], signature: Vec<String>) -> FrontEnd {
    let mut idxs = idxs.to_vec();
    idxs.sort_by(|a, b| all[*a].view_id.cmp(&all[*b].view_id));
    let schema = all[idxs[0]].schema.clone();
    let views: Vec<View> = idxs.iter().map(|i| all[*i].aligned_to(&schema)).collect();
    let fps: Vec<ViewFingerprint> = views.par_iter().map(fingerprint).collect();
    let c1 = identify_c1(&fps);
    let reps: Vec<&ViewFingerprint> = c1
        .iter()
        .map(|g| fps.iter().find(|f| f.view_id == g.representative).unwrap())
        .collect();
    let (c2, c34_pairs) = identify_c2_and_candidate_c3c4(&reps);
    FrontEnd {
        views,
        fps,
        result: SchemaResult {
            signature,
            schema,
            c1,
            c2,
            c34_pairs,
            c3: vec![],
            c4: vec![],
        },
    }
}

/// Classify views into the four classes, per schema.
pub fn classify(views: &[View]) -> FourCResult {
    run(views, |fe| {
        let (c3, c4, counters) = identify_c3_and_c4(&fe.result.c34_pairs, &fe.fps, &fe.views, &fe.result.schema);
        let mut r = fe.result;
        r.c3 = c3;
        r.c4 = c4;
        (r, counters)
    })
}

pub(crate) fn run(views: &[View], per_bucket: impl Fn(FrontEnd) -> (SchemaResult, Counters) + Sync) -> FourCResult {
    let buckets = classify_per_schema(views);
    let results: Vec<(SchemaResult, Counters)> = buckets
        .into_par_iter()
        .map(|(sig, idxs)| per_bucket(front_end(views, &idxs, sig)))
        .collect();
    let mut out = FourCResult::default();
    for (r, c) in results {
        out.counters.add(&c);
        out.schemas.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(id: &str, rows: &[(&str, &str)]) -> View {
        View::new(
            id,
            vec!["employee".into(), "address".into()],
            rows.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect(),
        )
    }

    #[test]
    fn empty_input() {
        let r = classify(&[]);
        assert!(r.schemas.is_empty());
    }

    #[test]
    fn schema_buckets() {
        let a = View::new("a", vec!["a".into(), "b".into()], vec![]);
        let b = View::new("b", vec!["b".into(), "a".into()], vec![]);
        let c = View::new("c", vec!["a".into()], vec![]);
        let buckets = classify_per_schema(&[a, b, c]);
        assert_eq!(buckets.len(), 2);
        assert_eq!(buckets[&vec!["a".to_string(), "b".to_string()]], vec![0, 1]);
    }

    #[test]
    fn permuted_columns_are_compatible() {
        let a = View::new("a", vec!["x".into(), "y".into()], vec![vec!["1".into(), "2".into()]]);
        let b = View::new("b", vec!["y".into(), "x".into()], vec![vec!["2".into(), "1".into()]]);
        let r = classify(&[a, b]);
        assert_eq!(r.schemas[0].c1.len(), 1);
    }

    #[test]
    fn identical_views_form_one_group() {
        let r = classify(&[v("b", &[("x", "1")]), v("a", &[("x", "1")])]);
        let g = &r.schemas[0].c1;
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].representative, "a");
        assert_eq!(g[0].members, vec!["a", "b"]);
    }

    #[test]
    fn containment_and_candidate_pairs() {
        let r = classify(&[
            v("v1", &[("a", "1"), ("b", "2"), ("c", "3")]),
            v("v2", &[("a", "1"), ("b", "2")]),
        ]);
        assert_eq!(
            r.schemas[0].c2,
            vec![Containment {
                container: "v1".into(),
                contained: "v2".into()
            }]
        );
        let r = classify(&[v("v1", &[("a", "1"), ("b", "2")]), v("v2", &[("b", "2"), ("c", "3")])]);
        assert_eq!(r.schemas[0].c34_pairs.len(), 1);
        let p = &r.schemas[0].c3[0];
        assert_eq!((p.left_rows.clone(), p.right_rows.clone()), (vec![0], vec![1]));
    }

    #[test]
    fn multiplicity_mismatch_is_flagged() {
        let r = classify(&[v("v1", &[("a", "1"), ("a", "1"), ("b", "2")]), v("v2", &[("a", "1"), ("b", "2")])]);
        let g = &r.schemas[0].c1;
        assert_eq!(g.len(), 1);
        assert!(g[0].multiplicity_mismatch);
    }

    #[test]
    fn raul_contradiction() {
        let r = classify(&[
            v("v13", &[("Raul CF", "Pie street"), ("Ann", "Elm 1")]),
            v("v14", &[("Raul CF", "Flea Av"), ("Bob", "Oak 2")]),
        ]);
        let c4 = &r.schemas[0].c4;
        assert_eq!(c4.len(), 1);
        assert_eq!(c4[0].key, "employee");
        assert_eq!(c4[0].attribute, "address");
        assert_eq!(c4[0].values, vec!["Raul CF"]);
        assert_eq!((c4[0].left_rows.clone(), c4[0].right_rows.clone()), (vec![1], vec![1]));
        assert!(r.schemas[0].c3.is_empty());
    }

    #[test]
    fn no_key_pairs_are_flagged_complementary() {
        let r = classify(&[
            v("a", &[("x", "1"), ("x", "2"), ("x", "3"), ("x", "4")]),
            v("b", &[("x", "1"), ("x", "5"), ("x", "6"), ("x", "7")]),
        ]);
        // employee scores 0.25, address 1.0: address is the key, no shared values.
        assert_eq!(r.schemas[0].c3.len(), 1);
        let r = classify(&[
            v("a", &[("x", "1"), ("x", "1"), ("x", "1"), ("x", "1"), ("y", "2")]),
            v("b", &[("x", "1"), ("x", "1"), ("x", "1"), ("x", "1"), ("z", "3")]),
        ]);
        assert!(r.schemas[0].c3[0].no_key);
    }

    #[test]
    fn chasing_matches_oracle_on_shared_contradiction() {
        let views: Vec<View> = (0..6)
            .map(|i| {
                let mut rows = vec![("k0".to_string(), format!("addr{i}"))];
                rows.extend((1..20).filter(|k| (k + i) % 5 != 0).map(|k| (format!("k{k}"), format!("a{k}"))));
                View::new(
                    format!("v{i}"),
                    vec!["employee".into(), "address".into()],
                    rows.into_iter().map(|(a, b)| vec![a, b]).collect(),
                )
            })
            .collect();
        let c = classify(&views);
        let o = no_chasing_oracle(&views);
        assert_eq!(c.buckets(), o.buckets());
        assert!(c.counters.pairs_chased > 0);
        assert!(c.counters.cell_comparisons < o.counters.cell_comparisons);
        for p in &c.schemas[0].c4 {
            let q = o.schemas[0].c4.iter().find(|q| q.left == p.left && q.right == p.right).unwrap();
            assert!(p.values.iter().all(|v| q.values.contains(v)));
        }
    }
}
