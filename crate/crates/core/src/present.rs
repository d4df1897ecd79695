//! Presentation strategies over a classified view set.
//!
//! `4c-summary` collapses compatible and contained views, unions
//! complementary ones, and walks the user through the remaining
//! contradictions one prompt at a time. `multi-row` merges everything per
//! schema and keeps contradictory keys as multi-rows.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::fourc::{row_hash, ContradictoryPair, FourCResult, View};
use crate::hash::hash64;
use crate::table::Row;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("nothing to summarize")]
    EmptyResult,
    #[error("prompt {got} is not the outstanding prompt ({expected})")]
    StalePrompt { expected: String, got: String },
    #[error("no prompt is outstanding")]
    NoPrompt,
    #[error("view {view} is not part of prompt {prompt}")]
    UnknownView { prompt: String, view: String },
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("replayed log diverges at entry {0}")]
    Divergent(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    SummarizeCompatible { representative: String, members: Vec<String> },
    KeepMaxContained { container: String, contained: String },
    UnionComplementary { view_id: String, members: Vec<String> },
    Choice { prompt_id: String, chosen: String, rejected: String, pruned: Vec<String> },
    Skip { prompt_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub prompt_id: String,
    pub left: String,
    pub right: String,
    pub key: String,
    pub attribute: String,
    pub values: Vec<String>,
    /// Rows of each view carrying the contradictory key values.
    pub left_rows: Vec<Row>,
    pub right_rows: Vec<Row>,
    pub schema: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    View(String),
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySession {
    pub session_id: String,
    /// Surviving views in id order.
    pub pending_views: Vec<String>,
    pub action_log: Vec<Action>,
    pub next_prompt: Option<Prompt>,
    pub prompts_shown: usize,
    pub choices_made: usize,
    /// Original and unioned views by id.
    #[serde(skip)]
    pub views: BTreeMap<String, View>,
    #[serde(skip)]
    contradictions: Vec<ContradictoryPair>,
    #[serde(skip)]
    settled: BTreeSet<(String, String)>,
}

impl SummarySession {
    pub fn is_complete(&self) -> bool {
        self.next_prompt.is_none()
    }

    pub fn view(&self, id: &str) -> Option<&View> {
        self.views.get(id)
    }

    /// Apply a user decision on the outstanding prompt. On error the session
    /// is left untouched.
    pub fn apply_choice(&mut self, prompt_id: &str, choice: &Choice) -> Result<()> {
        let prompt = self.next_prompt.clone().ok_or(SessionError::NoPrompt)?;
        if prompt.prompt_id != prompt_id {
            return Err(SessionError::StalePrompt {
                expected: prompt.prompt_id,
                got: prompt_id.to_string(),
            }
            .into());
        }
        let pair = (prompt.left.clone(), prompt.right.clone());
        match choice {
            Choice::Skip => {
                self.action_log.push(Action::Skip {
                    prompt_id: prompt_id.to_string(),
                });
            }
            Choice::View(chosen) => {
                let rejected = if *chosen == prompt.left {
                    prompt.right.clone()
                } else if *chosen == prompt.right {
                    prompt.left.clone()
                } else {
                    return Err(SessionError::UnknownView {
                        prompt: prompt_id.to_string(),
                        view: chosen.clone(),
                    }
                    .into());
                };
                let pruned = self.prune_like(chosen, &rejected);
                self.pending_views.retain(|v| !pruned.contains(v));
                self.choices_made += 1;
                self.action_log.push(Action::Choice {
                    prompt_id: prompt_id.to_string(),
                    chosen: chosen.clone(),
                    rejected,
                    pruned,
                });
            }
        }
        self.settled.insert(pair);
        self.prepare_prompt();
        Ok(())
    }

    /// The rejected view plus every view holding the same evidence against
    /// the chosen one: same key attribute, same differing attribute, same
    /// contradictory values and the same losing cells.
    fn prune_like(&self, chosen: &str, rejected: &str) -> Vec<String> {
        let Some(base) = self.pair_between(chosen, rejected) else {
            return vec![rejected.to_string()];
        };
        let base_cells = self.losing_cells(base, rejected);
        let mut out = vec![rejected.to_string()];
        for c in &self.contradictions {
            let other = if c.left == chosen {
                &c.right
            } else if c.right == chosen {
                &c.left
            } else {
                continue;
            };
            if other == rejected || !self.pending_views.contains(other) {
                continue;
            }
            if c.key == base.key
                && c.attribute == base.attribute
                && c.values == base.values
                && self.losing_cells(c, other) == base_cells
            {
                out.push(other.clone());
            }
        }
        out.sort();
        out
    }

    fn pair_between(&self, a: &str, b: &str) -> Option<&ContradictoryPair> {
        self.contradictions
            .iter()
            .find(|c| (c.left == a && c.right == b) || (c.left == b && c.right == a))
    }

    fn losing_cells(&self, pair: &ContradictoryPair, loser: &str) -> BTreeSet<Row> {
        let Some(v) = self.views.get(loser) else {
            return BTreeSet::new();
        };
        pair.conflicts
            .iter()
            .flat_map(|k| if pair.left == loser { &k.left_rows } else { &k.right_rows })
            .map(|i| v.rows[*i].clone())
            .collect()
    }

    /// Next prompt: the pending view in the most open contradictions (ties
    /// by id) against its most contradicted partner.
    fn prepare_prompt(&mut self) {
        let pending: HashSet<&String> = self.pending_views.iter().collect();
        let open: Vec<&ContradictoryPair> = self
            .contradictions
            .iter()
            .filter(|c| pending.contains(&c.left) && pending.contains(&c.right))
            .filter(|c| !self.settled.contains(&(c.left.clone(), c.right.clone())))
            .collect();
        let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &open {
            *degree.entry(&c.left).or_default() += 1;
            *degree.entry(&c.right).or_default() += 1;
        }
        let rank = |v: &str| (std::cmp::Reverse(degree.get(v).copied().unwrap_or(0)), v.to_string());
        let Some(top) = degree.keys().min_by_key(|v| rank(v)).map(|s| s.to_string()) else {
            self.next_prompt = None;
            return;
        };
        let pair = open
            .iter()
            .filter(|c| c.left == top || c.right == top)
            .min_by_key(|c| rank(if c.left == top { &c.right } else { &c.left }))
            .copied()
            .cloned()
            .expect("top view has an open pair");
        self.prompts_shown += 1;
        let rows = |id: &str, idx: Vec<usize>| -> Vec<Row> {
            let v = &self.views[id];
            idx.into_iter().map(|i| v.rows[i].clone()).collect()
        };
        let li: Vec<usize> = pair.conflicts.iter().flat_map(|k| k.left_rows.clone()).collect();
        let ri: Vec<usize> = pair.conflicts.iter().flat_map(|k| k.right_rows.clone()).collect();
        self.next_prompt = Some(Prompt {
            prompt_id: format!("p{}", self.prompts_shown),
            left_rows: rows(&pair.left, li),
            right_rows: rows(&pair.right, ri),
            schema: self.views[&pair.left].schema.clone(),
            left: pair.left,
            right: pair.right,
            key: pair.key,
            attribute: pair.attribute,
            values: pair.values,
        });
    }

    pub fn action_log_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.action_log)?)
    }
}

fn union_id(members: &[String]) -> String {
    format!("u{:016x}", hash64(0x0075_6e69_6f6e, members.join(",").as_bytes()))
}

/// Distinct rows of `views` in order of first appearance.
fn union_rows<'a>(views: impl IntoIterator<Item = &'a View>) -> Vec<Row> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for v in views {
        for r in &v.rows {
            if seen.insert(row_hash(&v.schema, r)) {
                out.push(r.clone());
            }
        }
    }
    out
}

/// Build a 4c-summary session. `views` must hold every classified view.
pub fn summarize(result: &FourCResult, views: Vec<View>) -> Result<SummarySession> {
    if views.is_empty() || result.schemas.is_empty() {
        return Err(SessionError::EmptyResult.into());
    }
    let mut by_id: BTreeMap<String, View> = views.into_iter().map(|v| (v.view_id.clone(), v)).collect();
    let mut log = Vec::new();
    let mut pending = Vec::new();
    let mut contradictions = Vec::new();

    for s in &result.schemas {
        let mut survivors: BTreeSet<String> = BTreeSet::new();
        for g in &s.c1 {
            if g.members.len() > 1 {
                log.push(Action::SummarizeCompatible {
                    representative: g.representative.clone(),
                    members: g.members.clone(),
                });
            }
            survivors.insert(g.representative.clone());
        }
        // Keep the largest container of each contained view.
        let mut best: BTreeMap<&str, &str> = BTreeMap::new();
        for c in &s.c2 {
            let size = |id: &str| by_id.get(id).map_or(0, |v| v.rows.len());
            let e = best.entry(&c.contained).or_insert(&c.container);
            let (cur, cand) = (size(e), size(&c.container));
            if cand > cur || (cand == cur && c.container.as_str() < *e) {
                *e = &c.container;
            }
        }
        for (contained, container) in &best {
            survivors.remove(*contained);
            log.push(Action::KeepMaxContained {
                container: container.to_string(),
                contained: contained.to_string(),
            });
        }
        let live_c4: Vec<&ContradictoryPair> = s
            .c4
            .iter()
            .filter(|c| survivors.contains(&c.left) && survivors.contains(&c.right))
            .collect();
        let contradicted: HashSet<&str> = live_c4.iter().flat_map(|c| [c.left.as_str(), c.right.as_str()]).collect();

        // Union complementary components among uncontradicted survivors.
        let mut parent: BTreeMap<String, String> = BTreeMap::new();
        fn find(p: &mut BTreeMap<String, String>, x: &str) -> String {
            let px = p.get(x).cloned().unwrap_or_else(|| x.to_string());
            if px == x {
                return px;
            }
            let r = find(p, &px);
            p.insert(x.to_string(), r.clone());
            r
        }
        for c in &s.c3 {
            let ok = |v: &String| survivors.contains(v) && !contradicted.contains(v.as_str());
            if ok(&c.left) && ok(&c.right) {
                let (a, b) = (find(&mut parent, &c.left), find(&mut parent, &c.right));
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent.insert(hi, lo);
                }
            }
        }
        let mut components: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for v in &survivors {
            let root = find(&mut parent, v);
            components.entry(root).or_default().push(v.clone());
        }
        for (_, members) in components {
            if members.len() == 1 {
                pending.push(members[0].clone());
                continue;
            }
            let id = union_id(&members);
            let schema = by_id[&members[0]].schema.clone();
            let rows = union_rows(members.iter().map(|m| &by_id[m]));
            by_id.insert(id.clone(), View::new(id.clone(), schema, rows));
            log.push(Action::UnionComplementary {
                view_id: id.clone(),
                members,
            });
            pending.push(id);
        }
        contradictions.extend(live_c4.into_iter().cloned());
    }
    pending.sort();
    let mut session = SummarySession {
        session_id: String::new(),
        pending_views: pending,
        action_log: log,
        next_prompt: None,
        prompts_shown: 0,
        choices_made: 0,
        views: by_id,
        contradictions,
        settled: BTreeSet::new(),
    };
    session.prepare_prompt();
    Ok(session)
}

/// Rebuild a session from the classified result and a recorded log.
pub fn replay(result: &FourCResult, views: Vec<View>, log: &[Action]) -> Result<SummarySession> {
    let mut s = summarize(result, views)?;
    let automatic = s.action_log.len();
    if log.len() < automatic || log[..automatic] != s.action_log[..] {
        return Err(SessionError::Divergent(0).into());
    }
    for (i, a) in log.iter().enumerate().skip(automatic) {
        let applied = match a {
            Action::Choice { prompt_id, chosen, .. } => s.apply_choice(prompt_id, &Choice::View(chosen.clone())),
            Action::Skip { prompt_id } => s.apply_choice(prompt_id, &Choice::Skip),
            _ => Err(SessionError::Divergent(i).into()),
        };
        applied.map_err(|_| Error::Session(SessionError::Divergent(i)))?;
        if s.action_log.last() != Some(a) {
            return Err(SessionError::Divergent(i).into());
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub row: Row,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRow {
    pub key_value: Option<String>,
    pub variants: Vec<Variant>,
    pub multi: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRowView {
    pub schema: Vec<String>,
    pub key: Option<String>,
    pub rows: Vec<MultiRow>,
}

impl MultiRowView {
    pub fn multi_rows(&self) -> impl Iterator<Item = &MultiRow> {
        self.rows.iter().filter(|r| r.multi)
    }

    /// CSV with two extra columns: `_multi` holds the key of a multi-row,
    /// `_sources` the contributing views separated by `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv {
            path: "<multi-row view>".into(),
            message: e.to_string(),
        };
        let mut header = self.schema.clone();
        header.push("_multi".into());
        header.push("_sources".into());
        w.write_record(&header).map_err(err)?;
        for r in &self.rows {
            for v in &r.variants {
                let mut rec = v.row.clone();
                rec.push(if r.multi { r.key_value.clone().unwrap_or_default() } else { String::new() });
                rec.push(v.sources.join(";"));
                w.write_record(&rec).map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<multi-row view>", e))
    }
}

/// One merged view per schema. A key becomes a multi-row when two of its
/// rows come from different views each lacking the other's row.
pub fn multi_row(result: &FourCResult, views: &[View]) -> Vec<MultiRowView> {
    let by_id: HashMap<&str, &View> = views.iter().map(|v| (v.view_id.as_str(), v)).collect();
    let mut out = Vec::new();
    for s in &result.schemas {
        let members: Vec<&View> = s
            .c1
            .iter()
            .flat_map(|g| g.members.iter())
            .filter_map(|m| by_id.get(m.as_str()).copied())
            .collect();
        // Distinct rows (aligned to the bucket schema) with their sources.
        let mut rows: Vec<Row> = Vec::new();
        let mut sources: Vec<BTreeSet<String>> = Vec::new();
        let mut slot: HashMap<u128, usize> = HashMap::new();
        let mut sorted = members.clone();
        sorted.sort_by(|a, b| a.view_id.cmp(&b.view_id));
        for v in &sorted {
            let pos: Vec<usize> = s
                .schema
                .iter()
                .map(|a| v.schema.iter().position(|b| b == a).unwrap())
                .collect();
            for r in &v.rows {
                let aligned: Row = pos.iter().map(|p| r[*p].clone()).collect();
                let h = row_hash(&s.schema, &aligned);
                let i = *slot.entry(h).or_insert_with(|| {
                    rows.push(aligned);
                    sources.push(BTreeSet::new());
                    rows.len() - 1
                });
                sources[i].insert(v.view_id.clone());
            }
        }
        // Key: the attribute most contradiction pairs agree on.
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for c in &s.c4 {
            if let Some(p) = s.schema.iter().position(|a| *a == c.key) {
                *votes.entry(p).or_default() += 1;
            }
        }
        let key = votes.iter().max_by_key(|(p, n)| (**n, std::cmp::Reverse(**p))).map(|(p, _)| *p);
        let mut groups: BTreeMap<Option<String>, Vec<usize>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            let kv = key.map(|k| r[k].clone()).filter(|v| !v.is_empty());
            groups.entry(kv).or_default().push(i);
        }
        let variant = |i: usize| Variant {
            row: rows[i].clone(),
            sources: sources[i].iter().cloned().collect(),
        };
        let mut mrows = Vec::new();
        for (kv, idx) in groups {
            let contradictory = kv.is_some()
                && idx.iter().enumerate().any(|(n, &a)| {
                    idx[n + 1..].iter().any(|&b| {
                        !sources[a].is_subset(&sources[b]) && !sources[b].is_subset(&sources[a])
                    })
                });
            if contradictory {
                mrows.push(MultiRow {
                    key_value: kv,
                    variants: idx.iter().map(|i| variant(*i)).collect(),
                    multi: true,
                });
            } else {
                for i in idx {
                    mrows.push(MultiRow {
                        key_value: kv.clone(),
                        variants: vec![variant(i)],
                        multi: false,
                    });
                }
            }
        }
        out.push(MultiRowView {
            schema: s.schema.clone(),
            key: key.map(|k| s.schema[k].clone()),
            rows: mrows,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourc::classify;

    fn v(id: &str, rows: &[(&str, &str)]) -> View {
        View::new(
            id,
            vec!["employee".into(), "address".into()],
            rows.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect(),
        )
    }

    #[test]
    fn only_compatible_gives_one_view_no_prompt() {
        let views = vec![v("a", &[("x", "1")]), v("b", &[("x", "1")])];
        let s = summarize(&classify(&views), views).unwrap();
        assert_eq!(s.pending_views, vec!["a"]);
        assert!(s.is_complete());
    }

    #[test]
    fn choice_prunes_and_completes() {
        let views = vec![
            v("home", &[("Raul CF", "Flea Av"), ("Ann", "Elm")]),
            v("work", &[("Raul CF", "Pie street"), ("Bob", "Oak")]),
        ];
        let r = classify(&views);
        let mut s = summarize(&r, views.clone()).unwrap();
        let p = s.next_prompt.clone().unwrap();
        assert_eq!(p.values, vec!["Raul CF"]);
        assert!(s.apply_choice("p9", &Choice::Skip).is_err());
        assert!(s.apply_choice(&p.prompt_id, &Choice::View("nope".into())).is_err());
        assert_eq!(s.next_prompt.as_ref(), Some(&p));
        s.apply_choice(&p.prompt_id, &Choice::View("work".into())).unwrap();
        assert_eq!(s.pending_views, vec!["work"]);
        assert!(s.is_complete());
        let again = replay(&r, views, &s.action_log).unwrap();
        assert_eq!(again.pending_views, s.pending_views);
    }

    #[test]
    fn skip_prunes_nothing() {
        let views = vec![v("a", &[("k", "1")]), v("b", &[("k", "2")])];
        let mut s = summarize(&classify(&views), views).unwrap();
        let p = s.next_prompt.clone().unwrap();
        s.apply_choice(&p.prompt_id, &Choice::Skip).unwrap();
        assert_eq!(s.pending_views.len(), 2);
        assert!(s.is_complete());
    }

    #[test]
    fn multi_row_keeps_both_addresses() {
        let views = vec![
            v("a", &[("Raul CF", "Pie street"), ("Ann", "Elm")]),
            v("b", &[("Raul CF", "Flea Av"), ("Ann", "Elm")]),
        ];
        let out = multi_row(&classify(&views), &views);
        assert_eq!(out.len(), 1);
        let multi: Vec<_> = out[0].multi_rows().collect();
        assert_eq!(multi.len(), 1);
        assert_eq!(multi[0].variants.len(), 2);
        assert_eq!(out[0].rows.len(), 2);
    }

    #[test]
    fn multi_row_without_contradictions_is_plain_union() {
        let views = vec![v("a", &[("x", "1")]), v("b", &[("y", "2")])];
        let out = multi_row(&classify(&views), &views);
        assert_eq!(out[0].rows.len(), 2);
        assert_eq!(out[0].multi_rows().count(), 0);
    }
}
