use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CandidateGroup, ConstraintSet};
use crate::engine::EngineCaches;
use crate::hash::hash64;
use crate::index::{DiscoveryIndex, JoinEdge, JoinPath};
use crate::table::{ColumnRef, TableId};

/// A concrete plan to combine a group: a tree of tables linked by join edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinGraph {
    pub nodes: BTreeSet<TableId>,
    pub edges: BTreeSet<JoinEdge>,
    pub fulfilled: ConstraintSet,
    pub projection: Vec<(String, ColumnRef)>,
}

impl JoinGraph {
    pub fn singleton(group: &CandidateGroup) -> Self {
        JoinGraph {
            nodes: group.tables.clone(),
            edges: BTreeSet::new(),
            fulfilled: group.fulfilled.clone(),
            projection: group.projection.clone(),
        }
    }

    /// Canonical text of nodes, edges and projection.
    pub fn signature(&self) -> String {
        let nodes: Vec<String> = self.nodes.iter().map(|t| t.to_string()).collect();
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{}={}", e.left, e.right))
            .collect();
        let proj: Vec<String> = self
            .projection
            .iter()
            .map(|(a, c)| format!("{a}<-{c}"))
            .collect();
        format!("{}|{}|{}", nodes.join(","), edges.join(","), proj.join(","))
    }

    /// Stable view identifier derived from the signature.
    pub fn view_id(&self) -> String {
        format!("v{:016x}", hash64(0x7669_6577, self.signature().as_bytes()))
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::default();
        for n in &self.nodes {
            uf.find(*n);
        }
        for e in &self.edges {
            uf.union(e.left.table, e.right.table);
        }
        let mut roots = self.nodes.iter().map(|n| uf.find(*n));
        match roots.next() {
            Some(r) => roots.all(|x| x == r),
            None => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub max_hops: usize,
    /// Keep at most this many graphs per group, fewest edges first.
    pub max_graphs: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            max_hops: 2,
            max_graphs: 50,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphEnumeration {
    pub graphs: Vec<JoinGraph>,
    /// Unordered table pairs examined.
    pub pairs: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, Default)]
struct UnionFind {
    parent: BTreeMap<TableId, TableId>,
}

impl UnionFind {
    fn find(&mut self, x: TableId) -> TableId {
        let p = *self.parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent.insert(x, r);
        r
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: TableId, b: TableId) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent.insert(ra.max(rb), ra.min(rb));
        true
    }
}

/// Enumerate join graphs for a group.
///
/// For every unordered pair of group tables the choice is one of its join
/// paths or none; the union of the chosen paths must be a tree connecting all
/// group tables. Tables on multi-hop paths become extra nodes. Duplicate edge
/// sets are dropped and results are sorted by edge count.
pub fn find_join_graphs(
    index: &DiscoveryIndex,
    group: &CandidateGroup,
    opts: &GraphOptions,
    caches: Option<&EngineCaches>,
) -> GraphEnumeration {
    let tables: Vec<TableId> = group.tables.iter().copied().collect();
    if tables.len() <= 1 {
        return GraphEnumeration {
            graphs: vec![JoinGraph::singleton(group)],
            pairs: 0,
            truncated: false,
        };
    }
    let mut pair_paths: Vec<Arc<Vec<JoinPath>>> = Vec::new();
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            let paths = match caches {
                Some(c) => c.join_paths(index, tables[i], tables[j], opts.max_hops),
                None => Arc::new(index.join_paths(tables[i], tables[j], opts.max_hops)),
            };
            pair_paths.push(paths);
        }
    }
    let pairs = pair_paths.len();

    let mut state = Enumerator {
        pair_paths: &pair_paths,
        group: &tables,
        found: BTreeSet::new(),
        leaves: 0,
        leaf_budget: opts.max_graphs.saturating_mul(200).max(10_000),
        truncated: false,
    };
    state.walk(0, BTreeSet::new(), UnionFind::default());

    let mut edge_sets: Vec<BTreeSet<JoinEdge>> = state.found.into_iter().collect();
    edge_sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut truncated = state.truncated;
    if edge_sets.len() > opts.max_graphs {
        edge_sets.truncate(opts.max_graphs);
        truncated = true;
    }
    let graphs = edge_sets
        .into_iter()
        .map(|edges| {
            let mut nodes = group.tables.clone();
            for e in &edges {
                nodes.insert(e.left.table);
                nodes.insert(e.right.table);
            }
            JoinGraph {
                nodes,
                edges,
                fulfilled: group.fulfilled.clone(),
                projection: group.projection.clone(),
            }
        })
        .collect();
    GraphEnumeration {
        graphs,
        pairs,
        truncated,
    }
}

struct Enumerator<'a> {
    pair_paths: &'a [Arc<Vec<JoinPath>>],
    group: &'a [TableId],
    found: BTreeSet<BTreeSet<JoinEdge>>,
    leaves: usize,
    leaf_budget: usize,
    truncated: bool,
}

impl Enumerator<'_> {
    fn walk(&mut self, pair: usize, edges: BTreeSet<JoinEdge>, uf: UnionFind) {
        if self.truncated {
            return;
        }
        if pair == self.pair_paths.len() {
            self.leaves += 1;
            if self.leaves > self.leaf_budget {
                self.truncated = true;
                return;
            }
            let mut uf = uf;
            let root = uf.find(self.group[0]);
            if self.group.iter().all(|t| uf.find(*t) == root) {
                self.found.insert(edges);
            }
            return;
        }
        // Skip this pair.
        self.walk(pair + 1, edges.clone(), uf.clone());
        let paths = Arc::clone(&self.pair_paths[pair]);
        'paths: for path in paths.iter() {
            let mut next_edges = edges.clone();
            let mut next_uf = uf.clone();
            for hop in &path.hops {
                let e = JoinEdge::new(hop.from.clone(), hop.to.clone());
                if next_edges.contains(&e) {
                    continue;
                }
                if !next_uf.union(e.left.table, e.right.table) {
                    continue 'paths; // would close a cycle
                }
                next_edges.insert(e);
            }
            self.walk(pair + 1, next_edges, next_uf);
        }
    }
}
