//! Join-path enumeration over the undirected IND graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ind::InclusionDependency;
use crate::table::{ColumnRef, TableId};

/// Undirected join edge between two columns; `left < right` always.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JoinEdge {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

impl JoinEdge {
    pub fn new(a: ColumnRef, b: ColumnRef) -> Self {
        if a <= b {
            JoinEdge { left: a, right: b }
        } else {
            JoinEdge { left: b, right: a }
        }
    }

    pub fn touches(&self, table: TableId) -> bool {
        self.left.table == table || self.right.table == table
    }

    /// The column on `table`'s side and the column on the other side.
    pub fn oriented_from(&self, table: TableId) -> Option<(&ColumnRef, &ColumnRef)> {
        if self.left.table == table {
            Some((&self.left, &self.right))
        } else if self.right.table == table {
            Some((&self.right, &self.left))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinHop {
    pub edge_id: usize,
    pub from: ColumnRef,
    pub to: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinPath {
    pub hops: Vec<JoinHop>,
    pub endpoints: (TableId, TableId),
}

impl JoinPath {
    pub fn reversed(&self) -> JoinPath {
        JoinPath {
            hops: self
                .hops
                .iter()
                .rev()
                .map(|h| JoinHop {
                    edge_id: h.edge_id,
                    from: h.to.clone(),
                    to: h.from.clone(),
                })
                .collect(),
            endpoints: (self.endpoints.1, self.endpoints.0),
        }
    }

    pub fn edge_ids(&self) -> Vec<usize> {
        self.hops.iter().map(|h| h.edge_id).collect()
    }
}

/// Undirected multigraph of tables linked by join edges.
#[derive(Debug, Clone, Default)]
pub struct JoinEdgeGraph {
    edges: Vec<JoinEdge>,
    adjacency: BTreeMap<TableId, Vec<usize>>,
}

impl JoinEdgeGraph {
    pub fn from_inds(inds: &[InclusionDependency]) -> Self {
        let edges: Vec<JoinEdge> = inds
            .iter()
            .map(|d| JoinEdge::new(d.from.clone(), d.to.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut adjacency: BTreeMap<TableId, Vec<usize>> = BTreeMap::new();
        for (id, e) in edges.iter().enumerate() {
            adjacency.entry(e.left.table).or_default().push(id);
            if e.right.table != e.left.table {
                adjacency.entry(e.right.table).or_default().push(id);
            }
        }
        JoinEdgeGraph { edges, adjacency }
    }

    pub fn edges(&self) -> &[JoinEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &JoinEdge {
        &self.edges[id]
    }

    /// All simple paths of at most `max_hops` edges from `a` to `b`, ordered
    /// by hop count and then by edge ids.
    pub fn join_paths(&self, a: TableId, b: TableId, max_hops: usize) -> Vec<JoinPath> {
        let mut out = Vec::new();
        if a == b || max_hops == 0 {
            return out;
        }
        let mut visited = vec![a];
        let mut hops = Vec::new();
        self.dfs(a, b, max_hops, &mut visited, &mut hops, &mut out);
        out.sort_by(|x, y| {
            x.hops
                .len()
                .cmp(&y.hops.len())
                .then_with(|| x.edge_ids().cmp(&y.edge_ids()))
        });
        out
    }

    fn dfs(
        &self,
        at: TableId,
        target: TableId,
        budget: usize,
        visited: &mut Vec<TableId>,
        hops: &mut Vec<JoinHop>,
        out: &mut Vec<JoinPath>,
    ) {
        let Some(adj) = self.adjacency.get(&at) else {
            return;
        };
        for &id in adj {
            let (from, to) = self.edges[id].oriented_from(at).expect("adjacent edge");
            let next = to.table;
            if visited.contains(&next) {
                continue;
            }
            hops.push(JoinHop {
                edge_id: id,
                from: from.clone(),
                to: to.clone(),
            });
            if next == target {
                out.push(JoinPath {
                    hops: hops.clone(),
                    endpoints: (visited[0], target),
                });
            } else if budget > 1 {
                visited.push(next);
                self.dfs(next, target, budget - 1, visited, hops, out);
                visited.pop();
            }
            hops.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(ft: u32, fc: &str, tt: u32, tc: &str) -> InclusionDependency {
        InclusionDependency {
            from: ColumnRef::new(TableId(ft), fc),
            to: ColumnRef::new(TableId(tt), tc),
            containment: 1.0,
            exact: true,
        }
    }

    #[test]
    fn hop_bound() {
        // a - x - b
        let g = JoinEdgeGraph::from_inds(&[ind(0, "k", 1, "k"), ind(1, "k", 2, "k")]);
        assert!(g.join_paths(TableId(0), TableId(2), 1).is_empty());
        let p = g.join_paths(TableId(0), TableId(2), 2);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].hops.len(), 2);
    }

    #[test]
    fn parallel_edges_give_distinct_paths() {
        let g = JoinEdgeGraph::from_inds(&[ind(0, "a", 1, "a"), ind(0, "b", 1, "b")]);
        let p = g.join_paths(TableId(0), TableId(1), 1);
        assert_eq!(p.len(), 2);
        assert_ne!(p[0], p[1]);
    }

    #[test]
    fn both_directions_collapse_to_one_edge() {
        let g = JoinEdgeGraph::from_inds(&[ind(0, "a", 1, "a"), ind(1, "a", 0, "a")]);
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn paths_are_simple() {
        // triangle: paths 0->2 are the direct edge and 0-1-2.
        let g = JoinEdgeGraph::from_inds(&[
            ind(0, "k", 1, "k"),
            ind(1, "k", 2, "k"),
            ind(0, "k", 2, "k"),
        ]);
        let p = g.join_paths(TableId(0), TableId(2), 5);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].hops.len(), 1);
    }

    #[test]
    fn reverse_is_edge_for_edge() {
        let g = JoinEdgeGraph::from_inds(&[
            ind(0, "k", 1, "k"),
            ind(1, "k", 2, "k"),
            ind(0, "j", 2, "j"),
            ind(1, "z", 2, "z"),
        ]);
        let fwd = g.join_paths(TableId(0), TableId(2), 3);
        let back = g.join_paths(TableId(2), TableId(0), 3);
        let mut rev: Vec<JoinPath> = back.iter().map(JoinPath::reversed).collect();
        let mut fwd_sorted = fwd.clone();
        rev.sort_by_key(|p| p.edge_ids());
        fwd_sorted.sort_by_key(|p| p.edge_ids());
        assert_eq!(fwd_sorted, rev);
    }
}
