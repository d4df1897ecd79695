//! Join statistics and the three engine caches.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::rowstore::StoredRelation;
use crate::error::Result;
use crate::index::{DiscoveryIndex, JoinEdge, JoinPath};
use crate::table::{load_relation, TableId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinStat {
    pub edge: JoinEdge,
    pub rows: u64,
}

/// Observed join output cardinalities. Appends only; the latest observation
/// for an edge wins on lookup.
#[derive(Debug, Default)]
pub struct JoinStats {
    log: Mutex<Vec<JoinStat>>,
    latest: RwLock<HashMap<JoinEdge, u64>>,
}

impl JoinStats {
    pub fn record(&self, edge: &JoinEdge, rows: u64) {
        self.log.lock().unwrap().push(JoinStat {
            edge: edge.clone(),
            rows,
        });
        self.latest.write().unwrap().insert(edge.clone(), rows);
    }

    pub fn get(&self, edge: &JoinEdge) -> Option<u64> {
        self.latest.read().unwrap().get(edge).copied()
    }

    pub fn log(&self) -> Vec<JoinStat> {
        self.log.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// LRU of loaded base tables bounded by an approximate byte budget.
#[derive(Debug)]
pub struct TableCache {
    budget: usize,
    state: Mutex<LruState>,
    reads: AtomicU64,
}

#[derive(Debug, Default)]
struct LruState {
    tick: u64,
    used: usize,
    entries: HashMap<TableId, LruEntry>,
}

#[derive(Debug)]
struct LruEntry {
    rel: StoredRelation,
    bytes: usize,
    last_used: u64,
}

impl TableCache {
    pub fn new(budget: usize) -> Self {
        TableCache {
            budget,
            state: Mutex::new(LruState::default()),
            reads: AtomicU64::new(0),
        }
    }

    /// Tables read from disk so far.
    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn contains(&self, id: TableId) -> bool {
        self.state.lock().unwrap().entries.contains_key(&id)
    }

    pub fn used_bytes(&self) -> usize {
        self.state.lock().unwrap().used
    }

    pub fn get_or_load(&self, index: &DiscoveryIndex, id: TableId) -> Result<StoredRelation> {
        {
            let mut st = self.state.lock().unwrap();
            st.tick += 1;
            let tick = st.tick;
            if let Some(e) = st.entries.get_mut(&id) {
                e.last_used = tick;
                return Ok(e.rel.clone());
            }
        }
        let table = index.table(id)?;
        let rel = load_relation(&index.corpus_root, table)?;
        self.reads.fetch_add(1, Ordering::Relaxed);
        let bytes = rel.approx_bytes();
        let stored = StoredRelation::new(rel.columns, rel.rows);
        self.insert(id, stored.clone(), bytes);
        Ok(stored)
    }

    fn insert(&self, id: TableId, rel: StoredRelation, bytes: usize) {
        let mut st = self.state.lock().unwrap();
        if bytes > self.budget {
            return;
        }
        st.tick += 1;
        let tick = st.tick;
        if let Some(old) = st.entries.remove(&id) {
            st.used -= old.bytes;
        }
        while st.used + bytes > self.budget {
            let victim = st
                .entries
                .iter()
                .min_by_key(|(_, e)| e.last_used)
                .map(|(k, _)| *k);
            match victim {
                Some(v) => {
                    let e = st.entries.remove(&v).unwrap();
                    st.used -= e.bytes;
                }
                None => break,
            }
        }
        st.used += bytes;
        st.entries.insert(
            id,
            LruEntry {
                rel,
                bytes,
                last_used: tick,
            },
        );
    }
}

/// Default table cache budget, 256 MiB.
pub const DEFAULT_TABLE_CACHE_BYTES: usize = 256 << 20;

#[derive(Debug)]
pub struct EngineCaches {
    joinpaths: RwLock<HashMap<(TableId, TableId, usize), Arc<Vec<JoinPath>>>>,
    deadends: RwLock<HashSet<(JoinEdge, String)>>,
    pub tables: TableCache,
}

impl Default for EngineCaches {
    fn default() -> Self {
        EngineCaches::new(DEFAULT_TABLE_CACHE_BYTES)
    }
}

impl EngineCaches {
    pub fn new(table_cache_bytes: usize) -> Self {
        EngineCaches {
            joinpaths: RwLock::new(HashMap::new()),
            deadends: RwLock::new(HashSet::new()),
            tables: TableCache::new(table_cache_bytes),
        }
    }

    /// Memoized [`DiscoveryIndex::join_paths`].
    pub fn join_paths(&self, index: &DiscoveryIndex, a: TableId, b: TableId, max_hops: usize) -> Arc<Vec<JoinPath>> {
        let key = (a, b, max_hops);
        if let Some(p) = self.joinpaths.read().unwrap().get(&key) {
            return Arc::clone(p);
        }
        let paths = Arc::new(index.join_paths(a, b, max_hops));
        self.joinpaths
            .write()
            .unwrap()
            .entry(key)
            .or_insert(paths)
            .clone()
    }

    pub fn joinpath_entries(&self) -> usize {
        self.joinpaths.read().unwrap().len()
    }

    pub fn is_dead_end(&self, edge: &JoinEdge, signature: &str) -> bool {
        self.deadends
            .read()
            .unwrap()
            .contains(&(edge.clone(), signature.to_string()))
    }

    /// Record a pair whose join was observed empty under `signature`.
    pub(crate) fn add_dead_end(&self, edge: &JoinEdge, signature: &str) {
        self.deadends
            .write()
            .unwrap()
            .insert((edge.clone(), signature.to_string()));
    }

    pub fn dead_ends(&self) -> Vec<(JoinEdge, String)> {
        let mut v: Vec<_> = self.deadends.read().unwrap().iter().cloned().collect();
        v.sort();
        v
    }
}
