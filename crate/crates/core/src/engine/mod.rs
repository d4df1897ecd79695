//! Join execution: materializing join graphs into candidate views.

mod cache;
mod join;
mod materialize;
mod rowstore;
mod sample;

pub use cache::{EngineCaches, JoinStat, JoinStats, TableCache, DEFAULT_TABLE_CACHE_BYTES};
pub use join::{
    choose_strategy, estimate_join_cardinality, join_key, join_two, join_with, key_mode, scale_estimate,
    EngineConfig, JoinEstimate, JoinOutcome, JoinSpec, JoinStrategy, KeyMode, SpillStats,
};
pub use materialize::{CandidateView, Engine, JoinRecord, Materializability, MaterializeMode, Provenance};
pub use rowstore::{RowStore, SpillReader, SpillWriter, StoredRelation};
pub use sample::{consistent_sample, filter_by_threshold, key_hash, sample_threshold};
