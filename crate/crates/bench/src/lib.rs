//! Shared inputs for the criterion benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use viewdisc::engine::{EngineConfig, JoinSpec, KeyMode, StoredRelation};
use viewdisc::fixtures::join_inputs;
use viewdisc::table::{ColumnRef, TableId};

/// Key columns of the relations built by [`join_pair`].
pub fn join_spec() -> JoinSpec {
    JoinSpec {
        left: ColumnRef::new(TableId(0), "k"),
        right: ColumnRef::new(TableId(1), "k"),
        mode: KeyMode::Numeric,
    }
}

/// Left relation of `rows` rows over `rows / 4` keys, each matching two
/// right rows. Deterministic per `rows`.
pub fn join_pair(rows: usize) -> (StoredRelation, StoredRelation) {
    let mut rng = ChaCha8Rng::seed_from_u64(rows as u64);
    join_inputs(&mut rng, rows, (rows / 4).max(1), 2)
}

/// Engine settings whose budget forces the external join to spill.
pub fn spilling_config(budget: usize) -> EngineConfig {
    EngineConfig {
        memory_budget: budget,
        ..EngineConfig::default()
    }
}
