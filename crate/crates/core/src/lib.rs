//! View discovery over a corpus of CSV tables.
//!
//! A query view names the attributes a user wants and, optionally, a few
//! example values. The [`index`] finds tables and join paths, [`search`]
//! assembles candidate groups and join graphs, [`engine`] materializes them
//! into candidate views, [`fourc`] classifies the views as compatible,
//! contained, complementary or contradictory, and [`present`] reduces the
//! resulting choice space. [`service`] wires the stages together.

pub mod engine;
pub mod error;
pub mod fixtures;
pub mod fourc;
pub mod hash;
pub mod index;
pub mod present;
pub mod search;
pub mod service;
pub mod table;
pub mod text;

pub use error::{Error, Result};
pub use fourc::{classify, no_chasing_oracle, FourCResult, View};
pub use index::{build_index, DiscoveryIndex, IndThresholds, IndexConfig};
pub use search::{JoinGraph, QueryView};
pub use service::{run_pipeline, PipelineContext, RunConfig, Strategy};
