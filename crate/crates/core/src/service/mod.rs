//! Query execution end to end, and persisted interactive sessions.

mod pipeline;
mod session;

pub use pipeline::{
    materialize_full, run_pipeline, Counts, Discarded, PipelineContext, PipelineRun, Presentation, RunConfig,
    Strategy, Timings,
};
pub use session::{SessionStatus, SessionStore, Stage, ViewPage, PAGE_SIZE};
