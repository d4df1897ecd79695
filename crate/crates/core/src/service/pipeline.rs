use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{CandidateView, Engine, EngineCaches, EngineConfig, JoinStats, MaterializeMode};
use crate::error::{Error, Result};
use crate::fourc::{classify, FourCResult, View};
use crate::index::{DiscoveryIndex, IndThresholds};
use crate::present::{multi_row, summarize, MultiRowView, SummarySession};
use crate::search::{
    find_candidate_groups, find_candidate_tables, find_join_graphs, CandidateGroup, GraphOptions, JoinGraph,
    QueryView,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "multi-row")]
    MultiRow,
    #[serde(rename = "4c-summary")]
    FourCSummary,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi-row" => Ok(Strategy::MultiRow),
            "4c-summary" => Ok(Strategy::FourCSummary),
            other => Err(Error::Config(format!(
                "strategy {other:?}: expected multi-row or 4c-summary"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub thresholds: IndThresholds,
    /// 1..=6
    pub max_hops: usize,
    /// Materialize samples of this many join keys; full when unset.
    pub sample_k: Option<usize>,
    pub memory_budget: usize,
    /// Join graphs kept per group, 1..=10000.
    pub max_graphs: usize,
    pub strategy: Strategy,
    pub include_value_rows: bool,
    pub spill_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GraphOptions::default();
        RunConfig {
            corpus: None,
            index: None,
            thresholds: IndThresholds::default(),
            max_hops: g.max_hops,
            sample_k: None,
            memory_budget: EngineConfig::default().memory_budget,
            max_graphs: g.max_graphs,
            strategy: Strategy::FourCSummary,
            include_value_rows: false,
            spill_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        if !(t.containment > 0.0 && t.containment <= 1.0) {
            return Err(Error::Config("containment threshold must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&t.uniqueness) {
            return Err(Error::Config("uniqueness threshold must be in [0, 1]".into()));
        }
        if !(1..=6).contains(&self.max_hops) {
            return Err(Error::Config("max_hops must be between 1 and 6".into()));
        }
        if self.sample_k == Some(0) {
            return Err(Error::Config("sample K must be at least 1".into()));
        }
        if self.memory_budget < 1 << 16 {
            return Err(Error::Config("memory budget must be at least 64 KiB".into()));
        }
        if !(1..=10_000).contains(&self.max_graphs) {
            return Err(Error::Config("max_graphs must be between 1 and 10000".into()));
        }
        self.engine_config().validate()
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            memory_budget: self.memory_budget,
            sample_k: self.sample_k.unwrap_or(EngineConfig::default().sample_k),
            include_value_rows: self.include_value_rows,
            spill_dir: self.spill_dir.clone(),
            ..EngineConfig::default()
        }
    }

    pub fn graph_options(&self) -> GraphOptions {
        GraphOptions {
            max_hops: self.max_hops,
            max_graphs: self.max_graphs,
        }
    }

    pub fn mode(&self) -> MaterializeMode {
        match self.sample_k {
            Some(k) => MaterializeMode::Sample(k),
            None => MaterializeMode::Full,
        }
    }
}

/// Search funnel counts: candidate groups (CG), table pairs examined (P),
/// join graphs (JG) and materializable graphs (MG).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub candidate_tables: usize,
    pub candidate_groups: usize,
    pub full_groups: usize,
    pub pairs: usize,
    pub join_graphs: usize,
    pub truncated_groups: usize,
    pub materializable_graphs: usize,
    pub views: usize,
}

/// Wall time per stage in milliseconds. `other` is the remainder of `total`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub does_join: f64,
    pub does_materialize: f64,
    pub materialize: f64,
    pub fourc: f64,
    pub other: f64,
    pub total: f64,
}

impl Timings {
    pub fn category_sum(&self) -> f64 {
        self.does_join + self.does_materialize + self.materialize + self.fourc + self.other
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discarded {
    pub view_id: String,
    pub reason: String,
}

pub enum Presentation {
    Summary(SummarySession),
    MultiRow(Vec<MultiRowView>),
}

pub struct PipelineRun {
    pub counts: Counts,
    pub timings: Timings,
    pub groups: Vec<CandidateGroup>,
    pub graphs: Vec<JoinGraph>,
    pub views: Vec<CandidateView>,
    pub discarded: Vec<Discarded>,
    pub classification: Option<FourCResult>,
    pub presentation: Option<Presentation>,
}

/// Shared state across queries against one index.
#[derive(Default)]
pub struct PipelineContext {
    pub caches: EngineCaches,
    pub stats: JoinStats,
}

impl PipelineContext {
    pub fn new(cfg: &RunConfig) -> Self {
        PipelineContext {
            caches: EngineCaches::new(cfg.engine_config().table_cache_bytes),
            stats: JoinStats::default(),
        }
    }
}

/// Search, materialize, classify and present. With `dry_run` the run stops
/// after join-graph enumeration.
pub fn run_pipeline(
    index: &DiscoveryIndex,
    qv: &QueryView,
    cfg: &RunConfig,
    ctx: &PipelineContext,
    dry_run: bool,
) -> Result<PipelineRun> {
    cfg.validate()?;
    let start = Instant::now();
    let mut t = Timings::default();
    let mut counts = Counts::default();

    let candidates = find_candidate_tables(index, qv);
    counts.candidate_tables = candidates.len();
    let groups = find_candidate_groups(&candidates, qv);
    counts.candidate_groups = groups.len();
    counts.full_groups = groups.iter().filter(|g| g.is_full(qv)).count();

    let s = Instant::now();
    let opts = cfg.graph_options();
    let enumerated: Vec<_> = groups
        .par_iter()
        .map(|g| find_join_graphs(index, g, &opts, Some(&ctx.caches)))
        .collect();
    t.does_join = ms(s.elapsed());
    let mut seen = BTreeSet::new();
    // (graph, from a fully fulfilling group)
    let mut graphs: Vec<(JoinGraph, bool)> = Vec::new();
    for (g, e) in groups.iter().zip(enumerated) {
        counts.pairs += e.pairs;
        counts.join_graphs += e.graphs.len();
        counts.truncated_groups += usize::from(e.truncated);
        for graph in e.graphs {
            if seen.insert(graph.view_id()) {
                graphs.push((graph, g.is_full(qv)));
            }
        }
    }
    info!(
        "CG={} P={} JG={} ({} truncated groups)",
        counts.candidate_groups, counts.pairs, counts.join_graphs, counts.truncated_groups
    );
    if dry_run {
        t.total = ms(start.elapsed());
        t.other = (t.total - t.category_sum()).max(0.0);
        return Ok(PipelineRun {
            counts,
            timings: t,
            groups,
            graphs: graphs.into_iter().map(|(g, _)| g).collect(),
            views: vec![],
            discarded: vec![],
            classification: None,
            presentation: None,
        });
    }

    let ecfg = cfg.engine_config();
    let engine = Engine::new(index, &ctx.caches, &ctx.stats, &ecfg);
    let mut discarded = Vec::new();

    // Does materialize? Full groups first; partial groups only when no full
    // group materializes.
    let s = Instant::now();
    let check = |subset: Vec<&JoinGraph>, discarded: &mut Vec<Discarded>| -> Vec<JoinGraph> {
        let results: Vec<_> = subset.par_iter().map(|g| (*g, engine.check_materializable(g))).collect();
        let mut ok = Vec::new();
        for (g, r) in results {
            match r {
                Ok(m) if m.materializable => ok.push(g.clone()),
                Ok(_) => {}
                Err(e) => {
                    warn!("discarding {}: {e}", g.view_id());
                    discarded.push(Discarded {
                        view_id: g.view_id(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        ok
    };
    let mut good = check(graphs.iter().filter(|g| g.1).map(|g| &g.0).collect(), &mut discarded);
    if good.is_empty() {
        good = check(graphs.iter().filter(|g| !g.1).map(|g| &g.0).collect(), &mut discarded);
    }
    t.does_materialize = ms(s.elapsed());
    counts.materializable_graphs = good.len();

    let s = Instant::now();
    let mode = cfg.mode();
    let mats: Vec<_> = good
        .par_iter()
        .map(|g| (g, engine.materialize_join_graph(g, mode)))
        .collect();
    let mut views = Vec::new();
    for (g, r) in mats {
        match r {
            Ok(v) => views.push(v),
            Err(e) => {
                warn!("discarding {}: {e}", g.view_id());
                discarded.push(Discarded {
                    view_id: g.view_id(),
                    reason: e.to_string(),
                });
            }
        }
    }
    t.materialize = ms(s.elapsed());
    counts.views = views.len();

    let mut classification = None;
    let mut presentation = None;
    if !views.is_empty() {
        let plain: Vec<View> = views.iter().map(View::from_candidate).collect::<Result<_>>()?;
        let s = Instant::now();
        let result = classify(&plain);
        t.fourc = ms(s.elapsed());
        presentation = Some(match cfg.strategy {
            Strategy::MultiRow => Presentation::MultiRow(multi_row(&result, &plain)),
            Strategy::FourCSummary => Presentation::Summary(summarize(&result, plain)?),
        });
        classification = Some(result);
    }
    t.total = ms(start.elapsed());
    t.other = (t.total - (t.does_join + t.does_materialize + t.materialize + t.fourc)).max(0.0);
    Ok(PipelineRun {
        counts,
        timings: t,
        groups,
        graphs: good,
        views,
        discarded,
        classification,
        presentation,
    })
}

/// Re-run the search and materialize one graph in full by its view id.
pub fn materialize_full(
    index: &DiscoveryIndex,
    qv: &QueryView,
    cfg: &RunConfig,
    ctx: &PipelineContext,
    view_id: &str,
) -> Result<CandidateView> {
    let run = run_pipeline(index, qv, cfg, ctx, true)?;
    let graph = run
        .graphs
        .into_iter()
        .find(|g| g.view_id() == view_id)
        .ok_or_else(|| Error::Config(format!("no join graph with view id {view_id}")))?;
    let ecfg = cfg.engine_config();
    Engine::new(index, &ctx.caches, &ctx.stats, &ecfg).materialize_join_graph(&graph, MaterializeMode::Full)
}
