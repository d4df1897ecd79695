use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use viewdisc::index::{DiscoveryIndex, IndThresholds};
use viewdisc::present::{Action, Choice, SummarySession};
use viewdisc::service::{
    materialize_full, run_pipeline, PipelineContext, PipelineRun, Presentation, RunConfig, SessionStore, Strategy,
    Timings,
};
use viewdisc::{build_index, IndexConfig, QueryView};

/// Bad invocation: missing paths, unparsable inputs. Exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "viewdisc", version, about = "Find, classify and reduce candidate views over a CSV corpus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Profile a corpus directory and persist its discovery index.
    Index(IndexArgs),
    /// Run a query view through search, materialization and classification.
    Query(QueryArgs),
    /// Serve the session API.
    Serve(ServeArgs),
    /// Materialize one view in full, e.g. after a sampled query.
    Materialize(MaterializeArgs),
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    /// Directory of CSV files.
    pub corpus: PathBuf,
    /// Output directory for the index.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub containment: f64,
    #[arg(long, default_value_t = 0.9)]
    pub uniqueness: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Index directory written by `viewdisc index`.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub max_hops: usize,
    /// Materialize consistent samples of K join keys instead of full views.
    #[arg(long, value_name = "K")]
    pub sample: Option<usize>,
    /// Force value-constraint keys into samples.
    #[arg(long)]
    pub include_value_rows: bool,
    /// e.g. 512MiB, 64KiB, 1GB or plain bytes.
    #[arg(long, default_value = "512MiB", value_parser = parse_bytes)]
    pub memory_budget: usize,
    /// Join graphs kept per candidate group.
    #[arg(long, default_value_t = 50)]
    pub max_graphs: usize,
    /// Directory for join spill files (system temp dir by default).
    #[arg(long)]
    pub spill_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Query view file (YAML or JSON).
    pub query_view: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "4c-summary", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Resolve contradictions on the terminal.
    #[arg(long)]
    pub interactive: bool,
    /// Stop after join-graph enumeration and print counts.
    #[arg(long)]
    pub dry_run: bool,
    /// Directory for exported views, provenance and the report.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Session logs live here.
    #[arg(long, env = "VIEWDISC_DATA_DIR", default_value = "viewdisc-data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

#[derive(Args, Debug)]
pub struct MaterializeArgs {
    /// The query view that produced the view.
    pub query_view: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    /// View id to materialize in full.
    #[arg(long, value_name = "VIEW_ID")]
    pub full: String,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: viewdisc::Error| e.to_string())
}

pub fn parse_bytes(s: &str) -> Result<usize, String> {
    let t = s.trim();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let n: usize = num.parse().map_err(|_| format!("bad size {s:?}"))?;
    let mult: usize = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" => 1000,
        "kib" => 1 << 10,
        "m" | "mb" => 1000 * 1000,
        "mib" => 1 << 20,
        "g" | "gb" => 1000 * 1000 * 1000,
        "gib" => 1 << 30,
        other => return Err(format!("unknown size unit {other:?}")),
    };
    n.checked_mul(mult).ok_or_else(|| format!("size {s:?} overflows"))
}

impl RunArgs {
    pub fn config(&self, index: &DiscoveryIndex, strategy: Strategy) -> Result<RunConfig> {
        let cfg = RunConfig {
            corpus: Some(index.corpus_root.clone()),
            index: Some(self.index.clone()),
            thresholds: index.config.thresholds,
            max_hops: self.max_hops,
            sample_k: self.sample,
            memory_budget: self.memory_budget,
            max_graphs: self.max_graphs,
            strategy,
            include_value_rows: self.include_value_rows,
            spill_dir: self.spill_dir.clone(),
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load_index(&self) -> Result<DiscoveryIndex> {
        if !self.index.is_dir() {
            return Err(usage(format!(
                "index directory {} not found; build one with `viewdisc index <corpus> --out <dir>`",
                self.index.display()
            )));
        }
        DiscoveryIndex::load(&self.index).with_context(|| format!("loading index {}", self.index.display()))
    }
}

pub fn read_query_view(path: &Path) -> Result<QueryView> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    QueryView::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn run_index(args: &IndexArgs, out: &mut impl Write) -> Result<()> {
    if !args.corpus.is_dir() {
        return Err(usage(format!(
            "corpus directory {} not found; usage: viewdisc index <corpus> --out <dir>",
            args.corpus.display()
        )));
    }
    let config = IndexConfig {
        thresholds: IndThresholds {
            containment: args.containment,
            uniqueness: args.uniqueness,
            ..IndThresholds::default()
        },
        ..IndexConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let idx = build_index(&args.corpus, config)?;
    idx.save(&args.out)
        .with_context(|| format!("writing index to {}", args.out.display()))?;
    let columns: usize = idx.tables.iter().map(|t| t.columns.len()).sum();
    writeln!(
        out,
        "indexed {} tables, {} columns, {} inclusion dependencies -> {}",
        idx.tables.len(),
        columns,
        idx.ind_edges.len(),
        args.out.display()
    )?;
    Ok(())
}

pub fn timing_report(t: &Timings) -> String {
    let pct = |v: f64| if t.total > 0.0 { 100.0 * v / t.total } else { 0.0 };
    let mut s = String::from("stage               ms        %\n");
    for (name, v) in [
        ("does-join?", t.does_join),
        ("does-materialize?", t.does_materialize),
        ("materialize", t.materialize),
        ("4c", t.fourc),
        ("other", t.other),
        ("total", t.total),
    ] {
        s.push_str(&format!("{name:<17} {v:>10.1} {:>6.1}\n", pct(v)));
    }
    s
}

fn describe_action(a: &Action) -> String {
    match a {
        Action::SummarizeCompatible { representative, members } => {
            format!("kept {representative} for {} compatible views", members.len())
        }
        Action::KeepMaxContained { container, contained } => {
            format!("kept {container}, dropped contained {contained}")
        }
        Action::UnionComplementary { view_id, members } => {
            format!("unioned {} into {view_id}", members.join(", "))
        }
        Action::Choice { chosen, rejected, pruned, .. } => {
            format!("chose {chosen} over {rejected}, pruned {}", pruned.len())
        }
        Action::Skip { prompt_id } => format!("skipped {prompt_id}"),
    }
}

fn interact(session: &mut SummarySession, input: &mut impl BufRead, out: &mut impl Write) -> Result<()> {
    while let Some(p) = session.next_prompt.clone() {
        writeln!(
            out,
            "\n[{}] {} disagree on {} for {}={}",
            p.prompt_id,
            p.schema.join(","),
            p.attribute,
            p.key,
            p.values.join(" | ")
        )?;
        for (label, view, rows) in [("1", &p.left, &p.left_rows), ("2", &p.right, &p.right_rows)] {
            writeln!(out, "  ({label}) {view}")?;
            for r in rows.iter().take(10) {
                writeln!(out, "      {}", r.join(" | "))?;
            }
        }
        write!(out, "keep (1/2), s to skip: ")?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        let choice = match line.trim() {
            "1" => Choice::View(p.left.clone()),
            "2" => Choice::View(p.right.clone()),
            "s" | "skip" => Choice::Skip,
            _ => {
                writeln!(out, "answer 1, 2 or s")?;
                continue;
            }
        };
        session.apply_choice(&p.prompt_id, &choice)?;
    }
    Ok(())
}

fn export(run: &PipelineRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = serde_json::json!({
        "counts": run.counts,
        "timings": run.timings,
        "discarded": run.discarded,
    });
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    if let Some(fc) = &run.classification {
        fs::write(dir.join("classification.json"), fc.to_json()? + "\n")?;
    }
    match &run.presentation {
        Some(Presentation::Summary(s)) => {
            for id in &s.pending_views {
                if let Some(cv) = run.views.iter().find(|v| &v.view_id == id) {
                    cv.export(dir)?;
                } else if let Some(v) = s.view(id) {
                    let f = fs::File::create(dir.join(format!("{id}.csv")))?;
                    viewdisc::table::write_csv(f, &v.schema, &v.rows)?;
                }
            }
            fs::write(dir.join("actions.json"), s.action_log_json()? + "\n")?;
        }
        Some(Presentation::MultiRow(views)) => {
            for (i, v) in views.iter().enumerate() {
                v.write_csv(fs::File::create(dir.join(format!("multirow_{i}.csv")))?)?;
            }
        }
        None => {}
    }
    Ok(())
}

pub fn run_query(args: &QueryArgs, input: &mut impl BufRead, out: &mut impl Write) -> Result<()> {
    let qv = read_query_view(&args.query_view)?;
    let index = args.run.load_index()?;
    let cfg = args.run.config(&index, args.strategy)?;
    let ctx = PipelineContext::new(&cfg);
    let mut run = run_pipeline(&index, &qv, &cfg, &ctx, args.dry_run)?;
    let c = &run.counts;
    writeln!(
        out,
        "candidate tables {}  CG {} (full {})  P {}  JG {}  MG {}  views {}",
        c.candidate_tables, c.candidate_groups, c.full_groups, c.pairs, c.join_graphs, c.materializable_graphs, c.views
    )?;
    if c.truncated_groups > 0 {
        writeln!(out, "join graphs truncated for {} groups", c.truncated_groups)?;
    }
    for d in &run.discarded {
        writeln!(out, "discarded {}: {}", d.view_id, d.reason)?;
    }
    if !args.dry_run {
        if run.views.is_empty() {
            writeln!(out, "no candidate views")?;
        }
        match &mut run.presentation {
            Some(Presentation::Summary(s)) => {
                for a in &s.action_log {
                    writeln!(out, "  {}", describe_action(a))?;
                }
                if args.interactive {
                    interact(s, input, out)?;
                }
                writeln!(
                    out,
                    "{} views remain; {} prompts shown, {} choices made",
                    s.pending_views.len(),
                    s.prompts_shown,
                    s.choices_made
                )?;
                for id in &s.pending_views {
                    let rows = s.view(id).map_or(0, |v| v.rows.len());
                    writeln!(out, "  {id} ({rows} rows)")?;
                }
            }
            Some(Presentation::MultiRow(views)) => {
                for v in views.iter() {
                    writeln!(
                        out,
                        "multi-row view [{}] key {}: {} rows, {} multi-rows",
                        v.schema.join(","),
                        v.key.as_deref().unwrap_or("-"),
                        v.rows.len(),
                        v.multi_rows().count()
                    )?;
                }
            }
            None => {}
        }
    }
    write!(out, "{}", timing_report(&run.timings))?;
    if let Some(dir) = &args.out {
        export(&run, dir)?;
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(())
}

pub fn run_materialize(args: &MaterializeArgs, out: &mut impl Write) -> Result<()> {
    let qv = read_query_view(&args.query_view)?;
    let index = args.run.load_index()?;
    let cfg = args.run.config(&index, Strategy::FourCSummary)?;
    let ctx = PipelineContext::new(&cfg);
    let view = materialize_full(&index, &qv, &cfg, &ctx, &args.full)?;
    fs::create_dir_all(&args.out)?;
    view.export(&args.out)?;
    writeln!(out, "{}: {} rows -> {}", view.view_id, view.len(), args.out.display())?;
    Ok(())
}

pub async fn run_serve(args: &ServeArgs) -> Result<()> {
    let index = Arc::new(args.run.load_index()?);
    let cfg = args.run.config(&index, Strategy::FourCSummary)?;
    let store = Arc::new(
        SessionStore::open(&args.data_dir, index, cfg)
            .with_context(|| format!("opening data directory {}", args.data_dir.display()))?,
    );
    let app = crate::api::router(store);
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Index(a) => run_index(&a, &mut out),
        Command::Query(a) => run_query(&a, &mut io::stdin().lock(), &mut out),
        Command::Materialize(a) => run_materialize(&a, &mut out),
        Command::Serve(a) => {
            drop(out);
            tokio::runtime::Runtime::new()?.block_on(run_serve(&a))
        }
    }
}

/// Exit status for an error: 2 for usage problems, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<viewdisc::Error>() {
        Some(viewdisc::Error::QueryView(_) | viewdisc::Error::Config(_)) => 2,
        _ => 1,
    }
}
