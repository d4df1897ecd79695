//! Interactive sessions persisted as append-only JSON-lines logs.
//!
//! Each session lives in `<data dir>/<session id>.jsonl`. Lines are
//! `{"type":"created",...}`, `{"type":"stage",...}` and
//! `{"type":"choice",...}`. The pipeline is deterministic for a fixed index
//! and config, so reopening a store re-runs it and replays the choices.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use log::warn;
use serde::{Deserialize, Serialize};

use super::pipeline::{run_pipeline, Counts, PipelineContext, Presentation, RunConfig, Strategy, Timings};
use crate::engine::Provenance;
use crate::error::{Error, Result};
use crate::present::{Choice, Prompt, SessionError, SummarySession};
use crate::search::QueryView;
use crate::table::{write_csv, Row};
use crate::index::DiscoveryIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Searching,
    Classifying,
    AwaitingChoice,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogEntry {
    Created { session_id: String, query_view: QueryView },
    Stage { stage: Stage },
    Choice { prompt_id: String, choice: Choice },
}

#[derive(Debug)]
struct SessionRecord {
    id: String,
    query_view: QueryView,
    stage: Stage,
    counts: Option<Counts>,
    timings: Option<Timings>,
    summary: Option<SummarySession>,
    provenance: HashMap<String, Provenance>,
    error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub session_id: String,
    pub stage: Stage,
    pub query_view: QueryView,
    pub counts: Option<Counts>,
    pub timings: Option<Timings>,
    pub pending_views: Vec<String>,
    pub prompts_shown: usize,
    pub choices_made: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewPage {
    pub view_id: String,
    pub schema: Vec<String>,
    pub total_rows: usize,
    pub page: usize,
    pub page_size: usize,
    pub rows: Vec<Row>,
    pub provenance: Option<Provenance>,
    /// Views merged into this one, for unions.
    pub sources: Vec<String>,
}

pub const PAGE_SIZE: usize = 50;

pub struct SessionStore {
    dir: PathBuf,
    index: Arc<DiscoveryIndex>,
    cfg: RunConfig,
    ctx: PipelineContext,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<SessionRecord>>>>,
}

fn unknown(id: &str) -> Error {
    SessionError::UnknownSession(id.to_string()).into()
}

impl SessionStore {
    /// Open a store and restore every logged session.
    pub fn open(dir: &Path, index: Arc<DiscoveryIndex>, mut cfg: RunConfig) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        cfg.strategy = Strategy::FourCSummary;
        cfg.validate()?;
        let store = SessionStore {
            dir: dir.to_path_buf(),
            ctx: PipelineContext::new(&cfg),
            index,
            cfg,
            sessions: RwLock::new(BTreeMap::new()),
        };
        let mut logs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        logs.sort();
        for p in logs {
            if let Err(e) = store.restore(&p) {
                warn!("skipping session log {}: {e}", p.display());
            }
        }
        Ok(store)
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn append(&self, id: &str, entry: &LogEntry) -> Result<()> {
        let path = self.log_path(id);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(|e| Error::io(&path, e))
    }

    fn restore(&self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<LogEntry> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        let Some(LogEntry::Created { session_id, query_view }) = entries.first().cloned() else {
            return Err(Error::Format(format!("{}: missing created entry", path.display())));
        };
        self.insert(&session_id, query_view);
        self.execute(&session_id, false)?;
        let rec = self.record(&session_id)?;
        let mut rec = rec.lock().unwrap();
        for e in &entries[1..] {
            if let LogEntry::Choice { prompt_id, choice } = e {
                if let Some(s) = rec.summary.as_mut() {
                    s.apply_choice(prompt_id, choice)?;
                }
            }
        }
        if let Some(s) = &rec.summary {
            if rec.stage == Stage::AwaitingChoice && s.is_complete() {
                rec.stage = Stage::Complete;
            }
        }
        Ok(())
    }

    fn insert(&self, id: &str, qv: QueryView) {
        let rec = SessionRecord {
            id: id.to_string(),
            query_view: qv,
            stage: Stage::Searching,
            counts: None,
            timings: None,
            summary: None,
            provenance: HashMap::new(),
            error: None,
        };
        self.sessions
            .write()
            .unwrap()
            .insert(id.to_string(), Arc::new(Mutex::new(rec)));
    }

    fn record(&self, id: &str) -> Result<Arc<Mutex<SessionRecord>>> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| unknown(id))
    }

    /// Register a session; call [`SessionStore::run`] to execute it.
    pub fn create(&self, qv: QueryView) -> Result<String> {
        let id = format!("s{:016x}", rand::random::<u64>());
        self.append(
            &id,
            &LogEntry::Created {
                session_id: id.clone(),
                query_view: qv.clone(),
            },
        )?;
        self.insert(&id, qv);
        Ok(id)
    }

    /// Run the pipeline for a created session.
    pub fn run(&self, id: &str) -> Result<()> {
        self.execute(id, true)
    }

    fn set_stage(&self, rec: &mut SessionRecord, stage: Stage, log: bool) -> Result<()> {
        rec.stage = stage;
        if log {
            self.append(&rec.id, &LogEntry::Stage { stage })?;
        }
        Ok(())
    }

    fn execute(&self, id: &str, log: bool) -> Result<()> {
        let rec = self.record(id)?;
        let qv = {
            let mut r = rec.lock().unwrap();
            self.set_stage(&mut r, Stage::Classifying, log)?;
            r.query_view.clone()
        };
        let outcome = run_pipeline(&self.index, &qv, &self.cfg, &self.ctx, false);
        let mut r = rec.lock().unwrap();
        match outcome {
            Ok(run) => {
                r.counts = Some(run.counts);
                r.timings = Some(run.timings);
                r.provenance = run
                    .views
                    .iter()
                    .map(|v| (v.view_id.clone(), v.provenance.clone()))
                    .collect();
                let summary = match run.presentation {
                    Some(Presentation::Summary(mut s)) => {
                        s.session_id = id.to_string();
                        Some(s)
                    }
                    _ => None,
                };
                let stage = match &summary {
                    Some(s) if !s.is_complete() => Stage::AwaitingChoice,
                    _ => Stage::Complete,
                };
                r.summary = summary;
                self.set_stage(&mut r, stage, log)
            }
            Err(e) => {
                r.error = Some(e.to_string());
                self.set_stage(&mut r, Stage::Failed, log)?;
                Err(e)
            }
        }
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().unwrap().keys().cloned().collect()
    }

    pub fn status(&self, id: &str) -> Result<SessionStatus> {
        let rec = self.record(id)?;
        let r = rec.lock().unwrap();
        Ok(SessionStatus {
            session_id: r.id.clone(),
            stage: r.stage,
            query_view: r.query_view.clone(),
            counts: r.counts.clone(),
            timings: r.timings.clone(),
            pending_views: r.summary.as_ref().map(|s| s.pending_views.clone()).unwrap_or_default(),
            prompts_shown: r.summary.as_ref().map_or(0, |s| s.prompts_shown),
            choices_made: r.summary.as_ref().map_or(0, |s| s.choices_made),
            error: r.error.clone(),
        })
    }

    /// Surviving views with one page of rows each.
    pub fn views(&self, id: &str, page: usize) -> Result<Vec<ViewPage>> {
        let rec = self.record(id)?;
        let r = rec.lock().unwrap();
        let Some(s) = &r.summary else {
            return Ok(vec![]);
        };
        let sources: HashMap<&str, &Vec<String>> = s
            .action_log
            .iter()
            .filter_map(|a| match a {
                crate::present::Action::UnionComplementary { view_id, members } => Some((view_id.as_str(), members)),
                _ => None,
            })
            .collect();
        Ok(s.pending_views
            .iter()
            .filter_map(|vid| s.view(vid))
            .map(|v| ViewPage {
                view_id: v.view_id.clone(),
                schema: v.schema.clone(),
                total_rows: v.rows.len(),
                page,
                page_size: PAGE_SIZE,
                rows: v.rows.iter().skip(page * PAGE_SIZE).take(PAGE_SIZE).cloned().collect(),
                provenance: r.provenance.get(&v.view_id).cloned(),
                sources: sources.get(v.view_id.as_str()).map(|m| (*m).clone()).unwrap_or_default(),
            })
            .collect())
    }

    pub fn prompt(&self, id: &str) -> Result<Option<Prompt>> {
        let rec = self.record(id)?;
        let r = rec.lock().unwrap();
        Ok(r.summary.as_ref().and_then(|s| s.next_prompt.clone()))
    }

    pub fn choose(&self, id: &str, prompt_id: &str, choice: &Choice) -> Result<SessionStatus> {
        let rec = self.record(id)?;
        {
            let mut r = rec.lock().unwrap();
            let s = r.summary.as_mut().ok_or(SessionError::NoPrompt)?;
            s.apply_choice(prompt_id, choice)?;
            let complete = s.is_complete();
            self.append(
                id,
                &LogEntry::Choice {
                    prompt_id: prompt_id.to_string(),
                    choice: choice.clone(),
                },
            )?;
            if complete {
                self.set_stage(&mut r, Stage::Complete, true)?;
            }
        }
        self.status(id)
    }

    /// CSV of one surviving view, or of all of them with a leading `view_id`
    /// column when there are several and none is named.
    pub fn export(&self, id: &str, view: Option<&str>) -> Result<String> {
        let rec = self.record(id)?;
        let r = rec.lock().unwrap();
        let s = r.summary.as_ref().ok_or(SessionError::EmptyResult)?;
        let mut out = Vec::new();
        let selected: Vec<&String> = match view {
            Some(v) => vec![s
                .pending_views
                .iter()
                .find(|p| *p == v)
                .ok_or_else(|| SessionError::UnknownView {
                    prompt: String::new(),
                    view: v.to_string(),
                })?],
            None => s.pending_views.iter().collect(),
        };
        if let [one] = selected.as_slice() {
            let v = s.view(one).ok_or_else(|| unknown(one))?;
            write_csv(&mut out, &v.schema, &v.rows)?;
        } else {
            let first = s.view(selected[0]).ok_or_else(|| unknown(selected[0]))?;
            let mut header = vec!["view_id".to_string()];
            header.extend(first.schema.iter().cloned());
            let mut rows = Vec::new();
            for vid in &selected {
                if let Some(v) = s.view(vid) {
                    for r in &v.rows {
                        let mut row = vec![v.view_id.clone()];
                        row.extend(r.iter().cloned());
                        rows.push(row);
                    }
                }
            }
            write_csv(&mut out, &header, &rows)?;
        }
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn action_log(&self, id: &str) -> Result<Vec<crate::present::Action>> {
        let rec = self.record(id)?;
        let r = rec.lock().unwrap();
        Ok(r.summary.as_ref().map(|s| s.action_log.clone()).unwrap_or_default())
    }

    pub fn index(&self) -> &DiscoveryIndex {
        &self.index
    }
}
