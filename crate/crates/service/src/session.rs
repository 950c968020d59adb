//! One interactive elicitation session: an [`ExpGreedy`] run over an
//! external preference channel, suspended on the question it needs
//! answered next.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use expgreedy::expgreedy::{ExpGreedy, ExpGreedyConfig, OpponentPool, SelectionMode};
use expgreedy::function::file::FunctionFile;
use expgreedy::function::AnyFunction;
use expgreedy::oracle::{ObservationChannel, Query};
use expgreedy::{ItemId, SubmodularFunction};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

fn default_tau() -> u32 {
    3
}
fn default_avg_budget() -> f64 {
    25.0
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    0.05
}
fn default_mode() -> SelectionMode {
    SelectionMode::OptCompete
}

/// Session parameters as accepted by `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub k: usize,
    #[serde(default = "default_tau")]
    pub tau: u32,
    /// Comparisons per item and iteration, on average.
    #[serde(default = "default_avg_budget")]
    pub avg_budget: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mode")]
    pub mode: SelectionMode,
    /// Drawn at random when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theme: Option<String>,
}

impl SessionSpec {
    pub fn new(k: usize, tau: u32, avg_budget: f64, seed: u64) -> Self {
        SessionSpec {
            k,
            tau,
            avg_budget,
            epsilon: default_epsilon(),
            delta: default_delta(),
            mode: default_mode(),
            seed: Some(seed),
            theme: None,
        }
    }

    pub fn total_budget(&self, catalog_size: usize) -> u64 {
        ExpGreedyConfig::average_budget(catalog_size, self.k, self.avg_budget)
    }

    /// The configuration an in-process run needs to reproduce this session.
    pub fn expgreedy_config(&self, catalog_size: usize) -> ServiceResult<ExpGreedyConfig> {
        if self.tau == 0 {
            return Err(ServiceError::BadRequest("tau must be at least 1".into()));
        }
        if !(self.avg_budget >= 1.0 && self.avg_budget.is_finite()) {
            return Err(ServiceError::BadRequest(format!(
                "avg_budget must be at least 1, got {}",
                self.avg_budget
            )));
        }
        let seed = self
            .seed
            .ok_or_else(|| ServiceError::BadRequest("session has no seed".into()))?;
        // a mean of tau binary answers is 1/(2 sqrt(tau))-sub-Gaussian whatever the answerer
        let r = 0.5 / (self.tau as f64).sqrt();
        let channel = ObservationChannel::External {
            tau: self.tau,
            r_bound: Some(r),
        };
        let mut config =
            ExpGreedyConfig::new(self.k, self.epsilon, self.delta, self.mode, channel, r, seed);
        config.budget = Some(self.total_budget(catalog_size));
        config.opponent_pool = OpponentPool::Candidates;
        config.validate(catalog_size)?;
        Ok(config)
    }
}

/// Display fields of one catalog item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayItem {
    pub id: ItemId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_url: Option<String>,
}

/// The item catalog of a session, kept in its function-file form.
#[derive(Debug, Clone)]
pub struct Catalog {
    file: FunctionFile,
    items: Vec<DisplayItem>,
}

impl Catalog {
    pub fn from_file(file: FunctionFile) -> ServiceResult<Self> {
        let f = file.clone().build()?;
        Ok(Self::with_function(file, &f))
    }

    pub fn from_function(f: &AnyFunction) -> Self {
        Self::with_function(FunctionFile::from_function(f), f)
    }

    fn with_function(file: FunctionFile, f: &AnyFunction) -> Self {
        let items = match f.items() {
            Some(items) => items
                .iter()
                .map(|m| DisplayItem {
                    id: m.id,
                    label: m.label.clone(),
                    image_url: m.image_url.clone(),
                })
                .collect(),
            None => (0..f.ground_size())
                .map(|i| DisplayItem {
                    id: ItemId(i),
                    label: None,
                    image_url: None,
                })
                .collect(),
        };
        Catalog { file, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[DisplayItem] {
        &self.items
    }

    pub fn file(&self) -> &FunctionFile {
        &self.file
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preferred {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingAnswer,
    Done,
}

/// The question currently put to the operator: would `item_a` or
/// `item_b` improve the summary `context` more?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub query_id: String,
    pub item_a: ItemId,
    pub item_b: ItemId,
    pub context: Vec<ItemId>,
    /// Milliseconds since the Unix epoch.
    pub issued_at: u64,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerEvent {
    pub seq: u64,
    pub query_id: String,
    pub preferred: Preferred,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub session_id: String,
    pub selected: Vec<ItemId>,
    pub iteration: usize,
    pub k: usize,
    pub spent: u64,
    pub total_budget: u64,
    pub answered: u64,
    pub phase: Phase,
    pub tau: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theme: Option<String>,
}

/// What `session.json` holds; with the event log it determines the session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub spec: SessionSpec,
    pub catalog: FunctionFile,
    pub created_at: u64,
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct Session {
    id: String,
    spec: SessionSpec,
    catalog: Catalog,
    engine: ExpGreedy,
    total_budget: u64,
    pending: Option<PendingQuery>,
    answered: u64,
    created_at: u64,
    log: Option<File>,
}

impl Session {
    /// Starts a session. `spec.seed` must be set.
    pub fn new(id: String, spec: SessionSpec, catalog: Catalog) -> ServiceResult<Self> {
        if catalog.is_empty() {
            return Err(ServiceError::BadRequest("catalog is empty".into()));
        }
        let config = spec.expgreedy_config(catalog.len())?;
        let engine = ExpGreedy::new(config, catalog.len())?;
        let mut s = Session {
            id,
            total_budget: spec.total_budget(catalog.len()),
            spec,
            catalog,
            engine,
            pending: None,
            answered: 0,
            created_at: now_millis(),
            log: None,
        };
        s.advance();
        Ok(s)
    }

    /// Writes `session.json` into `dir` and logs every later answer to
    /// `dir/events.jsonl`.
    pub fn persist_to(&mut self, dir: &Path) -> ServiceResult<()> {
        std::fs::create_dir_all(dir)?;
        let record = self.record();
        std::fs::write(dir.join(SESSION_FILE), serde_json::to_vec_pretty(&record)?)?;
        self.open_log(dir)
    }

    fn open_log(&mut self, dir: &Path) -> ServiceResult<()> {
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(EVENTS_FILE))?;
        self.log = Some(log);
        Ok(())
    }

    /// Rebuilds a persisted session by replaying its event log.
    pub fn restore(dir: &Path) -> ServiceResult<Self> {
        let record: SessionRecord =
            serde_json::from_slice(&std::fs::read(dir.join(SESSION_FILE))?)?;
        let catalog = Catalog::from_file(record.catalog)?;
        let mut s = Session::new(record.id, record.spec, catalog)?;
        s.created_at = record.created_at;
        let events = dir.join(EVENTS_FILE);
        if events.exists() {
            for line in BufReader::new(File::open(&events)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: AnswerEvent = serde_json::from_str(&line)?;
                s.check(&event.query_id)?;
                s.apply(event.preferred);
            }
        }
        s.open_log(dir)?;
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &SessionSpec {
        &self.spec
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn record(&self) -> SessionRecord {
        SessionRecord {
            id: self.id.clone(),
            spec: self.spec.clone(),
            catalog: self.catalog.file().clone(),
            created_at: self.created_at,
        }
    }

    pub fn phase(&self) -> Phase {
        if self.pending.is_some() {
            Phase::AwaitingAnswer
        } else {
            Phase::Done
        }
    }

    pub fn pending(&self) -> Option<&PendingQuery> {
        self.pending.as_ref()
    }

    pub fn selected(&self) -> &[ItemId] {
        self.engine.selected()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            session_id: self.id.clone(),
            selected: self.engine.selected().to_vec(),
            iteration: self.engine.iteration(),
            k: self.spec.k,
            spent: self.engine.spent(),
            total_budget: self.total_budget,
            answered: self.answered,
            phase: self.phase(),
            tau: self.spec.tau,
            theme: self.spec.theme.clone(),
        }
    }

    /// Accepts the answer to the pending query, logging it before it is
    /// applied.
    pub fn answer(&mut self, query_id: &str, preferred: Preferred) -> ServiceResult<AnswerEvent> {
        self.check(query_id)?;
        let event = AnswerEvent {
            seq: self.answered + 1,
            query_id: query_id.to_string(),
            preferred,
            timestamp: now_millis(),
        };
        if let Some(log) = self.log.as_mut() {
            let mut line = serde_json::to_vec(&event)?;
            line.push(b'\n');
            log.write_all(&line)?;
            log.sync_data()?;
        }
        self.apply(preferred);
        Ok(event)
    }

    fn check(&self, query_id: &str) -> ServiceResult<()> {
        match &self.pending {
            None => Err(ServiceError::Conflict("session is done".into())),
            Some(p) if p.query_id != query_id => Err(ServiceError::Conflict(format!(
                "query {query_id} is not pending; the pending query is {}",
                p.query_id
            ))),
            Some(_) => Ok(()),
        }
    }

    fn apply(&mut self, preferred: Preferred) {
        let y = match preferred {
            Preferred::A => 1.0,
            Preferred::B => 0.0,
        };
        self.engine
            .submit(y)
            .expect("a comparison is pending and the answer is binary");
        self.answered += 1;
        self.advance();
    }

    fn advance(&mut self) {
        self.pending = self.engine.next_query().map(|q| {
            let Query::Compare { item, opponent } = q else {
                unreachable!("external channel issues comparisons only")
            };
            PendingQuery {
                query_id: format!("q{}", self.answered + 1),
                item_a: item,
                item_b: opponent,
                context: self.engine.selected().to_vec(),
                issued_at: now_millis(),
            }
        });
    }
}

pub const SESSION_FILE: &str = "session.json";
pub const EVENTS_FILE: &str = "events.jsonl";

/// Directories under `root` that hold a persisted session.
pub fn persisted_sessions(root: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    if !root.exists() {
        return Ok(dirs);
    }
    for entry in std::fs::read_dir(root)? {
        let path = entry?.path();
        if path.join(SESSION_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use expgreedy::function::fixtures;

    fn catalog(n: usize) -> Catalog {
        Catalog::from_function(&AnyFunction::Coverage(fixtures::random_coverage(n, 3)))
    }

    #[test]
    fn default_budget_arithmetic() {
        let spec = SessionSpec::new(6, 3, 25.0, 1);
        assert_eq!(spec.total_budget(60), 9000);
    }

    #[test]
    fn fresh_session_asks_with_empty_context() {
        let s = Session::new("s".into(), SessionSpec::new(3, 3, 10.0, 5), catalog(10)).unwrap();
        let q = s.pending().unwrap();
        assert!(q.context.is_empty());
        assert_ne!(q.item_a, q.item_b);
        assert_eq!(q.query_id, "q1");
        let sum = s.summary();
        assert_eq!(sum.iteration, 1);
        assert!(sum.selected.is_empty());
        assert_eq!(sum.phase, Phase::AwaitingAnswer);
    }

    #[test]
    fn tau_answers_make_one_observation() {
        let mut s = Session::new("s".into(), SessionSpec::new(2, 3, 10.0, 5), catalog(6)).unwrap();
        let first = s.pending().unwrap().item_a;
        for _ in 0..3 {
            assert_eq!(s.pending().unwrap().item_a, first);
            let id = s.pending().unwrap().query_id.clone();
            s.answer(&id, Preferred::A).unwrap();
        }
        assert_eq!(s.summary().spent, 3);
        assert_ne!(s.pending().unwrap().item_a, first);
    }

    #[test]
    fn stale_answers_are_rejected() {
        let mut s = Session::new("s".into(), SessionSpec::new(1, 1, 1.0, 2), catalog(4)).unwrap();
        s.answer("q1", Preferred::B).unwrap();
        let before = s.summary();
        assert!(matches!(s.answer("q1", Preferred::B), Err(ServiceError::Conflict(_))));
        assert_eq!(s.summary(), before);
    }

    #[test]
    fn two_item_session_finishes_within_budget() {
        let mut s = Session::new("s".into(), SessionSpec::new(1, 1, 1.0, 9), catalog(2)).unwrap();
        let budget = s.summary().total_budget;
        assert_eq!(budget, 2);
        while let Some(q) = s.pending().cloned() {
            s.answer(&q.query_id, Preferred::A).unwrap();
            assert!(s.summary().answered <= budget);
        }
        let sum = s.summary();
        assert_eq!(sum.phase, Phase::Done);
        assert_eq!(sum.selected.len(), 1);
        assert!(matches!(s.answer("q99", Preferred::A), Err(ServiceError::Conflict(_))));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let cat = catalog(4);
        for spec in [
            SessionSpec::new(5, 3, 10.0, 1),
            SessionSpec::new(0, 3, 10.0, 1),
            SessionSpec::new(2, 0, 10.0, 1),
            SessionSpec::new(2, 3, 0.5, 1),
        ] {
            let r = Session::new("s".into(), spec, cat.clone());
            assert!(matches!(r, Err(ServiceError::BadRequest(_))));
        }
    }

    #[test]
    fn restore_replays_the_log() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SessionSpec::new(3, 3, 5.0, 11);
        let mut s = Session::new("abc".into(), spec, catalog(8)).unwrap();
        s.persist_to(dir.path()).unwrap();
        for i in 0..40 {
            let Some(q) = s.pending().cloned() else { break };
            let p = if i % 3 == 0 { Preferred::B } else { Preferred::A };
            s.answer(&q.query_id, p).unwrap();
        }
        let restored = Session::restore(dir.path()).unwrap();
        assert_eq!(restored.summary(), s.summary());
        assert_eq!(
            restored.pending().map(|q| (&q.query_id, q.item_a, q.item_b)),
            s.pending().map(|q| (&q.query_id, q.item_a, q.item_b))
        );
    }
}
