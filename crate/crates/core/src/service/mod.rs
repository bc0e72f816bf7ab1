//! Game sessions: problem sequence, click validation and scoring, and the
//! persistent click log. [`http`] exposes the store over HTTP+JSON.

pub mod http;
pub mod log;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::Utc;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use self::log::{
    read_records, sessions_path, traces_from_records, ClickRecord, LogWriter, SessionRecord, TraceFilter, LOG_VERSION,
};
use crate::error::{Error, Result};
use crate::testbed::{problem, ProblemId, TestProblem};
use crate::trace::{GameMode, Trace, DEFAULT_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Finished,
}

/// What a player is shown about a problem. The optimum is only included in
/// mode 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemView {
    pub problem_id: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_score: Option<f64>,
}

impl ProblemView {
    fn new(p: &TestProblem, mode: GameMode) -> Self {
        Self {
            problem_id: p.id.as_str().to_string(),
            lower: p.domain.lower().to_vec(),
            upper: p.domain.upper().to_vec(),
            target_score: (mode == GameMode::KnownTarget).then(|| p.optimum_score()),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct CreateSession {
    pub player_id: String,
    pub mode: u8,
    #[serde(default)]
    pub problems: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget: Option<usize>,
}

/// Snapshot of a session returned to clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub player_id: String,
    pub mode: GameMode,
    pub status: SessionStatus,
    pub problems: Vec<String>,
    pub seed: u64,
    pub budget: usize,
    pub problem_index: usize,
    /// `None` once the session is finished.
    pub current_problem: Option<ProblemView>,
    pub remaining: usize,
    /// Clicks on the current problem, or on the last one once finished.
    pub clicks: Vec<ClickRecord>,
    /// Click counts per problem, in session order.
    pub clicks_per_problem: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickOutcome {
    pub event: ClickRecord,
    /// Shots left on the problem that was clicked.
    pub remaining: usize,
    pub advanced: bool,
    pub status: SessionStatus,
    pub next_problem: Option<ProblemView>,
}

#[derive(Debug)]
struct Session {
    record: SessionRecord,
    problems: Vec<TestProblem>,
    clicks: Vec<Vec<ClickRecord>>,
}

impl Session {
    fn current(&self) -> Option<usize> {
        self.clicks.iter().position(|c| c.len() < self.record.budget)
    }

    fn status(&self) -> SessionStatus {
        match self.current() {
            Some(_) => SessionStatus::Active,
            None => SessionStatus::Finished,
        }
    }

    fn view(&self) -> SessionView {
        let cur = self.current();
        let shown = cur.unwrap_or(self.problems.len() - 1);
        SessionView {
            session_id: self.record.session_id.clone(),
            player_id: self.record.player_id.clone(),
            mode: self.record.mode,
            status: self.status(),
            problems: self.record.problems.clone(),
            seed: self.record.seed,
            budget: self.record.budget,
            problem_index: shown,
            current_problem: cur.map(|i| ProblemView::new(&self.problems[i], self.record.mode)),
            remaining: self.record.budget - self.clicks[shown].len(),
            clicks: self.clicks[shown].clone(),
            clicks_per_problem: self.clicks.iter().map(Vec::len).collect(),
        }
    }
}

/// All sessions plus the writers for the click log and session registry.
#[derive(Debug)]
pub struct SessionStore {
    log_path: PathBuf,
    sessions: HashMap<String, Session>,
    clicks: LogWriter,
    registry: LogWriter,
}

impl SessionStore {
    /// Opens (or creates) the log at `log_path` and replays existing sessions.
    pub fn open(log_path: &Path) -> Result<Self> {
        let reg_path = sessions_path(log_path);
        let mut sessions = HashMap::new();
        for rec in read_records::<SessionRecord>(&reg_path)? {
            let problems = match rec.problems.iter().map(|p| problem(p)).collect::<Result<Vec<_>>>() {
                Ok(p) if !p.is_empty() => p,
                _ => {
                    ::log::warn!("session {}: unusable problem list, skipped", rec.session_id);
                    continue;
                }
            };
            let clicks = vec![Vec::new(); problems.len()];
            sessions.insert(
                rec.session_id.clone(),
                Session {
                    record: rec,
                    problems,
                    clicks,
                },
            );
        }
        for c in read_records::<ClickRecord>(log_path)? {
            let Some(s) = sessions.get_mut(&c.session_id) else {
                ::log::warn!("click for unknown session {} ignored on replay", c.session_id);
                continue;
            };
            match s.record.problems.iter().position(|p| *p == c.problem_id) {
                Some(i) if s.clicks[i].len() < s.record.budget => s.clicks[i].push(c),
                _ => ::log::warn!("session {}: unexpected click ignored on replay", c.session_id),
            }
        }
        Ok(Self {
            log_path: log_path.to_path_buf(),
            clicks: LogWriter::open(log_path)?,
            registry: LogWriter::open(&reg_path)?,
            sessions,
        })
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn create_session(&mut self, req: CreateSession) -> Result<SessionView> {
        let mode = GameMode::try_from(req.mode)?;
        if req.player_id.trim().is_empty() {
            return Err(Error::input("player_id must not be empty"));
        }
        let budget = req.budget.unwrap_or(DEFAULT_BUDGET);
        if budget == 0 {
            return Err(Error::input("budget must be >= 1"));
        }
        let seed = req.seed.unwrap_or_else(rand::random);
        let problems = match req.problems {
            Some(ids) if !ids.is_empty() => ids.iter().map(|p| problem(p)).collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(Error::input("problem list must not be empty")),
            None => {
                let mut all: Vec<TestProblem> = ProblemId::ALL.iter().map(|&id| TestProblem::new(id)).collect();
                all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                all
            }
        };
        let record = SessionRecord {
            v: LOG_VERSION,
            session_id: uuid::Uuid::new_v4().to_string(),
            player_id: req.player_id,
            mode,
            problems: problems.iter().map(|p| p.id.as_str().to_string()).collect(),
            seed,
            budget,
            created: Utc::now(),
        };
        self.registry.append(&record)?;
        let session = Session {
            clicks: vec![Vec::new(); problems.len()],
            record,
            problems,
        };
        let view = session.view();
        self.sessions.insert(view.session_id.clone(), session);
        Ok(view)
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView> {
        self.sessions
            .get(id)
            .map(Session::view)
            .ok_or_else(|| Error::NotFound(format!("session {id}")))
    }

    /// Scores `x` on the session's current problem and persists the click
    /// before returning.
    pub fn submit_click(&mut self, id: &str, x: [f64; 2]) -> Result<ClickOutcome> {
        let session = self
            .sessions
            .get_mut(id)
            .ok_or_else(|| Error::NotFound(format!("session {id}")))?;
        let idx = session
            .current()
            .ok_or_else(|| Error::State(format!("session {id} is finished")))?;
        let prob = &session.problems[idx];
        let score = prob.score(&x)?;
        let done = &session.clicks[idx];
        let event = ClickRecord {
            v: LOG_VERSION,
            session_id: id.to_string(),
            player_id: session.record.player_id.clone(),
            problem_id: prob.id.as_str().to_string(),
            mode: session.record.mode,
            click_index: done.len() + 1,
            x,
            score,
            cum_score: done.last().map_or(0.0, |c| c.cum_score) + score,
            ts: Utc::now(),
        };
        self.clicks.append(&event)?;
        session.clicks[idx].push(event.clone());
        let remaining = session.record.budget - session.clicks[idx].len();
        let next = session.current();
        Ok(ClickOutcome {
            event,
            remaining,
            advanced: next != Some(idx),
            status: session.status(),
            next_problem: next
                .filter(|&n| n != idx)
                .map(|n| ProblemView::new(&session.problems[n], session.record.mode)),
        })
    }

    /// Traces held by this store, matching `filter`.
    pub fn export(&self, filter: &TraceFilter) -> Result<Vec<Trace>> {
        let clicks: Vec<ClickRecord> = read_records(&self.log_path)?;
        let regs: Vec<SessionRecord> = read_records(&sessions_path(&self.log_path))?;
        Ok(traces_from_records(&clicks, &regs, filter))
    }
}

/// Problem catalog as shown to players (no optimum).
pub fn problem_catalog() -> Vec<ProblemView> {
    ProblemId::ALL
        .iter()
        .map(|&id| ProblemView::new(&TestProblem::new(id), GameMode::BestScore))
        .collect()
}
