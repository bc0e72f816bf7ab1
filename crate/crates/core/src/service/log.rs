//! Append-only NDJSON click log.
//!
//! Each line is one [`ClickRecord`]. A sidecar file `<log>.sessions.ndjson`
//! holds one [`SessionRecord`] per session so budgets and problem orders
//! survive restarts.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{GameMode, Trace, TraceStep, DEFAULT_BUDGET};

/// Schema version written in every record.
pub const LOG_VERSION: u32 = 1;

/// One click, exactly as persisted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub v: u32,
    pub session_id: String,
    pub player_id: String,
    pub problem_id: String,
    pub mode: GameMode,
    /// 1-based within the problem.
    pub click_index: usize,
    pub x: [f64; 2],
    pub score: f64,
    /// Running sum of scores on this problem.
    pub cum_score: f64,
    pub ts: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub v: u32,
    pub session_id: String,
    pub player_id: String,
    pub mode: GameMode,
    pub problems: Vec<String>,
    pub seed: u64,
    pub budget: usize,
    pub created: DateTime<Utc>,
}

pub fn sessions_path(log: &Path) -> PathBuf {
    let mut s = log.as_os_str().to_owned();
    s.push(".sessions.ndjson");
    PathBuf::from(s)
}

/// Appends records, syncing each line to disk before returning.
#[derive(Debug)]
pub struct LogWriter {
    file: File,
}

impl LogWriter {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append<S: Serialize>(&mut self, record: &S) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Reads every well-formed record; malformed lines are logged and skipped.
pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => warn!("{}:{}: skipping corrupt record: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// Selects traces by player, problem and the date of their first click.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceFilter {
    pub player: Option<String>,
    pub problem: Option<String>,
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
}

impl TraceFilter {
    fn accepts(&self, t: &Trace) -> bool {
        let start = t.steps.first().map(|s| s.timestamp);
        self.player.as_ref().is_none_or(|p| *p == t.player_id)
            && self.problem.as_ref().is_none_or(|p| *p == t.problem_id)
            && self.from.is_none_or(|f| start.is_some_and(|s| s >= f))
            && self.to.is_none_or(|f| start.is_some_and(|s| s <= f))
    }
}

/// Parses an RFC 3339 instant or a `YYYY-MM-DD` date (start of day, or end of
/// day when `end_of_day`).
pub fn parse_instant(s: &str, end_of_day: bool) -> Result<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::input(format!("expected RFC 3339 time or YYYY-MM-DD, got '{s}'")))?;
    let t = if end_of_day {
        d.and_hms_nano_opt(23, 59, 59, 999_999_999)
    } else {
        d.and_hms_opt(0, 0, 0)
    };
    Ok(t.expect("valid time").and_utc())
}

/// Rebuilds traces from click records, one per (session, problem), in order
/// of first appearance. Steps are ordered by click index; a repeated index
/// keeps the first record.
pub fn traces_from_records(clicks: &[ClickRecord], sessions: &[SessionRecord], filter: &TraceFilter) -> Vec<Trace> {
    let budgets: HashMap<&str, usize> = sessions.iter().map(|s| (s.session_id.as_str(), s.budget)).collect();
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut groups: HashMap<(&str, &str), Vec<&ClickRecord>> = HashMap::new();
    for c in clicks {
        let key = (c.session_id.as_str(), c.problem_id.as_str());
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(c);
    }
    order
        .into_iter()
        .filter_map(|key| {
            let mut recs = groups.remove(&key)?;
            recs.sort_by_key(|c| c.click_index);
            recs.dedup_by_key(|c| c.click_index);
            let first = recs[0];
            let trace = Trace {
                player_id: first.player_id.clone(),
                problem_id: first.problem_id.clone(),
                mode: first.mode,
                steps: recs
                    .iter()
                    .map(|c| TraceStep {
                        x: c.x.to_vec(),
                        y: c.score,
                        timestamp: c.ts,
                    })
                    .collect(),
                budget: budgets.get(key.0).copied().unwrap_or(DEFAULT_BUDGET),
            };
            filter.accepts(&trace).then_some(trace)
        })
        .collect()
}

/// Reads the log at `path` (and its sessions sidecar) into traces.
pub fn export_traces(path: &Path, filter: &TraceFilter) -> Result<Vec<Trace>> {
    if !path.exists() {
        return Err(Error::input(format!("trace log {} does not exist", path.display())));
    }
    let clicks: Vec<ClickRecord> = read_records(path)?;
    let sessions: Vec<SessionRecord> = read_records(&sessions_path(path))?;
    Ok(traces_from_records(&clicks, &sessions, filter))
}

/// Writes traces as a fresh log plus sidecar, one synthetic session per trace.
/// Existing files are replaced.
pub fn write_traces(path: &Path, traces: &[Trace]) -> Result<()> {
    let mut log = std::io::BufWriter::new(File::create(path)?);
    let mut reg = std::io::BufWriter::new(File::create(sessions_path(path))?);
    for (i, t) in traces.iter().enumerate() {
        let session_id = format!("sim-{i:05}-{}-{}", t.player_id, t.problem_id);
        let created = t.steps.first().map(|s| s.timestamp).unwrap_or(DateTime::UNIX_EPOCH);
        let rec = SessionRecord {
            v: LOG_VERSION,
            session_id: session_id.clone(),
            player_id: t.player_id.clone(),
            mode: t.mode,
            problems: vec![t.problem_id.clone()],
            seed: 0,
            budget: t.budget,
            created,
        };
        serde_json::to_writer(&mut reg, &rec)?;
        reg.write_all(b"\n")?;
        let mut cum = 0.0;
        for (k, s) in t.steps.iter().enumerate() {
            let x: [f64; 2] =
                s.x.as_slice()
                    .try_into()
                    .map_err(|_| Error::input(format!("trace points must be 2-D, got {}", s.x.len())))?;
            cum += s.y;
            let c = ClickRecord {
                v: LOG_VERSION,
                session_id: session_id.clone(),
                player_id: t.player_id.clone(),
                problem_id: t.problem_id.clone(),
                mode: t.mode,
                click_index: k + 1,
                x,
                score: s.y,
                cum_score: cum,
                ts: s.timestamp,
            };
            serde_json::to_writer(&mut log, &c)?;
            log.write_all(b"\n")?;
        }
    }
    log.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    reg.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    Ok(())
}
