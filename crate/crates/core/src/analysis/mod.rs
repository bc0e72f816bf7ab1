//! Post-hoc analysis of decision traces.
//!
//! Step 1 builds the decision table: for every decision after the initial
//! design, one GP per kernel is fitted on the preceding prefix and the
//! decision's distance to each kernel's frontier is recorded, keeping the
//! minimum. Steps 2 and 3 ([`stats`], [`report`]) aggregate the table.

mod mwu;
pub mod report;
pub mod stats;

use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{fit_gp, Dataset, FitOptions, GpPosterior};
use crate::kernel::KernelKind;
use crate::pareto::{build_grid, classify_decision, DistanceOptions, DEFAULT_THRESHOLD};
use crate::testbed::{problem, TestProblem};
use crate::trace::Trace;
use crate::uncertainty::{Incumbent, UqMeasure};

pub use mwu::{mann_whitney_u, MwuMethod, MwuResult};
pub use report::{read_table1, step3_report, write_report, write_table1, MeanSd, Table1Row, TABLE1_HEADER};
pub use stats::{acr, pareto_counts, run_lengths, AcrRecord, GroupBy, GroupCount, RunLengths};

/// Column names of the narrow decision table.
pub const DECISION_TABLE_HEADER: [&str; 5] = [
    "user_id",
    "problem_id",
    "step",
    "uncertainty_measure",
    "min_dist_from_Pareto_frontier",
];

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub kernels: Vec<KernelKind>,
    pub measures: Vec<UqMeasure>,
    pub grid: Vec<usize>,
    pub threshold: f64,
    pub normalize: bool,
    /// Decisions before this index are the initial design and are not classified.
    pub n_init: usize,
    pub fit: FitOptions<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            kernels: KernelKind::ALL.to_vec(),
            measures: UqMeasure::ALL.to_vec(),
            grid: vec![30, 30],
            threshold: DEFAULT_THRESHOLD,
            normalize: true,
            n_init: 3,
            fit: FitOptions::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() || self.measures.is_empty() {
            return Err(Error::input("at least one kernel and one measure are required"));
        }
        if self.n_init < 1 {
            return Err(Error::input("n_init must be >= 1"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::input(format!("threshold must be > 0, got {}", self.threshold)));
        }
        Ok(())
    }

    fn distance_options(&self) -> DistanceOptions<f64> {
        DistanceOptions {
            normalize: self.normalize,
            threshold: self.threshold,
        }
    }
}

/// One decision under one uncertainty measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub user_id: String,
    pub problem_id: String,
    /// 1-based index of the classified decision (`n + 1`).
    pub step: usize,
    pub measure: UqMeasure,
    /// `None` when no GP could be fitted for this prefix.
    pub min_dist: Option<f64>,
    pub per_kernel: Vec<(KernelKind, Option<f64>)>,
    pub diagnostic: Option<String>,
}

impl DecisionRow {
    pub fn is_rational(&self, threshold: f64) -> Option<bool> {
        self.min_dist.map(|d| d < threshold)
    }
}

fn analyze_step(
    trace: &Trace,
    prob: &TestProblem,
    grid: &[Vec<f64>],
    n: usize,
    config: &AnalysisConfig,
) -> Result<Vec<DecisionRow>> {
    let prefix_x = trace.steps[..n].iter().map(|s| s.x.clone()).collect::<Vec<_>>();
    let prefix_y = trace.steps[..n].iter().map(|s| s.y).collect::<Vec<_>>();
    let data = Dataset::new(prefix_x.clone(), prefix_y.clone(), prob.domain.clone())?;
    let x_next = &trace.steps[n].x;

    let mut gps: Vec<GpPosterior<f64>> = Vec::with_capacity(config.kernels.len());
    let mut failures = Vec::new();
    for &kind in &config.kernels {
        match fit_gp(&data, kind, &config.fit) {
            Ok(gp) => gps.push(gp),
            Err(e) => failures.push(format!("{kind}: {e}")),
        }
    }
    let incumbent = Incumbent::from_outcomes(&prefix_y).expect("nonempty prefix");
    let opts = config.distance_options();

    let mut rows = Vec::with_capacity(config.measures.len());
    for &measure in &config.measures {
        let mut diagnostic = failures.clone();
        let (min_dist, per_kernel) = if gps.is_empty() {
            (None, config.kernels.iter().map(|&k| (k, None)).collect())
        } else {
            match classify_decision(&gps, grid, measure, incumbent, &prefix_x, x_next, &opts) {
                Ok(c) => {
                    let per_kernel = config
                        .kernels
                        .iter()
                        .map(|&k| {
                            let d = c.per_kernel.iter().find(|(kk, _)| *kk == k).map(|(_, v)| v.distance);
                            (k, d)
                        })
                        .collect();
                    (Some(c.min_distance), per_kernel)
                }
                Err(e) => {
                    diagnostic.push(e.to_string());
                    (None, config.kernels.iter().map(|&k| (k, None)).collect())
                }
            }
        };
        let diagnostic = (!diagnostic.is_empty()).then(|| diagnostic.join("; "));
        if let Some(d) = &diagnostic {
            warn!(
                "{}/{} step {} {}: {}",
                trace.player_id,
                trace.problem_id,
                n + 1,
                measure,
                d
            );
        }
        rows.push(DecisionRow {
            user_id: trace.player_id.clone(),
            problem_id: trace.problem_id.clone(),
            step: n + 1,
            measure,
            min_dist,
            per_kernel,
            diagnostic,
        });
    }
    Ok(rows)
}

fn prepare(trace: &Trace, config: &AnalysisConfig) -> Result<(TestProblem, Vec<Vec<f64>>)> {
    let prob = problem(&trace.problem_id)?;
    if trace.len() <= config.n_init {
        return Err(Error::input(format!(
            "trace {}/{} has {} decisions, need at least {}",
            trace.player_id,
            trace.problem_id,
            trace.len(),
            config.n_init + 1
        )));
    }
    if let Some(s) = trace.steps.iter().find(|s| !prob.domain.contains(&s.x)) {
        return Err(prob.domain.out_of_domain(&s.x));
    }
    let grid = build_grid(&prob.domain, &config.grid)?;
    Ok((prob, grid))
}

/// Decision-table rows for one trace: `(|trace| − n_init) · |measures|` rows,
/// ordered by step then measure.
pub fn analyze_trace(trace: &Trace, config: &AnalysisConfig) -> Result<Vec<DecisionRow>> {
    analyze_traces(std::slice::from_ref(trace), config)
}

/// Analyzes many traces in parallel; output order is trace order, then step,
/// then measure, independent of scheduling.
pub fn analyze_traces(traces: &[Trace], config: &AnalysisConfig) -> Result<Vec<DecisionRow>> {
    config.validate()?;
    let prepared = traces.iter().map(|t| prepare(t, config)).collect::<Result<Vec<_>>>()?;
    let items: Vec<(usize, usize)> = traces
        .iter()
        .enumerate()
        .flat_map(|(i, t)| (config.n_init..t.len()).map(move |n| (i, n)))
        .collect();
    let chunks = items
        .par_iter()
        .map(|&(i, n)| analyze_step(&traces[i], &prepared[i].0, &prepared[i].1, n, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|d| format!("{d:?}")).unwrap_or_default()
}

/// Writes the narrow decision table. Rows whose GP fits all failed carry an
/// empty distance.
pub fn write_decision_table<W: Write>(rows: &[DecisionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DECISION_TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.user_id.as_str(),
            r.problem_id.as_str(),
            &r.step.to_string(),
            r.measure.name(),
            &fmt_opt(r.min_dist),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Narrow table plus one distance column per kernel and a diagnostic column.
pub fn write_decision_table_wide<W: Write>(rows: &[DecisionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let kernels: Vec<KernelKind> = rows
        .first()
        .map(|r| r.per_kernel.iter().map(|(k, _)| *k).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = DECISION_TABLE_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend(kernels.iter().map(|k| format!("dist_{}", k.short_name())));
    header.push("diagnostic".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.user_id.clone(),
            r.problem_id.clone(),
            r.step.to_string(),
            r.measure.name().to_string(),
            fmt_opt(r.min_dist),
        ];
        for k in &kernels {
            let d = r.per_kernel.iter().find(|(kk, _)| kk == k).and_then(|(_, d)| *d);
            rec.push(fmt_opt(d));
        }
        rec.push(r.diagnostic.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a decision table written by either writer. Extra columns after the
/// first five are ignored except `dist_<kernel>` and `diagnostic`.
pub fn read_decision_table<R: Read>(input: R) -> Result<Vec<DecisionRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 5 || header.iter().take(5).ne(DECISION_TABLE_HEADER) {
        return Err(Error::input(format!(
            "decision table header must start with {}, got {}",
            DECISION_TABLE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut kernel_cols = Vec::new();
    let mut diag_col = None;
    for (i, h) in header.iter().enumerate().skip(5) {
        if let Some(k) = h.strip_prefix("dist_") {
            kernel_cols.push((i, k.parse::<KernelKind>()?));
        } else if h == "diagnostic" {
            diag_col = Some(i);
        }
    }
    let parse_dist = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|e| Error::input(format!("line {line}: bad distance '{s}': {e}")))
    };
    let mut rows = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = idx + 2;
        let step = rec[2]
            .parse::<usize>()
            .map_err(|e| Error::input(format!("line {line}: bad step '{}': {e}", &rec[2])))?;
        let mut per_kernel = Vec::with_capacity(kernel_cols.len());
        for &(i, k) in &kernel_cols {
            per_kernel.push((k, parse_dist(rec.get(i).unwrap_or(""), line)?));
        }
        rows.push(DecisionRow {
            user_id: rec[0].to_string(),
            problem_id: rec[1].to_string(),
            step,
            measure: rec[3].parse()?,
            min_dist: parse_dist(&rec[4], line)?,
            per_kernel,
            diagnostic: diag_col
                .and_then(|i| rec.get(i))
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        });
    }
    Ok(rows)
}
