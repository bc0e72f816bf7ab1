//! Step 3 comparison table and plot-ready aggregates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mwu::mann_whitney_u;
use super::stats::{acr, pareto_counts, run_lengths, GroupBy, GroupCount, RunLengths};
use super::DecisionRow;
use crate::error::{Error, Result};
use crate::testbed::ProblemId;
use crate::trace::Trace;
use crate::uncertainty::UqMeasure;

pub const TABLE1_HEADER: [&str; 4] = [
    "test function",
    "ACR Pareto mean (sd)",
    "ACR not-Pareto mean (sd)",
    "U Mann-Whitney test p-value",
];

/// A mean with its sample standard deviation, shown as `mean (sd)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// `None` for a single observation.
    pub sd: Option<f64>,
    pub n: usize,
}

impl MeanSd {
    pub fn from_sample(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| {
            let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Some(Self { mean, sd, n })
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sd {
            Some(sd) => write!(f, "{:.3} ({:.3})", self.mean, sd),
            None => write!(f, "{:.3} (NA)", self.mean),
        }
    }
}

impl FromStr for MeanSd {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input(format!("expected 'mean (sd)', got '{s}'"));
        let (mean, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let sd = rest.strip_suffix(')').ok_or_else(bad)?.trim();
        Ok(Self {
            mean: mean.trim().parse().map_err(|_| bad())?,
            sd: match sd {
                "NA" => None,
                v => Some(v.parse().map_err(|_| bad())?),
            },
            n: 0,
        })
    }
}

/// `<0.001`, or three decimals; a trailing `*` marks p < 0.05.
pub fn format_p_value(p: Option<f64>) -> String {
    match p {
        None => "NA".into(),
        Some(p) if p < 0.001 => "<0.001*".into(),
        Some(p) => format!("{p:.3}{}", if p < 0.05 { "*" } else { "" }),
    }
}

pub fn parse_p_value(s: &str) -> Result<Option<f64>> {
    let t = s.trim().trim_end_matches('*');
    if t == "NA" {
        return Ok(None);
    }
    if let Some(v) = t.strip_prefix('<') {
        // only the bound is known
        return v
            .parse::<f64>()
            .map(|b| Some(b / 2.0))
            .map_err(|_| Error::input(format!("bad p-value '{s}'")));
    }
    t.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::input(format!("bad p-value '{s}'")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub problem_id: String,
    pub pareto: Option<MeanSd>,
    pub not_pareto: Option<MeanSd>,
    pub p_value: Option<f64>,
}

impl Table1Row {
    pub fn cells(&self) -> [String; 4] {
        let cell = |m: &Option<MeanSd>| m.map(|m| m.to_string()).unwrap_or_else(|| "NA".into());
        [
            self.problem_id.clone(),
            cell(&self.pareto),
            cell(&self.not_pareto),
            format_p_value(self.p_value),
        ]
    }
}

fn problem_order(id: &str) -> (usize, String) {
    let rank = id
        .parse::<ProblemId>()
        .ok()
        .and_then(|p| ProblemId::ALL.iter().position(|&q| q == p))
        .unwrap_or(usize::MAX);
    (rank, id.to_string())
}

/// Per (benchmark rank, problem): ACR values of rational and of non-rational decisions.
pub type AcrGroups = BTreeMap<(usize, String), (Vec<f64>, Vec<f64>)>;

/// ACR of every analyzable decision under `measure`, split by rationality,
/// keyed by problem.
pub fn acr_by_class(rows: &[DecisionRow], traces: &[Trace], measure: UqMeasure, threshold: f64) -> Result<AcrGroups> {
    let index: HashMap<(&str, &str), &Trace> = traces
        .iter()
        .map(|t| ((t.player_id.as_str(), t.problem_id.as_str()), t))
        .collect();
    let mut groups = AcrGroups::new();
    for r in rows.iter().filter(|r| r.measure == measure) {
        let Some(rational) = r.is_rational(threshold) else {
            continue;
        };
        let trace = index
            .get(&(r.user_id.as_str(), r.problem_id.as_str()))
            .ok_or_else(|| Error::input(format!("no trace for {}/{}", r.user_id, r.problem_id)))?;
        let value = acr(trace, r.step)?.acr;
        let g = groups.entry(problem_order(&r.problem_id)).or_default();
        if rational {
            g.0.push(value);
        } else {
            g.1.push(value);
        }
    }
    Ok(groups)
}

/// Per problem, ACR of rational vs non-rational decisions and the
/// Mann–Whitney p-value, in benchmark order.
pub fn step3_report(
    rows: &[DecisionRow],
    traces: &[Trace],
    measure: UqMeasure,
    threshold: f64,
) -> Result<Vec<Table1Row>> {
    acr_by_class(rows, traces, measure, threshold)?
        .into_iter()
        .map(|((_, problem_id), (yes, no))| {
            let p_value = if yes.is_empty() || no.is_empty() {
                None
            } else {
                Some(mann_whitney_u(&yes, &no)?.p_value)
            };
            Ok(Table1Row {
                problem_id,
                pareto: MeanSd::from_sample(&yes),
                not_pareto: MeanSd::from_sample(&no),
                p_value,
            })
        })
        .collect()
}

pub fn write_table1<W: Write>(rows: &[Table1Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE1_HEADER)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a summary table file, comma- or tab-separated.
pub fn read_table1<R: Read>(mut input: R, delimiter: u8) -> Result<Vec<Table1Row>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut r = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(TABLE1_HEADER) {
        return Err(Error::input(format!(
            "table header must be {:?}, got {:?}",
            TABLE1_HEADER,
            header.iter().collect::<Vec<_>>()
        )));
    }
    let cell = |s: &str| -> Result<Option<MeanSd>> {
        match s.trim() {
            "NA" | "" => Ok(None),
            v => v.parse().map(Some),
        }
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(Table1Row {
                problem_id: rec[0].trim().to_string(),
                pareto: cell(&rec[1])?,
                not_pareto: cell(&rec[2])?,
                p_value: parse_p_value(&rec[3])?,
            })
        })
        .collect()
}

/// Number of groups whose rational percentage falls in each 10% bucket;
/// bucket `k` covers `[10k, 10k + 10)` and the last one includes 100.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentHistogram {
    pub group_by: GroupBy,
    pub measure: UqMeasure,
    pub buckets: [usize; 10],
}

pub fn percent_histograms(counts: &[GroupCount]) -> Vec<PercentHistogram> {
    let mut acc: BTreeMap<(GroupBy, UqMeasure), [usize; 10]> = BTreeMap::new();
    for c in counts {
        let k = ((c.percent / 10.0).floor() as usize).min(9);
        acc.entry((c.group_by, c.measure)).or_default()[k] += 1;
    }
    acc.into_iter()
        .map(|((group_by, measure), buckets)| PercentHistogram {
            group_by,
            measure,
            buckets,
        })
        .collect()
}

/// `(measure, run length) → occurrences` over all sequences.
pub fn run_length_histogram(runs: &[RunLengths]) -> BTreeMap<(UqMeasure, usize), usize> {
    let mut acc = BTreeMap::new();
    for r in runs {
        for &len in &r.runs {
            *acc.entry((r.measure, len)).or_default() += 1;
        }
    }
    acc
}

fn csv_file(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<csv::Writer<File>> {
    let path = dir.join(name);
    let w = csv::Writer::from_path(&path)?;
    written.push(path);
    Ok(w)
}

/// Writes every report table into `dir` and returns the paths written.
///
/// Files: rational counts, run lengths and their histogram, percentage
/// histograms, per-step distance series, and per measure the summary
/// comparison (CSV and JSON) with its underlying ACR values.
pub fn write_report(
    dir: &Path,
    rows: &[DecisionRow],
    traces: &[Trace],
    measures: &[UqMeasure],
    threshold: f64,
) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::input("decision table is empty"));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let counts = pareto_counts(rows, threshold);
    let mut w = csv_file(dir, "counts.csv", &mut written)?;
    w.write_record(["group_by", "key", "uncertainty_measure", "rational", "total", "percent"])?;
    for c in &counts {
        let g = match c.group_by {
            GroupBy::Player => "player",
            GroupBy::Problem => "problem",
        };
        w.write_record([
            g,
            &c.key,
            c.measure.name(),
            &c.rational.to_string(),
            &c.total.to_string(),
            &format!("{:?}", c.percent),
        ])?;
    }
    w.flush()?;

    let mut w = csv_file(dir, "percent_histogram.csv", &mut written)?;
    w.write_record(["group_by", "uncertainty_measure", "bucket_low", "bucket_high", "count"])?;
    for h in percent_histograms(&counts) {
        let g = match h.group_by {
            GroupBy::Player => "player",
            GroupBy::Problem => "problem",
        };
        for (k, n) in h.buckets.iter().enumerate() {
            w.write_record([
                g,
                h.measure.name(),
                &(10 * k).to_string(),
                &(10 * k + 10).to_string(),
                &n.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let runs = run_lengths(rows, threshold);
    let mut w = csv_file(dir, "run_lengths.csv", &mut written)?;
    w.write_record(["user_id", "problem_id", "uncertainty_measure", "run", "length"])?;
    for r in &runs {
        for (i, len) in r.runs.iter().enumerate() {
            w.write_record([
                r.user_id.as_str(),
                &r.problem_id,
                r.measure.name(),
                &(i + 1).to_string(),
                &len.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv_file(dir, "run_length_histogram.csv", &mut written)?;
    w.write_record(["uncertainty_measure", "length", "count"])?;
    for ((m, len), n) in run_length_histogram(&runs) {
        w.write_record([m.name(), &len.to_string(), &n.to_string()])?;
    }
    w.flush()?;

    let mut series: Vec<&DecisionRow> = rows.iter().collect();
    series.sort_by(|a, b| {
        (&a.user_id, &a.problem_id, a.measure, a.step).cmp(&(&b.user_id, &b.problem_id, b.measure, b.step))
    });
    let mut w = csv_file(dir, "distance_series.csv", &mut written)?;
    w.write_record([
        "user_id",
        "problem_id",
        "uncertainty_measure",
        "step",
        "min_dist",
        "rational",
    ])?;
    for r in series {
        w.write_record([
            r.user_id.as_str(),
            &r.problem_id,
            r.measure.name(),
            &r.step.to_string(),
            &r.min_dist.map(|d| format!("{d:?}")).unwrap_or_default(),
            &r.is_rational(threshold).map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    for &m in measures {
        let table = step3_report(rows, traces, m, threshold)?;
        let path = dir.join(format!("table1_{m}.csv"));
        write_table1(&table, File::create(&path)?)?;
        written.push(path);
        let path = dir.join(format!("table1_{m}.json"));
        serde_json::to_writer_pretty(File::create(&path)?, &table)?;
        written.push(path);

        let mut w = csv_file(dir, &format!("acr_boxplot_{m}.csv"), &mut written)?;
        w.write_record(["problem_id", "class", "acr"])?;
        for ((_, prob), (yes, no)) in acr_by_class(rows, traces, m, threshold)? {
            for (class, vals) in [("pareto", yes), ("not_pareto", no)] {
                for v in vals {
                    w.write_record([prob.as_str(), class, &format!("{v:?}")])?;
                }
            }
        }
        w.flush()?;
    }
    Ok(written)
}
