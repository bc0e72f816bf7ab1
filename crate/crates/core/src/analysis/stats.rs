//! Step 2 aggregates: rational-decision counts, run lengths and ACR.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DecisionRow;
use crate::error::{Error, Result};
use crate::trace::Trace;
use crate::uncertainty::UqMeasure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Player,
    Problem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupCount {
    pub group_by: GroupBy,
    pub key: String,
    pub measure: UqMeasure,
    pub rational: usize,
    /// Analyzable decisions; rows without a distance are excluded.
    pub total: usize,
    pub percent: f64,
}

/// Rational-decision counts grouped by player and by problem, per measure.
///
/// Output is sorted by (grouping, key, measure).
pub fn pareto_counts(rows: &[DecisionRow], threshold: f64) -> Vec<GroupCount> {
    let mut acc: BTreeMap<(GroupBy, String, UqMeasure), (usize, usize)> = BTreeMap::new();
    for r in rows {
        let Some(rational) = r.is_rational(threshold) else {
            continue;
        };
        for (g, key) in [(GroupBy::Player, &r.user_id), (GroupBy::Problem, &r.problem_id)] {
            let e = acc.entry((g, key.clone(), r.measure)).or_default();
            e.0 += rational as usize;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|((group_by, key, measure), (rational, total))| GroupCount {
            group_by,
            key,
            measure,
            rational,
            total,
            percent: 100.0 * rational as f64 / total as f64,
        })
        .collect()
}

/// Maximal runs of consecutive rational decisions in one (player, problem,
/// measure) sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLengths {
    pub user_id: String,
    pub problem_id: String,
    pub measure: UqMeasure,
    pub runs: Vec<usize>,
}

/// Runs are broken by a non-rational decision, by a gap in step numbers and
/// by rows without a distance.
pub fn run_lengths(rows: &[DecisionRow], threshold: f64) -> Vec<RunLengths> {
    let mut seqs: BTreeMap<(&str, &str, UqMeasure), Vec<&DecisionRow>> = BTreeMap::new();
    for r in rows {
        seqs.entry((&r.user_id, &r.problem_id, r.measure)).or_default().push(r);
    }
    seqs.into_iter()
        .map(|((user, prob, measure), mut seq)| {
            seq.sort_by_key(|r| r.step);
            let mut runs = Vec::new();
            let mut current = 0usize;
            let mut last_step = None;
            for r in seq {
                let contiguous = last_step.is_some_and(|s| s + 1 == r.step);
                if !contiguous && current > 0 {
                    runs.push(current);
                    current = 0;
                }
                if r.is_rational(threshold) == Some(true) {
                    current += 1;
                } else if current > 0 {
                    runs.push(current);
                    current = 0;
                }
                last_step = Some(r.step);
            }
            if current > 0 {
                runs.push(current);
            }
            RunLengths {
                user_id: user.to_string(),
                problem_id: prob.to_string(),
                measure,
                runs,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcrRecord {
    pub user_id: String,
    pub problem_id: String,
    pub step: usize,
    pub acr: f64,
}

/// Average cumulative reward before decision `step`: the mean of the first
/// `step − 1` outcomes.
pub fn acr(trace: &Trace, step: usize) -> Result<AcrRecord> {
    let n = step.wrapping_sub(1);
    if n < 1 || n > trace.len() {
        return Err(Error::input(format!(
            "ACR step must be in [2, {}], got {step}",
            trace.len() + 1
        )));
    }
    let sum: f64 = trace.steps[..n].iter().map(|s| s.y).sum();
    Ok(AcrRecord {
        user_id: trace.player_id.clone(),
        problem_id: trace.problem_id.clone(),
        step,
        acr: sum / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use crate::trace::{GameMode, TraceStep};
    use chrono::DateTime;
    use proptest::prelude::*;

    fn row(user: &str, prob: &str, step: usize, d: Option<f64>) -> DecisionRow {
        DecisionRow {
            user_id: user.into(),
            problem_id: prob.into(),
            step,
            measure: UqMeasure::Sigma,
            min_dist: d,
            per_kernel: vec![(KernelKind::Matern52, d)],
            diagnostic: None,
        }
    }

    fn pattern(p: &[bool]) -> Vec<DecisionRow> {
        p.iter()
            .enumerate()
            .map(|(i, &r)| row("u", "branin", i + 4, Some(if r { 0.0 } else { 1.0 })))
            .collect()
    }

    fn trace(y: &[f64]) -> Trace {
        Trace {
            player_id: "u".into(),
            problem_id: "branin".into(),
            mode: GameMode::BestScore,
            steps: y
                .iter()
                .enumerate()
                .map(|(i, &y)| TraceStep {
                    x: vec![0.0, 0.0],
                    y,
                    timestamp: DateTime::from_timestamp(i as i64, 0).unwrap(),
                })
                .collect(),
            budget: 20,
        }
    }

    #[test]
    fn counts_all_and_none() {
        let all = pattern(&[true; 5]);
        for c in pareto_counts(&all, 1e-4) {
            assert_eq!(c.percent, 100.0);
        }
        let none = pattern(&[false; 5]);
        for c in pareto_counts(&none, 1e-4) {
            assert_eq!(c.percent, 0.0);
        }
    }

    #[test]
    fn counts_mixed_fixture() {
        let rows = pattern(&[true, false, false, true, false, false]);
        let c = pareto_counts(&rows, 1e-4);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].rational, c[0].total), (2, 6));
        assert!((c[0].percent - 33.33).abs() < 0.01);
    }

    #[test]
    fn counts_skip_missing_distances() {
        let mut rows = pattern(&[true, false]);
        rows.push(row("u", "branin", 6, None));
        let c = pareto_counts(&rows, 1e-4);
        assert_eq!(c[0].total, 2);
    }

    #[test]
    fn runs_examples() {
        let r = run_lengths(&pattern(&[true, true, false, true]), 1e-4);
        assert_eq!(r[0].runs, vec![2, 1]);
        let r = run_lengths(&pattern(&[true; 17]), 1e-4);
        assert_eq!(r[0].runs, vec![17]);
    }

    #[test]
    fn runs_reset_across_problems_and_gaps() {
        let mut rows = pattern(&[true, true]);
        rows.push(row("u", "levy", 4, Some(0.0)));
        rows.push(row("u", "branin", 7, Some(0.0)));
        let r = run_lengths(&rows, 1e-4);
        let branin = r.iter().find(|x| x.problem_id == "branin").unwrap();
        assert_eq!(branin.runs, vec![2, 1]);
        let mut rows = pattern(&[true, true, true]);
        rows[1].min_dist = None;
        assert_eq!(run_lengths(&rows, 1e-4)[0].runs, vec![1, 1]);
    }

    #[test]
    fn acr_examples() {
        assert_eq!(acr(&trace(&[2.0, 4.0]), 3).unwrap().acr, 3.0);
        let t = trace(&[1.5; 6]);
        for s in 2..=7 {
            assert_eq!(acr(&t, s).unwrap().acr, 1.5);
        }
        assert!(acr(&t, 1).is_err());
        assert!(acr(&t, 8).is_err());
    }

    proptest! {
        #[test]
        fn runs_match_scan(p in prop::collection::vec(any::<bool>(), 1..40)) {
            let r = run_lengths(&pattern(&p), 1e-4);
            let mut oracle = Vec::new();
            let mut cur = 0;
            for &b in &p {
                if b { cur += 1 } else if cur > 0 { oracle.push(cur); cur = 0 }
            }
            if cur > 0 { oracle.push(cur) }
            prop_assert_eq!(&r[0].runs, &oracle);
            prop_assert_eq!(r[0].runs.iter().sum::<usize>(), p.iter().filter(|&&b| b).count());
        }

        #[test]
        fn percent_complements(p in prop::collection::vec(any::<bool>(), 1..40)) {
            let rows = pattern(&p);
            for c in pareto_counts(&rows, 1e-4) {
                let non = rows.iter().filter(|r| r.is_rational(1e-4) == Some(false)).count();
                let comp = 100.0 * non as f64 / c.total as f64;
                prop_assert!((c.percent + comp - 100.0).abs() < 1e-9);
            }
        }
    }
}
