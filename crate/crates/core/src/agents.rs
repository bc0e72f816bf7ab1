//! Acquisition functions and synthetic decision makers.
//!
//! Agents maximize their criterion over the same lattice the analyzer uses,
//! so an acquisition-driven decision is evaluated at exactly the candidate
//! points the frontier is built from.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::DateTime;
use libm::erfc;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{fit_gp, Dataset, FitOptions, GpPosterior};
use crate::kernel::KernelKind;
use crate::linalg::{dot, Cholesky, JitterPolicy, SquareMatrix};
use crate::pareto::build_grid;
use crate::testbed::TestProblem;
use crate::trace::{GameMode, Trace, TraceStep, DEFAULT_BUDGET};
use crate::uncertainty::Incumbent;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `z Φ(z) + φ(z)`, accurate in the far left tail where the two terms cancel.
fn ei_factor(z: f64) -> f64 {
    if z < -8.0 {
        let r = 1.0 / (z * z);
        norm_pdf(z) * r * (1.0 - 3.0 * r + 15.0 * r * r - 105.0 * r * r * r)
    } else {
        z * norm_cdf(z) + norm_pdf(z)
    }
}

/// Probability of improvement from a predictive mean and standard deviation.
pub fn probability_of_improvement(mean: f64, sd: f64, incumbent: f64, xi: f64) -> f64 {
    let delta = mean - incumbent - xi;
    if sd > 0.0 {
        norm_cdf(delta / sd)
    } else if delta > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Expected improvement from a predictive mean and standard deviation.
pub fn expected_improvement(mean: f64, sd: f64, incumbent: f64, xi: f64) -> f64 {
    let delta = mean - incumbent - xi;
    if sd > 0.0 {
        (sd * ei_factor(delta / sd)).max(0.0)
    } else {
        delta.max(0.0)
    }
}

pub fn upper_confidence_bound(mean: f64, sd: f64, beta: f64) -> f64 {
    mean + beta.sqrt() * sd
}

/// `PI(x) = Φ((μ(x) − y⁺ − ξ) / σ(x))`
pub fn acq_pi(gp: &GpPosterior<f64>, x: &[f64], incumbent: Incumbent<f64>, xi: f64) -> f64 {
    let (m, v) = gp.predict(x);
    probability_of_improvement(m, v.sqrt(), incumbent.0, xi)
}

/// `EI(x) = Δ Φ(Δ/σ) + σ φ(Δ/σ)` with `Δ = μ(x) − y⁺ − ξ`.
pub fn acq_ei(gp: &GpPosterior<f64>, x: &[f64], incumbent: Incumbent<f64>, xi: f64) -> f64 {
    let (m, v) = gp.predict(x);
    expected_improvement(m, v.sqrt(), incumbent.0, xi)
}

/// `UCB(x) = μ(x) + √β σ(x)`
pub fn acq_ucb(gp: &GpPosterior<f64>, x: &[f64], beta: f64) -> f64 {
    let (m, v) = gp.predict(x);
    upper_confidence_bound(m, v.sqrt(), beta)
}

/// Index of the best candidate by `score`, ties broken by higher mean, then
/// higher sd, then lower index. Returns `None` for empty input.
pub fn argmax_candidate(scores: &[f64], means: &[f64], sds: &[f64]) -> Option<usize> {
    let key = |i: usize| (scores[i], means[i], sds[i]);
    (0..scores.len()).reduce(|best, i| {
        let (a, b) = (key(i), key(best));
        match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Less) {
            Ordering::Greater => i,
            Ordering::Less => best,
            Ordering::Equal => {
                if (a.1, a.2) > (b.1, b.2) {
                    i
                } else {
                    best
                }
            }
        }
    })
}

/// Draws one joint posterior sample over `grid` and returns the maximizing point.
pub fn thompson_next(gp: &GpPosterior<f64>, grid: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::input("empty candidate grid"));
    }
    let kernel = gp.kernel();
    let mut means = Vec::with_capacity(grid.len());
    let mut proj: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    for g in grid {
        means.push(gp.predict_standardized(g).0);
        if let Some(chol) = gp.cholesky() {
            proj.push(chol.solve_lower(&gp.kernel_vector(g)));
        }
    }
    let cov = SquareMatrix::symmetric_from_fn(grid.len(), |i, j| {
        let prior = if i == j {
            kernel.amplitude
        } else {
            kernel.eval_unchecked(&grid[i], &grid[j])
        };
        let reduce = if proj.is_empty() { 0.0 } else { dot(&proj[i], &proj[j]) };
        if i == j {
            (prior - reduce).max(0.0)
        } else {
            prior - reduce
        }
    });
    let scale = cov.diagonal().into_iter().fold(0.0, f64::max);
    let zeros = vec![0.0; grid.len()];
    if !(scale > 1e-14 * kernel.amplitude) {
        let best = argmax_candidate(&means, &means, &zeros).expect("nonempty grid");
        return Ok(grid[best].clone());
    }
    let chol = Cholesky::factor(&cov, &JitterPolicy::always(), scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let sample: Vec<f64> = chol.mul_lower(&z).into_iter().zip(&means).map(|(d, m)| m + d).collect();
    let best = argmax_candidate(&sample, &means, &zeros).expect("nonempty grid");
    Ok(grid[best].clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    EiMax,
    PiMax,
    UcbMax,
    Thompson,
    GreedyMean,
    UniformRandom,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::EiMax => "ei",
            PolicyKind::PiMax => "pi",
            PolicyKind::UcbMax => "ucb",
            PolicyKind::Thompson => "thompson",
            PolicyKind::GreedyMean => "greedy",
            PolicyKind::UniformRandom => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ei" | "eimax" => Ok(PolicyKind::EiMax),
            "pi" | "pimax" => Ok(PolicyKind::PiMax),
            "ucb" | "ucbmax" => Ok(PolicyKind::UcbMax),
            "ts" | "thompson" => Ok(PolicyKind::Thompson),
            "greedy" | "greedymean" | "mean" => Ok(PolicyKind::GreedyMean),
            "random" | "uniform" | "uniformrandom" => Ok(PolicyKind::UniformRandom),
            other => Err(Error::input(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentPolicy {
    pub kind: PolicyKind,
    /// UCB exploration weight (constant schedule).
    pub beta: f64,
    /// PI/EI improvement offset.
    pub xi: f64,
    pub kernel: KernelKind,
    pub seed: u64,
}

impl AgentPolicy {
    pub fn new(kind: PolicyKind, seed: u64) -> Self {
        Self {
            kind,
            beta: 3.0,
            xi: 0.0,
            kernel: KernelKind::Matern52,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.xi >= 0.0) {
            return Err(Error::input(format!(
                "beta and xi must be >= 0 (beta={}, xi={})",
                self.beta, self.xi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AgentConfig {
    pub budget: usize,
    pub n_init: usize,
    pub grid: Vec<usize>,
    pub fit: FitOptions<f64>,
    pub mode: GameMode,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            n_init: 3,
            grid: vec![30, 30],
            fit: FitOptions::default(),
            mode: GameMode::BestScore,
        }
    }
}

/// Picks the next decision given a fitted GP, without touching any RNG.
pub fn acquisition_choice(policy: &AgentPolicy, gp: &GpPosterior<f64>, grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    let incumbent = Incumbent::from_outcomes(gp.outputs())
        .ok_or_else(|| Error::input("acquisition needs at least one observation"))?;
    let (means, sds): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .map(|g| {
            let (m, v) = gp.predict(g);
            (m, v.sqrt())
        })
        .unzip();
    let scores: Vec<f64> = match policy.kind {
        PolicyKind::EiMax => means
            .iter()
            .zip(&sds)
            .map(|(&m, &s)| expected_improvement(m, s, incumbent.0, policy.xi))
            .collect(),
        PolicyKind::PiMax => means
            .iter()
            .zip(&sds)
            .map(|(&m, &s)| probability_of_improvement(m, s, incumbent.0, policy.xi))
            .collect(),
        PolicyKind::UcbMax => means
            .iter()
            .zip(&sds)
            .map(|(&m, &s)| upper_confidence_bound(m, s, policy.beta))
            .collect(),
        PolicyKind::GreedyMean => means.clone(),
        PolicyKind::Thompson | PolicyKind::UniformRandom => {
            return Err(Error::input(format!(
                "{} is not an acquisition-maximizing policy",
                policy.kind
            )))
        }
    };
    let best = argmax_candidate(&scores, &means, &sds).ok_or_else(|| Error::input("empty candidate grid"))?;
    Ok(grid[best].clone())
}

fn uniform_point(rng: &mut ChaCha8Rng, problem: &TestProblem) -> Vec<f64> {
    problem
        .domain
        .lower()
        .iter()
        .zip(problem.domain.upper())
        .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

/// Runs one agent for a full budget on `problem`.
///
/// The first `n_init` decisions are uniform in the domain; the rest follow the
/// policy, refitting the agent's GP after every observation. Timestamps are
/// synthetic (one second per decision from the Unix epoch) so traces are
/// bit-reproducible.
pub fn run_agent(problem: &TestProblem, policy: &AgentPolicy, config: &AgentConfig) -> Result<Trace> {
    policy.validate()?;
    if config.n_init < 1 || config.budget < config.n_init {
        return Err(Error::input(format!(
            "need 1 <= n_init <= budget (n_init={}, budget={})",
            config.n_init, config.budget
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let grid = match policy.kind {
        PolicyKind::UniformRandom => Vec::new(),
        _ => build_grid(&problem.domain, &config.grid)?,
    };
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(config.budget);
    let mut steps = Vec::with_capacity(config.budget);
    for step in 0..config.budget {
        let x = if step < config.n_init || policy.kind == PolicyKind::UniformRandom {
            uniform_point(&mut rng, problem)
        } else {
            let ys: Vec<f64> = steps.iter().map(|s: &TraceStep| s.y).collect();
            let data = Dataset::new(xs.clone(), ys, problem.domain.clone())?;
            let gp = fit_gp(&data, policy.kernel, &config.fit)?;
            match policy.kind {
                PolicyKind::Thompson => thompson_next(&gp, &grid, rng.next_u64())?,
                _ => acquisition_choice(policy, &gp, &grid)?,
            }
        };
        let y = problem.score(&x)?;
        xs.push(x.clone());
        steps.push(TraceStep {
            x,
            y,
            timestamp: DateTime::from_timestamp(step as i64, 0).expect("valid timestamp"),
        });
    }
    Ok(Trace {
        player_id: format!("{}-{}", policy.kind, policy.seed),
        problem_id: problem.id.as_str().to_string(),
        mode: config.mode,
        steps,
        budget: config.budget,
    })
}

/// Runs `agents` independent agents of each policy on each problem.
///
/// Agent `k` of a policy uses seed `seed + k` on every problem and is named
/// `<policy>-<k>`. Output order is policy, agent, problem.
pub fn simulate_agents(
    problems: &[TestProblem],
    policies: &[AgentPolicy],
    agents: usize,
    seed: u64,
    config: &AgentConfig,
) -> Result<Vec<Trace>> {
    let jobs: Vec<(&AgentPolicy, usize, &TestProblem)> = policies
        .iter()
        .flat_map(|pol| (0..agents).flat_map(move |k| problems.iter().map(move |p| (pol, k, p))))
        .collect();
    jobs.par_iter()
        .map(|&(pol, k, prob)| {
            let policy = AgentPolicy {
                seed: seed.wrapping_add(k as u64),
                ..pol.clone()
            };
            let mut trace = run_agent(prob, &policy, config)?;
            trace.player_id = format!("{}-{k:02}", pol.kind);
            Ok(trace)
        })
        .collect()
}
