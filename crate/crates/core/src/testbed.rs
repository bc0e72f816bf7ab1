//! The ten two-dimensional benchmark problems.
//!
//! Formulas, domains and optima follow the Virtual Library of Simulation
//! Experiments (Surjanovic & Bingham) definitions. Every function is a
//! minimization problem; players and agents see the score `−f(x)`.
//!
//! | id       | domain                          | f*         | a minimizer            |
//! |----------|---------------------------------|------------|------------------------|
//! | ackley   | [−32.768, 32.768]²              | 0          | (0, 0)                 |
//! | beale    | [−4.5, 4.5]²                    | 0          | (3, 0.5)               |
//! | branin   | [−5, 10] × [0, 15]              | 0.397887   | (π, 2.275)             |
//! | bukin6   | [−15, −5] × [−3, 3]             | 0          | (−10, 1)               |
//! | goldpr   | [−2, 2]²                        | 3          | (0, −1)                |
//! | griewank | [−600, 600]²                    | 0          | (0, 0)                 |
//! | levy     | [−10, 10]²                      | 0          | (1, 1)                 |
//! | rastr    | [−5.12, 5.12]²                  | 0          | (0, 0)                 |
//! | schwef   | [−500, 500]²                    | ≈ 2.5e−5   | (420.9687, 420.9687)   |
//! | stytang  | [−5, 5]²                        | −78.33198  | (−2.903534, −2.903534) |

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::BoxDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Ackley,
    Beale,
    Branin,
    Bukin6,
    Goldpr,
    Griewank,
    Levy,
    Rastr,
    Schwef,
    Stytang,
}

impl ProblemId {
    pub const ALL: [ProblemId; 10] = [
        ProblemId::Ackley,
        ProblemId::Beale,
        ProblemId::Branin,
        ProblemId::Bukin6,
        ProblemId::Goldpr,
        ProblemId::Griewank,
        ProblemId::Levy,
        ProblemId::Rastr,
        ProblemId::Schwef,
        ProblemId::Stytang,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Ackley => "ackley",
            ProblemId::Beale => "beale",
            ProblemId::Branin => "branin",
            ProblemId::Bukin6 => "bukin6",
            ProblemId::Goldpr => "goldpr",
            ProblemId::Griewank => "griewank",
            ProblemId::Levy => "levy",
            ProblemId::Rastr => "rastr",
            ProblemId::Schwef => "schwef",
            ProblemId::Stytang => "stytang",
        }
    }

    fn bounds(self) -> ([f64; 2], [f64; 2]) {
        match self {
            ProblemId::Ackley => ([-32.768, -32.768], [32.768, 32.768]),
            ProblemId::Beale => ([-4.5, -4.5], [4.5, 4.5]),
            ProblemId::Branin => ([-5.0, 0.0], [10.0, 15.0]),
            ProblemId::Bukin6 => ([-15.0, -3.0], [-5.0, 3.0]),
            ProblemId::Goldpr => ([-2.0, -2.0], [2.0, 2.0]),
            ProblemId::Griewank => ([-600.0, -600.0], [600.0, 600.0]),
            ProblemId::Levy => ([-10.0, -10.0], [10.0, 10.0]),
            ProblemId::Rastr => ([-5.12, -5.12], [5.12, 5.12]),
            ProblemId::Schwef => ([-500.0, -500.0], [500.0, 500.0]),
            ProblemId::Stytang => ([-5.0, -5.0], [5.0, 5.0]),
        }
    }

    fn optimum(self) -> (f64, Vec<[f64; 2]>) {
        match self {
            ProblemId::Ackley => (0.0, vec![[0.0, 0.0]]),
            ProblemId::Beale => (0.0, vec![[3.0, 0.5]]),
            ProblemId::Branin => (0.397887, vec![[-PI, 12.275], [PI, 2.275], [9.42478, 2.475]]),
            ProblemId::Bukin6 => (0.0, vec![[-10.0, 1.0]]),
            ProblemId::Goldpr => (3.0, vec![[0.0, -1.0]]),
            ProblemId::Griewank => (0.0, vec![[0.0, 0.0]]),
            ProblemId::Levy => (0.0, vec![[1.0, 1.0]]),
            ProblemId::Rastr => (0.0, vec![[0.0, 0.0]]),
            ProblemId::Schwef => (0.0, vec![[420.9687, 420.9687]]),
            ProblemId::Stytang => (-78.33198, vec![[-2.903534, -2.903534]]),
        }
    }

    /// `f(x)` in minimization form.
    pub fn objective(self, x: [f64; 2]) -> f64 {
        let [x1, x2] = x;
        match self {
            ProblemId::Ackley => {
                let (a, b, c) = (20.0, 0.2, 2.0 * PI);
                let s1 = 0.5 * (x1 * x1 + x2 * x2);
                let s2 = 0.5 * ((c * x1).cos() + (c * x2).cos());
                a * (1.0 - (-b * s1.sqrt()).exp()) + (E - s2.exp())
            }
            ProblemId::Beale => {
                (1.5 - x1 + x1 * x2).powi(2)
                    + (2.25 - x1 + x1 * x2 * x2).powi(2)
                    + (2.625 - x1 + x1 * x2.powi(3)).powi(2)
            }
            ProblemId::Branin => {
                let b = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
            }
            ProblemId::Bukin6 => 100.0 * (x2 - 0.01 * x1 * x1).abs().sqrt() + 0.01 * (x1 + 10.0).abs(),
            ProblemId::Goldpr => {
                let a = 1.0
                    + (x1 + x2 + 1.0).powi(2)
                        * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
                let b = 30.0
                    + (2.0 * x1 - 3.0 * x2).powi(2)
                        * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
                a * b
            }
            ProblemId::Griewank => {
                let sum = (x1 * x1 + x2 * x2) / 4000.0;
                let prod = x1.cos() * (x2 / 2f64.sqrt()).cos();
                sum - prod + 1.0
            }
            ProblemId::Levy => {
                let w1 = 1.0 + (x1 - 1.0) / 4.0;
                let w2 = 1.0 + (x2 - 1.0) / 4.0;
                (PI * w1).sin().powi(2)
                    + (w1 - 1.0).powi(2) * (1.0 + 10.0 * (PI * w1 + 1.0).sin().powi(2))
                    + (w2 - 1.0).powi(2) * (1.0 + (2.0 * PI * w2).sin().powi(2))
            }
            ProblemId::Rastr => {
                20.0 + (x1 * x1 - 10.0 * (2.0 * PI * x1).cos()) + (x2 * x2 - 10.0 * (2.0 * PI * x2).cos())
            }
            ProblemId::Schwef => 418.9829 * 2.0 - x1 * x1.abs().sqrt().sin() - x2 * x2.abs().sqrt().sin(),
            ProblemId::Stytang => {
                0.5 * ((x1.powi(4) - 16.0 * x1 * x1 + 5.0 * x1) + (x2.powi(4) - 16.0 * x2 * x2 + 5.0 * x2))
            }
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown problem '{s}'")))
    }
}

/// A benchmark problem with its evaluation domain and published optimum.
#[derive(Clone, Debug)]
pub struct TestProblem {
    pub id: ProblemId,
    pub domain: BoxDomain<f64>,
    pub optimum_value: f64,
    pub minimizers: Vec<[f64; 2]>,
}

impl TestProblem {
    pub fn new(id: ProblemId) -> Self {
        let (lo, hi) = id.bounds();
        let (optimum_value, minimizers) = id.optimum();
        Self {
            id,
            domain: BoxDomain::new(lo.to_vec(), hi.to_vec()).expect("static domain is valid"),
            optimum_value,
            minimizers,
        }
    }

    /// `f(x)`; fails outside the domain.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(self.domain.out_of_domain(x));
        }
        Ok(self.id.objective([x[0], x[1]]))
    }

    /// Score shown to the player: `−f(x)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(-self.objective(x)?)
    }

    /// Best achievable score, `−f*`.
    pub fn optimum_score(&self) -> f64 {
        -self.optimum_value
    }

    pub fn descriptor(&self) -> ProblemDescriptor {
        ProblemDescriptor {
            id: self.id.as_str().to_string(),
            lower: self.domain.lower().to_vec(),
            upper: self.domain.upper().to_vec(),
            optimum_value: self.optimum_value,
            optimum_score: self.optimum_score(),
            minimizers: self.minimizers.clone(),
        }
    }
}

/// Machine-readable catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub id: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub optimum_value: f64,
    pub optimum_score: f64,
    pub minimizers: Vec<[f64; 2]>,
}

/// All ten problems in catalog order.
pub fn list_problems() -> Vec<TestProblem> {
    ProblemId::ALL.into_iter().map(TestProblem::new).collect()
}

pub fn problem(id: &str) -> Result<TestProblem> {
    Ok(TestProblem::new(id.parse()?))
}

/// Score `−f(x)` of problem `id` at `x`.
pub fn evaluate_problem(id: &str, x: &[f64]) -> Result<f64> {
    problem(id)?.score(x)
}
