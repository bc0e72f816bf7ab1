//! Pareto-rationality analysis of sequential decisions on black-box functions.
//!
//! A decision is scored on two axes, expected improvement of the GP mean over
//! the incumbent and an uncertainty measure, and judged against the Pareto
//! frontier of those axes over a candidate lattice. The crate bundles the GP
//! surrogate, the frontier geometry, the benchmark functions, synthetic agents,
//! trace analysis and a small game server that records human traces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod analysis;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod optimize;
pub mod pareto;
pub mod scalar;
pub mod service;
pub mod testbed;
pub mod trace;
pub mod uncertainty;

pub use agents::{
    acq_ei, acq_pi, acq_ucb, run_agent, simulate_agents, thompson_next, AgentConfig, AgentPolicy, PolicyKind,
};
pub use analysis::{analyze_trace, analyze_traces, AnalysisConfig, DecisionRow};
pub use error::{Error, Result};
pub use gp::{fit_gp, log_marginal_likelihood, BoxDomain, Dataset, FitOptions, GpPosterior, Param};
pub use kernel::{gram_matrix, kernel_eval, KernelKind, KernelSpec};
pub use pareto::{
    build_grid, classify_decision, evaluate_objectives, frontier_distance, pareto_frontier, DistanceOptions,
    ObjectivePair, ParetoFrontier, RationalityVerdict,
};
pub use scalar::Scalar;
pub use testbed::{evaluate_problem, list_problems, problem, ProblemId, TestProblem};
pub use trace::{GameMode, Trace, TraceStep, DEFAULT_BUDGET};
pub use uncertainty::{improvement, uq_distance, uq_entropy, uq_sigma, Incumbent, UqMeasure};

pub type Kernel = KernelSpec<f64>;
pub type Gp = GpPosterior<f64>;
pub type Domain = BoxDomain<f64>;
pub type Pair = ObjectivePair<f64>;
pub type Frontier = ParetoFrontier<f64>;
pub type Verdict = RationalityVerdict<f64>;
