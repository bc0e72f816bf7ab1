use std::path::{Path, PathBuf};

use paretolab::testbed::{list_problems, problem, TestProblem};
use paretolab::{KernelKind, PolicyKind, UqMeasure};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] paretolab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Core(e) if e.is_input() => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Option defaults read from `--config`. Keys use the flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub problems: Option<String>,
    pub policy: Option<String>,
    pub agents: Option<usize>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub n_init: Option<usize>,
    pub grid: Option<String>,
    pub threshold: Option<f64>,
    pub normalize: Option<bool>,
    pub kernels: Option<String>,
    pub measures: Option<String>,
    pub beta: Option<f64>,
    pub xi: Option<f64>,
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub port: Option<u16>,
    pub host: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }
}

/// Flag, else config file, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn items(list: &str) -> impl Iterator<Item = &str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_problems(list: &str) -> Result<Vec<TestProblem>, CliError> {
    if list.trim() == "all" {
        return Ok(list_problems());
    }
    let v = items(list).map(problem).collect::<paretolab::Result<Vec<_>>>()?;
    non_empty(v, "problems")
}

pub fn parse_kernels(list: &str) -> Result<Vec<KernelKind>, CliError> {
    if list.trim() == "all" {
        return Ok(KernelKind::ALL.to_vec());
    }
    let v = items(list).map(str::parse).collect::<paretolab::Result<Vec<_>>>()?;
    non_empty(v, "kernels")
}

pub fn parse_measures(list: &str) -> Result<Vec<UqMeasure>, CliError> {
    if list.trim() == "all" {
        return Ok(UqMeasure::ALL.to_vec());
    }
    let v = items(list).map(str::parse).collect::<paretolab::Result<Vec<_>>>()?;
    non_empty(v, "measures")
}

pub fn parse_policies(list: &str) -> Result<Vec<PolicyKind>, CliError> {
    let v = items(list).map(str::parse).collect::<paretolab::Result<Vec<_>>>()?;
    non_empty(v, "policy")
}

/// `30x30`, or a single count used for both axes.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Input(format!("grid must look like 30x30, got '{s}'"));
    let parts = s
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    match parts.as_slice() {
        [n] => Ok(vec![*n, *n]),
        [a, b] => Ok(vec![*a, *b]),
        _ => Err(bad()),
    }
}

fn non_empty<T>(v: Vec<T>, what: &str) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        Err(CliError::Input(format!("--{what} must name at least one item")))
    } else {
        Ok(v)
    }
}

pub struct Settings {
    pub problems: Vec<TestProblem>,
    pub policies: Vec<PolicyKind>,
    pub kernels: Vec<KernelKind>,
    pub measures: Vec<UqMeasure>,
    pub grid: Vec<usize>,
}

impl Settings {
    pub fn resolve_simulate(
        problems: &Option<String>,
        policy: &Option<String>,
        grid: &Option<String>,
        file: &FileConfig,
    ) -> Result<Self, CliError> {
        let problems = problems.clone().or(file.problems.clone()).unwrap_or("all".into());
        let policy = policy.clone().or(file.policy.clone()).unwrap_or("ei".into());
        let grid = grid.clone().or(file.grid.clone()).unwrap_or("30x30".into());
        Ok(Self {
            problems: parse_problems(&problems)?,
            policies: parse_policies(&policy)?,
            kernels: Vec::new(),
            measures: Vec::new(),
            grid: parse_grid(&grid)?,
        })
    }

    pub fn resolve_analyze(
        kernels: &Option<String>,
        measures: &Option<String>,
        grid: &Option<String>,
        file: &FileConfig,
    ) -> Result<Self, CliError> {
        let kernels = kernels.clone().or(file.kernels.clone()).unwrap_or("all".into());
        let measures = measures.clone().or(file.measures.clone()).unwrap_or("all".into());
        let grid = grid.clone().or(file.grid.clone()).unwrap_or("30x30".into());
        Ok(Self {
            problems: Vec::new(),
            policies: Vec::new(),
            kernels: parse_kernels(&kernels)?,
            measures: parse_measures(&measures)?,
            grid: parse_grid(&grid)?,
        })
    }
}
