use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of decisions a player gets per problem.
pub const DEFAULT_BUDGET: usize = 20;

/// Game goal shown to the player. The stored trace is the same for all modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum GameMode {
    /// Find the location with the highest score.
    BestScore = 1,
    /// As mode 1, with the optimum value revealed.
    KnownTarget = 2,
    /// Maximize the sum of scores.
    Cumulative = 3,
}

impl TryFrom<u8> for GameMode {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(GameMode::BestScore),
            2 => Ok(GameMode::KnownTarget),
            3 => Ok(GameMode::Cumulative),
            other => Err(Error::input(format!("game mode must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl From<GameMode> for u8 {
    fn from(m: GameMode) -> u8 {
        m as u8
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub x: Vec<f64>,
    pub y: f64,
    pub timestamp: DateTime<Utc>,
}

/// One player's (or agent's) ordered decisions on one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub player_id: String,
    pub problem_id: String,
    pub mode: GameMode,
    pub steps: Vec<TraceStep>,
    pub budget: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.x.clone()).collect()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.y).collect()
    }
}
