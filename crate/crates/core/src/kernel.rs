//! Stationary isotropic covariance functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::{squared_distance, Scalar};

/// The five kernel families used to model a decision trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    SquaredExponential,
    Exponential,
    PowerExponential,
    Matern32,
    Matern52,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::SquaredExponential,
        KernelKind::Exponential,
        KernelKind::PowerExponential,
        KernelKind::Matern32,
        KernelKind::Matern52,
    ];

    /// Short identifier used in CSV headers and on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            KernelKind::SquaredExponential => "se",
            KernelKind::Exponential => "exp",
            KernelKind::PowerExponential => "pe",
            KernelKind::Matern32 => "m32",
            KernelKind::Matern52 => "m52",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" | "squared_exponential" | "sqexp" => Ok(KernelKind::SquaredExponential),
            "exp" | "exponential" => Ok(KernelKind::Exponential),
            "pe" | "power_exponential" | "powexp" => Ok(KernelKind::PowerExponential),
            "m32" | "matern32" | "matern3/2" => Ok(KernelKind::Matern32),
            "m52" | "matern52" | "matern5/2" => Ok(KernelKind::Matern52),
            other => Err(Error::input(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Default exponent of the power-exponential kernel.
pub const DEFAULT_POWER: f64 = 1.5;

/// A kernel family with its hyperparameters.
///
/// `amplitude` is the output variance `s²`; the correlation functions
/// themselves have unit amplitude, so `k(x, x) = s²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub kind: KernelKind,
    pub lengthscale: T,
    pub amplitude: T,
    /// Exponent `p`; only read by [`KernelKind::PowerExponential`].
    pub power: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(kind: KernelKind, lengthscale: T, amplitude: T) -> Result<Self> {
        Self::with_power(kind, lengthscale, amplitude, T::lit(DEFAULT_POWER))
    }

    pub fn with_power(kind: KernelKind, lengthscale: T, amplitude: T, power: T) -> Result<Self> {
        let spec = Self {
            kind,
            lengthscale,
            amplitude,
            power,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > T::zero()) || !self.lengthscale.is_finite() {
            return Err(Error::input(format!(
                "lengthscale must be > 0, got {}",
                self.lengthscale
            )));
        }
        if !(self.amplitude > T::zero()) || !self.amplitude.is_finite() {
            return Err(Error::input(format!("amplitude must be > 0, got {}", self.amplitude)));
        }
        if !(self.power > T::zero() && self.power <= T::lit(2.0)) {
            return Err(Error::input(format!("power must lie in (0, 2], got {}", self.power)));
        }
        Ok(())
    }

    /// Unit-amplitude correlation at Euclidean distance `r`.
    #[inline]
    pub fn correlation(&self, r: T) -> T {
        let ell = self.lengthscale;
        match self.kind {
            KernelKind::SquaredExponential => (-(r * r) / (T::lit(2.0) * ell * ell)).exp(),
            KernelKind::Exponential => (-r / ell).exp(),
            KernelKind::PowerExponential => (-(r / ell).powf(self.power)).exp(),
            KernelKind::Matern32 => {
                let a = T::lit(3.0).sqrt() * r / ell;
                (T::one() + a) * (-a).exp()
            }
            KernelKind::Matern52 => {
                let a = T::lit(5.0).sqrt() * r / ell;
                let q = r / ell;
                (T::one() + a + T::lit(5.0 / 3.0) * q * q) * (-a).exp()
            }
        }
    }

    /// Covariance at Euclidean distance `r`.
    #[inline]
    pub fn at_distance(&self, r: T) -> T {
        self.amplitude * self.correlation(r)
    }

    /// Covariance between two points of equal dimension.
    pub fn eval(&self, x: &[T], x2: &[T]) -> Result<T> {
        if x.len() != x2.len() {
            return Err(Error::input(format!("dimension mismatch: {} vs {}", x.len(), x2.len())));
        }
        Ok(self.eval_unchecked(x, x2))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[T], x2: &[T]) -> T {
        self.at_distance(squared_distance(x, x2).sqrt())
    }
}

/// `k(x, x')` for the given kernel.
pub fn kernel_eval<T: Scalar>(spec: &KernelSpec<T>, x: &[T], x2: &[T]) -> Result<T> {
    spec.eval(x, x2)
}

/// Gram matrix `K_ij = k(x_i, x_j)`.
pub fn gram_matrix<T: Scalar>(spec: &KernelSpec<T>, points: &[Vec<T>]) -> Result<SquareMatrix<T>> {
    check_dims(points)?;
    Ok(SquareMatrix::symmetric_from_fn(points.len(), |i, j| {
        if i == j {
            spec.amplitude
        } else {
            spec.eval_unchecked(&points[i], &points[j])
        }
    }))
}

pub(crate) fn check_dims<T>(points: &[Vec<T>]) -> Result<()> {
    if let Some(first) = points.first() {
        let d = first.len();
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::input(format!("dimension mismatch: {} vs {}", d, bad.len())));
        }
    }
    Ok(())
}
