//! Improvement and the three location-dependent uncertainty measures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::kernel::{gram_matrix, KernelSpec};
use crate::linalg::{dot, Cholesky, JitterPolicy};
use crate::scalar::{squared_distance, Scalar};

/// Which uncertainty quantification a Pareto analysis uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UqMeasure {
    /// Posterior standard deviation σ(x).
    Sigma,
    /// Entropy of the GP over the prefix plus the candidate, h(x).
    Entropy,
    /// Inverse-distance coverage measure z(x).
    Distance,
}

impl UqMeasure {
    pub const ALL: [UqMeasure; 3] = [UqMeasure::Sigma, UqMeasure::Entropy, UqMeasure::Distance];

    pub fn name(self) -> &'static str {
        match self {
            UqMeasure::Sigma => "sigma",
            UqMeasure::Entropy => "entropy",
            UqMeasure::Distance => "distance",
        }
    }
}

impl fmt::Display for UqMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UqMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigma" | "sd" | "std" => Ok(UqMeasure::Sigma),
            "entropy" | "h" => Ok(UqMeasure::Entropy),
            "distance" | "z" | "idw" => Ok(UqMeasure::Distance),
            other => Err(Error::input(format!("unknown uncertainty measure '{other}'"))),
        }
    }
}

/// Best outcome observed so far, `y⁺`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incumbent<T>(pub T);

impl<T: Scalar> Incumbent<T> {
    /// `max_i y_i`; `None` for an empty slice.
    pub fn from_outcomes(y: &[T]) -> Option<Self> {
        y.iter().copied().reduce(T::max).map(Incumbent)
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// `ζ(x) = μ(x) − y⁺`, unclamped.
pub fn improvement<T: Scalar>(gp: &GpPosterior<T>, x: &[T], incumbent: Incumbent<T>) -> T {
    gp.posterior_mean(x) - incumbent.0
}

/// `σ(x)`
pub fn uq_sigma<T: Scalar>(gp: &GpPosterior<T>, x: &[T]) -> T {
    gp.posterior_std(x)
}

/// Relative jitter added inside the entropy determinant.
pub const ENTROPY_JITTER: f64 = 1e-8;

/// Precomputed state for evaluating `h(x)` at many candidates.
///
/// `h(x) = ½ log det(K' + (λ² + j)I)` where `K'` is the Gram matrix over the
/// prefix plus `x`. The determinant is split as
/// `det(B) · (k(x,x) + λ² + j − kᵀ B⁻¹ k)` with `B` the prefix block, so each
/// candidate costs one triangular solve.
#[derive(Clone, Debug)]
pub struct EntropyField<T> {
    kernel: KernelSpec<T>,
    prefix: Vec<Vec<T>>,
    shift: T,
    chol: Option<Cholesky<T>>,
    base_log_det: T,
}

impl<T: Scalar> EntropyField<T> {
    pub fn new(gp: &GpPosterior<T>, prefix: &[Vec<T>]) -> Result<Self> {
        Self::with_jitter(gp.kernel(), gp.noise(), prefix, T::lit(ENTROPY_JITTER))
    }

    /// `relative_jitter` is scaled by the kernel amplitude.
    pub fn with_jitter(kernel: &KernelSpec<T>, noise: T, prefix: &[Vec<T>], relative_jitter: T) -> Result<Self> {
        let shift = noise + relative_jitter * kernel.amplitude;
        let (chol, base_log_det) = if prefix.is_empty() {
            (None, T::zero())
        } else {
            let b = gram_matrix(kernel, prefix)?.add_diagonal(shift);
            let chol = Cholesky::factor(&b, &JitterPolicy::default(), kernel.amplitude)?;
            let ld = chol.log_det();
            (Some(chol), ld)
        };
        Ok(Self {
            kernel: *kernel,
            prefix: prefix.to_vec(),
            shift,
            chol,
            base_log_det,
        })
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut schur = self.kernel.amplitude + self.shift;
        if let Some(chol) = &self.chol {
            let kx: Vec<T> = self.prefix.iter().map(|p| self.kernel.eval_unchecked(x, p)).collect();
            let v = chol.solve_lower(&kx);
            schur = schur - dot(&v, &v);
        }
        // exact Schur complement of a PSD matrix shifted by `shift` is >= shift
        let schur = schur.max(self.shift).max(T::min_positive_value());
        T::lit(0.5) * (self.base_log_det + schur.ln())
    }
}

/// `h(x)` with the GP's kernel and noise; the additive constant is dropped.
pub fn uq_entropy<T: Scalar>(gp: &GpPosterior<T>, prefix: &[Vec<T>], x: &[T]) -> Result<T> {
    Ok(EntropyField::new(gp, prefix)?.eval(x))
}

/// `z(x)`: 0 on previous decisions, `(2/π)·atan(1 / Σ_j w_j(x))` elsewhere,
/// with `w_j(x) = exp(−‖x − x_j‖²) / ‖x − x_j‖²`.
pub fn uq_distance<T: Scalar>(prefix: &[Vec<T>], x: &[T]) -> Result<T> {
    if prefix.is_empty() {
        return Err(Error::input("distance measure needs at least one previous decision"));
    }
    if let Some(bad) = prefix.iter().find(|p| p.len() != x.len()) {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {}",
            bad.len(),
            x.len()
        )));
    }
    Ok(distance_unchecked(prefix, x))
}

pub(crate) fn distance_unchecked<T: Scalar>(prefix: &[Vec<T>], x: &[T]) -> T {
    let mut total = T::zero();
    for p in prefix {
        let d2 = squared_distance(x, p);
        if d2 == T::zero() {
            return T::zero();
        }
        total = total + (-d2).exp() / d2;
    }
    let two_over_pi = T::lit(2.0 / std::f64::consts::PI);
    // atan(1/s) = π/2 − atan(s) keeps precision when the weights are small
    let z = if total < T::one() {
        T::one() - two_over_pi * total.atan()
    } else {
        two_over_pi * total.recip().atan()
    };
    // the exact value is below 1; keep it there after rounding
    z.min(T::one() - T::epsilon() / T::lit(2.0))
}
