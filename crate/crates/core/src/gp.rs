//! Gaussian-process regression: conditioning, marginal likelihood and
//! hyperparameter search.
//!
//! Targets are optionally standardized to zero mean and unit variance before
//! conditioning. Kernel amplitude and noise then live in standardized units,
//! while [`GpPosterior::posterior_mean`] and [`GpPosterior::posterior_var`]
//! always report in the caller's units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_dims, KernelKind, KernelSpec, DEFAULT_POWER};
use crate::linalg::{dot, Cholesky, JitterPolicy, SquareMatrix};
use crate::optimize::{halton, nelder_mead, NelderMeadOptions};
use crate::scalar::{squared_distance, Scalar};

/// Axis-aligned box `Ω = Π [lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::input(format!(
                "box bounds must be nonempty and equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::input(format!("degenerate box in dimension {i}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Length of the box diagonal.
    pub fn diagonal(&self) -> T {
        squared_distance(&self.lower, &self.upper).sqrt()
    }

    pub(crate) fn out_of_domain(&self, x: &[T]) -> Error {
        Error::OutOfDomain {
            point: x.iter().map(|v| v.as_f64()).collect(),
            lower: self.lower.iter().map(|v| v.as_f64()).collect(),
            upper: self.upper.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

/// Observed decisions and outcomes on a box domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    x: Vec<Vec<T>>,
    y: Vec<T>,
    domain: BoxDomain<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Vec<Vec<T>>, y: Vec<T>, domain: BoxDomain<T>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::input("dataset needs at least one observation"));
        }
        if x.len() != y.len() {
            return Err(Error::input(format!("{} inputs but {} outputs", x.len(), y.len())));
        }
        for p in &x {
            if !domain.contains(p) {
                return Err(domain.out_of_domain(p));
            }
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite outcome {bad}")));
        }
        Ok(Self { x, y, domain })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.x
    }

    pub fn outputs(&self) -> &[T] {
        &self.y
    }

    pub fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }
}

/// Whether a hyperparameter is searched or held at a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Param<T> {
    Fixed(T),
    Free,
}

/// Hyperparameter search configuration for [`fit_gp`].
#[derive(Clone, Debug)]
pub struct FitOptions<T> {
    pub lengthscale: Param<T>,
    pub amplitude: Param<T>,
    pub noise: Param<T>,
    /// Power-exponential exponent (never fitted).
    pub power: T,
    pub standardize: bool,
    /// Multiplied by the domain diagonal.
    pub lengthscale_bounds: (T, T),
    pub amplitude_bounds: (T, T),
    pub noise_bounds: (T, T),
    pub restarts: usize,
    pub seed: u64,
    pub search: NelderMeadOptions,
    pub jitter: JitterPolicy<T>,
}

/// Default observation noise variance (standardized units).
pub const DEFAULT_NOISE: f64 = 1e-6;

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            lengthscale: Param::Free,
            amplitude: Param::Free,
            noise: Param::Fixed(T::lit(DEFAULT_NOISE)),
            power: T::lit(DEFAULT_POWER),
            standardize: true,
            lengthscale_bounds: (T::lit(1e-2), T::lit(1e2)),
            amplitude_bounds: (T::lit(1e-4), T::lit(1e4)),
            noise_bounds: (T::lit(1e-10), T::one()),
            restarts: 8,
            seed: 0,
            search: NelderMeadOptions::default(),
            jitter: JitterPolicy::default(),
        }
    }
}

impl<T: Scalar> FitOptions<T> {
    /// No search: condition on the given hyperparameters.
    pub fn fixed(lengthscale: T, amplitude: T, noise: T) -> Self {
        Self {
            lengthscale: Param::Fixed(lengthscale),
            amplitude: Param::Fixed(amplitude),
            noise: Param::Fixed(noise),
            ..Self::default()
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise = Param::Fixed(T::zero());
        self
    }

    pub fn with_standardize(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }
}

/// A Gaussian process conditioned on observations.
///
/// Immutable once built; safe to share across threads.
#[derive(Clone, Debug)]
pub struct GpPosterior<T> {
    kernel: KernelSpec<T>,
    noise: T,
    x: Vec<Vec<T>>,
    y: Vec<T>,
    y_offset: T,
    y_scale: T,
    chol: Option<Cholesky<T>>,
    alpha: Vec<T>,
    lml: T,
}

fn standardization<T: Scalar>(y: &[T]) -> (T, T) {
    let n = T::from_usize(y.len()).unwrap();
    let mean = y.iter().copied().sum::<T>() / n;
    let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let sd = var.sqrt();
    let floor = T::epsilon() * T::lit(1e3) * mean.abs().max(T::one());
    if sd.is_finite() && sd > floor {
        (mean, sd)
    } else {
        (mean, T::one())
    }
}

impl<T: Scalar> GpPosterior<T> {
    /// Zero-mean prior with no observations.
    pub fn prior(kernel: KernelSpec<T>, noise: T) -> Self {
        Self {
            kernel,
            noise,
            x: Vec::new(),
            y: Vec::new(),
            y_offset: T::zero(),
            y_scale: T::one(),
            chol: None,
            alpha: Vec::new(),
            lml: T::zero(),
        }
    }

    /// Conditions on `(x, y)` with fixed hyperparameters.
    pub fn condition(
        kernel: KernelSpec<T>,
        noise: T,
        x: Vec<Vec<T>>,
        y: Vec<T>,
        standardize: bool,
        jitter: &JitterPolicy<T>,
    ) -> Result<Self> {
        kernel.validate()?;
        if !(noise >= T::zero()) {
            return Err(Error::input(format!("noise variance must be >= 0, got {noise}")));
        }
        if x.len() != y.len() {
            return Err(Error::input(format!("{} inputs but {} outputs", x.len(), y.len())));
        }
        if x.is_empty() {
            return Ok(Self::prior(kernel, noise));
        }
        check_dims(&x)?;
        let dist = pairwise_distances(&x);
        let (y_offset, y_scale) = if standardize {
            standardization(&y)
        } else {
            (T::zero(), T::one())
        };
        let ys: Vec<T> = y.iter().map(|&v| (v - y_offset) / y_scale).collect();
        let (chol, alpha, lml) = factor_and_score(&kernel, noise, &dist, &ys, jitter)?;
        Ok(Self {
            kernel,
            noise,
            x,
            y,
            y_offset,
            y_scale,
            chol: Some(chol),
            alpha,
            lml,
        })
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    /// Observation noise variance (standardized units).
    pub fn noise(&self) -> T {
        self.noise
    }

    /// Absolute diagonal jitter used by the factorization.
    pub fn jitter(&self) -> T {
        self.chol.as_ref().map_or(T::zero(), |c| c.jitter())
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.x
    }

    pub fn outputs(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `(offset, scale)` such that `y = offset + scale * y_std`.
    pub fn standardization(&self) -> (T, T) {
        (self.y_offset, self.y_scale)
    }

    /// Best observed outcome, `max_i y_i`.
    pub fn best_observed(&self) -> Option<T> {
        self.y.iter().copied().reduce(T::max)
    }

    pub fn log_marginal_likelihood(&self) -> T {
        self.lml
    }

    pub(crate) fn cholesky(&self) -> Option<&Cholesky<T>> {
        self.chol.as_ref()
    }

    pub(crate) fn kernel_vector(&self, x: &[T]) -> Vec<T> {
        self.x.iter().map(|xi| self.kernel.eval_unchecked(x, xi)).collect()
    }

    /// Posterior mean and variance in standardized units.
    pub fn predict_standardized(&self, x: &[T]) -> (T, T) {
        debug_assert!(self.x.first().is_none_or(|p| p.len() == x.len()));
        let prior = self.kernel.amplitude;
        match &self.chol {
            None => (T::zero(), prior),
            Some(chol) => {
                let kx = self.kernel_vector(x);
                let mean = dot(&kx, &self.alpha);
                let v = chol.solve_lower(&kx);
                let mut var = (prior - dot(&v, &v)).min(prior);
                // below this the difference is rounding noise
                let floor = T::from(2 * (kx.len() + 1)).unwrap() * T::epsilon() * prior;
                if var <= floor {
                    var = T::zero();
                }
                (mean, var)
            }
        }
    }

    /// Posterior mean and variance in the caller's units.
    pub fn predict(&self, x: &[T]) -> (T, T) {
        let (m, v) = self.predict_standardized(x);
        (self.y_offset + self.y_scale * m, self.y_scale * self.y_scale * v)
    }

    /// `μ(x) = k(x, X) [K + λ²I]⁻¹ y`
    pub fn posterior_mean(&self, x: &[T]) -> T {
        match &self.chol {
            None => self.y_offset,
            Some(_) => {
                let kx = self.kernel_vector(x);
                self.y_offset + self.y_scale * dot(&kx, &self.alpha)
            }
        }
    }

    /// `σ²(x) = k(x, x) − k(x, X) [K + λ²I]⁻¹ k(X, x)`, clamped to `[0, k(x, x)]`.
    pub fn posterior_var(&self, x: &[T]) -> T {
        self.predict(x).1
    }

    pub fn posterior_std(&self, x: &[T]) -> T {
        self.posterior_var(x).sqrt()
    }
}

fn pairwise_distances<T: Scalar>(x: &[Vec<T>]) -> SquareMatrix<T> {
    SquareMatrix::symmetric_from_fn(x.len(), |i, j| {
        if i == j {
            T::zero()
        } else {
            squared_distance(&x[i], &x[j]).sqrt()
        }
    })
}

fn factor_and_score<T: Scalar>(
    kernel: &KernelSpec<T>,
    noise: T,
    dist: &SquareMatrix<T>,
    ys: &[T],
    jitter: &JitterPolicy<T>,
) -> Result<(Cholesky<T>, Vec<T>, T)> {
    let n = ys.len();
    let cov = SquareMatrix::symmetric_from_fn(n, |i, j| {
        if i == j {
            kernel.amplitude + noise
        } else {
            kernel.at_distance(dist.get(i, j))
        }
    });
    let chol = Cholesky::factor(&cov, jitter, kernel.amplitude)?;
    let alpha = chol.solve(ys);
    let half = T::lit(0.5);
    let nf = T::from_usize(n).unwrap();
    let lml =
        -half * dot(ys, &alpha) - half * chol.log_det() - half * nf * (T::lit(2.0) * T::lit(std::f64::consts::PI)).ln();
    if !lml.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite log marginal likelihood for {:?}",
            kernel
        )));
    }
    Ok((chol, alpha, lml))
}

/// `log p(y | X, θ)` of a conditioned GP (standardized targets when enabled).
pub fn log_marginal_likelihood<T: Scalar>(gp: &GpPosterior<T>) -> T {
    gp.log_marginal_likelihood()
}

/// Fits hyperparameters of a `kind` kernel by maximum marginal likelihood
/// over a deterministic multistart search, then conditions on `data`.
pub fn fit_gp<T: Scalar>(data: &Dataset<T>, kind: KernelKind, options: &FitOptions<T>) -> Result<GpPosterior<T>> {
    if data.is_empty() {
        return Err(Error::input("cannot fit a GP to an empty dataset"));
    }
    let (y_offset, y_scale) = if options.standardize {
        standardization(data.outputs())
    } else {
        (T::zero(), T::one())
    };
    let ys: Vec<T> = data.outputs().iter().map(|&v| (v - y_offset) / y_scale).collect();
    let dist = pairwise_distances(data.inputs());
    let diag = data.domain().diagonal();

    // free parameters in log space: (slot, lower, upper)
    let mut free: Vec<(usize, T, T)> = Vec::new();
    let mut base = [T::one(), T::one(), T::zero()];
    for (slot, (param, bounds)) in [
        (
            options.lengthscale,
            (options.lengthscale_bounds.0 * diag, options.lengthscale_bounds.1 * diag),
        ),
        (options.amplitude, options.amplitude_bounds),
        (options.noise, options.noise_bounds),
    ]
    .into_iter()
    .enumerate()
    {
        match param {
            Param::Fixed(v) => base[slot] = v,
            Param::Free => free.push((slot, bounds.0.ln(), bounds.1.ln())),
        }
    }

    let assemble = |theta: &[T]| -> [T; 3] {
        let mut p = base;
        for (&(slot, _, _), &t) in free.iter().zip(theta) {
            p[slot] = t.exp();
        }
        p
    };
    let spec_for = |p: &[T; 3]| -> Result<KernelSpec<T>> { KernelSpec::with_power(kind, p[0], p[1], options.power) };

    let best_params = if free.is_empty() {
        base
    } else {
        let lower: Vec<T> = free.iter().map(|f| f.1).collect();
        let upper: Vec<T> = free.iter().map(|f| f.2).collect();
        let objective = |theta: &[T]| -> T {
            let p = assemble(theta);
            match spec_for(&p).and_then(|k| factor_and_score(&k, p[2], &dist, &ys, &options.jitter)) {
                Ok((_, _, lml)) => -lml,
                Err(_) => T::infinity(),
            }
        };
        let mut best: Option<(T, Vec<T>)> = None;
        for r in 0..options.restarts.max(1) {
            let index = options.seed.wrapping_mul(options.restarts.max(1) as u64) + r as u64 + 1;
            let u = halton(index, free.len());
            let start: Vec<T> = u
                .iter()
                .zip(lower.iter().zip(&upper))
                .map(|(&ui, (&lo, &hi))| lo + (hi - lo) * T::lit(ui))
                .collect();
            let m = nelder_mead(&objective, &start, &lower, &upper, &options.search);
            if m.value.is_finite() && best.as_ref().is_none_or(|(v, _)| m.value < *v) {
                best = Some((m.value, m.x));
            }
        }
        match best {
            Some((_, theta)) => assemble(&theta),
            None => {
                return Err(Error::Fit(format!(
                    "all {} restarts failed for {kind} kernel on {} points",
                    options.restarts,
                    data.len()
                )))
            }
        }
    };

    let kernel = spec_for(&best_params)?;
    let (chol, alpha, lml) = factor_and_score(&kernel, best_params[2], &dist, &ys, &options.jitter)
        .map_err(|e| Error::Fit(e.to_string()))?;
    Ok(GpPosterior {
        kernel,
        noise: best_params[2],
        x: data.inputs().to_vec(),
        y: data.outputs().to_vec(),
        y_offset,
        y_scale,
        chol: Some(chol),
        alpha,
        lml,
    })
}
