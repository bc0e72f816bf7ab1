//! Dense symmetric matrices and a Cholesky factorization with diagonal jitter.
//!
//! Matrices here are small (a few dozen rows for GP conditioning, up to a
//! thousand for joint posterior sampling over a lattice), so everything is a
//! plain row-major `Vec`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a symmetric matrix evaluating `f` on the lower triangle only.
    pub fn symmetric_from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `self + shift * I`
    pub fn add_diagonal(&self, shift: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] = out.data[i * self.n + i] + shift;
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }
}

/// How much diagonal jitter to add when a covariance matrix fails to factor.
///
/// Jitter values are relative: the absolute amount is `value * scale`, where
/// the caller supplies the scale (the kernel amplitude for GP covariances).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterPolicy<T> {
    /// Try the matrix as given before adding any jitter.
    pub exact_first: bool,
    /// Smallest pivot (relative to scale) accepted on the exact attempt.
    pub min_pivot: T,
    pub initial: T,
    pub growth: T,
    pub max: T,
}

impl<T: Scalar> Default for JitterPolicy<T> {
    fn default() -> Self {
        Self {
            exact_first: true,
            min_pivot: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)),
            initial: T::lit(1e-8).max(T::epsilon() * T::lit(10.0)),
            growth: T::lit(10.0),
            max: T::lit(1e-4),
        }
    }
}

impl<T: Scalar> JitterPolicy<T> {
    /// Always adds at least `initial` jitter.
    pub fn always() -> Self {
        Self {
            exact_first: false,
            ..Self::default()
        }
    }

    /// Relative jitter levels tried in order.
    pub fn schedule(&self) -> Vec<T> {
        let mut levels = Vec::new();
        if self.exact_first {
            levels.push(T::zero());
        }
        let mut j = self.initial;
        // small slack so 1e-8 * 10^4 still counts as <= 1e-4 after rounding
        let cap = self.max * (T::one() + T::lit(1e-6));
        while j <= cap {
            levels.push(j);
            j = j * self.growth;
        }
        levels
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A + jitter·I`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<T>,
    jitter: T,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a + shift·I`; fails if any pivot is not above `min_pivot`.
    pub fn try_factor(a: &SquareMatrix<T>, shift: T, min_pivot: T) -> Option<Self> {
        let n = a.dim();
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                if i == j {
                    s = s + shift;
                }
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > min_pivot) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self {
            n,
            lower: l,
            jitter: shift,
        })
    }

    /// Factors `a`, escalating jitter per `policy`; `scale` converts relative
    /// jitter levels into absolute diagonal shifts.
    pub fn factor(a: &SquareMatrix<T>, policy: &JitterPolicy<T>, scale: T) -> Result<Self> {
        for level in policy.schedule() {
            let shift = level * scale;
            let min_pivot = if level == T::zero() {
                policy.min_pivot * scale
            } else {
                T::zero()
            };
            if let Some(c) = Self::try_factor(a, shift, min_pivot) {
                return Ok(c);
            }
        }
        Err(Error::Numerical(format!(
            "{}x{} covariance not positive definite even with jitter {:e} x {:e}",
            a.dim(),
            a.dim(),
            policy.max.as_f64(),
            scale.as_f64()
        )))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Absolute diagonal shift that made the factorization succeed.
    #[inline]
    pub fn jitter(&self) -> T {
        self.jitter
    }

    #[inline]
    pub fn l(&self, i: usize, j: usize) -> T {
        self.lower[i * self.n + j]
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s = row.iter().zip(&x[..i]).fold(x[i], |acc, (&lij, &xj)| acc - lij * xj);
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                s = s - self.lower[k * n + i] * xk;
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    /// Solves `(A + jitter·I) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `log det(A + jitter·I)`
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.n).map(|i| two * self.l(i, i).ln()).sum()
    }

    /// `L z` for a vector `z`; maps standard normal draws to draws with covariance `A`.
    pub fn mul_lower(&self, z: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.lower[i * n..=i * n + i]
                    .iter()
                    .zip(z)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
