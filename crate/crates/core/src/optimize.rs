//! Small derivative-free optimizer used for hyperparameter search.

use crate::scalar::Scalar;

/// Radical-inverse of `index` in `base` (one coordinate of a Halton point).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Halton point in `[0, 1)^dim`; `dim` must not exceed 8.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension {dim} unsupported");
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once the simplex's function-value spread falls below this.
    pub f_tol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 120,
            f_tol: 1e-7,
            initial_step: 0.15,
        }
    }
}

/// Result of one local search.
#[derive(Clone, Debug)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evals: usize,
}

/// Box-constrained Nelder–Mead; trial points are projected onto the box.
///
/// Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<T: Scalar>(
    mut f: impl FnMut(&[T]) -> T,
    start: &[T],
    lower: &[T],
    upper: &[T],
    opts: &NelderMeadOptions,
) -> Minimum<T> {
    let dim = start.len();
    let clamp = |x: &mut Vec<T>| {
        for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
            *v = v.max(lo).min(hi);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0);
    simplex.push(x0.clone());
    for i in 0..dim {
        let mut xi = x0.clone();
        let step = (upper[i] - lower[i]) * T::lit(opts.initial_step);
        // step away from whichever bound is nearer
        if xi[i] + step <= upper[i] {
            xi[i] = xi[i] + step;
        } else {
            xi[i] = xi[i] - step;
        }
        clamp(&mut xi);
        simplex.push(xi);
    }
    let mut values: Vec<T> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    while evals < opts.max_evals {
        // order
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[dim];
        if worst.is_finite() && (worst - best).abs() <= T::lit(opts.f_tol) * (T::one() + best.abs()) {
            break;
        }

        let centroid: Vec<T> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|x| x[j]).sum::<T>() / T::from_usize(dim).unwrap())
            .collect();
        let along = |t: T| -> Vec<T> {
            let mut p: Vec<T> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(&c, &w)| c + t * (c - w))
                .collect();
            clamp(&mut p);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
        } else {
            let (xc, fc) = if fr < values[dim] {
                let xc = along(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < values[dim].min(fr) {
                simplex[dim] = xc;
                values[dim] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=dim {
                    let mut p: Vec<T> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(&b, &x)| b + sigma * (x - b))
                        .collect();
                    clamp(&mut p);
                    values[i] = eval(&p, &mut evals);
                    simplex[i] = p;
                }
            }
        }
    }

    let (best_i, _) = values.iter().enumerate().fold(
        (0, T::infinity()),
        |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
    );
    Minimum {
        x: simplex[best_i].clone(),
        value: values[best_i],
        evals,
    }
}
