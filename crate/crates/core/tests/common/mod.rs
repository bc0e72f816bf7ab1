#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use paretolab::{KernelSpec, ObjectivePair};

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Posterior mean and variance from `(K + δI)⁻¹` formed explicitly.
pub fn dense_posterior(kernel: &KernelSpec<f64>, diag_shift: f64, x: &[Vec<f64>], y: &[f64], q: &[f64]) -> (f64, f64) {
    let n = x.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| kernel.eval(&x[i], &x[j]).unwrap() + if i == j { diag_shift } else { 0.0 })
                .collect()
        })
        .collect();
    let inv = dense_inverse(&k);
    let ks: Vec<f64> = x.iter().map(|xi| kernel.eval(q, xi).unwrap()).collect();
    let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[i][j] * ks[j]).sum()).collect();
    let mean = w.iter().zip(y).map(|(a, b)| a * b).sum();
    let var = kernel.eval(q, q).unwrap() - w.iter().zip(&ks).map(|(a, b)| a * b).sum::<f64>();
    (mean, var)
}

pub fn brute_frontier(ps: &[ObjectivePair<f64>]) -> Vec<usize> {
    (0..ps.len())
        .filter(|&i| !ps.iter().any(|q| q.dominates(&ps[i])))
        .collect()
}

/// Squared distance from `q` to the brute-force frontier, min–max scaled over
/// `ps ∪ {q}` when `normalize`.
pub fn brute_distance(ps: &[ObjectivePair<f64>], q: &ObjectivePair<f64>, normalize: bool) -> f64 {
    if !ps.iter().any(|p| p.dominates(q)) {
        return 0.0;
    }
    let span = |f: &dyn Fn(&ObjectivePair<f64>) -> f64| {
        if !normalize {
            return 1.0;
        }
        let lo = ps.iter().map(f).fold(f(q), f64::min);
        let hi = ps.iter().map(f).fold(f(q), f64::max);
        if hi - lo > 0.0 {
            hi - lo
        } else {
            1.0
        }
    };
    let sz = span(&|p| p.improvement);
    let su = span(&|p| p.uncertainty);
    brute_frontier(ps)
        .into_iter()
        .map(|i| {
            let dz = (q.improvement - ps[i].improvement) / sz;
            let du = (q.uncertainty - ps[i].uncertainty) / su;
            dz * dz + du * du
        })
        .fold(f64::INFINITY, f64::min)
}
