use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n_a · n_b` for which the exact null distribution is used.
const EXACT_LIMIT: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMethod {
    Exact,
    NormalApprox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwuResult {
    /// U statistic of sample `a`.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub method: MwuMethod,
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Number of arrangements of `n_a` a's and `n_b` b's with each U value,
/// indexed by U.
fn exact_counts(n_a: usize, n_b: usize) -> Vec<f64> {
    // counts[j][u] for the current number of a's, j b's
    let max_u = n_a * n_b;
    let mut prev: Vec<Vec<f64>> = (0..=n_b)
        .map(|_| {
            let mut v = vec![0.0; max_u + 1];
            v[0] = 1.0;
            v
        })
        .collect();
    for i in 1..=n_a {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; n_b + 1];
        cur[0][0] = 1.0;
        for j in 1..=n_b {
            for u in 0..=i * j {
                // last element is an a (beats all j b's) or a b
                let with_a = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = with_a + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n_b)
}

/// Two-sided Mann–Whitney U test with midranks for ties.
///
/// The exact null distribution is used when `n_a · n_b ≤ 400` and there are
/// no ties; otherwise the normal approximation with tie and continuity
/// corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MwuResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("Mann-Whitney U needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::input("Mann-Whitney U samples contain NaN"));
    }
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..n_a].iter().sum();
    let u = rank_sum - (n_a * (n_a + 1)) as f64 / 2.0;
    let prod = (n_a * n_b) as f64;

    if n_a * n_b <= EXACT_LIMIT && ties.is_empty() {
        let counts = exact_counts(n_a, n_b);
        let total: f64 = counts.iter().sum();
        let k = u.round() as usize;
        let lower: f64 = counts[..=k].iter().sum::<f64>() / total;
        let upper: f64 = counts[k..].iter().sum::<f64>() / total;
        return Ok(MwuResult {
            u,
            p_value: (2.0 * lower.min(upper)).min(1.0),
            n_a,
            n_b,
            method: MwuMethod::Exact,
        });
    }

    let n = (n_a + n_b) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = prod / 12.0 * ((n + 1.0) - tie_term);
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - prod / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(MwuResult {
        u,
        p_value,
        n_a,
        n_b,
        method: MwuMethod::NormalApprox,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_triples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, MwuMethod::Exact);
        assert!((r.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [1.0, 2.0, 2.0, 5.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u, 8.0);
        assert_eq!(r.method, MwuMethod::NormalApprox);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn all_tied_is_p_one() {
        let r = mann_whitney_u(&[3.0; 4], &[3.0; 6]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn midranks_average_ties() {
        let (r, t) = midranks(&[10.0, 20.0, 10.0, 30.0]);
        assert_eq!(r, vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(t, vec![2]);
    }

    #[test]
    fn exact_counts_are_binomial() {
        let c = exact_counts(3, 3);
        assert_eq!(c.iter().sum::<f64>(), 20.0);
        assert_eq!(c, vec![1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 2.0, 1.0, 1.0]);
        let big = exact_counts(20, 20);
        assert_eq!(big.iter().sum::<f64>(), 137_846_528_820.0);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
        assert!(mann_whitney_u(&[f64::NAN], &[1.0]).is_err());
    }
}
