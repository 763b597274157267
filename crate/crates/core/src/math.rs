use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent when std is linked
use num_traits::Float;

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `C(n,k) p^k (1-p)^(n-k)`, evaluated in log space away from the edges.
pub(crate) fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n <= 60 {
        return binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
    }
    let ln_c = ln_gamma_int(n) - ln_gamma_int(k) - ln_gamma_int(n - k);
    (ln_c + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

fn ln_gamma_int(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
