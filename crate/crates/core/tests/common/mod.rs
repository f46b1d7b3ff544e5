#![allow(dead_code)]

//! Test-only oracles, written independently of the library code paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Line-by-line betting-martingale procedure: linear-space capital, every
/// candidate updated at every step, running variance recomputed from scratch.
/// Returns the surviving candidate indices.
pub fn reference_wsr(
    data: &[f64],
    alpha: f64,
    lower: f64,
    upper: f64,
    grid_size: usize,
    c: f64,
) -> Vec<usize> {
    let n = data.len();
    let z: Vec<f64> = data.iter().map(|x| (x - lower) / (upper - lower)).collect();
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| (k as f64 + 0.5) / grid_size as f64)
        .collect();
    let mut alive = vec![true; grid_size];
    let mut m_plus = vec![1.0f64; grid_size];
    let mut m_minus = vec![1.0f64; grid_size];
    let mut sigma2_prev = 0.25;
    for t in 1..=n {
        let mu_t = (0.5 + z[..t].iter().sum::<f64>()) / (t as f64 + 1.0);
        let sigma2_t =
            (0.25 + z[..t].iter().map(|zj| (zj - mu_t).powi(2)).sum::<f64>()) / (t as f64 + 1.0);
        let lambda = (2.0 * (2.0 / alpha).ln() / (n as f64 * sigma2_prev)).sqrt();
        for (k, &m) in grid.iter().enumerate() {
            m_plus[k] *= 1.0 + lambda.min(c / m) * (z[t - 1] - m);
            m_minus[k] *= 1.0 - lambda.min(c / (1.0 - m)) * (z[t - 1] - m);
            let mt = 0.5 * m_plus[k].max(m_minus[k]);
            if mt >= 1.0 / alpha {
                alive[k] = false;
            }
        }
        sigma2_prev = sigma2_t;
    }
    (0..grid_size).filter(|&k| alive[k]).collect()
}

/// Two-pass Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Two-pass unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn bernoulli(p: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect()
}

pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Mixture of a point mass at 1 (weight `w`) and Uniform(0, 1).
pub fn uniform_mixture(w: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < w {
                1.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}
