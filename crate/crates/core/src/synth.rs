//! Synthetic real/proxy score populations with a known mean and a tunable
//! Pearson correlation.
//!
//! Real scores are uniform on `[max(0, 2 mu - 1), min(2 mu, 1)]`, which has
//! mean `mu` and stays inside `[0, 1]`. Proxies blend the centered real scores
//! with independent noise through a single signal fraction `s` in `[-1, 1]`:
//!
//! `proxy(s) = clamp(recenter(s * (y - y_bar) + (1 - |s|) * noise))`
//!
//! where the noise is drawn on the proxy support and rescaled to the spread of
//! `y`. The correlation moves continuously from about -1 to about 1 as `s`
//! goes from -1 to 1, and `s` is found by bisection.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rng_from_seed, PairedDataset, SimDataset};

/// Bisection steps before giving up on the correlation target.
pub const MAX_BISECTION_STEPS: usize = 100;

/// Recentering/clamping rounds per proxy construction.
const MAX_RECENTER_ROUNDS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankSpec {
    pub mu_real: f64,
    pub mu_sim: f64,
    pub rho_target: f64,
    pub size: usize,
    pub rho_tolerance: f64,
    pub seed: u64,
}

/// Support `[max(0, 2 mu - 1), min(2 mu, 1)]` of a uniform score with mean `mu`.
pub fn uniform_support(mu: f64) -> (f64, f64) {
    ((2.0 * mu - 1.0).max(0.0), (2.0 * mu).min(1.0))
}

impl BankSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, mu) in [("mu_real", self.mu_real), ("mu_sim", self.mu_sim)] {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie in (0, 1), got {mu}"
                )));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho_target) {
            return Err(Error::Config(format!(
                "target correlation must lie in [-1, 1], got {}",
                self.rho_target
            )));
        }
        if !(self.rho_tolerance > 0.0) {
            return Err(Error::Config(
                "correlation tolerance must be positive".into(),
            ));
        }
        if self.size < 3 {
            return Err(Error::Config(format!(
                "bank size must be at least 3, got {}",
                self.size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBank {
    pub pairs: PairedDataset,
    /// Realized mean of the real scores in the bank.
    pub true_mu: f64,
    pub achieved_rho: f64,
    pub spec: BankSpec,
}

impl LabeledBank {
    pub fn size(&self) -> usize {
        self.pairs.n()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Shift to mean `target`, clamp to `[0, 1]`, and repeat until the mean
/// settles. Every value ends inside `[0, 1]`.
fn recenter_clamp(values: &mut [f64], target: f64) {
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    for _ in 0..MAX_RECENTER_ROUNDS {
        let shift = target - mean(values);
        if shift.abs() < 1e-12 {
            break;
        }
        for v in values.iter_mut() {
            *v = (*v + shift).clamp(0.0, 1.0);
        }
    }
}

struct ProxyBuilder {
    centered_y: Vec<f64>,
    scaled_noise: Vec<f64>,
    mu_sim: f64,
}

impl ProxyBuilder {
    fn build(&self, s: f64) -> Vec<f64> {
        let w_noise = 1.0 - s.abs();
        let mut out: Vec<f64> = self
            .centered_y
            .iter()
            .zip(&self.scaled_noise)
            .map(|(cy, nz)| self.mu_sim + s * cy + w_noise * nz)
            .collect();
        recenter_clamp(&mut out, self.mu_sim);
        out
    }
}

pub fn generate_bank(spec: &BankSpec) -> Result<LabeledBank> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let (a, b) = uniform_support(spec.mu_real);
    let y: Vec<f64> = (0..spec.size).map(|_| rng.random_range(a..=b)).collect();
    let y_bar = mean(&y);

    let (proxy, achieved) = if spec.rho_target == 1.0 && spec.mu_sim == spec.mu_real {
        let rho = pearson(&y, &y).unwrap_or(1.0);
        (y.clone(), rho)
    } else {
        let (sa, sb) = uniform_support(spec.mu_sim);
        let noise: Vec<f64> = (0..spec.size).map(|_| rng.random_range(sa..=sb)).collect();
        let centered_y: Vec<f64> = y.iter().map(|v| v - y_bar).collect();
        let n_bar = mean(&noise);
        let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt();
        let scale = sd(&y, y_bar) / sd(&noise, n_bar).max(f64::MIN_POSITIVE);
        let scaled_noise = noise.iter().map(|v| (v - n_bar) * scale).collect();
        let builder = ProxyBuilder {
            centered_y,
            scaled_noise,
            mu_sim: spec.mu_sim,
        };
        search_signal(&builder, &y, spec)?
    };

    let pairs: Vec<(f64, f64)> = y.into_iter().zip(proxy).collect();
    Ok(LabeledBank {
        pairs: PairedDataset::from_pairs(&pairs)?,
        true_mu: y_bar,
        achieved_rho: achieved,
        spec: *spec,
    })
}

/// Bisection on the signal fraction. Stops once the correlation is within a
/// small fraction of the tolerance, so nearby targets give ordered results.
fn search_signal(builder: &ProxyBuilder, y: &[f64], spec: &BankSpec) -> Result<(Vec<f64>, f64)> {
    let target = spec.rho_target;
    let rho_at = |s: f64| -> (Vec<f64>, f64) {
        let p = builder.build(s);
        let r = pearson(y, &p).unwrap_or(0.0);
        (p, r)
    };
    let fine = spec.rho_tolerance * 1e-3;

    let (p_hi, r_hi) = rho_at(1.0);
    if target > r_hi + spec.rho_tolerance {
        return Err(Error::Infeasible(format!(
            "correlation {target} is unreachable; the largest attainable is {r_hi}"
        )));
    }
    let (p_lo, r_lo) = rho_at(-1.0);
    if target < r_lo - spec.rho_tolerance {
        return Err(Error::Infeasible(format!(
            "correlation {target} is unreachable; the smallest attainable is {r_lo}"
        )));
    }
    if (r_hi - target).abs() <= fine || target >= r_hi {
        return Ok((p_hi, r_hi));
    }
    if (r_lo - target).abs() <= fine || target <= r_lo {
        return Ok((p_lo, r_lo));
    }

    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut best = if (r_hi - target).abs() < (r_lo - target).abs() {
        (p_hi, r_hi)
    } else {
        (p_lo, r_lo)
    };
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let (p, r) = rho_at(mid);
        let closer = (r - target).abs() < (best.1 - target).abs();
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if closer {
            best = (p, r);
        }
        if (best.1 - target).abs() <= fine || hi - lo < 1e-15 {
            break;
        }
    }
    if (best.1 - target).abs() <= spec.rho_tolerance {
        Ok(best)
    } else {
        Err(Error::CorrelationNotReached {
            target,
            achieved: best.1,
            iterations: MAX_BISECTION_STEPS,
        })
    }
}

/// Disjoint uniform split of a bank into paired, proxy-only, and held-out sets.
/// The proxy-only split drops the real scores.
pub fn partition_bank(
    bank: &LabeledBank,
    n: usize,
    cap_n: usize,
    heldout: usize,
    seed: u64,
) -> Result<(PairedDataset, SimDataset, PairedDataset)> {
    let total = n
        .checked_add(cap_n)
        .and_then(|v| v.checked_add(heldout))
        .ok_or_else(|| Error::Config("partition sizes overflow".into()))?;
    if total > bank.size() {
        return Err(Error::InsufficientData(format!(
            "partition needs {total} samples but the bank has {}",
            bank.size()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let picks = index::sample(&mut rng, bank.size(), total).into_vec();
    let samples = bank.pairs.samples();
    let paired = picks[..n].iter().map(|&i| samples[i].clone()).collect();
    let sim = picks[n..n + cap_n].iter().map(|&i| samples[i].f).collect();
    let held = picks[n + cap_n..]
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    Ok((
        PairedDataset::from_unique(paired),
        SimDataset::new(sim),
        PairedDataset::from_unique(held),
    ))
}
