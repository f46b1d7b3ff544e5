//! Prediction-powered intervals: the real-only baseline, the single-transform
//! (uniform) estimator, the two-stage Minkowski-sum estimator, their hedged
//! variants, and the rectifier interval.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfidenceInterval, Method, PairedDataset, SignificanceLevel, SimDataset};
use crate::wsr::{wsr_interval, WsrOptions};

/// Share of the two-stage budget given to the rectifier by default.
pub const HEURISTIC_DELTA_FRACTION: f64 = 0.9;

/// Hedged variants spend this share of `alpha` on the PPI interval and the
/// rest on the real-only interval.
pub const HEDGE_PPI_SHARE: f64 = 0.75;

/// Two-stage risk split: `delta` to the rectifier, `alpha - delta` to the
/// proxy-mean interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSplit {
    alpha: SignificanceLevel,
    delta: SignificanceLevel,
    remainder: SignificanceLevel,
}

impl RiskSplit {
    pub fn new(alpha: SignificanceLevel, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < alpha.value()) {
            return Err(Error::Config(format!(
                "rectifier level delta = {delta} must lie in (0, alpha = {alpha})"
            )));
        }
        Ok(RiskSplit {
            alpha,
            delta: SignificanceLevel::new(delta)?,
            remainder: SignificanceLevel::new(alpha.value() - delta)?,
        })
    }

    /// `delta = 0.9 alpha`.
    pub fn heuristic(alpha: SignificanceLevel) -> Self {
        RiskSplit::new(alpha, HEURISTIC_DELTA_FRACTION * alpha.value())
            .expect("0.9 alpha is inside (0, alpha)")
    }

    pub fn alpha(&self) -> SignificanceLevel {
        self.alpha
    }

    pub fn delta(&self) -> SignificanceLevel {
        self.delta
    }

    pub fn remainder(&self) -> SignificanceLevel {
        self.remainder
    }
}

/// The pooled sample of the uniform estimator.
///
/// Paired entries are `f + ((n + N) / n) (y - f)`; proxy-only entries are `f`.
/// Paired entries come first.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformPpiTransform {
    pub values: Vec<f64>,
    pub inflation: f64,
    pub indicator_count: usize,
}

impl UniformPpiTransform {
    /// A-priori range `[-(n+N)/n, 1 + (n+N)/n]` used for the WSR call.
    pub fn bounds(&self) -> (f64, f64) {
        (-self.inflation, 1.0 + self.inflation)
    }

    /// Sample mean of the transformed values, an unbiased estimate of the real mean.
    pub fn point_estimate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub fn build_uniform_transform(
    paired: &PairedDataset,
    sim: &SimDataset,
) -> Result<UniformPpiTransform> {
    require_paired(paired)?;
    let n = paired.n();
    let total = n + sim.cap_n();
    let inflation = total as f64 / n as f64;
    let mut values = Vec::with_capacity(total);
    values.extend(
        paired
            .samples()
            .iter()
            .map(|s| s.f.value() + inflation * s.residual()),
    );
    values.extend(sim.scores().iter().map(|s| s.value()));
    Ok(UniformPpiTransform {
        values,
        inflation,
        indicator_count: n,
    })
}

fn require_paired(paired: &PairedDataset) -> Result<()> {
    if paired.is_empty() {
        return Err(Error::InsufficientData("no paired samples".into()));
    }
    Ok(())
}

/// Real-only baseline: WSR on the real scores over `[0, 1]`.
pub fn classical_interval(
    real_scores: &[f64],
    alpha: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let ci = wsr_interval(real_scores, alpha, &opts.config(0.0, 1.0)?)?;
    Ok(ConfidenceInterval::unit_truncated(
        ci.lower,
        ci.upper,
        alpha,
        Method::Classical,
    ))
}

/// Single WSR call on the uniform transform, truncated to `[0, 1]`.
pub fn suresim_interval(
    paired: &PairedDataset,
    sim: &SimDataset,
    alpha: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let transform = build_uniform_transform(paired, sim)?;
    let (lo, hi) = transform.bounds();
    let ci = wsr_interval(&transform.values, alpha, &opts.config(lo, hi)?)?;
    Ok(ConfidenceInterval::unit_truncated(
        ci.lower,
        ci.upper,
        alpha,
        Method::SureSim,
    ))
}

/// Intersection of the PPI interval at `3 alpha / 4` with the real-only
/// interval at `alpha / 4`.
fn hedge(
    ppi: ConfidenceInterval,
    paired: &PairedDataset,
    alpha: SignificanceLevel,
    method: Method,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let classical = classical_interval(
        &paired.real_scores(),
        alpha.scaled(1.0 - HEDGE_PPI_SHARE)?,
        opts,
    )?;
    ppi.intersect(&classical, alpha, method)
}

pub fn suresim_ub_interval(
    paired: &PairedDataset,
    sim: &SimDataset,
    alpha: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let ppi = suresim_interval(paired, sim, alpha.scaled(HEDGE_PPI_SHARE)?, opts)?;
    hedge(ppi, paired, alpha, Method::SureSimUB, opts)
}

/// WSR on the paired residuals `y - f` over `[-1, 1]`, not truncated.
pub fn rectifier_interval(
    paired: &PairedDataset,
    delta: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    require_paired(paired)?;
    let ci = wsr_interval(&paired.residuals(), delta, &opts.config(-1.0, 1.0)?)?;
    Ok(ConfidenceInterval::untruncated(
        ci.lower,
        ci.upper,
        delta,
        Method::Rectifier,
    ))
}

fn proxy_mean_interval(
    sim: &SimDataset,
    level: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<(f64, f64)> {
    if sim.is_empty() {
        return Err(Error::InsufficientData(
            "the two-stage interval needs at least one proxy-only score".into(),
        ));
    }
    let ci = wsr_interval(&sim.values(), level, &opts.config(0.0, 1.0)?)?;
    Ok((ci.lower, ci.upper))
}

/// Minkowski sum of the rectifier interval (level `delta`) and the proxy-mean
/// interval (level `alpha - delta`), truncated to `[0, 1]`.
pub fn two_stage_interval(
    paired: &PairedDataset,
    sim: &SimDataset,
    split: RiskSplit,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let (f_lo, f_hi) = proxy_mean_interval(sim, split.remainder(), opts)?;
    let rect = rectifier_interval(paired, split.delta(), opts)?;
    Ok(ConfidenceInterval::unit_truncated(
        f_lo + rect.lower,
        f_hi + rect.upper,
        split.alpha(),
        Method::TwoStage,
    ))
}

pub fn two_stage_ub_interval(
    paired: &PairedDataset,
    sim: &SimDataset,
    alpha: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let inner = RiskSplit::heuristic(alpha.scaled(HEDGE_PPI_SHARE)?);
    let ppi = two_stage_interval(paired, sim, inner, opts)?;
    hedge(ppi, paired, alpha, Method::TwoStageUB, opts)
}

/// Two-stage point estimate: mean residual plus mean proxy-only score.
pub fn two_stage_point_estimate(paired: &PairedDataset, sim: &SimDataset) -> Result<f64> {
    require_paired(paired)?;
    if sim.is_empty() {
        return Err(Error::InsufficientData("no proxy-only scores".into()));
    }
    let rect = paired.residuals().iter().sum::<f64>() / paired.n() as f64;
    let proxy = sim.values().iter().sum::<f64>() / sim.cap_n() as f64;
    Ok(rect + proxy)
}

/// Maximum number of refinement steps in [`optimize_risk_split`].
pub const MAX_SPLIT_STEPS: usize = 40;

/// Evenly spaced values of `delta` tried before refinement.
pub const SPLIT_SCAN_POINTS: usize = 64;

/// Pre-truncation width of the two-stage interval at rectifier level `delta`.
pub fn two_stage_width(
    paired: &PairedDataset,
    sim: &SimDataset,
    alpha: SignificanceLevel,
    delta: f64,
    opts: &WsrOptions,
) -> Result<f64> {
    let split = RiskSplit::new(alpha, delta)?;
    Ok(two_stage_interval(paired, sim, split, opts)?.raw_width())
}

/// Chooses the rectifier share `delta` that minimizes the realized two-stage
/// width.
///
/// The width is roughly convex in `delta` (the rectifier widens as its level
/// shrinks while the proxy interval narrows). A scan of
/// `[alpha / 100, alpha - alpha / 100]` finds the basin and a golden-section
/// search refines it. The result is never worse than `0.9 alpha`, which is
/// also returned when the landscape is flat.
pub fn optimize_risk_split(
    paired: &PairedDataset,
    sim: &SimDataset,
    alpha: SignificanceLevel,
    opts: &WsrOptions,
) -> Result<RiskSplit> {
    let a = alpha.value();
    let eps = a / 100.0;
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut width = |delta: f64| -> Result<f64> {
        if let Some(&w) = cache.get(&delta.to_bits()) {
            return Ok(w);
        }
        // An empty confidence set is never a usable answer.
        let w = match two_stage_width(paired, sim, alpha, delta, opts) {
            Err(Error::EmptyCandidateSet) => f64::INFINITY,
            other => other?,
        };
        cache.insert(delta.to_bits(), w);
        Ok(w)
    };

    let heuristic = HEURISTIC_DELTA_FRACTION * a;
    let w_heuristic = width(heuristic)?;

    // The width is a step function of delta (grid-discretized endpoints), so
    // a coarse scan picks the basin before golden-section refinement.
    let (lo0, hi0) = (eps, a - eps);
    let step = (hi0 - lo0) / (SPLIT_SCAN_POINTS - 1) as f64;
    let mut best = (heuristic, w_heuristic);
    let mut best_k = None;
    let mut flat = true;
    for k in 0..SPLIT_SCAN_POINTS {
        let x = lo0 + k as f64 * step;
        let w = width(x)?;
        flat &= w == w_heuristic;
        if w < best.1 {
            best = (x, w);
            best_k = Some(k);
        }
    }

    if let Some(k) = best_k {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut lo = (lo0 + (k as f64 - 1.0) * step).max(lo0);
        let mut hi = (lo0 + (k as f64 + 1.0) * step).min(hi0);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut w1 = width(x1)?;
        let mut w2 = width(x2)?;
        for _ in 0..MAX_SPLIT_STEPS {
            for (x, w) in [(x1, w1), (x2, w2)] {
                if w < best.1 {
                    best = (x, w);
                }
            }
            if hi - lo <= eps * 1e-3 {
                break;
            }
            if w1 <= w2 {
                hi = x2;
                x2 = x1;
                w2 = w1;
                x1 = hi - inv_phi * (hi - lo);
                w1 = width(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                w1 = w2;
                x2 = lo + inv_phi * (hi - lo);
                w2 = width(x2)?;
            }
        }
    }

    if flat || best.1 >= w_heuristic {
        Ok(RiskSplit::heuristic(alpha))
    } else {
        RiskSplit::new(alpha, best.0)
    }
}
