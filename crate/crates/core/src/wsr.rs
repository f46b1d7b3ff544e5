//! Betting-martingale confidence intervals for the mean of bounded data.
//!
//! Samples are rescaled to `[0, 1]`. For every candidate mean `m` on a grid we
//! run two capital processes, one betting the mean is above `m` and one betting
//! it is below, with a predictable bet size derived from a regularized running
//! variance. A candidate is discarded as soon as half the larger of its two
//! capitals reaches `1 / alpha`; the survivors form the confidence set.
//!
//! Capital is tracked as a linear factor that is folded into a log
//! accumulator every [`FOLD_EVERY`] steps, so products over tens of thousands
//! of samples neither overflow nor underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SignificanceLevel;

pub const DEFAULT_GRID_SIZE: usize = 1001;
pub const DEFAULT_C: f64 = 0.99;

/// Each capital factor lies in `[1 - c, 1 + c / m]`, so 16 consecutive
/// factors stay far inside the normal f64 range for any practical grid.
const FOLD_EVERY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsrConfig {
    /// Number of candidate means on the normalized `[0, 1]` scale.
    pub grid_size: usize,
    /// Bet truncation, `0 < c < 1`.
    pub c: f64,
    /// A-priori lower bound on every sample.
    pub lower: f64,
    /// A-priori upper bound on every sample.
    pub upper: f64,
}

impl WsrConfig {
    pub fn new(grid_size: usize, c: f64, lower: f64, upper: f64) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::Config(format!(
                "grid size must be at least 2, got {grid_size}"
            )));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Config(format!(
                "bet truncation c must lie in (0, 1), got {c}"
            )));
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!(
                "range requires finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(WsrConfig {
            grid_size,
            c,
            lower,
            upper,
        })
    }

    /// Default grid over `[0, 1]`.
    pub fn unit() -> Self {
        WsrConfig {
            grid_size: DEFAULT_GRID_SIZE,
            c: DEFAULT_C,
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    /// Normalized candidate `k`: grid cell midpoints `(k + 1/2) / g`.
    #[inline]
    pub fn grid_point(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.grid_size as f64
    }

    /// Width of one grid cell in original units.
    pub fn cell_width(&self) -> f64 {
        self.range() / self.grid_size as f64
    }

    fn to_original(&self, m: f64) -> f64 {
        m * (self.upper - self.lower) + self.lower
    }
}

/// Grid resolution and bet truncation shared by all estimator calls.
///
/// Each estimator calls WSR over a different range (`[0, 1]` for proxy and
/// real means, `[-1, 1]` for the rectifier, and a range growing with
/// `(n + N) / n` for the uniform transform). `grid_density` is the number of
/// grid points per unit of that range, so every call resolves bounds to the
/// same absolute precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsrOptions {
    pub grid_density: usize,
    pub c: f64,
}

impl Default for WsrOptions {
    fn default() -> Self {
        WsrOptions {
            grid_density: DEFAULT_GRID_SIZE,
            c: DEFAULT_C,
        }
    }
}

impl WsrOptions {
    pub fn new(grid_density: usize, c: f64) -> Result<Self> {
        WsrConfig::new(grid_density, c, 0.0, 1.0)?;
        Ok(WsrOptions { grid_density, c })
    }

    pub fn config(&self, lower: f64, upper: f64) -> Result<WsrConfig> {
        let points = (self.grid_density as f64 * (upper - lower)).round();
        let grid_size = if points.is_finite() {
            (points as usize).max(2)
        } else {
            0
        };
        WsrConfig::new(grid_size, self.c, lower, upper)
    }
}

/// Result of one WSR run, in the caller's original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsrInterval {
    /// Lower edge of the lowest surviving grid cell.
    pub lower: f64,
    /// Upper edge of the highest surviving grid cell.
    pub upper: f64,
    /// Smallest surviving candidate mean.
    pub candidate_min: f64,
    /// Largest surviving candidate mean.
    pub candidate_max: f64,
    /// Grid indices of the extreme survivors.
    pub first: usize,
    pub last: usize,
    pub survivors: usize,
}

impl WsrInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Running state of the betting procedure.
///
/// Candidates that have been eliminated are never revisited; the live ones are
/// always inside `lo..hi`.
#[derive(Debug, Clone)]
pub struct WsrState {
    config: WsrConfig,
    n_total: usize,
    log_threshold: f64,
    log_two_over_alpha: f64,
    t: usize,
    // Welford accumulators for the normalized samples seen so far.
    sum: f64,
    mean: f64,
    m2: f64,
    prev_variance: f64,
    grid: Vec<f64>,
    cap_up: Vec<f64>,
    cap_down: Vec<f64>,
    lin_up: Vec<f64>,
    lin_down: Vec<f64>,
    log_up: Vec<f64>,
    log_down: Vec<f64>,
    thr_up: Vec<f64>,
    thr_down: Vec<f64>,
    alive: Vec<bool>,
    lo: usize,
    hi: usize,
}

impl WsrState {
    /// `n_total` is the number of samples the caller will push; it enters the
    /// bet size.
    pub fn new(n_total: usize, alpha: SignificanceLevel, config: WsrConfig) -> Result<Self> {
        let config = WsrConfig::new(config.grid_size, config.c, config.lower, config.upper)?;
        if n_total == 0 {
            return Err(Error::InsufficientData(
                "WSR needs at least one sample".into(),
            ));
        }
        let g = config.grid_size;
        let grid: Vec<f64> = (0..g).map(|k| config.grid_point(k)).collect();
        let cap_up = grid.iter().map(|&m| config.c / m).collect();
        let cap_down = grid.iter().map(|&m| config.c / (1.0 - m)).collect();
        // (1/2) max(M+, M-) >= 1/alpha  <=>  max(M+, M-) >= 2/alpha
        let log_threshold = (2.0 / alpha.value()).ln();
        let threshold = 2.0 / alpha.value();
        Ok(WsrState {
            config,
            n_total,
            log_threshold,
            log_two_over_alpha: (2.0 / alpha.value()).ln(),
            t: 0,
            sum: 0.0,
            mean: 0.0,
            m2: 0.0,
            prev_variance: 0.25,
            grid,
            cap_up,
            cap_down,
            lin_up: vec![1.0; g],
            lin_down: vec![1.0; g],
            log_up: vec![0.0; g],
            log_down: vec![0.0; g],
            thr_up: vec![threshold; g],
            thr_down: vec![threshold; g],
            alive: vec![true; g],
            lo: 0,
            hi: g,
        })
    }

    pub fn config(&self) -> &WsrConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    /// Regularized running mean `(1/2 + sum z) / (t + 1)` on the normalized scale.
    pub fn running_mean(&self) -> f64 {
        (0.5 + self.sum) / (self.t as f64 + 1.0)
    }

    /// Regularized running variance on the normalized scale.
    pub fn running_variance(&self) -> f64 {
        self.prev_variance
    }

    /// Bet size for the next step, before the per-candidate cap.
    pub fn next_lambda(&self) -> f64 {
        (2.0 * self.log_two_over_alpha / (self.n_total as f64 * self.prev_variance)).sqrt()
    }

    /// Feeds one sample in original units.
    pub fn push(&mut self, x: f64) -> Result<()> {
        let cfg = &self.config;
        if !(x >= cfg.lower && x <= cfg.upper) {
            return Err(Error::SampleOutOfRange {
                index: self.t,
                value: x,
                lower: cfg.lower,
                upper: cfg.upper,
            });
        }
        let z = ((x - cfg.lower) / cfg.range()).clamp(0.0, 1.0);
        let lambda = self.next_lambda();

        self.update_capital(z, lambda);
        self.observe(z);
        if self.t.is_multiple_of(FOLD_EVERY) {
            self.fold();
        }
        Ok(())
    }

    /// Advances the running moments by one normalized sample.
    fn observe(&mut self, z: f64) {
        self.t += 1;
        let t = self.t as f64;
        self.sum += z;
        let delta = z - self.mean;
        self.mean += delta / t;
        self.m2 += delta * (z - self.mean);
        let mu_hat = (0.5 + self.sum) / (t + 1.0);
        // sum_j (z_j - mu_hat)^2 = M2 + t (mean - mu_hat)^2
        let spread = self.m2 + t * (self.mean - mu_hat).powi(2);
        self.prev_variance = (0.25 + spread) / (t + 1.0);
    }

    fn update_capital(&mut self, z: f64, lambda: f64) {
        let (lo, hi) = (self.lo, self.hi);
        let grid = &self.grid[lo..hi];
        let cap_up = &self.cap_up[lo..hi];
        let cap_down = &self.cap_down[lo..hi];
        let lin_up = &mut self.lin_up[lo..hi];
        let lin_down = &mut self.lin_down[lo..hi];
        let thr_up = &self.thr_up[lo..hi];
        let thr_down = &self.thr_down[lo..hi];
        let alive = &mut self.alive[lo..hi];
        for i in 0..grid.len() {
            if !alive[i] {
                continue;
            }
            let d = z - grid[i];
            let up = lin_up[i] * (1.0 + lambda.min(cap_up[i]) * d);
            let down = lin_down[i] * (1.0 - lambda.min(cap_down[i]) * d);
            lin_up[i] = up;
            lin_down[i] = down;
            if up >= thr_up[i] || down >= thr_down[i] {
                alive[i] = false;
            }
        }
        while self.lo < self.hi && !self.alive[self.lo] {
            self.lo += 1;
        }
        while self.hi > self.lo && !self.alive[self.hi - 1] {
            self.hi -= 1;
        }
    }

    fn fold(&mut self) {
        for i in self.lo..self.hi {
            if !self.alive[i] {
                continue;
            }
            self.log_up[i] += self.lin_up[i].ln();
            self.log_down[i] += self.lin_down[i].ln();
            self.lin_up[i] = 1.0;
            self.lin_down[i] = 1.0;
            self.thr_up[i] = (self.log_threshold - self.log_up[i]).exp();
            self.thr_down[i] = (self.log_threshold - self.log_down[i]).exp();
        }
    }

    /// Log-capital `(log M+, log M-)` of candidate `k`, or `None` once eliminated.
    pub fn log_capital(&self, k: usize) -> Option<(f64, f64)> {
        self.alive[k].then(|| {
            (
                self.log_up[k] + self.lin_up[k].ln(),
                self.log_down[k] + self.lin_down[k].ln(),
            )
        })
    }

    pub fn is_alive(&self, k: usize) -> bool {
        self.alive[k]
    }

    pub fn survivors(&self) -> impl Iterator<Item = usize> + '_ {
        (self.lo..self.hi).filter(move |&k| self.alive[k])
    }

    pub fn finish(&self) -> Result<WsrInterval> {
        if self.lo >= self.hi {
            return Err(Error::EmptyCandidateSet);
        }
        let cfg = &self.config;
        let (first, last) = (self.lo, self.hi - 1);
        let g = cfg.grid_size as f64;
        Ok(WsrInterval {
            lower: cfg.to_original(first as f64 / g),
            upper: cfg.to_original((last + 1) as f64 / g),
            candidate_min: cfg.to_original(cfg.grid_point(first)),
            candidate_max: cfg.to_original(cfg.grid_point(last)),
            first,
            last,
            survivors: self.survivors().count(),
        })
    }
}

/// Normalizes `samples` and returns `(z_t, lambda_t)` for every step.
fn bet_schedule(
    samples: &[f64],
    alpha: SignificanceLevel,
    config: &WsrConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    // Only the running moments are needed, so the probe gets a minimal grid.
    let minimal = WsrConfig {
        grid_size: 2,
        ..*config
    };
    let mut probe = WsrState::new(samples.len(), alpha, minimal)?;
    let mut zs = Vec::with_capacity(samples.len());
    let mut lambdas = Vec::with_capacity(samples.len());
    for (index, &x) in samples.iter().enumerate() {
        if !(x >= config.lower && x <= config.upper) {
            return Err(Error::SampleOutOfRange {
                index,
                value: x,
                lower: config.lower,
                upper: config.upper,
            });
        }
        let z = ((x - config.lower) / config.range()).clamp(0.0, 1.0);
        lambdas.push(probe.next_lambda());
        zs.push(z);
        probe.observe(z);
    }
    Ok((zs, lambdas))
}

/// Whether one capital process for candidate `m` ever reaches the threshold.
/// Mirrors the arithmetic of [`WsrState`] step for step.
fn ever_crosses(
    zs: &[f64],
    lambdas: &[f64],
    m: f64,
    cap: f64,
    up: bool,
    log_threshold: f64,
) -> bool {
    let mut lin = 1.0f64;
    let mut log = 0.0f64;
    let mut thr = log_threshold.exp();
    for (t, (&z, &lambda)) in zs.iter().zip(lambdas).enumerate() {
        let d = z - m;
        lin = if up {
            lin * (1.0 + lambda.min(cap) * d)
        } else {
            lin * (1.0 - lambda.min(cap) * d)
        };
        if lin >= thr {
            return true;
        }
        if (t + 1) % FOLD_EVERY == 0 {
            log += lin.ln();
            lin = 1.0;
            thr = (log_threshold - log).exp();
        }
    }
    false
}

/// Confidence set for the mean of `samples`, each assumed to lie in
/// `[config.lower, config.upper]`.
///
/// The upward capital is nonincreasing in the candidate and the downward one
/// nondecreasing, so the survivors are a contiguous run of grid indices whose
/// two ends are found by bisection instead of sweeping the whole grid.
///
/// The returned bounds cover the full grid cells of the extreme surviving
/// candidates and are not truncated; callers clip to `[0, 1]` where the
/// estimand is a `[0, 1]` mean.
pub fn wsr_interval(
    samples: &[f64],
    alpha: SignificanceLevel,
    config: &WsrConfig,
) -> Result<WsrInterval> {
    let config = WsrConfig::new(config.grid_size, config.c, config.lower, config.upper)?;
    let (zs, lambdas) = bet_schedule(samples, alpha, &config)?;
    let log_threshold = (2.0 / alpha.value()).ln();
    let g = config.grid_size;
    let up_crosses = |k: usize| {
        let m = config.grid_point(k);
        ever_crosses(&zs, &lambdas, m, config.c / m, true, log_threshold)
    };
    let down_crosses = |k: usize| {
        let m = config.grid_point(k);
        ever_crosses(&zs, &lambdas, m, config.c / (1.0 - m), false, log_threshold)
    };
    // first = smallest k not rejected from above; last = largest k not rejected from below.
    let first = partition_point(g, up_crosses);
    let last_excl = partition_point(g, |k| !down_crosses(k));
    if first >= last_excl {
        return Err(Error::EmptyCandidateSet);
    }
    let last = last_excl - 1;
    let gf = g as f64;
    Ok(WsrInterval {
        lower: config.to_original(first as f64 / gf),
        upper: config.to_original((last + 1) as f64 / gf),
        candidate_min: config.to_original(config.grid_point(first)),
        candidate_max: config.to_original(config.grid_point(last)),
        first,
        last,
        survivors: last - first + 1,
    })
}

/// First index in `0..len` where `pred` turns false; `pred` must be true on a prefix.
fn partition_point(len: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
