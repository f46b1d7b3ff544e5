//! Domain types shared by the estimators and the experiment harness.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded evaluation score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Score(value))
        } else {
            Err(Error::InvalidScore(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Score {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Score::new(value)
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.0
    }
}

/// One matched evaluation: the real outcome `y` and the proxy prediction `f`
/// for the same environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub id: String,
    pub y: Score,
    pub f: Score,
}

impl PairedSample {
    #[inline]
    pub fn residual(&self) -> f64 {
        self.y.value() - self.f.value()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairedDataset {
    samples: Vec<PairedSample>,
}

impl PairedDataset {
    /// Builds a dataset, rejecting duplicate ids.
    pub fn new(samples: Vec<PairedSample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for (row, s) in samples.iter().enumerate() {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: s.id.clone(),
                    row: row + 1,
                });
            }
        }
        Ok(PairedDataset { samples })
    }

    /// Builds a dataset from raw `(y, f)` pairs, numbering ids from zero.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let samples = pairs
            .iter()
            .enumerate()
            .map(|(i, &(y, f))| {
                Ok(PairedSample {
                    id: i.to_string(),
                    y: Score::new(y)?,
                    f: Score::new(f)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PairedDataset { samples })
    }

    // Callers guarantee id uniqueness (subsets of an existing dataset).
    pub(crate) fn from_unique(samples: Vec<PairedSample>) -> Self {
        PairedDataset { samples }
    }

    pub fn samples(&self) -> &[PairedSample] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn real_scores(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y.value()).collect()
    }

    pub fn proxy_scores(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.f.value()).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.samples.iter().map(PairedSample::residual).collect()
    }
}

/// Proxy-only evaluations with no matching real outcome.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimDataset {
    scores: Vec<Score>,
}

impl SimDataset {
    pub fn new(scores: Vec<Score>) -> Self {
        SimDataset { scores }
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let scores = values
            .iter()
            .map(|&v| Score::new(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(SimDataset { scores })
    }

    pub fn scores(&self) -> &[Score] {
        &self.scores
    }

    pub fn values(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.value()).collect()
    }

    pub fn cap_n(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Significance level `alpha`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SignificanceLevel(f64);

impl SignificanceLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(SignificanceLevel(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `alpha * factor`, for budget splits such as `3 alpha / 4`.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        SignificanceLevel::new(self.0 * factor)
    }
}

impl TryFrom<f64> for SignificanceLevel {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        SignificanceLevel::new(value)
    }
}

impl From<SignificanceLevel> for f64 {
    fn from(a: SignificanceLevel) -> f64 {
        a.0
    }
}

impl fmt::Display for SignificanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "classical")]
    Classical,
    #[serde(rename = "suresim")]
    SureSim,
    #[serde(rename = "suresim-ub")]
    SureSimUB,
    #[serde(rename = "two-stage")]
    TwoStage,
    #[serde(rename = "two-stage-ub")]
    TwoStageUB,
    #[serde(rename = "cv")]
    CVStandard,
    #[serde(rename = "cv-split")]
    CVSplit,
    #[serde(rename = "rectifier")]
    Rectifier,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Classical,
        Method::SureSim,
        Method::SureSimUB,
        Method::TwoStage,
        Method::TwoStageUB,
        Method::CVStandard,
        Method::CVSplit,
        Method::Rectifier,
    ];

    /// Methods with a finite-sample coverage guarantee for the real mean.
    pub const VALID: [Method; 5] = [
        Method::Classical,
        Method::SureSim,
        Method::SureSimUB,
        Method::TwoStage,
        Method::TwoStageUB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::SureSim => "suresim",
            Method::SureSimUB => "suresim-ub",
            Method::TwoStage => "two-stage",
            Method::TwoStageUB => "two-stage-ub",
            Method::CVStandard => "cv",
            Method::CVSplit => "cv-split",
            Method::Rectifier => "rectifier",
        }
    }

    /// True for the betting-martingale family.
    pub fn is_wsr_based(self) -> bool {
        !matches!(self, Method::CVStandard | Method::CVSplit)
    }

    /// Whether the method estimates the real mean (as opposed to the rectifier).
    pub fn targets_real_mean(self) -> bool {
        self != Method::Rectifier
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// A confidence interval together with the pre-truncation bounds it came from.
///
/// `lower`/`upper` are the reported bounds. For methods estimating the mean of
/// a `[0, 1]` metric they are clipped to `[0, 1]`; `raw_lower`/`raw_upper`
/// keep the unclipped values. The truncation flags record that a bound sits on
/// the `[0, 1]` limit after clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub raw_lower: f64,
    pub raw_upper: f64,
    pub alpha: SignificanceLevel,
    pub method: Method,
    pub truncated_lower: bool,
    pub truncated_upper: bool,
}

impl ConfidenceInterval {
    /// An interval reported exactly as computed.
    pub fn untruncated(lower: f64, upper: f64, alpha: SignificanceLevel, method: Method) -> Self {
        debug_assert!(lower <= upper, "lower {lower} > upper {upper}");
        ConfidenceInterval {
            lower,
            upper,
            raw_lower: lower,
            raw_upper: upper,
            alpha,
            method,
            truncated_lower: false,
            truncated_upper: false,
        }
    }

    /// An interval on a `[0, 1]` mean, clipped to `[0, 1]`.
    pub fn unit_truncated(
        lower: f64,
        upper: f64,
        alpha: SignificanceLevel,
        method: Method,
    ) -> Self {
        debug_assert!(lower <= upper, "lower {lower} > upper {upper}");
        let lo = lower.clamp(0.0, 1.0);
        let hi = upper.clamp(0.0, 1.0);
        ConfidenceInterval {
            lower: lo,
            upper: hi,
            raw_lower: lower,
            raw_upper: upper,
            alpha,
            method,
            truncated_lower: lower <= 0.0,
            truncated_upper: upper >= 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn raw_width(&self) -> f64 {
        self.raw_upper - self.raw_lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn raw_contains(&self, x: f64) -> bool {
        self.raw_lower <= x && x <= self.raw_upper
    }

    /// Intersection of two intervals on the same `[0, 1]` mean, reported under
    /// `method` at `alpha`. Disjoint inputs are an error.
    pub fn intersect(
        &self,
        other: &ConfidenceInterval,
        alpha: SignificanceLevel,
        method: Method,
    ) -> Result<ConfidenceInterval> {
        let raw_lower = self.raw_lower.max(other.raw_lower);
        let raw_upper = self.raw_upper.min(other.raw_upper);
        let lower = self.lower.max(other.lower);
        let upper = self.upper.min(other.upper);
        if lower > upper || raw_lower > raw_upper {
            return Err(Error::DisjointHedge {
                a_lower: self.lower,
                a_upper: self.upper,
                b_lower: other.lower,
                b_upper: other.upper,
            });
        }
        Ok(ConfidenceInterval {
            lower,
            upper,
            raw_lower,
            raw_upper,
            alpha,
            method,
            truncated_lower: lower <= 0.0,
            truncated_upper: upper >= 1.0,
        })
    }
}

/// Paired-set and proxy-set summary statistics.
///
/// Variances use the `n - 1` denominator. `rho` is `None` when either paired
/// column has zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    #[serde(rename = "N")]
    pub cap_n: usize,
    pub rho: Option<f64>,
    pub mean_y: f64,
    pub mean_f_paired: f64,
    /// `None` when there are no additional proxy scores.
    pub mean_f_sim: Option<f64>,
    pub var_y: f64,
    pub var_f_paired: f64,
    pub cov_yf: f64,
    pub var_rect: f64,
}

pub fn summary_stats(paired: &PairedDataset, sim: &SimDataset) -> Result<SummaryStats> {
    let n = paired.n();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "summary statistics need at least 2 paired samples, got {n}"
        )));
    }
    let nf = n as f64;
    let (sum_y, sum_f) = paired
        .samples()
        .iter()
        .fold((0.0, 0.0), |(a, b), s| (a + s.y.value(), b + s.f.value()));
    let mean_y = sum_y / nf;
    let mean_f = sum_f / nf;

    let (mut syy, mut sff, mut syf) = (0.0, 0.0, 0.0);
    for s in paired.samples() {
        let dy = s.y.value() - mean_y;
        let df = s.f.value() - mean_f;
        syy += dy * dy;
        sff += df * df;
        syf += dy * df;
    }
    let var_y = syy / (nf - 1.0);
    let var_f = sff / (nf - 1.0);
    let cov = syf / (nf - 1.0);
    // Same centered sums give var(y - f) = var_y + var_f - 2 cov exactly.
    let var_rect = ((syy + sff - 2.0 * syf) / (nf - 1.0)).max(0.0);

    let rho = if syy > 0.0 && sff > 0.0 {
        Some((syf / (syy * sff).sqrt()).clamp(-1.0, 1.0))
    } else {
        None
    };

    let mean_f_sim = if sim.is_empty() {
        None
    } else {
        Some(sim.scores().iter().map(|s| s.value()).sum::<f64>() / sim.cap_n() as f64)
    };

    Ok(SummaryStats {
        n,
        cap_n: sim.cap_n(),
        rho,
        mean_y,
        mean_f_paired: mean_f,
        mean_f_sim,
        var_y,
        var_f_paired: var_f,
        cov_yf: cov,
        var_rect,
    })
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `n` samples uniformly from `bank`, keeping each `(y, f)` pair intact.
///
/// Without replacement the result is a uniformly random ordered subset. With
/// replacement, repeated draws get a `#k` suffix appended to their id so the
/// result still has unique ids.
pub fn resample_paired(
    bank: &PairedDataset,
    n: usize,
    with_replacement: bool,
    seed: u64,
) -> Result<PairedDataset> {
    let mut rng = rng_from_seed(seed);
    if with_replacement {
        if bank.is_empty() && n > 0 {
            return Err(Error::InsufficientData(
                "cannot resample from an empty dataset".into(),
            ));
        }
        let mut counts = vec![0usize; bank.n()];
        let samples = (0..n)
            .map(|_| {
                let i = rng.random_range(0..bank.n());
                let k = counts[i];
                counts[i] += 1;
                let mut s = bank.samples[i].clone();
                if k > 0 {
                    s.id = format!("{}#{k}", s.id);
                }
                s
            })
            .collect();
        PairedDataset::new(samples)
    } else {
        if n > bank.n() {
            return Err(Error::InsufficientData(format!(
                "cannot draw {n} samples without replacement from {}",
                bank.n()
            )));
        }
        let samples = index::sample(&mut rng, bank.n(), n)
            .into_iter()
            .map(|i| bank.samples[i].clone())
            .collect();
        Ok(PairedDataset::from_unique(samples))
    }
}

/// Draws `n` proxy scores uniformly from `pool`.
pub fn resample_sim(
    pool: &SimDataset,
    n: usize,
    with_replacement: bool,
    seed: u64,
) -> Result<SimDataset> {
    let mut rng = rng_from_seed(seed);
    if with_replacement {
        if pool.is_empty() && n > 0 {
            return Err(Error::InsufficientData(
                "cannot resample from an empty proxy set".into(),
            ));
        }
        let scores = (0..n)
            .map(|_| pool.scores[rng.random_range(0..pool.cap_n())])
            .collect();
        Ok(SimDataset::new(scores))
    } else {
        if n > pool.cap_n() {
            return Err(Error::InsufficientData(format!(
                "cannot draw {n} proxy scores without replacement from {}",
                pool.cap_n()
            )));
        }
        let scores = index::sample(&mut rng, pool.cap_n(), n)
            .into_iter()
            .map(|i| pool.scores[i])
            .collect();
        Ok(SimDataset::new(scores))
    }
}
