//! Seeded Monte Carlo experiments over synthetic banks or real score files:
//! interval width sweeps, coverage sweeps, and the real-sample savings search.
//!
//! Every redraw gets its own seed derived from the base seed, the grid index
//! and the redraw index, so results do not depend on scheduling and the first
//! `k` redraws are unchanged when more are requested.

mod emit;
mod savings;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cv::{cv_interval, cv_split_interval};
use crate::error::{Error, Result};
use crate::model::{
    resample_paired, resample_sim, ConfidenceInterval, Method, PairedDataset, SignificanceLevel,
    SimDataset,
};
use crate::ppi::{
    classical_interval, optimize_risk_split, rectifier_interval, suresim_interval,
    suresim_ub_interval, two_stage_interval, two_stage_ub_interval, RiskSplit, HEDGE_PPI_SHARE,
};
use crate::synth::{generate_bank, partition_bank, BankSpec, LabeledBank};
use crate::wsr::WsrOptions;

pub use emit::{emit_results, read_csv_results, read_json_results, Format, ResultSet};
pub use savings::{compute_savings, SavingsResult, SavingsRow};
pub use sweep::{
    run_coverage_sweep, run_width_sweep, CoverageResult, CoverageRow, SweepResult, SweepRow,
};

/// CSV column order of width sweeps.
pub const SWEEP_HEADER: [&str; 15] = [
    "axis",
    "axis_value",
    "method",
    "mean_width",
    "se_width",
    "mean_lower",
    "mean_upper",
    "trunc_lo_freq",
    "trunc_hi_freq",
    "n",
    "N",
    "alpha",
    "delta",
    "redraws",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "nsim")]
    NSim,
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "alpha")]
    Alpha,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::NSim => "nsim",
            Axis::Rho => "rho",
            Axis::Alpha => "alpha",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nsim" => Ok(Axis::NSim),
            "rho" => Ok(Axis::Rho),
            "alpha" => Ok(Axis::Alpha),
            _ => Err(Error::Config(format!("unknown sweep axis `{s}`"))),
        }
    }
}

/// How the two-stage budget is divided between rectifier and proxy mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaPolicy {
    /// `delta = 0.9 alpha`.
    #[serde(rename = "heuristic")]
    Heuristic,
    /// Width-minimizing search per redraw.
    #[serde(rename = "optimized")]
    Optimized,
}

/// Synthetic banks: a new bank per redraw, or one bank per grid point that
/// every redraw partitions afresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BankMode {
    #[serde(rename = "fresh")]
    Fresh,
    #[serde(rename = "bootstrap")]
    Bootstrap,
}

/// What coverage is checked against: the exact bank mean, or the mean of a
/// held-out paired split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverageTruth {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "heldout")]
    Heldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub n: usize,
    #[serde(rename = "N")]
    pub cap_n: usize,
    pub alpha: f64,
    pub rho: f64,
    pub mu_real: f64,
    pub mu_sim: f64,
    pub redraws: usize,
    pub trials_for_coverage: usize,
    pub seed: u64,
    pub delta_policy: DeltaPolicy,
    pub bank_mode: BankMode,
    /// Synthetic bank size as a multiple of `n + N + heldout`.
    pub bank_multiplier: usize,
    pub rho_tolerance: f64,
    pub sim_with_replacement: bool,
    pub split_fraction: f64,
    pub coverage_truth: CoverageTruth,
    pub heldout: usize,
    /// Report pre-truncation bounds and widths.
    pub untruncated: bool,
    /// Largest real sample size tried by the savings search.
    pub savings_cap: usize,
    pub wsr: WsrOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            methods: vec![
                Method::Classical,
                Method::SureSim,
                Method::SureSimUB,
                Method::TwoStage,
                Method::TwoStageUB,
                Method::CVStandard,
                Method::CVSplit,
            ],
            axis: Axis::NSim,
            grid: vec![2000.0],
            n: 100,
            cap_n: 2000,
            alpha: 0.1,
            rho: 0.97,
            mu_real: 0.5,
            mu_sim: 0.5,
            redraws: 100,
            trials_for_coverage: 1000,
            seed: 0,
            delta_policy: DeltaPolicy::Heuristic,
            bank_mode: BankMode::Fresh,
            bank_multiplier: 4,
            rho_tolerance: 0.01,
            sim_with_replacement: false,
            split_fraction: 0.2,
            coverage_truth: CoverageTruth::Exact,
            heldout: 400,
            untruncated: false,
            savings_cap: 10_000,
            wsr: WsrOptions::default(),
        }
    }
}

/// Parameters in effect at one grid value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub n: usize,
    pub cap_n: usize,
    pub alpha: SignificanceLevel,
    pub rho: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.redraws == 0 {
            return Err(Error::Config("redraws must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.bank_multiplier == 0 {
            return Err(Error::Config("bank multiplier must be at least 1".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        WsrOptions::new(self.wsr.grid_density, self.wsr.c)?;
        for &v in &self.grid {
            self.point(v)?;
        }
        self.point_fixed()?;
        Ok(())
    }

    /// Parameters at grid value `v` of the swept axis.
    pub fn point(&self, v: f64) -> Result<Point> {
        let mut p = Point {
            n: self.n,
            cap_n: self.cap_n,
            alpha: SignificanceLevel::new(self.alpha)?,
            rho: self.rho,
        };
        match self.axis {
            Axis::NSim => {
                if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
                    return Err(Error::Config(format!(
                        "simulation counts must be nonnegative integers, got {v}"
                    )));
                }
                p.cap_n = v as usize;
            }
            Axis::Rho => {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!("correlation {v} outside [-1, 1]")));
                }
                p.rho = v;
            }
            Axis::Alpha => p.alpha = SignificanceLevel::new(v)?,
        }
        Ok(p)
    }

    /// Parameters ignoring the sweep axis.
    pub fn point_fixed(&self) -> Result<Point> {
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!(
                "correlation {} outside [-1, 1]",
                self.rho
            )));
        }
        Ok(Point {
            n: self.n,
            cap_n: self.cap_n,
            alpha: SignificanceLevel::new(self.alpha)?,
            rho: self.rho,
        })
    }

    /// Selected methods with the rectifier appended when absent.
    pub fn reported_methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::with_capacity(self.methods.len() + 1);
        for &m in &self.methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if !out.contains(&Method::Rectifier) {
            out.push(Method::Rectifier);
        }
        out
    }

    /// Hex SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn heldout_count(&self) -> usize {
        match self.coverage_truth {
            CoverageTruth::Exact => 0,
            CoverageTruth::Heldout => self.heldout,
        }
    }
}

/// Where redraws come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// Banks generated from the config's means and correlation.
    Synthetic,
    /// One fixed bank.
    Bank(LabeledBank),
    /// Real paired scores and a proxy-only pool; no known mean.
    Real {
        paired: PairedDataset,
        sim: SimDataset,
    },
}

impl Source {
    pub fn label(&self) -> &'static str {
        match self {
            Source::Synthetic => "synthetic",
            Source::Bank(_) => "bank",
            Source::Real { .. } => "real",
        }
    }

    fn check_axis(&self, axis: Axis) -> Result<()> {
        if axis == Axis::Rho && !matches!(self, Source::Synthetic) {
            return Err(Error::Config(
                "the correlation axis needs generated banks; a fixed data source has its own correlation"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Seeds derived from the base seed and a path of indices (splitmix64 chain).
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

// Purpose tags keeping derived seed streams apart.
const TAG_BANK: u64 = 1;
const TAG_PARTITION: u64 = 2;
const TAG_SIM: u64 = 3;
const TAG_CV: u64 = 4;
const TAG_CLASSICAL: u64 = 5;

/// Rectifier budget for `alpha` under `policy`.
pub fn active_split(
    paired: &PairedDataset,
    sim: &SimDataset,
    alpha: SignificanceLevel,
    policy: DeltaPolicy,
    opts: &WsrOptions,
) -> Result<RiskSplit> {
    match policy {
        DeltaPolicy::Heuristic => Ok(RiskSplit::heuristic(alpha)),
        DeltaPolicy::Optimized => optimize_risk_split(paired, sim, alpha, opts),
    }
}

/// Interval of one method on one draw.
pub fn method_interval(
    method: Method,
    paired: &PairedDataset,
    sim: &SimDataset,
    split: RiskSplit,
    split_fraction: f64,
    cv_seed: u64,
    opts: &WsrOptions,
) -> Result<ConfidenceInterval> {
    let alpha = split.alpha();
    match method {
        Method::Classical => classical_interval(&paired.real_scores(), alpha, opts),
        Method::SureSim => suresim_interval(paired, sim, alpha, opts),
        Method::SureSimUB => suresim_ub_interval(paired, sim, alpha, opts),
        Method::TwoStage => two_stage_interval(paired, sim, split, opts),
        Method::TwoStageUB => two_stage_ub_interval(paired, sim, alpha, opts),
        Method::CVStandard => cv_interval(paired, sim, alpha),
        Method::CVSplit => cv_split_interval(paired, sim, alpha, split_fraction, cv_seed),
        Method::Rectifier => rectifier_interval(paired, split.delta(), opts),
    }
}

/// Rectifier level reported alongside a method, if it has one.
fn method_delta(method: Method, split: RiskSplit) -> Option<f64> {
    match method {
        Method::TwoStage | Method::Rectifier => Some(split.delta().value()),
        Method::TwoStageUB => split
            .alpha()
            .scaled(HEDGE_PPI_SHARE)
            .ok()
            .map(|a| RiskSplit::heuristic(a).delta().value()),
        _ => None,
    }
}

/// One redraw: the datasets and the quantity coverage is judged against.
#[derive(Debug, Clone)]
pub struct Draw {
    pub paired: PairedDataset,
    pub sim: SimDataset,
    pub truth: Option<f64>,
}

/// One method's result on one redraw.
///
/// `interval` is `None` when the method returned an empty confidence set:
/// either every WSR candidate was rejected, or a hedged method's two
/// component intervals were disjoint. Both can only happen when the true mean
/// was rejected, so the harness counts them as misses in coverage and leaves
/// them out of width averages.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub interval: Option<ConfidenceInterval>,
    pub delta: Option<f64>,
}

impl MethodOutcome {
    pub fn bounds(&self, untruncated: bool) -> Option<(f64, f64)> {
        self.interval.map(|ci| {
            if untruncated {
                (ci.raw_lower, ci.raw_upper)
            } else {
                (ci.lower, ci.upper)
            }
        })
    }

    pub fn width(&self, untruncated: bool) -> Option<f64> {
        self.bounds(untruncated).map(|(lo, hi)| hi - lo)
    }

    pub fn covers(&self, truth: f64, untruncated: bool) -> bool {
        self.bounds(untruncated)
            .is_some_and(|(lo, hi)| lo <= truth && truth <= hi)
    }
}

/// Intervals of every reported method on one redraw.
#[derive(Debug, Clone)]
pub struct DrawOutcome {
    pub intervals: Vec<MethodOutcome>,
    pub truth: Option<f64>,
}

/// Prepared experiment: validated config, source and any per-grid-point banks.
pub struct Engine<'a> {
    config: &'a SweepConfig,
    source: &'a Source,
    points: Vec<Point>,
    methods: Vec<Method>,
    banks: Vec<Option<LabeledBank>>,
}

impl<'a> Engine<'a> {
    pub fn new(config: &'a SweepConfig, source: &'a Source) -> Result<Self> {
        config.validate()?;
        source.check_axis(config.axis)?;
        let points = config
            .grid
            .iter()
            .map(|&v| config.point(v))
            .collect::<Result<Vec<_>>>()?;
        let banks = match (source, config.bank_mode) {
            (Source::Synthetic, BankMode::Bootstrap) => points
                .iter()
                .enumerate()
                .map(|(gi, p)| {
                    generate_bank(&bank_spec(
                        config,
                        p,
                        derive_seed(config.seed, &[TAG_BANK, gi as u64]),
                    ))
                    .map(Some)
                })
                .collect::<Result<Vec<_>>>()?,
            _ => vec![None; points.len()],
        };
        Ok(Engine {
            config,
            source,
            points,
            methods: config.reported_methods(),
            banks,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    /// Datasets of redraw `redraw` at grid index `gi`.
    pub fn draw(&self, gi: usize, redraw: usize) -> Result<Draw> {
        let cfg = self.config;
        let p = self.points[gi];
        let key = [gi as u64, redraw as u64];
        match self.source {
            Source::Synthetic => match &self.banks[gi] {
                Some(bank) => self.from_bank(bank, &p, &key),
                None => {
                    let seed = derive_seed(cfg.seed, &[TAG_BANK, key[0], key[1]]);
                    let bank = generate_bank(&bank_spec(cfg, &p, seed))?;
                    self.from_bank(&bank, &p, &key)
                }
            },
            Source::Bank(bank) => self.from_bank(bank, &p, &key),
            Source::Real { paired, sim } => {
                let paired = resample_paired(
                    paired,
                    p.n,
                    false,
                    derive_seed(cfg.seed, &[TAG_PARTITION, key[0], key[1]]),
                )?;
                let sim = resample_sim(
                    sim,
                    p.cap_n,
                    cfg.sim_with_replacement,
                    derive_seed(cfg.seed, &[TAG_SIM, key[0], key[1]]),
                )?;
                Ok(Draw {
                    paired,
                    sim,
                    truth: None,
                })
            }
        }
    }

    fn from_bank(&self, bank: &LabeledBank, p: &Point, key: &[u64; 2]) -> Result<Draw> {
        let cfg = self.config;
        let heldout = cfg.heldout_count();
        let part_seed = derive_seed(cfg.seed, &[TAG_PARTITION, key[0], key[1]]);
        let (paired, sim, held) = if cfg.sim_with_replacement {
            let pool_size = bank.size().checked_sub(p.n + heldout).ok_or_else(|| {
                Error::InsufficientData(format!(
                    "bank of {} cannot supply {} paired and {heldout} held-out samples",
                    bank.size(),
                    p.n
                ))
            })?;
            let (paired, pool, held) = partition_bank(bank, p.n, pool_size, heldout, part_seed)?;
            let sim_seed = derive_seed(cfg.seed, &[TAG_SIM, key[0], key[1]]);
            (paired, resample_sim(&pool, p.cap_n, true, sim_seed)?, held)
        } else {
            partition_bank(bank, p.n, p.cap_n, heldout, part_seed)?
        };
        let truth = match cfg.coverage_truth {
            CoverageTruth::Exact => bank.true_mu,
            CoverageTruth::Heldout => {
                if held.is_empty() {
                    return Err(Error::Config("held-out coverage needs heldout >= 1".into()));
                }
                held.real_scores().iter().sum::<f64>() / held.n() as f64
            }
        };
        Ok(Draw {
            paired,
            sim,
            truth: Some(truth),
        })
    }

    /// Intervals of every reported method on redraw `redraw` at grid index `gi`.
    pub fn outcome(&self, gi: usize, redraw: usize) -> Result<DrawOutcome> {
        let cfg = self.config;
        let p = self.points[gi];
        let draw = self.draw(gi, redraw)?;
        let needs_split = self
            .methods
            .iter()
            .any(|m| matches!(m, Method::TwoStage | Method::Rectifier));
        let split = if needs_split && !draw.sim.is_empty() {
            active_split(&draw.paired, &draw.sim, p.alpha, cfg.delta_policy, &cfg.wsr)?
        } else {
            RiskSplit::heuristic(p.alpha)
        };
        let cv_seed = derive_seed(cfg.seed, &[TAG_CV, gi as u64, redraw as u64]);
        let intervals = self
            .methods
            .iter()
            .map(|&method| {
                let interval = match method_interval(
                    method,
                    &draw.paired,
                    &draw.sim,
                    split,
                    cfg.split_fraction,
                    cv_seed,
                    &cfg.wsr,
                ) {
                    Ok(ci) => Some(ci),
                    Err(Error::DisjointHedge { .. } | Error::EmptyCandidateSet) => None,
                    Err(e) => return Err(e),
                };
                Ok(MethodOutcome {
                    method,
                    interval,
                    delta: method_delta(method, split),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DrawOutcome {
            intervals,
            truth: draw.truth,
        })
    }
}

fn bank_spec(cfg: &SweepConfig, p: &Point, seed: u64) -> BankSpec {
    BankSpec {
        mu_real: cfg.mu_real,
        mu_sim: cfg.mu_sim,
        rho_target: p.rho,
        size: cfg.bank_multiplier * (p.n + p.cap_n + cfg.heldout_count()),
        rho_tolerance: cfg.rho_tolerance,
        seed,
    }
}

/// Provenance block attached to every emitted result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub source: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: SweepConfig,
}

impl Provenance {
    fn new(kind: &str, config: &SweepConfig, source: &Source) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.to_string(),
            source: source.label().to_string(),
            seed: config.seed,
            config_sha256: config.hash(),
            config: config.clone(),
        }
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
