use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_and_se, Axis, DrawOutcome, Engine, Provenance, Source, SweepConfig};
use crate::error::{Error, Result};
use crate::model::Method;

/// Aggregated widths of one method at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub axis_value: f64,
    pub method: Method,
    pub mean_width: f64,
    pub se_width: f64,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub trunc_lo_freq: f64,
    pub trunc_hi_freq: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub cap_n: usize,
    pub alpha: f64,
    pub delta: Option<f64>,
    pub redraws: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, axis_value: f64, method: Method) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.method == method)
    }
}

/// Empirical coverage of one method at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub axis: Axis,
    pub axis_value: f64,
    pub method: Method,
    pub coverage: f64,
    pub se_coverage: f64,
    pub covered: usize,
    /// Trials that produced an empty confidence set.
    pub empty: usize,
    pub trials: usize,
    pub mean_width: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub cap_n: usize,
    pub alpha: f64,
    pub delta: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub provenance: Provenance,
    pub rows: Vec<CoverageRow>,
}

impl CoverageResult {
    pub fn row(&self, axis_value: f64, method: Method) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.method == method)
    }
}

/// Runs `count` redraws at every grid point, in parallel, returning outcomes
/// grouped by grid index in redraw order.
fn collect_outcomes(engine: &Engine<'_>, count: usize) -> Result<Vec<Vec<DrawOutcome>>> {
    let jobs: Vec<(usize, usize)> = (0..engine.points().len())
        .flat_map(|gi| (0..count).map(move |r| (gi, r)))
        .collect();
    let flat = jobs
        .par_iter()
        .map(|&(gi, r)| engine.outcome(gi, r))
        .collect::<Result<Vec<_>>>()?;
    let mut grouped: Vec<Vec<DrawOutcome>> = Vec::with_capacity(engine.points().len());
    let mut it = flat.into_iter();
    for _ in 0..engine.points().len() {
        grouped.push(it.by_ref().take(count).collect());
    }
    Ok(grouped)
}

pub fn run_width_sweep(config: &SweepConfig, source: &Source) -> Result<SweepResult> {
    let engine = Engine::new(config, source)?;
    let outcomes = collect_outcomes(&engine, config.redraws)?;
    let mut rows = Vec::new();
    for (gi, draws) in outcomes.iter().enumerate() {
        let p = engine.points()[gi];
        for (mi, &method) in engine.methods().iter().enumerate() {
            let (mut widths, mut lowers, mut uppers, mut deltas) =
                (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            let (mut lo_hits, mut hi_hits) = (0usize, 0usize);
            for d in draws {
                let o = &d.intervals[mi];
                debug_assert_eq!(o.method, method);
                if let Some((lo, hi)) = o.bounds(config.untruncated) {
                    widths.push(hi - lo);
                    lowers.push(lo);
                    uppers.push(hi);
                }
                if let Some(ci) = &o.interval {
                    lo_hits += ci.truncated_lower as usize;
                    hi_hits += ci.truncated_upper as usize;
                }
                deltas.extend(o.delta);
            }
            let k = draws.len() as f64;
            let (mean_width, se_width) = mean_and_se(&widths);
            rows.push(SweepRow {
                axis: config.axis,
                axis_value: config.grid[gi],
                method,
                mean_width,
                se_width,
                mean_lower: lowers.iter().sum::<f64>() / lowers.len() as f64,
                mean_upper: uppers.iter().sum::<f64>() / uppers.len() as f64,
                trunc_lo_freq: lo_hits as f64 / k,
                trunc_hi_freq: hi_hits as f64 / k,
                n: p.n,
                cap_n: p.cap_n,
                alpha: p.alpha.value(),
                delta: (!deltas.is_empty())
                    .then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
                redraws: draws.len(),
                seed: config.seed,
            });
        }
    }
    Ok(SweepResult {
        provenance: Provenance::new("sweep", config, source),
        rows,
    })
}

/// Fraction of `trials_for_coverage` redraws whose interval contains the true
/// mean, for every selected method that estimates the real mean.
pub fn run_coverage_sweep(config: &SweepConfig, source: &Source) -> Result<CoverageResult> {
    if config.trials_for_coverage == 0 {
        return Err(Error::Config("coverage needs at least one trial".into()));
    }
    if matches!(source, Source::Real { .. }) {
        return Err(Error::Config(
            "coverage needs a source with a known mean (a generated or loaded bank)".into(),
        ));
    }
    let engine = Engine::new(config, source)?;
    let trials = config.trials_for_coverage;
    let outcomes = collect_outcomes(&engine, trials)?;
    let mut rows = Vec::new();
    for (gi, draws) in outcomes.iter().enumerate() {
        let p = engine.points()[gi];
        for (mi, &method) in engine.methods().iter().enumerate() {
            if !method.targets_real_mean() {
                continue;
            }
            let (mut covered, mut empty) = (0usize, 0usize);
            let mut widths = Vec::new();
            let mut deltas = Vec::new();
            for d in draws {
                let truth = d.truth.expect("bank sources carry the true mean");
                let o = &d.intervals[mi];
                covered += o.covers(truth, config.untruncated) as usize;
                empty += o.interval.is_none() as usize;
                widths.extend(o.width(config.untruncated));
                deltas.extend(o.delta);
            }
            let rate = covered as f64 / trials as f64;
            rows.push(CoverageRow {
                axis: config.axis,
                axis_value: config.grid[gi],
                method,
                coverage: rate,
                se_coverage: (rate * (1.0 - rate) / trials as f64).sqrt(),
                covered,
                empty,
                trials,
                mean_width: widths.iter().sum::<f64>() / widths.len() as f64,
                n: p.n,
                cap_n: p.cap_n,
                alpha: p.alpha.value(),
                delta: (!deltas.is_empty())
                    .then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
                seed: config.seed,
            });
        }
    }
    Ok(CoverageResult {
        provenance: Provenance::new("coverage", config, source),
        rows,
    })
}
