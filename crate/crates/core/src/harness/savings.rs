//! How many real samples the real-only baseline needs to match a method.
//!
//! For each outer redraw the method's width at `n` is compared with the
//! baseline's mean width `W(n')` over `redraws` inner draws of `n'` real
//! scores. The smallest `n'` with `W(n') < width` is found by doubling from `n`
//! and then bisecting (or bisecting below `n` when the method is wider than
//! the baseline). `W` is cached, so the search costs `O(log n')` evaluations
//! shared across redraws.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    derive_seed, mean_and_se, Axis, Engine, Provenance, Source, SweepConfig, TAG_CLASSICAL,
};
use crate::error::{Error, Result};
use crate::model::{resample_paired, rng_from_seed, Method};
use crate::ppi::classical_interval;
use crate::synth::uniform_support;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsRow {
    pub method: Method,
    pub n: usize,
    #[serde(rename = "N")]
    pub cap_n: usize,
    pub alpha: f64,
    pub mean_width: f64,
    pub mean_n_equivalent: f64,
    pub savings: f64,
    pub se_savings: f64,
    /// Redraws where the search hit `savings_cap` without matching the method.
    pub censored: usize,
    pub redraws: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsResult {
    pub provenance: Provenance,
    pub rows: Vec<SavingsRow>,
}

impl SavingsResult {
    pub fn row(&self, method: Method) -> Option<&SavingsRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn any_censored(&self) -> bool {
        self.rows.iter().any(|r| r.censored > 0)
    }
}

/// Memoized mean width of the real-only interval at sample size `n'`.
struct BaselineCurve<'a> {
    config: &'a SweepConfig,
    source: &'a Source,
    cache: Mutex<BTreeMap<usize, f64>>,
}

impl BaselineCurve<'_> {
    fn max_size(&self) -> usize {
        match self.source {
            Source::Synthetic => self.config.savings_cap,
            Source::Bank(b) => self.config.savings_cap.min(b.size()),
            Source::Real { paired, .. } => self.config.savings_cap.min(paired.n()),
        }
    }

    fn real_scores(&self, size: usize, inner: usize) -> Result<Vec<f64>> {
        let cfg = self.config;
        let seed = derive_seed(cfg.seed, &[TAG_CLASSICAL, size as u64, inner as u64]);
        match self.source {
            // Real scores of a generated bank are i.i.d. uniform on the support;
            // drawing them directly skips building proxies that are never used.
            Source::Synthetic => {
                let (a, b) = uniform_support(cfg.mu_real);
                let mut rng = rng_from_seed(seed);
                Ok((0..size).map(|_| rng.random_range(a..=b)).collect())
            }
            Source::Bank(bank) => {
                Ok(resample_paired(&bank.pairs, size, false, seed)?.real_scores())
            }
            Source::Real { paired, .. } => {
                Ok(resample_paired(paired, size, false, seed)?.real_scores())
            }
        }
    }

    fn width(&self, size: usize) -> Result<f64> {
        if let Some(&w) = self.cache.lock().expect("cache lock").get(&size) {
            return Ok(w);
        }
        let cfg = self.config;
        let alpha = cfg.point_fixed()?.alpha;
        let widths = (0..cfg.redraws)
            .into_par_iter()
            .map(
                |i| match classical_interval(&self.real_scores(size, i)?, alpha, &cfg.wsr) {
                    Ok(ci) if cfg.untruncated => Ok(Some(ci.raw_width())),
                    Ok(ci) => Ok(Some(ci.width())),
                    Err(Error::EmptyCandidateSet) => Ok(None),
                    Err(e) => Err(e),
                },
            )
            .collect::<Result<Vec<Option<f64>>>>()?;
        let widths: Vec<f64> = widths.into_iter().flatten().collect();
        let w = if widths.is_empty() {
            0.0
        } else {
            widths.iter().sum::<f64>() / widths.len() as f64
        };
        self.cache.lock().expect("cache lock").insert(size, w);
        Ok(w)
    }

    /// Smallest `n'` with `W(n') < target`, and whether the cap was hit.
    fn equivalent_size(&self, n: usize, target: f64) -> Result<(usize, bool)> {
        let cap = self.max_size();
        if cap < n {
            return Err(Error::Config(format!(
                "savings search cap {cap} is below n = {n}"
            )));
        }
        // Invariant: W(lo) >= target (or lo = 0), W(hi) < target.
        let (mut lo, mut hi);
        if self.width(n)? < target {
            lo = 0;
            hi = n;
        } else {
            lo = n;
            loop {
                if lo >= cap {
                    return Ok((cap, true));
                }
                let next = (lo * 2).min(cap);
                if self.width(next)? < target {
                    hi = next;
                    break;
                }
                lo = next;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.width(mid)? < target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((hi, false))
    }
}

/// Real-sample savings of every selected method at the config's fixed `n`,
/// `N` and `alpha`; the sweep axis and grid are ignored.
pub fn compute_savings(config: &SweepConfig, source: &Source) -> Result<SavingsResult> {
    let fixed = config.point_fixed()?;
    let single = SweepConfig {
        axis: Axis::NSim,
        grid: vec![fixed.cap_n as f64],
        ..config.clone()
    };
    let engine = Engine::new(&single, source)?;
    let outcomes = (0..config.redraws)
        .into_par_iter()
        .map(|r| engine.outcome(0, r))
        .collect::<Result<Vec<_>>>()?;
    let curve = BaselineCurve {
        config,
        source,
        cache: Mutex::new(BTreeMap::new()),
    };

    let mut rows = Vec::new();
    for (mi, &method) in engine.methods().iter().enumerate() {
        if !method.targets_real_mean() {
            continue;
        }
        let mut fractions = Vec::with_capacity(outcomes.len());
        let mut sizes = Vec::with_capacity(outcomes.len());
        let mut widths = Vec::with_capacity(outcomes.len());
        let mut censored = 0;
        for o in &outcomes {
            // An empty set has no width to match; leave that redraw out.
            let Some(w) = o.intervals[mi].width(config.untruncated) else {
                continue;
            };
            let (size, capped) = curve.equivalent_size(fixed.n, w)?;
            censored += capped as usize;
            widths.push(w);
            sizes.push(size as f64);
            fractions.push((size as f64 - fixed.n as f64) / size as f64);
        }
        let (savings, se_savings) = mean_and_se(&fractions);
        rows.push(SavingsRow {
            method,
            n: fixed.n,
            cap_n: fixed.cap_n,
            alpha: fixed.alpha.value(),
            mean_width: widths.iter().sum::<f64>() / widths.len() as f64,
            mean_n_equivalent: sizes.iter().sum::<f64>() / sizes.len() as f64,
            savings,
            se_savings,
            censored,
            redraws: fractions.len(),
            seed: config.seed,
        });
    }
    Ok(SavingsResult {
        provenance: Provenance::new("savings", config, source),
        rows,
    })
}
