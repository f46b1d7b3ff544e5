mod common;

use common::{bernoulli, reference_wsr};
use ppi_core::ppi::HEURISTIC_DELTA_FRACTION;
use ppi_core::{
    build_uniform_transform, classical_interval, generate_bank, optimize_risk_split,
    partition_bank, rectifier_interval, suresim_interval, suresim_ub_interval, two_stage_interval,
    two_stage_point_estimate, two_stage_ub_interval, two_stage_width, BankSpec, Error, LabeledBank,
    PairedDataset, RiskSplit, SignificanceLevel, SimDataset, WsrOptions,
};
use proptest::prelude::*;

fn alpha(a: f64) -> SignificanceLevel {
    SignificanceLevel::new(a).unwrap()
}

fn bank(rho: f64, size: usize, seed: u64) -> LabeledBank {
    generate_bank(&BankSpec {
        mu_real: 0.5,
        mu_sim: 0.5,
        rho_target: rho,
        size,
        rho_tolerance: 0.01,
        seed,
    })
    .unwrap()
}

/// Reference survivors mapped back to a `[lo, hi]` interval of cell edges.
fn reference_bounds(data: &[f64], a: f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let alive = reference_wsr(data, a, lo, hi, grid, 0.99);
    let cell = (hi - lo) / grid as f64;
    let first = *alive.first().unwrap() as f64;
    let last = *alive.last().unwrap() as f64;
    (lo + first * cell, lo + (last + 1.0) * cell)
}

#[test]
fn classical_bernoulli_width_matches_reference() {
    let data = bernoulli(0.5, 60, 21);
    let ci = classical_interval(&data, alpha(0.1), &WsrOptions::default()).unwrap();
    let (lo, hi) = reference_bounds(&data, 0.1, 0.0, 1.0, 1001);
    assert!((ci.width() - (hi.min(1.0) - lo.max(0.0))).abs() <= 0.02);
}

#[test]
fn rectifier_on_dp_like_bank_matches_reference() {
    let b = bank(0.7, 600, 4);
    let (paired, _, _) = partition_bank(&b, 60, 0, 0, 2).unwrap();
    let ci = rectifier_interval(&paired, alpha(0.09), &WsrOptions::default()).unwrap();
    let (lo, hi) = reference_bounds(&paired.residuals(), 0.09, -1.0, 1.0, 2002);
    assert!((ci.lower - lo).abs() <= 1e-3 && (ci.upper - hi).abs() <= 1e-3);
}

#[test]
fn hedge_equals_ppi_part_when_nested() {
    let b = bank(0.97, 3000, 8);
    let opts = WsrOptions::default();
    let (paired, sim, _) = partition_bank(&b, 100, 2000, 0, 1).unwrap();
    let inner = suresim_interval(&paired, &sim, alpha(0.075), &opts).unwrap();
    let classical = classical_interval(&paired.real_scores(), alpha(0.025), &opts).unwrap();
    assert!(classical.lower <= inner.lower && inner.upper <= classical.upper);
    let ub = suresim_ub_interval(&paired, &sim, alpha(0.1), &opts).unwrap();
    assert_eq!((ub.lower, ub.upper), (inner.lower, inner.upper));
}

/// Means of `(two-stage width, suresim width, classical width, suresim-ub
/// width, classical(alpha/4) width)` over `redraws` draws from one bank.
fn mean_widths(b: &LabeledBank, n: usize, cap_n: usize, redraws: u64) -> [f64; 5] {
    let opts = WsrOptions::default();
    let a = alpha(0.1);
    let mut acc = [0.0; 5];
    let mut used = 0.0;
    for r in 0..redraws {
        let (paired, sim, _) = partition_bank(b, n, cap_n, 0, 100 + r).unwrap();
        let ts = two_stage_interval(&paired, &sim, RiskSplit::heuristic(a), &opts);
        let ss = suresim_interval(&paired, &sim, a, &opts);
        let cl = classical_interval(&paired.real_scores(), a, &opts);
        let ub = suresim_ub_interval(&paired, &sim, a, &opts);
        let cq = classical_interval(&paired.real_scores(), alpha(0.025), &opts);
        if let (Ok(ts), Ok(ss), Ok(cl), Ok(ub), Ok(cq)) = (ts, ss, cl, ub, cq) {
            for (slot, w) in
                acc.iter_mut()
                    .zip([ts.width(), ss.width(), cl.width(), ub.width(), cq.width()])
            {
                *slot += w;
            }
            used += 1.0;
        }
    }
    acc.map(|s| s / used)
}

#[test]
fn two_stage_is_wider_than_suresim_at_high_correlation() {
    let b = bank(0.97, 20_400, 3);
    let [ts, ss, cl, _, _] = mean_widths(&b, 100, 5000, 40);
    assert!(ts > ss, "two-stage {ts} vs suresim {ss}");
    assert!(ss < cl);
}

#[test]
fn low_correlation_hedge_stays_under_quarter_level_classical() {
    let b = bank(0.0, 8640, 6);
    let [_, _, cl, ub, cq] = mean_widths(&b, 60, 2100, 40);
    assert!(ub <= cq);
    assert!(ub > cl, "hedged {ub} should trail classical {cl}");
}

#[test]
fn optimized_split_sits_at_sweep_minimum() {
    let opts = WsrOptions::default();
    let a = alpha(0.1);
    for seed in [1u64, 2, 3] {
        let b = bank(0.9, 6000, seed);
        let (paired, sim, _) = partition_bank(&b, 100, 1000, 0, seed).unwrap();
        let split = optimize_risk_split(&paired, &sim, a, &opts).unwrap();
        let d = split.delta().value();
        assert!(d > 0.0 && d < 0.1);
        let found = two_stage_width(&paired, &sim, a, d, &opts).unwrap();
        let heuristic =
            two_stage_width(&paired, &sim, a, HEURISTIC_DELTA_FRACTION * 0.1, &opts).unwrap();
        assert!(found <= heuristic);

        let cells = 50;
        let step = 0.1 / (cells + 1) as f64;
        let sweep: Vec<(f64, f64)> = (1..=cells)
            .map(|k| {
                let delta = k as f64 * step;
                (
                    delta,
                    two_stage_width(&paired, &sim, a, delta, &opts).unwrap(),
                )
            })
            .collect();
        let (best_delta, best_width) = sweep.iter().copied().fold(
            (0.0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
        // Within one sweep cell of the sweep argmin, or at least as narrow.
        assert!(
            (d - best_delta).abs() <= step + 1e-12 || found <= best_width + 1e-9,
            "seed {seed}: search {d} ({found}) vs sweep {best_delta} ({best_width})"
        );
    }
}

#[test]
fn uniform_point_estimate_is_unbiased() {
    let b = bank(0.6, 4240, 12);
    let estimates: Vec<f64> = (0..2000)
        .map(|r| {
            let (paired, sim, _) = partition_bank(&b, 60, 1000, 0, r).unwrap();
            build_uniform_transform(&paired, &sim)
                .unwrap()
                .point_estimate()
        })
        .collect();
    let k = estimates.len() as f64;
    let m = estimates.iter().sum::<f64>() / k;
    let sd = (estimates.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    assert!((m - b.true_mu).abs() <= 3.0 * sd / k.sqrt());
}

#[test]
fn two_stage_ub_rejects_disjoint_components_as_error() {
    // Proxy says 1.0, reality says 0.0: the two-stage part cannot meet the real-only part.
    let paired = PairedDataset::from_pairs(&vec![(0.0, 0.0); 40]).unwrap();
    let sim = SimDataset::from_values(&vec![1.0; 4000]).unwrap();
    let err = two_stage_ub_interval(&paired, &sim, alpha(0.1), &WsrOptions::default()).unwrap_err();
    assert!(matches!(err, Error::DisjointHedge { .. }));
}

fn dataset() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>)> {
    (
        prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 2..60),
        prop::collection::vec(0.0f64..=1.0, 1..300),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicator_count_is_n((pairs, sims) in dataset()) {
        let paired = PairedDataset::from_pairs(&pairs).unwrap();
        let sim = SimDataset::from_values(&sims).unwrap();
        let t = build_uniform_transform(&paired, &sim).unwrap();
        prop_assert_eq!(t.indicator_count, pairs.len());
        let (lo, hi) = t.bounds();
        prop_assert!(t.values.iter().all(|v| (lo..=hi).contains(v)));
        prop_assert_eq!(&t.values[pairs.len()..], &sims[..]);
    }

    #[test]
    fn hedged_widths_bounded_by_components((pairs, sims) in dataset(), a in 0.01f64..0.3) {
        let opts = WsrOptions::new(200, 0.99).unwrap();
        let paired = PairedDataset::from_pairs(&pairs).unwrap();
        let sim = SimDataset::from_values(&sims).unwrap();
        let al = alpha(a);
        let quarter = classical_interval(&paired.real_scores(), alpha(a / 4.0), &opts);
        let ss = suresim_interval(&paired, &sim, alpha(0.75 * a), &opts);
        if let (Ok(q), Ok(s)) = (quarter, ss) {
            match suresim_ub_interval(&paired, &sim, al, &opts) {
                Ok(ub) => {
                    prop_assert!(ub.width() <= q.width() + 1e-12);
                    prop_assert!(ub.width() <= s.width() + 1e-12);
                }
                Err(e) => prop_assert!(matches!(e, Error::DisjointHedge { .. }), "{}", e),
            }
            match two_stage_ub_interval(&paired, &sim, al, &opts) {
                Ok(ub) => prop_assert!(ub.width() <= q.width() + 1e-12),
                Err(e) => prop_assert!(
                    matches!(e, Error::DisjointHedge { .. } | Error::EmptyCandidateSet),
                    "{}",
                    e
                ),
            }
        }
    }
}

#[test]
fn sorted_data_can_exclude_its_own_mean() {
    // Betting intervals depend on arrival order: six zeros then three highs
    // reject the sample mean. The reference transcription agrees.
    let mut y = vec![0.0; 6];
    y.extend([0.9277547175460507, 0.9717850380620895, 0.8634790290318624]);
    let a = 0.2760255071836831;
    let ci = classical_interval(&y, alpha(a), &WsrOptions::default()).unwrap();
    let (lo, hi) = reference_bounds(&y, a, 0.0, 1.0, 1001);
    assert!((ci.lower - lo).abs() < 1e-9 && (ci.upper - hi).abs() < 1e-9);
    let m = y.iter().sum::<f64>() / y.len() as f64;
    assert!(m > ci.raw_upper);
}

/// Checks whether `m` lies in the reference interval for `data`.
fn reference_contains(data: &[f64], a: f64, lo: f64, hi: f64, grid: usize, m: f64) -> bool {
    let (l, u) = reference_bounds(data, a, lo, hi, grid);
    l <= m && m <= u
}

#[test]
fn exchangeable_draws_rarely_exclude_point_estimates() {
    let opts = WsrOptions::default();
    let mut misses = [0usize; 3];
    let trials = 400u64;
    for seed in 0..trials {
        let rho = [0.0, 0.5, 0.97][(seed % 3) as usize];
        let n = [10, 45, 100][(seed / 3 % 3) as usize];
        let cap_n = [50, 626, 2000][(seed / 9 % 3) as usize];
        let a = [0.01, 0.1, 0.25][(seed / 27 % 3) as usize];
        let b = generate_bank(&BankSpec {
            mu_real: 0.5,
            mu_sim: 0.5,
            rho_target: rho,
            size: 2 * (n + cap_n),
            rho_tolerance: 0.05,
            seed,
        })
        .unwrap();
        let (paired, sim, _) = partition_bank(&b, n, cap_n, 0, seed ^ 1).unwrap();
        let al = alpha(a);

        let y = paired.real_scores();
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let ci = classical_interval(&y, al, &opts).unwrap();
        if !ci.raw_contains(m) {
            misses[0] += 1;
            assert!(!reference_contains(&y, a, 0.0, 1.0, 1001, m), "seed {seed}");
        }

        let t = build_uniform_transform(&paired, &sim).unwrap();
        let m = t.point_estimate();
        let ci = suresim_interval(&paired, &sim, al, &opts).unwrap();
        if !ci.raw_contains(m) {
            misses[1] += 1;
            let (lo, hi) = t.bounds();
            let grid = (1001.0 * (hi - lo)).round() as usize;
            assert!(
                !reference_contains(&t.values, a, lo, hi, grid, m),
                "seed {seed}"
            );
        }

        let ci = two_stage_interval(&paired, &sim, RiskSplit::heuristic(al), &opts).unwrap();
        if !ci.raw_contains(two_stage_point_estimate(&paired, &sim).unwrap()) {
            misses[2] += 1;
        }
    }
    assert!(misses[0] as f64 / trials as f64 <= 0.02, "{misses:?}");
    assert!(misses[1] as f64 / trials as f64 <= 0.02, "{misses:?}");
    assert_eq!(misses[2], 0);
}
