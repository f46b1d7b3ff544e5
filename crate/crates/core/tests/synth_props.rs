mod common;

use std::collections::HashSet;

use common::{mean, pearson};
use ppi_core::{generate_bank, partition_bank, BankSpec, Error};
use proptest::prelude::*;

fn spec(rho: f64, size: usize, seed: u64) -> BankSpec {
    BankSpec {
        mu_real: 0.5,
        mu_sim: 0.5,
        rho_target: rho,
        size,
        rho_tolerance: 0.01,
        seed,
    }
}

#[test]
fn large_bank_hits_target_per_independent_pearson() {
    let bank = generate_bank(&spec(0.7, 10_000, 7)).unwrap();
    let r = pearson(&bank.pairs.real_scores(), &bank.pairs.proxy_scores());
    assert!((r - 0.7).abs() <= 0.01, "achieved {r}");
    assert!((r - bank.achieved_rho).abs() < 1e-9);
}

#[test]
fn true_mu_is_realized_mean() {
    let bank = generate_bank(&spec(0.4, 3000, 5)).unwrap();
    assert_eq!(bank.true_mu, mean(&bank.pairs.real_scores()));
}

#[test]
fn partition_edge_cases() {
    let bank = generate_bank(&spec(0.5, 300, 1)).unwrap();
    let (p, s, h) = partition_bank(&bank, 100, 150, 50, 9).unwrap();
    let ids: HashSet<String> = p
        .samples()
        .iter()
        .chain(h.samples())
        .map(|x| x.id.clone())
        .collect();
    assert_eq!(ids.len(), 150);
    assert_eq!(s.cap_n(), 150);
    let again = partition_bank(&bank, 100, 150, 50, 9).unwrap();
    assert_eq!((p, s, h), again);
    assert!(matches!(
        partition_bank(&bank, 200, 100, 1, 9),
        Err(Error::InsufficientData(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_target_never_lowers_achieved(
        seed in any::<u64>(),
        a in -0.9f64..0.9,
        gap in 0.0f64..0.3,
    ) {
        let b = (a + gap).min(0.95);
        let lo = generate_bank(&spec(a, 400, seed)).unwrap();
        let hi = generate_bank(&spec(b, 400, seed)).unwrap();
        prop_assert_eq!(lo.pairs.real_scores(), hi.pairs.real_scores());
        prop_assert!(hi.achieved_rho >= lo.achieved_rho - 0.01);
    }

    #[test]
    fn values_bounded_and_proxy_mean_held(
        seed in any::<u64>(),
        mu in 0.1f64..0.9,
        mu_sim in 0.1f64..0.9,
        rho in -0.5f64..0.9,
    ) {
        let s = BankSpec { mu_real: mu, mu_sim, rho_target: rho, size: 500, rho_tolerance: 0.02, seed };
        match generate_bank(&s) {
            Ok(bank) => {
                let f = bank.pairs.proxy_scores();
                prop_assert!(f.iter().chain(bank.pairs.real_scores().iter()).all(|v| (0.0..=1.0).contains(v)));
                prop_assert!((mean(&f) - mu_sim).abs() <= 5e-3);
                prop_assert!((bank.achieved_rho - rho).abs() <= 0.02);
            }
            // Extreme mean mismatches can make strong correlations unreachable.
            Err(Error::Infeasible(_)) | Err(Error::CorrelationNotReached { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
