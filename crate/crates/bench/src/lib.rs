//! Fixtures shared by the benchmarks.

use ppi_core::{generate_bank, partition_bank, BankSpec, PairedDataset, SimDataset};

/// Paired and proxy-only draws from a generated bank with correlation `rho`.
pub fn fixture(rho: f64, n: usize, cap_n: usize, seed: u64) -> (PairedDataset, SimDataset) {
    let bank = generate_bank(&BankSpec {
        mu_real: 0.5,
        mu_sim: 0.5,
        rho_target: rho,
        size: n + cap_n,
        rho_tolerance: 0.02,
        seed,
    })
    .expect("fixture bank");
    let (paired, sim, _) = partition_bank(&bank, n, cap_n, 0, seed).expect("fixture split");
    (paired, sim)
}
