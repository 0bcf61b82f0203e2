//! Shared fixtures for the benchmarks in `benches/`.

use vscc_core::{generate, standardize, Dataset, SimInstance, SimSpec};

/// A simulated instance with `groups` groups of 100 to 150 rows.
pub fn instance(groups: usize, p_signal: usize, p_noise: usize, seed: u64) -> SimInstance {
    generate(&SimSpec {
        groups,
        n_per_group: (100, 150),
        p_signal,
        p_noise,
        separation: 0.7,
        seed,
    })
    .expect("benchmark specs are valid")
}

pub fn standardized(groups: usize, p_signal: usize, p_noise: usize, seed: u64) -> Dataset {
    standardize(&instance(groups, p_signal, p_noise, seed).dataset).expect("no constant column")
}
