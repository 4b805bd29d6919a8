//! Shared fixtures for the criterion benches.

use acmpc_core::generate::{random_instance, Planting, RandomSpec};
use acmpc_core::{normalize, MpcInstance};

/// Square planted-feasible instance (`p = c = n`) with `row_nnz` entries per row.
pub fn fixture(n: usize, row_nnz: usize, seed: u64) -> MpcInstance {
    let spec = RandomSpec {
        n,
        p: n,
        c: n,
        density: row_nnz as f64 / n as f64,
    };
    random_instance(&spec, Planting::Feasible, seed)
}

/// `fixture` after width reduction, as the solver loop sees it.
pub fn normalized_fixture(n: usize, row_nnz: usize, seed: u64) -> MpcInstance {
    normalize(&fixture(n, row_nnz, seed)).instance
}
