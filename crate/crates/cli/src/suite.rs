//! Seeded random benchmark suite.

use std::io::Write;

use acmpc_core::generate::{random_instance, Planting, RandomSpec};
use acmpc_core::{solve, SolveReport, SolverConfig};
use serde::Serialize;

use crate::report::status_name;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub sizes: Vec<usize>,
    pub density: f64,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub planting: Planting,
    pub max_iters: Option<u64>,
    pub early_exit: bool,
    pub timings: bool,
}

/// One CSV row. `matvec_count` counts sparse matrix-vector products;
/// `multiply_adds` counts the stored entries they touched.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub nnz: usize,
    pub width: usize,
    pub eps: f64,
    pub iterations: u64,
    pub oracle_rounds: u64,
    pub matvec_count: u64,
    pub wall_time: Option<f64>,
    pub multiply_adds: u64,
    pub budget: u64,
    pub status: &'static str,
}

impl BenchRow {
    fn new(
        spec: &RandomSpec,
        inst: &acmpc_core::MpcInstance,
        r: &SolveReport,
        timings: bool,
    ) -> Self {
        Self {
            n: spec.n,
            p: spec.p,
            c: spec.c,
            nnz: inst.nnz(),
            width: inst.width(),
            eps: r.eps,
            iterations: r.iterations,
            oracle_rounds: r.oracle_rounds,
            matvec_count: r.work.matvecs,
            wall_time: timings.then_some(r.wall_time_secs),
            multiply_adds: r.work.multiply_adds,
            budget: r.budget,
            status: status_name(r.status),
        }
    }
}

/// Instance seed for size `n`: the same instance is reused across every eps.
pub fn instance_seed(seed: u64, n: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(n as u64)
}

/// Solves every (n, eps) pair in order and returns the rows.
pub fn run_suite(cfg: &SuiteConfig) -> acmpc_core::Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(cfg.sizes.len() * cfg.eps.len());
    for &n in &cfg.sizes {
        let spec = RandomSpec {
            n,
            p: n,
            c: n,
            density: cfg.density,
        };
        let inst = random_instance(&spec, cfg.planting, instance_seed(cfg.seed, n));
        for &eps in &cfg.eps {
            let mut solver = SolverConfig::new(eps);
            solver.max_iters = cfg.max_iters;
            solver.early_exit = cfg.early_exit;
            let report = solve(&inst, &solver)?;
            rows.push(BenchRow::new(&spec, &inst, &report, cfg.timings));
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
