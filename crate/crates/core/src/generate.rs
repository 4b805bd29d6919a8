//! Seeded random instances, optionally with a planted answer.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::MpcInstance;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Planting {
    /// Unscaled random entries; feasibility is whatever it happens to be.
    Unplanted,
    /// Rows rescaled so that a random interior point satisfies `Px ≤ 1 ≤ Cx`.
    Feasible,
    /// One packing row is a multiple `λ ∈ [1.5, 2]` of a covering row, which
    /// rules out `Cx ≥ 1` for that row under `Px ≤ 1`.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    /// Fraction of the `n` columns stored in each row; at least one entry per row.
    pub density: f64,
}

impl RandomSpec {
    pub fn row_nnz(&self) -> usize {
        ((self.density * self.n as f64).round() as usize).clamp(1, self.n.max(1))
    }
}

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, n: usize, k: usize) -> Vec<Vec<(usize, f64)>> {
    (0..rows)
        .map(|_| {
            let mut cols = sample(rng, n, k).into_vec();
            cols.sort_unstable();
            cols.into_iter()
                .map(|j| (j, 1.0 - rng.gen::<f64>()))
                .collect()
        })
        .collect()
}

fn rescale(row: &mut [(usize, f64)], target: f64, x: &[f64]) {
    let value: f64 = row.iter().map(|&(j, v)| v * x[j]).sum();
    row.iter_mut().for_each(|e| e.1 *= target / value);
}

fn assemble(rows: &[Vec<(usize, f64)>], n: usize) -> SparseMatrix {
    SparseMatrix::from_triplets(
        rows.len(),
        n,
        rows.iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v))),
    )
    .expect("generated entries are valid")
}

/// Random instance with `spec.row_nnz()` entries per row drawn uniformly from `(0, 1]`.
pub fn random_instance(spec: &RandomSpec, planting: Planting, seed: u64) -> MpcInstance {
    assert!(spec.n > 0, "random instances need at least one column");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.row_nnz();
    let mut packing = random_rows(&mut rng, spec.p, spec.n, k);
    let mut covering = random_rows(&mut rng, spec.c, spec.n, k);
    match planting {
        Planting::Unplanted => {}
        Planting::Feasible => {
            let x: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(0.2..0.9)).collect();
            for row in &mut packing {
                let target = rng.gen_range(0.6..1.0);
                rescale(row, target, &x);
            }
            for row in &mut covering {
                let target = rng.gen_range(1.0..1.5);
                rescale(row, target, &x);
            }
        }
        Planting::Infeasible => {
            let ones = vec![1.0; spec.n];
            for row in &mut covering {
                rescale(row, 2.0, &ones);
            }
            if !covering.is_empty() && !packing.is_empty() {
                let j = rng.gen_range(0..covering.len());
                let lambda = rng.gen_range(1.5..2.0);
                let slot = rng.gen_range(0..packing.len());
                packing[slot] = covering[j]
                    .iter()
                    .map(|&(col, v)| (col, lambda * v))
                    .collect();
            }
        }
    }
    MpcInstance::new(assemble(&packing, spec.n), assemble(&covering, spec.n))
        .expect("generated matrices share the column count")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{check_epsilon_feasible, verify_certificate};

    #[test]
    fn seeded_generation_is_reproducible() {
        let spec = RandomSpec {
            n: 10,
            p: 4,
            c: 3,
            density: 0.3,
        };
        let a = random_instance(&spec, Planting::Feasible, 7);
        assert_eq!(a, random_instance(&spec, Planting::Feasible, 7));
        assert_ne!(a, random_instance(&spec, Planting::Feasible, 8));
        assert_eq!(a.packing().width(), 3);
        assert!((0..a.c()).all(|i| a.covering().row_nnz(i) == 3));
    }

    #[test]
    fn infeasible_planting_admits_certificate() {
        let spec = RandomSpec {
            n: 6,
            p: 3,
            c: 2,
            density: 0.5,
        };
        let inst = random_instance(&spec, Planting::Infeasible, 3);
        let (prow, crow) = (
            inst.packing().row_l1_norms(),
            inst.covering().row_l1_norms(),
        );
        let found = (0..inst.p()).any(|i| {
            (0..inst.c()).any(|j| {
                let mut y = vec![0.0; inst.p()];
                let mut z = vec![0.0; inst.c()];
                y[i] = crow[j] / prow[i];
                z[j] = 1.0;
                verify_certificate(&inst, &y, &z).unwrap().margin > 0.2
            })
        });
        assert!(found);
    }

    #[test]
    fn feasible_planting_has_interior_witness() {
        let spec = RandomSpec {
            n: 2,
            p: 2,
            c: 2,
            density: 1.0,
        };
        let inst = random_instance(&spec, Planting::Feasible, 11);
        let found = (0..=100).any(|i| {
            (0..=100).any(|j| {
                let x = [i as f64 / 100.0, j as f64 / 100.0];
                check_epsilon_feasible(&inst, &x, 0.02)
                    .unwrap()
                    .is_feasible()
            })
        });
        assert!(found);
    }
}
