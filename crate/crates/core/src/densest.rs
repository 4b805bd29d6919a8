//! Densest-subgraph density through a parametrized covering LP.
//!
//! For an undirected graph the density `max_S |E(S)|/|S|` is the smallest
//! `D` for which there are edge-to-endpoint loads `f_e(u), f_e(v) ≥ 0` with
//! `f_e(u) + f_e(v) ≥ 1` for every edge and `Σ_{e∋v} f_e(v) ≤ D` for every
//! vertex. Each probe of `D` is one mixed packing-covering solve; a
//! multiplicative bisection narrows the bracket.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::MpcInstance;
use crate::solver::{solve, SolveStatus, SolverConfig};
use crate::sparse::{SparseMatrix, WorkCounter};

/// Largest graph accepted by [`exact_density_bruteforce`].
pub const BRUTEFORCE_MAX_VERTICES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from undirected edges; each edge is stored as `(min, max)`,
    /// duplicates are merged and self-loops rejected.
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Domain(format!("self-loop at vertex {u}")));
            }
            if u.max(v) >= vertex_count {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) out of range for {vertex_count} vertices"
                )));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self {
            vertex_count,
            edges: set.into_iter().collect(),
        })
    }

    pub fn complete(k: usize) -> Self {
        Self::new(k, (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v)))).expect("valid clique")
    }

    /// Star with `leaves` leaves around vertex 0.
    pub fn star(leaves: usize) -> Self {
        Self::new(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("valid star")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.vertex_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn dual_instance(g: &Graph, d: f64) -> MpcInstance {
    let m = g.edge_count();
    let covering = SparseMatrix::from_triplets(
        m,
        2 * m,
        (0..m).flat_map(|e| [(e, 2 * e, 1.0), (e, 2 * e + 1, 1.0)]),
    )
    .expect("covering entries are valid");
    let packing = SparseMatrix::from_triplets(
        g.vertex_count,
        2 * m,
        g.edges
            .iter()
            .enumerate()
            .flat_map(|(e, &(u, v))| [(u, 2 * e, 1.0 / d), (v, 2 * e + 1, 1.0 / d)]),
    )
    .expect("packing entries are valid");
    MpcInstance::new(packing, covering).expect("shared column count")
}

/// Load-balancing LP at density `d` as a packing-covering instance.
///
/// Column `2e` is `f_e(u)` and column `2e+1` is `f_e(v)` for edge `e = (u, v)`;
/// row `e` of the covering matrix is `f_e(u) + f_e(v) ≥ 1` and row `v` of the
/// packing matrix is `Σ_{e∋v} f_e(v)/d ≤ 1`.
pub fn build_dual_instance(g: &Graph, d: f64) -> Result<MpcInstance> {
    if !(d >= 1.0 && d.is_finite()) {
        return Err(Error::Domain(format!(
            "density parameter must be at least 1, got {d}"
        )));
    }
    if g.edge_count() == 0 {
        return Err(Error::Domain("graph has no edges".into()));
    }
    Ok(dual_instance(g, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsgConfig {
    pub eps: f64,
    /// Optional cap on solver iterations per probe.
    pub max_iters: Option<u64>,
    pub max_probes: usize,
}

impl DsgConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            max_iters: None,
            max_probes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub density: f64,
    pub solver_eps: f64,
    pub status: SolveStatus,
    pub iterations: u64,
    pub oracle_rounds: u64,
    pub work: WorkCounter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsgResult {
    pub density_low: f64,
    pub density_high: f64,
    /// Loads `f` from the probe that set `density_high`, if one did.
    pub feasible_witness: Option<Vec<f64>>,
    /// Always `None`: the vertex set is not recovered from the fractional loads.
    pub subgraph: Option<Vec<usize>>,
    pub probes: Vec<Probe>,
}

/// Brackets the densest-subgraph density within a factor `1 + eps`.
///
/// The bracket starts at `[max(m/n, 1/2), (n−1)/2]`. A probe at `D` solved to
/// accuracy `ε' = eps/4` that returns a solution proves density at most
/// `D·(1+ε')/(1−ε')` (rescale the loads by `1/(1−ε')`); a certificate proves
/// density above `D`. Probes sit at the geometric midpoint, or just low
/// enough that a feasible answer closes the bracket. An undetermined probe is
/// retried once at half the solver accuracy.
pub fn binary_search_density(g: &Graph, cfg: &DsgConfig) -> Result<DsgResult> {
    let eps = cfg.eps;
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Domain(format!(
            "eps must lie in (0, 0.5], got {eps}"
        )));
    }
    let (n, m) = (g.vertex_count() as f64, g.edge_count() as f64);
    if g.edge_count() == 0 {
        return Err(Error::Domain("graph has no edges".into()));
    }
    let mut lo = (m / n).max(0.5);
    let mut hi = ((n - 1.0) / 2.0).max(lo);
    let mut result = DsgResult {
        density_low: lo,
        density_high: hi,
        feasible_witness: None,
        subgraph: None,
        probes: Vec::new(),
    };
    let base_eps = eps / 4.0;
    let slack = |e: f64| (1.0 + e) / (1.0 - e);

    while hi / lo > 1.0 + eps {
        if result.probes.len() >= cfg.max_probes {
            return Err(Error::Domain(format!(
                "density search exceeded {} probes",
                cfg.max_probes
            )));
        }
        // the closing probe sits a hair low so rounding cannot leave hi/lo above 1 + eps
        let d = (lo * hi)
            .sqrt()
            .min(lo * (1.0 + eps) / slack(base_eps) * (1.0 - 1e-9));
        let inst = dual_instance(g, d);
        let mut solver_eps = base_eps;
        let mut decided = false;
        for _ in 0..2 {
            let mut scfg = SolverConfig::new(solver_eps).unboxed();
            scfg.max_iters = cfg.max_iters;
            let report = solve(&inst, &scfg)?;
            result.probes.push(Probe {
                density: d,
                solver_eps,
                status: report.status,
                iterations: report.iterations,
                oracle_rounds: report.oracle_rounds,
                work: report.work,
            });
            match report.status {
                SolveStatus::Feasible => {
                    let bound = d * slack(solver_eps);
                    if bound < hi {
                        hi = bound;
                        result.feasible_witness = report.x;
                    }
                    decided = true;
                }
                SolveStatus::InfeasibleCertified => {
                    lo = lo.max(d);
                    decided = true;
                }
                SolveStatus::Undetermined => solver_eps /= 2.0,
            }
            if decided {
                break;
            }
        }
        if !decided {
            return Err(Error::Domain(format!(
                "solver could not decide the probe at density {d}"
            )));
        }
    }
    result.density_low = lo;
    result.density_high = hi;
    Ok(result)
}

/// Exact density by enumerating every nonempty vertex subset.
pub fn exact_density_bruteforce(g: &Graph) -> Result<f64> {
    let n = g.vertex_count();
    if n > BRUTEFORCE_MAX_VERTICES {
        return Err(Error::Domain(format!(
            "brute-force density limited to {BRUTEFORCE_MAX_VERTICES} vertices, got {n}"
        )));
    }
    let mut best = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        let inside = g
            .edges()
            .iter()
            .filter(|&&(u, v)| mask >> u & 1 == 1 && mask >> v & 1 == 1)
            .count();
        best = best.max(inside as f64 / mask.count_ones() as f64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_dedupes_and_rejects_loops() {
        let g = Graph::new(3, [(1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn dual_instance_shapes() {
        let edge = build_dual_instance(&Graph::complete(2), 1.0).unwrap();
        assert_eq!((edge.n(), edge.p(), edge.c()), (2, 2, 1));
        assert_eq!(edge.covering().get(0, 0), 1.0);
        assert_eq!(edge.covering().get(0, 1), 1.0);
        assert_eq!(edge.packing().row_nnz(0), 1);

        let tri = build_dual_instance(&Graph::complete(3), 1.0).unwrap();
        assert_eq!((tri.n(), tri.p(), tri.c()), (6, 3, 3));
        assert!((0..3).all(|v| tri.packing().row_nnz(v) == 2));
        assert!(tri.packing().values().iter().all(|&v| v == 1.0));

        let star = Graph::star(4);
        let inst = build_dual_instance(&star, 2.0).unwrap();
        assert_eq!(inst.packing().width(), star.max_degree());
        assert_eq!(inst.packing().get(0, 0), 0.5);
        assert!(build_dual_instance(&star, 0.5).is_err());
        assert!(build_dual_instance(&Graph::new(3, []).unwrap(), 1.0).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(exact_density_bruteforce(&Graph::complete(2)).unwrap(), 0.5);
        assert_eq!(exact_density_bruteforce(&Graph::complete(3)).unwrap(), 1.0);
        assert_eq!(exact_density_bruteforce(&Graph::complete(4)).unwrap(), 1.5);
        assert_eq!(exact_density_bruteforce(&Graph::star(3)).unwrap(), 0.75);
        assert!(exact_density_bruteforce(&Graph::new(21, []).unwrap()).is_err());
    }

    #[test]
    fn search_rejects_bad_input() {
        assert!(binary_search_density(&Graph::new(3, []).unwrap(), &DsgConfig::new(0.1)).is_err());
        assert!(binary_search_density(&Graph::complete(3), &DsgConfig::new(0.0)).is_err());
        assert!(binary_search_density(&Graph::complete(3), &DsgConfig::new(0.7)).is_err());
    }

    #[test]
    fn search_brackets_star() {
        let g = Graph::star(3);
        let r = binary_search_density(&g, &DsgConfig::new(0.1)).unwrap();
        assert!(r.density_low <= 0.75 && 0.75 <= r.density_high, "{r:?}");
        assert!(r.density_high / r.density_low <= 1.1);
    }

    #[test]
    fn search_closes_when_lower_end_is_exact() {
        // whole-graph density 22/8 is optimal, so every probe above it is feasible
        let edges = [
            (0, 1),
            (0, 3),
            (0, 4),
            (0, 5),
            (0, 6),
            (1, 3),
            (1, 4),
            (1, 5),
            (1, 6),
            (1, 7),
            (2, 3),
            (2, 4),
            (2, 5),
            (2, 6),
            (2, 7),
            (3, 4),
            (3, 7),
            (4, 5),
            (4, 6),
            (4, 7),
            (5, 6),
            (6, 7),
        ];
        let g = Graph::new(8, edges).unwrap();
        assert_eq!(exact_density_bruteforce(&g).unwrap(), 2.75);
        let r = binary_search_density(&g, &DsgConfig::new(0.1)).unwrap();
        assert!(r.density_low <= 2.75 && 2.75 <= r.density_high, "{r:?}");
        assert!(r.density_high / r.density_low <= 1.1);
        assert!(r.probes.len() < 10);
    }
}
