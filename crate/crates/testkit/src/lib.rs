//! Brute-force reference oracles for tiny instances.
//!
//! Everything here recomputes its quantities from the raw matrix triplets
//! with dense loops, so it shares no arithmetic with the solver code paths
//! it is used to check.

use acmpc_core::oracle::OracleInput;
use acmpc_core::regularizer::{RegularizerParams, SCALE};
use acmpc_core::{MpcInstance, SaddleState};

/// Upper limit on the number of grid points any oracle enumerates.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Number of steps per axis; the axis carries `resolution + 1` points.
    pub resolution: usize,
    pub bounds: Vec<(f64, f64)>,
}

impl GridSpec {
    pub fn unit(n: usize, resolution: usize) -> Self {
        Self {
            resolution,
            bounds: vec![(0.0, 1.0); n],
        }
    }

    pub fn points(&self) -> u64 {
        (self.resolution as u64 + 1).saturating_pow(self.bounds.len() as u32)
    }

    fn coordinate(&self, axis: usize, k: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        lo + (hi - lo) * k as f64 / self.resolution as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridVerdict {
    Feasible(Vec<f64>),
    Infeasible,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub packing: Vec<Vec<f64>>,
    pub covering: Vec<Vec<f64>>,
}

impl Dense {
    pub fn of(inst: &MpcInstance) -> Self {
        let mut packing = vec![vec![0.0; inst.n()]; inst.p()];
        let mut covering = vec![vec![0.0; inst.n()]; inst.c()];
        for (i, j, v) in inst.packing().triplets() {
            packing[i][j] += v;
        }
        for (i, j, v) in inst.covering().triplets() {
            covering[i][j] += v;
        }
        Self { packing, covering }
    }

    fn product(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        rows.iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest violation of `Px ≤ 1` and `Cx ≥ 1`; negative when strictly satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let pack = Self::product(&self.packing, x).into_iter().map(|v| v - 1.0);
        let cover = Self::product(&self.covering, x)
            .into_iter()
            .map(|v| 1.0 - v);
        pack.chain(cover).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn for_each_point(spec: &GridSpec, mut visit: impl FnMut(&[f64]) -> bool) {
    let dims = spec.bounds.len();
    let mut idx = vec![0usize; dims];
    let mut x: Vec<f64> = (0..dims).map(|a| spec.coordinate(a, 0)).collect();
    loop {
        if visit(&x) {
            return;
        }
        let mut axis = 0;
        loop {
            if axis == dims {
                return;
            }
            idx[axis] += 1;
            if idx[axis] <= spec.resolution {
                x[axis] = spec.coordinate(axis, idx[axis]);
                break;
            }
            idx[axis] = 0;
            x[axis] = spec.coordinate(axis, 0);
            axis += 1;
        }
    }
}

/// Exhaustive grid search for an approximate solution.
///
/// Feasible when some grid point violates no constraint by more than
/// `eps/2`; Infeasible when every grid point violates some constraint by more
/// than `2·eps`; Inconclusive otherwise. The grid spans `spec.bounds`, which
/// also act as the variable bounds.
pub fn grid_feasibility(inst: &MpcInstance, eps: f64, spec: &GridSpec) -> GridVerdict {
    assert_eq!(spec.bounds.len(), inst.n(), "one grid axis per variable");
    assert!(
        spec.resolution >= 2,
        "grid needs at least three points per axis"
    );
    assert!(spec.points() <= MAX_GRID_POINTS, "grid too large");
    let dense = Dense::of(inst);
    let mut best = f64::INFINITY;
    let mut witness = None;
    for_each_point(spec, |x| {
        let v = dense.violation(x);
        if v < best {
            best = v;
            witness = Some(x.to_vec());
        }
        best <= eps / 2.0
    });
    if best <= eps / 2.0 {
        GridVerdict::Feasible(witness.expect("a point was visited"))
    } else if best > 2.0 * eps {
        GridVerdict::Infeasible
    } else {
        GridVerdict::Inconclusive
    }
}

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

/// `6√3·φ(w)` summed term by term over the gadget definition.
pub fn dense_phi(inst: &MpcInstance, params: &RegularizerParams, w: &SaddleState) -> f64 {
    let dense = Dense::of(inst);
    let gadget = |a: f64, b: f64, beta: f64| b * xlogx(a) + beta * xlogx(b);
    let mut total = 0.0;
    for (i, row) in dense.packing.iter().enumerate() {
        let beta = params.p_weights[i];
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                total += v * gadget(w.x[j], w.y[i], beta);
            }
        }
        total += gadget(w.u, w.y[i], 2.0);
    }
    for (i, row) in dense.covering.iter().enumerate() {
        let beta = params.c_weights[i];
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                total += v * gadget(w.x[j], w.z[i], beta);
            }
        }
        total += gadget(w.u, w.z[i], 2.0);
    }
    SCALE * total
}

/// Points `v ≥ 0`, `Σv ≤ 1` of dimension `k` with coordinates in multiples of `1/resolution`.
pub fn simplex_grid(k: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, res: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in 0..=left {
            cur.push(s as f64 / res as f64);
            rec(k, left - s, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(
        k,
        resolution,
        resolution,
        &mut Vec::with_capacity(k),
        &mut out,
    );
    out
}

/// Maximum of `inputᵀw − 6√3·φ(w)` over a product grid on
/// `[0,1]^n × Δ⁺_p × Δ⁺_c`, with `resolution` steps per axis.
///
/// For a fixed `x` the objective splits into a `y` part and a `z` part, so
/// the product grid is searched as `max_x (max_y + max_z)`, which equals the
/// full enumeration. Every grid point lies in `W`, so the result never
/// exceeds the true supremum.
pub fn grid_oso_max(
    input: &OracleInput,
    inst: &MpcInstance,
    params: &RegularizerParams,
    resolution: usize,
) -> f64 {
    let (n, p, c) = (inst.n(), inst.p(), inst.c());
    assert!(
        n + p + c <= 5,
        "grid oracle limited to five blocks in total"
    );
    let dense = Dense::of(inst);
    let ys = simplex_grid(p, resolution);
    let zs = simplex_grid(c, resolution);
    let xs = GridSpec::unit(n, resolution);
    let work = xs.points() * (ys.len() + zs.len()) as u64;
    assert!(work <= 20 * MAX_GRID_POINTS, "grid oracle too expensive");

    let side = |rows: &[Vec<f64>], weights: &[f64], lin: &[f64], x: &[f64], v: &[f64]| -> f64 {
        let mut total = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let mut reg = 2.0 * xlogx(v[i]);
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    reg += a * (v[i] * xlogx(x[j]) + weights[i] * xlogx(v[i]));
                }
            }
            total += lin[i] * v[i] - SCALE * reg;
        }
        total
    };

    let mut best = f64::NEG_INFINITY;
    for_each_point(&xs, |x| {
        let base: f64 = input.a[..n].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + input.a[n];
        let y_best = ys
            .iter()
            .map(|y| side(&dense.packing, &params.p_weights, &input.a1, x, y))
            .fold(f64::NEG_INFINITY, f64::max);
        let z_best = zs
            .iter()
            .map(|z| side(&dense.covering, &params.c_weights, &input.a2, x, z))
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.max(base + y_best + z_best);
        false
    });
    best
}

fn fd_hessian(a: f64, b: f64, beta: f64, step: f64) -> [f64; 3] {
    let f = |a: f64, b: f64| b * a * a.ln() + beta * b * b.ln();
    let (ha, hb) = (step * a, step * b);
    let faa = (f(a + ha, b) - 2.0 * f(a, b) + f(a - ha, b)) / (ha * ha);
    let fbb = (f(a, b + hb) - 2.0 * f(a, b) + f(a, b - hb)) / (hb * hb);
    let fab = (f(a + ha, b + hb) - f(a + ha, b - hb) - f(a - ha, b + hb) + f(a - ha, b - hb))
        / (4.0 * ha * hb);
    [faa, fab, fbb]
}

/// Largest entrywise error against `[[b/a, 1+ln a], [1+ln a, β/b]]`,
/// divided by the largest analytic entry.
fn hessian_error(a: f64, b: f64, beta: f64, fd: [f64; 3]) -> f64 {
    let exact = [b / a, 1.0 + a.ln(), beta / b];
    let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
    fd.iter()
        .zip(&exact)
        .map(|(fd, ex)| (fd - ex).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Central finite-difference Hessian of the gadget `b·a·ln a + β·b·ln b`
/// with steps `step·a` and `step·b`, compared with the analytic Hessian.
pub fn fd_hessian_check_with_step(a: f64, b: f64, beta: f64, step: f64) -> f64 {
    hessian_error(a, b, beta, fd_hessian(a, b, beta, step))
}

/// Richardson-extrapolated central differences at relative steps 1e-2 and
/// 5e-3. The extrapolation removes the `O(h²)` term, so the steps can stay
/// large enough that cancellation does not dominate for small `a` or `b`.
pub fn fd_hessian_check(a: f64, b: f64, beta: f64) -> f64 {
    let coarse = fd_hessian(a, b, beta, 1e-2);
    let fine = fd_hessian(a, b, beta, 5e-3);
    let mut fd = [0.0; 3];
    for k in 0..3 {
        fd[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    }
    hessian_error(a, b, beta, fd)
}
