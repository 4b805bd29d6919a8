//! Approximate maximizer of `aᵀ(x,u) + a¹ᵀy + a²ᵀz − 6√3·φ(w)` over `W`.
//!
//! The objective is concave and separates into a box part in `x` and two
//! entropic simplex parts in `y` and `z` once the other block is fixed, so
//! alternating exact block maximization converges. Each block update has a
//! closed form and costs one pass over the nonzeros.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::instance::MpcInstance;
use crate::regularizer::{phi, phi_from_products, xlogx, RegularizerParams};
use crate::solver::SaddleState;
use crate::sparse::WorkCounter;

const EXP_CLAMP: f64 = 700.0;

/// Linear objective coefficients for `(x, u)`, `y` and `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInput {
    /// Length `n + 1`; the last entry multiplies `u`.
    pub a: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

impl OracleInput {
    pub fn zeros(n: usize, p: usize, c: usize) -> Self {
        Self {
            a: vec![0.0; n + 1],
            a1: vec![0.0; p],
            a2: vec![0.0; c],
        }
    }

    pub fn check_shape(&self, inst: &MpcInstance) -> Result<()> {
        check_len("oracle input a", inst.n() + 1, self.a.len())?;
        check_len("oracle input a1", inst.p(), self.a1.len())?;
        check_len("oracle input a2", inst.c(), self.a2.len())?;
        if self
            .a
            .iter()
            .chain(&self.a1)
            .chain(&self.a2)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Domain("oracle input must be finite".into()));
        }
        Ok(())
    }
}

/// Projection onto `{v ≥ 0 : Σv ≤ 1}` of a nonnegative vector.
pub fn project_simplex_plus(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::Domain("projection input must be nonnegative".into()));
    }
    let s: f64 = v.iter().sum();
    Ok(if s <= 1.0 {
        v.to_vec()
    } else {
        v.iter().map(|e| e / s).collect()
    })
}

/// `argmax_{v ∈ Δ⁺} Σ lin_i v_i − β Σ v_i ln v_i`, written into `out`.
fn entropic_argmax(lin: impl Iterator<Item = f64>, beta: f64, out: &mut [f64]) {
    let mut top = f64::NEG_INFINITY;
    for (o, l) in out.iter_mut().zip(lin) {
        *o = (l / beta - 1.0).clamp(-EXP_CLAMP, EXP_CLAMP);
        top = top.max(*o);
    }
    if out.is_empty() {
        return;
    }
    let lse = top + out.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
    let shift = if lse <= 0.0 { 0.0 } else { lse };
    out.iter_mut().for_each(|e| *e = (*e - shift).exp());
}

#[inline]
fn box_argmax(a: f64, d: f64) -> f64 {
    if d > 0.0 {
        (a / d - 1.0).clamp(-EXP_CLAMP, 0.0).exp()
    } else if a > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Best `x ∈ [0,1]^n` for fixed `(y, z)`; `a` is already divided by the scale.
pub fn x_step(a: &[f64], y: &[f64], z: &[f64], inst: &MpcInstance) -> Result<Vec<f64>> {
    check_len("x_step coefficients", inst.n(), a.len())?;
    let py = inst.packing().matvec_transpose(y)?;
    let cz = inst.covering().matvec_transpose(z)?;
    Ok(a.iter()
        .zip(py.iter().zip(&cz))
        .map(|(&aj, (&p, &c))| box_argmax(aj, p + c))
        .collect())
}

/// Best `(y, z)` for fixed `x`; `a1`, `a2` are already divided by the scale.
pub fn yz_step(
    a1: &[f64],
    a2: &[f64],
    x: &[f64],
    inst: &MpcInstance,
    params: &RegularizerParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("yz_step packing coefficients", inst.p(), a1.len())?;
    check_len("yz_step covering coefficients", inst.c(), a2.len())?;
    let xl: Vec<f64> = x.iter().map(|&v| xlogx(v)).collect();
    let pxl = inst.packing().matvec(&xl)?;
    let cxl = inst.covering().matvec(&xl)?;
    let mut y = vec![0.0; inst.p()];
    let mut z = vec![0.0; inst.c()];
    entropic_argmax(
        a1.iter().zip(&pxl).map(|(a, q)| a - q),
        params.y_entropy_weight(),
        &mut y,
    );
    entropic_argmax(
        a2.iter().zip(&cxl).map(|(a, q)| a - q),
        params.z_entropy_weight(),
        &mut z,
    );
    Ok((y, z))
}

/// `inputᵀw − 6√3·φ(w)` for `w ∈ W`.
pub fn oracle_objective(
    input: &OracleInput,
    inst: &MpcInstance,
    params: &RegularizerParams,
    w: &SaddleState,
) -> Result<f64> {
    input.check_shape(inst)?;
    let reg = phi(params, inst, w)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    Ok(dot(&input.a[..inst.n()], &w.x)
        + input.a[inst.n()] * w.u
        + dot(&input.a1, &w.y)
        + dot(&input.a2, &w.z)
        - reg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub state: SaddleState,
    pub objective: f64,
    pub rounds: u32,
    /// Upper bound on the distance of `objective` from the true maximum.
    pub gap_bound: f64,
}

impl OracleOutcome {
    pub fn certified(&self, delta: f64) -> bool {
        self.gap_bound <= delta
    }
}

/// Alternating maximization with reusable scratch space and a work tally.
#[derive(Debug)]
pub struct Oracle<'a> {
    inst: &'a MpcInstance,
    params: &'a RegularizerParams,
    xl: Vec<f64>,
    pxl: Vec<f64>,
    cxl: Vec<f64>,
    denom: Vec<f64>,
    scratch: Vec<f64>,
    work: WorkCounter,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a MpcInstance, params: &'a RegularizerParams) -> Self {
        Self {
            inst,
            params,
            xl: vec![0.0; inst.n()],
            pxl: vec![0.0; inst.p()],
            cxl: vec![0.0; inst.c()],
            denom: vec![0.0; inst.n()],
            scratch: vec![0.0; inst.n()],
            work: WorkCounter::default(),
        }
    }

    pub fn work(&self) -> WorkCounter {
        self.work
    }

    /// Round budget for accuracy `delta`.
    pub fn round_limit(&self, delta: f64) -> u32 {
        (self.params.rho / delta).log2().ceil().max(3.0) as u32
    }

    fn refresh_products(&mut self, x: &[f64]) {
        for (l, &v) in self.xl.iter_mut().zip(x) {
            *l = xlogx(v);
        }
        self.inst.packing().matvec_into(&self.xl, &mut self.pxl);
        self.inst.covering().matvec_into(&self.xl, &mut self.cxl);
        self.work.record(self.inst.packing());
        self.work.record(self.inst.covering());
    }

    /// Runs alternating rounds from `warm_x` (or `x = 1`) until the
    /// certified suboptimality drops to `delta` or the round budget is spent.
    pub fn run(
        &mut self,
        input: &OracleInput,
        delta: f64,
        warm_x: Option<&[f64]>,
    ) -> Result<OracleOutcome> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!(
                "oracle accuracy must be positive, got {delta}"
            )));
        }
        input.check_shape(self.inst)?;
        if let Some(w) = warm_x {
            check_len("oracle warm start", self.inst.n(), w.len())?;
        }
        let (n, scale) = (self.inst.n(), self.params.scale);
        let a: Vec<f64> = input.a[..n].iter().map(|v| v / scale).collect();
        let a_u = input.a[n] / scale;
        let a1: Vec<f64> = input.a1.iter().map(|v| v / scale).collect();
        let a2: Vec<f64> = input.a2.iter().map(|v| v / scale).collect();
        let (beta_y, beta_z) = (
            self.params.y_entropy_weight(),
            self.params.z_entropy_weight(),
        );

        let mut x = match warm_x {
            Some(w) => w.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            None => vec![1.0; n],
        };
        let mut y = vec![0.0; self.inst.p()];
        let mut z = vec![0.0; self.inst.c()];
        self.refresh_products(&x);

        let limit = self.round_limit(delta);
        let mut prev: Option<f64> = None;
        let mut rounds = 0;
        let (mut objective, mut gap_bound);
        loop {
            rounds += 1;
            entropic_argmax(a1.iter().zip(&self.pxl).map(|(a, q)| a - q), beta_y, &mut y);
            entropic_argmax(a2.iter().zip(&self.cxl).map(|(a, q)| a - q), beta_z, &mut z);

            self.inst
                .packing()
                .matvec_transpose_into(&y, &mut self.denom);
            self.inst
                .covering()
                .matvec_transpose_into(&z, &mut self.scratch);
            self.work.record(self.inst.packing());
            self.work.record(self.inst.covering());
            for j in 0..n {
                x[j] = box_argmax(a[j], self.denom[j] + self.scratch[j]);
            }
            self.refresh_products(&x);

            let lin: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>()
                + a_u
                + a1.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
                + a2.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>();
            objective =
                scale * (lin - phi_from_products(self.params, 1.0, &y, &z, &self.pxl, &self.cxl));
            if let Some(p) = prev {
                debug_assert!(
                    objective >= p - 1e-12 * p.abs().max(1.0),
                    "alternating maximization lost ground: {p} -> {objective}"
                );
            }

            // x is block-optimal, so concavity bounds the remaining gain by the
            // linearized gain available in the (y, z) blocks.
            gap_bound = scale
                * (frank_wolfe_gap(&a1, &self.pxl, &y, beta_y)
                    + frank_wolfe_gap(&a2, &self.cxl, &z, beta_z));
            if gap_bound <= delta || rounds >= limit {
                break;
            }
            prev = Some(objective);
        }
        Ok(OracleOutcome {
            state: SaddleState::new(x, y, z),
            objective,
            rounds,
            gap_bound,
        })
    }
}

/// `max_{v' ∈ Δ⁺} ∇f(v)ᵀ(v' − v)` for `f(v) = Σ (a_i − q_i) v_i − β Σ v_i ln v_i`.
fn frank_wolfe_gap(a: &[f64], q: &[f64], v: &[f64], beta: f64) -> f64 {
    let mut best = 0.0f64;
    let mut along = 0.0;
    for ((&ai, &qi), &vi) in a.iter().zip(q).zip(v) {
        let g = ai - qi - beta * (vi.max(f64::MIN_POSITIVE).ln() + 1.0);
        best = best.max(g);
        along += g * vi;
    }
    (best - along).max(0.0)
}

/// Approximate maximizer of `inputᵀw − 6√3·φ(w)` over `W`, cold-started at
/// `x = 1` unless a warm start is given.
pub fn oso(
    input: &OracleInput,
    delta: f64,
    inst: &MpcInstance,
    params: &RegularizerParams,
    warm: Option<&SaddleState>,
) -> Result<SaddleState> {
    Ok(Oracle::new(inst, params)
        .run(input, delta, warm.map(|w| w.x.as_slice()))?
        .state)
}
