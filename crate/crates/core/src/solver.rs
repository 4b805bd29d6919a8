//! Dual-extrapolation outer loop over the bilinear saddle problem
//! `min_x max_{y,z} yᵀ(Px − u) + zᵀ(u − Cx)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::instance::{
    check_epsilon_feasible, clamp_to_box, lift_solution, normalize, validate, verify_certificate,
    with_box_rows, MpcInstance, ValidationAction,
};
use crate::oracle::{Oracle, OracleInput};
use crate::regularizer::{build_params, check_domain};
use crate::sparse::WorkCounter;

/// Smallest certificate margin accepted as a proof of infeasibility.
pub const CERTIFICATE_MARGIN: f64 = 1e-12;

/// A point `(x, u, y, z)`; also used for images under the bilinear operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleState {
    pub x: Vec<f64>,
    pub u: f64,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl SaddleState {
    /// A point with `u = 1`.
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        Self { x, u: 1.0, y, z }
    }

    pub fn zeros(n: usize, p: usize, c: usize) -> Self {
        Self {
            x: vec![0.0; n],
            u: 0.0,
            y: vec![0.0; p],
            z: vec![0.0; c],
        }
    }

    pub fn check_shape(&self, inst: &MpcInstance) -> Result<()> {
        check_len("state x", inst.n(), self.x.len())?;
        check_len("state y", inst.p(), self.y.len())?;
        check_len("state z", inst.c(), self.z.len())
    }

    /// Concatenation `(x, u, y, z)`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + 1 + self.y.len() + self.z.len());
        v.extend_from_slice(&self.x);
        v.push(self.u);
        v.extend_from_slice(&self.y);
        v.extend_from_slice(&self.z);
        v
    }

    pub fn from_flat(inst: &MpcInstance, v: &[f64]) -> Result<Self> {
        let (n, p, c) = (inst.n(), inst.p(), inst.c());
        check_len("flat state", n + 1 + p + c, v.len())?;
        Ok(Self {
            x: v[..n].to_vec(),
            u: v[n],
            y: v[n + 1..n + 1 + p].to_vec(),
            z: v[n + 1 + p..].to_vec(),
        })
    }

    pub fn dot(&self, other: &SaddleState) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        d(&self.x, &other.x) + self.u * other.u + d(&self.y, &other.y) + d(&self.z, &other.z)
    }

    /// `self += k·other`.
    pub fn add_scaled(&mut self, k: f64, other: &SaddleState) {
        let go = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(p, q)| *p += k * q);
        go(&mut self.x, &other.x);
        self.u += k * other.u;
        go(&mut self.y, &other.y);
        go(&mut self.z, &other.z);
    }

    pub fn scaled(&self, k: f64) -> SaddleState {
        let go = |a: &[f64]| a.iter().map(|v| v * k).collect();
        SaddleState {
            x: go(&self.x),
            u: self.u * k,
            y: go(&self.y),
            z: go(&self.z),
        }
    }
}

fn apply_j_into(
    inst: &MpcInstance,
    w: &SaddleState,
    out: &mut SaddleState,
    work: &mut WorkCounter,
) {
    let (pm, cm) = (inst.packing(), inst.covering());
    pm.matvec_transpose_into(&w.y, &mut out.x);
    let mut ctz = vec![0.0; inst.n()];
    cm.matvec_transpose_into(&w.z, &mut ctz);
    out.x.iter_mut().zip(&ctz).for_each(|(o, c)| *o = c - *o);
    out.u = w.y.iter().sum::<f64>() - w.z.iter().sum::<f64>();
    pm.matvec_into(&w.x, &mut out.y);
    out.y.iter_mut().for_each(|v| *v -= w.u);
    cm.matvec_into(&w.x, &mut out.z);
    out.z.iter_mut().for_each(|v| *v = w.u - *v);
    for m in [pm, cm, pm, cm] {
        work.record(m);
    }
}

/// Image of `w` under the antisymmetric operator `J`, as blocks:
/// `x: Cᵀz − Pᵀy`, `u: 1ᵀy − 1ᵀz`, `y: Px − u`, `z: u − Cx`.
pub fn apply_j_state(inst: &MpcInstance, w: &SaddleState) -> Result<SaddleState> {
    w.check_shape(inst)?;
    let mut out = SaddleState::zeros(inst.n(), inst.p(), inst.c());
    apply_j_into(inst, w, &mut out, &mut WorkCounter::default());
    Ok(out)
}

/// [`apply_j_state`] on the concatenated vector `(x, u, y, z)`.
#[allow(non_snake_case)]
pub fn apply_J(inst: &MpcInstance, w: &[f64]) -> Result<Vec<f64>> {
    Ok(apply_j_state(inst, &SaddleState::from_flat(inst, w)?)?.to_flat())
}

/// `sup_{w̄ ∈ W} w̄ᵀg` for an image `g = Jw`.
pub fn gap_from_image(g: &SaddleState) -> f64 {
    let pos_max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    g.x.iter().map(|v| v.max(0.0)).sum::<f64>() + g.u + pos_max(&g.y) + pos_max(&g.z)
}

/// Duality gap `sup_{w̄ ∈ W} w̄ᵀJw` of a point `w ∈ W`.
pub fn primal_dual_gap(inst: &MpcInstance, w: &SaddleState) -> Result<f64> {
    check_domain(inst, w)?;
    Ok(gap_from_image(&apply_j_state(inst, w)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    /// Oracle accuracy; `eps / 2` when unset.
    pub delta: Option<f64>,
    /// Cap on the iteration budget `⌈2ρ/eps⌉`.
    pub max_iters: Option<u64>,
    /// Trace and check interval; about 100 checks per budget when unset.
    pub trace_every: Option<u64>,
    /// Keep `x` in the unit box. Without it the solver decides the system
    /// `{x ≥ 0 : Px ≤ 1, Cx ≥ 1}`.
    pub unit_box: bool,
    /// Stop at the first trace point that yields a solution or certificate.
    pub early_exit: bool,
}

impl SolverConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            delta: None,
            max_iters: None,
            trace_every: None,
            unit_box: true,
            early_exit: true,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_max_iters(mut self, iters: u64) -> Self {
        self.max_iters = Some(iters);
        self
    }

    pub fn with_trace_every(mut self, every: u64) -> Self {
        self.trace_every = Some(every);
        self
    }

    pub fn unboxed(mut self) -> Self {
        self.unit_box = false;
        self
    }

    pub fn without_early_exit(mut self) -> Self {
        self.early_exit = false;
        self
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.eps / 2.0)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Domain(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        let delta = self.delta();
        if !(delta > 0.0 && delta <= self.eps) {
            return Err(Error::Domain(format!(
                "delta must lie in (0, eps], got {delta}"
            )));
        }
        if self.max_iters == Some(0) {
            return Err(Error::Domain("max_iters must be positive".into()));
        }
        if self.trace_every == Some(0) {
            return Err(Error::Domain("trace_every must be positive".into()));
        }
        Ok(())
    }

    /// `min(max_iters, ⌈2ρ/eps⌉)`.
    pub fn budget(&self, rho: f64) -> u64 {
        let t = ((2.0 * rho / self.eps).ceil() as u64).max(1);
        self.max_iters.map_or(t, |m| m.min(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Feasible,
    InfeasibleCertified,
    Undetermined,
}

/// Which instance a certificate's multipliers refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateBasis {
    Original,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub margin: f64,
    pub basis: CertificateBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: u64,
    pub gap: f64,
    /// `δ + ρ/t`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    pub eps: f64,
    pub delta: f64,
    pub rho: f64,
    pub budget: u64,
    pub iterations: u64,
    pub final_gap: Option<f64>,
    pub gap_trace: Vec<TracePoint>,
    pub oracle_calls: u64,
    pub oracle_rounds: u64,
    /// Oracle calls whose accuracy bound stayed above `delta`.
    pub uncertified_oracle_calls: u64,
    pub work: WorkCounter,
    /// Dimensions `(n, p, c)` of the instance the loop ran on.
    pub normalized_shape: (usize, usize, usize),
    pub validation: Vec<ValidationAction>,
    pub wall_time_secs: f64,
}

impl SolveReport {
    fn trivial(cfg: &SolverConfig, validation: Vec<ValidationAction>) -> Self {
        Self {
            status: SolveStatus::Undetermined,
            x: None,
            certificate: None,
            eps: cfg.eps,
            delta: cfg.delta(),
            rho: 0.0,
            budget: 0,
            iterations: 0,
            final_gap: None,
            gap_trace: Vec::new(),
            oracle_calls: 0,
            oracle_rounds: 0,
            uncertified_oracle_calls: 0,
            work: WorkCounter::default(),
            normalized_shape: (0, 0, 0),
            validation,
            wall_time_secs: 0.0,
        }
    }

    pub fn gap_trace(&self) -> &[TracePoint] {
        &self.gap_trace
    }
}

fn accepts(inst: &MpcInstance, x: &[f64], cfg: &SolverConfig) -> Result<bool> {
    let chk = check_epsilon_feasible(inst, x, cfg.eps)?;
    Ok(if cfg.unit_box {
        chk.is_feasible()
    } else {
        chk.constraints_ok() && x.iter().all(|&v| v >= 0.0)
    })
}

/// Decides `eps`-approximate feasibility of `inst`.
///
/// The instance is validated, given explicit box rows when `cfg.unit_box`
/// is set, width-reduced, and handed to the dual-extrapolation loop. At
/// every trace point the averaged iterate is lifted back and tested on the
/// original instance, and its multipliers are tested as an infeasibility
/// certificate of the reduced instance.
pub fn solve(inst: &MpcInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.check()?;
    let started = Instant::now();
    let outcome = validate(inst);
    let mut report = SolveReport::trivial(cfg, outcome.actions.clone());

    if let Some(row) = outcome.infeasible_row() {
        let y = vec![0.0; inst.p()];
        let mut z = vec![0.0; inst.c()];
        z[row] = 1.0;
        let margin = verify_certificate(inst, &y, &z)?.margin;
        report.status = SolveStatus::InfeasibleCertified;
        report.certificate = Some(Certificate {
            y,
            z,
            margin,
            basis: CertificateBasis::Original,
        });
        report.wall_time_secs = started.elapsed().as_secs_f64();
        return Ok(report);
    }

    let working = if cfg.unit_box {
        with_box_rows(&outcome.instance).0
    } else {
        outcome.instance
    };
    let norm = normalize(&working);
    let finish = |x: Vec<f64>| if cfg.unit_box { clamp_to_box(&x) } else { x };

    if let Some(x) = norm.trivially_feasible.clone() {
        let x = finish(x);
        if accepts(inst, &x, cfg)? {
            report.status = SolveStatus::Feasible;
            report.x = Some(x);
            report.wall_time_secs = started.elapsed().as_secs_f64();
            return Ok(report);
        }
    }

    let ninst = &norm.instance;
    let params = build_params(ninst)?;
    let (n, p, c) = (ninst.n(), ninst.p(), ninst.c());
    let budget = cfg.budget(params.rho);
    let trace_every = cfg
        .trace_every
        .unwrap_or_else(|| budget.div_ceil(100).max(1));
    let delta = cfg.delta();
    report.rho = params.rho;
    report.budget = budget;
    report.normalized_shape = (n, p, c);

    let mut oracle = Oracle::new(ninst, &params);
    let mut work = WorkCounter::default();
    let mut sum = SaddleState::zeros(n, p, c);
    let mut sum_image = SaddleState::zeros(n, p, c);
    let mut step_image = SaddleState::zeros(n, p, c);
    let mut input = OracleInput::zeros(n, p, c);
    let mut warm: Option<Vec<f64>> = None;

    let load = |input: &mut OracleInput, g: &SaddleState, k: f64, h: &SaddleState| {
        for (dst, (a, b)) in input.a.iter_mut().zip(g.x.iter().zip(&h.x)) {
            *dst = a + k * b;
        }
        input.a[n] = g.u + k * h.u;
        for (dst, (a, b)) in input.a1.iter_mut().zip(g.y.iter().zip(&h.y)) {
            *dst = a + k * b;
        }
        for (dst, (a, b)) in input.a2.iter_mut().zip(g.z.iter().zip(&h.z)) {
            *dst = a + k * b;
        }
    };

    for t in 1..=budget {
        load(&mut input, &sum_image, 0.0, &sum_image);
        let lead = oracle.run(&input, delta, warm.as_deref())?;
        apply_j_into(ninst, &lead.state, &mut step_image, &mut work);
        load(&mut input, &sum_image, 2.0, &step_image);
        let step = oracle.run(&input, delta, Some(&lead.state.x))?;
        apply_j_into(ninst, &step.state, &mut step_image, &mut work);
        sum.add_scaled(1.0, &step.state);
        sum_image.add_scaled(1.0, &step_image);

        report.oracle_calls += 2;
        report.oracle_rounds += u64::from(lead.rounds + step.rounds);
        report.uncertified_oracle_calls +=
            u64::from(!lead.certified(delta)) + u64::from(!step.certified(delta));
        report.iterations = t;
        warm = Some(step.state.x);

        if t % trace_every != 0 && t != budget {
            continue;
        }
        let inv = 1.0 / t as f64;
        let gap = inv * gap_from_image(&sum_image);
        report.gap_trace.push(TracePoint {
            t,
            gap,
            envelope: delta + params.rho * inv,
        });
        report.final_gap = Some(gap);
        if !cfg.early_exit && t != budget {
            continue;
        }

        let avg = sum.scaled(inv);
        debug_assert!(check_domain(
            ninst,
            &SaddleState {
                u: 1.0,
                ..avg.clone()
            }
        )
        .is_ok());
        let x = finish(lift_solution(&norm, &avg.x)?);
        if accepts(inst, &x, cfg)? {
            report.status = SolveStatus::Feasible;
            report.x = Some(x);
            break;
        }
        let cert = verify_certificate(ninst, &avg.y, &avg.z)?;
        if cert.margin > CERTIFICATE_MARGIN {
            report.status = SolveStatus::InfeasibleCertified;
            report.certificate = Some(Certificate {
                y: avg.y,
                z: avg.z,
                margin: cert.margin,
                basis: CertificateBasis::Normalized,
            });
            break;
        }
    }
    work.absorb(&oracle.work());
    report.work = work;
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(report)
}
