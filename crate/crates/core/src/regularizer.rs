//! The area-convex regularizer over `W = [0,1]^n × {1} × Δ⁺_p × Δ⁺_c`.
//!
//! `φ(w) = Σ P_ij γ_{p_i}(x_j, y_i) + Σ γ₂(u, y_i) + Σ C_ij γ_{c_i}(x_j, z_i) + Σ γ₂(u, z_i)`
//! with the gadget `γ_β(a, b) = b·a·log a + β·b·log b` and row weights
//! `p_i = 2‖P‖∞ / ‖P_i‖₁`, `c_i = 2‖C‖∞ / ‖C_i‖₁`. Everything outside this
//! module sees the scaled function `6√3·φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::MpcInstance;
use crate::solver::SaddleState;

/// `6√3`, the factor making `φ` area convex with respect to the bilinear operator.
pub const SCALE: f64 = 10.392304845413264;

/// Slack allowed when checking that a point lies in `W`.
pub const DOMAIN_TOL: f64 = 1e-9;

/// `v·ln v` with `0·ln 0 = 0`.
#[inline]
pub fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

pub fn gadget(a: f64, b: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(b >= 0.0) || !(beta >= 2.0) {
        return Err(Error::Domain(format!(
            "gadget needs a in [0,1], b >= 0, beta >= 2; got ({a}, {b}, {beta})"
        )));
    }
    Ok(b * xlogx(a) + beta * xlogx(b))
}

/// Hessian of the gadget in `(a, b)`; requires `a, b > 0`.
pub fn gadget_hessian(a: f64, b: f64, beta: f64) -> Result<[[f64; 2]; 2]> {
    if !(a > 0.0 && a <= 1.0) || !(b > 0.0) || !(beta >= 2.0) {
        return Err(Error::Domain(format!(
            "gadget Hessian needs a in (0,1], b > 0, beta >= 2; got ({a}, {b}, {beta})"
        )));
    }
    let cross = 1.0 + a.ln();
    Ok([[b / a, cross], [cross, beta / b]])
}

/// Determinant of the gadget Hessian, `β/a − (1 + ln a)²`; independent of `b`.
pub fn gadget_hessian_det(a: f64, beta: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0) || !(beta >= 2.0) {
        return Err(Error::Domain(format!(
            "gadget Hessian determinant needs a in (0,1], beta >= 2; got ({a}, {beta})"
        )));
    }
    let cross = 1.0 + a.ln();
    Ok(beta / a - cross * cross)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizerParams {
    pub p_weights: Vec<f64>,
    pub c_weights: Vec<f64>,
    /// `‖P‖∞`.
    pub p_norm: f64,
    /// `‖C‖∞`.
    pub c_norm: f64,
    pub scale: f64,
    /// Bound on `|6√3·φ|` over `W`.
    pub rho: f64,
}

impl RegularizerParams {
    /// Entropy coefficient of `y` once the row weights are summed out: `2‖P‖∞ + 2`.
    pub fn y_entropy_weight(&self) -> f64 {
        2.0 * self.p_norm + 2.0
    }

    /// Entropy coefficient of `z`: `2‖C‖∞ + 2`.
    pub fn z_entropy_weight(&self) -> f64 {
        2.0 * self.c_norm + 2.0
    }
}

/// Upper bound on `−min Σ v_i ln v_i` over the `k`-dimensional extended simplex,
/// floored at `ln 2` so the iteration budget never collapses.
fn entropy_range(k: usize) -> f64 {
    match k {
        0 | 1 => std::f64::consts::LN_2,
        2 => 2.0 / std::f64::consts::E,
        _ => (k as f64).ln(),
    }
}

pub fn build_params(inst: &MpcInstance) -> Result<RegularizerParams> {
    let weights = |norms: Vec<f64>, family: &str| -> Result<(Vec<f64>, f64)> {
        let norm = norms.iter().copied().fold(0.0, f64::max);
        norms
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                if r > 0.0 {
                    Ok(2.0 * norm / r)
                } else {
                    Err(Error::Domain(format!("{family} row {i} is empty")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(|w| (w, norm))
    };
    let (p_weights, p_norm) = weights(inst.packing().row_l1_norms(), "packing")?;
    let (c_weights, c_norm) = weights(inst.covering().row_l1_norms(), "covering")?;
    let e = std::f64::consts::E;
    let side = |norm: f64, rows: usize| norm / e + (2.0 * norm + 2.0) * entropy_range(rows);
    let rho = SCALE * (side(p_norm, inst.p()) + side(c_norm, inst.c()));
    Ok(RegularizerParams {
        p_weights,
        c_weights,
        p_norm,
        c_norm,
        scale: SCALE,
        rho,
    })
}

/// Checks `w ∈ W` up to [`DOMAIN_TOL`].
pub fn check_domain(inst: &MpcInstance, w: &SaddleState) -> Result<()> {
    w.check_shape(inst)?;
    let t = DOMAIN_TOL;
    if w.x.iter().any(|&v| !(v >= -t && v <= 1.0 + t)) {
        return Err(Error::Domain("x leaves the unit box".into()));
    }
    if !((w.u - 1.0).abs() <= t) {
        return Err(Error::Domain(format!("u must equal 1, got {}", w.u)));
    }
    for (name, v) in [("y", &w.y), ("z", &w.z)] {
        if v.iter().any(|&e| !(e >= -t)) || v.iter().sum::<f64>() > 1.0 + t {
            return Err(Error::Domain(format!("{name} leaves the extended simplex")));
        }
    }
    Ok(())
}

/// Unscaled `φ` given the precomputed products `P(x log x)` and `C(x log x)`.
pub(crate) fn phi_from_products(
    params: &RegularizerParams,
    u: f64,
    y: &[f64],
    z: &[f64],
    p_xlogx: &[f64],
    c_xlogx: &[f64],
) -> f64 {
    let ulogu = xlogx(u);
    let side = |v: &[f64], prod: &[f64], norm: f64| -> f64 {
        v.iter()
            .zip(prod)
            .map(|(&vi, &pi)| vi * pi + (2.0 * norm + 2.0) * xlogx(vi) + vi * ulogu)
            .sum()
    };
    side(y, p_xlogx, params.p_norm) + side(z, c_xlogx, params.c_norm)
}

/// Scaled regularizer value `6√3·φ(w)` for `w ∈ W`; lies in `[−ρ, 0]`.
pub fn phi(params: &RegularizerParams, inst: &MpcInstance, w: &SaddleState) -> Result<f64> {
    check_domain(inst, w)?;
    let xl: Vec<f64> = w.x.iter().map(|&v| xlogx(v.clamp(0.0, 1.0))).collect();
    let y: Vec<f64> = w.y.iter().map(|v| v.max(0.0)).collect();
    let z: Vec<f64> = w.z.iter().map(|v| v.max(0.0)).collect();
    let pxl = inst.packing().matvec(&xl)?;
    let cxl = inst.covering().matvec(&xl)?;
    Ok(params.scale * phi_from_products(params, 1.0, &y, &z, &pxl, &cxl))
}
