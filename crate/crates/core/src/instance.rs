//! The mixed packing-covering problem model.
//!
//! An [`MpcInstance`] asks for `x` with `Px ≤ 1`, `Cx ≥ 1` and `0 ≤ x ≤ 1`.
//! Besides validation and the feasibility/certificate checks, this module
//! implements the width-reduction transform ([`normalize`]) that rewrites an
//! instance of the unboxed system `{x ≥ 0 : Px ≤ 1, Cx ≥ 1}` into an
//! equivalent one whose packing entries are at most 1, whose covering entries
//! are at most 2, and whose variables live in the unit box.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseMatrix;

/// Absolute slack used for every constraint comparison.
pub const FEAS_TOL: f64 = 1e-9;

/// Value given to variables that appear in no constraint.
pub const FREE_VALUE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcInstance {
    packing: SparseMatrix,
    covering: SparseMatrix,
}

impl MpcInstance {
    pub fn new(packing: SparseMatrix, covering: SparseMatrix) -> Result<Self> {
        check_len("covering column count", packing.ncols(), covering.ncols())?;
        Ok(Self { packing, covering })
    }

    pub fn packing(&self) -> &SparseMatrix {
        &self.packing
    }

    pub fn covering(&self) -> &SparseMatrix {
        &self.covering
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.packing.ncols()
    }

    /// Number of packing rows.
    pub fn p(&self) -> usize {
        self.packing.nrows()
    }

    /// Number of covering rows.
    pub fn c(&self) -> usize {
        self.covering.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.packing.nnz() + self.covering.nnz()
    }

    pub fn width(&self) -> usize {
        self.packing.width().max(self.covering.width())
    }

    /// Largest packing entry of every column.
    pub fn column_packing_max(&self) -> Vec<f64> {
        let mut m = vec![0.0f64; self.n()];
        for (_, j, v) in self.packing.triplets() {
            m[j] = m[j].max(v);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationAction {
    /// `0 ≥ 1` can never hold; the instance is infeasible.
    EmptyCoveringRow(usize),
    /// `0 ≤ 1` always holds; the row was removed.
    DroppedPackingRow(usize),
    /// The variable appears in no constraint.
    FreeColumn(usize),
}

#[derive(Debug, Clone)]
pub struct ValidationOutcome {
    pub instance: MpcInstance,
    pub actions: Vec<ValidationAction>,
}

impl ValidationOutcome {
    pub fn infeasible_row(&self) -> Option<usize> {
        self.actions.iter().find_map(|a| match a {
            ValidationAction::EmptyCoveringRow(j) => Some(*j),
            _ => None,
        })
    }

    pub fn is_infeasible(&self) -> bool {
        self.infeasible_row().is_some()
    }
}

/// Reports structural anomalies and drops empty packing rows.
pub fn validate(inst: &MpcInstance) -> ValidationOutcome {
    let mut actions = Vec::new();
    for j in 0..inst.c() {
        if inst.covering.row_nnz(j) == 0 {
            actions.push(ValidationAction::EmptyCoveringRow(j));
        }
    }
    let mut kept = Vec::with_capacity(inst.p());
    for i in 0..inst.p() {
        if inst.packing.row_nnz(i) == 0 {
            actions.push(ValidationAction::DroppedPackingRow(i));
        } else {
            kept.push(i);
        }
    }
    let mut used = vec![false; inst.n()];
    for (_, j, _) in inst.packing.triplets().chain(inst.covering.triplets()) {
        used[j] = true;
    }
    actions.extend(
        used.iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(j, _)| ValidationAction::FreeColumn(j)),
    );
    let packing = if kept.len() == inst.p() {
        inst.packing.clone()
    } else {
        inst.packing.select_rows(&kept)
    };
    ValidationOutcome {
        instance: MpcInstance {
            packing,
            covering: inst.covering.clone(),
        },
        actions,
    }
}

/// Appends a packing row `x_j ≤ 1` for every column whose largest packing
/// entry is below 1, so that the unit box becomes implied by the packing
/// constraints. Returns the new instance and the columns that received a row.
pub fn with_box_rows(inst: &MpcInstance) -> (MpcInstance, Vec<usize>) {
    let boxed: Vec<usize> = inst
        .column_packing_max()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m < 1.0)
        .map(|(j, _)| j)
        .collect();
    if boxed.is_empty() {
        return (inst.clone(), boxed);
    }
    let rows = SparseMatrix::from_triplets(
        boxed.len(),
        inst.n(),
        boxed.iter().enumerate().map(|(r, &j)| (r, j, 1.0)),
    )
    .expect("box rows are in range");
    let packing = inst
        .packing
        .vstack(&rows)
        .expect("box rows share the column count");
    (
        MpcInstance {
            packing,
            covering: inst.covering.clone(),
        },
        boxed,
    )
}

/// One column of a normalized instance and the factor that maps it back:
/// its contribution to the original variable is `x̄ / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappedColumn {
    pub original: usize,
    pub scale: f64,
}

/// An original variable removed by the transform, with its prescribed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliminatedColumn {
    pub original: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub original_columns: usize,
    pub columns: Vec<MappedColumn>,
    pub eliminated: Vec<EliminatedColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedInstance {
    pub instance: MpcInstance,
    pub map: ColumnMap,
    /// Original indices of the covering rows that survive elimination.
    pub covering_rows: Vec<usize>,
    /// A point satisfying the original system exactly, when one was found
    /// by inspection of a single column.
    pub trivially_feasible: Option<Vec<f64>>,
    /// Set when the original instance has an empty covering row.
    pub trivially_infeasible: bool,
}

/// Smallest `k ≥ 1` with `m·2^k ≥ target`; exact when the ratio is a power of two.
fn doubling_count(m: f64, target: f64) -> u32 {
    let mut k = 1u32;
    let mut reach = 2.0 * m;
    while reach < target {
        k += 1;
        reach *= 2.0;
    }
    k
}

/// Width-reduction transform for the unboxed system `{x ≥ 0 : Px ≤ 1, Cx ≥ 1}`.
///
/// Columns without packing entries are eliminated first: each is set to the
/// smallest value meeting all of its still-active covering rows, and those
/// rows are removed. Every remaining column `i` with largest packing entry
/// `m_i` is then either rescaled by `1/m_i` (all covering entries at most
/// `m_i`) or split into `⌈log₂(max_j C_ji / m_i)⌉` copies whose covering
/// entries are capped at `2^l m_i` and which are rescaled by `2^{l-1} m_i`.
pub fn normalize(inst: &MpcInstance) -> NormalizedInstance {
    let n = inst.n();
    let c = inst.c();
    let trivially_infeasible = (0..c).any(|j| inst.covering.row_nnz(j) == 0);
    let pcols = inst.packing.transpose();
    let ccols = inst.covering.transpose();
    let m: Vec<f64> = (0..n)
        .map(|i| pcols.row(i).map(|(_, v)| v).fold(0.0, f64::max))
        .collect();

    // pure-covering variables
    let mut active = vec![true; c];
    let mut eliminated = Vec::new();
    for i in (0..n).filter(|&i| m[i] == 0.0) {
        let value = if ccols.row_nnz(i) == 0 {
            FREE_VALUE
        } else {
            let mut value = 0.0f64;
            for (j, v) in ccols.row(i) {
                if active[j] {
                    value = value.max(1.0 / v);
                    active[j] = false;
                }
            }
            value
        };
        eliminated.push(EliminatedColumn { original: i, value });
    }
    let covering_rows: Vec<usize> = (0..c).filter(|&j| active[j]).collect();
    let mut row_slot = vec![usize::MAX; c];
    for (slot, &j) in covering_rows.iter().enumerate() {
        row_slot[j] = slot;
    }

    let eliminated_point = || {
        let mut x = vec![0.0; n];
        for e in &eliminated {
            x[e.original] = e.value;
        }
        x
    };

    let mut trivially_feasible = None;
    if covering_rows.is_empty() && !trivially_infeasible {
        trivially_feasible = Some(eliminated_point());
    }

    let mut columns = Vec::new();
    let mut p_trip = Vec::new();
    let mut c_trip = Vec::new();
    for i in (0..n).filter(|&i| m[i] > 0.0) {
        let mi = m[i];
        let entries: Vec<(usize, f64)> = ccols
            .row(i)
            .filter(|&(j, _)| active[j])
            .map(|(j, v)| (row_slot[j], v))
            .collect();
        let max_c = entries.iter().map(|&(_, v)| v).fold(0.0, f64::max);
        let min_c = if entries.len() < covering_rows.len() {
            0.0
        } else {
            entries
                .iter()
                .map(|&(_, v)| v)
                .fold(f64::INFINITY, f64::min)
        };

        if trivially_feasible.is_none()
            && !trivially_infeasible
            && !covering_rows.is_empty()
            && min_c >= mi
        {
            let mut x = eliminated_point();
            x[i] = 1.0 / mi;
            trivially_feasible = Some(x);
        }

        if max_c <= mi {
            let k = columns.len();
            columns.push(MappedColumn {
                original: i,
                scale: mi,
            });
            p_trip.extend(pcols.row(i).map(|(j, v)| (j, k, v / mi)));
            c_trip.extend(entries.iter().map(|&(j, v)| (j, k, v / mi)));
        } else {
            let copies = doubling_count(mi, max_c);
            let mut scale = mi;
            for _ in 0..copies {
                let cap = 2.0 * scale;
                let k = columns.len();
                columns.push(MappedColumn { original: i, scale });
                p_trip.extend(pcols.row(i).map(|(j, v)| (j, k, v / scale)));
                c_trip.extend(entries.iter().map(|&(j, v)| (j, k, v.min(cap) / scale)));
                scale = cap;
            }
        }
    }
    let n_bar = columns.len();
    let packing =
        SparseMatrix::from_triplets(inst.p(), n_bar, p_trip).expect("rescaled entries stay valid");
    let covering = SparseMatrix::from_triplets(covering_rows.len(), n_bar, c_trip)
        .expect("rescaled entries stay valid");
    NormalizedInstance {
        instance: MpcInstance { packing, covering },
        map: ColumnMap {
            original_columns: n,
            columns,
            eliminated,
        },
        covering_rows,
        trivially_feasible,
        trivially_infeasible,
    }
}

/// Maps a point of the normalized instance back to the original variables.
///
/// The result satisfies the original unboxed system whenever the input
/// satisfies the normalized one; it may exceed 1 in coordinates whose
/// largest packing entry is below 1.
pub fn lift_solution(norm: &NormalizedInstance, x_bar: &[f64]) -> Result<Vec<f64>> {
    check_len("lift_solution input", norm.map.columns.len(), x_bar.len())?;
    if let Some(bad) = x_bar
        .iter()
        .find(|v| !(**v >= -FEAS_TOL && **v <= 1.0 + FEAS_TOL))
    {
        return Err(Error::Domain(format!(
            "normalized point {bad} lies outside the unit box"
        )));
    }
    let mut x = vec![0.0; norm.map.original_columns];
    for (col, &v) in norm.map.columns.iter().zip(x_bar) {
        x[col.original] += v.clamp(0.0, 1.0) / col.scale;
    }
    for e in &norm.map.eliminated {
        x[e.original] = e.value;
    }
    Ok(x)
}

/// Componentwise projection onto the unit box.
pub fn clamp_to_box(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Extreme constraint values of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCheck {
    pub eps: f64,
    /// `max_i (Px)_i`, zero without packing rows.
    pub max_packing: f64,
    /// `min_i (Cx)_i`, infinite without covering rows.
    pub min_covering: f64,
    /// Largest distance of a coordinate from `[0, 1]`.
    pub box_violation: f64,
}

impl FeasibilityCheck {
    /// Packing and covering constraints hold within `eps`.
    pub fn constraints_ok(&self) -> bool {
        self.max_packing <= 1.0 + self.eps + FEAS_TOL
            && self.min_covering >= 1.0 - self.eps - FEAS_TOL
    }

    pub fn within_box(&self) -> bool {
        self.box_violation <= FEAS_TOL
    }

    /// `x` is an `eps`-approximate solution.
    pub fn is_feasible(&self) -> bool {
        self.within_box() && self.constraints_ok()
    }
}

pub fn check_epsilon_feasible(inst: &MpcInstance, x: &[f64], eps: f64) -> Result<FeasibilityCheck> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps must be nonnegative, got {eps}")));
    }
    let px = inst.packing.matvec(x)?;
    let cx = inst.covering.matvec(x)?;
    Ok(FeasibilityCheck {
        eps,
        max_packing: px.into_iter().fold(0.0, f64::max),
        min_covering: cx.into_iter().fold(f64::INFINITY, f64::min),
        box_violation: x
            .iter()
            .map(|&v| (-v).max(v - 1.0).max(0.0))
            .fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    /// Infimum over the unit box of `yᵀ(Px − 1) + zᵀ(1 − Cx)`.
    pub margin: f64,
}

impl CertificateCheck {
    pub fn is_valid(&self) -> bool {
        self.margin > 0.0
    }
}

/// Evaluates multipliers `(y, z)` as a proof that no `x` in the unit box
/// satisfies both constraint families. A positive margin is such a proof.
pub fn verify_certificate(inst: &MpcInstance, y: &[f64], z: &[f64]) -> Result<CertificateCheck> {
    check_len("certificate packing multipliers", inst.p(), y.len())?;
    check_len("certificate covering multipliers", inst.c(), z.len())?;
    if y.iter().chain(z).any(|&v| !(v >= 0.0)) {
        return Err(Error::Domain(
            "certificate multipliers must be nonnegative".into(),
        ));
    }
    let pty = inst.packing.matvec_transpose(y)?;
    let ctz = inst.covering.matvec_transpose(z)?;
    let box_part: f64 = pty.iter().zip(&ctz).map(|(a, b)| (a - b).min(0.0)).sum();
    let margin = box_part + z.iter().sum::<f64>() - y.iter().sum::<f64>();
    Ok(CertificateCheck { margin })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: &[&[f64]], c: &[&[f64]], n: usize) -> MpcInstance {
        MpcInstance::new(
            SparseMatrix::from_dense(n, p).unwrap(),
            SparseMatrix::from_dense(n, c).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn validate_reports_empty_covering_row() {
        let i = inst(&[&[1.0, 0.0]], &[&[1.0, 0.0], &[0.0, 0.0]], 2);
        let out = validate(&i);
        assert_eq!(out.infeasible_row(), Some(1));
    }

    #[test]
    fn validate_drops_empty_packing_row() {
        let i = inst(&[&[0.0, 0.0], &[1.0, 1.0]], &[&[1.0, 0.5]], 2);
        let out = validate(&i);
        assert!(!out.is_infeasible());
        assert_eq!(out.actions, vec![ValidationAction::DroppedPackingRow(0)]);
        assert_eq!(out.instance.p(), 1);
        assert_eq!(out.instance.covering(), i.covering());
    }

    #[test]
    fn validate_records_free_column() {
        let i = inst(&[&[1.0, 0.0, 0.0, 0.0]], &[&[0.0, 1.0, 1.0, 0.0]], 4);
        let out = validate(&i);
        assert_eq!(out.actions, vec![ValidationAction::FreeColumn(3)]);
        let norm = normalize(&out.instance);
        let lifted = lift_solution(&norm, &vec![0.0; norm.map.columns.len()]).unwrap();
        assert_eq!(lifted[3], FREE_VALUE);
    }

    #[test]
    fn normalize_single_column_trivially_feasible() {
        let norm = normalize(&inst(&[&[1.0]], &[&[4.0]], 1));
        assert_eq!(norm.trivially_feasible, Some(vec![1.0]));
    }

    #[test]
    fn normalize_splits_wide_ratio_column() {
        // column 0: packing max 1, covering entries (4, 0) -> two copies
        let i = inst(&[&[1.0, 1.0]], &[&[4.0, 0.0], &[0.0, 1.0]], 2);
        let norm = normalize(&i);
        assert!(norm.trivially_feasible.is_none());
        let cols = &norm.map.columns;
        assert_eq!(cols.len(), 3);
        assert_eq!(
            cols[0],
            MappedColumn {
                original: 0,
                scale: 1.0
            }
        );
        assert_eq!(
            cols[1],
            MappedColumn {
                original: 0,
                scale: 2.0
            }
        );
        let (p, c) = (norm.instance.packing(), norm.instance.covering());
        assert_eq!((c.get(0, 0), p.get(0, 0)), (2.0, 1.0));
        assert_eq!((c.get(0, 1), p.get(0, 1)), (2.0, 0.5));
        assert_eq!(c.get(1, 2), 1.0);
        assert!(p.max_value() <= 1.0 && c.max_value() <= 2.0);
    }

    #[test]
    fn normalize_rescales_small_column() {
        let norm = normalize(&inst(&[&[0.5]], &[&[0.25]], 1));
        assert_eq!(
            norm.map.columns,
            vec![MappedColumn {
                original: 0,
                scale: 0.5
            }]
        );
        assert_eq!(norm.instance.packing().get(0, 0), 1.0);
        assert_eq!(norm.instance.covering().get(0, 0), 0.5);
    }

    #[test]
    fn doubling_count_exact_powers() {
        assert_eq!(doubling_count(1.0, 4.0), 2);
        assert_eq!(doubling_count(1.0, 4.000001), 3);
        assert_eq!(doubling_count(1.0, 1.5), 1);
        assert_eq!(doubling_count(0.1, 0.8), 3);
    }

    #[test]
    fn normalize_eliminates_pure_covering_column() {
        // x1 has no packing entry; it alone satisfies rows 0 and 1
        let i = inst(&[&[1.0, 0.0]], &[&[0.5, 0.25], &[0.0, 0.5], &[1.0, 0.0]], 2);
        let norm = normalize(&i);
        assert_eq!(
            norm.map.eliminated,
            vec![EliminatedColumn {
                original: 1,
                value: 4.0
            }]
        );
        assert_eq!(norm.covering_rows, vec![2]);
        assert_eq!(norm.instance.c(), 1);
        // remaining row 2 is covered by x0 with entry 1 = m -> trivially feasible
        let x = norm.trivially_feasible.clone().unwrap();
        let chk = check_epsilon_feasible(&i, &x, 0.0).unwrap();
        assert!(chk.constraints_ok());
    }

    #[test]
    fn normalize_without_covering_rows() {
        let i = inst(&[&[1.0, 1.0]], &[], 2);
        let norm = normalize(&i);
        assert_eq!(norm.trivially_feasible, Some(vec![0.0, 0.0]));
    }

    #[test]
    fn normalize_flags_empty_covering_row() {
        let i = inst(&[&[1.0]], &[&[0.0]], 1);
        let norm = normalize(&i);
        assert!(norm.trivially_infeasible);
        assert!(norm.trivially_feasible.is_none());
    }

    #[test]
    fn lift_inverse_scaling() {
        let norm = normalize(&inst(&[&[0.5]], &[&[0.25]], 1));
        assert_eq!(lift_solution(&norm, &[1.0]).unwrap(), vec![2.0]);
        assert!(lift_solution(&norm, &[1.5]).is_err());
        assert!(lift_solution(&norm, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn lift_sums_copies() {
        let i = inst(&[&[1.0, 1.0]], &[&[4.0, 0.0], &[0.0, 1.0]], 2);
        let norm = normalize(&i);
        let x = lift_solution(&norm, &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(x[0], 0.75);
    }

    #[test]
    fn box_rows_added_only_where_needed() {
        let i = inst(&[&[0.5, 2.0, 0.0]], &[&[1.0, 1.0, 1.0]], 3);
        let (boxed, cols) = with_box_rows(&i);
        assert_eq!(cols, vec![0, 2]);
        assert_eq!(boxed.p(), 3);
        assert_eq!(boxed.packing().get(1, 0), 1.0);
        assert_eq!(boxed.packing().get(2, 2), 1.0);
    }

    #[test]
    fn epsilon_feasibility_examples() {
        let i = inst(&[&[1.0]], &[&[1.0]], 1);
        assert!(check_epsilon_feasible(&i, &[1.0], 0.0)
            .unwrap()
            .is_feasible());
        assert!(!check_epsilon_feasible(&i, &[0.9], 0.05)
            .unwrap()
            .is_feasible());
        assert!(check_epsilon_feasible(&i, &[0.96], 0.05)
            .unwrap()
            .is_feasible());
        let out = check_epsilon_feasible(&i, &[1.2], 0.5).unwrap();
        assert!(out.constraints_ok() && !out.within_box());
        assert!(check_epsilon_feasible(&i, &[1.0], -0.1).is_err());
        assert!(check_epsilon_feasible(&i, &[1.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn certificate_examples() {
        let infeasible = inst(&[&[1.0]], &[&[0.5]], 1);
        let chk = verify_certificate(&infeasible, &[0.0], &[1.0]).unwrap();
        assert_eq!(chk.margin, 0.5);
        assert!(chk.is_valid());

        let feasible = inst(&[&[1.0]], &[&[1.0]], 1);
        for t in [0.0, 0.3, 1.0] {
            let chk = verify_certificate(&feasible, &[t], &[t]).unwrap();
            assert_eq!(chk.margin, 0.0);
            assert!(!chk.is_valid());
        }
        assert!(verify_certificate(&feasible, &[-0.1], &[0.0]).is_err());
        assert!(verify_certificate(&feasible, &[0.0, 0.0], &[0.0]).is_err());
    }
}
