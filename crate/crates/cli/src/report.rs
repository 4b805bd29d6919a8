//! Machine-readable reports.

use std::io;

use acmpc_core::densest::DsgResult;
use acmpc_core::{MpcInstance, SolveReport, SolveStatus, ValidationAction};
use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// JSON formatter writing every float with 17 significant digits.
struct Precise;

impl Formatter for Precise {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Compact JSON with fixed float precision; non-finite numbers become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Precise);
    value.serialize(&mut ser).expect("report types serialize");
    let mut out = String::from_utf8(buf).expect("serde_json writes UTF-8");
    out.push('\n');
    out
}

pub fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Feasible => "feasible",
        SolveStatus::InfeasibleCertified => "infeasible_certified",
        SolveStatus::Undetermined => "undetermined",
    }
}

/// Process exit code for a solve outcome.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Feasible => 0,
        SolveStatus::InfeasibleCertified => 2,
        SolveStatus::Undetermined => 3,
    }
}

#[derive(Debug, Serialize)]
pub struct InstanceStats {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub nnz: usize,
    pub width: usize,
    /// Regularizer range of the reduced instance; 0 when no loop ran.
    pub rho: f64,
}

impl InstanceStats {
    pub fn of(inst: &MpcInstance, rho: f64) -> Self {
        Self {
            n: inst.n(),
            p: inst.p(),
            c: inst.c(),
            nnz: inst.nnz(),
            width: inst.width(),
            rho,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CertificateDoc {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub margin: f64,
    pub basis: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub status: &'static str,
    pub eps: f64,
    pub delta: f64,
    pub iterations: u64,
    pub budget: u64,
    pub gap_final: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub certificate: Option<CertificateDoc>,
    pub instance: InstanceStats,
    pub normalized: InstanceShape,
    pub oracle_calls: u64,
    pub oracle_rounds: u64,
    pub uncertified_oracle_calls: u64,
    pub matvecs: u64,
    pub multiply_adds: u64,
    pub validation: Vec<String>,
    pub timings: Timings,
}

#[derive(Debug, Serialize)]
pub struct InstanceShape {
    pub n: usize,
    pub p: usize,
    pub c: usize,
}

fn describe(action: &ValidationAction) -> String {
    match action {
        ValidationAction::EmptyCoveringRow(j) => format!("covering row {j} is empty"),
        ValidationAction::DroppedPackingRow(i) => format!("dropped empty packing row {i}"),
        ValidationAction::FreeColumn(j) => format!("column {j} appears in no constraint"),
    }
}

impl ReportDocument {
    pub fn new(inst: &MpcInstance, report: &SolveReport, timings: bool) -> Self {
        let (n, p, c) = report.normalized_shape;
        Self {
            status: status_name(report.status),
            eps: report.eps,
            delta: report.delta,
            iterations: report.iterations,
            budget: report.budget,
            gap_final: report.final_gap,
            x: report.x.clone(),
            certificate: report.certificate.as_ref().map(|cert| CertificateDoc {
                y: cert.y.clone(),
                z: cert.z.clone(),
                margin: cert.margin,
                basis: match cert.basis {
                    acmpc_core::CertificateBasis::Original => "original",
                    acmpc_core::CertificateBasis::Normalized => "normalized",
                },
            }),
            instance: InstanceStats::of(inst, report.rho),
            normalized: InstanceShape { n, p, c },
            oracle_calls: report.oracle_calls,
            oracle_rounds: report.oracle_rounds,
            uncertified_oracle_calls: report.uncertified_oracle_calls,
            matvecs: report.work.matvecs,
            multiply_adds: report.work.multiply_adds,
            validation: report.validation.iter().map(describe).collect(),
            timings: Timings {
                wall_time_secs: timings.then_some(report.wall_time_secs),
            },
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "status: {}\neps: {}\niterations: {} of {}\n",
            self.status, self.eps, self.iterations, self.budget
        );
        if let Some(gap) = self.gap_final {
            out += &format!("final gap: {gap:.6e}\n");
        }
        out += &format!(
            "instance: n={} p={} c={} nnz={} width={} rho={:.4}\n",
            self.instance.n,
            self.instance.p,
            self.instance.c,
            self.instance.nnz,
            self.instance.width,
            self.instance.rho
        );
        if let Some(x) = &self.x {
            out += &format!("x: {x:?}\n");
        }
        if let Some(cert) = &self.certificate {
            out += &format!(
                "certificate ({} instance, margin {:.6e}):\n  y: {:?}\n  z: {:?}\n",
                cert.basis, cert.margin, cert.y, cert.z
            );
        }
        for note in &self.validation {
            out += &format!("note: {note}\n");
        }
        if let Some(t) = self.timings.wall_time_secs {
            out += &format!("wall time: {t:.3}s\n");
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct ProbeDoc {
    pub density: f64,
    pub solver_eps: f64,
    pub status: &'static str,
    pub iterations: u64,
    pub oracle_rounds: u64,
    pub multiply_adds: u64,
}

#[derive(Debug, Serialize)]
pub struct DsgDocument {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub eps: f64,
    pub density_low: f64,
    pub density_high: f64,
    pub ratio: f64,
    pub probe_count: usize,
    pub probes: Vec<ProbeDoc>,
}

impl DsgDocument {
    pub fn new(vertex_count: usize, edge_count: usize, eps: f64, result: &DsgResult) -> Self {
        Self {
            vertex_count,
            edge_count,
            eps,
            density_low: result.density_low,
            density_high: result.density_high,
            ratio: result.density_high / result.density_low,
            probe_count: result.probes.len(),
            probes: result
                .probes
                .iter()
                .map(|p| ProbeDoc {
                    density: p.density,
                    solver_eps: p.solver_eps,
                    status: status_name(p.status),
                    iterations: p.iterations,
                    oracle_rounds: p.oracle_rounds,
                    multiply_adds: p.work.multiply_adds,
                })
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "graph: {} vertices, {} edges\ndensity in [{:.6}, {:.6}] (ratio {:.4})\nprobes: {}\n",
            self.vertex_count,
            self.edge_count,
            self.density_low,
            self.density_high,
            self.ratio,
            self.probe_count
        );
        for p in &self.probes {
            out += &format!(
                "  D={:.6} eps={} -> {} after {} iterations\n",
                p.density, p.solver_eps, p.status, p.iterations
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(to_json(&0.1), "1.0000000000000001e-1\n");
        assert_eq!(to_json(&1.0), "1.0000000000000000e0\n");
        assert_eq!(to_json(&f64::NAN), "null\n");
        let back: f64 = serde_json::from_str(to_json(&(1.0 / 3.0)).trim()).unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(SolveStatus::Feasible), 0);
        assert_eq!(exit_code(SolveStatus::InfeasibleCertified), 2);
        assert_eq!(exit_code(SolveStatus::Undetermined), 3);
    }
}
