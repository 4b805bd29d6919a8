//! Subcommand bodies. Each returns the exit code or an error (exit 1).

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use acmpc_core::densest::{binary_search_density, DsgConfig};
use acmpc_core::generate::Planting;
use acmpc_core::{
    normalize as reduce, solve as run_solver, with_box_rows, ColumnMap, SolverConfig, TracePoint,
};
use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::io::{format_instance, load_edge_list, load_instance};
use crate::report::{exit_code, to_json, DsgDocument, ReportDocument};
use crate::suite::{run_suite, write_csv, SuiteConfig};
use crate::{BenchArgs, DsgArgs, NormalizeArgs, OutputFormat, PlantingArg, SolveArgs};

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_trace(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(["t", "gap", "envelope"])?;
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<i32> {
    let inst = load_instance(&args.input)?;
    let mut cfg = SolverConfig::new(args.eps);
    cfg.delta = args.delta;
    cfg.max_iters = args.max_iters;
    cfg.trace_every = args.trace_every;
    let report = run_solver(&inst, &cfg)?;
    if let Some(path) = &args.trace {
        write_trace(path, report.gap_trace())?;
    }
    let doc = ReportDocument::new(&inst, &report, !args.omit_timings);
    match args.output {
        OutputFormat::Json => print!("{}", to_json(&doc)),
        OutputFormat::Text => print!("{}", doc.to_text()),
    }
    Ok(exit_code(report.status))
}

pub fn dsg(args: &DsgArgs) -> Result<i32> {
    let list = load_edge_list(&args.graph)?;
    for w in &list.warnings {
        eprintln!("warning: {w}");
    }
    if list.graph.edge_count() == 0 {
        bail!("{} has no edges", args.graph.display());
    }
    let result = binary_search_density(&list.graph, &DsgConfig::new(args.eps))?;
    let doc = DsgDocument::new(
        list.graph.vertex_count(),
        list.graph.edge_count(),
        args.eps,
        &result,
    );
    match args.output {
        OutputFormat::Json => print!("{}", to_json(&doc)),
        OutputFormat::Text => print!("{}", doc.to_text()),
    }
    Ok(0)
}

/// Sidecar written next to a normalized instance.
#[derive(Debug, Serialize)]
pub struct ColumnMapFile<'a> {
    pub map: &'a ColumnMap,
    /// Original indices of the covering rows kept in the output.
    pub covering_rows: &'a [usize],
    /// Columns that received an explicit `x_j ≤ 1` row (`--unit-box`).
    pub box_rows: &'a [usize],
    pub trivially_feasible: Option<&'a [f64]>,
    pub trivially_infeasible: bool,
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".colmap.json");
    PathBuf::from(name)
}

pub fn normalize(args: &NormalizeArgs) -> Result<i32> {
    let inst = load_instance(&args.input)?;
    let (inst, box_rows) = if args.unit_box {
        with_box_rows(&inst)
    } else {
        (inst, Vec::new())
    };
    let norm = reduce(&inst);
    std::fs::write(&args.output, format_instance(&norm.instance))
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    let sidecar = ColumnMapFile {
        map: &norm.map,
        covering_rows: &norm.covering_rows,
        box_rows: &box_rows,
        trivially_feasible: norm.trivially_feasible.as_deref(),
        trivially_infeasible: norm.trivially_infeasible,
    };
    let path = sidecar_path(&args.output);
    std::fs::write(&path, to_json(&sidecar))
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(0)
}

pub fn bench(args: &BenchArgs) -> Result<i32> {
    if args.n.contains(&0) {
        bail!("--n values must be positive");
    }
    if !(args.density > 0.0 && args.density <= 1.0) {
        bail!("--density must lie in (0, 1], got {}", args.density);
    }
    let cfg = SuiteConfig {
        sizes: args.n.clone(),
        density: args.density,
        eps: args.eps.clone(),
        seed: args.seed,
        planting: match args.planting {
            PlantingArg::Feasible => Planting::Feasible,
            PlantingArg::Infeasible => Planting::Infeasible,
            PlantingArg::Unplanted => Planting::Unplanted,
        },
        max_iters: args.max_iters,
        early_exit: !args.no_early_exit,
        timings: !args.omit_timings,
    };
    let rows = run_suite(&cfg)?;
    write_csv(&rows, create(&args.out)?)?;
    Ok(0)
}
