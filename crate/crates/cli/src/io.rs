//! Plain-text instance and edge-list formats.
//!
//! Instance files start with `MPC <n> <p> <c> <nnzP> <nnzC>` (optionally
//! followed by `rhs`) and list one entry per line as `P <row> <col> <value>`
//! or `C <row> <col> <value>`, 0-indexed. With `rhs`, lines
//! `RP <row> <b>` and `RC <row> <b>` give a positive right-hand side that is
//! divided out of the row at load time; rows without one keep `b = 1`.
//! Lines starting with `#` and blank lines are ignored everywhere.

use std::fmt::Write as _;
use std::path::Path;

use acmpc_core::densest::Graph;
use acmpc_core::{MpcInstance, SparseMatrix};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Structure(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(
    line: usize,
    token: Option<&str>,
    what: &str,
) -> Result<T, FormatError> {
    let token = token.ok_or_else(|| line_err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| line_err(line, format!("invalid {what} `{token}`")))
}

fn parse_value(line: usize, token: Option<&str>, what: &str) -> Result<f64, FormatError> {
    let v: f64 = parse_field(line, token, what)?;
    if !v.is_finite() {
        return Err(line_err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

struct Header {
    n: usize,
    p: usize,
    c: usize,
    nnz_p: usize,
    nnz_c: usize,
    rhs: bool,
}

fn parse_header(line: usize, text: &str) -> Result<Header, FormatError> {
    let mut tok = text.split_whitespace();
    if tok.next() != Some("MPC") {
        return Err(line_err(
            line,
            "expected header `MPC <n> <p> <c> <nnzP> <nnzC>`",
        ));
    }
    let header = Header {
        n: parse_field(line, tok.next(), "column count")?,
        p: parse_field(line, tok.next(), "packing row count")?,
        c: parse_field(line, tok.next(), "covering row count")?,
        nnz_p: parse_field(line, tok.next(), "packing entry count")?,
        nnz_c: parse_field(line, tok.next(), "covering entry count")?,
        rhs: match tok.next() {
            None => false,
            Some("rhs") => true,
            Some(other) => {
                return Err(line_err(line, format!("unexpected header token `{other}`")))
            }
        },
    };
    if let Some(extra) = tok.next() {
        return Err(line_err(line, format!("unexpected header token `{extra}`")));
    }
    Ok(header)
}

pub fn parse_instance(text: &str) -> Result<MpcInstance, FormatError> {
    let mut lines = content_lines(text);
    let (hline, htext) = lines
        .next()
        .ok_or_else(|| FormatError::Structure("empty instance file".into()))?;
    let h = parse_header(hline, htext)?;

    let mut entries: [Vec<(usize, usize, f64)>; 2] = [Vec::new(), Vec::new()];
    let mut rhs: [Vec<Option<f64>>; 2] = [vec![None; h.p], vec![None; h.c]];
    for (line, text) in lines {
        let mut tok = text.split_whitespace();
        let kind = tok.next().unwrap_or_default();
        let (side, rows, is_rhs) = match kind {
            "P" => (0, h.p, false),
            "C" => (1, h.c, false),
            "RP" if h.rhs => (0, h.p, true),
            "RC" if h.rhs => (1, h.c, true),
            "RP" | "RC" => {
                return Err(line_err(
                    line,
                    "right-hand side given without `rhs` in the header",
                ))
            }
            other => return Err(line_err(line, format!("unknown record `{other}`"))),
        };
        let row: usize = parse_field(line, tok.next(), "row index")?;
        if row >= rows {
            return Err(line_err(
                line,
                format!("row {row} out of range (rows: {rows})"),
            ));
        }
        if is_rhs {
            let b = parse_value(line, tok.next(), "right-hand side")?;
            if b <= 0.0 {
                return Err(line_err(line, "right-hand side must be positive"));
            }
            if rhs[side][row].replace(b).is_some() {
                return Err(line_err(
                    line,
                    format!("duplicate right-hand side for row {row}"),
                ));
            }
        } else {
            let col: usize = parse_field(line, tok.next(), "column index")?;
            if col >= h.n {
                return Err(line_err(
                    line,
                    format!("column {col} out of range (columns: {})", h.n),
                ));
            }
            let v = parse_value(line, tok.next(), "value")?;
            if v < 0.0 {
                return Err(line_err(line, format!("negative value {v}")));
            }
            entries[side].push((row, col, v));
        }
        if let Some(extra) = tok.next() {
            return Err(line_err(line, format!("unexpected token `{extra}`")));
        }
    }
    for (side, expected, name) in [(0, h.nnz_p, "packing"), (1, h.nnz_c, "covering")] {
        if entries[side].len() != expected {
            return Err(FormatError::Structure(format!(
                "header announces {expected} {name} entries, found {}",
                entries[side].len()
            )));
        }
    }
    let build = |side: usize, rows: usize| {
        let scale = &rhs[side];
        SparseMatrix::from_triplets(
            rows,
            h.n,
            entries[side]
                .iter()
                .map(|&(i, j, v)| (i, j, v / scale[i].unwrap_or(1.0))),
        )
        .map_err(|e| FormatError::Structure(e.to_string()))
    };
    MpcInstance::new(build(0, h.p)?, build(1, h.c)?)
        .map_err(|e| FormatError::Structure(e.to_string()))
}

/// Canonical text form: row-major sorted entries, shortest round-trip floats.
pub fn format_instance(inst: &MpcInstance) -> String {
    let mut out = format!(
        "MPC {} {} {} {} {}\n",
        inst.n(),
        inst.p(),
        inst.c(),
        inst.packing().nnz(),
        inst.covering().nnz()
    );
    for (tag, m) in [("P", inst.packing()), ("C", inst.covering())] {
        for (i, j, v) in m.triplets() {
            writeln!(out, "{tag} {i} {j} {v:?}").expect("writing to a string");
        }
    }
    out
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: &Path) -> Result<MpcInstance, FormatError> {
    parse_instance(&read(path)?)
}

/// Parsed edge list with the warnings produced while reading it.
#[derive(Debug)]
pub struct EdgeList {
    pub graph: Graph,
    pub warnings: Vec<String>,
}

/// Edge list with one `u v` pair per line; self-loops are dropped with a
/// warning and repeated edges merged. Vertex ids run up to the largest seen.
pub fn parse_edge_list(text: &str) -> Result<EdgeList, FormatError> {
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    let mut vertex_count = 0;
    for (line, text) in content_lines(text) {
        let mut tok = text.split_whitespace();
        let u: usize = parse_field(line, tok.next(), "vertex id")?;
        let v: usize = parse_field(line, tok.next(), "vertex id")?;
        if let Some(extra) = tok.next() {
            return Err(line_err(line, format!("unexpected token `{extra}`")));
        }
        vertex_count = vertex_count.max(u + 1).max(v + 1);
        if u == v {
            warnings.push(format!("line {line}: dropped self-loop at vertex {u}"));
        } else {
            edges.push((u, v));
        }
    }
    let graph =
        Graph::new(vertex_count, edges).map_err(|e| FormatError::Structure(e.to_string()))?;
    Ok(EdgeList { graph, warnings })
}

pub fn load_edge_list(path: &Path) -> Result<EdgeList, FormatError> {
    parse_edge_list(&read(path)?)
}
