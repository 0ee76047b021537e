//! CSV field files and DOT export.
//!
//! Field files have a header `vertex,<col1>,...` and one row per vertex
//! label. Values are written with Rust's shortest round-trip formatting, so
//! a write/read cycle is lossless and repeated runs are byte-identical.

use std::fmt::Write as _;

use crate::boundary::VertexPartition;
use crate::error::{Error, Result};
use crate::field::{DensityField, ScalarField};
use crate::graph::Graph;

/// Densities at or below this are treated as absent when colouring.
pub const DOT_ZERO_TOL: f64 = 1e-8;

const DENSITY_COLORS: [&str; 8] = [
    "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#999900", "#00cccc",
];
const BOUNDARY_COLOR: &str = "red";
const INTERIOR_COLOR: &str = "blue";
const EMPTY_COLOR: &str = "gray";

/// Color used for density `l` (zero-based).
pub fn density_color(l: usize) -> &'static str {
    DENSITY_COLORS[l % DENSITY_COLORS.len()]
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LabeledRow {
    pub vertex: usize,
    pub values: Vec<f64>,
    /// 1-based line in the source text
    pub line: usize,
}

/// Reads `vertex,v1..vk` rows. An empty text yields no rows.
pub(crate) fn read_labeled_rows(
    text: &str,
    g: &Graph,
    columns: usize,
    what: &str,
) -> Result<Vec<LabeledRow>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.len() != columns + 1 {
        return Err(Error::FieldData(format!(
            "{what}: header has {} columns, expected vertex plus {columns}",
            header.len()
        )));
    }
    let mut seen = vec![false; g.n()];
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns + 1 {
            return Err(Error::FieldData(format!(
                "{what}: line {line} has {} fields, expected {}",
                record.len(),
                columns + 1
            )));
        }
        let label = &record[0];
        let vertex = g.index_of(label).ok_or_else(|| {
            Error::FieldData(format!("{what}: line {line}: unknown vertex `{label}`"))
        })?;
        if std::mem::replace(&mut seen[vertex], true) {
            return Err(Error::FieldData(format!(
                "{what}: line {line}: vertex `{label}` listed twice"
            )));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|tok| match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::FieldData(format!(
                    "{what}: line {line}: `{tok}` is not a finite number"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(LabeledRow {
            vertex,
            values,
            line,
        });
    }
    Ok(rows)
}

fn complete_rows(text: &str, g: &Graph, columns: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Option<Vec<f64>>> = vec![None; g.n()];
    for row in read_labeled_rows(text, g, columns, what)? {
        out[row.vertex] = Some(row.values);
    }
    out.into_iter()
        .enumerate()
        .map(|(x, r)| {
            r.ok_or_else(|| Error::FieldData(format!("{what}: no row for vertex `{}`", g.label(x))))
        })
        .collect()
}

fn header_width(text: &str) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(reader.headers()?.len())
}

/// Reads every value column of a field file, returning the column names and
/// one vector per column. Every vertex must be listed; values may be negative.
pub fn read_columns(text: &str, g: &Graph) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let names: Vec<String> = {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        reader
            .headers()?
            .iter()
            .skip(1)
            .map(str::to_string)
            .collect()
    };
    if names.is_empty() {
        return Err(Error::FieldData(
            "field: header has no value columns".into(),
        ));
    }
    let rows = complete_rows(text, g, names.len(), "field")?;
    let columns = (0..names.len())
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect();
    Ok((names, columns))
}

/// Reads a single-column field where unlisted vertices default to zero.
pub fn read_partial_scalar_csv(text: &str, g: &Graph) -> Result<ScalarField> {
    let mut values = vec![0.0; g.n()];
    for row in read_labeled_rows(text, g, 1, "scalar field")? {
        values[row.vertex] = row.values[0];
    }
    ScalarField::new(values)
}

/// Reads a single-column field; every vertex must be listed.
pub fn read_scalar_csv(text: &str, g: &Graph) -> Result<ScalarField> {
    let rows = complete_rows(text, g, 1, "scalar field")?;
    ScalarField::new(rows.into_iter().map(|r| r[0]).collect())
}

/// Reads a density field; `m` is taken from the header width.
pub fn read_density_csv(text: &str, g: &Graph) -> Result<DensityField> {
    let width = header_width(text)?;
    if width < 2 {
        return Err(Error::FieldData(
            "density field: header must be `vertex,u1,...,um`".into(),
        ));
    }
    let m = width - 1;
    let rows = complete_rows(text, g, m, "density field")?;
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|l| rows.iter().map(|r| r[l]).collect())
        .collect();
    DensityField::from_columns(&columns)
}

pub fn write_density_csv(g: &Graph, u: &DensityField) -> String {
    let mut out = String::from("vertex");
    for l in 1..=u.m() {
        let _ = write!(out, ",u{l}");
    }
    out.push('\n');
    for x in 0..u.n() {
        out.push_str(g.label(x));
        for v in u.row(x) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_scalar_csv(g: &Graph, f: &ScalarField, column: &str) -> String {
    let mut out = format!("vertex,{column}\n");
    for (x, v) in f.values().iter().enumerate() {
        let _ = writeln!(out, "{},{v}", g.label(x));
    }
    out
}

fn quote(label: &str) -> String {
    format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT rendering of the partition, optionally coloured by a density field.
///
/// Without a field, boundary vertices are red and interior vertices blue.
/// With a field, each vertex is filled with the colour of its dominant
/// positive density (gray when every density is at most [`DOT_ZERO_TOL`]);
/// boundary vertices are double-circled with a red outline.
pub fn export_dot(g: &Graph, partition: &VertexPartition, field: Option<&DensityField>) -> String {
    let mut out = String::from("graph G {\n  node [style=filled, fontcolor=white];\n");
    for x in 0..g.n() {
        let boundary = partition.is_boundary(x);
        let attrs = match field {
            None => {
                let fill = if boundary {
                    BOUNDARY_COLOR
                } else {
                    INTERIOR_COLOR
                };
                format!("fillcolor=\"{fill}\", color=\"{fill}\"")
            }
            Some(u) => {
                let row = u.row(x);
                let dominant = (0..row.len())
                    .filter(|&l| row[l] > DOT_ZERO_TOL)
                    .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)));
                let fill = dominant.map_or(EMPTY_COLOR, density_color);
                if boundary {
                    format!("fillcolor=\"{fill}\", color=\"{BOUNDARY_COLOR}\", shape=doublecircle")
                } else {
                    format!("fillcolor=\"{fill}\", color=\"{fill}\"")
                }
            }
        };
        let _ = writeln!(out, "  {} [{attrs}];", quote(g.label(x)));
    }
    for (x, y, _) in g.edges() {
        let _ = writeln!(out, "  {} -- {};", quote(g.label(x)), quote(g.label(y)));
    }
    out.push_str("}\n");
    out
}
