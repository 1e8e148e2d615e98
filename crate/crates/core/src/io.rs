//! File formats: series CSVs and DAG exports (CSV adjacency, JSON, DOT).

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dag::SummaryDag;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix, C64};
use crate::spectral::TimeSeriesMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Real,
    /// Columns come in `<label>_re`, `<label>_im` pairs.
    Complex,
}

impl FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(SeriesKind::Real),
            "complex" => Ok(SeriesKind::Complex),
            other => Err(Error::InvalidInput(format!("unknown series kind '{other}' (expected real or complex)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DagFormat {
    Csv,
    Json,
    Dot,
}

impl FromStr for DagFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DagFormat::Csv),
            "json" => Ok(DagFormat::Json),
            "dot" => Ok(DagFormat::Dot),
            other => Err(Error::InvalidInput(format!("unknown format '{other}' (expected csv, json or dot)"))),
        }
    }
}

/// Reads a series CSV with a header row.
pub fn ingest(path: impl AsRef<Path>, kind: SeriesKind) -> Result<TimeSeriesMatrix> {
    let file = fs::File::open(path.as_ref())?;
    read_series(file, kind)
}

pub fn read_series(reader: impl Read, kind: SeriesKind) -> Result<TimeSeriesMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(Error::Parse("empty header".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("row {}: expected {} fields, found {}", r + 1, header.len(), rec.len())));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("row {}, column '{}': '{cell}' is not a number", r + 1, header[c])))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {}, column '{}': non-finite value '{cell}'", r + 1, header[c])));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let t = rows.len();
    match kind {
        SeriesKind::Real => {
            let data = RMatrix::from_fn(t, header.len(), |i, j| rows[i][j]);
            TimeSeriesMatrix::from_real(&data)?.with_labels(header)
        }
        SeriesKind::Complex => {
            if header.len() % 2 != 0 {
                return Err(Error::Parse(format!("complex series need an even number of columns, found {}", header.len())));
            }
            let p = header.len() / 2;
            let mut labels = Vec::with_capacity(p);
            for a in 0..p {
                let (re, im) = (&header[2 * a], &header[2 * a + 1]);
                let base = re
                    .strip_suffix("_re")
                    .filter(|b| im.strip_suffix("_im") == Some(*b))
                    .ok_or_else(|| Error::Parse(format!("columns '{re}', '{im}' are not a <label>_re, <label>_im pair")))?;
                labels.push(base.to_string());
            }
            let data = CMatrix::from_fn(t, p, |i, a| C64::new(rows[i][2 * a], rows[i][2 * a + 1]));
            TimeSeriesMatrix::from_complex(data)?.with_labels(labels)
        }
    }
}

/// Series CSV in the layout [`read_series`] accepts, values in shortest
/// round-trip form.
pub fn series_to_csv(x: &TimeSeriesMatrix) -> String {
    let mut out = String::new();
    let header: Vec<String> = if x.is_real() {
        x.labels().to_vec()
    } else {
        x.labels().iter().flat_map(|l| [format!("{l}_re"), format!("{l}_im")]).collect()
    };
    out.push_str(&header.join(","));
    out.push('\n');
    for t in 0..x.len() {
        let cells: Vec<String> = (0..x.dim())
            .flat_map(|i| {
                let z = x.data()[(t, i)];
                if x.is_real() {
                    vec![format!("{:?}", z.re)]
                } else {
                    vec![format!("{:?}", z.re), format!("{:?}", z.im)]
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Run metadata carried by the JSON export.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DagMeta {
    pub order: Option<Vec<usize>>,
    pub lambda: Option<f64>,
    pub support: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonEdge {
    from: String,
    to: String,
    weight_re: f64,
    weight_im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDag {
    labels: Vec<String>,
    edges: Vec<JsonEdge>,
    order: Option<Vec<String>>,
    lambda: Option<f64>,
    support: Option<f64>,
}

fn edge_weight(dag: &SummaryDag, from: usize, to: usize) -> C64 {
    dag.weights().map_or(C64::new(1.0, 0.0), |w| w[(to, from)])
}

pub fn dag_to_csv(dag: &SummaryDag) -> String {
    let p = dag.dim();
    let mut out = dag.labels().join(",");
    out.push('\n');
    for i in 0..p {
        let row: Vec<&str> = (0..p).map(|j| if dag.has_edge(j, i) { "1" } else { "0" }).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn dag_to_json(dag: &SummaryDag, meta: &DagMeta) -> Result<String> {
    let labels = dag.labels();
    let edges = dag
        .edges()
        .into_iter()
        .map(|(from, to)| {
            let w = edge_weight(dag, from, to);
            JsonEdge { from: labels[from].clone(), to: labels[to].clone(), weight_re: w.re, weight_im: w.im }
        })
        .collect();
    let doc = JsonDag {
        labels: labels.to_vec(),
        edges,
        order: meta.order.as_ref().map(|o| o.iter().map(|&v| labels[v].clone()).collect()),
        lambda: meta.lambda,
        support: meta.support,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

fn fmt_weight(w: C64) -> String {
    if w.im == 0.0 {
        format!("{:.3}", w.re)
    } else {
        format!("{:.3}{}{:.3}i", w.re, if w.im < 0.0 { "-" } else { "+" }, w.im.abs())
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn dag_to_dot(dag: &SummaryDag) -> String {
    let labels = dag.labels();
    let mut out = String::from("digraph summary {\n");
    for l in labels {
        let _ = writeln!(out, "  {};", dot_quote(l));
    }
    for (from, to) in dag.edges() {
        let _ = match dag.weights() {
            Some(w) => writeln!(
                out,
                "  {} -> {} [label=\"{}\"];",
                dot_quote(&labels[from]),
                dot_quote(&labels[to]),
                fmt_weight(w[(to, from)])
            ),
            None => writeln!(out, "  {} -> {};", dot_quote(&labels[from]), dot_quote(&labels[to])),
        };
    }
    out.push_str("}\n");
    out
}

pub fn render_dag(dag: &SummaryDag, format: DagFormat, meta: &DagMeta) -> Result<String> {
    match format {
        DagFormat::Csv => Ok(dag_to_csv(dag)),
        DagFormat::Json => dag_to_json(dag, meta),
        DagFormat::Dot => Ok(dag_to_dot(dag)),
    }
}

pub fn emit_dag(dag: &SummaryDag, format: DagFormat, meta: &DagMeta, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_dag(dag, format, meta)?)?;
    Ok(())
}

fn label_index(labels: &[String], name: &str) -> Result<usize> {
    labels.iter().position(|l| l == name).ok_or_else(|| Error::Parse(format!("unknown label '{name}'")))
}

pub fn parse_dag_json(text: &str) -> Result<(SummaryDag, DagMeta)> {
    let doc: JsonDag = serde_json::from_str(text)?;
    let p = doc.labels.len();
    let mut weights = CMatrix::zeros(p, p);
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in &doc.edges {
        let (from, to) = (label_index(&doc.labels, &e.from)?, label_index(&doc.labels, &e.to)?);
        edges.push((from, to));
        weights[(to, from)] = C64::new(e.weight_re, e.weight_im);
    }
    let dag = SummaryDag::from_edges(p, &edges)?.with_labels(doc.labels.clone())?.with_weights(weights)?;
    let order = doc
        .order
        .map(|o| o.iter().map(|name| label_index(&doc.labels, name)).collect::<Result<Vec<_>>>())
        .transpose()?;
    Ok((dag, DagMeta { order, lambda: doc.lambda, support: doc.support }))
}

pub fn parse_dag_csv(text: &str) -> Result<SummaryDag> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let p = labels.len();
    let mut adj = vec![vec![false; p]; p];
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i >= p || rec.len() != p {
            return Err(Error::Parse(format!("adjacency must be {p}×{p}")));
        }
        for (j, cell) in rec.iter().enumerate() {
            adj[i][j] = match cell {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("row {}, column '{}': expected 0 or 1, found '{other}'", i + 1, labels[j]))),
            };
        }
        rows += 1;
    }
    if rows != p {
        return Err(Error::Parse(format!("adjacency must be {p}×{p}, found {rows} rows")));
    }
    SummaryDag::from_adjacency(&adj)?.with_labels(labels)
}

/// Reads a DAG from a `.json` or adjacency `.csv` file.
pub fn read_dag(path: impl AsRef<Path>) -> Result<SummaryDag> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(parse_dag_json(&text)?.0),
        Some("csv") => parse_dag_csv(&text),
        _ => Err(Error::InvalidInput(format!("cannot tell the format of '{}' (use .json or .csv)", path.display()))),
    }
}

/// Decimal rendering with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..=15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x)
    }
}
