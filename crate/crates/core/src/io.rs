//! Text formats for matrices, module assignments, masks and target lists.
//!
//! - Dense matrix: CSV, one row per line, no header.
//! - Edge list: `i j w` per line, 1-based, whitespace separated; unlisted
//!   pairs are 0. `#` starts a comment.
//! - Module assignment: one module id (1-based) per line, line `k` for node `k`.
//! - Missing-entry mask: `i j` per line, 1-based.
//! - Targets: TOML with one `[[target]]` table per objective term:
//!
//! ```toml
//! [[target]]
//! metric = "degree"          # see MetricKind names
//! node = 3                   # 1-based, local metrics only
//! value = 2.75
//!
//! [[target]]
//! metric = "modularity"
//! modules = "modules.txt"    # relative to the targets file
//! value = 0.42
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};
use crate::metrics::{MetricKind, MetricSpec};
use crate::network::{validate, MissingMask, ModuleAssignment, WeightMatrix};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| NetError::Parse(format!("line {line}: '{}' is not a number", tok.trim())))
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    let v: usize = tok
        .trim()
        .parse()
        .map_err(|_| NetError::Parse(format!("line {line}: '{}' is not a positive integer", tok.trim())))?;
    if v == 0 {
        return Err(NetError::Parse(format!("line {line}: indices are 1-based")));
    }
    Ok(v - 1)
}

/// Parses a dense CSV matrix without validating network invariants.
pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in content_lines(text) {
        let row = l.split(',').map(|t| parse_f64(t, line)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(NetError::Parse(format!(
                    "line {line}: expected {} columns, found {}",
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(NetError::Parse("matrix file is empty".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Array2::from_shape_vec((r, c), rows.into_iter().flatten().collect())
        .map_err(|e| NetError::Parse(e.to_string()))
}

pub fn parse_weight_csv(text: &str) -> Result<WeightMatrix> {
    validate(parse_matrix_csv(text)?)
}

/// Writes every entry with the shortest representation that parses back
/// to the same `f64`.
pub fn write_matrix_csv<W: Write>(out: &mut W, a: &Array2<f64>) -> std::io::Result<()> {
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn matrix_csv_string(a: &Array2<f64>) -> String {
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, a).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Parses an edge list for a network of `n` nodes (or the largest index seen
/// when `n` is `None`). Both orientations of a pair must agree if both are listed.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<WeightMatrix> {
    let mut edges = Vec::new();
    let mut max_index = 0;
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(NetError::Parse(format!("line {line}: expected 'i j w'")));
        }
        let (i, j) = (parse_index(toks[0], line)?, parse_index(toks[1], line)?);
        let w = parse_f64(toks[2], line)?;
        max_index = max_index.max(i + 1).max(j + 1);
        edges.push((line, i, j, w));
    }
    let n = n.unwrap_or(max_index);
    if n == 0 {
        return Err(NetError::Parse("edge list is empty".into()));
    }
    let mut a = Array2::<f64>::zeros((n, n));
    let mut seen = Array2::<bool>::from_elem((n, n), false);
    for (line, i, j, w) in edges {
        if i >= n || j >= n {
            return Err(NetError::Parse(format!("line {line}: node index beyond {n}")));
        }
        if seen[[i, j]] && a[[i, j]] != w {
            return Err(NetError::Parse(format!("line {line}: conflicting weight for ({}, {})", i + 1, j + 1)));
        }
        a[[i, j]] = w;
        a[[j, i]] = w;
        seen[[i, j]] = true;
        seen[[j, i]] = true;
    }
    validate(a)
}

/// Writes the upper triangle's nonzero entries as `i j w`.
pub fn write_edge_list<W: Write>(out: &mut W, w: &WeightMatrix) -> std::io::Result<()> {
    let n = w.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = w.get(i, j);
            if v != 0.0 {
                writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

pub fn parse_modules(text: &str) -> Result<ModuleAssignment> {
    let ids = content_lines(text)
        .map(|(line, l)| parse_index(l, line).map(|v| v + 1))
        .collect::<Result<Vec<_>>>()?;
    ModuleAssignment::new(ids)
}

pub fn write_modules<W: Write>(out: &mut W, m: &ModuleAssignment) -> std::io::Result<()> {
    for id in m.as_slice() {
        writeln!(out, "{id}")?;
    }
    Ok(())
}

pub fn parse_mask(text: &str, n: usize) -> Result<MissingMask> {
    let mut pairs = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(NetError::Parse(format!("line {line}: expected 'i j'")));
        }
        pairs.push((parse_index(toks[0], line)?, parse_index(toks[1], line)?));
    }
    MissingMask::from_pairs(n, &pairs)
}

pub fn write_mask<W: Write>(out: &mut W, m: &MissingMask) -> std::io::Result<()> {
    for (i, j) in m.pairs() {
        writeln!(out, "{} {}", i + 1, j + 1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetEntry {
    metric: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modules: Option<String>,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    #[serde(default)]
    target: Vec<TargetEntry>,
}

/// Parses a targets file; module files are resolved relative to `base_dir`.
pub fn parse_targets(text: &str, base_dir: &Path, n: usize) -> Result<Vec<MetricSpec>> {
    let file: TargetFile = toml::from_str(text).map_err(|e| NetError::Parse(e.to_string()))?;
    let mut specs = Vec::with_capacity(file.target.len());
    for entry in file.target {
        let node = match entry.node {
            Some(0) => return Err(NetError::Parse("target node indices are 1-based".into())),
            Some(k) => Some(k - 1),
            None => None,
        };
        let modules = match &entry.modules {
            Some(p) => Some(read_modules(&base_dir.join(p))?),
            None => None,
        };
        let spec = MetricSpec { kind: entry.metric, node, modules, target: entry.value };
        spec.check(n)?;
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(NetError::NoTargets);
    }
    Ok(specs)
}

/// Serializes targets; a modularity target refers to `modules_file`.
pub fn targets_to_toml(specs: &[MetricSpec], modules_file: Option<&str>) -> Result<String> {
    let target = specs
        .iter()
        .map(|s| {
            let modules = match (s.kind, modules_file) {
                (MetricKind::Modularity, Some(f)) => Some(f.to_string()),
                (MetricKind::Modularity, None) => {
                    return Err(NetError::MissingAttachment { kind: "modularity", what: "a module file name" })
                }
                _ => None,
            };
            Ok(TargetEntry { metric: s.kind, node: s.node.map(|i| i + 1), modules, value: s.target })
        })
        .collect::<Result<Vec<_>>>()?;
    toml::to_string(&TargetFile { target }).map_err(|e| NetError::Parse(e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
}

pub fn read_weight_matrix(path: &Path) -> Result<WeightMatrix> {
    parse_weight_csv(&read_text(path)?)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    parse_matrix_csv(&read_text(path)?)
}

pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<WeightMatrix> {
    parse_edge_list(&read_text(path)?, n)
}

pub fn read_modules(path: &Path) -> Result<ModuleAssignment> {
    parse_modules(&read_text(path)?)
}

pub fn read_mask(path: &Path, n: usize) -> Result<MissingMask> {
    parse_mask(&read_text(path)?, n)
}

pub fn read_targets(path: &Path, n: usize) -> Result<Vec<MetricSpec>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_targets(&read_text(path)?, base, n)
}
