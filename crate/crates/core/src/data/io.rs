//! Text and binary file formats.
//!
//! * edge list: `src<TAB>dst` per line, 0-based ids, `#` comments
//! * labels: `node_id,label` per line; an optional `# num_classes=C` line
//!   fixes the class count
//! * splits: `node_id,{train|val|test}` per line; absent nodes are unused
//! * features: CSV rows, or the binary matrix format
//! * binary matrix: 8-byte magic `ALSMAT64` (or `ALSMAT32`), rows and cols
//!   as little-endian `u32`, then row-major little-endian values

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::{build_csr, DenseMatrix};

pub const MAGIC_F64: &[u8; 8] = b"ALSMAT64";
pub const MAGIC_F32: &[u8; 8] = b"ALSMAT32";
pub const HEADER_LEN: usize = 16;

/// Feature matrices with more entries than this are written in binary.
pub const BINARY_FEATURE_THRESHOLD: usize = 1_000_000;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_id(path: &Path, line: usize, field: &str, num_nodes: usize) -> Result<usize> {
    let id: usize = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid node id {field:?}")))?;
    if id >= num_nodes {
        return Err(parse_err(
            path,
            line,
            format!("node id {id} out of range for {num_nodes} nodes"),
        ));
    }
    Ok(id)
}

pub fn read_edge_list(path: &Path, num_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let text = read_text(path)?;
    let mut edges = Vec::new();
    for (ln, line) in content_lines(&text) {
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(path, ln, "expected `src<TAB>dst`"));
        };
        edges.push((parse_id(path, ln, a, num_nodes)?, parse_id(path, ln, b, num_nodes)?));
    }
    Ok(edges)
}

/// Returns per-node labels and the declared class count, if any.
pub fn read_labels(path: &Path, num_nodes: usize) -> Result<(Vec<Option<usize>>, Option<usize>)> {
    let text = read_text(path)?;
    let mut declared = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(v) = line.trim().strip_prefix('#').and_then(|r| r.trim().strip_prefix("num_classes=")) {
            declared = Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(path, i + 1, "invalid num_classes"))?,
            );
        }
    }
    let mut labels = vec![None; num_nodes];
    for (ln, line) in content_lines(&text) {
        let Some((a, b)) = line.split_once(',') else {
            return Err(parse_err(path, ln, "expected `node_id,label`"));
        };
        let id = parse_id(path, ln, a, num_nodes)?;
        let c: usize = b
            .trim()
            .parse()
            .map_err(|_| parse_err(path, ln, format!("invalid label {b:?}")))?;
        if let Some(k) = declared {
            if c >= k {
                return Err(parse_err(path, ln, format!("class {c} >= num_classes {k}")));
            }
        }
        labels[id] = Some(c);
    }
    Ok((labels, declared))
}

pub fn read_splits(path: &Path, num_nodes: usize) -> Result<Vec<Split>> {
    let text = read_text(path)?;
    let mut split = vec![Split::Unused; num_nodes];
    for (ln, line) in content_lines(&text) {
        let Some((a, b)) = line.split_once(',') else {
            return Err(parse_err(path, ln, "expected `node_id,split`"));
        };
        let id = parse_id(path, ln, a, num_nodes)?;
        split[id] = match b.trim() {
            "train" => Split::Train,
            "val" => Split::Val,
            "test" => Split::Test,
            other => return Err(parse_err(path, ln, format!("unknown split {other:?}"))),
        };
    }
    Ok(split)
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (ln, line) in content_lines(&text) {
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, ln, format!("invalid number {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, ln, "non-finite value"));
            }
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(path, ln, format!("expected {c} columns, found {width}")))
            }
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), values)
}

pub fn write_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn encode_matrix_binary(m: &DenseMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::InvalidArgument("too many rows".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::InvalidArgument("too many cols".into()))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * m.values().len());
    buf.extend_from_slice(MAGIC_F64);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for v in m.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_matrix_binary(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::InvalidArgument("binary matrix shorter than its header".into()));
    }
    let magic = &bytes[..8];
    let width = if magic == MAGIC_F64 {
        8
    } else if magic == MAGIC_F32 {
        4
    } else {
        return Err(Error::InvalidArgument("bad binary matrix magic".into()));
    };
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != rows * cols * width {
        return Err(Error::DimensionMismatch(format!(
            "binary body has {} bytes, expected {} for {rows}x{cols}",
            body.len(),
            rows * cols * width
        )));
    }
    let values = if width == 8 {
        body.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        body.chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect()
    };
    DenseMatrix::from_vec(rows, cols, values)
}

pub fn write_matrix_binary(m: &DenseMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_matrix_binary(m)?).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_binary(path: &Path) -> Result<DenseMatrix> {
    decode_matrix_binary(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Read a feature matrix, detecting the binary format by its magic.
pub fn read_features(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() >= 8 && (&bytes[..8] == MAGIC_F64 || &bytes[..8] == MAGIC_F32) {
        decode_matrix_binary(&bytes)
    } else {
        read_matrix_csv(path)
    }
}

/// Load a dataset from its four files. The node count comes from the
/// feature matrix; the graph is symmetrized.
pub fn load_dataset(edge_path: &Path, feature_path: &Path, label_path: &Path, split_path: &Path) -> Result<Dataset> {
    let features = read_features(feature_path)?;
    let n = features.rows();
    if n == 0 {
        return Err(parse_err(feature_path, 0, "feature matrix has no rows"));
    }
    let edges = read_edge_list(edge_path, n)?;
    let (labels, declared) = read_labels(label_path, n)?;
    let split = read_splits(split_path, n)?;
    let num_classes = declared.unwrap_or_else(|| labels.iter().flatten().max().map_or(1, |m| m + 1));
    if let Some(i) = (0..n).find(|&i| split[i] != Split::Unused && labels[i].is_none()) {
        return Err(Error::InvalidArgument(format!(
            "{}: node {i} is in the {} split but has no label",
            split_path.display(),
            split[i].as_str()
        )));
    }
    let graph = build_csr(&edges, n, true)?;
    Dataset::new(graph, features, labels, num_classes, split)
}

/// Paths of a dataset written by [`write_dataset`].
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
}

impl DatasetFiles {
    pub fn load(&self) -> Result<Dataset> {
        load_dataset(&self.edges, &self.features, &self.labels, &self.splits)
    }
}

/// Write `d` into `dir` using the text formats (binary features above
/// [`BINARY_FEATURE_THRESHOLD`] entries).
pub fn write_dataset(d: &Dataset, dir: &Path) -> Result<DatasetFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let binary = d.features().values().len() > BINARY_FEATURE_THRESHOLD;
    let files = DatasetFiles {
        edges: dir.join("edges.tsv"),
        features: dir.join(if binary { "features.bin" } else { "features.csv" }),
        labels: dir.join("labels.csv"),
        splits: dir.join("splits.csv"),
    };

    let mut out = String::new();
    for (u, v) in d.graph().edges().filter(|&(u, v)| u <= v) {
        out.push_str(&format!("{u}\t{v}\n"));
    }
    fs::write(&files.edges, out).map_err(|e| Error::io(&files.edges, e))?;

    if binary {
        write_matrix_binary(d.features(), &files.features)?;
    } else {
        write_matrix_csv(d.features(), &files.features)?;
    }

    let mut out = format!("# num_classes={}\n", d.num_classes());
    for (i, l) in d.labels().iter().enumerate() {
        if let Some(c) = l {
            out.push_str(&format!("{i},{c}\n"));
        }
    }
    fs::write(&files.labels, out).map_err(|e| Error::io(&files.labels, e))?;

    let mut out = String::new();
    for (i, s) in d.split().iter().enumerate() {
        if *s != Split::Unused {
            out.push_str(&format!("{i},{}\n", s.as_str()));
        }
    }
    fs::write(&files.splits, out).map_err(|e| Error::io(&files.splits, e))?;
    Ok(files)
}
