//! Embedding matrices and label files.
//!
//! The binary `EMB1` layout is: the four magic bytes `EMB1`, the row count
//! `N` and column count `D` as little-endian `u32`, then `N * D`
//! little-endian `f32` values in row-major order. Nothing else.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Binary,
    Tsv,
}

impl EmbeddingFormat {
    /// Guess the format from a file extension; anything that is not
    /// `.tsv`, `.csv` or `.txt` is treated as binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("csv") | Some("txt") => EmbeddingFormat::Tsv,
            _ => EmbeddingFormat::Binary,
        }
    }
}

/// Ground-truth class labels, stored as dense ids with the original strings
/// kept alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    ids: Vec<usize>,
    names: Vec<String>,
}

impl Labels {
    /// Assigns dense ids in order of first appearance.
    pub fn from_strings<S: AsRef<str>>(values: &[S]) -> Self {
        let mut lookup: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let ids = values
            .iter()
            .map(|v| {
                let v = v.as_ref();
                *lookup.entry(v.to_owned()).or_insert_with(|| {
                    names.push(v.to_owned());
                    names.len() - 1
                })
            })
            .collect();
        Labels { ids, names }
    }

    pub fn from_ids(ids: Vec<usize>) -> Self {
        let classes = ids.iter().copied().max().map_or(0, |m| m + 1);
        let names = (0..classes).map(|c| c.to_string()).collect();
        Labels { ids, names }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn name_of(&self, i: usize) -> &str {
        &self.names[self.ids[i]]
    }
}

/// An `N x D` matrix of `f32` embeddings with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    values: Vec<f32>,
    n: usize,
    dim: usize,
    labels: Option<Labels>,
    pub name: String,
}

impl VectorDataset {
    /// Builds a dataset from row-major values, validating shape and finiteness.
    pub fn new(values: Vec<f32>, n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Validation(format!(
                "dataset must have at least one row and one column (got {n}x{dim})"
            )));
        }
        if values.len() != n * dim {
            return Err(Error::Validation(format!(
                "expected {} values for a {n}x{dim} matrix, got {}",
                n * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value in row {} (column {})",
                pos / dim,
                pos % dim
            )));
        }
        Ok(VectorDataset {
            values,
            n,
            dim,
            labels: None,
            name: String::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("rows have differing widths".into()));
        }
        Self::new(rows.concat(), rows.len(), dim)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Validation(format!(
                "label count {} does not match row count {}",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// Appends one row. Labels, if present, are dropped because the new row has none.
    pub fn push_row(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::param(format!(
                "row has dimension {}, dataset has {}",
                row.len(),
                self.dim
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite value in row {}", self.n)));
        }
        self.values.extend_from_slice(row);
        self.n += 1;
        self.labels = None;
        Ok(())
    }

    /// Dataset whose row `i` is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for &p in perm {
            values.extend_from_slice(self.row(p));
        }
        let mut out = VectorDataset::new(values, perm.len(), self.dim)?;
        out.name = self.name.clone();
        if let Some(l) = &self.labels {
            let ids = perm.iter().map(|&p| l.ids[p]).collect();
            out.labels = Some(Labels {
                ids,
                names: l.names.clone(),
            });
        }
        Ok(out)
    }
}

pub fn read_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<VectorDataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = match format {
        EmbeddingFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_emb1(&bytes)?
        }
        EmbeddingFormat::Tsv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_tsv(&text)?
        }
    };
    Ok(ds.with_name(name))
}

/// Writes the dataset in `EMB1` binary form.
pub fn write_embeddings(dataset: &VectorDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_emb1(dataset)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_emb1(dataset: &VectorDataset) -> Result<Vec<u8>> {
    if dataset.is_empty() {
        return Err(Error::Validation("refusing to write an empty dataset".into()));
    }
    let n = u32::try_from(dataset.n).map_err(|_| Error::Validation("row count exceeds u32".into()))?;
    let d = u32::try_from(dataset.dim)
        .map_err(|_| Error::Validation("column count exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * dataset.values.len());
    out.extend_from_slice(EMB1_MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for v in &dataset.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_emb1(bytes: &[u8]) -> Result<VectorDataset> {
    const CTX: &str = "EMB1";
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(CTX, format!("header truncated ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != EMB1_MAGIC {
        return Err(Error::format(CTX, "bad magic bytes"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::format(CTX, "header dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::format(
            CTX,
            format!(
                "header declares {n}x{d} ({expected} payload bytes) but file has {}",
                payload.len()
            ),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    VectorDataset::new(values, n, d)
}

/// Parses tab- or comma-separated rows. The separator is chosen from the
/// first line: tab if present, otherwise comma if present.
pub fn parse_tsv(text: &str) -> Result<VectorDataset> {
    const CTX: &str = "tsv";
    let lines: Vec<&str> = text.trim_end_matches(['\n', '\r']).lines().collect();
    let first = lines.first().copied().unwrap_or("");
    let sep = if first.contains('\t') {
        '\t'
    } else if first.contains(',') {
        ','
    } else {
        '\t'
    };
    let mut values = Vec::new();
    let mut dim = None;
    for (lineno, line) in lines.iter().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            return Err(Error::format(CTX, format!("blank line {}", lineno + 1)));
        }
        let mut width = 0;
        for field in line.split(sep) {
            let v: f32 = field.trim().parse().map_err(|_| {
                Error::format(CTX, format!("line {}: cannot parse `{}`", lineno + 1, field))
            })?;
            values.push(v);
            width += 1;
        }
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::format(
                    CTX,
                    format!("line {} has {width} columns, expected {d}", lineno + 1),
                ))
            }
            _ => {}
        }
    }
    let dim = dim.unwrap_or(0);
    VectorDataset::new(values, lines.len(), dim)
}

/// Reads one label per line. A single trailing newline is tolerated; blank
/// interior lines are rejected.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Labels> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn parse_labels(text: &str) -> Result<Labels> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.is_empty() {
        return Err(Error::Validation("labels file is empty".into()));
    }
    let mut values = Vec::new();
    for (i, line) in body.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            return Err(Error::Validation(format!("blank label on line {}", i + 1)));
        }
        values.push(line);
    }
    Ok(Labels::from_strings(&values))
}

pub fn write_labels(labels: &Labels, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..labels.len() {
        writeln!(w, "{}", labels.name_of(i)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
