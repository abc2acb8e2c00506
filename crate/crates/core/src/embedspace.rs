//! Document embeddings and everything computed over them: in-domain diversity
//! scores for candidate retrieval, the spread and KNN-density statistics used
//! to characterize a labeled set, and a 2-D PCA projection for plotting.
//!
//! Similarities are cosine. IDDS scores are computed from running sums of
//! unit vectors: for unit rows the sum of similarities of `x` to a set equals
//! `x · Σ rows`, so a score costs `O(d)` and moving a document between sets is
//! an `O(d)` update.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocId;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";
pub const DEFAULT_KNN_K: usize = 10;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding for {0:?} has zero norm")]
    ZeroNorm(String),
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("embedding for {0:?} contains a non-finite value")]
    NonFinite(String),
    #[error("duplicate embedding id {0:?}")]
    DuplicateId(String),
    #[error("no embedding for document {0:?}")]
    MissingId(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("principal component {component} has zero variance")]
    Degenerate { component: usize },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed embedding file: {0}")]
    Format(String),
}

/// Dense per-document vectors, one row per id, fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<DocId>,
    data: Vec<f64>,
    dim: usize,
    index: HashMap<DocId, usize>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Self {
        EmbeddingMatrix {
            ids: Vec::new(),
            data: Vec::new(),
            dim,
            index: HashMap::new(),
        }
    }

    pub fn from_rows<I, V>(dim: usize, rows: I) -> Result<Self, EmbedError>
    where
        I: IntoIterator<Item = (DocId, V)>,
        V: AsRef<[f64]>,
    {
        let mut m = EmbeddingMatrix::new(dim);
        for (id, row) in rows {
            m.push(id, row.as_ref())?;
        }
        Ok(m)
    }

    pub fn push(&mut self, id: DocId, row: &[f64]) -> Result<(), EmbedError> {
        if row.len() != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(id.to_string()));
        }
        if self.index.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id.to_string()));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[DocId] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &DocId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &DocId) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn require(&self, id: &DocId) -> Result<&[f64], EmbedError> {
        self.get(id)
            .ok_or_else(|| EmbedError::MissingId(id.to_string()))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&DocId, &[f64])> {
        self.ids.iter().zip(self.data.chunks_exact(self.dim.max(1)))
    }

    /// New matrix holding the given ids in the given order.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a DocId>) -> Result<Self, EmbedError> {
        let mut m = EmbeddingMatrix::new(self.dim);
        for id in ids {
            m.push(id.clone(), self.require(id)?)?;
        }
        Ok(m)
    }

    /// Read either the binary `EMB1` format or the whitespace-separated text
    /// variant (`id v1 .. vd` per line), detected from the leading bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let io_err = |source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        };
        let bytes = fs::read(path).map_err(io_err)?;
        if bytes.starts_with(EMBEDDING_MAGIC) {
            Self::read_binary(&mut bytes.as_slice())
        } else {
            Self::read_text(bytes.as_slice())
        }
    }

    /// Binary layout: ASCII header line `EMB1 <dim> <count>\n`, then per
    /// document a little-endian `u32` byte length, the UTF-8 id, and `dim`
    /// little-endian `f32` values.
    pub fn read_binary(reader: &mut impl Read) -> Result<Self, EmbedError> {
        let fmt = |m: &str| EmbedError::Format(m.to_string());
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            reader
                .read_exact(&mut byte)
                .map_err(|_| fmt("truncated header"))?;
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
            if header.len() > 64 {
                return Err(fmt("header too long"));
            }
        }
        let header = String::from_utf8(header).map_err(|_| fmt("header is not UTF-8"))?;
        let mut parts = header.split_ascii_whitespace();
        if parts.next() != Some("EMB1") {
            return Err(fmt("missing EMB1 magic"));
        }
        let dim: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| fmt("bad dimension"))?;
        let count: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| fmt("bad count"))?;
        let mut m = EmbeddingMatrix::new(dim);
        let mut row = vec![0f64; dim];
        let mut buf4 = [0u8; 4];
        for rec in 0..count {
            let truncated = || EmbedError::Format(format!("record {rec} truncated"));
            reader.read_exact(&mut buf4).map_err(|_| truncated())?;
            let mut id = vec![0u8; u32::from_le_bytes(buf4) as usize];
            reader.read_exact(&mut id).map_err(|_| truncated())?;
            let id = String::from_utf8(id).map_err(|_| fmt("id is not UTF-8"))?;
            for v in row.iter_mut() {
                reader.read_exact(&mut buf4).map_err(|_| truncated())?;
                *v = f32::from_le_bytes(buf4) as f64;
            }
            m.push(DocId::new(id), &row)?;
        }
        Ok(m)
    }

    pub fn read_text(reader: impl Read) -> Result<Self, EmbedError> {
        let mut m: Option<EmbeddingMatrix> = None;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| EmbedError::Format(e.to_string()))?;
            let mut parts = line.split_whitespace();
            let Some(id) = parts.next() else { continue };
            let row = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbedError::Format(format!("line {}: {e}", lineno + 1)))?;
            let m = m.get_or_insert_with(|| EmbeddingMatrix::new(row.len()));
            m.push(DocId::new(id), &row)?;
        }
        m.ok_or_else(|| EmbedError::Format("no embeddings in file".into()))
    }

    pub fn write_binary(&self, writer: &mut impl Write) -> std::io::Result<()> {
        writeln!(writer, "EMB1 {} {}", self.dim, self.len())?;
        for (id, row) in self.rows() {
            writer.write_all(&(id.as_str().len() as u32).to_le_bytes())?;
            writer.write_all(id.as_str().as_bytes())?;
            for &v in row {
                writer.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let path = path.as_ref();
        let io_err = |source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut buf = Vec::new();
        self.write_binary(&mut buf).map_err(io_err)?;
        fs::write(path, buf).map_err(io_err)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok(dot(a, b) / (na * nb))
}

/// Balance between the representativeness and novelty terms of IDDS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IddsParams {
    lambda: f64,
}

impl IddsParams {
    pub const DEFAULT_LAMBDA: f64 = 0.67;

    pub fn new(lambda: f64) -> Result<Self, EmbedError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(EmbedError::InvalidArgument(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(IddsParams { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for IddsParams {
    fn default() -> Self {
        IddsParams {
            lambda: Self::DEFAULT_LAMBDA,
        }
    }
}

fn unit_row(id: &DocId, row: &[f64]) -> Result<Vec<f64>, EmbedError> {
    let n = norm(row);
    if n == 0.0 {
        return Err(EmbedError::ZeroNorm(id.to_string()));
    }
    Ok(row.iter().map(|v| v / n).collect())
}

/// IDDS score of every unlabeled row:
/// `λ · mean_{j∈U} s(x, x_j) − (1 − λ) · mean_{i∈L∪E} s(x, x_i)`.
/// The unlabeled mean includes `x` itself; an empty penalty set contributes 0.
pub fn idds_scores(
    unlabeled: &EmbeddingMatrix,
    labeled_and_excluded: &EmbeddingMatrix,
    params: IddsParams,
) -> Result<Vec<(DocId, f64)>, EmbedError> {
    if unlabeled.is_empty() {
        return Err(EmbedError::InvalidArgument("unlabeled set is empty".into()));
    }
    if !labeled_and_excluded.is_empty() && labeled_and_excluded.dim() != unlabeled.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: unlabeled.dim(),
            got: labeled_and_excluded.dim(),
        });
    }
    let units = unlabeled
        .rows()
        .map(|(id, r)| unit_row(id, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sum_u = vec![0.0; unlabeled.dim()];
    for u in &units {
        add_into(&mut sum_u, u, 1.0);
    }
    let mut sum_pen = vec![0.0; unlabeled.dim()];
    for (id, r) in labeled_and_excluded.rows() {
        add_into(&mut sum_pen, &unit_row(id, r)?, 1.0);
    }
    let (nu, np) = (unlabeled.len() as f64, labeled_and_excluded.len() as f64);
    Ok(unlabeled
        .ids()
        .iter()
        .zip(&units)
        .map(|(id, u)| {
            (
                id.clone(),
                combine(
                    params.lambda,
                    dot(u, &sum_u) / nu,
                    (np > 0.0).then(|| dot(u, &sum_pen) / np),
                ),
            )
        })
        .collect())
}

fn combine(lambda: f64, mean_u: f64, mean_pen: Option<f64>) -> f64 {
    lambda * mean_u - (1.0 - lambda) * mean_pen.unwrap_or(0.0)
}

fn add_into(acc: &mut [f64], v: &[f64], sign: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += sign * x;
    }
}

/// Incrementally maintained IDDS state over one embedding matrix.
///
/// Holds the running sums of unit vectors for U and for L∪E; moving a
/// document out of U or into the penalty set is an `O(d)` update and a full
/// rescoring is `O(|U| d)`.
#[derive(Debug, Clone)]
pub struct IddsSession<'a> {
    matrix: &'a EmbeddingMatrix,
    units: Vec<Option<Vec<f64>>>,
    unlabeled: Vec<usize>,
    in_unlabeled: Vec<bool>,
    sum_u: Vec<f64>,
    sum_pen: Vec<f64>,
    n_pen: usize,
    params: IddsParams,
}

impl<'a> IddsSession<'a> {
    pub fn new(
        matrix: &'a EmbeddingMatrix,
        unlabeled: &[DocId],
        penalty: &[DocId],
        params: IddsParams,
    ) -> Result<Self, EmbedError> {
        let dim = matrix.dim();
        let mut session = IddsSession {
            matrix,
            units: vec![None; matrix.len()],
            unlabeled: Vec::with_capacity(unlabeled.len()),
            in_unlabeled: vec![false; matrix.len()],
            sum_u: vec![0.0; dim],
            sum_pen: vec![0.0; dim],
            n_pen: 0,
            params,
        };
        for id in unlabeled {
            let pos = session.unit(id)?;
            if session.in_unlabeled[pos] {
                return Err(EmbedError::DuplicateId(id.to_string()));
            }
            session.in_unlabeled[pos] = true;
            session.unlabeled.push(pos);
            let u = session.units[pos].as_ref().expect("unit computed");
            add_into(&mut session.sum_u, u, 1.0);
        }
        for id in penalty {
            session.add_penalty(id)?;
        }
        Ok(session)
    }

    fn unit(&mut self, id: &DocId) -> Result<usize, EmbedError> {
        let pos = self
            .matrix
            .position(id)
            .ok_or_else(|| EmbedError::MissingId(id.to_string()))?;
        if self.units[pos].is_none() {
            self.units[pos] = Some(unit_row(id, self.matrix.row(pos))?);
        }
        Ok(pos)
    }

    pub fn unlabeled_len(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn penalty_len(&self) -> usize {
        self.n_pen
    }

    pub fn contains_unlabeled(&self, id: &DocId) -> bool {
        self.matrix
            .position(id)
            .is_some_and(|p| self.in_unlabeled[p])
    }

    /// Scores for the current U, in U order.
    pub fn scores(&self) -> Vec<(DocId, f64)> {
        let nu = self.unlabeled.len() as f64;
        let np = self.n_pen as f64;
        self.unlabeled
            .iter()
            .map(|&pos| {
                let u = self.units[pos].as_ref().expect("unit computed");
                let pen = (self.n_pen > 0).then(|| dot(u, &self.sum_pen) / np);
                (
                    self.matrix.ids()[pos].clone(),
                    combine(self.params.lambda, dot(u, &self.sum_u) / nu, pen),
                )
            })
            .collect()
    }

    /// Drop a document from U without adding it anywhere.
    pub fn remove_unlabeled(&mut self, id: &DocId) -> Result<(), EmbedError> {
        let pos = self
            .matrix
            .position(id)
            .filter(|&p| self.in_unlabeled[p])
            .ok_or_else(|| {
                EmbedError::InvalidArgument(format!("{id} is not in the unlabeled set"))
            })?;
        self.in_unlabeled[pos] = false;
        self.unlabeled.retain(|&p| p != pos);
        let u = self.units[pos].as_ref().expect("unit computed");
        add_into(&mut self.sum_u, u, -1.0);
        Ok(())
    }

    /// Add a document to the penalty set L∪E.
    pub fn add_penalty(&mut self, id: &DocId) -> Result<(), EmbedError> {
        let pos = self.unit(id)?;
        let u = self.units[pos].as_ref().expect("unit computed");
        add_into(&mut self.sum_pen, u, 1.0);
        self.n_pen += 1;
        Ok(())
    }

    /// U → L∪E.
    pub fn move_to_penalty(&mut self, id: &DocId) -> Result<(), EmbedError> {
        self.remove_unlabeled(id)?;
        self.add_penalty(id)
    }
}

/// Ids of the `k` highest scores, descending, ties broken by ascending id.
pub fn select_top_k(scores: &[(DocId, f64)], k: usize) -> Vec<DocId> {
    let mut ranked: Vec<&(DocId, f64)> = scores.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(id, _)| id.clone())
        .collect()
}

/// Mean Euclidean distance of the rows from their centroid.
pub fn diversity_score(labeled: &EmbeddingMatrix) -> Result<f64, EmbedError> {
    if labeled.is_empty() {
        return Err(EmbedError::InvalidArgument(
            "diversity of an empty set".into(),
        ));
    }
    let n = labeled.len() as f64;
    let mut centroid = vec![0.0; labeled.dim()];
    for (_, r) in labeled.rows() {
        add_into(&mut centroid, r, 1.0);
    }
    centroid.iter_mut().for_each(|c| *c /= n);
    Ok(labeled
        .rows()
        .map(|(_, r)| euclidean(r, &centroid))
        .sum::<f64>()
        / n)
}

/// Mean distance from `point` to its `k` nearest rows of `pool` (fewer if the
/// pool is smaller). A row whose id equals `exclude` is never a neighbor.
pub fn knn_density(
    point: &[f64],
    pool: &EmbeddingMatrix,
    k: usize,
    exclude: Option<&DocId>,
) -> Result<f64, EmbedError> {
    if k == 0 {
        return Err(EmbedError::InvalidArgument("k must be at least 1".into()));
    }
    if !pool.is_empty() && point.len() != pool.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: pool.dim(),
            got: point.len(),
        });
    }
    let mut dists: Vec<f64> = pool
        .rows()
        .filter(|(id, _)| Some(*id) != exclude)
        .map(|(_, r)| euclidean(point, r))
        .collect();
    if dists.is_empty() {
        return Err(EmbedError::InvalidArgument("no neighbors available".into()));
    }
    let take = k.min(dists.len());
    if take < dists.len() {
        dists.select_nth_unstable_by(take - 1, f64::total_cmp);
    }
    Ok(dists[..take].iter().sum::<f64>() / take as f64)
}

/// Mean KNN density of the labeled rows against the unlabeled pool. Larger
/// values mean sparser neighborhoods.
pub fn outlier_score(
    labeled: &[DocId],
    embeddings: &EmbeddingMatrix,
    unlabeled: &[DocId],
    k: usize,
) -> Result<f64, EmbedError> {
    if labeled.is_empty() {
        return Err(EmbedError::InvalidArgument(
            "outlier score of an empty labeled set".into(),
        ));
    }
    let pool = embeddings.subset(unlabeled)?;
    let mut total = 0.0;
    for id in labeled {
        total += knn_density(embeddings.require(id)?, &pool, k, Some(id))?;
    }
    Ok(total / labeled.len() as f64)
}

/// PCA coordinates for every row plus the variance captured per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub ids: Vec<DocId>,
    /// `ids.len()` rows of `target_dim` coordinates.
    pub coords: Vec<Vec<f64>>,
    /// Sample variance (n − 1 denominator) along each component.
    pub variance: Vec<f64>,
    /// Unit loading vectors, one per component.
    pub components: Vec<Vec<f64>>,
}

/// Project mean-centered rows onto the top `target_dim` principal components.
/// Each component is oriented so its largest-magnitude loading is positive.
pub fn pca_project(
    embeddings: &EmbeddingMatrix,
    target_dim: usize,
) -> Result<Projection, EmbedError> {
    let (n, d) = (embeddings.len(), embeddings.dim());
    if target_dim == 0 || n < target_dim || d < target_dim || n < 2 {
        return Err(EmbedError::InvalidArgument(format!(
            "cannot project {n} rows of dimension {d} onto {target_dim} components"
        )));
    }
    let mut x = DMatrix::<f64>::zeros(n, d);
    for (i, (_, r)) in embeddings.rows().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    for j in 0..d {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }

    // eigen-decompose whichever Gram matrix is smaller
    let use_gram = n <= d;
    let sym = if use_gram {
        &x * x.transpose()
    } else {
        x.transpose() * &x
    };
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let scale = eig
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1.0);

    let mut components = Vec::with_capacity(target_dim);
    let mut variance = Vec::with_capacity(target_dim);
    for (c, &idx) in order.iter().take(target_dim).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-10 * scale {
            return Err(EmbedError::Degenerate { component: c });
        }
        let vec = eig.eigenvectors.column(idx);
        let mut loading: Vec<f64> = if use_gram {
            let v = x.transpose() * vec;
            let nv = v.norm();
            v.iter().map(|a| a / nv).collect()
        } else {
            vec.iter().copied().collect()
        };
        let pivot = loading.iter().enumerate().fold(0, |best, (i, v)| {
            if v.abs() > loading[best].abs() {
                i
            } else {
                best
            }
        });
        if loading[pivot] < 0.0 {
            loading.iter_mut().for_each(|v| *v = -*v);
        }
        variance.push(lambda / (n - 1) as f64);
        components.push(loading);
    }

    let coords = (0..n)
        .map(|i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            components.iter().map(|c| dot(&row, c)).collect()
        })
        .collect();
    Ok(Projection {
        ids: embeddings.ids().to_vec(),
        coords,
        variance,
        components,
    })
}
