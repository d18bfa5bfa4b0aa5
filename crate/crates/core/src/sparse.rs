//! Compressed sparse row storage and the batch kernels behind every query
//! operator.
//!
//! A weighted multiset of type `τ` is a row of a [`DenseBatch`] of width
//! `N_τ`; a relation is a [`SparseMatrix`] of shape `N_domain × N_range`.
//! Traversal is a dense-row × sparse-matrix product. No kernel ever
//! materializes a dense `N1 × N2` buffer, and all kernels are pure.

use std::fmt;

use rayon::prelude::*;

use crate::error::ShapeError;

/// Below this many multiply-adds a kernel stays on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

/// Immutable CSR matrix with nonnegative weights.
///
/// Column indices are strictly increasing within each row, so there are no
/// duplicate `(row, col)` pairs.
#[derive(Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseMatrix")
            .field("n_rows", &self.n_rows)
            .field("n_cols", &self.n_cols)
            .field("nnz", &self.nnz())
            .finish()
    }
}

/// Reasons a triplet list cannot become a [`SparseMatrix`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SparseBuildError {
    #[error("entry ({row}, {col}) is outside a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("entry ({row}, {col}) has invalid weight {weight}; weights must be finite and >= 0")]
    InvalidWeight { row: usize, col: usize, weight: f64 },
    #[error("dimension {0} exceeds the u32 index range")]
    TooLarge(usize),
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, weight)` triplets. Duplicate
    /// coordinates are summed. The result does not depend on the order of
    /// the input: duplicates are added in ascending weight order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseBuildError> {
        if n_cols > u32::MAX as usize {
            return Err(SparseBuildError::TooLarge(n_cols));
        }
        let mut entries: Vec<(usize, u32, f64)> = Vec::new();
        for (row, col, weight) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(SparseBuildError::OutOfBounds {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(SparseBuildError::InvalidWeight { row, col, weight });
            }
            entries.push((row, col as u32, weight));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, u32)> = None;
        for (row, col, weight) in entries {
            if last == Some((row, col)) {
                *values.last_mut().expect("previous entry") += weight;
                continue;
            }
            last = Some((row, col));
            row_offsets[row + 1] += 1;
            col_indices.push(col);
            values.push(weight);
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        col_indices.shrink_to_fit();
        values.shrink_to_fit();
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and weights stored in row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Stored weight at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &w)| (i, j as usize, w))
        })
    }

    /// Exact transpose via a counting pass; the result is again canonical CSR.
    pub fn transpose(&self) -> SparseMatrix {
        let mut row_offsets = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            row_offsets[c as usize + 1] += 1;
        }
        for j in 0..self.n_cols {
            row_offsets[j + 1] += row_offsets[j];
        }
        let mut cursor = row_offsets.clone();
        let mut col_indices = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &w) in cols.iter().zip(vals) {
                let slot = cursor[c as usize];
                col_indices[slot] = i as u32;
                values[slot] = w;
                cursor[c as usize] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Same sparsity pattern with replacement weights (length `nnz`, in
    /// storage order). Used for relations whose weights are trained.
    pub fn with_values(&self, values: Vec<f64>) -> Result<SparseMatrix, ShapeError> {
        if values.len() != self.nnz() {
            return Err(ShapeError::new(
                "with_values",
                format!("matrix with {} entries", self.nnz()),
                format!("{} values", values.len()),
            ));
        }
        Ok(SparseMatrix {
            values,
            ..self.clone()
        })
    }

    /// Bytes held by the index and value arrays.
    pub fn heap_bytes(&self) -> usize {
        self.row_offsets.len() * std::mem::size_of::<usize>()
            + self.col_indices.len() * std::mem::size_of::<u32>()
            + self.values.len() * std::mem::size_of::<f64>()
    }

    fn shape_str(&self) -> String {
        format!("sparse {}x{}", self.n_rows, self.n_cols)
    }
}

/// A `B × N` row-major batch; each row is one weighted multiset vector.
#[derive(Clone, PartialEq)]
pub struct DenseBatch {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.data.len() <= 64 {
            f.debug_struct("DenseBatch")
                .field("rows", &self.rows)
                .field("cols", &self.cols)
                .field("data", &self.data)
                .finish()
        } else {
            write!(f, "DenseBatch({}x{})", self.rows, self.cols)
        }
    }
}

impl DenseBatch {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseBatch {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseBatch {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ShapeError> {
        if data.len() != rows * cols {
            return Err(ShapeError::new(
                "from_vec",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(DenseBatch { rows, cols, data })
    }

    /// Builds a batch from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ShapeError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(ShapeError::new(
                    "from_rows",
                    format!("row width {cols}"),
                    format!("row width {}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseBatch {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// One row per index, each row a unit vector.
    pub fn one_hot(indices: &[usize], cols: usize) -> Self {
        let mut out = DenseBatch::zeros(indices.len(), cols);
        for (b, &i) in indices.iter().enumerate() {
            out.data[b * cols + i] = 1.0;
        }
        out
    }

    pub fn scalar(value: f64) -> Self {
        DenseBatch {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.data[b * self.cols..(b + 1) * self.cols]
    }

    pub fn row_mut(&mut self, b: usize) -> &mut [f64] {
        &mut self.data[b * self.cols..(b + 1) * self.cols]
    }

    pub fn get(&self, b: usize, j: usize) -> f64 {
        self.data[b * self.cols + j]
    }

    pub fn set(&mut self, b: usize, j: usize, value: f64) {
        self.data[b * self.cols + j] = value;
    }

    /// Repeats a single-row batch `rows` times. Other batches are returned
    /// unchanged when they already have `rows` rows.
    pub fn broadcast_rows(&self, rows: usize) -> Result<DenseBatch, ShapeError> {
        if self.rows == rows {
            return Ok(self.clone());
        }
        if self.rows != 1 {
            return Err(ShapeError::new(
                "broadcast",
                self.shape_str(),
                format!("batch of {rows}"),
            ));
        }
        let mut data = Vec::with_capacity(rows * self.cols);
        for _ in 0..rows {
            data.extend_from_slice(&self.data);
        }
        Ok(DenseBatch {
            rows,
            cols: self.cols,
            data,
        })
    }

    /// Sums rows down to `rows` rows; the adjoint of [`broadcast_rows`].
    ///
    /// [`broadcast_rows`]: DenseBatch::broadcast_rows
    pub fn reduce_rows(&self, rows: usize) -> DenseBatch {
        if self.rows == rows {
            return self.clone();
        }
        debug_assert_eq!(rows, 1);
        let mut out = DenseBatch::zeros(1, self.cols);
        for b in 0..self.rows {
            for (o, v) in out.data.iter_mut().zip(self.row(b)) {
                *o += v;
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &DenseBatch) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub(crate) fn shape_str(&self) -> String {
        format!("batch {}x{}", self.rows, self.cols)
    }
}

fn check_same(op: &'static str, s: &DenseBatch, t: &DenseBatch) -> Result<(), ShapeError> {
    if s.shape() != t.shape() {
        return Err(ShapeError::new(op, s.shape_str(), t.shape_str()));
    }
    Ok(())
}

/// Adds `coef * s_row · m` into `out_row`, skipping zero inputs.
#[inline]
fn accumulate_row(out_row: &mut [f64], s_row: &[f64], coef: f64, m: &SparseMatrix) {
    for (i, &si) in s_row.iter().enumerate() {
        if si == 0.0 {
            continue;
        }
        let a = coef * si;
        let (cols, vals) = m.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            out_row[j as usize] += a * w;
        }
    }
}

fn for_each_row<F>(out: &mut DenseBatch, work: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let cols = out.cols;
    if cols == 0 {
        return;
    }
    if work >= PAR_THRESHOLD && out.rows > 1 {
        out.data
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(b, row)| f(b, row));
    } else {
        out.data
            .chunks_mut(cols)
            .enumerate()
            .for_each(|(b, row)| f(b, row));
    }
}

/// `out[b, j] = Σ_i s[b, i] · m[i, j]`.
pub fn spmm_right(s: &DenseBatch, m: &SparseMatrix) -> Result<DenseBatch, ShapeError> {
    if s.cols != m.n_rows {
        return Err(ShapeError::new("spmm_right", s.shape_str(), m.shape_str()));
    }
    let mut out = DenseBatch::zeros(s.rows, m.n_cols);
    for_each_row(&mut out, s.rows * m.nnz(), |b, row| {
        accumulate_row(row, s.row(b), 1.0, m)
    });
    Ok(out)
}

/// `out[b, i] = Σ_j s[b, j] · m[i, j]`, i.e. `s · mᵀ`.
///
/// Gathers along the rows of `m` directly, so no transposed copy is built.
/// The knowledge base keeps an explicit transpose as well; inverse traversal
/// uses [`spmm_right`] over it, which can skip zero inputs.
pub fn spmm_right_transpose(s: &DenseBatch, m: &SparseMatrix) -> Result<DenseBatch, ShapeError> {
    if s.cols != m.n_cols {
        return Err(ShapeError::new(
            "spmm_right_transpose",
            s.shape_str(),
            m.shape_str(),
        ));
    }
    let mut out = DenseBatch::zeros(s.rows, m.n_rows);
    for_each_row(&mut out, s.rows * m.nnz(), |b, row| {
        let s_row = s.row(b);
        for (i, o) in row.iter_mut().enumerate() {
            let (cols, vals) = m.row(i);
            let mut acc = 0.0;
            for (&j, &w) in cols.iter().zip(vals) {
                acc += s_row[j as usize] * w;
            }
            *o = acc;
        }
    });
    Ok(out)
}

fn check_mats(op: &'static str, mats: &[&SparseMatrix]) -> Result<(usize, usize), ShapeError> {
    let first = mats
        .first()
        .ok_or_else(|| ShapeError::new(op, "relation list", "empty"))?;
    let shape = (first.n_rows, first.n_cols);
    for m in mats {
        if (m.n_rows, m.n_cols) != shape {
            return Err(ShapeError::new(op, first.shape_str(), m.shape_str()));
        }
    }
    Ok(shape)
}

/// `out[b] = Σ_i r[b, i] · (s[b] · mats[i])`, evaluated as `k` accumulated
/// sparse products. The mixture `Σ r[i] M_i` is never formed.
pub fn weighted_sum_matvec(
    s: &DenseBatch,
    r: &DenseBatch,
    mats: &[&SparseMatrix],
) -> Result<DenseBatch, ShapeError> {
    let (n1, n2) = check_mats("weighted_sum_matvec", mats)?;
    if s.cols != n1 {
        return Err(ShapeError::new(
            "weighted_sum_matvec",
            s.shape_str(),
            mats[0].shape_str(),
        ));
    }
    if r.cols != mats.len() || r.rows != s.rows {
        return Err(ShapeError::new(
            "weighted_sum_matvec",
            r.shape_str(),
            format!("{} rows x {} relations", s.rows, mats.len()),
        ));
    }
    let nnz: usize = mats.iter().map(|m| m.nnz()).sum();
    let mut out = DenseBatch::zeros(s.rows, n2);
    for_each_row(&mut out, s.rows * nnz, |b, row| {
        for (i, m) in mats.iter().enumerate() {
            let coef = r.get(b, i);
            if coef != 0.0 {
                accumulate_row(row, s.row(b), coef, m);
            }
        }
    });
    Ok(out)
}

/// Per-row bilinear form `out[b] = ⟨s[b] · m, g[b]⟩`, computed without
/// forming `s · m`. This is the relation-weight adjoint of a traversal.
pub fn bilinear_rows(s: &DenseBatch, m: &SparseMatrix, g: &DenseBatch) -> Result<Vec<f64>, ShapeError> {
    if s.cols != m.n_rows || g.cols != m.n_cols || s.rows != g.rows {
        return Err(ShapeError::new(
            "bilinear_rows",
            format!("{} / {}", s.shape_str(), g.shape_str()),
            m.shape_str(),
        ));
    }
    Ok((0..s.rows)
        .map(|b| {
            let (s_row, g_row) = (s.row(b), g.row(b));
            let mut acc = 0.0;
            for (i, &si) in s_row.iter().enumerate() {
                if si == 0.0 {
                    continue;
                }
                let (cols, vals) = m.row(i);
                let mut dot = 0.0;
                for (&j, &w) in cols.iter().zip(vals) {
                    dot += w * g_row[j as usize];
                }
                acc += si * dot;
            }
            acc
        })
        .collect())
}

/// Gradient of `Σ_b ⟨s[b] · m, g[b]⟩` with respect to each stored weight of
/// `m`, in storage order.
pub fn entry_gradients(s: &DenseBatch, m: &SparseMatrix, g: &DenseBatch) -> Result<Vec<f64>, ShapeError> {
    if s.cols != m.n_rows || g.cols != m.n_cols || s.rows != g.rows {
        return Err(ShapeError::new(
            "entry_gradients",
            format!("{} / {}", s.shape_str(), g.shape_str()),
            m.shape_str(),
        ));
    }
    let mut out = vec![0.0; m.nnz()];
    for b in 0..s.rows {
        let (s_row, g_row) = (s.row(b), g.row(b));
        for (i, &si) in s_row.iter().enumerate() {
            if si == 0.0 {
                continue;
            }
            let start = m.row_offsets[i];
            let (cols, _) = m.row(i);
            for (k, &j) in cols.iter().enumerate() {
                out[start + k] += si * g_row[j as usize];
            }
        }
    }
    Ok(out)
}

pub fn hadamard(s: &DenseBatch, t: &DenseBatch) -> Result<DenseBatch, ShapeError> {
    check_same("hadamard", s, t)?;
    let data = s.data.iter().zip(&t.data).map(|(a, b)| a * b).collect();
    Ok(DenseBatch {
        rows: s.rows,
        cols: s.cols,
        data,
    })
}

pub fn add(s: &DenseBatch, t: &DenseBatch) -> Result<DenseBatch, ShapeError> {
    check_same("add", s, t)?;
    let data = s.data.iter().zip(&t.data).map(|(a, b)| a + b).collect();
    Ok(DenseBatch {
        rows: s.rows,
        cols: s.cols,
        data,
    })
}

pub fn scale(s: &DenseBatch, a: f64) -> DenseBatch {
    DenseBatch {
        rows: s.rows,
        cols: s.cols,
        data: s.data.iter().map(|v| v * a).collect(),
    }
}

/// Per-row sum of entries, as a `B × 1` batch.
pub fn row_sum(s: &DenseBatch) -> DenseBatch {
    let data = (0..s.rows).map(|b| s.row(b).iter().sum()).collect();
    DenseBatch {
        rows: s.rows,
        cols: 1,
        data,
    }
}
