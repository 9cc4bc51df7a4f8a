//! Dense (row-major) and compressed-sparse-row matrix storage with block
//! products that never materialize the submatrix.
//!
//! All indices are 0-based. Row blocks `A[I, :]` and column blocks `A[:, J]`
//! are described by plain index slices; an index may not exceed the
//! corresponding dimension.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Column-major copy of a CSR matrix, kept alongside it so column-block
/// products do not scan every row.
#[derive(Clone, Debug, PartialEq)]
struct CscCache {
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    csc: CscCache,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix")));
        }
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(Error::SparseStructure("row pointer array malformed".into()));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(Error::SparseStructure(
                "row pointer does not match the number of stored entries".into(),
            ));
        }
        for i in 0..rows {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            if lo > hi {
                return Err(Error::SparseStructure(format!("row {i} has negative length")));
            }
            let row = &indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::SparseStructure(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
            if let Some(&j) = row.last() {
                if j >= cols {
                    return Err(Error::IndexOutOfRange { index: j, dim: cols });
                }
            }
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let csc = build_csc(rows, cols, &indptr, &indices, &values);
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
            csc,
        })
    }

    /// Builds a CSR matrix from 0-based `(row, col, value)` triplets; duplicate
    /// coordinates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows {
                return Err(Error::IndexOutOfRange { index: i, dim: rows });
            }
            if j >= cols {
                return Err(Error::IndexOutOfRange { index: j, dim: cols });
            }
            sorted.push((i, j, v));
        }
        // stable sort keeps the file order of duplicates, so sums are reproducible
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self::new(rows, cols, indptr, indices, values)
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    #[inline]
    fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.csc.colptr[j], self.csc.colptr[j + 1]);
        (&self.csc.rowind[lo..hi], &self.csc.values[lo..hi])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries in row-major order as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        })
    }
}

fn build_csc(rows: usize, cols: usize, indptr: &[usize], indices: &[usize], values: &[f64]) -> CscCache {
    let mut colptr = vec![0usize; cols + 1];
    for &j in indices {
        colptr[j + 1] += 1;
    }
    for j in 0..cols {
        colptr[j + 1] += colptr[j];
    }
    let mut next = colptr.clone();
    let mut rowind = vec![0usize; indices.len()];
    let mut cvalues = vec![0.0; indices.len()];
    for i in 0..rows {
        for k in indptr[i]..indptr[i + 1] {
            let j = indices[k];
            rowind[next[j]] = i;
            cvalues[next[j]] = values[k];
            next[j] += 1;
        }
    }
    CscCache {
        colptr,
        rowind,
        values: cvalues,
    }
}

/// A real `m x n` matrix, immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

fn check_indices(idx: &[usize], dim: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= dim) {
        Some(&index) => Err(Error::IndexOutOfRange { index, dim }),
        None => Ok(()),
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

impl Matrix {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        DenseMatrix::new(rows, cols, data).map(Matrix::Dense)
    }

    /// Dense matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::dense(m, n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::dense(n, n, data).expect("identity is valid")
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::dense(rows, cols, vec![0.0; rows * cols])
    }

    pub fn sparse_from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        CsrMatrix::from_triplets(rows, cols, triplets).map(Matrix::Sparse)
    }

    pub fn from_nalgebra(a: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                data.push(a[(i, j)]);
            }
        }
        Self::dense(m, n, data)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense(d) => DMatrix::from_row_slice(d.rows, d.cols, &d.data),
            Matrix::Sparse(s) => {
                let mut out = DMatrix::zeros(s.rows, s.cols);
                for (i, j, v) in s.triplets() {
                    out[(i, j)] = v;
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Matrix::Dense(_) => self.clone(),
            Matrix::Sparse(s) => {
                let mut data = vec![0.0; s.rows * s.cols];
                for (i, j, v) in s.triplets() {
                    data[i * s.cols + j] = v;
                }
                Matrix::dense(s.rows, s.cols, data).expect("valid sparse matrix densifies")
            }
        }
    }

    /// CSR copy holding only the nonzero entries.
    pub fn to_sparse(&self) -> Matrix {
        match self {
            Matrix::Sparse(_) => self.clone(),
            Matrix::Dense(d) => {
                let mut trip = Vec::new();
                for i in 0..d.rows {
                    for (j, &v) in d.row(i).iter().enumerate() {
                        if v != 0.0 {
                            trip.push((i, j, v));
                        }
                    }
                }
                Matrix::sparse_from_triplets(d.rows, d.cols, &trip).expect("valid dense matrix sparsifies")
            }
        }
    }

    /// `c * A`, keeping the storage kind.
    pub fn scaled(&self, c: f64) -> Result<Matrix> {
        match self {
            Matrix::Dense(d) => Matrix::dense(d.rows, d.cols, d.data.iter().map(|v| c * v).collect()),
            Matrix::Sparse(s) => {
                let trip: Vec<_> = s.triplets().map(|(i, j, v)| (i, j, c * v)).collect();
                Matrix::sparse_from_triplets(s.rows, s.cols, &trip)
            }
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(d) => d.rows,
            Matrix::Sparse(s) => s.rows,
        }
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(d) => d.cols,
            Matrix::Sparse(s) => s.cols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Dense(d) => d.data[i * d.cols + j],
            Matrix::Sparse(s) => {
                let (idx, val) = s.row(i);
                idx.binary_search(&j).map_or(0.0, |k| val[k])
            }
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        match self {
            Matrix::Dense(d) => d.data.iter().map(|v| v * v).sum(),
            Matrix::Sparse(s) => s.values.iter().map(|v| v * v).sum(),
        }
    }

    /// `‖A[rows, :]‖_F²`
    pub fn row_block_fro_sq(&self, rows: &[usize]) -> Result<f64> {
        check_indices(rows, self.nrows())?;
        Ok(rows.iter().map(|&i| self.row_norm_sq_unchecked(i)).sum())
    }

    /// `‖A[:, cols]‖_F²`
    pub fn col_block_fro_sq(&self, cols: &[usize]) -> Result<f64> {
        check_indices(cols, self.ncols())?;
        Ok(match self {
            Matrix::Dense(d) => {
                let mut acc = 0.0;
                for i in 0..d.rows {
                    let row = d.row(i);
                    for &j in cols {
                        acc += row[j] * row[j];
                    }
                }
                acc
            }
            Matrix::Sparse(s) => cols
                .iter()
                .map(|&j| s.col(j).1.iter().map(|v| v * v).sum::<f64>())
                .sum(),
        })
    }

    fn row_norm_sq_unchecked(&self, i: usize) -> f64 {
        match self {
            Matrix::Dense(d) => d.row(i).iter().map(|v| v * v).sum(),
            Matrix::Sparse(s) => s.row(i).1.iter().map(|v| v * v).sum(),
        }
    }

    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row_norm_sq_unchecked(i)).collect()
    }

    /// `A x`
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("x", x.len(), self.ncols())?;
        Ok((0..self.nrows()).map(|i| self.row_dot(i, x)).collect())
    }

    /// `Aᵀ y`
    pub fn transpose_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("y", y.len(), self.nrows())?;
        let mut out = vec![0.0; self.ncols()];
        for (i, &yi) in y.iter().enumerate() {
            self.add_scaled_row(i, yi, &mut out);
        }
        Ok(out)
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Matrix::Dense(d) => d.row(i).iter().zip(x).map(|(a, b)| a * b).sum(),
            Matrix::Sparse(s) => {
                let (idx, val) = s.row(i);
                idx.iter().zip(val).map(|(&j, v)| v * x[j]).sum()
            }
        }
    }

    /// `out += c * A[i, :]ᵀ`
    #[inline]
    fn add_scaled_row(&self, i: usize, c: f64, out: &mut [f64]) {
        match self {
            Matrix::Dense(d) => {
                for (o, a) in out.iter_mut().zip(d.row(i)) {
                    *o += c * a;
                }
            }
            Matrix::Sparse(s) => {
                let (idx, val) = s.row(i);
                for (&j, v) in idx.iter().zip(val) {
                    out[j] += c * v;
                }
            }
        }
    }

    /// `A[rows, :] x`, in the order of `rows`.
    pub fn row_block_apply(&self, rows: &[usize], x: &[f64]) -> Result<Vec<f64>> {
        check_indices(rows, self.nrows())?;
        check_len("x", x.len(), self.ncols())?;
        Ok(rows.iter().map(|&i| self.row_dot(i, x)).collect())
    }

    /// `A[rows, :]ᵀ u`, a vector of length `n`.
    pub fn row_block_transpose_apply(&self, rows: &[usize], u: &[f64]) -> Result<Vec<f64>> {
        check_indices(rows, self.nrows())?;
        check_len("u", u.len(), rows.len())?;
        let mut out = vec![0.0; self.ncols()];
        for (&i, &ui) in rows.iter().zip(u) {
            self.add_scaled_row(i, ui, &mut out);
        }
        Ok(out)
    }

    /// `A[:, cols] v`, a vector of length `m`.
    pub fn col_block_apply(&self, cols: &[usize], v: &[f64]) -> Result<Vec<f64>> {
        check_indices(cols, self.ncols())?;
        check_len("v", v.len(), cols.len())?;
        let mut out = vec![0.0; self.nrows()];
        match self {
            Matrix::Dense(d) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = d.row(i);
                    *o = cols.iter().zip(v).map(|(&j, vk)| row[j] * vk).sum();
                }
            }
            Matrix::Sparse(s) => {
                for (&j, &vk) in cols.iter().zip(v) {
                    let (ri, rv) = s.col(j);
                    for (&i, a) in ri.iter().zip(rv) {
                        out[i] += a * vk;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A[:, cols]ᵀ z`, in the order of `cols`.
    pub fn col_block_transpose_apply(&self, cols: &[usize], z: &[f64]) -> Result<Vec<f64>> {
        check_indices(cols, self.ncols())?;
        check_len("z", z.len(), self.nrows())?;
        let mut out = vec![0.0; cols.len()];
        match self {
            Matrix::Dense(d) => {
                for (i, &zi) in z.iter().enumerate() {
                    if zi == 0.0 {
                        continue;
                    }
                    let row = d.row(i);
                    for (o, &j) in out.iter_mut().zip(cols) {
                        *o += row[j] * zi;
                    }
                }
            }
            Matrix::Sparse(s) => {
                for (o, &j) in out.iter_mut().zip(cols) {
                    let (ri, rv) = s.col(j);
                    *o = ri.iter().zip(rv).map(|(&i, a)| a * z[i]).sum();
                }
            }
        }
        Ok(out)
    }
}

/// The pair `(A, b)` of a linear system `Ax = b`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        check_len("b", b.len(), a.nrows())?;
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        Ok(Self { a, b })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `‖Aᵀ(Ax - b)‖₂`
    pub fn normal_residual(&self, x: &[f64]) -> Result<f64> {
        let mut r = self.a.apply(x)?;
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        Ok(crate::linalg::norm(&self.a.transpose_apply(&r)?))
    }
}
