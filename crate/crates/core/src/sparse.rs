//! Compressed sparse row matrices over `f64`.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{NesError, Result};
use crate::par;

/// Rows handled per parallel task in the row-wise kernels.
const ROW_BLOCK: usize = 64;

/// Row-compressed real matrix. Column indices within a row are strictly
/// increasing and no explicit duplicates are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from raw parts, validating the structure.
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 {
            return Err(NesError::DimensionMismatch {
                context: "csr indptr",
                expected: nrows + 1,
                found: indptr.len(),
            });
        }
        if indices.len() != values.len() || indptr[nrows] != indices.len() || indptr[0] != 0 {
            return Err(NesError::Format("inconsistent csr buffers".into()));
        }
        for r in 0..nrows {
            if indptr[r] > indptr[r + 1] {
                return Err(NesError::Format("csr indptr not monotone".into()));
            }
            let row = &indices[indptr[r]..indptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(NesError::Format(format!("row {r} columns not strictly increasing")));
            }
            if row.last().is_some_and(|&c| c as usize >= ncols) {
                return Err(NesError::Format(format!("row {r} column out of range")));
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Sums duplicate coordinates. Explicit zeros are kept.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = t.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(NesError::InvalidArgument(format!(
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            )));
        }
        t.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty") += v;
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c as u32);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Stores every entry of `m` whose value is nonzero.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let (nrows, ncols) = m.shape();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..nrows {
            for c in 0..ncols {
                let v = m[(r, c)];
                if v != 0.0 {
                    indices.push(c as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c as usize + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows are visited in increasing order, so each output row stays sorted
        for (r, c, v) in self.iter() {
            let p = next[c];
            indices[p] = r as u32;
            values[p] = v;
            next[c] += 1;
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    /// Multiplies every stored value in row `r` by `scale[r]`.
    pub fn scale_rows(&mut self, scale: &[f64]) {
        assert_eq!(scale.len(), self.nrows, "row scale length");
        for (r, &f) in scale.iter().enumerate().take(self.nrows) {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            self.values[s..e].iter_mut().for_each(|v| *v *= f);
        }
    }

    /// Multiplies every stored value in column `c` by `scale[c]`.
    pub fn scale_cols(&mut self, scale: &[f64]) {
        for (v, &c) in self.values.iter_mut().zip(&self.indices) {
            *v *= scale[c as usize];
        }
    }

    /// Returns `self + alpha * I` (square matrices only).
    pub fn add_identity(&self, alpha: f64) -> Result<CsrMatrix> {
        if self.nrows != self.ncols {
            return Err(NesError::DimensionMismatch {
                context: "add_identity",
                expected: self.nrows,
                found: self.ncols,
            });
        }
        let diag = (0..self.nrows).map(|i| (i, i, alpha));
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.iter().chain(diag))
    }

    /// Applies `f` to every stored value and keeps only the `Some` results.
    pub fn filter_map_values<F>(&self, f: F) -> CsrMatrix
    where
        F: Fn(f64) -> Option<f64>,
    {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if let Some(w) = f(v) {
                    indices.push(c);
                    values.push(w);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Sparse times dense, row-parallel. Each output row is accumulated in
    /// storage order, so the result does not depend on the thread count.
    pub fn mul_dense(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if rhs.nrows() != self.ncols {
            return Err(NesError::DimensionMismatch {
                context: "sparse x dense",
                expected: self.ncols,
                found: rhs.nrows(),
            });
        }
        let width = rhs.ncols();
        if width == 0 || self.nrows == 0 {
            return Ok(DMatrix::zeros(self.nrows, width));
        }
        // column-major rhs^T is row-major rhs
        let rhs_rows = rhs.transpose();
        let rhs_rows = rhs_rows.as_slice();
        let mut out = vec![0.0; self.nrows * width];
        par::for_each_chunk_mut(&mut out, ROW_BLOCK * width, |block, chunk| {
            let first = block * ROW_BLOCK;
            for (i, dst) in chunk.chunks_mut(width).enumerate() {
                let (cols, vals) = self.row(first + i);
                for (&c, &v) in cols.iter().zip(vals) {
                    let src = &rhs_rows[c as usize * width..(c as usize + 1) * width];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += v * s;
                    }
                }
            }
        });
        Ok(DMatrix::from_row_slice(self.nrows, width, &out))
    }

    /// Sparse times sparse (row-wise Gustavson), row-parallel.
    pub fn mul_sparse(&self, rhs: &CsrMatrix) -> Result<CsrMatrix> {
        if rhs.nrows != self.ncols {
            return Err(NesError::DimensionMismatch {
                context: "sparse x sparse",
                expected: self.ncols,
                found: rhs.nrows,
            });
        }
        let width = rhs.ncols;
        let nblocks = self.nrows.div_ceil(ROW_BLOCK);
        let blocks = par::map_indexed(nblocks, |b| {
            let start = b * ROW_BLOCK;
            let end = (start + ROW_BLOCK).min(self.nrows);
            let mut acc = vec![0.0f64; width];
            let mut seen = vec![false; width];
            let mut touched: Vec<u32> = Vec::new();
            let mut lens = Vec::with_capacity(end - start);
            let mut indices = Vec::new();
            let mut values = Vec::new();
            for r in start..end {
                let (cols, vals) = self.row(r);
                for (&k, &a) in cols.iter().zip(vals) {
                    let (rc, rv) = rhs.row(k as usize);
                    for (&c, &b) in rc.iter().zip(rv) {
                        let c = c as usize;
                        if !seen[c] {
                            seen[c] = true;
                            touched.push(c as u32);
                        }
                        acc[c] += a * b;
                    }
                }
                touched.sort_unstable();
                for &c in &touched {
                    indices.push(c);
                    values.push(acc[c as usize]);
                    acc[c as usize] = 0.0;
                    seen[c as usize] = false;
                }
                lens.push(touched.len());
                touched.clear();
            }
            (lens, indices, values)
        });
        let total: usize = blocks.iter().map(|b| b.1.len()).sum();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        indptr.push(0);
        for (lens, idx, val) in blocks {
            for l in lens {
                indptr.push(indptr.last().copied().unwrap_or(0) + l);
            }
            indices.extend(idx);
            values.extend(val);
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: width,
            indptr,
            indices,
            values,
        })
    }

    /// Writes `nrows ncols nnz` then one `row col value` line per entry.
    pub fn write_triplets<W: Write>(&self, mut w: W, label: &str) -> Result<()> {
        writeln!(w, "# {label}")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(w, "{r} {c} {v:e}")?;
        }
        Ok(())
    }
}
