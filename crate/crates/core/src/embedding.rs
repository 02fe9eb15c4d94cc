//! Information matrices, the projected embedding, and the dense exact
//! reference embedding for small graphs.

use nalgebra::DMatrix;

use crate::error::{NesError, Result};
use crate::factorization::{exact_tsvd, FactorPair};
use crate::graph::Graph;
use crate::sparse::CsrMatrix;
use crate::sparsifier::SparsePolynomial;

/// Singular values at or below this are treated as zero.
pub const SIGMA_TOLERANCE: f64 = 1e-12;

/// Largest graph accepted by the dense oracle.
pub const ORACLE_NODE_LIMIT: usize = 1000;

/// Dense `n x d` node embedding, one row per node.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub data: DMatrix<f64>,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// `vol(G) / (T b)`.
pub fn information_scale(volume: f64, window: usize, negative: f64) -> Result<f64> {
    if !(volume > 0.0) {
        return Err(NesError::NonPositiveVolume(volume));
    }
    if window == 0 || !(negative > 0.0) {
        return Err(NesError::InvalidArgument(format!(
            "window {window} and negative samples {negative} must be positive"
        )));
    }
    Ok(volume / (window as f64 * negative))
}

/// `max(log(scale x), 0)`, `None` where the result is zero.
pub(crate) fn truncated_log(scale: f64, x: f64) -> Option<f64> {
    let y = scale * x;
    (y > 1.0).then(|| y.ln())
}

/// Subgraph information matrix `log_+(vol / (T b) * poly)`. Entries that
/// truncate to zero are not stored.
pub fn build_mg(poly: &SparsePolynomial, volume: f64, window: usize, negative: f64) -> Result<CsrMatrix> {
    let scale = information_scale(volume, window, negative)?;
    Ok(poly.matrix.filter_map_values(|x| truncated_log(scale, x)))
}

/// `n x k` matrix `log_+(vol / (T b) * R^T (poly + I))`.
pub fn build_mr(
    related: &CsrMatrix,
    poly: &SparsePolynomial,
    volume: f64,
    window: usize,
    negative: f64,
) -> Result<CsrMatrix> {
    let scale = information_scale(volume, window, negative)?;
    if related.nrows() != poly.k() {
        return Err(NesError::DimensionMismatch {
            context: "related rows vs polynomial size",
            expected: poly.k(),
            found: related.nrows(),
        });
    }
    let shifted = poly.matrix.add_identity(1.0)?;
    let product = related.transpose().mul_sparse(&shifted)?;
    Ok(product.filter_map_values(|x| truncated_log(scale, x)))
}

/// `M_R V diag(sigma)^{-1/2}` over the singular directions whose value
/// exceeds [`SIGMA_TOLERANCE`]. Dropped directions shrink the dimension.
pub fn compute_embedding(m_r: &CsrMatrix, factors: &FactorPair) -> Result<EmbeddingMatrix> {
    if factors.v.nrows() != m_r.ncols() {
        return Err(NesError::DimensionMismatch {
            context: "M_R columns vs right factors",
            expected: factors.v.nrows(),
            found: m_r.ncols(),
        });
    }
    let keep: Vec<usize> = (0..factors.rank())
        .filter(|&j| factors.sigma[j] > SIGMA_TOLERANCE)
        .collect();
    if keep.len() < factors.rank() {
        log::warn!(
            "dropping {} singular directions at or below {SIGMA_TOLERANCE:e}; dimension {} -> {}",
            factors.rank() - keep.len(),
            factors.rank(),
            keep.len()
        );
    }
    let mut projection = DMatrix::zeros(factors.v.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        projection.set_column(dst, &(factors.v.column(src) / factors.sigma[src].sqrt()));
    }
    Ok(EmbeddingMatrix {
        data: m_r.mul_dense(&projection)?,
    })
}

/// Dense information matrix `log_+(vol / (b T) sum_r (D^-1 A)^r D^-1)`.
pub fn netmf_matrix(g: &Graph, window: usize, negative: f64) -> Result<DMatrix<f64>> {
    let n = g.n();
    if n > ORACLE_NODE_LIMIT {
        return Err(NesError::GraphTooLarge {
            n,
            limit: ORACLE_NODE_LIMIT,
        });
    }
    let scale = information_scale(g.volume(), window, negative)?;
    let inv: Vec<f64> = g
        .degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();
    let mut p = DMatrix::zeros(n, n);
    for u in 0..n {
        for &v in g.neighbors(u) {
            p[(u, v as usize)] = inv[u];
        }
    }
    let mut power = p.clone();
    let mut sum = DMatrix::zeros(n, n);
    for step in 0..window {
        sum += &power;
        if step + 1 < window {
            power = &power * &p;
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        truncated_log(scale, sum[(i, j)] * inv[j]).unwrap_or(0.0)
    }))
}

/// Exact reference embedding `U_d sigma_d^{1/2}` of the dense information
/// matrix, together with the factors it came from.
pub fn netmf_exact_oracle(g: &Graph, d: usize, window: usize, negative: f64) -> Result<(EmbeddingMatrix, FactorPair)> {
    let m = netmf_matrix(g, window, negative)?;
    let f = exact_tsvd(&m, d)?;
    let mut data = f.u.clone();
    for (j, &s) in f.sigma.iter().enumerate() {
        data.column_mut(j).scale_mut(s.sqrt());
    }
    Ok((EmbeddingMatrix { data }, f))
}
