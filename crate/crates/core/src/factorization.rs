//! Truncated SVD: a randomized range-finder route for sparse input and an
//! exact dense route used as the reference.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NesError, Result};
use crate::sparse::CsrMatrix;

/// Top-`d` singular triplets, `sigma` non-increasing.
#[derive(Clone, Debug)]
pub struct FactorPair {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl FactorPair {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

#[derive(Clone, Debug)]
pub struct RtsvdConfig {
    pub rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for RtsvdConfig {
    fn default() -> Self {
        RtsvdConfig {
            rank: 128,
            oversample: 10,
            power_iters: 2,
            seed: 0x4e45_5321,
        }
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Sorts triplets by decreasing singular value, keeps `d`, and fixes signs
/// so the largest-magnitude entry of each `v` column is non-negative.
fn finish(u: DMatrix<f64>, sigma: &[f64], v: DMatrix<f64>, d: usize) -> FactorPair {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    order.truncate(d);
    let mut uo = DMatrix::zeros(u.nrows(), d);
    let mut vo = DMatrix::zeros(v.nrows(), d);
    let mut so = Vec::with_capacity(d);
    for (j, &src) in order.iter().enumerate() {
        let vc = v.column(src);
        let pivot = vc
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vo.set_column(j, &(vc * sign));
        uo.set_column(j, &(u.column(src) * sign));
        so.push(sigma[src].max(0.0));
    }
    FactorPair {
        u: uo,
        sigma: so,
        v: vo,
    }
}

/// Full SVD of a dense matrix, truncated to the top `d` triplets.
pub fn exact_tsvd(m: &DMatrix<f64>, d: usize) -> Result<FactorPair> {
    let max = m.nrows().min(m.ncols());
    if d > max {
        return Err(NesError::RankTooLarge { d, max });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(NesError::NonFinite("matrix passed to exact_tsvd"));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let v = svd.v_t.expect("requested v_t").transpose();
    Ok(finish(u, svd.singular_values.as_slice(), v, d))
}

/// Randomized truncated SVD with Gaussian sketch, oversampling and
/// orthonormalized power (subspace) iterations.
pub fn rtsvd(m: &CsrMatrix, cfg: &RtsvdConfig) -> Result<FactorPair> {
    let (rows, cols) = m.shape();
    let max = rows.min(cols);
    let d = cfg.rank;
    if d > max {
        return Err(NesError::RankTooLarge { d, max });
    }
    if !m.is_finite() {
        return Err(NesError::NonFinite("matrix passed to rtsvd"));
    }
    if d == 0 {
        return Ok(FactorPair {
            u: DMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        });
    }
    let width = (d + cfg.oversample).min(max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // filled row by row so the sketch does not depend on storage order
    let mut omega = DMatrix::zeros(cols, width);
    for i in 0..cols {
        for j in 0..width {
            omega[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let mt = m.transpose();
    let mut q = orthonormal_basis(m.mul_dense(&omega)?);
    for _ in 0..cfg.power_iters {
        let z = orthonormal_basis(mt.mul_dense(&q)?);
        q = orthonormal_basis(m.mul_dense(&z)?);
    }
    // B = Q^T M, held as its transpose M^T Q
    let bt = mt.mul_dense(&q)?;
    let svd = bt.svd(true, true);
    // B^T = W S Z^T  =>  B = Z S W^T, so M ~ (Q Z) S W^T
    let w = svd.u.expect("requested u");
    let z = svd.v_t.expect("requested v_t").transpose();
    let u = &q * z;
    Ok(finish(u, svd.singular_values.as_slice(), w, d))
}
