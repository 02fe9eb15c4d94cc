//! Sparse approximation of the walk-matrix polynomial
//! `sum_{r=1..T} P^r D^{-1}` of a subgraph, where `P` is the subgraph
//! transition matrix and `D` the subgraph degree matrix.
//!
//! The sampled estimator draws a length `r` uniformly from `1..=T`, a start
//! node `u` with probability `d_u / vol`, walks `r` steps on `P` to `v`, and
//! counts the pair `(u, v)`. With `s` draws the pair probability is
//! `(d_u / (T vol)) sum_r P^r[u][v]`, so scaling each count by
//! `T vol / (d_u d_v s)` gives an unbiased estimate of the polynomial.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NesError, Result};
use crate::par;
use crate::sampling::SubgraphSample;
use crate::sparse::CsrMatrix;

/// Draws per independently seeded block. Blocks are fixed, so the estimate
/// is identical for any number of worker threads.
pub const BLOCK_SAMPLES: usize = 1 << 16;

/// Largest `k * k` for which pair counts are kept in a dense table.
const DENSE_COUNT_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PolynomialMode {
    /// Dense exact polynomial up to `exact_threshold`, sampled above it.
    #[default]
    Auto,
    Exact,
    Sampled,
}

impl FromStr for PolynomialMode {
    type Err = NesError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PolynomialMode::Auto),
            "exact" => Ok(PolynomialMode::Exact),
            "sampled" => Ok(PolynomialMode::Sampled),
            other => Err(NesError::InvalidArgument(format!(
                "polynomial mode `{other}` (expected auto|exact|sampled)"
            ))),
        }
    }
}

impl std::fmt::Display for PolynomialMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolynomialMode::Auto => "auto",
            PolynomialMode::Exact => "exact",
            PolynomialMode::Sampled => "sampled",
        })
    }
}

#[derive(Clone, Debug)]
pub struct WalkPolynomialConfig {
    /// Context window `T`.
    pub window: usize,
    /// Path samples; `None` means `25 * T * nnz(A_g)`.
    pub samples: Option<usize>,
    pub seed: u64,
    pub exact_threshold: usize,
    pub mode: PolynomialMode,
    /// Multiply by `D_g^{-1}` on the right. Off gives the bare `sum P^r`.
    pub trailing_degree_scaling: bool,
}

impl Default for WalkPolynomialConfig {
    fn default() -> Self {
        WalkPolynomialConfig {
            window: 10,
            samples: None,
            seed: 0x4e45_5321,
            exact_threshold: 512,
            mode: PolynomialMode::Auto,
            trailing_degree_scaling: true,
        }
    }
}

impl WalkPolynomialConfig {
    pub fn resolved_samples(&self, subgraph_nnz: usize) -> usize {
        self.samples.unwrap_or_else(|| 25 * self.window * subgraph_nnz).max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(NesError::InvalidArgument("window T must be >= 1".into()));
        }
        if self.samples == Some(0) {
            return Err(NesError::InvalidArgument("samples must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolynomialMethod {
    Exact,
    Sampled {
        samples: usize,
    },
    /// Subgraph without edges; the polynomial is identically zero.
    Empty,
}

/// The `k x k` non-negative sparse polynomial estimate.
#[derive(Clone, Debug)]
pub struct SparsePolynomial {
    pub matrix: CsrMatrix,
}

impl SparsePolynomial {
    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_inputs(subgraph: &CsrMatrix, degrees: &[usize]) -> Result<()> {
    if subgraph.nrows() != subgraph.ncols() {
        return Err(NesError::DimensionMismatch {
            context: "subgraph matrix",
            expected: subgraph.nrows(),
            found: subgraph.ncols(),
        });
    }
    if degrees.len() != subgraph.nrows() {
        return Err(NesError::DimensionMismatch {
            context: "subgraph degrees",
            expected: subgraph.nrows(),
            found: degrees.len(),
        });
    }
    Ok(())
}

fn inverse_degrees(degrees: &[usize], enabled: bool) -> Vec<f64> {
    degrees
        .iter()
        .map(|&d| match (enabled, d) {
            (false, _) => 1.0,
            (true, 0) => 0.0,
            (true, d) => 1.0 / d as f64,
        })
        .collect()
}

/// Dense reference computation, `O(k^3 T)`.
pub fn exact_polynomial(
    subgraph: &CsrMatrix,
    degrees: &[usize],
    cfg: &WalkPolynomialConfig,
    force: bool,
) -> Result<SparsePolynomial> {
    cfg.validate()?;
    check_inputs(subgraph, degrees)?;
    let k = subgraph.nrows();
    if k > cfg.exact_threshold && !force {
        return Err(NesError::ExactTooLarge {
            k,
            threshold: cfg.exact_threshold,
        });
    }
    let mut p = subgraph.to_dense();
    for (r, s) in subgraph.row_sums().into_iter().enumerate() {
        if s > 0.0 {
            p.row_mut(r).scale_mut(1.0 / s);
        }
    }
    let mut power = p.clone();
    let mut sum = DMatrix::zeros(k, k);
    for step in 0..cfg.window {
        sum += &power;
        if step + 1 < cfg.window {
            power = &power * &p;
        }
    }
    for (j, w) in inverse_degrees(degrees, cfg.trailing_degree_scaling)
        .into_iter()
        .enumerate()
    {
        sum.column_mut(j).scale_mut(w);
    }
    Ok(SparsePolynomial {
        matrix: CsrMatrix::from_dense(&sum),
    })
}

/// Pair counts from a set of blocks.
struct PairCounts {
    dense: Vec<u32>,
    keys: Vec<u64>,
}

impl PairCounts {
    fn empty() -> Self {
        PairCounts {
            dense: Vec::new(),
            keys: Vec::new(),
        }
    }

    fn add(&mut self, key: u64, dense_len: Option<usize>) {
        match dense_len {
            Some(len) => {
                if self.dense.is_empty() {
                    self.dense = vec![0; len];
                }
                self.dense[key as usize] += 1;
            }
            None => self.keys.push(key),
        }
    }

    fn merge(mut self, mut other: PairCounts) -> PairCounts {
        if self.dense.is_empty() {
            self.dense = std::mem::take(&mut other.dense);
        } else if !other.dense.is_empty() {
            self.dense.iter_mut().zip(&other.dense).for_each(|(a, b)| *a += b);
        }
        if self.keys.len() < other.keys.len() {
            std::mem::swap(&mut self.keys, &mut other.keys);
        }
        self.keys.extend_from_slice(&other.keys);
        self
    }

    /// `(key, count)` in ascending key order.
    fn into_sorted(mut self) -> Vec<(u64, u64)> {
        if !self.dense.is_empty() {
            return self
                .dense
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| (k as u64, c as u64))
                .collect();
        }
        self.keys.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for key in self.keys {
            match out.last_mut() {
                Some((k, c)) if *k == key => *c += 1,
                _ => out.push((key, 1)),
            }
        }
        out
    }
}

/// Random-walk path-sampling estimate of the polynomial.
pub fn sampled_polynomial(
    subgraph: &CsrMatrix,
    degrees: &[usize],
    cfg: &WalkPolynomialConfig,
) -> Result<SparsePolynomial> {
    cfg.validate()?;
    check_inputs(subgraph, degrees)?;
    let k = subgraph.nrows();
    let nnz = subgraph.nnz();
    if nnz == 0 {
        return Err(NesError::EdgelessSubgraph);
    }
    let samples = cfg.resolved_samples(nnz);
    if samples > u32::MAX as usize {
        return Err(NesError::InvalidArgument(format!("samples {samples} exceeds 2^32 - 1")));
    }
    let window = cfg.window;
    let dense_len = (k * k <= DENSE_COUNT_LIMIT).then_some(k * k);
    let mut entry_row = Vec::with_capacity(nnz);
    for r in 0..k {
        entry_row.extend(std::iter::repeat_n(r as u32, subgraph.row_nnz(r)));
    }
    let indptr = subgraph.indptr();
    let indices = subgraph.indices();
    let nblocks = samples.div_ceil(BLOCK_SAMPLES);

    let counts = par::fold_range(
        nblocks,
        PairCounts::empty,
        |mut acc, block| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(block as u64);
            let start = block * BLOCK_SAMPLES;
            let len = BLOCK_SAMPLES.min(samples - start);
            for _ in 0..len {
                let steps = rng.random_range(1..=window);
                // a uniform stored entry gives a degree-proportional start
                // together with its first uniform step
                let e = rng.random_range(0..nnz);
                let u = entry_row[e] as usize;
                let mut v = indices[e] as usize;
                for _ in 1..steps {
                    let (s, t) = (indptr[v], indptr[v + 1]);
                    v = indices[s + rng.random_range(0..t - s)] as usize;
                }
                acc.add((u * k + v) as u64, dense_len);
            }
            acc
        },
        PairCounts::merge,
    );

    let volume = nnz as f64;
    let inv_end = inverse_degrees(degrees, cfg.trailing_degree_scaling);
    let base = window as f64 * volume / samples as f64;
    let mut indptr_out = vec![0usize; k + 1];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for (key, count) in counts.into_sorted() {
        let (u, v) = ((key / k as u64) as usize, (key % k as u64) as usize);
        indptr_out[u + 1] += 1;
        cols.push(v as u32);
        vals.push(count as f64 * base / degrees[u] as f64 * inv_end[v]);
    }
    for r in 0..k {
        indptr_out[r + 1] += indptr_out[r];
    }
    Ok(SparsePolynomial {
        matrix: CsrMatrix::from_parts(k, k, indptr_out, cols, vals)?,
    })
}

/// Chooses the exact or sampled route according to `cfg.mode`.
pub fn sparsify(sample: &SubgraphSample, cfg: &WalkPolynomialConfig) -> Result<(SparsePolynomial, PolynomialMethod)> {
    let a = &sample.subgraph;
    let d = &sample.subgraph_degrees;
    match cfg.mode {
        PolynomialMode::Exact => Ok((exact_polynomial(a, d, cfg, true)?, PolynomialMethod::Exact)),
        PolynomialMode::Sampled => {
            let p = sampled_polynomial(a, d, cfg)?;
            let samples = cfg.resolved_samples(a.nnz());
            Ok((p, PolynomialMethod::Sampled { samples }))
        }
        PolynomialMode::Auto if a.nnz() == 0 => Ok((
            SparsePolynomial {
                matrix: CsrMatrix::zeros(a.nrows(), a.ncols()),
            },
            PolynomialMethod::Empty,
        )),
        PolynomialMode::Auto if sample.k() <= cfg.exact_threshold => {
            Ok((exact_polynomial(a, d, cfg, false)?, PolynomialMethod::Exact))
        }
        PolynomialMode::Auto => {
            let p = sampled_polynomial(a, d, cfg)?;
            let samples = cfg.resolved_samples(a.nnz());
            Ok((p, PolynomialMethod::Sampled { samples }))
        }
    }
}
