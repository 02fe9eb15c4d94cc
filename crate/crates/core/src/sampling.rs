//! Representative node selection and construction of the normalized
//! subgraph and related matrices.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NesError, Result};
use crate::graph::Graph;
use crate::par;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// The k highest-degree nodes.
    #[default]
    Degree,
    /// k nodes uniformly without replacement.
    Uniform,
}

impl FromStr for SamplingMode {
    type Err = NesError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(SamplingMode::Degree),
            "uniform" => Ok(SamplingMode::Uniform),
            other => Err(NesError::InvalidArgument(format!(
                "sampling mode `{other}` (expected degree|uniform)"
            ))),
        }
    }
}

impl std::fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplingMode::Degree => "degree",
            SamplingMode::Uniform => "uniform",
        })
    }
}

fn check_k(g: &Graph, k: usize) -> Result<()> {
    if k == 0 || k > g.n() {
        return Err(NesError::SampleSize { k, n: g.n() });
    }
    Ok(())
}

/// The `k` nodes of highest degree, ties broken towards smaller index,
/// returned in ascending index order.
pub fn select_top_k_degree(g: &Graph, k: usize) -> Result<Vec<usize>> {
    check_k(g, k)?;
    // min-heap on (degree, reversed index): the root is the weakest kept node
    let mut heap: BinaryHeap<Reverse<(usize, Reverse<usize>)>> = BinaryHeap::with_capacity(k + 1);
    for i in 0..g.n() {
        heap.push(Reverse((g.degree(i), Reverse(i))));
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut c: Vec<usize> = heap.into_iter().map(|Reverse((_, Reverse(i)))| i).collect();
    c.sort_unstable();
    Ok(c)
}

/// `k` distinct nodes drawn uniformly, in ascending order.
pub fn select_uniform(g: &Graph, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(g, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = rand::seq::index::sample(&mut rng, g.n(), k).into_vec();
    c.sort_unstable();
    Ok(c)
}

pub fn select_nodes(g: &Graph, k: usize, mode: SamplingMode, seed: u64) -> Result<Vec<usize>> {
    match mode {
        SamplingMode::Degree => select_top_k_degree(g, k),
        SamplingMode::Uniform => select_uniform(g, k, seed),
    }
}

/// Sampled nodes with their normalized subgraph and related matrices.
#[derive(Clone, Debug)]
pub struct SubgraphSample {
    /// Sampled node indices; position `i` is subgraph node `i`.
    pub nodes: Vec<usize>,
    /// `k x k` subgraph transition matrix, rows summing to 1 (or all zero).
    pub subgraph: CsrMatrix,
    /// `k x n` related matrix, column `j` scaled by `1 / deg(j)`.
    pub related: CsrMatrix,
    /// Degrees inside the subgraph, before normalization.
    pub subgraph_degrees: Vec<usize>,
}

impl SubgraphSample {
    pub fn k(&self) -> usize {
        self.nodes.len()
    }

    /// Stored entries of the unnormalized subgraph adjacency.
    pub fn subgraph_volume(&self) -> usize {
        self.subgraph_degrees.iter().sum()
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# nodes {}", self.nodes.len())?;
        let list: Vec<String> = self.nodes.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", list.join(" "))?;
        self.subgraph.write_triplets(&mut w, "subgraph")?;
        self.related.write_triplets(&mut w, "related")?;
        Ok(())
    }
}

/// Extracts and normalizes the subgraph and related matrices for node set `c`.
pub fn build_sample(g: &Graph, c: &[usize]) -> Result<SubgraphSample> {
    let n = g.n();
    if c.is_empty() {
        return Err(NesError::InvalidNodes("empty node set".into()));
    }
    let mut position = vec![u32::MAX; n];
    for (i, &node) in c.iter().enumerate() {
        if node >= n {
            return Err(NesError::InvalidNodes(format!("node {node} outside 0..{n}")));
        }
        if position[node] != u32::MAX {
            return Err(NesError::InvalidNodes(format!("node {node} repeated")));
        }
        position[node] = i as u32;
    }
    let k = c.len();
    let inv_degree: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();

    let rows = par::map_indexed(k, |i| {
        let nbrs = g.neighbors(c[i]);
        let related: Vec<f64> = nbrs.iter().map(|&j| inv_degree[j as usize]).collect();
        let mut sub: Vec<u32> = nbrs
            .iter()
            .filter_map(|&j| match position[j as usize] {
                u32::MAX => None,
                p => Some(p),
            })
            .collect();
        sub.sort_unstable();
        (related, sub)
    });

    let mut r_indptr = vec![0usize];
    let mut r_indices = Vec::new();
    let mut r_values = Vec::new();
    let mut s_indptr = vec![0usize];
    let mut s_indices = Vec::new();
    let mut s_values = Vec::new();
    let mut degrees = Vec::with_capacity(k);
    for (i, (related, sub)) in rows.into_iter().enumerate() {
        r_indices.extend_from_slice(g.neighbors(c[i]));
        r_values.extend(related);
        r_indptr.push(r_indices.len());
        let w = if sub.is_empty() { 0.0 } else { 1.0 / sub.len() as f64 };
        degrees.push(sub.len());
        s_values.extend(std::iter::repeat_n(w, sub.len()));
        s_indices.extend(sub);
        s_indptr.push(s_indices.len());
    }
    Ok(SubgraphSample {
        nodes: c.to_vec(),
        subgraph: CsrMatrix::from_parts(k, k, s_indptr, s_indices, s_values)?,
        related: CsrMatrix::from_parts(k, n, r_indptr, r_indices, r_values)?,
        subgraph_degrees: degrees,
    })
}
