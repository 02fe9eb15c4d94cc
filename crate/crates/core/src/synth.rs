//! Seeded synthetic graphs for tests, benchmarks and scaling runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NesError, Result};
use crate::graph::Graph;

/// Erdős–Rényi `G(n, p)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Chung–Lu graph with power-law expected degrees `w_i ~ (i + 1)^{-1/(gamma-1)}`
/// scaled to `avg_degree`. `n * avg_degree / 2` endpoint pairs are drawn
/// proportional to the weights; self-loops and repeats collapse, so the
/// realized average degree is slightly lower.
pub fn chung_lu(n: usize, avg_degree: f64, gamma: f64, seed: u64) -> Result<Graph> {
    if n < 2 || !(avg_degree > 0.0) || !(gamma > 2.0) {
        return Err(NesError::InvalidArgument(format!(
            "chung_lu needs n >= 2, avg_degree > 0, gamma > 2 (got {n}, {avg_degree}, {gamma})"
        )));
    }
    let exponent = -1.0 / (gamma - 1.0);
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        total += ((i + 1) as f64).powf(exponent);
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let x = rng.random::<f64>() * total;
        cumulative.partition_point(|&c| c <= x).min(n - 1)
    };
    let pairs = (n as f64 * avg_degree / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        edges.push((u, v));
    }
    // spread hubs over the id range so index order carries no degree signal
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    Graph::from_edges(n, edges.into_iter().map(|(u, v)| (perm[u], perm[v])))
}
