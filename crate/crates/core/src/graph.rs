//! Immutable undirected graphs, edge-list and label loading, binary cache.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use crate::error::{NesError, Result};
use crate::sparse::CsrMatrix;

const CACHE_MAGIC: &[u8; 8] = b"NESGRAPH";
const CACHE_VERSION: u8 = 1;

/// Simple undirected graph stored as a symmetric 0/1 pattern in row
/// compressed form. Node `i` corresponds to original id `ids[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    ids: Vec<u64>,
}

/// Counts collected while reading an edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub edge_lines: usize,
    pub self_loops_dropped: usize,
    /// Stored adjacency entries, i.e. both directions of each edge.
    pub directed_entries: usize,
    pub undirected_edges: usize,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// Lines whose first non-blank character is this are skipped.
    pub comment: char,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { comment: '#' }
    }
}

impl Graph {
    /// Builds a graph on nodes `0..n` with identity ids. Self-loops are
    /// dropped and duplicate edges collapsed.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut entries = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(NesError::InvalidArgument(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            if u != v {
                entries.push((u as u32, v as u32));
                entries.push((v as u32, u as u32));
            }
        }
        Ok(Graph::from_entries(n, entries, (0..n as u64).collect()))
    }

    fn from_entries(n: usize, mut entries: Vec<(u32, u32)>, ids: Vec<u64>) -> Graph {
        entries.sort_unstable();
        entries.dedup();
        let mut indptr = vec![0usize; n + 1];
        for &(u, _) in &entries {
            indptr[u as usize + 1] += 1;
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        let indices = entries.into_iter().map(|(_, v)| v).collect();
        Graph { indptr, indices, ids }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Undirected edge count.
    pub fn m(&self) -> usize {
        self.indices.len() / 2
    }

    /// Number of stored adjacency entries (`2m`).
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.indptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Sum of all adjacency entries.
    pub fn volume(&self) -> f64 {
        self.indices.len() as f64
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn original_id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    /// Index of an original id, if present.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
    }

    /// Adjacency as a 0/1 real matrix.
    pub fn adjacency(&self) -> CsrMatrix {
        CsrMatrix::from_parts(
            self.n(),
            self.n(),
            self.indptr.clone(),
            self.indices.clone(),
            vec![1.0; self.indices.len()],
        )
        .expect("graph structure is valid csr")
    }

    /// Writes `u v` lines in original ids, one per undirected edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", self.ids[u], self.ids[v])?;
        }
        Ok(())
    }

    /// Writes `index original_id` lines.
    pub fn write_id_map<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, id) in self.ids.iter().enumerate() {
            writeln!(w, "{i} {id}")?;
        }
        Ok(())
    }

    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&[CACHE_VERSION])?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.nnz() as u64).to_le_bytes())?;
        for id in &self.ids {
            w.write_all(&id.to_le_bytes())?;
        }
        for &p in &self.indptr {
            w.write_all(&(p as u64).to_le_bytes())?;
        }
        for &c in &self.indices {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a cache written by [`Graph::write_cache`] and re-validates it.
    pub fn read_cache<R: Read>(mut r: R) -> Result<Graph> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(NesError::Format("not a graph cache".into()));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version)?;
        if version[0] != CACHE_VERSION {
            return Err(NesError::Format(format!("unsupported cache version {}", version[0])));
        }
        let n = read_u64(&mut r)? as usize;
        let nnz = read_u64(&mut r)? as usize;
        let ids = (0..n).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
        let indptr = (0..=n)
            .map(|_| read_u64(&mut r).map(|x| x as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut indices = Vec::with_capacity(nnz);
        let mut buf = [0u8; 4];
        for _ in 0..nnz {
            r.read_exact(&mut buf)?;
            indices.push(u32::from_le_bytes(buf));
        }
        let g = Graph { indptr, indices, ids };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.indptr.len() != n + 1 || self.indptr[0] != 0 || self.indptr[n] != self.indices.len() {
            return Err(NesError::Format("inconsistent adjacency offsets".into()));
        }
        if self.ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NesError::Format("node ids not strictly increasing".into()));
        }
        for u in 0..n {
            if self.indptr[u] > self.indptr[u + 1] {
                return Err(NesError::Format("adjacency offsets not monotone".into()));
            }
            let row = self.neighbors(u);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(NesError::Format(format!("row {u} not sorted")));
            }
            for &v in row {
                let v = v as usize;
                if v >= n || v == u || !self.has_edge(v, u) {
                    return Err(NesError::Format(format!("bad entry ({u}, {v})")));
                }
            }
        }
        Ok(())
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Parses a whitespace-separated edge list. Node ids are remapped to
/// `0..n` in ascending order of original id, so the result does not depend
/// on line order.
pub fn load_edge_list<R: BufRead>(reader: R, opts: &LoadOptions) -> Result<(Graph, LoadStats)> {
    let mut stats = LoadStats::default();
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        stats.lines += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(opts.comment) {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let parse = |f: Option<&str>| -> Result<u64> {
            let f = f.ok_or_else(|| NesError::Parse {
                line: lineno + 1,
                message: "expected two node ids".into(),
            })?;
            f.parse::<u64>().map_err(|e| NesError::Parse {
                line: lineno + 1,
                message: format!("bad node id `{f}`: {e}"),
            })
        };
        let u = parse(fields.next())?;
        let v = parse(fields.next())?;
        if let Some(extra) = fields.next() {
            return Err(NesError::Parse {
                line: lineno + 1,
                message: format!("unexpected field `{extra}`"),
            });
        }
        stats.edge_lines += 1;
        if u == v {
            stats.self_loops_dropped += 1;
            continue;
        }
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(NesError::EmptyGraph);
    }
    let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > u32::MAX as usize {
        return Err(NesError::InvalidArgument("too many nodes".into()));
    }
    let index = |id: u64| ids.binary_search(&id).expect("id collected above") as u32;
    let mut entries = Vec::with_capacity(raw.len() * 2);
    for (u, v) in raw {
        let (a, b) = (index(u), index(v));
        entries.push((a, b));
        entries.push((b, a));
    }
    let n = ids.len();
    let g = Graph::from_entries(n, entries, ids);
    stats.directed_entries = g.nnz();
    stats.undirected_edges = g.m();
    Ok((g, stats))
}

/// Loads either a binary cache or a text edge list, detected by magic.
pub fn load_graph_file(path: &std::path::Path, opts: &LoadOptions) -> Result<(Graph, LoadStats)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let head = file.fill_buf()?;
    if head.starts_with(CACHE_MAGIC) {
        let g = Graph::read_cache(file)?;
        let stats = LoadStats {
            directed_entries: g.nnz(),
            undirected_edges: g.m(),
            ..LoadStats::default()
        };
        return Ok((g, stats));
    }
    load_edge_list(file, opts)
}

/// Multi-label assignment, indexed by graph node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLabels {
    pub labels: Vec<Vec<u32>>,
    pub num_labels: usize,
}

impl NodeLabels {
    pub fn labeled_nodes(&self) -> usize {
        self.labels.iter().filter(|l| !l.is_empty()).count()
    }
}

/// Parses `node_id label_id [label_id ...]` lines against `g`'s id map.
/// Label ids are remapped to `0..num_labels` in ascending order.
pub fn load_labels<R: BufRead>(reader: R, g: &Graph) -> Result<NodeLabels> {
    let mut raw: Vec<(usize, Vec<u64>)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace().map(|f| {
            f.parse::<u64>().map_err(|e| NesError::Parse {
                line: lineno + 1,
                message: format!("bad id `{f}`: {e}"),
            })
        });
        let node = fields.next().expect("non-empty line")?;
        let idx = g.index_of(node).ok_or(NesError::UnknownLabelNode(node))?;
        let labels = fields.collect::<Result<Vec<_>>>()?;
        if labels.is_empty() {
            return Err(NesError::Parse {
                line: lineno + 1,
                message: "node without labels".into(),
            });
        }
        raw.push((idx, labels));
    }
    let mut label_ids: Vec<u64> = raw.iter().flat_map(|(_, l)| l.iter().copied()).collect();
    label_ids.sort_unstable();
    label_ids.dedup();
    let remap: HashMap<u64, u32> = label_ids.iter().enumerate().map(|(i, &l)| (l, i as u32)).collect();
    let mut labels = vec![Vec::new(); g.n()];
    for (idx, ls) in raw {
        labels[idx].extend(ls.iter().map(|l| remap[l]));
        labels[idx].sort_unstable();
        labels[idx].dedup();
    }
    Ok(NodeLabels {
        labels,
        num_labels: label_ids.len(),
    })
}
