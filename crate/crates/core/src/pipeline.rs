//! End-to-end driver: load, sample, sparsify, factorize, project, write.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::embedding::{build_mg, build_mr, compute_embedding, EmbeddingMatrix};
use crate::error::{NesError, Result};
use crate::factorization::{rtsvd, RtsvdConfig};
use crate::format;
use crate::graph::{load_graph_file, load_labels, Graph, LoadOptions};
use crate::par;
use crate::sampling::{build_sample, select_nodes, SamplingMode};
use crate::sparsifier::{sparsify, PolynomialMethod, PolynomialMode, WalkPolynomialConfig};

pub const DEFAULT_SEED: u64 = 0x4e45_5321;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedConfig {
    pub dim: usize,
    pub window: usize,
    pub negative: f64,
    /// Sample size; 0 means unset.
    pub k: usize,
    pub sampling: SamplingMode,
    pub seed: u64,
    pub samples: Option<usize>,
    pub polynomial: PolynomialMode,
    pub exact_threshold: usize,
    pub trailing_degree_scaling: bool,
    pub oversample: usize,
    pub power_iters: usize,
    /// Worker threads; 0 means all cores.
    pub workers: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 128,
            window: 10,
            negative: 1.0,
            k: 0,
            sampling: SamplingMode::Degree,
            seed: DEFAULT_SEED,
            samples: None,
            polynomial: PolynomialMode::Auto,
            exact_threshold: 512,
            trailing_degree_scaling: true,
            oversample: 10,
            power_iters: 2,
            workers: 0,
        }
    }
}

impl EmbedConfig {
    pub fn with_k(k: usize) -> Self {
        EmbedConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(NesError::Config("sample size k is required".into()));
        }
        if self.dim == 0 || self.window == 0 {
            return Err(NesError::Config("d and T must be positive".into()));
        }
        if !(self.negative > 0.0) || !self.negative.is_finite() {
            return Err(NesError::Config(format!("b must be positive, got {}", self.negative)));
        }
        Ok(())
    }

    fn walk_config(&self) -> WalkPolynomialConfig {
        WalkPolynomialConfig {
            window: self.window,
            samples: self.samples,
            seed: derive_seed(self.seed, 1),
            exact_threshold: self.exact_threshold,
            mode: self.polynomial,
            trailing_degree_scaling: self.trailing_degree_scaling,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| NesError::Config(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "k" => self.k = num(key, value)?,
            "d" | "dim" => self.dim = num(key, value)?,
            "T" | "window" => self.window = num(key, value)?,
            "b" | "negative" => self.negative = num(key, value)?,
            "samples" => self.samples = Some(num(key, value)?),
            "sampling" | "sampling_mode" => self.sampling = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "polynomial" => self.polynomial = value.parse()?,
            "exact_threshold" => self.exact_threshold = num(key, value)?,
            "trailing_degree_scaling" => self.trailing_degree_scaling = num(key, value)?,
            "oversample" => self.oversample = num(key, value)?,
            "power_iters" => self.power_iters = num(key, value)?,
            other => return Err(NesError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

fn derive_seed(seed: u64, stage: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(stage.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-stage wall time in milliseconds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub sampling: f64,
    pub sparsify: f64,
    pub build_mg: f64,
    pub rtsvd: f64,
    pub build_mr: f64,
    pub embed: f64,
    pub io: f64,
}

impl StageTimings {
    pub fn stages(&self) -> [(&'static str, f64); 7] {
        [
            ("sampling", self.sampling),
            ("sparsify", self.sparsify),
            ("build_mg", self.build_mg),
            ("rtsvd", self.rtsvd),
            ("build_mr", self.build_mr),
            ("embed", self.embed),
            ("io", self.io),
        ]
    }

    pub fn sum(&self) -> f64 {
        self.stages().iter().map(|s| s.1).sum()
    }

    /// Everything after subgraph sampling, excluding file i/o.
    pub fn after_sampling(&self) -> f64 {
        self.sparsify + self.build_mg + self.rtsvd + self.build_mr + self.embed
    }
}

fn timed<T>(slot: &mut f64, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.at_stage(stage));
    *slot += start.elapsed().as_secs_f64() * 1e3;
    out
}

/// Result of [`embed`].
#[derive(Clone, Debug)]
pub struct EmbedOutput {
    pub embedding: EmbeddingMatrix,
    pub nodes: Vec<usize>,
    pub method: PolynomialMethod,
    pub polynomial_nnz: usize,
    pub mg_nnz: usize,
    pub mr_nnz: usize,
    pub sigma: Vec<f64>,
    pub requested_dim: usize,
    pub timings: StageTimings,
}

impl EmbedOutput {
    pub fn effective_dim(&self) -> usize {
        self.embedding.dim()
    }
}

/// Runs the in-memory pipeline on `g`.
pub fn embed(g: &Graph, cfg: &EmbedConfig) -> Result<EmbedOutput> {
    cfg.validate()?;
    par::with_workers(cfg.workers, || embed_inner(g, cfg))
}

fn embed_inner(g: &Graph, cfg: &EmbedConfig) -> Result<EmbedOutput> {
    let mut t = StageTimings::default();
    let volume = g.volume();
    let sample = timed(&mut t.sampling, "sampling", || {
        let nodes = select_nodes(g, cfg.k, cfg.sampling, derive_seed(cfg.seed, 0))?;
        build_sample(g, &nodes)
    })?;
    let (poly, method) = timed(&mut t.sparsify, "sparsify", || sparsify(&sample, &cfg.walk_config()))?;
    let mg = timed(&mut t.build_mg, "build_mg", || {
        build_mg(&poly, volume, cfg.window, cfg.negative)
    })?;
    let requested_dim = cfg.dim.min(sample.k());
    if requested_dim < cfg.dim {
        log::info!("d capped from {} to k = {}", cfg.dim, sample.k());
    }
    let factors = timed(&mut t.rtsvd, "rtsvd", || {
        rtsvd(
            &mg,
            &RtsvdConfig {
                rank: requested_dim,
                oversample: cfg.oversample,
                power_iters: cfg.power_iters,
                seed: derive_seed(cfg.seed, 2),
            },
        )
    })?;
    let mr = timed(&mut t.build_mr, "build_mr", || {
        build_mr(&sample.related, &poly, volume, cfg.window, cfg.negative)
    })?;
    let embedding = timed(&mut t.embed, "embed", || compute_embedding(&mr, &factors))?;
    Ok(EmbedOutput {
        embedding,
        nodes: sample.nodes,
        method,
        polynomial_nnz: poly.nnz(),
        mg_nnz: mg.nnz(),
        mr_nnz: mr.nnz(),
        sigma: factors.sigma,
        requested_dim,
        timings: t,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub embed: EmbedConfig,
    pub input: PathBuf,
    pub labels: Option<PathBuf>,
    pub output_prefix: PathBuf,
    /// Key-value report; defaults to `<prefix>.report.kv`.
    pub report: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, output_prefix: impl Into<PathBuf>, embed: EmbedConfig) -> Self {
        RunConfig {
            embed,
            input: input.into(),
            labels: None,
            output_prefix: output_prefix.into(),
            report: None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input" => self.input = value.into(),
            "labels" => self.labels = Some(value.into()),
            "output" | "output_prefix" => self.output_prefix = value.into(),
            "report" => self.report = Some(value.into()),
            _ => return self.embed.set(key, value),
        }
        Ok(())
    }

    fn with_suffix(&self, suffix: &str) -> PathBuf {
        let mut s = self.output_prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }

    pub fn text_path(&self) -> PathBuf {
        self.with_suffix(".emb.txt")
    }

    pub fn binary_path(&self) -> PathBuf {
        self.with_suffix(".emb.bin")
    }

    pub fn ids_path(&self) -> PathBuf {
        self.with_suffix(".ids.txt")
    }

    pub fn report_path(&self) -> PathBuf {
        self.report.clone().unwrap_or_else(|| self.with_suffix(".report.kv"))
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| NesError::Parse {
            line: i + 1,
            message: "expected `key = value`".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: RunConfig,
    pub timings: StageTimings,
    pub total_ms: f64,
    pub n: usize,
    pub undirected_edges: usize,
    pub directed_entries: usize,
    pub labeled_nodes: Option<usize>,
    pub method: PolynomialMethod,
    pub polynomial_nnz: usize,
    pub mg_nnz: usize,
    pub mr_nnz: usize,
    pub requested_dim: usize,
    pub effective_dim: usize,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn sample_fraction(&self) -> f64 {
        self.config.embed.k as f64 / self.n as f64
    }

    /// Share of total wall time spent selecting and extracting the subgraph.
    pub fn sampling_share(&self) -> f64 {
        self.timings.sampling / self.total_ms
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let c = &self.config.embed;
        let method = match self.method {
            PolynomialMethod::Exact => "exact".to_string(),
            PolynomialMethod::Sampled { samples } => format!("sampled:{samples}"),
            PolynomialMethod::Empty => "empty".to_string(),
        };
        let mut p: Vec<(String, String)> = vec![
            ("input".into(), self.config.input.display().to_string()),
            (
                "labels".into(),
                self.config
                    .labels
                    .as_ref()
                    .map(|l| l.display().to_string())
                    .unwrap_or_default(),
            ),
            ("n".into(), self.n.to_string()),
            ("m_undirected".into(), self.undirected_edges.to_string()),
            ("m_directed_entries".into(), self.directed_entries.to_string()),
            ("k".into(), c.k.to_string()),
            ("sample_fraction".into(), format!("{:.6}", self.sample_fraction())),
            ("d_requested".into(), c.dim.to_string()),
            ("d_effective".into(), self.effective_dim.to_string()),
            ("T".into(), c.window.to_string()),
            ("b".into(), c.negative.to_string()),
            ("sampling_mode".into(), c.sampling.to_string()),
            ("seed".into(), c.seed.to_string()),
            ("workers".into(), c.workers.to_string()),
            ("polynomial".into(), method),
            ("nnz_polynomial".into(), self.polynomial_nnz.to_string()),
            ("nnz_mg".into(), self.mg_nnz.to_string()),
            ("nnz_mr".into(), self.mr_nnz.to_string()),
        ];
        if let Some(l) = self.labeled_nodes {
            p.push(("labeled_nodes".into(), l.to_string()));
        }
        for (name, ms) in self.timings.stages() {
            p.push((format!("time_{name}_ms"), format!("{ms:.3}")));
        }
        p.push(("time_total_ms".into(), format!("{:.3}", self.total_ms)));
        p.push(("share_sampling".into(), format!("{:.6}", self.sampling_share())));
        p.push((
            "share_after_sampling".into(),
            format!("{:.6}", 1.0 - self.sampling_share()),
        ));
        for (i, o) in self.outputs.iter().enumerate() {
            p.push((format!("output_{i}"), o.display().to_string()));
        }
        p
    }

    pub fn to_key_value(&self) -> String {
        self.pairs().into_iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }

    pub fn to_text(&self) -> String {
        let c = &self.config.embed;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "graph      n={} m={} (directed entries {})",
            self.n, self.undirected_edges, self.directed_entries
        );
        let _ = writeln!(
            s,
            "sample     k={} ({:.2}% of nodes, {})",
            c.k,
            100.0 * self.sample_fraction(),
            c.sampling
        );
        let _ = writeln!(
            s,
            "embedding  d={} (requested {}), T={}, b={}",
            self.effective_dim, c.dim, c.window, c.negative
        );
        let _ = writeln!(s, "stages (ms):");
        for (name, ms) in self.timings.stages() {
            let _ = writeln!(s, "  {name:<10} {ms:>12.3}");
        }
        let _ = writeln!(s, "  {:<10} {:>12.3}", "total", self.total_ms);
        let _ = writeln!(
            s,
            "decomposition: subgraph sampling {:.2}%, embedding from subgraph and i/o {:.2}%",
            100.0 * self.sampling_share(),
            100.0 * (1.0 - self.sampling_share())
        );
        for o in &self.outputs {
            let _ = writeln!(s, "wrote {}", o.display());
        }
        s
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Full run from files. Every error is tagged with the failing stage.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    cfg.embed.validate()?;
    let mut io_ms = 0.0;
    let (g, stats) = timed(&mut io_ms, "io", || {
        load_graph_file(&cfg.input, &LoadOptions::default())
    })?;
    let labeled_nodes = match &cfg.labels {
        Some(path) => Some(timed(&mut io_ms, "io", || {
            let l = load_labels(BufReader::new(File::open(path)?), &g)?;
            Ok(l.labeled_nodes())
        })?),
        None => None,
    };
    let out = embed(&g, &cfg.embed)?;
    let outputs = vec![cfg.text_path(), cfg.binary_path(), cfg.ids_path(), cfg.report_path()];
    timed(&mut io_ms, "io", || {
        let mut w = create(&cfg.text_path())?;
        format::write_text(&out.embedding, g.ids(), &mut w)?;
        w.flush()?;
        let mut w = create(&cfg.binary_path())?;
        format::write_binary(&out.embedding, &mut w)?;
        w.flush()?;
        let mut w = create(&cfg.ids_path())?;
        g.write_id_map(&mut w)?;
        w.flush()?;
        Ok(())
    })?;
    let mut timings = out.timings.clone();
    timings.io = io_ms;
    let mut report = RunReport {
        config: cfg.clone(),
        timings,
        total_ms: 0.0,
        n: g.n(),
        undirected_edges: stats.undirected_edges,
        directed_entries: stats.directed_entries,
        labeled_nodes,
        method: out.method,
        polynomial_nnz: out.polynomial_nnz,
        mg_nnz: out.mg_nnz,
        mr_nnz: out.mr_nnz,
        requested_dim: out.requested_dim,
        effective_dim: out.effective_dim(),
        outputs,
    };
    let report_start = Instant::now();
    report.total_ms = start.elapsed().as_secs_f64() * 1e3;
    let text = report.to_key_value();
    (|| -> Result<()> {
        let mut w = create(&cfg.report_path())?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    })()
    .map_err(|e| e.at_stage("io"))?;
    let report_ms = report_start.elapsed().as_secs_f64() * 1e3;
    report.timings.io += report_ms;
    report.total_ms += report_ms;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub embedding: PathBuf,
    pub wall_ms: f64,
}

/// Runs the pipeline once per `k`, writing outputs to `<prefix>.k<k>.*`.
pub fn timing_sweep(base: &RunConfig, ks: &[usize]) -> Result<Vec<SweepRow>> {
    if ks.is_empty() {
        return Err(NesError::Config("empty k grid".into()));
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut cfg = base.clone();
        cfg.embed.k = k;
        let mut prefix = base.output_prefix.clone().into_os_string();
        prefix.push(format!(".k{k}"));
        cfg.output_prefix = prefix.into();
        cfg.report = None;
        let report = run(&cfg)?;
        rows.push(SweepRow {
            k,
            embedding: cfg.text_path(),
            wall_ms: report.total_ms,
        });
    }
    Ok(rows)
}

/// Tab-separated sweep table. The F1 column is filled by the evaluator.
pub fn write_sweep_table<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "k\tembedding\tmicro_f1\twall_ms")?;
    for r in rows {
        writeln!(w, "{}\t{}\tNA\t{:.3}", r.k, r.embedding.display(), r.wall_ms)?;
    }
    Ok(())
}
