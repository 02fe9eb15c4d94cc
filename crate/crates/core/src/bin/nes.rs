use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nes_core::graph::{load_graph_file, LoadOptions};
use nes_core::pipeline::{parse_key_values, run, timing_sweep, write_sweep_table, RunConfig};
use nes_core::sampling::{build_sample, select_nodes};
use nes_core::{synth, NesError};

#[derive(Parser)]
#[command(name = "nes", version, about = "Network embedding from a representative subgraph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a graph and write text, binary and id-map outputs.
    Embed(RunArgs),
    /// Run the pipeline over a grid of sample sizes.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        /// Where to write the tab-separated table (stdout if absent).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Convert an edge list into the binary graph cache.
    Cache {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a seeded synthetic power-law edge list.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 10.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 2.5)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Key-value config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge list or binary graph cache.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Label file, checked against the graph and recorded in the report.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Sample size.
    #[arg(short)]
    k: Option<usize>,
    /// Embedding dimension.
    #[arg(short)]
    d: Option<usize>,
    /// Context window size.
    #[arg(short = 'T', long = "window")]
    window: Option<usize>,
    /// Negative samples.
    #[arg(short)]
    b: Option<f64>,
    /// Path samples for the sparsifier.
    #[arg(long)]
    samples: Option<usize>,
    /// degree | uniform
    #[arg(long)]
    sampling: Option<String>,
    /// Base seed for uniform sampling, path sampling and the sketch.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "NES_WORKERS")]
    workers: Option<usize>,
    /// auto | exact | sampled
    #[arg(long)]
    polynomial: Option<String>,
    /// Drop the trailing subgraph-degree scaling of the walk polynomial.
    #[arg(long)]
    no_trailing_scaling: bool,
    /// Output prefix.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Key-value report path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also dump the sampled nodes and subgraph/related matrices here.
    #[arg(long)]
    dump_sample: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, NesError> {
        let mut cfg = RunConfig::new("", "nes", Default::default());
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            for (k, v) in parse_key_values(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let flags: [(&str, Option<String>); 13] = [
            ("input", path(&self.input)),
            ("labels", path(&self.labels)),
            ("k", self.k.map(|x| x.to_string())),
            ("d", self.d.map(|x| x.to_string())),
            ("T", self.window.map(|x| x.to_string())),
            ("b", self.b.map(|x| x.to_string())),
            ("samples", self.samples.map(|x| x.to_string())),
            ("sampling", self.sampling.clone()),
            ("seed", self.seed.map(|x| x.to_string())),
            ("workers", self.workers.map(|x| x.to_string())),
            ("polynomial", self.polynomial.clone()),
            ("output", path(&self.output)),
            ("report", path(&self.report)),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.no_trailing_scaling {
            cfg.embed.trailing_degree_scaling = false;
        }
        if cfg.input.as_os_str().is_empty() {
            return Err(NesError::Config("input path is required".into()));
        }
        Ok(cfg)
    }

    fn dump(&self, cfg: &RunConfig) -> Result<(), NesError> {
        let Some(path) = &self.dump_sample else {
            return Ok(());
        };
        let (g, _) = load_graph_file(&cfg.input, &LoadOptions::default())?;
        let nodes = select_nodes(&g, cfg.embed.k, cfg.embed.sampling, cfg.embed.seed)?;
        let sample = build_sample(&g, &nodes)?;
        let mut w = BufWriter::new(File::create(path)?);
        sample.write_dump(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<(), NesError> {
    match cli.command {
        Command::Embed(args) => {
            let cfg = args.resolve()?;
            let report = run(&cfg)?;
            args.dump(&cfg)?;
            print!("{}", report.to_text());
        }
        Command::Sweep { run: args, ks, table } => {
            let cfg = args.resolve()?;
            let rows = timing_sweep(&cfg, &ks)?;
            match table {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(&path)?);
                    write_sweep_table(&rows, &mut w)?;
                    w.flush()?;
                }
                None => write_sweep_table(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Cache { input, output } => {
            let (g, stats) = load_graph_file(&input, &LoadOptions::default())?;
            let mut w = BufWriter::new(File::create(&output)?);
            g.write_cache(&mut w)?;
            w.flush()?;
            println!(
                "n={} undirected_edges={} directed_entries={} self_loops_dropped={}",
                g.n(),
                stats.undirected_edges,
                stats.directed_entries,
                stats.self_loops_dropped
            );
        }
        Command::Generate {
            nodes,
            avg_degree,
            gamma,
            seed,
            output,
        } => {
            let g = synth::chung_lu(nodes, avg_degree, gamma, seed)?;
            let mut w = BufWriter::new(File::create(&output)?);
            g.write_edge_list(&mut w)?;
            w.flush()?;
            println!("n={} m={}", g.n(), g.m());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
