//! End-to-end runs of the `nes` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nes_core::format::{read_binary, read_text};
use nes_core::graph::Graph;
use nes_core::synth::chung_lu;

fn nes() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nes"));
    c.env_remove("NES_WORKERS").env("RUST_LOG", "error");
    c
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn graph_file(dir: &Path, n: usize) -> PathBuf {
    let g = chung_lu(n, 6.0, 2.5, 17).unwrap();
    let path = dir.join("graph.edges");
    let mut buf = Vec::new();
    g.write_edge_list(&mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    path
}

fn report_value(path: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from report:\n{text}"))
}

#[test]
fn triangle_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("k3.edges");
    std::fs::write(&input, "# triangle\n1 2\n2 3\n3 1\n").unwrap();
    let prefix = dir.path().join("k3");
    let stdout = ok(nes()
        .args(["embed", "-k", "3", "-d", "2", "-T", "1"])
        .arg("--input")
        .arg(&input)
        .arg("-o")
        .arg(&prefix)
        .output()
        .unwrap());
    assert!(stdout.contains("n=3 m=3"), "{stdout}");
    let (ids, emb) = read_text(
        std::fs::File::open(dir.path().join("k3.emb.txt"))
            .map(std::io::BufReader::new)
            .unwrap(),
    )
    .unwrap();
    assert_eq!(ids, vec![1, 2, 3]);
    assert_eq!(emb.rows(), 3);
    assert!(emb.dim() <= 2);
    assert!(emb.is_finite());
}

#[test]
fn embed_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = graph_file(dir.path(), 400);
    let labels = dir.path().join("labels.txt");
    let g = nes_core::graph::load_graph_file(&input, &Default::default()).unwrap().0;
    let label_text: String = g.ids().iter().take(50).map(|id| format!("{id} {}\n", id % 3)).collect();
    std::fs::write(&labels, label_text).unwrap();
    let prefix = dir.path().join("out/run");
    ok(nes()
        .args(["embed", "-k", "100", "-d", "16"])
        .arg("--input")
        .arg(&input)
        .arg("--labels")
        .arg(&labels)
        .arg("-o")
        .arg(&prefix)
        .output()
        .unwrap());
    let base = dir.path().join("out");
    let text = read_text(std::io::BufReader::new(
        std::fs::File::open(base.join("run.emb.txt")).unwrap(),
    ))
    .unwrap();
    let binary = read_binary(std::fs::File::open(base.join("run.emb.bin")).unwrap()).unwrap();
    assert_eq!(text.1.rows(), g.n());
    assert_eq!(text.0, g.ids());
    assert_eq!((binary.rows(), binary.dim()), (g.n(), 16));
    // text keeps six significant digits
    let worst = (&text.1.data - &binary.data).amax();
    assert!(worst <= 1e-5 * binary.data.amax().max(1.0), "text vs binary {worst}");
    let ids = std::fs::read_to_string(base.join("run.ids.txt")).unwrap();
    assert_eq!(ids.lines().count(), g.n());
    let report = base.join("run.report.kv");
    assert_eq!(report_value(&report, "k"), "100");
    assert_eq!(report_value(&report, "labeled_nodes"), "50");
    assert_eq!(report_value(&report, "d_effective"), "16");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = graph_file(dir.path(), 500);
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let prefix = dir.path().join(format!("r{i}"));
        ok(nes()
            .args([
                "embed",
                "-k",
                "200",
                "-d",
                "8",
                "--polynomial",
                "sampled",
                "--workers",
                workers,
            ])
            .arg("--input")
            .arg(&input)
            .arg("-o")
            .arg(&prefix)
            .output()
            .unwrap());
        outputs.push((
            std::fs::read(dir.path().join(format!("r{i}.emb.bin"))).unwrap(),
            std::fs::read(dir.path().join(format!("r{i}.emb.txt"))).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
    assert!(outputs[0] == outputs[2]);
}

#[test]
fn flags_override_config_file_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let input = graph_file(dir.path(), 300);
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# base settings\ninput = {}\nk = 50\nd = 4\nT = 3\nworkers = 2\noutput = {}\n",
            input.display(),
            dir.path().join("cfg").display()
        ),
    )
    .unwrap();
    ok(nes()
        .arg("embed")
        .arg("--config")
        .arg(&config)
        .args(["-k", "80"])
        .env("NES_WORKERS", "1")
        .output()
        .unwrap());
    let report = dir.path().join("cfg.report.kv");
    assert_eq!(report_value(&report, "k"), "80");
    assert_eq!(report_value(&report, "d_requested"), "4");
    assert_eq!(report_value(&report, "T"), "3");
    assert_eq!(report_value(&report, "workers"), "1");

    // without the environment variable the file value stands
    ok(nes().arg("embed").arg("--config").arg(&config).output().unwrap());
    assert_eq!(report_value(&report, "k"), "50");
    assert_eq!(report_value(&report, "workers"), "2");
}

#[test]
fn errors_exit_nonzero_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.edges");
    std::fs::write(&input, "1 2\n2 x\n").unwrap();
    let out = nes()
        .args(["embed", "-k", "2"])
        .arg("--input")
        .arg(&input)
        .arg("-o")
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("io"), "{stderr}");
    assert!(stderr.contains("line 2"), "{stderr}");

    let good = graph_file(dir.path(), 100);
    let out = nes()
        .args(["embed", "-k", "5000"])
        .arg("--input")
        .arg(&good)
        .arg("-o")
        .arg(dir.path().join("big"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sampling"), "{stderr}");

    let out = nes().args(["embed", "-k", "5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("input"));
}

#[test]
fn sweep_writes_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let input = graph_file(dir.path(), 300);
    let table = dir.path().join("sweep.tsv");
    ok(nes()
        .args(["sweep", "--ks", "40,80", "-d", "8"])
        .arg("--input")
        .arg(&input)
        .arg("-o")
        .arg(dir.path().join("sw"))
        .arg("--table")
        .arg(&table)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k\tembedding\tmicro_f1\twall_ms");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("40\t") && lines[2].starts_with("80\t"));
    assert!(dir.path().join("sw.k40.emb.txt").exists());
    assert!(dir.path().join("sw.k80.emb.bin").exists());

    let stdout = ok(nes()
        .args(["sweep", "--ks", "60", "-d", "4"])
        .arg("--input")
        .arg(&input)
        .arg("-o")
        .arg(dir.path().join("one"))
        .output()
        .unwrap());
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn cache_round_trips_and_embeds_identically() {
    let dir = tempfile::tempdir().unwrap();
    let input = graph_file(dir.path(), 300);
    let cache = dir.path().join("graph.bin");
    let stdout = ok(nes()
        .arg("cache")
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&cache)
        .output()
        .unwrap());
    assert!(stdout.contains("undirected_edges="));
    let text_graph = nes_core::graph::load_graph_file(&input, &Default::default()).unwrap().0;
    let cached: Graph = nes_core::graph::load_graph_file(&cache, &Default::default()).unwrap().0;
    assert_eq!(text_graph, cached);
    for (src, name) in [(&input, "a"), (&cache, "b")] {
        ok(nes()
            .args(["embed", "-k", "60", "-d", "4"])
            .arg("--input")
            .arg(src)
            .arg("-o")
            .arg(dir.path().join(name))
            .output()
            .unwrap());
    }
    assert_eq!(
        std::fs::read(dir.path().join("a.emb.bin")).unwrap(),
        std::fs::read(dir.path().join("b.emb.bin")).unwrap()
    );
}

#[test]
fn generate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        ok(nes()
            .args(["generate", "--nodes", "500", "--seed", "4"])
            .arg("--output")
            .arg(&path)
            .output()
            .unwrap());
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.edges"), run("b.edges"));
}

#[test]
fn dump_sample_lists_selected_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let input = graph_file(dir.path(), 200);
    let dump = dir.path().join("sample.txt");
    ok(nes()
        .args(["embed", "-k", "20", "-d", "4"])
        .arg("--input")
        .arg(&input)
        .arg("-o")
        .arg(dir.path().join("d"))
        .arg("--dump-sample")
        .arg(&dump)
        .output()
        .unwrap());
    assert!(!std::fs::read_to_string(&dump).unwrap().is_empty());
}
