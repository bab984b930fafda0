use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wbp::experiment::{
    read_table, CcdfRow, PmfRow, RankRow, SampleRow, Summary, CCDF_SCHEMA, PMF_SCHEMA,
    RANKS_SCHEMA, SAMPLES_SCHEMA,
};
use wbp::graph::DirectedGraph;

fn wbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("experiment.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const POISSON_MODEL: &str =
    "[model]\nn = 'poisson(1.2)'\nq = 'exponential(1)'\nc = 'uniform(0,1)'\n";

fn run_ok(args: &[&str]) -> Output {
    let out = wbp(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{POISSON_MODEL}[simulate]\nreplicas = 3000\n"),
    );
    let outs: Vec<_> = ["a", "b", "c"].iter().map(|d| dir.path().join(d)).collect();
    for (o, w) in outs.iter().zip(["1", "1", "8"]) {
        run_ok(&[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            "9",
            "--workers",
            w,
            "--out",
            o.to_str().unwrap(),
        ]);
    }
    let bytes = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(
        bytes(&outs[0], "samples.csv"),
        bytes(&outs[1], "samples.csv")
    );
    assert_eq!(
        bytes(&outs[0], "samples.csv"),
        bytes(&outs[2], "samples.csv")
    );
    assert_eq!(bytes(&outs[0], "ccdf.csv"), bytes(&outs[2], "ccdf.csv"));
    let s1 = Summary::read(&outs[0].join("summary.json")).unwrap();
    let s8 = Summary::read(&outs[2].join("summary.json")).unwrap();
    assert_eq!(s1.numbers(), s8.numbers());
    assert_eq!(s1.get_f64("seed"), Some(9.0));
    assert!(s1.0.contains_key("config_hash") && s1.0.contains_key("version"));

    let rows: Vec<SampleRow> = read_table(&outs[0].join("samples.csv"), SAMPLES_SCHEMA).unwrap();
    assert_eq!(rows.len(), 3000);
    assert!(rows
        .iter()
        .enumerate()
        .all(|(i, r)| r.replica_id == i as u64 && r.bias_bound < 1e-6));
    let ccdf: Vec<CcdfRow> = read_table(&outs[0].join("ccdf.csv"), CCDF_SCHEMA).unwrap();
    assert!(!ccdf.is_empty());
}

#[test]
fn different_seeds_give_different_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{POISSON_MODEL}[simulate]\nreplicas = 100\n"),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "1",
        "--out",
        a.to_str().unwrap(),
    ]);
    run_ok(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "2",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_ne!(
        fs::read(a.join("samples.csv")).unwrap(),
        fs::read(b.join("samples.csv")).unwrap()
    );
}

#[test]
fn estimate_reads_back_its_own_samples() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let cfg = write_config(
        dir.path(),
        // small C keeps R's tail essentially that of Q
        "[model]\nn = 'constant(1)'\nq = 'pareto(2,1)'\nc = 'constant(0.01)'\n[simulate]\nreplicas = 20000\n",
    );
    run_ok(&["simulate", "--config", &cfg, "--out", sim.to_str().unwrap()]);
    let samples = sim.join("samples.csv");
    let cfg2 = write_config(
        dir.path(),
        &format!(
            "[estimate]\ninput = {:?}\nhill_k = 500\n",
            samples.to_str().unwrap()
        ),
    );
    let est = dir.path().join("est");
    run_ok(&[
        "estimate",
        "--config",
        &cfg2,
        "--out",
        est.to_str().unwrap(),
    ]);
    let s = Summary::read(&est.join("summary.json")).unwrap();
    let alpha = s.get_f64("hill.alpha").unwrap();
    assert!((1.6..2.4).contains(&alpha), "{alpha}");
    assert_eq!(s.get_f64("hill.k"), Some(500.0));
    assert!(s.get_f64("slope.value").is_some());
}

#[test]
fn unstable_model_exits_nonzero_naming_rho() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nn = 'constant(3)'\nq = 'constant(1)'\nc = 'constant(0.5)'\n[simulate]\ndepth_cap = 4\n",
    );
    let out = wbp(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ρ") && err.contains("1.5"), "{err}");
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{POISSON_MODEL}[simulate]\nreplicas = 10\ncolour = 'red'\n"),
    );
    let out = wbp(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert!(!dir.path().join("o").join("samples.csv").exists());
}

#[test]
fn theory_reports_regime_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nn = 'constant(1)'\nq = 'pareto(2,1)'\nc = 'constant(0.5)'\n[theory]\nfinite_n = 3\n",
    );
    let out = run_ok(&[
        "theory",
        "--config",
        &cfg,
        "--out",
        dir.path().join("t").to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("QDominant"));
    let s = Summary::read(&dir.path().join("t/summary.json")).unwrap();
    assert!((s.get_f64("h.limit").unwrap() - 4.0 / 3.0).abs() < 1e-12);
    let h3 = 1.0 + 0.25 + 0.0625 + 0.015625;
    assert!((s.get_f64("h.finite_n").unwrap() - h3).abs() < 1e-12);
}

#[test]
fn enumerate_writes_a_normalized_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nn = 'twopoint(0,0.5,2)'\nq = 'constant(1)'\nc = 'constant(0.5)'\n[enumerate]\ndepth = 2\n",
    );
    let o = dir.path().join("e");
    run_ok(&["enumerate", "--config", &cfg, "--out", o.to_str().unwrap()]);
    let pmf: Vec<PmfRow> = read_table(&o.join("pmf.csv"), PMF_SCHEMA).unwrap();
    let mass: f64 = pmf.iter().map(|r| r.p).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    // E[R^(2)] = 1 + 1/2 + 1/4 with E[N]E[C] = 1/2
    let mean: f64 = pmf.iter().map(|r| r.value * r.p).sum();
    assert!((mean - 1.75).abs() < 1e-12);
}

#[test]
fn pagerank_writes_ranks_and_graph() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[pagerank]\nn_nodes = 2000\nin_degree = 'zipf(2.5)'\nout_degree = 'shift(poisson(2),1)'\nwrite_graph = true\n",
    );
    let o = dir.path().join("p");
    run_ok(&[
        "pagerank",
        "--config",
        &cfg,
        "--seed",
        "4",
        "--out",
        o.to_str().unwrap(),
    ]);
    let ranks: Vec<RankRow> = read_table(&o.join("ranks.csv"), RANKS_SCHEMA).unwrap();
    assert_eq!(ranks.len(), 2000);
    let total: f64 = ranks.iter().map(|r| r.rank).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let g = DirectedGraph::read_edge_list(std::io::BufReader::new(
        fs::File::open(o.join("graph.txt")).unwrap(),
    ))
    .unwrap();
    assert_eq!(g.node_count(), 2000);
    assert!(ranks
        .iter()
        .all(|r| r.in_degree as usize == g.in_degree(r.node as usize)));
}

#[test]
fn verify_refuses_arithmetic_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nn = 'constant(1)'\nq = 'constant(1)'\nc = 'twopoint(0.25,0.5,2)'\n",
    );
    let out = wbp(&[
        "verify",
        "--config",
        &cfg,
        "--out",
        dir.path().join("v").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("arithmetic"));
}

#[test]
fn verify_scenario_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("v");
    let out = run_ok(&[
        "verify",
        "--scenario",
        "deterministic-binary",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: pass"));
    let rep: wbp::experiment::VerificationReport =
        serde_json::from_str(&fs::read_to_string(o.join("report.json")).unwrap()).unwrap();
    assert!(rep.passed);
    let s = Summary::read(&o.join("summary.json")).unwrap();
    assert!(s.0.contains_key("provenance.simulate_r_depth60"));
}
