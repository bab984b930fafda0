//! Experiment configuration, command execution, the verification suite and
//! the on-disk formats of everything the tool writes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::estimators::{
    ccdf_sorted, hill, loglog_slope, sorted_copy, tail_ratio, CcdfCurve, Reference,
};
use crate::graph::{generate_configuration_graph, pagerank, rank_tail_compare, TAIL_MIN_POINTS};
use crate::moments::{depth_for_bias, find_stable_beta, mean_r, moment_bound, spectral_params};
use crate::numeric::{logspace, mean_se, quantile_sorted};
use crate::rng::RngStream;
use crate::theory::{
    classify_regime, goldie_h_closed, goldie_h_mc, n_dominant_h, q_dominant_h, solve_alpha_c,
    wn_prefactor, Regime,
};
use crate::tree::{
    enumerate_exact, simulate_r, simulate_r_replicas, WbpModel, DEFAULT_NODE_BUDGET,
    DEFAULT_SUPPORT_LIMIT,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_workers() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pagerank: Option<PagerankConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate: Option<EnumerateConfig>,
}

/// Mark laws in the distribution text grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: String,
    pub q: String,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "SimulateConfig::default_replicas")]
    pub replicas: usize,
    /// Overrides `bias_target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_cap: Option<u32>,
    #[serde(default = "SimulateConfig::default_bias")]
    pub bias_target: f64,
    #[serde(default = "SimulateConfig::default_budget")]
    pub node_budget: u64,
}

impl SimulateConfig {
    fn default_replicas() -> usize {
        10_000
    }
    fn default_bias() -> f64 {
        1e-6
    }
    fn default_budget() -> u64 {
        DEFAULT_NODE_BUDGET
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            replicas: Self::default_replicas(),
            depth_cap: None,
            bias_target: Self::default_bias(),
            node_budget: Self::default_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hill_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// Quantile levels bounding the log-log fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// A `samples.csv` to read instead of simulating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    /// `c-dominant`, `n-dominant` or `q-dominant`; classified when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_n: Option<u32>,
    /// Replicas for the Monte Carlo tail constant; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_replicas: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PagerankConfig {
    pub n_nodes: usize,
    #[serde(default = "PagerankConfig::default_d")]
    pub d: f64,
    pub in_degree: String,
    pub out_degree: String,
    #[serde(default = "PagerankConfig::default_tol")]
    pub tol: f64,
    #[serde(default = "PagerankConfig::default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub write_graph: bool,
}

impl PagerankConfig {
    fn default_d() -> f64 {
        0.85
    }
    fn default_tol() -> f64 {
        1e-12
    }
    fn default_max_iter() -> usize {
        1000
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// A built-in scenario; the `[model]` block is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_replicas: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    #[serde(default = "EnumerateConfig::default_depth")]
    pub depth: u32,
    #[serde(default = "EnumerateConfig::default_limit")]
    pub support_limit: usize,
}

impl EnumerateConfig {
    fn default_depth() -> u32 {
        3
    }
    fn default_limit() -> usize {
        DEFAULT_SUPPORT_LIMIT
    }
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        EnumerateConfig {
            depth: Self::default_depth(),
            support_limit: Self::default_limit(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Theory,
    Simulate,
    Estimate,
    Verify,
    Pagerank,
    Enumerate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Theory => "theory",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Verify => "verify",
            Command::Pagerank => "pagerank",
            Command::Enumerate => "enumerate",
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn with_model(model: &WbpModel) -> Self {
        ExperimentConfig {
            model: Some(ModelConfig {
                n: model.n_dist.to_string(),
                q: model.q_dist.to_string(),
                c: model.c_dist.to_string(),
            }),
            ..Self::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn model(&self) -> Result<WbpModel> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Config("missing [model] block".into()))?;
        let parse = |field: &str, s: &str| -> Result<DistSpec> {
            s.parse()
                .map_err(|e: Error| Error::Config(format!("model.{field} = {s:?}: {e}")))
        };
        WbpModel::new(parse("n", &m.n)?, parse("q", &m.q)?, parse("c", &m.c)?)
            .map_err(|e| Error::Config(format!("[model]: {e}")))
    }

    /// Checks every block that is present, whether or not `command` uses it.
    pub fn validate(&self, command: Command) -> Result<()> {
        check(self.workers >= 1, || "workers must be ≥ 1".into())?;
        if self.model.is_some() {
            self.model()?;
        }
        if let Some(s) = &self.simulate {
            check(s.replicas >= 1, || "simulate.replicas must be ≥ 1".into())?;
            check(s.bias_target > 0.0, || {
                "simulate.bias_target must be > 0".into()
            })?;
            check(s.node_budget >= 1, || {
                "simulate.node_budget must be ≥ 1".into()
            })?;
        }
        if let Some(e) = &self.estimate {
            if let Some(k) = e.hill_k {
                check(k >= 1, || "estimate.hill_k must be ≥ 1".into())?;
            }
            if let Some([lo, hi]) = e.window {
                check(0.0 < lo && lo < hi && hi < 1.0, || {
                    format!("estimate.window = [{lo}, {hi}] must satisfy 0 < lo < hi < 1")
                })?;
            }
            if let Some(g) = &e.grid {
                check(
                    !g.is_empty() && g.iter().all(|x| *x > 0.0 && x.is_finite()),
                    || "estimate.grid must hold positive finite values".into(),
                )?;
            }
        }
        if let Some(t) = &self.theory {
            if let Some(r) = &t.regime {
                parse_regime(r)?;
            }
            if let Some(a) = t.alpha {
                check(a > 0.0, || format!("theory.alpha = {a} must be > 0"))?;
            }
            if let Some(m) = t.mc_replicas {
                check(m >= 10_000, || {
                    format!("theory.mc_replicas = {m} must be ≥ 10^4")
                })?;
            }
        }
        if let Some(p) = &self.pagerank {
            check(p.n_nodes >= 1, || "pagerank.n_nodes must be ≥ 1".into())?;
            check(p.d > 0.0 && p.d < 1.0, || {
                format!("pagerank.d = {} must lie in (0, 1)", p.d)
            })?;
            check(p.tol > 0.0, || "pagerank.tol must be > 0".into())?;
            for (k, s) in [("in_degree", &p.in_degree), ("out_degree", &p.out_degree)] {
                s.parse::<DistSpec>()
                    .map_err(|e| Error::Config(format!("pagerank.{k} = {s:?}: {e}")))?;
            }
        }
        if let Some(v) = &self.verify {
            if let Some(s) = &v.scenario {
                builtin_scenario(s)?;
            }
            if let Some(r) = v.replicas {
                check(r >= 1000, || {
                    format!("verify.replicas = {r} must be ≥ 1000")
                })?;
            }
            if let Some(m) = v.mc_replicas {
                check(m >= 10_000, || {
                    format!("verify.mc_replicas = {m} must be ≥ 10^4")
                })?;
            }
        }
        if let Some(e) = &self.enumerate {
            check(e.depth <= 3, || {
                format!("enumerate.depth = {} must be ≤ 3", e.depth)
            })?;
        }
        let needs_model = match command {
            Command::Theory | Command::Simulate | Command::Enumerate => true,
            Command::Estimate => self
                .estimate
                .as_ref()
                .and_then(|e| e.input.as_ref())
                .is_none(),
            Command::Verify => self
                .verify
                .as_ref()
                .and_then(|v| v.scenario.as_ref())
                .is_none(),
            Command::Pagerank => false,
        };
        check(!needs_model || self.model.is_some(), || {
            format!("command `{}` needs a [model] block", command.name())
        })?;
        check(
            command != Command::Pagerank || self.pagerank.is_some(),
            || "command `pagerank` needs a [pagerank] block".into(),
        )
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            workers: default_workers(),
            output_dir: default_output_dir(),
            model: None,
            simulate: None,
            estimate: None,
            theory: None,
            pagerank: None,
            verify: None,
            enumerate: None,
        }
    }
}

fn parse_regime(s: &str) -> Result<Regime> {
    match s {
        "c-dominant" => Ok(Regime::CDominant),
        "n-dominant" => Ok(Regime::NDominant),
        "q-dominant" => Ok(Regime::QDominant),
        _ => Err(Error::Config(format!(
            "theory.regime = {s:?}; expected c-dominant, n-dominant or q-dominant"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Tables and summaries

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub replica_id: u64,
    pub value: f64,
    pub bias_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfRow {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub value: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub node: u32,
    pub in_degree: u32,
    pub out_degree: u32,
    pub rank: f64,
}

pub const SAMPLES_SCHEMA: &str = "samples v1";
pub const CCDF_SCHEMA: &str = "ccdf v1";
pub const PMF_SCHEMA: &str = "pmf v1";
pub const RANKS_SCHEMA: &str = "ranks v1";

/// CSV with a leading `# schema: <name> v<k>` line and a header row.
pub fn write_table<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# schema: {schema}")?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let found = first.trim().strip_prefix("# schema:").map(str::trim);
    if found != Some(schema) {
        return Err(Error::Parse(format!(
            "{}: expected schema {schema:?}, found {:?}",
            path.display(),
            first.trim()
        )));
    }
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Flat key → value map written as `summary.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Summary(pub BTreeMap<String, Value>);

impl Summary {
    /// Non-finite numbers are stored as the strings `inf`, `-inf` or `nan`.
    pub fn num(&mut self, key: impl Into<String>, x: f64) {
        let v = serde_json::Number::from_f64(x)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(x.to_string().to_lowercase()));
        self.0.insert(key.into(), v);
    }

    pub fn int(&mut self, key: impl Into<String>, x: u64) {
        self.0.insert(key.into(), Value::from(x));
    }

    pub fn text(&mut self, key: impl Into<String>, s: impl Into<String>) {
        self.0.insert(key.into(), Value::String(s.into()));
    }

    pub fn flag(&mut self, key: impl Into<String>, b: bool) {
        self.0.insert(key.into(), Value::Bool(b));
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        match self.0.get(key)? {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.parse().ok(),
            _ => None,
        }
    }

    /// Numeric entries only, for comparing runs.
    pub fn numbers(&self) -> BTreeMap<String, f64> {
        self.0
            .iter()
            .filter_map(|(k, v)| v.as_f64().map(|x| (k.clone(), x)))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
    /// Human-readable text for the terminal.
    pub report: String,
}

fn resolve_depth(model: &WbpModel, sim: &SimulateConfig) -> Result<u32> {
    match sim.depth_cap {
        Some(d) => Ok(d),
        None => depth_for_bias(model, sim.bias_target),
    }
}

fn draw_r(
    cfg: &ExperimentConfig,
    model: &WbpModel,
    sum: &mut Summary,
) -> Result<(Vec<SampleRow>, Vec<f64>)> {
    let sim = cfg.simulate.clone().unwrap_or_default();
    let depth = resolve_depth(model, &sim)?;
    let draws = simulate_r_replicas(
        model,
        sim.replicas,
        depth,
        sim.node_budget,
        &RngStream::from_seed(cfg.seed).derive("simulate"),
        cfg.workers,
    )?;
    let rows: Vec<SampleRow> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| SampleRow {
            replica_id: i as u64,
            value: d.value,
            bias_bound: d.mean_bias_bound,
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    sum.int("simulate.replicas", sim.replicas as u64);
    sum.int("simulate.depth_cap", depth as u64);
    sum.num(
        "simulate.mean_bias_bound",
        rows.first().map_or(0.0, |r| r.bias_bound),
    );
    let (m, se) = mean_se(&values);
    sum.num("sample.mean", m);
    sum.num("sample.mean_stderr", se);
    let sorted = sorted_copy(&values);
    for (name, q) in [("q50", 0.5), ("q90", 0.9), ("q99", 0.99), ("q999", 0.999)] {
        sum.num(format!("sample.{name}"), quantile_sorted(&sorted, q));
    }
    if let Ok(er) = mean_r(model) {
        sum.num("theory.mean_r", er);
    }
    Ok((rows, values))
}

fn ccdf_rows(curve: &CcdfCurve) -> Vec<CcdfRow> {
    curve
        .points
        .iter()
        .map(|&(x, p)| CcdfRow { x, p })
        .collect()
}

fn base_summary(cfg: &ExperimentConfig, command: Command) -> Summary {
    let mut s = Summary::default();
    s.text("command", command.name());
    s.int("seed", cfg.seed);
    s.text("version", VERSION);
    s.text("config", cfg.to_toml());
    s.text("config_hash", cfg.hash());
    s
}

/// Runs `command`, writes its artifacts into `cfg.output_dir` and returns the
/// summary that was written to `summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, command: Command) -> Result<RunOutput> {
    cfg.validate(command)?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    let mut sum = base_summary(cfg, command);
    let mut files = Vec::new();
    let mut report = String::new();
    match command {
        Command::Simulate => {
            let model = cfg.model()?;
            sum.text("model", model.to_string());
            let (rows, values) = draw_r(cfg, &model, &mut sum)?;
            let p = out.join("samples.csv");
            write_table(&p, SAMPLES_SCHEMA, &rows)?;
            files.push(p);
            let curve = ccdf_sorted(&sorted_copy(&values), None)?;
            let p = out.join("ccdf.csv");
            write_table(&p, CCDF_SCHEMA, &ccdf_rows(&curve))?;
            files.push(p);
            let _ = writeln!(
                report,
                "{} draws of R, mean {}",
                rows.len(),
                sum.0["sample.mean"]
            );
        }
        Command::Estimate => {
            let est = cfg.estimate.clone().unwrap_or_default();
            let values: Vec<f64> = match &est.input {
                Some(path) => {
                    sum.text("estimate.input", path.display().to_string());
                    read_table::<SampleRow>(path, SAMPLES_SCHEMA)?
                        .into_iter()
                        .map(|r| r.value)
                        .collect()
                }
                None => {
                    let model = cfg.model()?;
                    sum.text("model", model.to_string());
                    let (rows, values) = draw_r(cfg, &model, &mut sum)?;
                    let p = out.join("samples.csv");
                    write_table(&p, SAMPLES_SCHEMA, &rows)?;
                    files.push(p);
                    values
                }
            };
            let sorted = sorted_copy(&values);
            let h = hill(&values, est.hill_k)?;
            sum.num("hill.alpha", h.alpha_hat);
            sum.int("hill.k", h.k as u64);
            sum.num("hill.stderr", h.stderr);
            let curve = ccdf_sorted(&sorted, est.grid.as_deref())?;
            let [lo, hi] = est.window.unwrap_or([0.9, 0.999]);
            let (xl, xh) = (quantile_sorted(&sorted, lo), quantile_sorted(&sorted, hi));
            sum.num("slope.x_lo", xl);
            sum.num("slope.x_hi", xh);
            match loglog_slope(&curve, xl, xh) {
                Ok(fit) => {
                    sum.num("slope.value", fit.slope);
                    sum.num("slope.stderr", fit.stderr);
                    sum.int("slope.points", fit.points as u64);
                }
                Err(e) => sum.text("slope.error", e.to_string()),
            }
            let p = out.join("ccdf.csv");
            write_table(&p, CCDF_SCHEMA, &ccdf_rows(&curve))?;
            files.push(p);
            let _ = writeln!(
                report,
                "Hill α̂ = {} (k = {}, se {})",
                h.alpha_hat, h.k, h.stderr
            );
        }
        Command::Theory => {
            let model = cfg.model()?;
            sum.text("model", model.to_string());
            report = theory_summary(cfg, &model, &mut sum)?;
        }
        Command::Enumerate => {
            let model = cfg.model()?;
            sum.text("model", model.to_string());
            let e = cfg.enumerate.clone().unwrap_or_default();
            let ex = enumerate_exact(&model, e.depth, e.support_limit)?;
            sum.int("enumerate.depth", e.depth as u64);
            sum.int("r.atoms", ex.r.len() as u64);
            sum.num("r.total_mass", ex.r.total_mass());
            sum.num("r.mean", ex.r.mean());
            sum.num("r.second_moment", ex.r.moment(2.0));
            for (k, w) in ex.w.iter().enumerate() {
                sum.num(format!("w{k}.mean"), w.mean());
                sum.num(format!("w{k}.second_moment"), w.moment(2.0));
            }
            let rows: Vec<PmfRow> =
                ex.r.atoms()
                    .iter()
                    .map(|&(value, p)| PmfRow { value, p })
                    .collect();
            let p = out.join("pmf.csv");
            write_table(&p, PMF_SCHEMA, &rows)?;
            files.push(p);
            let _ = writeln!(
                report,
                "R^({}) has {} atoms, mean {}",
                e.depth,
                ex.r.len(),
                ex.r.mean()
            );
        }
        Command::Pagerank => {
            let pc = cfg.pagerank.clone().expect("validated");
            let (ind, outd): (DistSpec, DistSpec) = (pc.in_degree.parse()?, pc.out_degree.parse()?);
            let g = generate_configuration_graph(
                pc.n_nodes,
                &ind,
                &outd,
                &RngStream::from_seed(cfg.seed).derive("graph"),
            )?;
            let ranks = pagerank(&g, pc.d, pc.tol, pc.max_iter)?;
            sum.int("graph.nodes", g.node_count() as u64);
            sum.int("graph.edges", g.edge_count() as u64);
            sum.int("pagerank.iterations", ranks.iterations_used as u64);
            sum.num("pagerank.residual", ranks.residual);
            sum.flag("pagerank.converged", ranks.converged);
            if !ranks.converged {
                let _ = writeln!(
                    report,
                    "warning: no convergence after {} iterations (residual {})",
                    ranks.iterations_used, ranks.residual
                );
            }
            if (g.node_count() as f64 * 0.1) >= TAIL_MIN_POINTS as f64 {
                let cmp = rank_tail_compare(&g, &ranks, pc.d)?;
                sum.flag("tail.no_tail", cmp.no_tail);
                if let (Some(a), Some(b), Some(gap)) =
                    (cmp.rank_slope, cmp.in_degree_slope, cmp.slope_gap)
                {
                    sum.num("tail.rank_slope", a.slope);
                    sum.num("tail.in_degree_slope", b.slope);
                    sum.num("tail.slope_gap", gap);
                    let _ = writeln!(
                        report,
                        "rank slope {}, in-degree slope {}, gap {gap}",
                        a.slope, b.slope
                    );
                }
                sum.text("tail.notes", cmp.notes.join("; "));
            } else {
                sum.text("tail.notes", "graph too small for a tail comparison");
            }
            let rows: Vec<RankRow> = (0..g.node_count())
                .map(|v| RankRow {
                    node: v as u32,
                    in_degree: g.in_degree(v) as u32,
                    out_degree: g.out_degree(v) as u32,
                    rank: ranks.ranks[v],
                })
                .collect();
            let p = out.join("ranks.csv");
            write_table(&p, RANKS_SCHEMA, &rows)?;
            files.push(p);
            if pc.write_graph {
                let p = out.join("graph.txt");
                g.write_edge_list(std::io::BufWriter::new(fs::File::create(&p)?))?;
                files.push(p);
            }
        }
        Command::Verify => {
            let rep = verify_suite(cfg)?;
            rep.fill_summary(&mut sum);
            let p = out.join("report.json");
            fs::write(&p, serde_json::to_string_pretty(&rep)? + "\n")?;
            files.push(p);
            report = rep.table();
        }
    }
    let p = out.join("summary.json");
    sum.write(&p)?;
    files.push(p);
    Ok(RunOutput {
        summary: sum,
        files,
        report,
    })
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-6
}

fn theory_summary(cfg: &ExperimentConfig, model: &WbpModel, sum: &mut Summary) -> Result<String> {
    let tc = cfg.theory.clone().unwrap_or_default();
    let class = classify_regime(model);
    let mut out = String::new();
    sum.text("regime.kind", format!("{:?}", class.kind));
    sum.text("regime.notes", class.notes.join("; "));
    let _ = writeln!(out, "regime: {:?}", class.kind);
    for n in &class.notes {
        let _ = writeln!(out, "  {n}");
    }
    let sp = spectral_params(model, 1.0)?;
    sum.num("rho", sp.rho);
    if let Some(b) = find_stable_beta(model) {
        sum.num("stable_beta", b);
    }
    let regime = match &tc.regime {
        Some(r) => {
            let forced = parse_regime(r)?;
            if class.regime() != Some(forced) {
                return Err(Error::Regime(format!(
                    "model classifies as {:?}, not {r}: {}",
                    class.kind,
                    class.notes.join("; ")
                )));
            }
            Some(forced)
        }
        None => class.regime(),
    };
    let Some(regime) = regime else {
        return Ok(out);
    };
    let alpha = match (tc.alpha, regime) {
        (Some(a), _) => a,
        (None, Regime::CDominant) => solve_alpha_c(model, None)?.alpha,
        (None, _) => class.alpha.expect("heavy regimes carry an index"),
    };
    sum.num("alpha", alpha);
    let sp = spectral_params(model, alpha)?;
    sum.num("rho_alpha", sp.rho_beta);
    if let Ok(b) = moment_bound(model, alpha.min(1.0)) {
        sum.num("moment_bound.rate", b.rate);
    }
    match regime {
        Regime::CDominant => {
            for a in [1.0, 2.0] {
                if near(alpha, a) {
                    let h = goldie_h_closed(model, a)?;
                    sum.num("h.closed", h.h);
                    let _ = writeln!(out, "H (closed form, α = {a}) = {}", h.h);
                }
            }
            if let Some(reps) = tc.mc_replicas {
                let depth = depth_for_bias(model, 1e-6).unwrap_or(120);
                let h = goldie_h_mc(
                    model,
                    alpha,
                    reps,
                    depth,
                    &RngStream::from_seed(cfg.seed).derive("theory-mc"),
                    cfg.workers,
                )?;
                sum.num("h.mc", h.h);
                sum.num("h.mc_stderr", h.mc_stderr.unwrap_or(0.0));
                let _ = writeln!(
                    out,
                    "H (Monte Carlo) = {} ± {}",
                    h.h,
                    h.mc_stderr.unwrap_or(0.0)
                );
            }
        }
        Regime::NDominant => {
            let h = n_dominant_h(model, alpha, None)?;
            sum.num("h.limit", h.h);
            let _ = writeln!(out, "H = {}", h.h);
            if let Some(n) = tc.finite_n {
                sum.num("h.finite_n", n_dominant_h(model, alpha, Some(n))?.h);
                if n >= 1 {
                    sum.num(
                        "wn.prefactor",
                        wn_prefactor(model, alpha, n, Regime::NDominant)?,
                    );
                }
            }
        }
        Regime::QDominant => {
            let h = q_dominant_h(model, alpha, None)?;
            sum.num("h.limit", h.h);
            let _ = writeln!(out, "H = {}", h.h);
            if let Some(n) = tc.finite_n {
                sum.num("h.finite_n", q_dominant_h(model, alpha, Some(n))?.h);
                sum.num(
                    "wn.prefactor",
                    wn_prefactor(model, alpha, n, Regime::QDominant)?,
                );
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verification suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub theory: f64,
    pub empirical: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Everything needed to regenerate `empirical`.
    pub provenance: String,
}

impl Check {
    fn new(name: &str, theory: f64, empirical: f64, tolerance: f64, provenance: String) -> Self {
        Check {
            name: name.into(),
            theory,
            empirical,
            tolerance,
            passed: (empirical - theory).abs() <= tolerance,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub model: String,
    pub regime: String,
    pub alpha: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "scenario {} ({}), model {}\n",
            self.scenario, self.regime, self.model
        );
        let _ = writeln!(
            s,
            "{:<22} {:>14} {:>14} {:>12}  result",
            "check", "theory", "empirical", "tolerance"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<22} {:>14.6} {:>14.6} {:>12.3e}  {}",
                c.name,
                c.theory,
                c.empirical,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "verdict: {}", if self.passed { "pass" } else { "FAIL" });
        s
    }

    fn fill_summary(&self, sum: &mut Summary) {
        sum.text("verify.scenario", &self.scenario);
        sum.text("verify.regime", &self.regime);
        sum.flag("verify.passed", self.passed);
        for c in &self.checks {
            sum.num(format!("check.{}.theory", c.name), c.theory);
            sum.num(format!("check.{}.empirical", c.name), c.empirical);
            sum.num(format!("check.{}.tolerance", c.name), c.tolerance);
            sum.flag(format!("check.{}.passed", c.name), c.passed);
            sum.text(format!("provenance.{}", c.name), &c.provenance);
        }
    }
}

pub const SCENARIOS: [&str; 5] = [
    "deterministic-binary",
    "c-dominant-ln2",
    "c-dominant-ln1",
    "n-dominant-2.5",
    "q-dominant-pareto2",
];

pub fn builtin_scenario(name: &str) -> Result<WbpModel> {
    use crate::corpus;
    Ok(match name {
        "deterministic-binary" => corpus::deterministic_binary(),
        "c-dominant-ln2" => corpus::c_dominant_alpha2(),
        "c-dominant-ln1" => corpus::c_dominant_alpha1(),
        "n-dominant-2.5" => corpus::n_dominant(),
        "q-dominant-pareto2" => corpus::q_dominant(),
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario {name:?}; built-in scenarios: {}",
                SCENARIOS.join(", ")
            )))
        }
    })
}

/// Depth for R-draws when the mean is finite; a fixed deep cap otherwise.
const INFINITE_MEAN_DEPTH: u32 = 120;
/// Truncation bias used for draws feeding a Monte Carlo tail constant.
const BIAS_C_DOMINANT: f64 = 1e-6;
/// Truncation bias for tail-ratio draws; truncation moves the body, not the tail.
const BIAS_TAIL_RATIO: f64 = 1e-4;
const PLATEAU_GRID_POINTS: usize = 16;
/// Finite-n constants are checked up to this depth.
const FINITE_N_MAX: u32 = 40;

/// Grid for a tail-ratio plateau: log-spaced from the 99th to the 99.99th
/// percentile of the draws, snapped to half-integers when the reference law
/// lives on the integers.
pub fn plateau_grid(sorted: &[f64], integer_reference: bool) -> Vec<f64> {
    let mut g = logspace(
        quantile_sorted(sorted, 0.99),
        quantile_sorted(sorted, 0.9999),
        PLATEAU_GRID_POINTS,
    );
    if integer_reference {
        for x in g.iter_mut() {
            *x = x.floor() + 0.5;
        }
        g.dedup();
    }
    g
}

/// Regime-appropriate comparison of theory with simulation.
pub fn verify_suite(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate(Command::Verify)?;
    let vc = cfg.verify.clone().unwrap_or_default();
    let (scenario, model) = match &vc.scenario {
        Some(s) => (s.clone(), builtin_scenario(s)?),
        None => ("user".to_string(), cfg.model()?),
    };
    let replicas = vc.replicas.unwrap_or(1_000_000);
    let root = RngStream::from_seed(cfg.seed).derive("verify");
    let prov = |what: &str, extra: String| {
        format!(
            "scenario={scenario} model={model} seed={} stream=verify/{what} replicas={replicas}{extra}",
            cfg.seed
        )
    };
    let mut checks = Vec::new();
    let deterministic = [&model.n_dist, &model.q_dist, &model.c_dist]
        .iter()
        .all(|d| matches!(d, DistSpec::Constant(_)));
    if deterministic {
        let r = mean_r(&model)?;
        let v = simulate_r(
            &model,
            60,
            DEFAULT_NODE_BUDGET,
            &root.derive("deterministic"),
        )?;
        checks.push(Check::new(
            "simulate_r_depth60",
            r,
            v.value,
            1e-9,
            prov("deterministic", " depth=60".into()),
        ));
        checks.push(Check::new(
            "mean_r",
            r,
            mean_r(&model)?,
            0.0,
            "closed form".into(),
        ));
        return Ok(finish(
            scenario,
            &model,
            "Deterministic".into(),
            None,
            checks,
        ));
    }
    let class = classify_regime(&model);
    let regime = match (class.kind, class.regime()) {
        (_, Some(r)) => r,
        (kind, None) => {
            return Err(Error::Regime(format!(
                "refusing to verify a {kind:?} model: {}",
                class.notes.join("; ")
            )))
        }
    };
    let alpha = class.alpha.expect("heavy regimes carry an index");
    let rho = spectral_params(&model, 1.0)?.rho;
    let bias = if regime == Regime::CDominant {
        BIAS_C_DOMINANT
    } else {
        BIAS_TAIL_RATIO
    };
    let depth = if rho < 1.0 {
        depth_for_bias(&model, bias)?
    } else {
        INFINITE_MEAN_DEPTH
    };
    let draws: Vec<f64> = simulate_r_replicas(
        &model,
        replicas,
        depth,
        DEFAULT_NODE_BUDGET,
        &root.derive("r-draws"),
        cfg.workers,
    )?
    .into_iter()
    .map(|d| d.value)
    .collect();
    let sorted = sorted_copy(&draws);
    let dprov = |extra: &str| prov("r-draws", format!(" depth={depth}{extra}"));
    match regime {
        Regime::CDominant => {
            if near(alpha, 1.0) {
                let h = goldie_h_closed(&model, 1.0)?.h;
                let x = quantile_sorted(&sorted, 0.999);
                let xp = x * crate::estimators::exceedance(&sorted, x);
                checks.push(Check::new(
                    "x_tail_at_q999",
                    h,
                    xp,
                    0.3 * h,
                    dprov(" x=q999"),
                ));
            } else {
                let h = hill(&draws, None)?;
                checks.push(Check::new(
                    "hill_alpha",
                    alpha,
                    h.alpha_hat,
                    0.1 * alpha,
                    dprov(&format!(" k={}", h.k)),
                ));
                let (lo, hi) = (
                    quantile_sorted(&sorted, 0.9),
                    quantile_sorted(&sorted, 0.999),
                );
                let curve = ccdf_sorted(&sorted, Some(&logspace(lo, hi, 24)))?;
                let fit = loglog_slope(&curve, lo, hi)?;
                checks.push(Check::new(
                    "loglog_slope",
                    -alpha,
                    fit.slope,
                    0.15 * alpha,
                    dprov(" window=[q90,q999] points=24"),
                ));
                if near(alpha, 2.0) {
                    let closed = goldie_h_closed(&model, 2.0)?.h;
                    let mc_reps = vc.mc_replicas.unwrap_or(replicas).max(10_000);
                    let mc = goldie_h_mc(
                        &model,
                        2.0,
                        mc_reps,
                        depth,
                        &root.derive("goldie-mc"),
                        cfg.workers,
                    )?;
                    let se = mc.mc_stderr.unwrap_or(0.0);
                    checks.push(Check::new(
                        "goldie_h",
                        closed,
                        mc.h,
                        3.0 * se + 1e-9 * closed,
                        format!(
                            "scenario={scenario} model={model} seed={} stream=verify/goldie-mc replicas={mc_reps} depth={depth} stderr={se}",
                            cfg.seed
                        ),
                    ));
                }
            }
        }
        Regime::NDominant | Regime::QDominant => {
            let (h_fn, reference, tol): (
                fn(&WbpModel, f64, Option<u32>) -> Result<_>,
                &DistSpec,
                f64,
            ) = if regime == Regime::NDominant {
                (n_dominant_h, &model.n_dist, 0.2)
            } else {
                (q_dominant_h, &model.q_dist, 0.15)
            };
            let h = h_fn(&model, alpha, None)?.h;
            let grid = plateau_grid(&sorted, reference.is_integer_valued());
            let surv = |x: f64| reference.survival(x);
            let tr = tail_ratio(&draws, Reference::Survival(&surv), &grid)?;
            checks.push(Check::new(
                "tail_ratio_plateau",
                h,
                tr.plateau,
                tol * h,
                dprov(" grid=[q99,q9999] points=16 reference=exact"),
            ));
            if regime == Regime::NDominant {
                let curve = ccdf_sorted(&sorted, Some(&grid))?;
                let fit = loglog_slope(&curve, grid[0], *grid.last().unwrap())?;
                checks.push(Check::new(
                    "tail_slope",
                    -alpha,
                    fit.slope,
                    0.2,
                    dprov(" window=[q99,q9999]"),
                ));
            }
            let hs: Vec<f64> = (0..=FINITE_N_MAX)
                .map(|n| h_fn(&model, alpha, Some(n)).map(|c| c.h))
                .collect::<Result<_>>()?;
            // the partial sums reach the limit to machine precision well before FINITE_N_MAX
            let monotone =
                hs.windows(2).all(|w| w[0] <= w[1]) && hs.iter().all(|&x| x <= h * (1.0 + 1e-12));
            let last = *hs.last().unwrap();
            let mut c = Check::new(
                "finite_n_monotone",
                h,
                last,
                1e-6 * h,
                format!("closed form, n = 0..={FINITE_N_MAX}"),
            );
            c.passed &= monotone;
            checks.push(c);
        }
    }
    Ok(finish(
        scenario,
        &model,
        format!("{:?}", class.kind),
        Some(alpha),
        checks,
    ))
}

fn finish(
    scenario: String,
    model: &WbpModel,
    regime: String,
    alpha: Option<f64>,
    checks: Vec<Check>,
) -> VerificationReport {
    VerificationReport {
        passed: checks.iter().all(|c| c.passed),
        scenario,
        model: model.to_string(),
        regime,
        alpha,
        checks,
    }
}
