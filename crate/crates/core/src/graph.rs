//! Random directed graphs, PageRank, and the rank-tail comparison.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::Serialize;

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::estimators::{ccdf_sorted, loglog_slope, sorted_copy, SlopeFit};
use crate::numeric::{logspace, quantile_sorted, NeumaierSum};
use crate::rng::RngStream;

/// Refuse to allocate more stubs than this per side.
pub const MAX_STUBS: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectedGraph {
    node_count: usize,
    out_edges: Vec<Vec<u32>>,
    in_degree: Vec<u32>,
}

impl DirectedGraph {
    pub fn from_edges(node_count: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if node_count == 0 || node_count > u32::MAX as usize {
            return Err(Error::Input(format!(
                "node count {node_count} out of range"
            )));
        }
        let mut out_edges = vec![Vec::new(); node_count];
        let mut in_degree = vec![0u32; node_count];
        for &(s, t) in edges {
            if s as usize >= node_count || t as usize >= node_count {
                return Err(Error::Input(format!(
                    "edge {s} -> {t} outside 0..{node_count}"
                )));
            }
            out_edges[s as usize].push(t);
            in_degree[t as usize] += 1;
        }
        Ok(DirectedGraph {
            node_count,
            out_edges,
            in_degree,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn out_edges(&self, node: usize) -> &[u32] {
        &self.out_edges[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_edges[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_degree[node] as usize
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degree
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| ts.iter().map(move |&t| (s as u32, t)))
    }

    /// Edge-list text: a `# nodes=<n>` header, then one `src dst` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# nodes={}", self.node_count)?;
        for (s, t) in self.edges() {
            writeln!(w, "{s} {t}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut nodes = None;
        let mut edges = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("nodes=") {
                    let n = v.trim().parse::<usize>().map_err(|e| {
                        Error::Parse(format!("line {}: bad node count: {e}", i + 1))
                    })?;
                    nodes = Some(n);
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let mut id = || -> Result<u32> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("line {}: expected `src dst`", i + 1)))?
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            let (s, t) = (id()?, id()?);
            if it.next().is_some() {
                return Err(Error::Parse(format!("line {}: trailing tokens", i + 1)));
            }
            edges.push((s, t));
        }
        let n = nodes.ok_or_else(|| Error::Parse("missing `# nodes=<n>` header".into()))?;
        DirectedGraph::from_edges(n, &edges)
    }
}

fn draw_degrees(n: usize, law: &DistSpec, rng: &RngStream) -> Result<Vec<u64>> {
    let s = law.sampler()?;
    let mut r = rng.rng();
    let mut total = 0u64;
    let degs: Vec<u64> = (0..n)
        .map(|_| {
            let k = s.sample(&mut r);
            let k = if k >= MAX_STUBS as f64 {
                MAX_STUBS
            } else {
                k as u64
            };
            total = total.saturating_add(k);
            k
        })
        .collect();
    if total > MAX_STUBS {
        return Err(Error::Input(format!(
            "{total} stubs exceed the limit {MAX_STUBS}"
        )));
    }
    Ok(degs)
}

/// Removes `excess` stubs chosen uniformly at random from the multiset of
/// stubs encoded by `degs`.
fn trim_stubs(degs: &mut [u64], excess: u64, rng: &RngStream) {
    if excess == 0 {
        return;
    }
    let mut stubs: Vec<u32> = stub_list(degs);
    let mut r = rng.rng();
    let len = stubs.len();
    // partial Fisher-Yates: the last `excess` slots become a uniform sample
    for i in 0..excess as usize {
        let j = r.random_range(0..len - i);
        stubs.swap(j, len - 1 - i);
        degs[stubs[len - 1 - i] as usize] -= 1;
    }
}

fn stub_list(degs: &[u64]) -> Vec<u32> {
    let mut v = Vec::with_capacity(degs.iter().sum::<u64>() as usize);
    for (i, &k) in degs.iter().enumerate() {
        v.extend(std::iter::repeat_n(i as u32, k as usize));
    }
    v
}

/// Directed configuration model. Stub totals are reconciled by trimming the
/// larger side, then out-stubs (in node order) are paired with a uniformly
/// permuted list of in-stubs. Self-loops and parallel edges are kept.
pub fn generate_configuration_graph(
    n_nodes: usize,
    in_deg: &DistSpec,
    out_deg: &DistSpec,
    rng: &RngStream,
) -> Result<DirectedGraph> {
    if n_nodes == 0 {
        return Err(Error::Parameter("graph needs at least one node".into()));
    }
    for (name, d) in [("in-degree", in_deg), ("out-degree", out_deg)] {
        d.validate()?;
        if !d.is_integer_valued() {
            return Err(Error::Parameter(format!(
                "{name} law {d} is not integer-valued"
            )));
        }
    }
    if out_deg.support_min() < 1.0 {
        return Err(Error::Parameter(format!(
            "out-degree law {out_deg} must have support ≥ 1"
        )));
    }
    let mut ins = draw_degrees(n_nodes, in_deg, &rng.derive("in-degree"))?;
    let mut outs = draw_degrees(n_nodes, out_deg, &rng.derive("out-degree"))?;
    let (ti, to): (u64, u64) = (ins.iter().sum(), outs.iter().sum());
    let trim = rng.derive("trim");
    if ti > to {
        trim_stubs(&mut ins, ti - to, &trim);
    } else {
        trim_stubs(&mut outs, to - ti, &trim);
    }
    let total = ti.min(to);
    if total == 0 {
        return Err(Error::Input("degree draws produced zero stubs".into()));
    }
    let mut in_stubs = stub_list(&ins);
    let mut r = rng.derive("matching").rng();
    for i in (1..in_stubs.len()).rev() {
        let j = r.random_range(0..=i);
        in_stubs.swap(i, j);
    }
    let mut out_edges: Vec<Vec<u32>> = outs
        .iter()
        .map(|&k| Vec::with_capacity(k as usize))
        .collect();
    let mut next = in_stubs.into_iter();
    for (src, &k) in outs.iter().enumerate() {
        out_edges[src].extend(next.by_ref().take(k as usize));
    }
    Ok(DirectedGraph {
        node_count: n_nodes,
        out_edges,
        in_degree: ins.iter().map(|&k| k as u32).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankVector {
    pub ranks: Vec<f64>,
    pub iterations_used: usize,
    /// Max-norm change at the last iteration.
    pub residual: f64,
    pub converged: bool,
    /// Max-norm change after every iteration.
    pub residual_history: Vec<f64>,
    /// ℓ1 change after every iteration; shrinks by at least a factor `d` per step.
    pub l1_history: Vec<f64>,
}

/// Power iteration of `r_i = (1-d)/n + d Σ_{j→i} r_j / L_j`, started from the
/// uniform vector. Dangling nodes spread their mass uniformly. Running out of
/// iterations is not an error; check `converged`.
pub fn pagerank(graph: &DirectedGraph, d: f64, tol: f64, max_iter: usize) -> Result<RankVector> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Parameter(format!(
            "damping d = {d} must lie in (0, 1)"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol = {tol} must be positive")));
    }
    let n = graph.node_count();
    let nf = n as f64;
    let mut r = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut history = Vec::new();
    let mut l1_history = Vec::new();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n)
            .filter(|&j| graph.out_degree(j) == 0)
            .map(|j| r[j])
            .collect::<NeumaierSum>()
            .value();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for (j, &rj) in r.iter().enumerate() {
            let targets = graph.out_edges(j);
            if targets.is_empty() {
                continue;
            }
            let share = d * rj / targets.len() as f64;
            for &t in targets {
                next[t as usize] += share;
            }
        }
        residual = r
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        l1_history.push(
            r.iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .collect::<NeumaierSum>()
                .value(),
        );
        std::mem::swap(&mut r, &mut next);
        history.push(residual);
        if residual <= tol {
            break;
        }
    }
    Ok(RankVector {
        iterations_used: history.len(),
        converged: residual <= tol,
        residual,
        residual_history: history,
        l1_history,
        ranks: r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTailReport {
    /// Slope of the CCDF of `n · rank`; `None` when there is no tail window.
    pub rank_slope: Option<SlopeFit>,
    pub in_degree_slope: Option<SlopeFit>,
    pub slope_gap: Option<f64>,
    pub no_tail: bool,
    /// Quantile window `[q90, q999]` of the rescaled ranks.
    pub rank_window: (f64, f64),
    pub in_degree_window: (f64, f64),
    pub notes: Vec<String>,
}

pub const TAIL_MIN_POINTS: usize = 500;
const WINDOW: (f64, f64) = (0.90, 0.999);
const RANK_GRID_POINTS: usize = 24;

fn window(sorted: &[f64]) -> (f64, f64) {
    (
        quantile_sorted(sorted, WINDOW.0),
        quantile_sorted(sorted, WINDOW.1),
    )
}

fn is_flat((lo, hi): (f64, f64)) -> bool {
    !(lo > 0.0) || hi / lo < 1.0 + 1e-6
}

/// Log-log slopes of the rescaled rank CCDF and the in-degree CCDF, each over
/// its own `[q90, q999]` window. In-degrees are integers, so their CCDF is
/// read on the half-integers of the window.
pub fn rank_tail_compare(
    graph: &DirectedGraph,
    ranks: &RankVector,
    d: f64,
) -> Result<RankTailReport> {
    let n = graph.node_count();
    if ranks.ranks.len() != n {
        return Err(Error::Input(format!(
            "{} ranks for {n} nodes",
            ranks.ranks.len()
        )));
    }
    let tail_points = ((1.0 - WINDOW.0) * n as f64).floor() as usize;
    if tail_points < TAIL_MIN_POINTS {
        return Err(Error::Input(format!(
            "{n} nodes leave {tail_points} points above the 90th percentile (need ≥ {TAIL_MIN_POINTS})"
        )));
    }
    let mut notes = vec![format!(
        "teleport level γ = {:.6}, contraction c = {d}",
        1.0 - d
    )];
    if !ranks.converged {
        notes.push(format!("pagerank stopped with residual {}", ranks.residual));
    }
    let scaled = sorted_copy(
        &ranks
            .ranks
            .iter()
            .map(|r| r * n as f64)
            .collect::<Vec<f64>>(),
    );
    let degs = sorted_copy(
        &graph
            .in_degrees()
            .iter()
            .map(|&k| k as f64)
            .collect::<Vec<f64>>(),
    );
    let rw = window(&scaled);
    let dw = window(&degs);
    let flat = is_flat(rw) || is_flat(dw);
    let mut report = RankTailReport {
        rank_slope: None,
        in_degree_slope: None,
        slope_gap: None,
        no_tail: flat,
        rank_window: rw,
        in_degree_window: dw,
        notes,
    };
    if flat {
        report
            .notes
            .push("quantile window has zero width: no tail".into());
        return Ok(report);
    }
    let rank_curve = ccdf_sorted(&scaled, Some(&logspace(rw.0, rw.1, RANK_GRID_POINTS)))?;
    let half_ints: Vec<f64> = (dw.0.floor() as u64..=dw.1.ceil() as u64)
        .map(|k| k as f64 + 0.5)
        .filter(|&x| x >= dw.0 && x <= dw.1)
        .collect();
    let deg_curve = ccdf_sorted(&degs, Some(&half_ints))?;
    let fits = (
        loglog_slope(&rank_curve, rw.0, rw.1),
        loglog_slope(&deg_curve, dw.0, dw.1),
    );
    match fits {
        (Ok(a), Ok(b)) => {
            report.slope_gap = Some(a.slope - b.slope);
            report.rank_slope = Some(a);
            report.in_degree_slope = Some(b);
        }
        (a, b) => {
            report.no_tail = true;
            for e in [a.err(), b.err()].into_iter().flatten() {
                report.notes.push(e.to_string());
            }
        }
    }
    Ok(report)
}

/// Rank-tail slopes of two graphs that share the in-degree law and seed but
/// differ in the out-degree law.
pub fn out_degree_sensitivity(
    n_nodes: usize,
    in_deg: &DistSpec,
    out_a: &DistSpec,
    out_b: &DistSpec,
    d: f64,
    rng: &RngStream,
) -> Result<(RankTailReport, RankTailReport)> {
    let run = |out: &DistSpec| -> Result<RankTailReport> {
        let g = generate_configuration_graph(n_nodes, in_deg, out, rng)?;
        let r = pagerank(&g, d, 1e-12, 1000)?;
        rank_tail_compare(&g, &r, d)
    };
    Ok((run(out_a)?, run(out_b)?))
}
