//! Weighted branching trees: generation weights `W_n`, truncated sums
//! `R^(n) = Σ_{k≤n} W_k`, population-dynamics iteration of
//! `R* ← Q + Σ C_i R*_i`, and exact enumeration for tiny discrete models.
//!
//! Trees are never materialised. A depth-first walk with an explicit stack
//! carries `(depth, Π)` where `Π` is the product of `C` along the path; each
//! popped node draws `Q`, then `N`, then one `C` per child.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{DistSpec, Sampler};
use crate::error::{Error, Result};
use crate::moments::{find_stable_beta, mean_bias_bound, spectral_params, StabilityReport};
use crate::numeric::{ks_distance_sorted, NeumaierSum};
use crate::rng::{RngStream, StreamRng};

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;
pub const DEFAULT_SUPPORT_LIMIT: usize = 100_000;
const POOL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WbpModel {
    pub n_dist: DistSpec,
    pub q_dist: DistSpec,
    pub c_dist: DistSpec,
}

impl WbpModel {
    pub fn new(n_dist: DistSpec, q_dist: DistSpec, c_dist: DistSpec) -> Result<Self> {
        for d in [&n_dist, &q_dist, &c_dist] {
            d.validate()?;
        }
        if !n_dist.is_integer_valued() {
            return Err(Error::Parameter(format!(
                "N = {n_dist} is not integer-valued"
            )));
        }
        if !(q_dist.survival(0.0) > 0.0) {
            return Err(Error::Parameter(format!("Q = {q_dist} has P(Q > 0) = 0")));
        }
        Ok(WbpModel {
            n_dist,
            q_dist,
            c_dist,
        })
    }

    pub fn parse(n: &str, q: &str, c: &str) -> Result<Self> {
        WbpModel::new(n.parse()?, q.parse()?, c.parse()?)
    }

    pub fn sampler(&self) -> Result<TreeSampler> {
        Ok(TreeSampler {
            n: self.n_dist.sampler()?,
            q: self.q_dist.sampler()?,
            c: self.c_dist.sampler()?,
        })
    }
}

impl std::fmt::Display for WbpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "N={}, Q={}, C={}", self.n_dist, self.q_dist, self.c_dist)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationTrace {
    pub n: u32,
    pub w: f64,
    pub z: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedR {
    pub value: f64,
    pub depth: u32,
    pub mean_bias_bound: f64,
}

/// Compiled samplers for one model; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct TreeSampler {
    pub n: Sampler,
    pub q: Sampler,
    pub c: Sampler,
}

fn explosion(nodes: u64, budget: u64) -> Error {
    Error::Explosion { nodes, budget }
}

impl TreeSampler {
    pub fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let n = self.n.sample(rng);
        if n >= u64::MAX as f64 {
            u64::MAX
        } else {
            n as u64
        }
    }

    pub fn generations<R: Rng + ?Sized>(
        &self,
        n_max: u32,
        node_budget: u64,
        rng: &mut R,
    ) -> Result<Vec<GenerationTrace>> {
        let depth = n_max as usize;
        let mut w = vec![NeumaierSum::new(); depth + 1];
        let mut z = vec![0u64; depth + 1];
        let mut stack: Vec<(usize, f64)> = vec![(0, 1.0)];
        let mut nodes = 1u64;
        if node_budget < 1 {
            return Err(Error::Parameter("node_budget must be ≥ 1".into()));
        }
        while let Some((d, pi)) = stack.pop() {
            let q = self.q.sample(rng);
            w[d].add(pi * q);
            z[d] += 1;
            if d == depth {
                continue;
            }
            let k = self.draw_n(rng);
            nodes = nodes.saturating_add(k);
            if nodes > node_budget {
                return Err(explosion(nodes, node_budget));
            }
            for _ in 0..k {
                let c = self.c.sample(rng);
                stack.push((d + 1, pi * c));
            }
        }
        Ok((0..=depth)
            .map(|d| GenerationTrace {
                n: d as u32,
                w: w[d].value(),
                z: z[d],
            })
            .collect())
    }

    /// One draw of `R^(depth)`; subtrees whose path weight is exactly 0 are skipped.
    pub fn truncated_sum<R: Rng + ?Sized>(
        &self,
        depth: u32,
        node_budget: u64,
        rng: &mut R,
    ) -> Result<f64> {
        // a fully deterministic tree is summed per generation instead of per node
        if let (Some(n), Some(q), Some(c)) = (
            self.n.constant_value(),
            self.q.constant_value(),
            self.c.constant_value(),
        ) {
            let m = n.floor() * c;
            return Ok((0..=depth as i32)
                .map(|k| q * m.powi(k))
                .collect::<NeumaierSum>()
                .value());
        }
        let depth = depth as usize;
        let mut acc = NeumaierSum::new();
        let mut stack: Vec<(usize, f64)> = vec![(0, 1.0)];
        let mut nodes = 1u64;
        while let Some((d, pi)) = stack.pop() {
            let q = self.q.sample(rng);
            acc.add(pi * q);
            if d == depth {
                continue;
            }
            let k = self.draw_n(rng);
            nodes = nodes.saturating_add(k);
            if nodes > node_budget {
                return Err(explosion(nodes, node_budget));
            }
            for _ in 0..k {
                let c = self.c.sample(rng);
                if c != 0.0 {
                    stack.push((d + 1, pi * c));
                }
            }
        }
        Ok(acc.value())
    }
}

/// Run `f(index, rng)` for every replica on `workers` threads (0 = all cores).
///
/// Replica `i` always uses `base.replica(i)` and results come back in index
/// order, so the output does not depend on the worker count.
pub fn par_replicas<T, F>(replicas: usize, workers: usize, base: &RngStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> Result<T> + Sync,
{
    let run = || -> Vec<Result<T>> {
        (0..replicas as u64)
            .into_par_iter()
            .map(|i| f(i, &mut base.replica(i).rng()))
            .collect()
    };
    let results = with_workers(workers, run)?;
    results.into_iter().collect()
}

/// Execute `op` inside a rayon pool of the requested size.
pub fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(op))
}

pub fn simulate_generations(
    model: &WbpModel,
    n_max: u32,
    node_budget: u64,
    rng: &RngStream,
) -> Result<Vec<GenerationTrace>> {
    model
        .sampler()?
        .generations(n_max, node_budget, &mut rng.rng())
}

/// Preconditions for sampling `R`: returns the mean-bias bound at `depth`.
///
/// `ρ < 1` gives a finite bound. When `ρ ≥ 1` the sum still converges almost
/// surely as long as some `β < 1` satisfies the stability conditions; the
/// bound is then `∞`.
pub fn r_sampling_bias(model: &WbpModel, depth: u32) -> Result<f64> {
    let rho = spectral_params(model, 1.0)?.rho;
    if rho < 1.0 {
        return mean_bias_bound(model, depth);
    }
    match find_stable_beta(model) {
        Some(b) if b < 1.0 => Ok(f64::INFINITY),
        _ => Err(Error::Instability(format!(
            "ρ = E[N]E[C] = {rho} ≥ 1 and no β satisfies the stability conditions ({model})"
        ))),
    }
}

pub fn simulate_r(
    model: &WbpModel,
    depth_cap: u32,
    node_budget: u64,
    rng: &RngStream,
) -> Result<TruncatedR> {
    let bias = r_sampling_bias(model, depth_cap)?;
    let value = model
        .sampler()?
        .truncated_sum(depth_cap, node_budget, &mut rng.rng())?;
    Ok(TruncatedR {
        value,
        depth: depth_cap,
        mean_bias_bound: bias,
    })
}

/// `replicas` independent draws of `R^(depth_cap)`, replica `i` on `base.replica(i)`.
pub fn simulate_r_replicas(
    model: &WbpModel,
    replicas: usize,
    depth_cap: u32,
    node_budget: u64,
    base: &RngStream,
    workers: usize,
) -> Result<Vec<TruncatedR>> {
    let bias = r_sampling_bias(model, depth_cap)?;
    let s = model.sampler()?;
    par_replicas(replicas, workers, base, |_, rng| {
        Ok(TruncatedR {
            value: s.truncated_sum(depth_cap, node_budget, rng)?,
            depth: depth_cap,
            mean_bias_bound: bias,
        })
    })
}

pub fn simulate_generation_replicas(
    model: &WbpModel,
    replicas: usize,
    n_max: u32,
    node_budget: u64,
    base: &RngStream,
    workers: usize,
) -> Result<Vec<Vec<GenerationTrace>>> {
    let s = model.sampler()?;
    par_replicas(replicas, workers, base, |_, rng| {
        s.generations(n_max, node_budget, rng)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointRun {
    /// `pools[k]` holds the pool after `k` iterations; `pools[0]` is drawn from `r0`.
    pub pools: Vec<Vec<f64>>,
    /// `ks[k] = KS(pools[k], pools[k + 1])`.
    pub ks: Vec<f64>,
    pub stability: StabilityReport,
}

impl FixedPointRun {
    pub fn final_pool(&self) -> &[f64] {
        self.pools.last().expect("pool 0 always exists")
    }
}

/// Population-dynamics iteration `R*_{k+1} = Q + Σ_{i≤N} C_i R*_{k,i}`, with
/// the `R*_{k,i}` resampled uniformly from the previous pool.
///
/// Pool entries are built in fixed chunks, each with its own substream, so
/// the result is independent of `workers`.
pub fn iterate_fixed_point(
    model: &WbpModel,
    pool_size: usize,
    iterations: usize,
    r0: &DistSpec,
    rng: &RngStream,
    workers: usize,
) -> Result<FixedPointRun> {
    if pool_size < 100 {
        return Err(Error::Parameter(format!("pool_size {pool_size} < 100")));
    }
    let beta = find_stable_beta(model).ok_or_else(|| {
        Error::Instability(format!(
            "no β ∈ (0, 4] satisfies the stability conditions for {model}"
        ))
    })?;
    let stability = crate::moments::stability_check(model, beta);
    let s = model.sampler()?;
    let r0s = r0.sampler()?;
    let mut init_rng = rng.derive("pool-0").rng();
    let mut pools = vec![(0..pool_size)
        .map(|_| r0s.sample(&mut init_rng))
        .collect::<Vec<f64>>()];
    let mut ks = Vec::with_capacity(iterations);
    let mut prev_sorted = sorted(&pools[0]);
    for k in 0..iterations {
        let prev = pools.last().unwrap();
        let stream = rng.derive(&format!("pool-{}", k + 1));
        let chunks = pool_size.div_ceil(POOL_CHUNK);
        let parts: Vec<Vec<f64>> = with_workers(workers, || {
            (0..chunks)
                .into_par_iter()
                .map(|ci| {
                    let mut r = stream.replica(ci as u64).rng();
                    let len = POOL_CHUNK.min(pool_size - ci * POOL_CHUNK);
                    (0..len)
                        .map(|_| {
                            let mut acc = NeumaierSum::new();
                            acc.add(s.q.sample(&mut r));
                            let n = s.draw_n(&mut r);
                            for _ in 0..n {
                                let c = s.c.sample(&mut r);
                                let j = r.random_range(0..pool_size);
                                acc.add(c * prev[j]);
                            }
                            acc.value()
                        })
                        .collect()
                })
                .collect()
        })?;
        let next: Vec<f64> = parts.concat();
        let next_sorted = sorted(&next);
        ks.push(ks_distance_sorted(&prev_sorted, &next_sorted));
        prev_sorted = next_sorted;
        pools.push(next);
    }
    Ok(FixedPointRun {
        pools,
        ks,
        stability,
    })
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Finite law as strictly increasing `(value, prob)` atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactPmf {
    atoms: Vec<(f64, f64)>,
}

const MERGE_TOL: f64 = 1e-12;

impl ExactPmf {
    /// Sort and merge atoms whose values agree within `10⁻¹²`.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match out.last_mut() {
                Some(last) if v - last.0 <= MERGE_TOL => last.1 += p,
                _ => out.push((v, p)),
            }
        }
        ExactPmf { atoms: out }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.1)
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// `E[X^p]` for `p > 0`.
    pub fn moment(&self, p: f64) -> f64 {
        self.atoms
            .iter()
            .map(|(v, q)| if *v == 0.0 { 0.0 } else { q * v.powf(p) })
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn prob(&self, value: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.0 - value).abs() <= MERGE_TOL)
            .map(|a| a.1)
            .sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactEnumeration {
    /// Laws of `W_0, ..., W_n`.
    pub w: Vec<ExactPmf>,
    /// Law of `R^(n)`.
    pub r: ExactPmf,
}

type Joint = Vec<(Vec<f64>, f64)>;

fn merge_joint(mut j: Joint, limit: usize) -> Result<Joint> {
    j.retain(|a| a.1 > 0.0);
    j.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Joint = Vec::with_capacity(j.len());
    for (v, p) in j {
        match out.last_mut() {
            Some(last)
                if last
                    .0
                    .iter()
                    .zip(&v)
                    .all(|(a, b)| (a - b).abs() <= MERGE_TOL) =>
            {
                last.1 += p
            }
            _ => out.push((v, p)),
        }
    }
    if out.len() > limit {
        return Err(Error::Limit {
            size: out.len(),
            limit,
        });
    }
    Ok(out)
}

/// Joint law of `(W_0, ..., W_m)` for a tree, built recursively by convolving
/// `N` iid scaled copies of the depth-`m-1` joint law.
fn subtree_joint(
    m: usize,
    n: &[(f64, f64)],
    q: &[(f64, f64)],
    c: &[(f64, f64)],
    limit: usize,
) -> Result<Joint> {
    if m == 0 {
        return merge_joint(q.iter().map(|&(v, p)| (vec![v], p)).collect(), limit);
    }
    let child = subtree_joint(m - 1, n, q, c, limit)?;
    let scaled = merge_joint(
        c.iter()
            .flat_map(|&(cv, cp)| {
                child
                    .iter()
                    .map(move |(v, p)| (v.iter().map(|x| cv * x).collect(), cp * p))
            })
            .collect(),
        limit,
    )?;
    let max_n = n.iter().map(|a| a.0 as usize).max().unwrap_or(0);
    // sums[k] = law of the sum of k iid scaled children
    let mut sums: Vec<Joint> = vec![vec![(vec![0.0; m], 1.0)]];
    for k in 1..=max_n {
        let prev = &sums[k - 1];
        let mut next = Vec::with_capacity(prev.len() * scaled.len());
        for (a, pa) in prev {
            for (b, pb) in &scaled {
                next.push((a.iter().zip(b).map(|(x, y)| x + y).collect(), pa * pb));
            }
        }
        sums.push(merge_joint(next, limit)?);
    }
    let mut out = Vec::new();
    for &(qv, qp) in q {
        for &(nv, np) in n {
            for (v, p) in &sums[nv as usize] {
                let mut row = Vec::with_capacity(m + 1);
                row.push(qv);
                row.extend_from_slice(v);
                out.push((row, qp * np * p));
            }
        }
    }
    merge_joint(out, limit)
}

/// Exact laws of `W_0..W_n` and `R^(n)` for models whose marks all have at
/// most four atoms, with `n ≤ 3`.
pub fn enumerate_exact(model: &WbpModel, n: u32, support_limit: usize) -> Result<ExactEnumeration> {
    if n > 3 {
        return Err(Error::OracleDomain(format!("depth {n} > 3")));
    }
    let atoms = |name: &str, d: &DistSpec| -> Result<Vec<(f64, f64)>> {
        match d.finite_support() {
            Some(a) if a.len() <= 4 => Ok(a),
            Some(a) => Err(Error::OracleDomain(format!(
                "{name} = {d} has {} atoms > 4",
                a.len()
            ))),
            None => Err(Error::OracleDomain(format!(
                "{name} = {d} does not have finite support"
            ))),
        }
    };
    let na = atoms("N", &model.n_dist)?;
    let qa = atoms("Q", &model.q_dist)?;
    let ca = atoms("C", &model.c_dist)?;
    let joint = subtree_joint(n as usize, &na, &qa, &ca, support_limit)?;
    let w = (0..=n as usize)
        .map(|k| ExactPmf::from_atoms(joint.iter().map(|(v, p)| (v[k], *p)).collect()))
        .collect();
    let r = ExactPmf::from_atoms(
        joint
            .iter()
            .map(|(v, p)| (v.iter().copied().collect::<NeumaierSum>().value(), *p))
            .collect(),
    );
    let r = ExactPmf::from_atoms(r.atoms);
    if r.len() > support_limit {
        return Err(Error::Limit {
            size: r.len(),
            limit: support_limit,
        });
    }
    Ok(ExactEnumeration { w, r })
}
