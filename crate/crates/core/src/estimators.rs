//! Empirical tail measurement.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::spectral_params;
use crate::numeric::{logspace, ols, quantile_sorted};
use crate::rng::RngStream;
use crate::theory::{classify_regime, RegimeKind};
use crate::tree::{simulate_generation_replicas, WbpModel, DEFAULT_NODE_BUDGET};

pub const DEFAULT_GRID_POINTS: usize = 64;

/// Empirical survival function at strictly increasing `x` with `p > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcdfCurve {
    pub points: Vec<(f64, f64)>,
}

impl CcdfCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    pub k: usize,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatio {
    pub points: Vec<(f64, f64)>,
    /// Median ratio over the upper half of the grid.
    pub plateau: f64,
}

pub enum Reference<'a> {
    Samples(&'a [f64]),
    Survival(&'a dyn Fn(f64) -> f64),
}

pub fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Fraction of sorted samples strictly above `x`.
pub fn exceedance(sorted: &[f64], x: f64) -> f64 {
    (sorted.len() - sorted.partition_point(|&s| s <= x)) as f64 / sorted.len() as f64
}

/// 64 log-spaced points from the median to the 99.99th percentile.
pub fn default_grid(sorted: &[f64]) -> Vec<f64> {
    let mut lo = quantile_sorted(sorted, 0.5);
    if lo <= 0.0 {
        lo = sorted.iter().copied().find(|&x| x > 0.0).unwrap_or(1.0);
    }
    let hi = quantile_sorted(sorted, 0.9999);
    if hi <= lo {
        return vec![lo];
    }
    logspace(lo, hi, DEFAULT_GRID_POINTS)
}

pub fn ccdf(samples: &[f64], grid: Option<&[f64]>) -> Result<CcdfCurve> {
    if samples.len() < 2 {
        return Err(Error::Input(format!(
            "ccdf needs ≥ 2 samples, got {}",
            samples.len()
        )));
    }
    ccdf_sorted(&sorted_copy(samples), grid)
}

pub fn ccdf_sorted(sorted: &[f64], grid: Option<&[f64]>) -> Result<CcdfCurve> {
    if sorted.len() < 2 {
        return Err(Error::Input(format!(
            "ccdf needs ≥ 2 samples, got {}",
            sorted.len()
        )));
    }
    let mut xs: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(sorted),
    };
    xs.retain(|&x| x > 0.0 && x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let points = xs
        .into_iter()
        .map(|x| (x, exceedance(sorted, x)))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    Ok(CcdfCurve { points })
}

/// `k = ⌈n^{2/3}⌉`, capped at 10% of the sample.
pub fn default_hill_k(n: usize) -> usize {
    let k = (n as f64).powf(2.0 / 3.0).ceil() as usize;
    k.min(n / 10).max(1)
}

/// Hill estimator over the `k` largest order statistics.
pub fn hill(samples: &[f64], k: Option<usize>) -> Result<TailEstimate> {
    let n = samples.len();
    let k = k.unwrap_or_else(|| default_hill_k(n));
    if k < 1 || k >= n {
        return Err(Error::Input(format!("hill: k = {k} outside 1..{n}")));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Input(format!("hill: nonpositive sample {bad}")));
    }
    let mut v = samples.to_vec();
    // descending order statistics X_(1) ≥ ... ≥ X_(k+1)
    v.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = v[k];
    let mean_log: f64 = v[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return Err(Error::Input(
            "hill: top order statistics are all equal".into(),
        ));
    }
    let alpha_hat = 1.0 / mean_log;
    Ok(TailEstimate {
        alpha_hat,
        k,
        stderr: alpha_hat / (k as f64).sqrt(),
    })
}

/// OLS slope of `log p` against `log x` for curve points inside `[x_lo, x_hi]`.
pub fn loglog_slope(curve: &CcdfCurve, x_lo: f64, x_hi: f64) -> Result<SlopeFit> {
    let (lx, lp): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter(|&&(x, p)| x >= x_lo && x <= x_hi && p > 0.0)
        .map(|&(x, p)| (x.ln(), p.ln()))
        .unzip();
    if lx.len() < 5 {
        return Err(Error::Input(format!(
            "loglog_slope needs ≥ 5 points in [{x_lo}, {x_hi}], got {}",
            lx.len()
        )));
    }
    let (slope, intercept, stderr) = ols(&lx, &lp);
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        points: lx.len(),
    })
}

/// Pointwise ratio of the numerator's empirical tail to a reference tail.
pub fn tail_ratio(numerator: &[f64], reference: Reference<'_>, grid: &[f64]) -> Result<TailRatio> {
    let num = sorted_copy(numerator);
    let mut xs = grid.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let Some(&x0) = xs.first() else {
        return Err(Error::Input("tail_ratio: empty grid".into()));
    };
    let hits = (exceedance(&num, x0) * num.len() as f64).round() as usize;
    if hits < 100 {
        return Err(Error::Input(format!(
            "tail_ratio: only {hits} numerator exceedances at x = {x0} (need ≥ 100)"
        )));
    }
    let ref_sorted = match reference {
        Reference::Samples(s) => Some(sorted_copy(s)),
        Reference::Survival(_) => None,
    };
    let points: Vec<(f64, f64)> = xs
        .iter()
        .filter_map(|&x| {
            let r = match (&ref_sorted, &reference) {
                (Some(s), _) => exceedance(s, x),
                (None, Reference::Survival(f)) => f(x),
                _ => unreachable!(),
            };
            (r > 0.0).then(|| (x, exceedance(&num, x) / r))
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Input(
            "tail_ratio: reference tail is zero on the whole grid".into(),
        ));
    }
    let mut upper: Vec<f64> = points[points.len() / 2..].iter().map(|p| p.1).collect();
    upper.sort_by(f64::total_cmp);
    let m = upper.len();
    let plateau = if m % 2 == 1 {
        upper[m / 2]
    } else {
        0.5 * (upper[m / 2 - 1] + upper[m / 2])
    };
    Ok(TailRatio { points, plateau })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCell {
    pub x: f64,
    pub ratio: f64,
    /// Ratio band from a ±2 standard-error binomial interval.
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: u32,
    pub max_ratio: f64,
    pub cells: Vec<BoundCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBoundReport {
    pub eta: f64,
    pub rows: Vec<BoundRow>,
    pub max_ratio: f64,
    /// OLS slope of the per-n maximum ratio against `n`.
    pub trend_slope: f64,
    pub bounded: bool,
}

/// Empirical `max_x P̂(W_n > x) / (η^n P(N > x))` for each `n` in `n_range`.
#[allow(clippy::too_many_arguments)]
pub fn uniform_bound_check(
    model: &WbpModel,
    eta: f64,
    n_range: std::ops::RangeInclusive<u32>,
    x_grid: &[f64],
    replicas: usize,
    rng: &RngStream,
    workers: usize,
) -> Result<UniformBoundReport> {
    let class = classify_regime(model);
    if class.kind != RegimeKind::NDominant {
        return Err(Error::Regime(format!(
            "uniform bound needs an N-dominant model, got {:?} ({})",
            class.kind,
            class.notes.join("; ")
        )));
    }
    let alpha = class.alpha.expect("N-dominant carries its index");
    let sp = spectral_params(model, alpha)?;
    let floor = sp.rho.max(sp.rho_beta);
    if !(eta > floor && eta < 1.0) {
        return Err(Error::Parameter(format!(
            "η = {eta} must lie in (ρ ∨ ρ_α, 1) = ({floor}, 1)"
        )));
    }
    if *n_range.start() < 1 {
        return Err(Error::Parameter("n must start at 1".into()));
    }
    if x_grid.iter().any(|&x| !(x >= 1.0)) {
        return Err(Error::Parameter("x grid must lie in [1, ∞)".into()));
    }
    let n_max = *n_range.end();
    let runs =
        simulate_generation_replicas(model, replicas, n_max, DEFAULT_NODE_BUDGET, rng, workers)?;
    let total = replicas as f64;
    let rows: Vec<BoundRow> = n_range
        .map(|n| {
            let w = sorted_copy(&runs.iter().map(|t| t[n as usize].w).collect::<Vec<f64>>());
            let scale = eta.powi(n as i32);
            let cells: Vec<BoundCell> = x_grid
                .iter()
                .map(|&x| {
                    let p = exceedance(&w, x);
                    let denom = scale * model.n_dist.survival(x);
                    let se = (p * (1.0 - p) / total).sqrt();
                    BoundCell {
                        x,
                        ratio: p / denom,
                        lo: (p - 2.0 * se).max(0.0) / denom,
                        hi: (p + 2.0 * se) / denom,
                    }
                })
                .collect();
            let max_ratio = cells.iter().map(|c| c.ratio).fold(0.0, f64::max);
            BoundRow {
                n,
                max_ratio,
                cells,
            }
        })
        .collect();
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let maxes: Vec<f64> = rows.iter().map(|r| r.max_ratio).collect();
    let trend_slope = if rows.len() >= 2 {
        ols(&ns, &maxes).0
    } else {
        0.0
    };
    Ok(UniformBoundReport {
        eta,
        max_ratio: maxes.iter().copied().fold(0.0, f64::max),
        bounded: trend_slope <= 0.0,
        trend_slope,
        rows,
    })
}
