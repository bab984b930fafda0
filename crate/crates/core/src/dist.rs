//! Declarative nonnegative distributions for the branching marks `N`, `Q`, `C`.
//!
//! A [`DistSpec`] is plain data with a canonical text form (`zipf(2.5)`,
//! `reciprocal(shift(poisson(5),1),0.85)`, ...). Sampling goes through a
//! compiled [`Sampler`], which precomputes inversion tables once.
//!
//! Moments are exposed in Mellin form: [`DistSpec::mellin`] returns `E[X^θ]`
//! (`+∞` when it diverges) and [`DistSpec::mellin_log`] returns
//! `E[X^θ log X]` with the convention `0^θ log 0 = 0`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson};
use statrs::function::erf::erfc;
use statrs::function::gamma::{digamma, gamma, gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::{power_sum, richardson_derivative, shifted_power_sum, NeumaierSum};

/// Largest bounded Zipf cutoff that is still enumerated as a finite support.
const FINITE_ZIPF_ATOMS: u64 = 1_000;
/// Inversion table length for Zipf sampling; larger values use the tail sampler.
const ZIPF_TABLE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Constant(f64),
    /// `P(X = v0) = p0`, `P(X = v1) = 1 - p0`.
    TwoPoint {
        v0: f64,
        p0: f64,
        v1: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// `log X ~ Normal(mu, sigma2)`.
    LogNormal {
        mu: f64,
        sigma2: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `P(X > x) = (scale / x)^index` for `x ≥ scale`.
    Pareto {
        index: f64,
        scale: f64,
    },
    /// `P(X = k) ∝ k^(-index-1)` on `1..=cutoff` (unbounded when `cutoff` is `None`).
    Zipf {
        index: f64,
        cutoff: Option<u64>,
    },
    Poisson {
        rate: f64,
    },
    /// Failures before the first success, support `{0, 1, 2, ...}`.
    Geometric {
        p: f64,
    },
    Scaled {
        base: Box<DistSpec>,
        factor: f64,
    },
    /// `X = scale / base`, base supported on `[1, ∞)`.
    Reciprocal {
        base: Box<DistSpec>,
        scale: f64,
    },
    /// `X = base + offset` for an integer-valued base.
    Shifted {
        base: Box<DistSpec>,
        offset: u64,
    },
    /// With probability `weight` draw from `first`, otherwise from `second`.
    Mixture {
        weight: f64,
        first: Box<DistSpec>,
        second: Box<DistSpec>,
    },
}

fn pow0(x: f64, theta: f64) -> f64 {
    if x == 0.0 {
        if theta > 0.0 {
            0.0
        } else if theta == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x.powf(theta)
    }
}

fn pow0_log(x: f64, theta: f64) -> f64 {
    if x == 0.0 {
        if theta > 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        x.powf(theta) * x.ln()
    }
}

fn is_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn is_int(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0
}

/// Whether `x` is within `tol` of a rational with denominator at most `max_den`.
fn near_rational(x: f64, max_den: u64, tol: f64) -> bool {
    let (mut h0, mut h1) = (0.0f64, 1.0f64);
    let (mut k0, mut k1) = (1.0f64, 0.0f64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as f64 {
            return false;
        }
        if (x - h2 / k2).abs() <= tol {
            return true;
        }
        let frac = r - a;
        if frac.abs() < 1e-15 {
            return false;
        }
        r = 1.0 / frac;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    false
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.retain(|&(_, p)| p > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match out.last_mut() {
            Some(last) if (v - last.0).abs() <= 1e-12 => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    out
}

impl DistSpec {
    pub fn constant(v: f64) -> Self {
        DistSpec::Constant(v)
    }

    pub fn zipf(index: f64) -> Self {
        DistSpec::Zipf {
            index,
            cutoff: None,
        }
    }

    pub fn lognormal(mu: f64, sigma2: f64) -> Self {
        DistSpec::LogNormal { mu, sigma2 }
    }

    pub fn pareto(index: f64, scale: f64) -> Self {
        DistSpec::Pareto { index, scale }
    }

    pub fn scaled(self, factor: f64) -> Self {
        DistSpec::Scaled {
            base: Box::new(self),
            factor,
        }
    }

    pub fn shifted(self, offset: u64) -> Self {
        DistSpec::Shifted {
            base: Box::new(self),
            offset,
        }
    }

    pub fn reciprocal(self, scale: f64) -> Self {
        DistSpec::Reciprocal {
            base: Box::new(self),
            scale,
        }
    }

    pub fn mixture(weight: f64, first: DistSpec, second: DistSpec) -> Self {
        DistSpec::Mixture {
            weight,
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    /// Integer-valued law with the tail of unbounded `zipf(index)` and the
    /// requested mean, obtained by mixing the Zipf law with a point mass.
    ///
    /// The atom sits at 0 when the target mean is below the Zipf mean and at
    /// `⌊mean⌋ + 1` otherwise, so `P(X > x)` is a fixed multiple of the Zipf
    /// survival for large `x`.
    pub fn zipf_with_mean(index: f64, mean: f64) -> Result<Self> {
        let z = DistSpec::zipf(index);
        z.validate()?;
        let zmean = z.mean()?;
        if !zmean.is_finite() {
            return Err(Error::Parameter(format!(
                "zipf({index}) has infinite mean; index must exceed 1"
            )));
        }
        if !(mean > 0.0) {
            return Err(Error::Parameter(format!(
                "target mean {mean} must be positive"
            )));
        }
        let atom = if mean <= zmean {
            0.0
        } else {
            mean.floor() + 1.0
        };
        let w = (atom - mean) / (atom - zmean);
        if (w - 1.0).abs() < 1e-15 {
            return Ok(z);
        }
        Ok(DistSpec::mixture(w, z, DistSpec::Constant(atom)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        match self {
            DistSpec::Constant(v) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return bad(format!("constant({v}): value must be finite and ≥ 0"));
                }
            }
            DistSpec::TwoPoint { v0, p0, v1 } => {
                if !(v0.is_finite() && v1.is_finite() && *v0 >= 0.0 && *v1 >= 0.0) {
                    return bad(format!(
                        "twopoint: values {v0}, {v1} must be finite and ≥ 0"
                    ));
                }
                if !is_prob(*p0) {
                    return bad(format!("twopoint: p0 = {p0} is not a probability"));
                }
            }
            DistSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                    return bad(format!("uniform({a},{b}): need 0 ≤ a < b"));
                }
            }
            DistSpec::LogNormal { mu, sigma2 } => {
                if !(mu.is_finite() && sigma2.is_finite() && *sigma2 > 0.0) {
                    return bad(format!("lognormal({mu},{sigma2}): need sigma2 > 0"));
                }
            }
            DistSpec::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential({rate}): need rate > 0"));
                }
            }
            DistSpec::Pareto { index, scale } => {
                if !(index.is_finite() && scale.is_finite() && *index > 0.0 && *scale > 0.0) {
                    return bad(format!("pareto({index},{scale}): need index, scale > 0"));
                }
            }
            DistSpec::Zipf { index, cutoff } => {
                if !(index.is_finite() && *index > 0.0) {
                    return bad(format!("zipf({index}): need index > 0"));
                }
                if cutoff == &Some(0) {
                    return bad("zipf: cutoff must be ≥ 1".into());
                }
            }
            DistSpec::Poisson { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("poisson({rate}): need rate > 0"));
                }
            }
            DistSpec::Geometric { p } => {
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    return bad(format!("geometric({p}): need 0 < p ≤ 1"));
                }
            }
            DistSpec::Scaled { base, factor } => {
                base.validate()?;
                if !(factor.is_finite() && *factor > 0.0) {
                    return bad(format!("scaled: factor {factor} must be > 0"));
                }
            }
            DistSpec::Reciprocal { base, scale } => {
                base.validate()?;
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("reciprocal: scale {scale} must be > 0"));
                }
                if base.support_min() < 1.0 {
                    return bad(format!(
                        "reciprocal: base {base} must be supported on [1, ∞)"
                    ));
                }
            }
            DistSpec::Shifted { base, .. } => {
                base.validate()?;
                if !base.is_integer_valued() {
                    return bad(format!("shift: base {base} must be integer-valued"));
                }
            }
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                first.validate()?;
                second.validate()?;
                if !is_prob(*weight) {
                    return bad(format!("mixture: weight {weight} is not a probability"));
                }
            }
        }
        Ok(())
    }

    /// Whether all mass sits on `{0, 1, 2, ...}`.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            DistSpec::Constant(v) => is_int(*v),
            DistSpec::TwoPoint { v0, p0, v1 } => {
                (*p0 == 0.0 || is_int(*v0)) && (*p0 == 1.0 || is_int(*v1))
            }
            DistSpec::Zipf { .. } | DistSpec::Poisson { .. } | DistSpec::Geometric { .. } => true,
            DistSpec::Shifted { base, .. } => base.is_integer_valued(),
            DistSpec::Scaled { base, factor } => base.is_integer_valued() && is_int(*factor),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                (*weight == 0.0 || first.is_integer_valued())
                    && (*weight == 1.0 || second.is_integer_valued())
            }
            _ => false,
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match self {
            DistSpec::Constant(v) => *v,
            DistSpec::TwoPoint { v0, p0, v1 } => {
                if *p0 == 1.0 {
                    *v0
                } else if *p0 == 0.0 {
                    *v1
                } else {
                    v0.min(*v1)
                }
            }
            DistSpec::Uniform { a, .. } => *a,
            DistSpec::LogNormal { .. } | DistSpec::Exponential { .. } => 0.0,
            DistSpec::Pareto { scale, .. } => *scale,
            DistSpec::Zipf { .. } => 1.0,
            DistSpec::Poisson { .. } | DistSpec::Geometric { .. } => 0.0,
            DistSpec::Scaled { base, factor } => base.support_min() * factor,
            DistSpec::Shifted { base, offset } => base.support_min() + *offset as f64,
            DistSpec::Reciprocal { base, scale } => scale / base.support_max(),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                if *weight == 1.0 {
                    first.support_min()
                } else if *weight == 0.0 {
                    second.support_min()
                } else {
                    first.support_min().min(second.support_min())
                }
            }
        }
    }

    /// Upper end of the support (`+∞` when unbounded).
    pub fn support_max(&self) -> f64 {
        match self {
            DistSpec::Constant(v) => *v,
            DistSpec::TwoPoint { v0, p0, v1 } => {
                if *p0 == 1.0 {
                    *v0
                } else if *p0 == 0.0 {
                    *v1
                } else {
                    v0.max(*v1)
                }
            }
            DistSpec::Uniform { b, .. } => *b,
            DistSpec::Zipf { cutoff, .. } => cutoff.map_or(f64::INFINITY, |c| c as f64),
            DistSpec::Scaled { base, factor } => base.support_max() * factor,
            DistSpec::Shifted { base, offset } => base.support_max() + *offset as f64,
            DistSpec::Reciprocal { base, scale } => scale / base.support_min(),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                if *weight == 1.0 {
                    first.support_max()
                } else if *weight == 0.0 {
                    second.support_max()
                } else {
                    first.support_max().max(second.support_max())
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Declared power-law tail index (`P(X > x) ≈ K x^-index`), if any.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            DistSpec::Zipf {
                index,
                cutoff: None,
            } => Some(*index),
            DistSpec::Pareto { index, .. } => Some(*index),
            DistSpec::Scaled { base, .. } | DistSpec::Shifted { base, .. } => base.tail_index(),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                let a = if *weight > 0.0 {
                    first.tail_index()
                } else {
                    None
                };
                let b = if *weight < 1.0 {
                    second.tail_index()
                } else {
                    None
                };
                match (a, b) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                }
            }
            _ => None,
        }
    }

    /// Atoms `(value, prob)` for finite-support laws, sorted and merged.
    pub fn finite_support(&self) -> Option<Vec<(f64, f64)>> {
        let atoms = match self {
            DistSpec::Constant(v) => vec![(*v, 1.0)],
            DistSpec::TwoPoint { v0, p0, v1 } => vec![(*v0, *p0), (*v1, 1.0 - p0)],
            DistSpec::Zipf {
                index,
                cutoff: Some(c),
            } if *c <= FINITE_ZIPF_ATOMS => {
                let s = index + 1.0;
                let z = power_sum(-s, 1, Some(*c)).v;
                (1..=*c)
                    .map(|k| (k as f64, (k as f64).powf(-s) / z))
                    .collect()
            }
            DistSpec::Scaled { base, factor } => base
                .finite_support()?
                .into_iter()
                .map(|(v, p)| (v * factor, p))
                .collect(),
            DistSpec::Shifted { base, offset } => base
                .finite_support()?
                .into_iter()
                .map(|(v, p)| (v + *offset as f64, p))
                .collect(),
            DistSpec::Reciprocal { base, scale } => base
                .finite_support()?
                .into_iter()
                .map(|(v, p)| (scale / v, p))
                .collect(),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                let mut atoms = Vec::new();
                if *weight > 0.0 {
                    atoms.extend(
                        first
                            .finite_support()?
                            .into_iter()
                            .map(|(v, p)| (v, p * weight)),
                    );
                }
                if *weight < 1.0 {
                    atoms.extend(
                        second
                            .finite_support()?
                            .into_iter()
                            .map(|(v, p)| (v, p * (1.0 - weight))),
                    );
                }
                atoms
            }
            _ => return None,
        };
        Some(merge_atoms(atoms))
    }

    /// True when `log X` given `X ≠ 0` is known to live on a lattice `hℤ`.
    ///
    /// Only finite-support laws can be recognised; every other law is
    /// assumed nonarithmetic.
    pub fn is_log_arithmetic(&self) -> bool {
        let Some(atoms) = self.finite_support() else {
            return false;
        };
        let logs: Vec<f64> = atoms
            .iter()
            .filter(|(v, _)| *v > 0.0)
            .map(|(v, _)| v.ln())
            .collect();
        let Some(&reference) = logs.iter().find(|l| l.abs() > 1e-15) else {
            return true;
        };
        logs.iter()
            .all(|l| near_rational(l / reference, 1_000, 1e-9))
    }

    pub fn mean(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            DistSpec::Constant(v) => *v,
            DistSpec::TwoPoint { v0, p0, v1 } => p0 * v0 + (1.0 - p0) * v1,
            DistSpec::Uniform { a, b } => 0.5 * (a + b),
            DistSpec::LogNormal { mu, sigma2 } => (mu + 0.5 * sigma2).exp(),
            DistSpec::Exponential { rate } => 1.0 / rate,
            DistSpec::Pareto { index, scale } => {
                if *index <= 1.0 {
                    f64::INFINITY
                } else {
                    index * scale / (index - 1.0)
                }
            }
            DistSpec::Zipf { index, cutoff } => {
                let s = index + 1.0;
                power_sum(-index, 1, *cutoff).v / power_sum(-s, 1, *cutoff).v
            }
            DistSpec::Poisson { rate } => *rate,
            DistSpec::Geometric { p } => (1.0 - p) / p,
            DistSpec::Scaled { base, factor } => factor * base.mean()?,
            DistSpec::Shifted { base, offset } => base.mean()? + *offset as f64,
            DistSpec::Reciprocal { .. } => self.moment_real(1.0)?,
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => weight * first.mean()? + (1.0 - weight) * second.mean()?,
        })
    }

    /// `E[X^θ]` for `θ ≥ 0`; `+∞` when the moment diverges.
    pub fn mellin(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::Domain(format!(
                "mellin exponent {theta} must be ≥ 0"
            )));
        }
        self.validate()?;
        if theta == 0.0 {
            return Ok(1.0);
        }
        self.moment_real(theta)
    }

    /// `E[X^θ log X]` for `θ ≥ 0` with `0^θ log 0 = 0`.
    pub fn mellin_log(&self, theta: f64) -> Result<f64> {
        let m = self.mellin(theta)?;
        if !m.is_finite() {
            return Err(Error::Divergence(format!("E[X^{theta}] = ∞ for {self}")));
        }
        let v = self.log_moment_real(theta)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Divergence(format!(
                "E[X^{theta} log X] diverges for {self}"
            )))
        }
    }

    /// `E[X^θ]` for any real `θ` (negative exponents are used by [`DistSpec::Reciprocal`]).
    fn moment_real(&self, theta: f64) -> Result<f64> {
        if theta == 0.0 {
            return Ok(1.0);
        }
        Ok(match self {
            DistSpec::Constant(v) => pow0(*v, theta),
            DistSpec::TwoPoint { v0, p0, v1 } => {
                let mut acc = 0.0;
                if *p0 > 0.0 {
                    acc += p0 * pow0(*v0, theta);
                }
                if *p0 < 1.0 {
                    acc += (1.0 - p0) * pow0(*v1, theta);
                }
                acc
            }
            DistSpec::Uniform { a, b } => {
                if theta == -1.0 {
                    if *a == 0.0 {
                        f64::INFINITY
                    } else {
                        (b.ln() - a.ln()) / (b - a)
                    }
                } else if theta < -1.0 && *a == 0.0 {
                    f64::INFINITY
                } else {
                    let t1 = theta + 1.0;
                    (pow0(*b, t1) - pow0(*a, t1)) / (t1 * (b - a))
                }
            }
            DistSpec::LogNormal { mu, sigma2 } => (theta * mu + 0.5 * theta * theta * sigma2).exp(),
            DistSpec::Exponential { rate } => {
                if theta <= -1.0 {
                    f64::INFINITY
                } else {
                    gamma(1.0 + theta) / rate.powf(theta)
                }
            }
            DistSpec::Pareto { index, scale } => {
                if theta >= *index {
                    f64::INFINITY
                } else {
                    index * scale.powf(theta) / (index - theta)
                }
            }
            DistSpec::Zipf { index, cutoff } => {
                let s = index + 1.0;
                power_sum(theta - s, 1, *cutoff).v / power_sum(-s, 1, *cutoff).v
            }
            DistSpec::Poisson { .. } | DistSpec::Geometric { .. } => {
                if theta < 0.0 {
                    f64::INFINITY
                } else {
                    self.expect_light(&|x| pow0(x, theta))
                        .expect("light discrete family")
                }
            }
            DistSpec::Scaled { base, factor } => factor.powf(theta) * base.moment_real(theta)?,
            DistSpec::Reciprocal { base, scale } => scale.powf(theta) * base.moment_real(-theta)?,
            DistSpec::Shifted { base, offset } => shifted_moment(base, *offset as f64, theta)?,
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => mix(
                *weight,
                || first.moment_real(theta),
                || second.moment_real(theta),
            )?,
        })
    }

    /// `E[X^θ log X]` for any real `θ`.
    fn log_moment_real(&self, theta: f64) -> Result<f64> {
        Ok(match self {
            DistSpec::Constant(v) => pow0_log(*v, theta),
            DistSpec::TwoPoint { v0, p0, v1 } => {
                let mut acc = 0.0;
                if *p0 > 0.0 {
                    acc += p0 * pow0_log(*v0, theta);
                }
                if *p0 < 1.0 {
                    acc += (1.0 - p0) * pow0_log(*v1, theta);
                }
                acc
            }
            DistSpec::Uniform { a, b } => {
                let anti = |x: f64| -> f64 {
                    if x == 0.0 {
                        return 0.0;
                    }
                    if theta == -1.0 {
                        0.5 * x.ln() * x.ln()
                    } else {
                        let t1 = theta + 1.0;
                        x.powf(t1) * (x.ln() / t1 - 1.0 / (t1 * t1))
                    }
                };
                if theta <= -1.0 && *a == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (anti(*b) - anti(*a)) / (b - a)
                }
            }
            DistSpec::LogNormal { mu, sigma2 } => {
                (mu + theta * sigma2) * (theta * mu + 0.5 * theta * theta * sigma2).exp()
            }
            DistSpec::Exponential { rate } => {
                if theta <= -1.0 {
                    f64::NAN
                } else {
                    gamma(1.0 + theta) / rate.powf(theta) * (digamma(1.0 + theta) - rate.ln())
                }
            }
            DistSpec::Pareto { index, scale } => {
                if theta >= *index {
                    f64::INFINITY
                } else {
                    index * scale.powf(theta) / (index - theta)
                        * (scale.ln() + 1.0 / (index - theta))
                }
            }
            DistSpec::Zipf { index, cutoff } => {
                let s = index + 1.0;
                power_sum(theta - s, 1, *cutoff).d / power_sum(-s, 1, *cutoff).v
            }
            DistSpec::Poisson { .. } | DistSpec::Geometric { .. } => {
                if theta < 0.0 {
                    f64::NAN
                } else {
                    self.expect_light(&|x| pow0_log(x, theta))
                        .expect("light discrete family")
                }
            }
            DistSpec::Scaled { base, factor } => {
                factor.powf(theta)
                    * (factor.ln() * base.moment_real(theta)? + base.log_moment_real(theta)?)
            }
            DistSpec::Reciprocal { base, scale } => {
                scale.powf(theta)
                    * (scale.ln() * base.moment_real(-theta)? - base.log_moment_real(-theta)?)
            }
            DistSpec::Shifted { base, offset } => {
                let c = *offset as f64;
                match base.expect_light(&|x| pow0_log(x + c, theta)) {
                    Some(v) => v,
                    None => {
                        // numerical derivative of the Mellin transform in θ
                        let f = |t: f64| shifted_moment(base, c, t).unwrap_or(f64::NAN);
                        richardson_derivative(f, theta, 1e-5)
                    }
                }
            }
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => mix(
                *weight,
                || first.log_moment_real(theta),
                || second.log_moment_real(theta),
            )?,
        })
    }

    /// `E[f(X)]` for light-tailed discrete laws by direct pmf summation.
    fn expect_light(&self, f: &dyn Fn(f64) -> f64) -> Option<f64> {
        match self {
            DistSpec::Constant(_) | DistSpec::TwoPoint { .. } => {
                let atoms = self.finite_support()?;
                Some(atoms.iter().map(|(v, p)| p * f(*v)).sum())
            }
            DistSpec::Poisson { rate } => {
                let lr = rate.ln();
                Some(series(
                    |k| (-rate + k * lr - ln_gamma(k + 1.0)).exp(),
                    *rate,
                    f,
                ))
            }
            DistSpec::Geometric { p } => {
                let lq = (-p).ln_1p();
                let mean = (1.0 - p) / p;
                Some(series(|k| p * (k * lq).exp(), mean, f))
            }
            DistSpec::Shifted { base, offset } => {
                let c = *offset as f64;
                base.expect_light(&|x| f(x + c))
            }
            DistSpec::Scaled { base, factor } => base.expect_light(&|x| f(x * factor)),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                let a = if *weight > 0.0 {
                    first.expect_light(f)?
                } else {
                    0.0
                };
                let b = if *weight < 1.0 {
                    second.expect_light(f)?
                } else {
                    0.0
                };
                Some(weight * a + (1.0 - weight) * b)
            }
            DistSpec::Zipf {
                cutoff: Some(_), ..
            } => {
                let atoms = self.finite_support()?;
                Some(atoms.iter().map(|(v, p)| p * f(*v)).sum())
            }
            _ => None,
        }
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            DistSpec::Constant(v) => (x < *v) as u8 as f64,
            DistSpec::TwoPoint { v0, p0, v1 } => {
                let mut s = 0.0;
                if *v0 > x {
                    s += p0;
                }
                if *v1 > x {
                    s += 1.0 - p0;
                }
                s
            }
            DistSpec::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            DistSpec::LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - mu) / (2.0 * sigma2).sqrt())
                }
            }
            DistSpec::Exponential { rate } => {
                if x < 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            DistSpec::Pareto { index, scale } => {
                if x < *scale {
                    1.0
                } else {
                    (scale / x).powf(*index)
                }
            }
            DistSpec::Zipf { index, cutoff } => {
                if x < 1.0 {
                    return 1.0;
                }
                let m = x.floor() as u64;
                if cutoff.is_some_and(|c| m >= c) {
                    return 0.0;
                }
                let s = index + 1.0;
                power_sum(-s, m + 1, *cutoff).v / power_sum(-s, 1, *cutoff).v
            }
            DistSpec::Poisson { rate } => {
                if x < 0.0 {
                    1.0
                } else {
                    gamma_lr(x.floor() + 1.0, *rate)
                }
            }
            DistSpec::Geometric { p } => {
                if x < 0.0 {
                    1.0
                } else {
                    ((x.floor() + 1.0) * (-p).ln_1p()).exp()
                }
            }
            DistSpec::Scaled { base, factor } => base.survival(x / factor),
            DistSpec::Shifted { base, offset } => base.survival(x - *offset as f64),
            DistSpec::Reciprocal { base, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    base.prob_below(scale / x)
                }
            }
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => weight * first.survival(x) + (1.0 - weight) * second.survival(x),
        }
    }

    /// `P(X < y)`.
    pub fn prob_below(&self, y: f64) -> f64 {
        match self {
            DistSpec::Constant(v) => (*v < y) as u8 as f64,
            DistSpec::TwoPoint { v0, p0, v1 } => {
                let mut s = 0.0;
                if *v0 < y {
                    s += p0;
                }
                if *v1 < y {
                    s += 1.0 - p0;
                }
                s
            }
            DistSpec::Zipf { .. } | DistSpec::Poisson { .. } | DistSpec::Geometric { .. } => {
                1.0 - self.survival(y.ceil() - 1.0)
            }
            DistSpec::Scaled { base, factor } => base.prob_below(y / factor),
            DistSpec::Shifted { base, offset } => base.prob_below(y - *offset as f64),
            DistSpec::Reciprocal { base, scale } => {
                if y <= 0.0 {
                    0.0
                } else {
                    base.survival(scale / y)
                }
            }
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => weight * first.prob_below(y) + (1.0 - weight) * second.prob_below(y),
            _ => 1.0 - self.survival(y),
        }
    }

    /// One draw; compiles a [`Sampler`] per call, so prefer [`DistSpec::sampler`] in loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Sampler::compile(self)
    }
}

fn mix(
    weight: f64,
    a: impl FnOnce() -> Result<f64>,
    b: impl FnOnce() -> Result<f64>,
) -> Result<f64> {
    let x = if weight > 0.0 { weight * a()? } else { 0.0 };
    let y = if weight < 1.0 {
        (1.0 - weight) * b()?
    } else {
        0.0
    };
    Ok(x + y)
}

fn shifted_moment(base: &DistSpec, c: f64, theta: f64) -> Result<f64> {
    match base {
        DistSpec::Zipf { index, cutoff } => {
            let s = index + 1.0;
            Ok(shifted_power_sum(theta, s, c, *cutoff) / power_sum(-s, 1, *cutoff).v)
        }
        DistSpec::Shifted { base, offset } => shifted_moment(base, c + *offset as f64, theta),
        DistSpec::Mixture {
            weight,
            first,
            second,
        } => mix(
            *weight,
            || shifted_moment(first, c, theta),
            || shifted_moment(second, c, theta),
        ),
        other => other
            .expect_light(&|x| pow0(x + c, theta))
            .ok_or_else(|| Error::Domain(format!("no moment formula for shift({other},{c})"))),
    }
}

/// `Σ_k pmf(k) f(k)` over `k = 0, 1, ...` until the terms are negligible.
fn series(pmf: impl Fn(f64) -> f64, mean: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let mut acc = NeumaierSum::new();
    let mut mass = NeumaierSum::new();
    let mut small = 0;
    let floor = mean + 10.0 * mean.sqrt() + 20.0;
    for k in 0..50_000_000u64 {
        let kf = k as f64;
        let p = pmf(kf);
        let term = p * f(kf);
        acc.add(term);
        mass.add(p);
        if kf > floor && mass.value() > 1.0 - 1e-15 && term.abs() <= 1e-18 * acc.value().abs() {
            small += 1;
            if small > 8 {
                break;
            }
        } else {
            small = 0;
        }
    }
    acc.value()
}

fn write_num(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    write!(f, "{x}")
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[f64]| -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write_num(f, *x)?;
            }
            write!(f, ")")
        };
        match self {
            DistSpec::Constant(v) => args(f, "constant", &[*v]),
            DistSpec::TwoPoint { v0, p0, v1 } => args(f, "twopoint", &[*v0, *p0, *v1]),
            DistSpec::Uniform { a, b } => args(f, "uniform", &[*a, *b]),
            DistSpec::LogNormal { mu, sigma2 } => args(f, "lognormal", &[*mu, *sigma2]),
            DistSpec::Exponential { rate } => args(f, "exponential", &[*rate]),
            DistSpec::Pareto { index, scale } => args(f, "pareto", &[*index, *scale]),
            DistSpec::Zipf { index, cutoff } => match cutoff {
                None => args(f, "zipf", &[*index]),
                Some(c) => {
                    write!(f, "zipf(")?;
                    write_num(f, *index)?;
                    write!(f, ",{c})")
                }
            },
            DistSpec::Poisson { rate } => args(f, "poisson", &[*rate]),
            DistSpec::Geometric { p } => args(f, "geometric", &[*p]),
            DistSpec::Scaled { base, factor } => {
                write!(f, "scaled({base},")?;
                write_num(f, *factor)?;
                write!(f, ")")
            }
            DistSpec::Reciprocal { base, scale } => {
                write!(f, "reciprocal({base},")?;
                write_num(f, *scale)?;
                write!(f, ")")
            }
            DistSpec::Shifted { base, offset } => write!(f, "shift({base},{offset})"),
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => {
                write!(f, "mixture(")?;
                write_num(f, *weight)?;
                write!(f, ",{first},{second})")
            }
        }
    }
}

enum Arg {
    Num(f64, String),
    Spec(DistSpec),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at offset {} in `{}`",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphabetic() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        (self.pos > start)
            .then(|| String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_lowercase())
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        let start = self.pos;
        if let Some(name) = self.ident() {
            if name != "inf" && name != "e" {
                return Ok(Arg::Spec(self.call(name)?));
            }
            self.pos = start;
        }
        while self.pos < self.src.len() && !matches!(self.src[self.pos], b',' | b')') {
            self.pos += 1;
        }
        let text = String::from_utf8_lossy(&self.src[start..self.pos])
            .trim()
            .to_string();
        let v = f64::from_str(&text).map_err(|_| self.err(&format!("bad number `{text}`")))?;
        Ok(Arg::Num(v, text))
    }

    fn call(&mut self, name: String) -> Result<DistSpec> {
        self.expect(b'(')?;
        let mut args = Vec::new();
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b')') {
            loop {
                args.push(self.arg()?);
                self.skip_ws();
                match self.src.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    Some(b')') => break,
                    _ => return Err(self.err("expected `,` or `)`")),
                }
            }
        }
        self.expect(b')')?;
        build(&name, args)
    }
}

fn build(name: &str, args: Vec<Arg>) -> Result<DistSpec> {
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "{name} takes {n} arguments, got {}",
                args.len()
            )))
        }
    };
    let num = |a: &Arg| -> Result<f64> {
        match a {
            Arg::Num(v, _) => Ok(*v),
            Arg::Spec(s) => Err(Error::Parse(format!("{name}: expected a number, got {s}"))),
        }
    };
    let int = |a: &Arg| -> Result<u64> {
        match a {
            Arg::Num(_, text) => u64::from_str(text)
                .map_err(|_| Error::Parse(format!("{name}: expected an integer, got `{text}`"))),
            Arg::Spec(s) => Err(Error::Parse(format!(
                "{name}: expected an integer, got {s}"
            ))),
        }
    };
    let spec = |a: Arg| -> Result<Box<DistSpec>> {
        match a {
            Arg::Spec(s) => Ok(Box::new(s)),
            Arg::Num(_, t) => Err(Error::Parse(format!(
                "{name}: expected a distribution, got `{t}`"
            ))),
        }
    };
    let d = match name {
        "constant" => {
            arity(1)?;
            DistSpec::Constant(num(&args[0])?)
        }
        "twopoint" => {
            arity(3)?;
            DistSpec::TwoPoint {
                v0: num(&args[0])?,
                p0: num(&args[1])?,
                v1: num(&args[2])?,
            }
        }
        "uniform" => {
            arity(2)?;
            DistSpec::Uniform {
                a: num(&args[0])?,
                b: num(&args[1])?,
            }
        }
        "lognormal" => {
            arity(2)?;
            DistSpec::LogNormal {
                mu: num(&args[0])?,
                sigma2: num(&args[1])?,
            }
        }
        "exponential" => {
            arity(1)?;
            DistSpec::Exponential {
                rate: num(&args[0])?,
            }
        }
        "pareto" => {
            arity(2)?;
            DistSpec::Pareto {
                index: num(&args[0])?,
                scale: num(&args[1])?,
            }
        }
        "zipf" => {
            if args.len() == 1 {
                DistSpec::zipf(num(&args[0])?)
            } else {
                arity(2)?;
                DistSpec::Zipf {
                    index: num(&args[0])?,
                    cutoff: Some(int(&args[1])?),
                }
            }
        }
        "poisson" => {
            arity(1)?;
            DistSpec::Poisson {
                rate: num(&args[0])?,
            }
        }
        "geometric" => {
            arity(1)?;
            DistSpec::Geometric { p: num(&args[0])? }
        }
        "scaled" | "reciprocal" | "shift" => {
            arity(2)?;
            let mut it = args.into_iter();
            let base = spec(it.next().unwrap())?;
            let second = it.next().unwrap();
            match name {
                "scaled" => DistSpec::Scaled {
                    base,
                    factor: num(&second)?,
                },
                "reciprocal" => DistSpec::Reciprocal {
                    base,
                    scale: num(&second)?,
                },
                _ => DistSpec::Shifted {
                    base,
                    offset: int(&second)?,
                },
            }
        }
        "mixture" => {
            arity(3)?;
            let mut it = args.into_iter();
            let weight = num(&it.next().unwrap())?;
            DistSpec::Mixture {
                weight,
                first: spec(it.next().unwrap())?,
                second: spec(it.next().unwrap())?,
            }
        }
        other => return Err(Error::Parse(format!("unknown distribution `{other}`"))),
    };
    Ok(d)
}

impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let name = p
            .ident()
            .ok_or_else(|| p.err("expected a distribution name"))?;
        let spec = p.call(name)?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl serde::Serialize for DistSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for DistSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inversion table for the head of a Zipf law plus an exact rejection
/// sampler for the remainder.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    s: f64,
    cdf: Vec<f64>,
    tail_from: u64,
    cutoff: Option<u64>,
}

impl ZipfTable {
    fn new(index: f64, cutoff: Option<u64>) -> Self {
        let s = index + 1.0;
        let z = power_sum(-s, 1, cutoff).v;
        let len = cutoff.map_or(ZIPF_TABLE, |c| c.min(ZIPF_TABLE));
        let mut acc = NeumaierSum::new();
        let cdf = (1..=len)
            .map(|k| {
                acc.add((k as f64).powf(-s) / z);
                acc.value()
            })
            .collect();
        ZipfTable {
            s,
            cdf,
            tail_from: len + 1,
            cutoff,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let head_mass = *self.cdf.last().unwrap();
        if u < head_mass || self.cutoff.is_some_and(|c| c < self.tail_from) {
            let k = self.cdf.partition_point(|&c| c <= u);
            return (k.min(self.cdf.len() - 1) + 1) as f64;
        }
        self.sample_tail(rng)
    }

    /// Draw from `P(X = k) ∝ k^-s` on `[tail_from, cutoff]` by rejection from
    /// the floor of a continuous power law.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.s;
        let a = self.tail_from as f64;
        let a1 = a.powf(1.0 - s);
        let b1 = self.cutoff.map_or(0.0, |c| (c as f64 + 1.0).powf(1.0 - s));
        let bound = (1.0 + 1.0 / a).powf(s);
        loop {
            let u: f64 = rng.random();
            let y = (a1 - u * (a1 - b1)).powf(1.0 / (1.0 - s));
            let k = y.floor();
            if !k.is_finite() || k >= 9.0e15 {
                return k;
            }
            if self.cutoff.is_some_and(|c| k > c as f64) {
                continue;
            }
            // target / proposal mass at k
            let ratio = (s - 1.0) / (k * -(((1.0 - s) * (1.0 / k).ln_1p()).exp_m1()));
            let v: f64 = rng.random();
            if v * bound <= ratio {
                return k;
            }
        }
    }
}

/// Compiled sampler for a [`DistSpec`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Constant(f64),
    TwoPoint { v0: f64, p0: f64, v1: f64 },
    Uniform { a: f64, b: f64 },
    LogNormal(LogNormal<f64>),
    Exponential(Exp<f64>),
    Pareto { inv_index: f64, scale: f64 },
    Zipf(ZipfTable),
    Poisson(Poisson<f64>),
    Geometric(rand_distr::Geometric),
    Scaled(Box<Sampler>, f64),
    Reciprocal(Box<Sampler>, f64),
    Shifted(Box<Sampler>, f64),
    Mixture(f64, Box<Sampler>, Box<Sampler>),
}

impl Sampler {
    fn compile(spec: &DistSpec) -> Result<Sampler> {
        let perr = |e: &dyn fmt::Display| Error::Parameter(format!("{spec}: {e}"));
        Ok(match spec {
            DistSpec::Constant(v) => Sampler::Constant(*v),
            DistSpec::TwoPoint { v0, p0, v1 } => Sampler::TwoPoint {
                v0: *v0,
                p0: *p0,
                v1: *v1,
            },
            DistSpec::Uniform { a, b } => Sampler::Uniform { a: *a, b: *b },
            DistSpec::LogNormal { mu, sigma2 } => {
                Sampler::LogNormal(LogNormal::new(*mu, sigma2.sqrt()).map_err(|e| perr(&e))?)
            }
            DistSpec::Exponential { rate } => {
                Sampler::Exponential(Exp::new(*rate).map_err(|e| perr(&e))?)
            }
            DistSpec::Pareto { index, scale } => Sampler::Pareto {
                inv_index: 1.0 / index,
                scale: *scale,
            },
            DistSpec::Zipf { index, cutoff } => Sampler::Zipf(ZipfTable::new(*index, *cutoff)),
            DistSpec::Poisson { rate } => {
                Sampler::Poisson(Poisson::new(*rate).map_err(|e| perr(&e))?)
            }
            DistSpec::Geometric { p } => {
                Sampler::Geometric(rand_distr::Geometric::new(*p).map_err(|e| perr(&e))?)
            }
            DistSpec::Scaled { base, factor } => {
                Sampler::Scaled(Box::new(Sampler::compile(base)?), *factor)
            }
            DistSpec::Reciprocal { base, scale } => {
                Sampler::Reciprocal(Box::new(Sampler::compile(base)?), *scale)
            }
            DistSpec::Shifted { base, offset } => {
                Sampler::Shifted(Box::new(Sampler::compile(base)?), *offset as f64)
            }
            DistSpec::Mixture {
                weight,
                first,
                second,
            } => Sampler::Mixture(
                *weight,
                Box::new(Sampler::compile(first)?),
                Box::new(Sampler::compile(second)?),
            ),
        })
    }

    /// Whether draws consume no randomness.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Sampler::Constant(v) => Some(*v),
            _ => None,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::TwoPoint { v0, p0, v1 } => {
                if rng.random::<f64>() < *p0 {
                    *v0
                } else {
                    *v1
                }
            }
            Sampler::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Sampler::LogNormal(d) => d.sample(rng),
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::Pareto { inv_index, scale } => {
                let u: f64 = rng.random();
                scale * (1.0 - u).powf(-inv_index)
            }
            Sampler::Zipf(t) => t.sample(rng),
            Sampler::Poisson(d) => d.sample(rng),
            Sampler::Geometric(d) => d.sample(rng) as f64,
            Sampler::Scaled(b, f) => f * b.sample(rng),
            Sampler::Reciprocal(b, s) => s / b.sample(rng),
            Sampler::Shifted(b, c) => b.sample(rng) + c,
            Sampler::Mixture(w, a, b) => {
                if rng.random::<f64>() < *w {
                    a.sample(rng)
                } else {
                    b.sample(rng)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn spec(s: &str) -> DistSpec {
        s.parse().unwrap()
    }

    #[test]
    fn constant_sample_is_constant() {
        let mut rng = RngStream::from_seed(1).rng();
        let s = spec("constant(2)").sampler().unwrap();
        assert!((0..100).all(|_| s.sample(&mut rng) == 2.0));
    }

    #[test]
    fn twopoint_sample_mean() {
        let mut rng = RngStream::from_seed(2).rng();
        let s = spec("twopoint(0,0.5,2)").sampler().unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        // sd of one draw is 1, SE = 1/1000
        assert!((mean - 1.0).abs() < 3e-3, "{mean}");
    }

    #[test]
    fn unbounded_zipf_draws_are_at_least_one() {
        let mut rng = RngStream::from_seed(3).rng();
        let s = spec("zipf(1.5)").sampler().unwrap();
        for _ in 0..200_000 {
            let x = s.sample(&mut rng);
            assert!(x >= 1.0 && x.fract() == 0.0);
        }
    }

    #[test]
    fn mellin_examples() {
        let u = spec("uniform(0,1)");
        assert!((u.mellin(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(spec("constant(0.5)").mellin(3.0).unwrap(), 0.125);
        let ln = spec("lognormal(-0.5,0.5)");
        assert!((ln.mellin(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(u.mellin(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn mellin_log_examples() {
        assert!((spec("uniform(0,1)").mellin_log(1.0).unwrap() + 0.25).abs() < 1e-15);
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(spec("constant(1)").mellin_log(t).unwrap(), 0.0);
        }
        assert!((spec("lognormal(-0.5,0.5)").mellin_log(2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mellin_log_of_zero_atom_is_zero() {
        let d = spec("twopoint(0,0.5,2)");
        assert!((d.mellin_log(1.0).unwrap() - 0.5 * 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unbounded_zipf_moment_divergence_guard() {
        let z = spec("zipf(1.5)");
        assert!(z.mellin(1.4).unwrap().is_finite());
        assert_eq!(z.mellin(1.5).unwrap(), f64::INFINITY);
        assert_eq!(z.mellin(2.0).unwrap(), f64::INFINITY);
        assert!(matches!(z.mellin_log(2.0), Err(Error::Divergence(_))));
        // bounded cutoff keeps every moment finite
        assert!(spec("zipf(1.5,50)").mellin(4.0).unwrap().is_finite());
    }

    #[test]
    fn zipf_mean_matches_zeta_ratio() {
        // ζ(2.5)/ζ(3.5)
        let m = spec("zipf(2.5)").mean().unwrap();
        assert!(
            (m - 1.341_487_257_250_917 / 1.126_733_867_317_057_4).abs() < 1e-13,
            "{m}"
        );
    }

    #[test]
    fn pareto_and_exponential_closed_forms() {
        let p = spec("pareto(2,1)");
        assert_eq!(p.mellin(1.0).unwrap(), 2.0);
        assert_eq!(p.mellin(2.0).unwrap(), f64::INFINITY);
        let e = spec("exponential(2)");
        assert!((e.mellin(2.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_of_discrete_moment() {
        // C = 0.85 / (1 + Poisson(5))  =>  E[C] = 0.85 (1 - e^-5) / 5
        let c = spec("reciprocal(shift(poisson(5),1),0.85)");
        let want = 0.85 * (1.0 - (-5f64).exp()) / 5.0;
        assert!((c.mellin(1.0).unwrap() - want).abs() < 1e-14);
        assert!((c.mean().unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_requires_support_above_one() {
        assert!("reciprocal(poisson(5),1)".parse::<DistSpec>().is_err());
        assert!("reciprocal(zipf(2),1)".parse::<DistSpec>().is_ok());
    }

    #[test]
    fn parse_is_case_insensitive_and_roundtrips() {
        let d = spec("  Reciprocal( ZIPF(1.5) , 0.85 ) ");
        assert_eq!(d.to_string(), "reciprocal(zipf(1.5),0.85)");
        assert_eq!(spec(&d.to_string()), d);
        assert_eq!(
            spec("lognormal(-0.5,0.5)").to_string(),
            "lognormal(-0.5,0.5)"
        );
        assert_eq!(spec("zipf(2.5)").to_string(), "zipf(2.5)");
        assert_eq!(spec("zipf(2.5, 100)").to_string(), "zipf(2.5,100)");
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in [
            "",
            "constant",
            "constant(1,2)",
            "foo(1)",
            "uniform(2,1)",
            "zipf(2.5,1.5)",
            "constant(1) x",
            "twopoint(0,1.5,1)",
            "shift(uniform(0,1),1)",
        ] {
            assert!(bad.parse::<DistSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn zipf_with_mean_hits_target() {
        let d = DistSpec::zipf_with_mean(2.5, 1.2).unwrap();
        assert!((d.mean().unwrap() - 1.2).abs() < 1e-14);
        assert!(d.is_integer_valued());
        assert_eq!(d.tail_index(), Some(2.5));
        let d = DistSpec::zipf_with_mean(2.5, 1.1).unwrap();
        assert!((d.mean().unwrap() - 1.1).abs() < 1e-14);
    }

    #[test]
    fn survival_of_zipf_matches_direct_sum() {
        let z = spec("zipf(2.5)");
        let zeta = power_sum(-3.5, 1, None).v;
        let head: f64 = (1..=3).map(|k: i32| (k as f64).powf(-3.5)).sum();
        assert!((z.survival(3.7) - (1.0 - head / zeta)).abs() < 1e-14);
        assert_eq!(z.survival(0.5), 1.0);
        let b = spec("zipf(2.5,10)");
        assert_eq!(b.survival(10.0), 0.0);
    }

    #[test]
    fn survival_of_composites() {
        let c = spec("reciprocal(shift(poisson(5),1),1)");
        // P(1/D > 0.5) = P(D < 2) = P(D = 1) = e^-5
        assert!((c.survival(0.5) - (-5f64).exp()).abs() < 1e-15);
        let s = spec("scaled(pareto(2,1),3)");
        assert!((s.survival(6.0) - 0.25).abs() < 1e-15);
        let g = spec("geometric(0.5)");
        assert!((g.survival(1.0) - 0.25).abs() < 1e-15);
        let p = spec("poisson(2)");
        let want = 1.0 - (-2f64).exp() * (1.0 + 2.0);
        assert!((p.survival(1.0) - want).abs() < 1e-14);
    }

    #[test]
    fn finite_support_and_arithmetic_flags() {
        assert!(spec("constant(0.5)").is_log_arithmetic());
        assert!(spec("twopoint(0.25,0.5,2)").is_log_arithmetic());
        assert!(spec("twopoint(0,0.3,0.7)").is_log_arithmetic());
        assert!(!spec("twopoint(2,0.5,3)").is_log_arithmetic());
        assert!(!spec("lognormal(0,1)").is_log_arithmetic());
        let atoms = spec("mixture(0.5,constant(1),twopoint(1,0.5,2))")
            .finite_support()
            .unwrap();
        assert_eq!(atoms, vec![(1.0, 0.75), (2.0, 0.25)]);
    }

    #[test]
    fn integer_valued_detection() {
        assert!(spec("shift(poisson(5),1)").is_integer_valued());
        assert!(spec("twopoint(0,0.5,2)").is_integer_valued());
        assert!(!spec("constant(0.5)").is_integer_valued());
        assert!(!spec("scaled(zipf(2),0.5)").is_integer_valued());
    }

    const CORPUS: &[&str] = &[
        "constant(0.5)",
        "constant(3)",
        "twopoint(0,0.5,2)",
        "twopoint(0.25,0.3,1.5)",
        "uniform(0,1)",
        "uniform(0.5,2)",
        "lognormal(-0.5,0.5)",
        "lognormal(0.2,1)",
        "exponential(1)",
        "exponential(2.5)",
        "pareto(2,1)",
        "pareto(3.5,0.5)",
        "zipf(1.5)",
        "zipf(2.5)",
        "zipf(1.2,40)",
        "poisson(5)",
        "poisson(0.3)",
        "geometric(0.4)",
        "scaled(zipf(2.5),0.5)",
        "reciprocal(shift(poisson(5),1),0.85)",
        "reciprocal(zipf(1.5),0.85)",
        "shift(zipf(2.5),2)",
        "mixture(0.9884,zipf(2.5),constant(2))",
        "mixture(0.3,lognormal(0,0.5),constant(0))",
    ];

    #[test]
    fn mellin_at_zero_is_one() {
        for s in CORPUS {
            assert_eq!(spec(s).mellin(0.0).unwrap(), 1.0, "{s}");
        }
    }

    #[test]
    fn mellin_at_one_is_the_mean() {
        for s in CORPUS {
            let d = spec(s);
            let (m, mean) = (d.mellin(1.0).unwrap(), d.mean().unwrap());
            if mean.is_finite() {
                assert!((m - mean).abs() <= 1e-12 * mean.abs(), "{s}: {m} vs {mean}");
            } else {
                assert_eq!(m, f64::INFINITY, "{s}");
            }
        }
    }

    #[test]
    fn log_mellin_is_convex() {
        for s in CORPUS {
            let d = spec(s);
            let grid: Vec<f64> = (0..=24).map(|i| i as f64 * 0.25).collect();
            let lm: Vec<f64> = grid.iter().map(|&t| d.mellin(t).unwrap().ln()).collect();
            for i in 0..grid.len() {
                for j in i + 2..grid.len() {
                    if !lm[j].is_finite() {
                        continue;
                    }
                    for k in i + 1..j {
                        let lam = (grid[j] - grid[k]) / (grid[j] - grid[i]);
                        let chord = lam * lm[i] + (1.0 - lam) * lm[j];
                        assert!(lm[k] <= chord + 1e-9, "{s} at θ={}", grid[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn mellin_log_is_the_theta_derivative() {
        for s in CORPUS {
            let d = spec(s);
            for theta in [0.3, 0.5, 1.0, 1.7, 2.0, 3.0] {
                let h = 1e-4;
                let (lo, hi) = (d.mellin(theta - h).unwrap(), d.mellin(theta + h).unwrap());
                if !(lo.is_finite() && hi.is_finite())
                    || d.tail_index().is_some_and(|a| theta + 0.1 > a)
                {
                    continue;
                }
                let fd = (hi - lo) / (2.0 * h);
                let exact = d.mellin_log(theta).unwrap();
                let scale = exact.abs().max(d.mellin(theta).unwrap() * 1e-3);
                assert!(
                    (exact - fd).abs() <= 1e-6 * scale,
                    "{s} θ={theta}: {exact} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn sample_moments_match_mellin() {
        let draws = 1_000_000;
        for (i, s) in CORPUS.iter().enumerate() {
            let d = spec(s);
            let sampler = d.sampler().unwrap();
            let mut rng = RngStream::new(99, i as u64).rng();
            let xs: Vec<f64> = (0..draws).map(|_| sampler.sample(&mut rng)).collect();
            for theta in [0.5, 1.0, 2.0] {
                let m = d.mellin(theta).unwrap();
                // a standard error needs a finite 2θ moment
                if !d.mellin(2.0 * theta).unwrap().is_finite() {
                    continue;
                }
                let vals: Vec<f64> = xs.iter().map(|x| x.powf(theta)).collect();
                let mean = crate::numeric::kahan_sum(vals.iter().copied()) / draws as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
                let se = (var / draws as f64).sqrt();
                assert!(
                    (mean - m).abs() <= 4.0 * se + 1e-12 * m,
                    "{s} θ={theta}: {mean} vs {m} (se {se})"
                );
            }
        }
    }

    #[test]
    fn zipf_tail_sampler_matches_survival() {
        // zipf(0.5) puts ~0.24% of mass beyond 10^5, well past the inversion table
        let d = spec("zipf(0.5)");
        let s = d.sampler().unwrap();
        let mut rng = RngStream::from_seed(5).rng();
        let n = 1_000_000;
        for x in [1e5, 1e7] {
            let p = d.survival(x);
            let mut rng2 = rng.clone();
            let hits = (0..n).filter(|_| s.sample(&mut rng2) > x).count() as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (hits / n as f64 - p).abs() < 4.0 * se,
                "x={x}: {} vs {p}",
                hits / n as f64
            );
        }
        let _ = rng.random::<u64>();
    }

    fn leaf() -> impl proptest::strategy::Strategy<Value = DistSpec> {
        use proptest::prelude::*;
        prop_oneof![
            (0.0..10.0f64).prop_map(DistSpec::Constant),
            (0.0..5.0f64, 0.0..=1.0f64, 0.0..5.0f64).prop_map(|(v0, p0, v1)| DistSpec::TwoPoint {
                v0,
                p0,
                v1
            }),
            (0.0..3.0f64, 0.01..3.0f64).prop_map(|(a, w)| DistSpec::Uniform { a, b: a + w }),
            (-2.0..2.0f64, 0.01..2.0f64)
                .prop_map(|(mu, sigma2)| DistSpec::LogNormal { mu, sigma2 }),
            (0.1..5.0f64).prop_map(|rate| DistSpec::Exponential { rate }),
            (0.5..5.0f64, 0.1..3.0f64).prop_map(|(index, scale)| DistSpec::Pareto { index, scale }),
            (0.5..4.0f64, proptest::option::of(1u64..500))
                .prop_map(|(index, cutoff)| DistSpec::Zipf { index, cutoff }),
            (0.1..10.0f64).prop_map(|rate| DistSpec::Poisson { rate }),
            (0.05..=1.0f64).prop_map(|p| DistSpec::Geometric { p }),
        ]
    }

    fn any_spec() -> impl proptest::strategy::Strategy<Value = DistSpec> {
        use proptest::prelude::*;
        leaf().prop_recursive(2, 6, 2, |inner| {
            prop_oneof![
                (inner.clone(), 0.1..4.0f64).prop_map(|(b, f)| b.scaled(f)),
                (0u64..4, 0.1..3.0f64).prop_map(|(c, s)| DistSpec::Poisson { rate: 2.0 }
                    .shifted(1 + c)
                    .reciprocal(s)),
                (0.5..3.0f64, 0u64..3).prop_map(|(i, c)| DistSpec::zipf(i).shifted(c)),
                (0.0..=1.0f64, inner.clone(), inner)
                    .prop_map(|(w, a, b)| DistSpec::mixture(w, a, b)),
            ]
        })
    }

    proptest::proptest! {
        #[test]
        fn text_form_roundtrips(d in any_spec()) {
            let text = d.to_string();
            let back: DistSpec = text.parse().unwrap();
            proptest::prop_assert_eq!(back, d);
        }

        #[test]
        fn generated_specs_have_unit_mass(d in any_spec()) {
            proptest::prop_assert_eq!(d.mellin(0.0).unwrap(), 1.0);
        }

        #[test]
        fn survival_is_a_probability_and_nonincreasing(d in any_spec(), x in 0.0..20.0f64, dx in 0.0..5.0f64) {
            let (a, b) = (d.survival(x), d.survival(x + dx));
            proptest::prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
            proptest::prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn integer_specs_sample_integers(d in any_spec(), seed in 0u64..1000) {
            if d.is_integer_valued() {
                let s = d.sampler().unwrap();
                let mut rng = RngStream::from_seed(seed).rng();
                for _ in 0..20 {
                    let x = s.sample(&mut rng);
                    proptest::prop_assert!(x >= 0.0 && x.fract() == 0.0);
                }
            }
        }
    }
}
