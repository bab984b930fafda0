//! Small numerical kernels shared by the moment and tail code: compensated
//! summation, forward-mode dual numbers, Euler–Maclaurin power sums and a
//! Richardson-extrapolated central difference.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// First-order dual number `v + d·ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }

    pub fn variable(v: f64) -> Self {
        Dual { v, d: 1.0 }
    }

    /// `base^self` for a plain positive base.
    pub fn exp_base(self, base: f64) -> Dual {
        let p = base.powf(self.v);
        Dual {
            v: p,
            d: p * base.ln() * self.d,
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual {
            v: self.v * o,
            d: self.d * o,
        }
    }
}

const DIRECT_TERMS: u64 = 10_000;
const DIRECT_RANGE_LIMIT: u64 = 2_000_000;

/// Euler–Maclaurin estimate of `Σ_{k≥K} k^e` (as a dual in `e`), valid for `e < -1`.
fn em_tail(k: f64, e: Dual) -> Dual {
    let one = Dual::constant(1.0);
    let ep1 = e + one;
    let ke = e.exp_base(k);
    let integral = -(ep1.exp_base(k) / ep1);
    let g1 = e * (e - one).exp_base(k);
    let e3 = e * (e - one) * (e - Dual::constant(2.0));
    let g3 = e3 * (e - Dual::constant(3.0)).exp_base(k);
    let e5 = e3 * (e - Dual::constant(3.0)) * (e - Dual::constant(4.0));
    let g5 = e5 * (e - Dual::constant(5.0)).exp_base(k);
    integral + ke * 0.5 - g1 * (1.0 / 12.0) + g3 * (1.0 / 720.0) - g5 * (1.0 / 30240.0)
}

/// `Σ_{k=from}^{to} k^e` together with `Σ k^e ln k` (the `d` component).
///
/// Long or unbounded ranges sum the first terms directly and close the
/// remainder with an Euler–Maclaurin tail. Returns `+∞` when an unbounded
/// sum diverges (`e ≥ -1`).
pub fn power_sum(e: f64, from: u64, to: Option<u64>) -> Dual {
    debug_assert!(from >= 1);
    if let Some(b) = to {
        if b < from {
            return Dual::constant(0.0);
        }
        if b - from <= DIRECT_RANGE_LIMIT {
            return direct_power_sum(e, from, b);
        }
    } else if e >= -1.0 {
        return Dual {
            v: f64::INFINITY,
            d: f64::INFINITY,
        };
    }
    let k0 = from.max(DIRECT_TERMS);
    let head = if k0 > from {
        direct_power_sum(e, from, k0 - 1)
    } else {
        Dual::constant(0.0)
    };
    let ed = Dual::variable(e);
    let mut tail = em_tail(k0 as f64, ed);
    if let Some(b) = to {
        tail = tail - em_tail((b + 1) as f64, ed);
    }
    head + tail
}

fn direct_power_sum(e: f64, from: u64, to: u64) -> Dual {
    let mut v = NeumaierSum::new();
    let mut d = NeumaierSum::new();
    for k in from..=to {
        let kf = k as f64;
        let t = kf.powf(e);
        v.add(t);
        d.add(t * kf.ln());
    }
    Dual {
        v: v.value(),
        d: d.value(),
    }
}

/// `Σ_{k=1}^{cutoff} (k + c)^θ k^{-s}` for a shifted power law.
///
/// The remainder beyond the direct range uses the binomial expansion of
/// `(1 + c/k)^θ`, each term of which is an ordinary power sum.
pub fn shifted_power_sum(theta: f64, s: f64, c: f64, cutoff: Option<u64>) -> f64 {
    if c == 0.0 {
        return power_sum(theta - s, 1, cutoff).v;
    }
    if cutoff.is_none() && theta - s >= -1.0 {
        return f64::INFINITY;
    }
    let k0 = DIRECT_TERMS.max((c * 4.0).ceil() as u64 + 1);
    let end_direct = cutoff.map_or(k0 - 1, |b| b.min(k0 - 1));
    let mut acc = NeumaierSum::new();
    for k in 1..=end_direct {
        let kf = k as f64;
        acc.add((kf + c).powf(theta) * kf.powf(-s));
    }
    if cutoff.is_some_and(|b| b < k0) {
        return acc.value();
    }
    // (1 + c/k)^θ = Σ_j binom(θ, j) (c/k)^j, |c/k| ≤ 1/4
    let mut coef = 1.0;
    for j in 0..40u32 {
        let jf = j as f64;
        if j > 0 {
            coef *= (theta - jf + 1.0) / jf * c;
        }
        let term = coef * power_sum(theta - s - jf, k0, cutoff).v;
        acc.add(term);
        if term.abs() < 1e-18 * acc.value().abs() {
            break;
        }
    }
    acc.value()
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = kahan_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Central difference with step `h`, Richardson-extrapolated once (error O(h⁴)).
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d1 = d(h);
    let d2 = d(h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

/// Two-sample Kolmogorov–Smirnov statistic. Inputs need not be sorted.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    ks_distance_sorted(&a, &b)
}

pub fn ks_distance_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Ordinary least squares `y = a + b x`; returns `(slope, intercept, slope stderr)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, intercept, stderr)
}

/// Empirical quantile (type 7, linear interpolation) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = kahan_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn power_sum_matches_zeta_values() {
        // ζ(2) = π²/6, ζ(4) = π⁴/90
        let z2 = power_sum(-2.0, 1, None).v;
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        let z4 = power_sum(-4.0, 1, None).v;
        assert!((z4 - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
        // -ζ'(2) = Σ ln k / k² = 0.93754825431584375...
        let dz2 = power_sum(-2.0, 1, None).d;
        assert!((dz2 - 0.937_548_254_315_843_8).abs() < 1e-13, "{dz2}");
    }

    #[test]
    fn bounded_power_sum_long_range_agrees_with_direct() {
        let em = power_sum(-1.3, 1, Some(5_000_000));
        let direct = direct_power_sum(-1.3, 1, 5_000_000);
        assert!(((em.v - direct.v) / direct.v).abs() < 1e-12);
        assert!(((em.d - direct.d) / direct.d).abs() < 1e-11);
    }

    #[test]
    fn shifted_sum_reduces_to_plain_sum() {
        let a = shifted_power_sum(1.0, 3.5, 0.0, None);
        let b = power_sum(-2.5, 1, None).v;
        assert_eq!(a, b);
        // Σ (k+1) k^{-3.5} = ζ(2.5) + ζ(3.5)
        let c = shifted_power_sum(1.0, 3.5, 1.0, None);
        let want = power_sum(-2.5, 1, None).v + power_sum(-3.5, 1, None).v;
        assert!(((c - want) / want).abs() < 1e-13);
    }

    #[test]
    fn richardson_on_exp() {
        let d = richardson_derivative(f64::exp, 1.0, 1e-3);
        assert!((d - 1f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn ks_of_identical_and_disjoint_samples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&[1.0, 1.0], &[2.0, 2.0]), 1.0);
        assert!((ks_distance(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ols_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (b, a, se) = ols(&xs, &ys);
        assert!((b - 2.0).abs() < 1e-15 && (a - 1.0).abs() < 1e-15);
        assert!(se.abs() < 1e-12);
    }
}
