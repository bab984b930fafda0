//! Exact moment recursions for `W_n` and `R`, moment-growth bounds and the
//! stability conditions that make `R = Σ W_k` finite.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::tree::WbpModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralParams {
    /// `E[N] E[C]`.
    pub rho: f64,
    /// `E[N] E[C^β]`.
    pub rho_beta: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBoundReport {
    pub beta: f64,
    pub rate: f64,
    pub prefactor_known: bool,
    /// `E[Q^β]` when `β ≤ 1`; the constant for `β > 1` is only known to exist.
    pub prefactor: Option<f64>,
}

impl MomentBoundReport {
    /// `rate^n · prefactor`, when the prefactor is known.
    pub fn bound(&self, n: u32) -> Option<f64> {
        self.prefactor.map(|k| self.rate.powi(n as i32) * k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    /// Strict upper limit for `value`.
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub beta: f64,
    pub conditions: Vec<Condition>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergence(format!("{name} = ∞")))
    }
}

pub fn spectral_params(model: &WbpModel, beta: f64) -> Result<SpectralParams> {
    let en = finite("E[N]", model.n_dist.mellin(1.0)?)?;
    let ec = finite("E[C]", model.c_dist.mellin(1.0)?)?;
    let rho = en * ec;
    let rho_beta = if beta == 1.0 {
        rho
    } else {
        en * finite(&format!("E[C^{beta}]"), model.c_dist.mellin(beta)?)?
    };
    Ok(SpectralParams {
        rho,
        rho_beta,
        beta,
    })
}

/// `E[W_n] = ρ^n E[Q]`.
pub fn mean_wn(model: &WbpModel, n: u32) -> Result<f64> {
    let rho = spectral_params(model, 1.0)?.rho;
    let eq = finite("E[Q]", model.q_dist.mellin(1.0)?)?;
    Ok(rho.powi(n as i32) * eq)
}

/// `E[N(N-1)]`, summed over atoms when `N` has finite support.
pub(crate) fn factorial_moment2(model: &WbpModel) -> Result<f64> {
    if let Some(atoms) = model.n_dist.finite_support() {
        return Ok(atoms
            .iter()
            .map(|(k, p)| p * k * (k - 1.0))
            .collect::<NeumaierSum>()
            .value());
    }
    let n2 = finite("E[N^2]", model.n_dist.mellin(2.0)?)?;
    Ok(n2 - model.n_dist.mellin(1.0)?)
}

/// `E[W_n^2]`, from `E[W_n^2] = ρ₂ E[W_{n-1}^2] + K ρ^{2(n-1)}` with
/// `K = E[N(N-1)] (E[C] E[Q])^2`, unrolled and summed with compensation.
pub fn second_moment_wn(model: &WbpModel, n: u32) -> Result<f64> {
    let sp = spectral_params(model, 2.0)?;
    let ec = model.c_dist.mellin(1.0)?;
    let eq = finite("E[Q]", model.q_dist.mellin(1.0)?)?;
    let eq2 = finite("E[Q^2]", model.q_dist.mellin(2.0)?)?;
    let k = factorial_moment2(model)? * (ec * eq).powi(2);
    let mut acc = NeumaierSum::new();
    acc.add(sp.rho_beta.powi(n as i32) * eq2);
    for j in 1..=n as i32 {
        acc.add(k * sp.rho_beta.powi(n as i32 - j) * sp.rho.powi(2 * (j - 1)));
    }
    Ok(acc.value())
}

/// Geometric growth rate of `E[W_n^β]`.
pub fn moment_bound(model: &WbpModel, beta: f64) -> Result<MomentBoundReport> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("β = {beta} must be > 0")));
    }
    let sp = spectral_params(model, beta)?;
    if beta <= 1.0 {
        let eqb = finite(&format!("E[Q^{beta}]"), model.q_dist.mellin(beta)?)?;
        Ok(MomentBoundReport {
            beta,
            rate: sp.rho_beta,
            prefactor_known: true,
            prefactor: Some(eqb),
        })
    } else {
        finite(&format!("E[Q^{beta}]"), model.q_dist.mellin(beta)?)?;
        Ok(MomentBoundReport {
            beta,
            rate: sp.rho.max(sp.rho_beta),
            prefactor_known: false,
            prefactor: None,
        })
    }
}

/// `E[R] = E[Q] / (1 - ρ)`.
pub fn mean_r(model: &WbpModel) -> Result<f64> {
    let rho = spectral_params(model, 1.0)?.rho;
    if rho >= 1.0 {
        return Err(Error::Instability(format!(
            "ρ = E[N]E[C] = {rho} ≥ 1, E[R] = ∞"
        )));
    }
    Ok(model.q_dist.mellin(1.0)? / (1.0 - rho))
}

/// Upper bound on `E[R] - E[R^(depth)] = E[Q] ρ^(depth+1) / (1 - ρ)`; `∞` when `ρ ≥ 1`.
pub fn mean_bias_bound(model: &WbpModel, depth: u32) -> Result<f64> {
    let rho = spectral_params(model, 1.0)?.rho;
    let eq = model.q_dist.mellin(1.0)?;
    if rho >= 1.0 || !eq.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(eq * rho.powi(depth as i32 + 1) / (1.0 - rho))
}

/// Smallest depth whose mean-bias bound is below `target`.
pub fn depth_for_bias(model: &WbpModel, target: f64) -> Result<u32> {
    let rho = spectral_params(model, 1.0)?.rho;
    if rho >= 1.0 {
        return Err(Error::Instability(format!(
            "ρ = {rho} ≥ 1, no finite depth bounds the bias"
        )));
    }
    if rho == 0.0 {
        return Ok(0);
    }
    let mut d = 0;
    while mean_bias_bound(model, d)? >= target {
        d += 1;
    }
    Ok(d)
}

pub fn stability_check(model: &WbpModel, beta: f64) -> StabilityReport {
    let m = |d: &crate::dist::DistSpec, t: f64| d.mellin(t).unwrap_or(f64::INFINITY);
    let cond = |name: String, value: f64| Condition {
        passed: value < f64::INFINITY && value.is_finite(),
        name,
        value,
        limit: f64::INFINITY,
    };
    let mut conditions = vec![
        cond(format!("E[Q^{beta}] < ∞"), m(&model.q_dist, beta)),
        cond(format!("E[N^{beta}] < ∞"), m(&model.n_dist, beta)),
    ];
    let en = m(&model.n_dist, 1.0);
    let (name, value) = if beta < 1.0 {
        (format!("E[N]E[C^{beta}] < 1"), en * m(&model.c_dist, beta))
    } else {
        (
            format!("E[N]max(E[C], E[C^{beta}]) < 1"),
            en * m(&model.c_dist, 1.0).max(m(&model.c_dist, beta)),
        )
    };
    conditions.push(Condition {
        passed: value < 1.0,
        name,
        value,
        limit: 1.0,
    });
    StabilityReport { beta, conditions }
}

/// First `β` on a coarse grid in `(0, 4]` for which every stability condition holds.
pub fn find_stable_beta(model: &WbpModel) -> Option<f64> {
    (1..=80)
        .map(|i| i as f64 * 0.05)
        .find(|&b| stability_check(model, b).passed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::enumerate_exact;

    fn model(n: &str, q: &str, c: &str) -> WbpModel {
        WbpModel::parse(n, q, c).unwrap()
    }

    #[test]
    fn spectral_examples() {
        let sp =
            spectral_params(&model("constant(2)", "constant(1)", "constant(0.25)"), 2.0).unwrap();
        assert_eq!((sp.rho, sp.rho_beta), (0.5, 0.125));

        let n = crate::dist::DistSpec::zipf_with_mean(2.5, 1.2)
            .unwrap()
            .to_string();
        let sp = spectral_params(&model(&n, "constant(1)", "constant(0.5)"), 2.5).unwrap();
        assert!((sp.rho - 0.6).abs() < 1e-14);
        // 1.2 * 0.5^2.5 evaluated independently
        assert!((sp.rho_beta - 0.212_132_034_355_964_27).abs() < 1e-14);

        let sp =
            spectral_params(&model("constant(2)", "constant(1)", "uniform(0,1)"), 1.0).unwrap();
        assert_eq!(sp.rho, 1.0);
        assert_eq!(sp.rho, sp.rho_beta);
    }

    #[test]
    fn mean_wn_examples() {
        let m = model("constant(2)", "constant(1)", "constant(0.25)");
        assert_eq!(mean_wn(&m, 3).unwrap(), 0.125);
        let m = model("poisson(1.5)", "exponential(0.5)", "lognormal(-1,0.3)");
        assert_eq!(mean_wn(&m, 0).unwrap(), 2.0);
    }

    #[test]
    fn mean_wn_has_no_drift() {
        let m = model("poisson(1.5)", "uniform(0,2)", "uniform(0,1)");
        let rho = spectral_params(&m, 1.0).unwrap().rho;
        for n in 0..=50 {
            assert_eq!(mean_wn(&m, n).unwrap(), rho.powi(n as i32) * 1.0);
        }
    }

    #[test]
    fn binary_half_model_against_enumeration() {
        let m = model("twopoint(0,0.5,2)", "constant(1)", "constant(0.5)");
        let e = enumerate_exact(&m, 3, 100_000).unwrap();
        assert_eq!(mean_wn(&m, 2).unwrap(), 0.25);
        assert!((e.w[2].mean() - 0.25).abs() < 1e-15);
        assert_eq!(second_moment_wn(&m, 1).unwrap(), 0.5);
        let s2 = second_moment_wn(&m, 2).unwrap();
        assert!((s2 - e.w[2].moment(2.0)).abs() <= 1e-12 * s2);
        // β = 0.5 bound at n = 1 versus exact E[W_1^0.5] = 0.5
        let b = moment_bound(&m, 0.5).unwrap().bound(1).unwrap();
        assert!((b - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(b >= e.w[1].moment(0.5));
        assert_eq!(e.w[1].moment(0.5), 0.5);
    }

    #[test]
    fn second_moment_k_zero_branch() {
        let m = model("constant(1)", "constant(3)", "constant(0.7)");
        for n in 0..10 {
            let want = 9.0 * 0.7f64.powi(2 * n);
            assert!((second_moment_wn(&m, n as u32).unwrap() - want).abs() <= 1e-14 * want);
        }
    }

    #[test]
    fn moment_bound_examples() {
        let m = model("constant(2)", "constant(1)", "constant(0.25)");
        let r = moment_bound(&m, 0.5).unwrap();
        assert_eq!((r.rate, r.prefactor), (1.0, Some(1.0)));
        for n in 0..10 {
            assert!(0.5f64.powf(n as f64 / 2.0) <= r.bound(n).unwrap());
        }
        let r = moment_bound(&m, 1.0).unwrap();
        assert_eq!(r.rate, 0.5);
        assert_eq!(r.bound(4).unwrap(), mean_wn(&m, 4).unwrap());
        let r = moment_bound(&m, 2.0).unwrap();
        assert!(!r.prefactor_known && r.prefactor.is_none());
        assert_eq!(r.rate, 0.5);
        assert!(matches!(moment_bound(&m, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn mean_r_examples() {
        assert_eq!(
            mean_r(&model("constant(2)", "constant(1)", "constant(0.25)")).unwrap(),
            2.0
        );
        let m = model("constant(1)", "constant(1)", "lognormal(-0.5,0.5)");
        let want = 1.0 / (1.0 - (-0.25f64).exp());
        assert!((mean_r(&m).unwrap() - want).abs() < 1e-14);
        assert!((want - 4.5208).abs() < 1e-4);
        assert!(matches!(
            mean_r(&model("constant(2)", "constant(1)", "constant(0.5)")),
            Err(Error::Instability(_))
        ));
    }

    #[test]
    fn stability_examples() {
        let r = stability_check(&model("constant(2)", "constant(1)", "constant(0.25)"), 2.0);
        assert!(r.passed());
        let r = stability_check(&model("constant(2)", "constant(1)", "constant(0.5)"), 1.0);
        assert!(!r.passed());
        assert_eq!(r.failed().next().unwrap().value, 1.0);
        let r = stability_check(&model("zipf(1.5)", "constant(1)", "constant(0.1)"), 2.0);
        let failed: Vec<_> = r.failed().map(|c| c.name.clone()).collect();
        assert!(failed.iter().any(|n| n.starts_with("E[N^2]")), "{failed:?}");
    }

    #[test]
    fn find_stable_beta_rejects_critical_constant_model() {
        assert!(find_stable_beta(&model("constant(2)", "constant(1)", "constant(0.5)")).is_none());
        // ρ = 1 but E[C^β] < 1 for β < 1
        let m = model("constant(1)", "constant(1)", "lognormal(-0.5,1)");
        assert!(find_stable_beta(&m).unwrap() < 1.0);
    }

    #[test]
    fn bias_bound_and_depth() {
        let m = model("constant(2)", "constant(1)", "constant(0.25)");
        assert_eq!(mean_bias_bound(&m, 0).unwrap(), 1.0);
        let d = depth_for_bias(&m, 1e-6).unwrap();
        assert!(mean_bias_bound(&m, d).unwrap() < 1e-6);
        assert!(mean_bias_bound(&m, d - 1).unwrap() >= 1e-6);
    }
}
