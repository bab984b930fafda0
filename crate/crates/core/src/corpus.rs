//! Named reference models shared by the verification suite, tests and examples.

use crate::dist::DistSpec;
use crate::tree::WbpModel;

fn m(n: &str, q: &str, c: &str) -> WbpModel {
    WbpModel::parse(n, q, c).expect("corpus model is valid")
}

/// Models whose marks all have at most three atoms; exact enumeration to
/// depth 3 stays small for each.
pub fn finite_models() -> Vec<(&'static str, WbpModel)> {
    vec![
        (
            "binary-half",
            m("twopoint(0,0.5,2)", "constant(1)", "constant(0.5)"),
        ),
        ("deterministic-binary", deterministic_binary()),
        (
            "random-weights",
            m("twopoint(1,0.5,2)", "constant(1)", "twopoint(0.5,0.5,1)"),
        ),
        (
            "thinned-ternary",
            m("twopoint(0,0.3,3)", "constant(1)", "twopoint(0,0.5,0.5)"),
        ),
        (
            "three-point-n",
            m(
                "mixture(0.5,constant(0),twopoint(1,0.5,2))",
                "twopoint(0.5,0.3,2)",
                "constant(0.5)",
            ),
        ),
    ]
}

/// Continuous or unbounded-support models with light tails.
pub fn stochastic_models() -> Vec<(&'static str, WbpModel)> {
    vec![
        (
            "poisson-uniform",
            m("poisson(1.2)", "exponential(1)", "uniform(0,1)"),
        ),
        (
            "geometric-lognormal",
            m("geometric(0.5)", "lognormal(0,0.5)", "lognormal(-0.5,0.5)"),
        ),
        (
            "binary-exponential",
            m("twopoint(0,0.5,2)", "uniform(0.5,1.5)", "exponential(2)"),
        ),
    ]
}

/// `N ≡ 2, Q ≡ 1, C ≡ 1/4`: `R = 2`.
pub fn deterministic_binary() -> WbpModel {
    m("constant(2)", "constant(1)", "constant(0.25)")
}

/// `N ≡ 1, Q ≡ 1, C ~ LogNormal(-1/2, 1/2)`: power-law tail with index 2.
pub fn c_dominant_alpha2() -> WbpModel {
    m("constant(1)", "constant(1)", "lognormal(-0.5,0.5)")
}

/// `N ≡ 1, Q ≡ 1, C ~ LogNormal(-1/2, 1)`: `E[C] = 1`, tail index 1.
pub fn c_dominant_alpha1() -> WbpModel {
    m("constant(1)", "constant(1)", "lognormal(-0.5,1)")
}

/// Zipf(2.5) in-degree mixed to mean 1.2, `C ≡ 1/2`, `Q ≡ 1`.
pub fn n_dominant() -> WbpModel {
    let n = DistSpec::zipf_with_mean(2.5, 1.2).expect("zipf(2.5) has a finite mean");
    WbpModel::new(n, DistSpec::Constant(1.0), DistSpec::Constant(0.5)).expect("valid")
}

/// `N ≡ 1, Q ~ Pareto(2, 1), C ≡ 1/2`.
pub fn q_dominant() -> WbpModel {
    m("constant(1)", "pareto(2,1)", "constant(0.5)")
}
