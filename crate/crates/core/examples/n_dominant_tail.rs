//! Tail inherited from a heavy in-degree N: limit and finite-n constants and
//! the empirical ratio P(R > x) / P(N > x).

use wbp::corpus::n_dominant;
use wbp::estimators::{exceedance, sorted_copy};
use wbp::theory::{n_dominant_h, wn_prefactor, Regime};
use wbp::tree::{simulate_r_replicas, DEFAULT_NODE_BUDGET};
use wbp::RngStream;

fn main() -> wbp::Result<()> {
    let model = n_dominant();
    let alpha = 2.5;
    println!("H = {:.5}", n_dominant_h(&model, alpha, None)?.h);
    for n in [1, 2, 5, 10] {
        println!(
            "n = {n:>2}: H_n = {:.5}, W_n prefactor = {:.6}",
            n_dominant_h(&model, alpha, Some(n))?.h,
            wn_prefactor(&model, alpha, n, Regime::NDominant)?
        );
    }
    let draws: Vec<f64> = simulate_r_replicas(
        &model,
        200_000,
        19,
        DEFAULT_NODE_BUDGET,
        &RngStream::from_seed(5),
        0,
    )?
    .into_iter()
    .map(|d| d.value)
    .collect();
    let sorted = sorted_copy(&draws);
    for x in [5.5, 10.5, 20.5, 30.5] {
        let p = exceedance(&sorted, x);
        println!(
            "x = {x}: P(R > x) / P(N > x) = {:.3}",
            p / model.n_dist.survival(x)
        );
    }
    Ok(())
}
