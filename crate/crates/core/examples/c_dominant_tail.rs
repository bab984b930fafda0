//! Power-law tail driven by the weights: root α, the tail constant in closed
//! form and by Monte Carlo, and a Hill estimate from simulated draws.

use wbp::corpus::c_dominant_alpha2;
use wbp::estimators::hill;
use wbp::moments::depth_for_bias;
use wbp::theory::{goldie_h_closed, goldie_h_mc, solve_alpha_c};
use wbp::tree::{simulate_r_replicas, DEFAULT_NODE_BUDGET};
use wbp::RngStream;

fn main() -> wbp::Result<()> {
    let model = c_dominant_alpha2();
    let sol = solve_alpha_c(&model, None)?;
    println!(
        "α = {:.10}, E[C^α log C] = {:.6}",
        sol.alpha, sol.mu_alpha_weighted
    );
    let depth = depth_for_bias(&model, 1e-6)?;
    let rng = RngStream::from_seed(3);
    println!("H closed form = {:.5}", goldie_h_closed(&model, 2.0)?.h);
    let mc = goldie_h_mc(&model, 2.0, 200_000, depth, &rng.derive("h"), 0)?;
    println!(
        "H Monte Carlo = {:.5} ± {:.5}",
        mc.h,
        mc.mc_stderr.unwrap_or(0.0)
    );
    let draws: Vec<f64> =
        simulate_r_replicas(&model, 200_000, depth, DEFAULT_NODE_BUDGET, &rng, 0)?
            .into_iter()
            .map(|d| d.value)
            .collect();
    let h = hill(&draws, None)?;
    println!(
        "Hill α̂ = {:.3} ± {:.3} (k = {})",
        h.alpha_hat, h.stderr, h.k
    );
    Ok(())
}
