//! Simulate generations of a weighted branching tree and truncated draws of R.

use wbp::moments::{mean_bias_bound, mean_r, mean_wn};
use wbp::tree::{simulate_generations, simulate_r_replicas, DEFAULT_NODE_BUDGET};
use wbp::{RngStream, WbpModel};

fn main() -> wbp::Result<()> {
    let model = WbpModel::parse("poisson(1.2)", "exponential(1)", "uniform(0,1)")?;
    let rng = RngStream::from_seed(5);
    for g in simulate_generations(&model, 6, DEFAULT_NODE_BUDGET, &rng)? {
        println!(
            "generation {}: Z = {}, W = {:.4} (E[W] = {:.4})",
            g.n,
            g.z,
            g.w,
            mean_wn(&model, g.n)?
        );
    }
    let depth = 20;
    let draws = simulate_r_replicas(
        &model,
        50_000,
        depth,
        DEFAULT_NODE_BUDGET,
        &rng.derive("r"),
        0,
    )?;
    let mean = draws.iter().map(|d| d.value).sum::<f64>() / draws.len() as f64;
    println!(
        "R^({depth}): sample mean {mean:.4}, E[R] = {:.4}, truncation bias ≤ {:.2e}",
        mean_r(&model)?,
        mean_bias_bound(&model, depth)?
    );
    Ok(())
}
