//! Tail inherited from a heavy Q.

use wbp::corpus::q_dominant;
use wbp::estimators::{tail_ratio, Reference};
use wbp::experiment::plateau_grid;
use wbp::theory::{classify_regime, q_dominant_h};
use wbp::tree::{simulate_r_replicas, DEFAULT_NODE_BUDGET};
use wbp::RngStream;

fn main() -> wbp::Result<()> {
    let model = q_dominant();
    let class = classify_regime(&model);
    println!("{:?}, α = {:?}", class.kind, class.alpha);
    let h = q_dominant_h(&model, 2.0, None)?.h;
    let draws: Vec<f64> = simulate_r_replicas(
        &model,
        500_000,
        25,
        DEFAULT_NODE_BUDGET,
        &RngStream::from_seed(1),
        0,
    )?
    .into_iter()
    .map(|d| d.value)
    .collect();
    let grid = plateau_grid(&wbp::estimators::sorted_copy(&draws), false);
    let surv = |x: f64| model.q_dist.survival(x);
    let tr = tail_ratio(&draws, Reference::Survival(&surv), &grid)?;
    for (x, r) in &tr.points {
        println!("x = {x:8.2}: ratio {r:.3}");
    }
    // the upper-quantile ratios are noisy at this size; plateaus range over
    // roughly 1.4 to 1.7 across seeds and drift down slowly as x grows
    println!("plateau {:.3}, limit H = {h:.5}", tr.plateau);
    Ok(())
}
