//! Empirical check that P(W_n > x) / (η^n P(N > x)) stays bounded in n.

use wbp::corpus::n_dominant;
use wbp::estimators::uniform_bound_check;
use wbp::numeric::logspace;
use wbp::RngStream;

fn main() -> wbp::Result<()> {
    let grid = logspace(1.0, 10.0, 10);
    let rep = uniform_bound_check(
        &n_dominant(),
        0.99,
        1..=6,
        &grid,
        200_000,
        &RngStream::from_seed(4),
        0,
    )?;
    for row in &rep.rows {
        println!("n = {}: max ratio {:.4}", row.n, row.max_ratio);
    }
    println!("trend {:.4}, bounded: {}", rep.trend_slope, rep.bounded);
    Ok(())
}
