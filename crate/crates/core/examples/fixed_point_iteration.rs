//! Population-dynamics iteration of the distributional fixed-point equation.

use wbp::dist::DistSpec;
use wbp::tree::iterate_fixed_point;
use wbp::{RngStream, WbpModel};

fn main() -> wbp::Result<()> {
    let model = WbpModel::parse("constant(1)", "constant(1)", "lognormal(-0.5,0.5)")?;
    let run = iterate_fixed_point(
        &model,
        100_000,
        12,
        &DistSpec::Constant(0.0),
        &RngStream::from_seed(2),
        0,
    )?;
    for (k, d) in run.ks.iter().enumerate() {
        let pool = &run.pools[k + 1];
        let mean = pool.iter().sum::<f64>() / pool.len() as f64;
        println!(
            "iteration {:>2}: KS to previous pool {d:.4}, pool mean {mean:.4}",
            k + 1
        );
    }
    Ok(())
}
