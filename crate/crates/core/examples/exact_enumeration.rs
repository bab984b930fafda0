//! Exact laws of W_n and R^(n) for finite-support marks, against the moment recursions.

use wbp::corpus::finite_models;
use wbp::moments::{mean_wn, second_moment_wn};
use wbp::tree::{enumerate_exact, DEFAULT_SUPPORT_LIMIT};

fn main() -> wbp::Result<()> {
    for (name, model) in finite_models() {
        let ex = enumerate_exact(&model, 3, DEFAULT_SUPPORT_LIMIT)?;
        let w3 = &ex.w[3];
        println!(
            "{name}: R^(3) has {} atoms (mass {:.15}); E[W_3] {:.12} vs {:.12}; E[W_3^2] {:.12} vs {:.12}",
            ex.r.len(),
            ex.r.total_mass(),
            w3.mean(),
            mean_wn(&model, 3)?,
            w3.moment(2.0),
            second_moment_wn(&model, 3)?
        );
    }
    Ok(())
}
