//! Mean and second-moment recursions, moment bounds and stability conditions.

use wbp::moments::{
    find_stable_beta, moment_bound, second_moment_wn, spectral_params, stability_check,
};
use wbp::WbpModel;

fn main() -> wbp::Result<()> {
    let model = WbpModel::parse("geometric(0.5)", "lognormal(0,0.5)", "lognormal(-0.5,0.5)")?;
    let sp = spectral_params(&model, 2.0)?;
    println!("ρ = {:.4}, ρ_2 = {:.4}", sp.rho, sp.rho_beta);
    for n in 0..5 {
        println!("E[W_{n}^2] = {:.6}", second_moment_wn(&model, n)?);
    }
    for beta in [0.5, 1.0, 2.0] {
        let b = moment_bound(&model, beta)?;
        println!(
            "β = {beta}: E[W_n^β] ≤ K {:.4}^n, prefactor {:?}",
            b.rate, b.prefactor
        );
    }
    let beta = find_stable_beta(&model).expect("stable");
    for c in stability_check(&model, beta).conditions {
        println!("  {}: {:.4} < {} → {}", c.name, c.value, c.limit, c.passed);
    }
    Ok(())
}
