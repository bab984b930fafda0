//! Parse mark laws, inspect their moments and tails, and sample from them.

use wbp::{DistSpec, RngStream};

fn main() -> wbp::Result<()> {
    for text in [
        "zipf(2.5)",
        "lognormal(-0.5,0.5)",
        "shift(poisson(5),1)",
        "reciprocal(shift(poisson(5),1),0.85)",
    ] {
        let d: DistSpec = text.parse()?;
        let s = d.sampler()?;
        let mut rng = RngStream::from_seed(1).rng();
        let draws: Vec<f64> = (0..5).map(|_| s.sample(&mut rng)).collect();
        println!(
            "{d}: mean {:.5}, E[X^2] {:.5}, tail index {:?}, P(X > 3) {:.3e}, draws {draws:?}",
            d.mean()?,
            d.mellin(2.0)?,
            d.tail_index(),
            d.survival(3.0)
        );
    }
    // a Zipf law mixed with an atom to hit a prescribed mean
    let n = DistSpec::zipf_with_mean(2.5, 1.2)?;
    println!("{n} has mean {}", n.mean()?);
    Ok(())
}
