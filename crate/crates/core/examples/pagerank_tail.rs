//! PageRank on a configuration graph with a power-law in-degree, and the
//! comparison of the rank tail with the in-degree tail.

use wbp::dist::DistSpec;
use wbp::graph::{generate_configuration_graph, pagerank, rank_tail_compare};
use wbp::RngStream;

fn main() -> wbp::Result<()> {
    let in_deg: DistSpec = "zipf(2.5)".parse()?;
    let out_deg: DistSpec = "shift(poisson(5),1)".parse()?;
    let g = generate_configuration_graph(100_000, &in_deg, &out_deg, &RngStream::from_seed(11))?;
    let ranks = pagerank(&g, 0.85, 1e-12, 1000)?;
    println!(
        "{} edges, {} iterations, residual {:.1e}",
        g.edge_count(),
        ranks.iterations_used,
        ranks.residual
    );
    let cmp = rank_tail_compare(&g, &ranks, 0.85)?;
    if let (Some(r), Some(d)) = (cmp.rank_slope, cmp.in_degree_slope) {
        println!("rank CCDF slope {:.3} ± {:.3}", r.slope, r.stderr);
        println!("in-degree CCDF slope {:.3} ± {:.3}", d.slope, d.stderr);
    }
    for n in &cmp.notes {
        println!("note: {n}");
    }
    Ok(())
}
