//! Separates two interleaved spirals by removing low-similarity kNN edges.
//!
//! ```text
//! cargo run --release --example two_spirals -- [n_per_arm] [sa_min] [seed] [noise]
//! ```

use nsgraph::dataset::gen_two_spirals;
use nsgraph::filter::{component_purity, filter_edges, scc};
use nsgraph::knn::build_knn;
use nsgraph::similarity::score_all_edges;
use nsgraph::{FilterPredicate, Metric};

fn main() -> nsgraph::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_per_arm = args.first().map_or(500, |s| s.parse().expect("n_per_arm"));
    let sa_min = args.get(1).map_or(0.79, |s| s.parse().expect("sa_min"));
    let seed = args.get(2).map_or(1, |s| s.parse().expect("seed"));
    let noise = args.get(3).map_or(0.0, |s| s.parse().expect("noise"));

    let data = gen_two_spirals(n_per_arm, 2.0, noise, seed)?;
    let graph = build_knn(&data, 20, Metric::Euclidean)?;
    let scores = score_all_edges(&graph);
    let mask = filter_edges(&graph, &scores, &FilterPredicate::Combined { sa_min })?;
    let labeling = scc(&graph, &mask)?;
    let purity = component_purity(&labeling, data.labels())?;

    println!(
        "{} points, kept {} of {} edges at sA >= {sa_min}",
        data.len(),
        mask.count_kept(),
        graph.n_edges()
    );
    println!("{} strongly connected components", labeling.count());
    for (c, (&size, p)) in labeling.sizes().iter().zip(&purity).enumerate().take(6) {
        println!("  component {c}: {size} points, arm purity {p:.3}");
    }
    Ok(())
}
