//! Recursive normalized cut on a filtered graph of Gaussian blobs.
//!
//! ```text
//! cargo run --release --example ncut_partition
//! ```

use nsgraph::filter::filter_edges;
use nsgraph::knn::build_knn;
use nsgraph::ncut::{ncut_recursive, symmetrize};
use nsgraph::postprocess::f_measure;
use nsgraph::similarity::score_all_edges;
use nsgraph::{Dataset, FilterPredicate, Metric, NcutParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> nsgraph::Result<()> {
    let centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0], [6.0, 6.0], [3.0, 12.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..200 {
            points.extend(center.iter().map(|m| m + noise.sample(&mut rng)));
            labels.push(c as u32);
        }
    }
    let n = labels.len();
    let data = Dataset::new(points, n, 2)?.with_labels(labels)?;

    let graph = build_knn(&data, 15, Metric::Euclidean)?;
    let scores = score_all_edges(&graph);
    let mask = filter_edges(&graph, &scores, &FilterPredicate::Counts { sk_max: 10, sj_min: 3 })?;
    let all: Vec<usize> = (0..n).collect();
    let g = symmetrize(&graph, &mask, &all)?;
    let outcome = ncut_recursive(&g, &NcutParams::default())?;

    println!("{} clusters, sizes {:?}", outcome.partition.count(), outcome.partition.sizes());
    for leaf in outcome.leaves.iter().filter(|l| l.nodes.len() >= 50) {
        println!("  leaf of {} at depth {}: {:?}", leaf.nodes.len(), leaf.depth, leaf.reason);
    }
    println!("F-measure {:.3}", f_measure(&outcome.partition, data.labels().unwrap())?);
    Ok(())
}
