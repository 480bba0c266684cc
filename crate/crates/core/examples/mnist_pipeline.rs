//! Full chain on MNIST digits: kNN, count filter, ncut, merge, reassignment,
//! with the F-measure after each stage.
//!
//! ```text
//! python3 scripts/fetch_mnist_10k.py
//! cargo run --release --example mnist_pipeline -- [data_dir] [merge_density]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use nsgraph::dataset::{load_idx_images, load_idx_labels};
use nsgraph::filter::{filter_edges, scc};
use nsgraph::knn::build_knn;
use nsgraph::ncut::{largest_component, ncut_recursive};
use nsgraph::postprocess::{f_measure, merge_clusters, reassign_small, suggest_merges};
use nsgraph::similarity::score_all_edges;
use nsgraph::{FilterPredicate, Metric, NcutParams};

fn main() -> nsgraph::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(args.first().map_or("data/mnist10k", String::as_str));

    let labels = load_idx_labels(dir.join("labels-idx1-ubyte"))?;
    let data = load_idx_images(dir.join("images-idx3-ubyte"))?.with_labels(labels.clone())?;
    println!("{} images of {} pixels", data.len(), data.dim());

    let t = Instant::now();
    let graph = build_knn(&data, 20, Metric::Euclidean)?;
    let scores = score_all_edges(&graph);
    println!("kNN graph and scores in {:.1?}", t.elapsed());

    let mask = filter_edges(&graph, &scores, &FilterPredicate::Counts { sk_max: 14, sj_min: 4 })?;
    let components = scc(&graph, &mask)?;
    println!(
        "kept {} of {} edges, {} strongly connected components",
        mask.count_kept(),
        graph.n_edges(),
        components.count()
    );

    let t = Instant::now();
    let g = largest_component(&graph, &mask)?;
    let ncut = ncut_recursive(&g, &NcutParams::default())?.partition;
    println!("ncut on the largest component ({} nodes): {} clusters in {:.1?}, F = {:.3}", g.len(), ncut.count(), t.elapsed(), f_measure(&ncut, &labels)?);

    let density = args.get(1).map_or(
        NcutParams::default().cut_threshold * mask.count_kept() as f64 / graph.n() as f64,
        |s| s.parse().expect("merge density"),
    );
    let spec = suggest_merges(&ncut, &graph, &mask, density);
    let merged = merge_clusters(&ncut, &spec)?;
    println!("merge at density {density:.2} ({} groups): {} clusters, F = {:.3}", spec.groups.len(), merged.count(), f_measure(&merged, &labels)?);

    let fin = reassign_small(&merged, &graph, 300, 2)?;
    println!(
        "reassign: {} clusters, {} unassigned, F = {:.3}",
        fin.count(),
        fin.n() - fin.n_assigned(),
        f_measure(&fin, &labels)?
    );
    Ok(())
}
