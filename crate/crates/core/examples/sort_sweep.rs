//! Threshold sweep sort of the two-spirals graph, writing the sorted
//! adjacency matrix as PGM images at a few thresholds.
//!
//! ```text
//! cargo run --release --example sort_sweep -- [out_dir]
//! ```

use std::path::PathBuf;

use nsgraph::dataset::gen_two_spirals;
use nsgraph::knn::build_knn;
use nsgraph::similarity::score_all_edges;
use nsgraph::sweep::{component_boxes, render_adjacency, sweep_sort};
use nsgraph::Metric;

fn main() -> nsgraph::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/sort_sweep".into()));
    std::fs::create_dir_all(&out).map_err(|e| nsgraph::Error::io(&out, e))?;

    let data = gen_two_spirals(300, 2.0, 0.0, 3)?;
    let graph = build_knn(&data, 20, Metric::Euclidean)?;
    let scores = score_all_edges(&graph);
    let sweep = sweep_sort(&graph, &scores, 50)?;

    for (i, step) in sweep.steps().iter().enumerate() {
        if i % 7 != 0 && i + 1 != sweep.steps().len() {
            continue;
        }
        let mask = sweep.mask_at(i, &graph, &scores)?;
        let raster = render_adjacency(&step.permutation, &graph, &mask)?;
        let path = out.join(format!("step{i:02}.pgm"));
        raster.write_pgm(&path)?;
        let boxes = component_boxes(&step.permutation, &step.labeling)?;
        println!(
            "threshold {:.3}: {:>4} components, {:>3} boxes -> {}",
            step.threshold,
            step.labeling.count(),
            boxes.len(),
            path.display()
        );
    }
    Ok(())
}
