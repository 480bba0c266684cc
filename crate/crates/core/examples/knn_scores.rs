//! Prints the kNN list of one point with the three neighbor-similarity
//! scores of each outgoing edge.
//!
//! ```text
//! cargo run --example knn_scores -- [node] [k]
//! ```

use nsgraph::dataset::gen_two_spirals;
use nsgraph::knn::build_knn;
use nsgraph::similarity::score_all_edges;
use nsgraph::Metric;

fn main() -> nsgraph::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let node: usize = args.first().map_or(0, |s| s.parse().expect("node"));
    let k: usize = args.get(1).map_or(10, |s| s.parse().expect("k"));

    let data = gen_two_spirals(200, 2.0, 0.02, 7)?;
    let graph = build_knn(&data, k, Metric::Euclidean)?;
    let scores = score_all_edges(&graph);
    let labels = data.labels().expect("spirals are labeled");

    println!("node {node} (arm {}), k = {k}", labels[node]);
    println!("{:>5} {:>4} {:>9} {:>3} {:>3} {:>6}", "nbr", "arm", "dist", "sK", "sJ", "sA");
    for (rank, &v) in graph.neighbors(node).iter().enumerate() {
        let e = node * k + rank;
        println!(
            "{v:>5} {:>4} {:>9.4} {:>3} {:>3} {:>6.3}",
            labels[v],
            graph.edge_dist(e),
            scores.sk()[e],
            scores.sj()[e],
            scores.sa()[e]
        );
    }
    Ok(())
}
