//! Serves the exploration API over a two-spirals session.
//!
//! ```text
//! cargo run --release --example explore_server -- [port]
//! curl 'http://127.0.0.1:8080/components?threshold=0.79'
//! ```

use std::sync::{Arc, OnceLock};

use nsgraph::dataset::gen_two_spirals;
use nsgraph::knn::build_knn;
use nsgraph::pipeline::DatasetMeta;
use nsgraph::server::{serve, Session};
use nsgraph::similarity::score_all_edges;
use nsgraph::Metric;

#[tokio::main]
async fn main() -> nsgraph::Result<()> {
    let port: u16 = std::env::args().nth(1).map_or(8080, |s| s.parse().expect("port"));

    let data = gen_two_spirals(500, 2.0, 0.0, 1)?;
    let graph = build_knn(&data, 20, Metric::Euclidean)?;
    let scores = score_all_edges(&graph);
    let session = Session::new(graph, scores, DatasetMeta::of(&data), 50)?;

    let addr = format!("127.0.0.1:{port}");
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| nsgraph::Error::io(&addr, e))?;
    println!("listening on http://{addr} (ctrl-c to stop)");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve(listener, Arc::new(OnceLock::from(session)), shutdown)
        .await
        .map_err(|e| nsgraph::Error::io(addr, e))
}
