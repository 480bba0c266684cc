use std::sync::{Arc, OnceLock};

use nsgraph::dataset::gen_two_spirals;
use nsgraph::filter::{component_purity, filter_edges, scc};
use nsgraph::knn::build_knn;
use nsgraph::pipeline::DatasetMeta;
use nsgraph::raster::Raster;
use nsgraph::server::{serve, Session, SharedSession};
use nsgraph::similarity::score_all_edges;
use nsgraph::{Dataset, FilterPredicate, Metric};
use serde_json::Value;
use tokio::sync::oneshot;

struct Server {
    base: String,
    stop: Option<oneshot::Sender<()>>,
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
    }
}

async fn start(state: SharedSession) -> Server {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = oneshot::channel();
    tokio::spawn(serve(listener, state, async {
        let _ = rx.await;
    }));
    Server { base, stop: Some(tx) }
}

fn spirals() -> Dataset {
    gen_two_spirals(150, 2.0, 0.0, 5).unwrap()
}

fn session_for(data: &Dataset) -> Session {
    let graph = build_knn(data, 10, Metric::Euclidean).unwrap();
    let scores = score_all_edges(&graph);
    Session::new(graph, scores, DatasetMeta::of(data), 21).unwrap()
}

async fn get(base: &str, path: &str) -> (u16, Vec<u8>) {
    let resp = reqwest::get(format!("{base}{path}")).await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.bytes().await.unwrap().to_vec())
}

async fn get_json(base: &str, path: &str) -> Value {
    let (status, body) = get(base, path).await;
    assert_eq!(status, 200, "{path}: {}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

#[tokio::test]
async fn unavailable_until_loaded() {
    let state: SharedSession = Arc::new(OnceLock::new());
    let server = start(state.clone()).await;
    for path in ["/meta", "/adjacency?threshold=0.5", "/components?threshold=0.5"] {
        assert_eq!(get(&server.base, path).await.0, 503, "{path}");
    }
    assert!(state.set(session_for(&spirals())).is_ok());
    assert_eq!(get(&server.base, "/meta").await.0, 200);
}

#[tokio::test]
async fn meta_describes_the_session() {
    let server = start(Arc::new(OnceLock::from(session_for(&spirals())))).await;
    let meta = get_json(&server.base, "/meta").await;
    assert_eq!(meta["n"], 300);
    assert_eq!(meta["k"], 10);
    assert_eq!(meta["d"], 2);
    assert_eq!(meta["has_labels"], true);
    assert_eq!(meta["has_xy"], true);
    let thresholds = meta["sweep_thresholds"].as_array().unwrap();
    assert_eq!(thresholds.len(), 21);
    assert_eq!(thresholds[0], 1.0);
    assert_eq!(thresholds[20], 0.0);
    assert_eq!(get_json(&server.base, "/meta").await, meta);
}

#[tokio::test]
async fn endpoints_agree_with_library_at_every_threshold() {
    let data = spirals();
    let graph = build_knn(&data, 10, Metric::Euclidean).unwrap();
    let scores = score_all_edges(&graph);
    let server = start(Arc::new(OnceLock::from(session_for(&data)))).await;

    for x in [0.0, 0.13, 0.5, 0.79, 0.97, 1.0] {
        // grid is i/20; snap down
        let snapped = (x * 20.0_f64).floor() / 20.0;
        let mask = filter_edges(&graph, &scores, &FilterPredicate::Combined { sa_min: snapped }).unwrap();
        let labeling = scc(&graph, &mask).unwrap();
        let purity = component_purity(&labeling, data.labels()).unwrap();

        let comps = get_json(&server.base, &format!("/components?threshold={x}")).await;
        assert!((comps["threshold"].as_f64().unwrap() - snapped).abs() < 1e-12);
        let list = comps["components"].as_array().unwrap();
        assert_eq!(list.len(), labeling.count());
        let total: u64 = list.iter().map(|c| c["size"].as_u64().unwrap()).sum();
        assert_eq!(total, 300);
        for (c, entry) in list.iter().enumerate() {
            assert_eq!(entry["id"], c);
            assert_eq!(entry["size"], labeling.sizes()[c]);
            assert_eq!(entry["purity"].as_f64().unwrap(), purity[c]);
        }

        let boxes = get_json(&server.base, &format!("/adjacency/boxes?threshold={x}&downsample=1")).await;
        let n_multi = labeling.sizes().iter().filter(|&&s| s >= 2).count();
        assert_eq!(boxes["boxes"].as_array().unwrap().len(), n_multi);
        for b in boxes["boxes"].as_array().unwrap() {
            let c = b["component"].as_u64().unwrap() as usize;
            assert_eq!(b["size"], labeling.sizes()[c], "blocks are contiguous");
        }

        let points = get_json(&server.base, &format!("/points?threshold={x}")).await;
        let points = points["points"].as_array().unwrap();
        assert_eq!(points.len(), 300);
        for (v, p) in points.iter().enumerate() {
            assert_eq!(p["component"], labeling.component_of(v));
        }
    }
}

#[tokio::test]
async fn adjacency_raster_is_pgm() {
    let server = start(Arc::new(OnceLock::from(session_for(&spirals())))).await;
    let resp = reqwest::get(format!("{}/adjacency?threshold=0&downsample=1", server.base)).await.unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    assert_eq!(resp.headers()["content-type"], "image/x-portable-graymap");
    assert_eq!(resp.headers()["x-sweep-threshold"], "0");
    let full = Raster::from_pgm(&resp.bytes().await.unwrap()).unwrap();
    assert_eq!((full.width(), full.height()), (300, 300));
    // every node has exactly k kept edges at threshold 0
    let dark = full.pixels().iter().filter(|&&p| p == 0).count();
    assert_eq!(dark, 300 * 10);

    let (_, body) = get(&server.base, "/adjacency?threshold=1&downsample=7").await;
    let pooled = Raster::from_pgm(&body).unwrap();
    assert_eq!(pooled.width(), 300usize.div_ceil(7));

    let (_, again) = get(&server.base, "/adjacency?threshold=1&downsample=7").await;
    assert_eq!(body, again);
}

#[tokio::test]
async fn bad_parameters_are_rejected() {
    let server = start(Arc::new(OnceLock::from(session_for(&spirals())))).await;
    for path in [
        "/adjacency",
        "/adjacency?threshold=1.5",
        "/adjacency?threshold=-0.1",
        "/adjacency?threshold=abc",
        "/adjacency?threshold=NaN",
        "/adjacency?threshold=0.5&downsample=0",
        "/adjacency?threshold=0.5&downsample=x",
        "/adjacency/boxes?threshold=2",
        "/components",
        "/components?threshold=",
    ] {
        assert_eq!(get(&server.base, path).await.0, 400, "{path}");
    }
}

#[tokio::test]
async fn points_need_display_coordinates() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * i) as f64 % 7.0, 1.0]).collect();
    let data = Dataset::from_rows(&rows).unwrap();
    let server = start(Arc::new(OnceLock::from(session_for(&data)))).await;
    assert_eq!(get(&server.base, "/points?threshold=0.5").await.0, 404);
    let meta = get_json(&server.base, "/meta").await;
    assert_eq!(meta["has_xy"], false);
    assert_eq!(meta["has_labels"], false);
    let comps = get_json(&server.base, "/components?threshold=0").await;
    assert!(comps["components"][0].get("purity").is_none());
}
