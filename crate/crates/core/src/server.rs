//! Read-only HTTP service over a precomputed threshold sweep.
//!
//! | route | response |
//! |-------|----------|
//! | `GET /meta` | `{n, k, d, has_labels, has_xy, sweep_thresholds}` |
//! | `GET /adjacency?threshold=x&downsample=m` | PGM raster (`image/x-portable-graymap`) |
//! | `GET /adjacency/boxes?threshold=x&downsample=m` | component boxes for that raster |
//! | `GET /components?threshold=x` | `{threshold, components: [{id, size, member_ids, members_truncated, purity}]}` |
//! | `GET /points?threshold=x` | `{threshold, points: [{x, y, component}]}`, 404 without 2-D coordinates |
//!
//! A requested threshold snaps to the largest sweep grid value not above it;
//! the snapped value is echoed in the body (or the `x-sweep-threshold`
//! header for rasters). Every route answers 503 until the session is loaded.

use std::collections::HashMap;
use std::future::Future;
use std::sync::{Arc, OnceLock};

use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::filter::{component_purity, EdgeMask};
use crate::knn::KnnGraph;
use crate::pipeline::{DatasetMeta, Run};
use crate::raster::{component_boxes, render_adjacency_pooled, ComponentBox};
use crate::similarity::EdgeScores;
use crate::sweep::{sweep_sort, SweepResult};

/// Member ids listed per component before truncation.
pub const MEMBER_CAP: usize = 200;
/// Largest raster side served; smaller downsample factors are rejected.
pub const MAX_RASTER_SIDE: usize = 8192;
/// Target raster side when the client gives no downsample factor.
pub const DEFAULT_RASTER_SIDE: usize = 1000;

struct StepCache {
    mask: EdgeMask,
    purity: Option<Vec<f64>>,
}

/// A loaded graph with its sweep. Immutable once built.
pub struct Session {
    graph: KnnGraph,
    meta: DatasetMeta,
    sweep: SweepResult,
    cache: Vec<StepCache>,
}

impl Session {
    pub fn new(graph: KnnGraph, scores: EdgeScores, meta: DatasetMeta, steps: usize) -> Result<Self> {
        if meta.n != graph.n() {
            return Err(Error::DimensionMismatch {
                left: meta.n,
                right: graph.n(),
            });
        }
        let sweep = sweep_sort(&graph, &scores, steps)?;
        let cache = (0..sweep.steps().len())
            .map(|i| {
                Ok(StepCache {
                    mask: sweep.mask_at(i, &graph, &scores)?,
                    purity: meta
                        .labels
                        .as_deref()
                        .map(|l| component_purity(&sweep.steps()[i].labeling, Some(l)))
                        .transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Session {
            graph,
            meta,
            sweep,
            cache,
        })
    }

    /// Loads `edges.txt` and `dataset.json` from a run's output directory.
    pub fn from_run(run: &Run) -> Result<Self> {
        let (graph, scores) = run.load_graph()?;
        let meta = run.load_meta()?;
        Session::new(graph, scores, meta, run.config.sweep_steps)
    }

    pub fn graph(&self) -> &KnnGraph {
        &self.graph
    }

    pub fn sweep(&self) -> &SweepResult {
        &self.sweep
    }

    pub fn default_downsample(&self) -> usize {
        self.graph.n().div_ceil(DEFAULT_RASTER_SIDE).max(1)
    }

    fn step(&self, threshold: f64) -> usize {
        self.sweep
            .step_at_or_below(threshold)
            .expect("the sweep grid ends at threshold 0")
    }
}

pub type SharedSession = Arc<OnceLock<Session>>;

pub fn router(state: SharedSession) -> Router {
    Router::new()
        .route("/meta", get(meta))
        .route("/adjacency", get(adjacency))
        .route("/adjacency/boxes", get(boxes))
        .route("/components", get(components))
        .route("/points", get(points))
        .with_state(state)
}

/// Serves `state` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: SharedSession,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

type Params = Query<HashMap<String, String>>;

#[derive(Debug)]
enum ApiError {
    NotLoaded,
    BadRequest(String),
    NotFound(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::NotLoaded => (StatusCode::SERVICE_UNAVAILABLE, "session is still loading".to_owned()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": message }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

fn session(state: &SharedSession) -> std::result::Result<&Session, ApiError> {
    state.get().ok_or(ApiError::NotLoaded)
}

fn threshold(params: &HashMap<String, String>) -> std::result::Result<f64, ApiError> {
    let raw = params
        .get("threshold")
        .ok_or_else(|| ApiError::BadRequest("missing threshold".into()))?;
    match raw.parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
        _ => Err(ApiError::BadRequest(format!("threshold must be a number in [0, 1], got {raw:?}"))),
    }
}

fn downsample(params: &HashMap<String, String>, s: &Session) -> std::result::Result<usize, ApiError> {
    let m = match params.get("downsample") {
        None => return Ok(s.default_downsample()),
        Some(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|&m| m >= 1)
            .ok_or_else(|| ApiError::BadRequest(format!("downsample must be a positive integer, got {raw:?}")))?,
    };
    if s.graph.n().div_ceil(m) > MAX_RASTER_SIDE {
        return Err(ApiError::BadRequest(format!(
            "downsample {m} gives a raster wider than {MAX_RASTER_SIDE} pixels"
        )));
    }
    Ok(m)
}

async fn meta(State(state): State<SharedSession>) -> std::result::Result<Json<serde_json::Value>, ApiError> {
    let s = session(&state)?;
    Ok(Json(json!({
        "n": s.meta.n,
        "k": s.graph.k(),
        "d": s.meta.d,
        "has_labels": s.meta.labels.is_some(),
        "has_xy": s.meta.display_xy.is_some(),
        "sweep_thresholds": s.sweep.thresholds(),
    })))
}

async fn adjacency(State(state): State<SharedSession>, Query(params): Params) -> std::result::Result<Response, ApiError> {
    let s = session(&state)?;
    let i = s.step(threshold(&params)?);
    let m = downsample(&params, s)?;
    let step = &s.sweep.steps()[i];
    let raster = render_adjacency_pooled(&step.permutation, &s.graph, &s.cache[i].mask, m)?;
    let mut response = raster.to_pgm().into_response();
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/x-portable-graymap"));
    headers.insert(
        "x-sweep-threshold",
        HeaderValue::from_str(&step.threshold.to_string()).expect("a float formats as a header value"),
    );
    Ok(response)
}

#[derive(Serialize)]
struct BoxesBody {
    threshold: f64,
    downsample: usize,
    /// Raster side in pixels.
    side: usize,
    /// Node-index boxes, in display order.
    boxes: Vec<ComponentBox>,
}

async fn boxes(State(state): State<SharedSession>, Query(params): Params) -> std::result::Result<Json<BoxesBody>, ApiError> {
    let s = session(&state)?;
    let i = s.step(threshold(&params)?);
    let m = downsample(&params, s)?;
    let step = &s.sweep.steps()[i];
    Ok(Json(BoxesBody {
        threshold: step.threshold,
        downsample: m,
        side: s.graph.n().div_ceil(m),
        boxes: component_boxes(&step.permutation, &step.labeling)?,
    }))
}

#[derive(Serialize)]
struct ComponentEntry<'a> {
    id: usize,
    size: usize,
    member_ids: &'a [usize],
    members_truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    purity: Option<f64>,
}

async fn components(State(state): State<SharedSession>, Query(params): Params) -> std::result::Result<Response, ApiError> {
    let s = session(&state)?;
    let i = s.step(threshold(&params)?);
    let step = &s.sweep.steps()[i];
    let members = step.labeling.members();
    let list: Vec<ComponentEntry> = members
        .iter()
        .enumerate()
        .map(|(c, m)| ComponentEntry {
            id: c,
            size: m.len(),
            member_ids: &m[..m.len().min(MEMBER_CAP)],
            members_truncated: m.len() > MEMBER_CAP,
            purity: s.cache[i].purity.as_ref().map(|p| p[c]),
        })
        .collect();
    Ok(Json(json!({ "threshold": step.threshold, "components": list })).into_response())
}

#[derive(Serialize)]
struct Point {
    x: f64,
    y: f64,
    component: usize,
}

async fn points(State(state): State<SharedSession>, Query(params): Params) -> std::result::Result<Response, ApiError> {
    let s = session(&state)?;
    let xy = s
        .meta
        .display_xy
        .as_ref()
        .ok_or_else(|| ApiError::NotFound("dataset has no display coordinates".into()))?;
    let i = s.step(threshold(&params)?);
    let step = &s.sweep.steps()[i];
    let list: Vec<Point> = xy
        .iter()
        .zip(step.labeling.components())
        .map(|(&[x, y], &component)| Point { x, y, component })
        .collect();
    Ok(Json(json!({ "threshold": step.threshold, "points": list })).into_response())
}
