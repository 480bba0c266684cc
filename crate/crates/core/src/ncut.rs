//! Recursive two-way normalized-cut partitioning.
//!
//! Each part is split along the eigenvector of `(D - W)x = λDx` with the
//! second smallest eigenvalue. A split is accepted only when its Ncut value
//! is at most `cut_threshold` and the eigenvector histogram is bimodal
//! enough (min/max bin ratio at most `stability_threshold`).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::eigen::{largest_deflated, KrylovOptions};
use crate::error::{Error, Result};
use crate::filter::EdgeMask;
use crate::knn::KnnGraph;
use crate::partition::Partition;

/// Unweighted undirected graph over a subset of the original nodes. Local
/// index `i` refers to original node `nodes[i]`; `nodes` is ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UGraph {
    n_total: usize,
    nodes: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

impl UGraph {
    /// Builds from original-id edges; edges touching nodes outside `nodes`
    /// are ignored, duplicates collapse and self-loops are dropped.
    pub fn from_edges(n_total: usize, nodes: &[usize], edges: &[(usize, usize)]) -> Result<Self> {
        let mut nodes = nodes.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::invalid("node subset is empty"));
        }
        if nodes.last().is_some_and(|&m| m >= n_total) {
            return Err(Error::invalid("node id outside the original graph"));
        }
        let mut local = vec![usize::MAX; n_total];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for &(u, v) in edges {
            if u >= n_total || v >= n_total || u == v {
                continue;
            }
            let (a, b) = (local[u], local[v]);
            if a != usize::MAX && b != usize::MAX {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(UGraph { n_total, nodes, adj })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components as sorted local index lists, ordered by smallest
    /// member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s);
            let mut comp = Vec::new();
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Subgraph induced by sorted local indices.
    pub fn induced(&self, local: &[usize]) -> UGraph {
        let mut remap = vec![usize::MAX; self.len()];
        for (i, &v) in local.iter().enumerate() {
            remap[v] = i;
        }
        let adj = local
            .iter()
            .map(|&v| self.adj[v].iter().filter_map(|&w| (remap[w] != usize::MAX).then_some(remap[w])).collect())
            .collect();
        UGraph {
            n_total: self.n_total,
            nodes: local.iter().map(|&v| self.nodes[v]).collect(),
            adj,
        }
    }
}

/// Undirected view of the masked kNN graph on `node_subset`: `{u, v}` is an
/// edge when either direction survives the mask.
pub fn symmetrize(graph: &KnnGraph, keep_mask: &EdgeMask, node_subset: &[usize]) -> Result<UGraph> {
    if keep_mask.len() != graph.n_edges() {
        return Err(Error::DimensionMismatch {
            left: keep_mask.len(),
            right: graph.n_edges(),
        });
    }
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .enumerate()
        .filter(|&(e, _)| keep_mask.kept(e))
        .map(|(_, uv)| uv)
        .collect();
    UGraph::from_edges(graph.n(), node_subset, &edges)
}

/// Undirected view of the largest strongly connected component left by the
/// mask, the part the recursive cut starts from.
pub fn largest_component(graph: &KnnGraph, keep_mask: &EdgeMask) -> Result<UGraph> {
    let labeling = crate::filter::scc(graph, keep_mask)?;
    let members: Vec<usize> = (0..graph.n()).filter(|&v| labeling.component_of(v) == 0).collect();
    symmetrize(graph, keep_mask, &members)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fiedler {
    /// Second smallest generalized eigenvalue.
    pub value: f64,
    /// Unit-length generalized eigenvector, local indexing.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Largest admissible `‖(D−W)x − λDx‖ / ‖x‖` for an accepted eigenpair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// `‖(D−W)x − λDx‖`.
pub fn generalized_residual(g: &UGraph, value: f64, x: &[f64]) -> f64 {
    (0..g.len())
        .map(|i| {
            let d = g.degree(i) as f64;
            let wx: f64 = g.neighbors(i).iter().map(|&j| x[j]).sum();
            let r = d * x[i] - wx - value * d * x[i];
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Solves the normalized form `D^{-1/2} W D^{-1/2} y = (1 − λ) y` with the
/// trivial eigenvector `D^{1/2} 1` deflated, then maps back `x = D^{-1/2} y`.
pub fn fiedler_vector(g: &UGraph) -> Result<Fiedler> {
    let n = g.len();
    if n < 2 {
        return Err(Error::invalid("Fiedler vector needs at least two nodes"));
    }
    if let Some(i) = (0..n).find(|&i| g.degree(i) == 0) {
        return Err(Error::IsolatedNode(g.nodes()[i]));
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / (g.degree(i) as f64).sqrt()).collect();
    let total: f64 = (0..n).map(|i| g.degree(i) as f64).sum();
    let trivial: Vec<f64> = (0..n).map(|i| (g.degree(i) as f64 / total).sqrt()).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            let s: f64 = g.neighbors(i).iter().map(|&j| inv_sqrt[j] * x[j]).sum();
            y[i] = inv_sqrt[i] * s;
        }
    };
    let max_degree = (0..n).map(|i| g.degree(i)).max().unwrap_or(1) as f64;
    let opts = KrylovOptions {
        // ‖(D−W)x − λDx‖ ≤ d_max · ‖My − θy‖ once x is rescaled to unit length.
        tolerance: 0.5 * RESIDUAL_TOLERANCE / max_degree,
        ..KrylovOptions::default()
    };
    let pair = largest_deflated(n, apply, &trivial, &opts)?;
    let value = 1.0 - pair.value;
    let mut x: Vec<f64> = pair.vector.iter().zip(&inv_sqrt).map(|(y, s)| y * s).collect();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = if x[0] < 0.0 { -1.0 } else { 1.0 };
    x.iter_mut().for_each(|v| *v *= sign / nx);

    let residual = generalized_residual(g, value, &x);
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::NoConvergence {
            iterations: pair.iterations,
            residual,
        });
    }
    Ok(Fiedler {
        value,
        vector: x,
        iterations: pair.iterations,
    })
}

/// `cut(A,B)/assoc(A,V) + cut(A,B)/assoc(B,V)`; infinite when either side
/// has no edge endpoints.
pub fn ncut_value(g: &UGraph, in_a: &[bool]) -> f64 {
    let (mut cut, mut assoc_a, mut assoc_b) = (0usize, 0usize, 0usize);
    for i in 0..g.len() {
        if in_a[i] {
            assoc_a += g.degree(i);
            cut += g.neighbors(i).iter().filter(|&&j| !in_a[j]).count();
        } else {
            assoc_b += g.degree(i);
        }
    }
    ncut_from_counts(cut, assoc_a, assoc_b)
}

fn ncut_from_counts(cut: usize, assoc_a: usize, assoc_b: usize) -> f64 {
    if assoc_a == 0 || assoc_b == 0 {
        return f64::INFINITY;
    }
    cut as f64 / assoc_a as f64 + cut as f64 / assoc_b as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Side A holds the entries `<= threshold`.
    pub in_a: Vec<bool>,
    pub threshold: f64,
    pub ncut: f64,
}

pub const DEFAULT_SPLIT_CANDIDATES: usize = 64;

/// Scans threshold cuts of `eigvec` for the smallest Ncut. Uses
/// `n_candidates` evenly spaced interior thresholds; when the vector has at
/// most `n_candidates + 1` distinct values, every distinct cut is tried
/// instead (no more evaluations than the grid).
pub fn best_split(eigvec: &[f64], g: &UGraph, n_candidates: usize) -> Result<Split> {
    let n = g.len();
    if n < 2 || eigvec.len() != n {
        return Err(Error::invalid("best_split needs a vector aligned with at least two nodes"));
    }
    if n_candidates == 0 {
        return Err(Error::invalid("need at least one split candidate"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigvec[a].total_cmp(&eigvec[b]).then(a.cmp(&b)));
    let (lo, hi) = (eigvec[order[0]], eigvec[order[n - 1]]);

    let mut distinct: Vec<f64> = order.iter().map(|&i| eigvec[i]).collect();
    distinct.dedup();
    let thresholds: Vec<f64> = if distinct.len() <= n_candidates + 1 {
        distinct[..distinct.len() - 1].to_vec()
    } else {
        (1..=n_candidates)
            .map(|j| lo + (hi - lo) * j as f64 / (n_candidates + 1) as f64)
            .collect()
    };

    // Sweep nodes into A in sorted order, maintaining cut and assoc counts.
    let total: usize = (0..n).map(|i| g.degree(i)).sum();
    let mut in_a = vec![false; n];
    let (mut cut, mut assoc_a, mut pos) = (0usize, 0usize, 0usize);
    let mut best: Option<(f64, f64)> = None;
    for &t in &thresholds {
        while pos < n && eigvec[order[pos]] <= t {
            let v = order[pos];
            let inside = g.neighbors(v).iter().filter(|&&w| in_a[w]).count();
            cut = cut + g.degree(v) - 2 * inside;
            assoc_a += g.degree(v);
            in_a[v] = true;
            pos += 1;
        }
        if pos == 0 || pos == n {
            continue;
        }
        let value = ncut_from_counts(cut, assoc_a, total - assoc_a);
        if value.is_finite() && best.is_none_or(|(b, _)| value < b) {
            best = Some((value, t));
        }
    }
    let (ncut, threshold) = best.ok_or(Error::DegenerateSplit)?;
    Ok(Split {
        in_a: eigvec.iter().map(|&x| x <= threshold).collect(),
        threshold,
        ncut,
    })
}

pub const DEFAULT_STABILITY_BINS: usize = 10;

/// Ratio of the smallest to the largest bin count of an equal-width
/// histogram of `eigvec`. Smoothly varying vectors score high; a constant
/// vector scores 1.
pub fn stability(eigvec: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::invalid("stability histogram needs at least two bins"));
    }
    let lo = eigvec.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigvec.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if eigvec.is_empty() || !(hi > lo) {
        return Ok(1.0);
    }
    let mut counts = vec![0usize; bins];
    for &x in eigvec {
        let b = (((x - lo) / (hi - lo)) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let max = *counts.iter().max().expect("bins >= 2");
    let min = *counts.iter().min().expect("bins >= 2");
    Ok(min as f64 / max as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcutParams {
    /// Largest Ncut value for which a split is accepted.
    pub cut_threshold: f64,
    /// Largest histogram min/max ratio for which a split is accepted.
    pub stability_threshold: f64,
    /// Parts smaller than this are not split further.
    pub min_cluster_size: usize,
    /// Maximum recursion depth (component splits count as a level).
    pub max_depth: usize,
    pub n_candidates: usize,
    pub stability_bins: usize,
}

impl Default for NcutParams {
    fn default() -> Self {
        NcutParams {
            cut_threshold: 0.1,
            stability_threshold: 0.04,
            min_cluster_size: 50,
            max_depth: 10,
            n_candidates: DEFAULT_SPLIT_CANDIDATES,
            stability_bins: DEFAULT_STABILITY_BINS,
        }
    }
}

impl NcutParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.cut_threshold > 0.0
            && self.stability_threshold > 0.0
            && self.min_cluster_size > 0
            && self.max_depth > 0
            && self.n_candidates > 0
            && self.stability_bins >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("ncut parameters must be positive: {self:?}")))
        }
    }
}

/// Why a part stopped being split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TooSmall,
    MaxDepth,
    CutTooExpensive,
    Unstable,
    SolverFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaf {
    /// Original node ids, ascending.
    pub nodes: Vec<usize>,
    pub depth: usize,
    pub reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NcutWarning {
    pub size: usize,
    pub depth: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcutOutcome {
    /// Over all `n_total` original nodes; nodes outside the input graph are
    /// unassigned.
    pub partition: Partition,
    pub leaves: Vec<Leaf>,
    pub warnings: Vec<NcutWarning>,
}

pub fn ncut_recursive(g: &UGraph, params: &NcutParams) -> Result<NcutOutcome> {
    params.validate()?;
    let mut leaves = Vec::new();
    let mut warnings = Vec::new();
    recurse(g, 0, params, &mut leaves, &mut warnings);
    leaves.sort_by_key(|l| l.nodes[0]);

    let mut raw = vec![None; g.n_total()];
    for (c, leaf) in leaves.iter().enumerate() {
        for &v in &leaf.nodes {
            raw[v] = Some(c);
        }
    }
    Ok(NcutOutcome {
        partition: Partition::canonical(raw),
        leaves,
        warnings,
    })
}

fn recurse(g: &UGraph, depth: usize, params: &NcutParams, leaves: &mut Vec<Leaf>, warnings: &mut Vec<NcutWarning>) {
    let mut leaf = |reason| {
        leaves.push(Leaf {
            nodes: g.nodes().to_vec(),
            depth,
            reason,
        })
    };
    if g.len() < params.min_cluster_size.max(2) {
        return leaf(StopReason::TooSmall);
    }
    if depth >= params.max_depth {
        return leaf(StopReason::MaxDepth);
    }
    let comps = g.connected_components();
    if comps.len() > 1 {
        let parts: Vec<UGraph> = comps.iter().map(|c| g.induced(c)).collect();
        return recurse_parts(&parts, depth + 1, params, leaves, warnings);
    }

    let split = fiedler_vector(g).and_then(|f| {
        let split = best_split(&f.vector, g, params.n_candidates)?;
        Ok((split, stability(&f.vector, params.stability_bins)?))
    });
    let (split, ratio) = match split {
        Ok(s) => s,
        Err(e) => {
            warnings.push(NcutWarning {
                size: g.len(),
                depth,
                message: e.to_string(),
            });
            return leaf(StopReason::SolverFailed);
        }
    };
    if split.ncut > params.cut_threshold {
        return leaf(StopReason::CutTooExpensive);
    }
    if ratio > params.stability_threshold {
        return leaf(StopReason::Unstable);
    }
    let side_a: Vec<usize> = (0..g.len()).filter(|&i| split.in_a[i]).collect();
    let side_b: Vec<usize> = (0..g.len()).filter(|&i| !split.in_a[i]).collect();
    recurse_parts(&[g.induced(&side_a), g.induced(&side_b)], depth + 1, params, leaves, warnings);
}

/// Independent branches run in parallel.
fn recurse_parts(
    parts: &[UGraph],
    depth: usize,
    params: &NcutParams,
    leaves: &mut Vec<Leaf>,
    warnings: &mut Vec<NcutWarning>,
) {
    use rayon::prelude::*;
    let results: Vec<(Vec<Leaf>, Vec<NcutWarning>)> = parts
        .par_iter()
        .map(|part| {
            let (mut l, mut w) = (Vec::new(), Vec::new());
            recurse(part, depth, params, &mut l, &mut w);
            (l, w)
        })
        .collect();
    for (l, w) in results {
        leaves.extend(l);
        warnings.extend(w);
    }
}
