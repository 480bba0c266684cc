//! Edge filtering by similarity thresholds and strongly connected components
//! of the surviving directed graph.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::KnnGraph;
use crate::similarity::EdgeScores;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterPredicate {
    /// Remove edges with `sA < sa_min`.
    Combined { sa_min: f64 },
    /// Remove edges with `sK > sk_max` or `sJ < sj_min`.
    Counts { sk_max: u32, sj_min: u32 },
}

impl FilterPredicate {
    pub fn validate(&self, k: usize) -> Result<()> {
        match *self {
            FilterPredicate::Combined { sa_min } if !(0.0..=1.0).contains(&sa_min) => {
                Err(Error::invalid(format!("sA threshold {sa_min} outside [0, 1]")))
            }
            FilterPredicate::Counts { sk_max, sj_min } if sk_max as usize > k || sj_min as usize > k => Err(
                Error::invalid(format!("count thresholds sK<={sk_max}, sJ>={sj_min} outside 0..={k}")),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn keeps(&self, sk: u32, sj: u32, sa: f64) -> bool {
        match *self {
            FilterPredicate::Combined { sa_min } => sa >= sa_min,
            FilterPredicate::Counts { sk_max, sj_min } => sk <= sk_max && sj >= sj_min,
        }
    }
}

impl fmt::Display for FilterPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterPredicate::Combined { sa_min } => write!(f, "sA>={sa_min}"),
            FilterPredicate::Counts { sk_max, sj_min } => write!(f, "sK<={sk_max},sJ>={sj_min}"),
        }
    }
}

/// Parses the forms printed by `Display`: `sA>=0.79` or `sK<=14,sJ>=4`.
impl FromStr for FilterPredicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::invalid(format!("cannot parse filter predicate {s:?}"));
        if let Some(v) = s.strip_prefix("sA>=") {
            return Ok(FilterPredicate::Combined {
                sa_min: v.parse().map_err(|_| bad())?,
            });
        }
        let (mut sk_max, mut sj_min) = (None, None);
        for part in s.split(',') {
            if let Some(v) = part.strip_prefix("sK<=") {
                sk_max = Some(v.parse().map_err(|_| bad())?);
            } else if let Some(v) = part.strip_prefix("sJ>=") {
                sj_min = Some(v.parse().map_err(|_| bad())?);
            } else {
                return Err(bad());
            }
        }
        match (sk_max, sj_min) {
            (Some(sk_max), Some(sj_min)) => Ok(FilterPredicate::Counts { sk_max, sj_min }),
            _ => Err(bad()),
        }
    }
}

/// Keep-flags aligned with the graph's edge enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMask(Vec<bool>);

impl EdgeMask {
    pub fn all(n_edges: usize) -> Self {
        EdgeMask(vec![true; n_edges])
    }

    pub fn none(n_edges: usize) -> Self {
        EdgeMask(vec![false; n_edges])
    }

    pub fn from_vec(keep: Vec<bool>) -> Self {
        EdgeMask(keep)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kept(&self, e: usize) -> bool {
        self.0[e]
    }

    pub fn count_kept(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

pub fn filter_edges(graph: &KnnGraph, scores: &EdgeScores, pred: &FilterPredicate) -> Result<EdgeMask> {
    if !scores.is_aligned_with(graph) {
        return Err(Error::invalid(format!(
            "scores ({} edges, k={}) do not match graph ({} edges, k={})",
            scores.len(),
            scores.k(),
            graph.n_edges(),
            graph.k()
        )));
    }
    pred.validate(graph.k())?;
    Ok(EdgeMask(
        (0..scores.len())
            .map(|e| pred.keeps(scores.sk()[e], scores.sj()[e], scores.sa()[e]))
            .collect(),
    ))
}

/// Node-to-component map with ids ordered by decreasing component size,
/// equal sizes ordered by smallest member id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentLabeling {
    component: Vec<usize>,
    sizes: Vec<usize>,
}

impl ComponentLabeling {
    /// Canonicalizes arbitrary group ids.
    pub fn from_groups(raw: &[usize]) -> Self {
        let (component, sizes) = canonical_ids(raw.iter().map(|&g| Some(g)));
        ComponentLabeling {
            component: component.into_iter().map(|c| c.expect("all nodes labeled")).collect(),
            sizes,
        }
    }

    pub fn n(&self) -> usize {
        self.component.len()
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.component[node]
    }

    pub fn components(&self) -> &[usize] {
        &self.component
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (node, &c) in self.component.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Maps optional raw group ids to canonical ids: decreasing group size,
/// ties by smallest member. Returns the relabeled assignment and sizes.
pub(crate) fn canonical_ids(raw: impl Iterator<Item = Option<usize>>) -> (Vec<Option<usize>>, Vec<usize>) {
    let raw: Vec<Option<usize>> = raw.collect();
    // raw id -> (size, min node)
    let mut stats: HashMap<usize, (usize, usize)> = HashMap::new();
    for (node, g) in raw.iter().enumerate() {
        if let Some(g) = g {
            let entry = stats.entry(*g).or_insert((0, node));
            entry.0 += 1;
        }
    }
    let mut order: Vec<(usize, usize, usize)> = stats.into_iter().map(|(g, (size, min))| (g, size, min)).collect();
    order.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let remap: HashMap<usize, usize> = order.iter().enumerate().map(|(new, &(g, _, _))| (g, new)).collect();
    let sizes = order.iter().map(|&(_, size, _)| size).collect();
    (raw.into_iter().map(|g| g.map(|g| remap[&g])).collect(), sizes)
}

/// Successor lists of the masked graph.
pub(crate) fn masked_adjacency(graph: &KnnGraph, mask: &EdgeMask) -> Vec<Vec<usize>> {
    let k = graph.k();
    (0..graph.n())
        .map(|u| {
            graph
                .neighbors(u)
                .iter()
                .enumerate()
                .filter(|&(j, _)| mask.kept(u * k + j))
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Strongly connected components of the masked directed graph.
pub fn scc(graph: &KnnGraph, mask: &EdgeMask) -> Result<ComponentLabeling> {
    if mask.len() != graph.n_edges() {
        return Err(Error::DimensionMismatch {
            left: mask.len(),
            right: graph.n_edges(),
        });
    }
    Ok(scc_adjacency(&masked_adjacency(graph, mask)))
}

/// Iterative Tarjan over successor lists.
pub fn scc_adjacency(adj: &[Vec<usize>]) -> ComponentLabeling {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw = vec![UNVISITED; n];
    let mut next_index = 0;
    let mut n_comp = 0;
    // (node, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    raw[w] = n_comp;
                    if w == v {
                        break;
                    }
                }
                n_comp += 1;
            }
        }
    }
    ComponentLabeling::from_groups(&raw)
}

/// Fraction of each component's nodes that carry its most common true label.
pub fn component_purity(labeling: &ComponentLabeling, labels: Option<&[u32]>) -> Result<Vec<f64>> {
    let labels = labels.ok_or_else(|| Error::invalid("component purity needs ground-truth labels"))?;
    if labels.len() != labeling.n() {
        return Err(Error::DimensionMismatch {
            left: labels.len(),
            right: labeling.n(),
        });
    }
    let mut counts: Vec<HashMap<u32, usize>> = vec![HashMap::new(); labeling.count()];
    for (node, &c) in labeling.components().iter().enumerate() {
        *counts[c].entry(labels[node]).or_default() += 1;
    }
    Ok(counts
        .iter()
        .zip(labeling.sizes())
        .map(|(hist, &size)| *hist.values().max().unwrap_or(&0) as f64 / size as f64)
        .collect())
}
