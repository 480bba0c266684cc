//! Cluster clean-up after partitioning, and partition scoring against
//! ground truth.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::EdgeMask;
use crate::knn::KnnGraph;
use crate::partition::Partition;

/// Groups of cluster ids to union. Text form: one `merge <id> <id> ...` line
/// per group; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeSpec {
    pub groups: Vec<Vec<usize>>,
}

impl MergeSpec {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn validate(&self, n_clusters: usize) -> Result<()> {
        let mut seen = vec![false; n_clusters];
        for group in &self.groups {
            for &c in group {
                if c >= n_clusters {
                    return Err(Error::invalid(format!("unknown cluster id {c} (have {n_clusters})")));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::invalid(format!("cluster {c} appears in more than one merge group")));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?.parse()
    }
}

impl FromStr for MergeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for (row, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            if tokens.next() != Some("merge") {
                return Err(Error::Config(format!("merge spec line {}: expected `merge <ids...>`", row + 1)));
            }
            let ids = tokens
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Config(format!("merge spec line {}: bad cluster id", row + 1)))?;
            groups.push(ids);
        }
        Ok(MergeSpec { groups })
    }
}

impl fmt::Display for MergeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for group in &self.groups {
            write!(f, "merge")?;
            for c in group {
                write!(f, " {c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Unions each group into one cluster and relabels canonically.
pub fn merge_clusters(p: &Partition, spec: &MergeSpec) -> Result<Partition> {
    spec.validate(p.count())?;
    let mut target: Vec<usize> = (0..p.count()).collect();
    for group in &spec.groups {
        if let Some(&root) = group.iter().min() {
            for &c in group {
                target[c] = root;
            }
        }
    }
    Ok(Partition::canonical(
        p.assignment().iter().map(|c| c.map(|c| target[c])).collect(),
    ))
}

/// Proposes unions of cluster pairs whose surviving inter-cluster edge count
/// divided by the smaller cluster's size exceeds `density_min`, closed
/// transitively.
pub fn suggest_merges(p: &Partition, graph: &KnnGraph, keep_mask: &EdgeMask, density_min: f64) -> MergeSpec {
    let mut between: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, (u, v)) in graph.edges().enumerate() {
        if !keep_mask.kept(e) {
            continue;
        }
        if let (Some(a), Some(b)) = (p.cluster_of(u), p.cluster_of(v)) {
            if a != b {
                *between.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
    }
    let mut parent: Vec<usize> = (0..p.count()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    let mut pairs: Vec<_> = between.into_iter().collect();
    pairs.sort_unstable();
    for ((a, b), count) in pairs {
        let smaller = p.sizes()[a].min(p.sizes()[b]);
        if count as f64 / smaller as f64 > density_min {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..p.count() {
        let r = find(&mut parent, c);
        groups.entry(r).or_default().push(c);
    }
    MergeSpec {
        groups: groups.into_values().filter(|g| g.len() > 1).collect(),
    }
}

/// Hands points outside the major clusters (size ≥ `major_min_size` on
/// entry) to the major cluster of their closest already-assigned original
/// neighbor. Each pass sees only assignments made before it started; points
/// without such a neighbor after `iterations` passes stay unassigned. Major
/// clusters keep their relative id order, renumbered from 0.
pub fn reassign_small(p: &Partition, graph: &KnnGraph, major_min_size: usize, iterations: usize) -> Result<Partition> {
    if p.n() != graph.n() {
        return Err(Error::DimensionMismatch {
            left: p.n(),
            right: graph.n(),
        });
    }
    let mut major_id = vec![None; p.count()];
    let mut next = 0;
    for (c, &size) in p.sizes().iter().enumerate() {
        if size >= major_min_size {
            major_id[c] = Some(next);
            next += 1;
        }
    }
    if next == 0 {
        return Err(Error::invalid(format!(
            "no cluster has at least {major_min_size} points"
        )));
    }
    let mut state: Vec<Option<usize>> = p.assignment().iter().map(|c| c.and_then(|c| major_id[c])).collect();
    for _ in 0..iterations {
        let snapshot = state.clone();
        let mut changed = false;
        for v in 0..graph.n() {
            if snapshot[v].is_some() {
                continue;
            }
            // Neighbor rows are sorted by (distance, id): the first assigned
            // neighbor is the closest, ties to the smaller id.
            if let Some(c) = graph.neighbors(v).iter().find_map(|&w| snapshot[w]) {
                state[v] = Some(c);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Partition::with_ids(state))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub class: u32,
    pub size: usize,
    pub f1: f64,
    /// Best-matching cluster; `None` when the unassigned set matched best.
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FMeasureReport {
    pub f_measure: f64,
    pub classes: Vec<ClassScore>,
}

/// Unweighted mean over true classes of the best binary F1 against any
/// cluster. The unassigned points act as one more candidate cluster.
pub fn f_measure(p: &Partition, truth: &[u32]) -> Result<f64> {
    Ok(f_measure_report(p, truth)?.f_measure)
}

pub fn f_measure_report(p: &Partition, truth: &[u32]) -> Result<FMeasureReport> {
    if truth.len() != p.n() {
        return Err(Error::DimensionMismatch {
            left: truth.len(),
            right: p.n(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("empty ground truth"));
    }
    let mut class_size: BTreeMap<u32, usize> = BTreeMap::new();
    let mut overlap: HashMap<(u32, Option<usize>), usize> = HashMap::new();
    for (v, &label) in truth.iter().enumerate() {
        *class_size.entry(label).or_default() += 1;
        *overlap.entry((label, p.cluster_of(v))).or_default() += 1;
    }
    let unassigned = p.n() - p.n_assigned();
    let cluster_size = |c: Option<usize>| c.map_or(unassigned, |c| p.sizes()[c]);

    let mut best: BTreeMap<u32, (f64, Option<usize>)> = BTreeMap::new();
    for (&(label, cluster), &common) in &overlap {
        let f1 = 2.0 * common as f64 / (class_size[&label] + cluster_size(cluster)) as f64;
        let entry = best.entry(label).or_insert((f64::NEG_INFINITY, None));
        // Deterministic tie-break: assigned clusters by id, unassigned last.
        let better = f1 > entry.0 || (f1 == entry.0 && rank(cluster) < rank(entry.1));
        if better {
            *entry = (f1, cluster);
        }
    }
    let classes: Vec<ClassScore> = class_size
        .iter()
        .map(|(&class, &size)| {
            let (f1, cluster) = best[&class];
            ClassScore {
                class,
                size,
                f1,
                cluster,
            }
        })
        .collect();
    let f_measure = classes.iter().map(|c| c.f1).sum::<f64>() / classes.len() as f64;
    Ok(FMeasureReport { f_measure, classes })
}

fn rank(c: Option<usize>) -> usize {
    c.unwrap_or(usize::MAX)
}

/// F-measure over explicit classes given as node lists.
pub fn f_measure_classes(p: &Partition, classes: &[Vec<usize>]) -> Result<f64> {
    let mut truth = vec![u32::MAX; p.n()];
    for (c, members) in classes.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::invalid(format!("truth class {c} is empty")));
        }
        for &v in members {
            if v >= p.n() || truth[v] != u32::MAX {
                return Err(Error::invalid(format!("node {v} missing or repeated in truth classes")));
            }
            truth[v] = c as u32;
        }
    }
    if truth.contains(&u32::MAX) {
        return Err(Error::invalid("truth classes do not cover every node"));
    }
    f_measure(p, &truth)
}
