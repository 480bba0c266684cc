//! Threshold-sweep adjacency sorting.
//!
//! Starting from the strictest threshold, each step drops edges with
//! `sA < threshold`, finds strongly connected components, and reorders the
//! nodes so that
//!
//! 1. blocks carried over from the previous step keep their internal order,
//! 2. blocks belonging to the same new component are contiguous,
//! 3. blocks inside a component come in decreasing size, and
//! 4. components come in decreasing size.
//!
//! Ties in 3 and 4 go to the block or component with the smaller minimum node
//! id. Since thresholds only loosen, every previous block lies inside one new
//! component and the orderings nest.

use std::io::Write;

use crate::error::{Error, Result};
use crate::filter::{filter_edges, scc, ComponentLabeling, EdgeMask, FilterPredicate};
use crate::knn::KnnGraph;
use crate::similarity::EdgeScores;

pub use crate::raster::{component_boxes, render_adjacency, render_adjacency_pooled, ComponentBox, Raster};

pub const DEFAULT_STEPS: usize = 50;
pub const MAX_STEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub threshold: f64,
    /// Node ids in display order.
    pub permutation: Vec<usize>,
    pub labeling: ComponentLabeling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    steps: Vec<SweepStep>,
}

/// Uniform grid from 1 down to 0 inclusive.
pub fn sweep_thresholds(steps: usize) -> Result<Vec<f64>> {
    if !(2..=MAX_STEPS).contains(&steps) {
        return Err(Error::invalid(format!("sweep steps must be in 2..={MAX_STEPS}, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps).map(|i| (steps - 1 - i) as f64 / last).collect())
}

pub fn sweep_sort(graph: &KnnGraph, scores: &EdgeScores, steps: usize) -> Result<SweepResult> {
    let thresholds = sweep_thresholds(steps)?;
    let mut perm: Vec<usize> = (0..graph.n()).collect();
    let mut prev: Option<ComponentLabeling> = None;
    let mut out = Vec::with_capacity(steps);
    for threshold in thresholds {
        let mask = filter_edges(graph, scores, &FilterPredicate::Combined { sa_min: threshold })?;
        let labeling = scc(graph, &mask)?;
        perm = reorder(&perm, prev.as_ref(), &labeling);
        out.push(SweepStep {
            threshold,
            permutation: perm.clone(),
            labeling: labeling.clone(),
        });
        prev = Some(labeling);
    }
    Ok(SweepResult { steps: out })
}

/// One sorting step. `prev` is `None` on the first step, where every node is
/// its own block.
fn reorder(perm: &[usize], prev: Option<&ComponentLabeling>, next: &ComponentLabeling) -> Vec<usize> {
    // Split the current ordering into previous-step blocks.
    let mut blocks: Vec<&[usize]> = Vec::new();
    let mut start = 0;
    for i in 1..=perm.len() {
        let boundary = i == perm.len()
            || match prev {
                Some(lab) => lab.component_of(perm[i]) != lab.component_of(perm[start]),
                None => true,
            };
        if boundary {
            blocks.push(&perm[start..i]);
            start = i;
        }
    }

    let mut by_component: Vec<Vec<&[usize]>> = vec![Vec::new(); next.count()];
    for block in blocks {
        let c = next.component_of(block[0]);
        debug_assert!(block.iter().all(|&v| next.component_of(v) == c), "block split by a looser threshold");
        by_component[c].push(block);
    }
    // Component ids are already ordered by decreasing size, then min id.
    let mut out = Vec::with_capacity(perm.len());
    for mut group in by_component {
        group.sort_by_key(|b| (std::cmp::Reverse(b.len()), *b.iter().min().expect("non-empty block")));
        for block in group {
            out.extend_from_slice(block);
        }
    }
    out
}

impl SweepResult {
    pub fn steps(&self) -> &[SweepStep] {
        &self.steps
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.threshold).collect()
    }

    pub fn last(&self) -> &SweepStep {
        self.steps.last().expect("sweep has at least two steps")
    }

    /// Index of the step with the largest threshold not above `x`.
    pub fn step_at_or_below(&self, x: f64) -> Option<usize> {
        self.steps.iter().position(|s| s.threshold <= x)
    }

    /// Mask of the edges kept at step `i`.
    pub fn mask_at(&self, i: usize, graph: &KnnGraph, scores: &EdgeScores) -> Result<EdgeMask> {
        filter_edges(graph, scores, &FilterPredicate::Combined {
            sa_min: self.steps[i].threshold,
        })
    }

    /// One line per step: `threshold n_components perm...`.
    pub fn write_dump(&self, mut w: impl Write) -> std::io::Result<()> {
        for step in &self.steps {
            write!(w, "{} {}", step.threshold, step.labeling.count())?;
            for v in &step.permutation {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::Metric;

    #[test]
    fn grid_is_uniform_and_inclusive() {
        let t = sweep_thresholds(5).unwrap();
        assert_eq!(t, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
        assert!(sweep_thresholds(1).is_err());
        assert!(sweep_thresholds(1001).is_err());
    }

    #[test]
    fn first_step_sorts_singletons_by_id() {
        let lab = ComponentLabeling::from_groups(&[0, 1, 0, 1, 2]);
        // components: {0,2}, {1,3}, {4}
        let p = reorder(&[0, 1, 2, 3, 4], None, &lab);
        assert_eq!(p, vec![0, 2, 1, 3, 4]);
    }

    #[test]
    fn blocks_ordered_by_size_inside_component() {
        let prev = ComponentLabeling::from_groups(&[0, 1, 1, 2, 2, 2]);
        let perm = vec![3, 4, 5, 1, 2, 0];
        let next = ComponentLabeling::from_groups(&[0; 6]);
        // Blocks: [3,4,5], [1,2], [0] already in decreasing size.
        assert_eq!(reorder(&perm, Some(&prev), &next), perm);
        // Singleton joins the pair: pair first, then singleton. The two
        // equal-size components go by smaller minimum id.
        let next = ComponentLabeling::from_groups(&[1, 1, 1, 0, 0, 0]);
        let got = reorder(&perm, Some(&prev), &next);
        assert_eq!(got, vec![1, 2, 0, 3, 4, 5]);
    }

    #[test]
    fn two_cliques_end_up_largest_first() {
        // Rings on {0,1,2} and {3..=7}, each node linked to its next two.
        let n = 8;
        let k = 2;
        let mut nb = Vec::new();
        for i in 0..n {
            let (lo, size) = if i < 3 { (0, 3) } else { (3, 5) };
            let mut next: Vec<usize> = (1..=k).map(|d| lo + (i - lo + d) % size).collect();
            next.sort_unstable();
            nb.extend(next);
        }
        let g = KnnGraph::from_parts(n, k, nb, vec![1.0; n * k], Metric::Euclidean).unwrap();
        let s = EdgeScores::from_counts(k, vec![0; n * k], vec![1; n * k]).unwrap();
        let r = sweep_sort(&g, &s, 10).unwrap();
        let last = r.last();
        assert_eq!(last.permutation, vec![3, 4, 5, 6, 7, 0, 1, 2]);
        assert_eq!(last.labeling.sizes(), &[5, 3]);
    }
}
