//! Per-edge neighborhood similarity: the K-S count `sK`, the shared-neighbor
//! count `sJ` and their harmonic combination `sA`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::KnnGraph;

/// Scores aligned with [`KnnGraph`] edge enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScores {
    k: usize,
    sk: Vec<u32>,
    sj: Vec<u32>,
    sa: Vec<f64>,
}

impl EdgeScores {
    /// Rebuilds scores from stored `sK`/`sJ` columns, recomputing `sA`.
    pub fn from_counts(k: usize, sk: Vec<u32>, sj: Vec<u32>) -> Result<Self> {
        if sk.len() != sj.len() {
            return Err(Error::DimensionMismatch {
                left: sk.len(),
                right: sj.len(),
            });
        }
        let sa = sk
            .iter()
            .zip(&sj)
            .map(|(&k_s, &j_s)| combined_similarity(j_s as usize, k_s as usize, k))
            .collect::<Result<_>>()?;
        Ok(EdgeScores { k, sk, sj, sa })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.sa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sa.is_empty()
    }

    pub fn sk(&self) -> &[u32] {
        &self.sk
    }

    pub fn sj(&self) -> &[u32] {
        &self.sj
    }

    pub fn sa(&self) -> &[f64] {
        &self.sa
    }

    pub fn is_aligned_with(&self, graph: &KnnGraph) -> bool {
        self.k == graph.k() && self.len() == graph.n_edges()
    }
}

/// Largest gap between the two empirical counting functions
/// `#{x <= t}` over all real `t`; `k` times the classical two-sample K-S
/// statistic. Values tied across both lists are consumed together before the
/// gap is read.
pub fn ks_count(dists_u: &[f64], dists_v: &[f64]) -> Result<usize> {
    if dists_u.len() != dists_v.len() {
        return Err(Error::DimensionMismatch {
            left: dists_u.len(),
            right: dists_v.len(),
        });
    }
    for list in [dists_u, dists_v] {
        if list.windows(2).any(|w| !(w[0] <= w[1])) || list.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("distance lists must be finite and sorted ascending"));
        }
    }
    let k = dists_u.len();
    let (mut i, mut j, mut best) = (0usize, 0usize, 0usize);
    while i < k && j < k {
        let t = dists_u[i].min(dists_v[j]);
        while i < k && dists_u[i] <= t {
            i += 1;
        }
        while j < k && dists_v[j] <= t {
            j += 1;
        }
        best = best.max(i.abs_diff(j));
    }
    // Once one list is exhausted the gap can only shrink.
    Ok(best)
}

/// `|N(u) ∩ N(v)|` for an existing edge `u -> v`.
pub fn shared_neighbors(graph: &KnnGraph, u: usize, v: usize) -> Result<usize> {
    if graph.edge_index(u, v).is_none() {
        return Err(Error::UnknownEdge(u, v));
    }
    let nv = graph.neighbors(v);
    Ok(graph.neighbors(u).iter().filter(|w| nv.contains(w)).count())
}

/// Harmonic mean of `a = (sJ+1)/k` and `b = 1 - sK/(k+1)`.
pub fn combined_similarity(sj: usize, sk: usize, k: usize) -> Result<f64> {
    if k == 0 || sj >= k || sk > k {
        return Err(Error::invalid(format!(
            "score arguments out of range: sJ={sj}, sK={sk}, k={k}"
        )));
    }
    let a = (sj + 1) as f64 / k as f64;
    let b = 1.0 - sk as f64 / (k + 1) as f64;
    Ok(2.0 * (a * b) / (a + b))
}

pub fn score_all_edges(graph: &KnnGraph) -> EdgeScores {
    let (n, k) = (graph.n(), graph.k());
    let sorted: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut row = graph.neighbors(i).to_vec();
            row.sort_unstable();
            row
        })
        .collect();

    let per_node: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|u| {
            graph
                .neighbors(u)
                .iter()
                .map(|&v| {
                    let sk = ks_count(graph.dists(u), graph.dists(v)).expect("graph rows are sorted");
                    let sj = intersect_sorted(&sorted[u], &sorted[v]);
                    (sk as u32, sj as u32)
                })
                .collect()
        })
        .collect();

    let mut sk = Vec::with_capacity(n * k);
    let mut sj = Vec::with_capacity(n * k);
    for (a, b) in per_node.into_iter().flatten() {
        sk.push(a);
        sj.push(b);
    }
    EdgeScores::from_counts(k, sk, sj).expect("counts are within range by construction")
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::knn::{build_knn, Metric};
    use proptest::prelude::*;

    /// Gap of the counting functions evaluated at every value present.
    fn ks_brute(u: &[f64], v: &[f64]) -> usize {
        u.iter()
            .chain(v)
            .map(|&t| {
                let cu = u.iter().filter(|&&x| x <= t).count();
                let cv = v.iter().filter(|&&x| x <= t).count();
                cu.abs_diff(cv)
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_count(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0);
        assert_eq!(ks_count(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), 1);
        assert_eq!(ks_count(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap(), 3);
    }

    #[test]
    fn ks_ties_consumed_together() {
        // At t=1 both lists have counted their 1s: gap 0 there, 1 at t=2.
        assert_eq!(ks_count(&[1.0, 1.0, 2.0], &[1.0, 1.0, 3.0]).unwrap(), 1);
        assert_eq!(ks_count(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn ks_errors() {
        assert!(ks_count(&[1.0], &[1.0, 2.0]).is_err());
        assert!(ks_count(&[2.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn combined_examples() {
        assert_eq!(combined_similarity(4, 0, 5).unwrap(), 1.0);
        let v = combined_similarity(2, 3, 5).unwrap();
        assert!((v - 6.0 / 11.0).abs() < 1e-15);
        let w = combined_similarity(0, 5, 5).unwrap();
        assert!((w - 2.0 / 11.0).abs() < 1e-15);
        assert!(combined_similarity(5, 0, 5).is_err());
        assert!(combined_similarity(0, 6, 5).is_err());
        assert!(combined_similarity(0, 0, 0).is_err());
    }

    #[test]
    fn shared_neighbor_examples() {
        // Mutual-neighbor triangle: each edge shares the third point.
        let ds = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.8]]).unwrap();
        let g = build_knn(&ds, 2, Metric::Euclidean).unwrap();
        for (u, v) in g.edges() {
            assert_eq!(shared_neighbors(&g, u, v).unwrap(), 1);
        }
        let scores = score_all_edges(&g);
        assert!(scores.sj().iter().all(|&s| s == 1));
        assert!(shared_neighbors(&g, 0, 0).is_err());
    }

    #[test]
    fn identical_points_have_zero_ks() {
        let ds = Dataset::new(vec![1.0; 12], 6, 2).unwrap();
        let g = build_knn(&ds, 3, Metric::Euclidean).unwrap();
        let s = score_all_edges(&g);
        assert!(s.sk().iter().all(|&x| x == 0));
        for e in 0..s.len() {
            let best = combined_similarity(s.sj()[e] as usize, 0, 3).unwrap();
            assert_eq!(s.sa()[e], best);
        }
    }

    #[test]
    fn scoring_is_deterministic() {
        let ds = crate::dataset::gen_two_spirals(60, 1.5, 0.02, 9).unwrap();
        let g = build_knn(&ds, 8, Metric::Euclidean).unwrap();
        assert_eq!(score_all_edges(&g), score_all_edges(&g));
    }

    proptest! {
        #[test]
        fn ks_matches_brute_force(mut u in prop::collection::vec(0u8..8, 1..12), seed in any::<u64>()) {
            let k = u.len();
            let mut v: Vec<u8> = (0..k).map(|i| ((seed >> (i % 60)) as u8) % 8).collect();
            u.sort_unstable();
            v.sort_unstable();
            let u: Vec<f64> = u.into_iter().map(f64::from).collect();
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let got = ks_count(&u, &v).unwrap();
            prop_assert_eq!(got, ks_brute(&u, &v));
            prop_assert_eq!(got, ks_count(&v, &u).unwrap());
        }

        #[test]
        fn combined_in_unit_interval(k in 1usize..40, sj_frac in 0.0f64..1.0, sk_frac in 0.0f64..=1.0) {
            let sj = ((k as f64 - 1.0) * sj_frac).round() as usize;
            let sk = (k as f64 * sk_frac).round() as usize;
            let v = combined_similarity(sj, sk, k).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn shared_neighbors_symmetric_on_mutual_edges() {
        let ds = crate::dataset::gen_two_spirals(40, 1.0, 0.05, 1).unwrap();
        let g = build_knn(&ds, 6, Metric::Euclidean).unwrap();
        for (u, v) in g.edges() {
            if g.edge_index(v, u).is_some() {
                assert_eq!(shared_neighbors(&g, u, v).unwrap(), shared_neighbors(&g, v, u).unwrap());
            }
        }
    }
}
