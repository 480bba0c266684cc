//! Exact directed k-nearest-neighbor graphs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    /// `1 - cos(a, b)`; undefined for zero vectors.
    Cosine,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Euclidean, Metric::Manhattan, Metric::Cosine];

    pub fn tag(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Cosine => "cosine",
        }
    }

    /// Distance without the dimension check; callers guarantee equal lengths.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => squared_euclidean(a, b).sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Cosine => {
                let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    ab += x * y;
                    aa += x * x;
                    bb += y * y;
                }
                1.0 - ab / (aa.sqrt() * bb.sqrt())
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric {s:?}")))
    }
}

#[inline]
fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let t = x[l] - y[l];
            acc[l] += t * t;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += (x - y) * (x - y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn metric_distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(metric.eval(a, b))
}

/// Row `i` lists the `k` nearest other points of `i`, ordered by ascending
/// distance with ties broken by ascending id. Edge `e = i*k + j` is the
/// directed edge `i -> neighbors[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    n: usize,
    k: usize,
    neighbors: Vec<usize>,
    dists: Vec<f64>,
    metric: Metric,
}

impl KnnGraph {
    /// Assembles a graph from flattened rows, checking every structural
    /// invariant.
    pub fn from_parts(n: usize, k: usize, neighbors: Vec<usize>, dists: Vec<f64>, metric: Metric) -> Result<Self> {
        if k == 0 || n < 2 || k >= n {
            return Err(Error::invalid(format!("need 1 <= k <= n-1, got n={n}, k={k}")));
        }
        if neighbors.len() != n * k || dists.len() != n * k {
            return Err(Error::DimensionMismatch {
                left: neighbors.len().max(dists.len()),
                right: n * k,
            });
        }
        for i in 0..n {
            let row = &neighbors[i * k..(i + 1) * k];
            let drow = &dists[i * k..(i + 1) * k];
            for (j, &v) in row.iter().enumerate() {
                if v >= n || v == i {
                    return Err(Error::invalid(format!("row {i}: invalid neighbor {v}")));
                }
                if row[..j].contains(&v) {
                    return Err(Error::invalid(format!("row {i}: duplicate neighbor {v}")));
                }
                if !(drow[j].is_finite() && drow[j] >= 0.0) {
                    return Err(Error::NonFiniteDistance(i, v));
                }
                if j > 0 && rank_order((drow[j - 1], row[j - 1]), (drow[j], v)) != Ordering::Less {
                    return Err(Error::invalid(format!("row {i}: neighbors not sorted at rank {j}")));
                }
            }
        }
        Ok(KnnGraph {
            n,
            k,
            neighbors,
            dists,
            metric,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn n_edges(&self) -> usize {
        self.n * self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn dists(&self, i: usize) -> &[f64] {
        &self.dists[i * self.k..(i + 1) * self.k]
    }

    /// `(src, dst)` of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        (e / self.k, self.neighbors[e])
    }

    pub fn edge_dist(&self, e: usize) -> f64 {
        self.dists[e]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.n {
            return None;
        }
        self.neighbors(u).iter().position(|&w| w == v).map(|j| u * self.k + j)
    }

    /// Edges as `(src, dst)` in enumeration order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_edges()).map(move |e| self.edge(e))
    }
}

#[inline]
fn rank_order(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Exact brute-force kNN, parallel over rows.
pub fn build_knn(data: &Dataset, k: usize, metric: Metric) -> Result<KnnGraph> {
    let n = data.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= N-1 (N={n}), got {k}")));
    }
    let rows: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = data.point(i);
            let mut cand = Vec::with_capacity(n - 1);
            for j in (0..n).filter(|&j| j != i) {
                let d = metric.eval(p, data.point(j));
                if !d.is_finite() {
                    return Err(Error::NonFiniteDistance(i, j));
                }
                cand.push((d, j));
            }
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, |a, b| rank_order(*a, *b));
                cand.truncate(k);
            }
            cand.sort_unstable_by(|a, b| rank_order(*a, *b));
            Ok(cand)
        })
        .collect::<Result<_>>()?;

    let mut neighbors = Vec::with_capacity(n * k);
    let mut dists = Vec::with_capacity(n * k);
    for row in rows {
        for (d, j) in row {
            dists.push(d);
            neighbors.push(j);
        }
    }
    Ok(KnnGraph {
        n,
        k,
        neighbors,
        dists,
        metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(xs.to_vec(), xs.len(), 1).unwrap()
    }

    #[test]
    fn three_four_five() {
        assert_eq!(metric_distance(&[0.0, 0.0], &[3.0, 4.0], Metric::Euclidean).unwrap(), 5.0);
        assert_eq!(metric_distance(&[1.5, -2.0], &[1.5, -2.0], Metric::Euclidean).unwrap(), 0.0);
        assert!(metric_distance(&[0.0], &[0.0, 1.0], Metric::Euclidean).is_err());
    }

    #[test]
    fn euclidean_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [1, 3, 4, 7, 64, 784] {
            let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mut naive = 0.0;
            for i in 0..dim {
                naive += (a[i] - b[i]) * (a[i] - b[i]);
            }
            let naive = naive.sqrt();
            let got = metric_distance(&a, &b, Metric::Euclidean).unwrap();
            assert!((got - naive).abs() <= 1e-12 * naive.max(1.0));
        }
    }

    #[test]
    fn other_metrics() {
        assert_eq!(metric_distance(&[0.0, 0.0], &[3.0, -4.0], Metric::Manhattan).unwrap(), 7.0);
        let c = metric_distance(&[1.0, 0.0], &[0.0, 2.0], Metric::Cosine).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
        assert_eq!("manhattan".parse::<Metric>().unwrap(), Metric::Manhattan);
        assert!("hamming".parse::<Metric>().is_err());
    }

    #[test]
    fn collinear_nearest() {
        let g = build_knn(&line(&[0.0, 1.0, 3.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.neighbors(2), &[1]);
        assert_eq!(g.dists(2), &[2.0]);
    }

    #[test]
    fn full_neighborhood() {
        let g = build_knn(&line(&[0.0, 5.0, 1.0, 2.0]), 3, Metric::Euclidean).unwrap();
        for i in 0..4 {
            let mut row = g.neighbors(i).to_vec();
            row.sort_unstable();
            let expect: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            assert_eq!(row, expect);
        }
    }

    #[test]
    fn duplicates_ranked_by_id() {
        let g = build_knn(&line(&[0.0, 0.0, 0.0, 0.0]), 2, Metric::Euclidean).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.neighbors(2), &[0, 1]);
        assert_eq!(g.dists(3), &[0.0, 0.0]);
    }

    #[test]
    fn k_bounds() {
        let ds = line(&[0.0, 1.0, 2.0]);
        assert!(build_knn(&ds, 3, Metric::Euclidean).is_err());
        assert!(build_knn(&ds, 0, Metric::Euclidean).is_err());
    }

    #[test]
    fn non_finite_distance_is_error() {
        let ds = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            build_knn(&ds, 1, Metric::Cosine),
            Err(Error::NonFiniteDistance(..))
        ));
    }

    #[test]
    fn edge_indexing() {
        let g = build_knn(&line(&[0.0, 1.0, 3.0, 6.0]), 2, Metric::Euclidean).unwrap();
        assert_eq!(g.n_edges(), 8);
        for e in 0..g.n_edges() {
            let (u, v) = g.edge(e);
            assert_eq!(g.edge_index(u, v), Some(e));
        }
        assert_eq!(g.edge_index(0, 3), None);
    }

    #[test]
    fn from_parts_validates() {
        assert!(KnnGraph::from_parts(3, 1, vec![1, 0, 1], vec![1.0, 1.0, 2.0], Metric::Euclidean).is_ok());
        assert!(KnnGraph::from_parts(3, 1, vec![0, 0, 1], vec![1.0, 1.0, 2.0], Metric::Euclidean).is_err());
        assert!(
            KnnGraph::from_parts(3, 2, vec![1, 2, 0, 2, 1, 0], vec![2.0, 1.0, 1.0, 1.0, 1.0, 1.0], Metric::Euclidean)
                .is_err()
        );
    }
}
