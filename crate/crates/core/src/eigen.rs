//! Thick-restart Krylov iteration for the largest eigenpair of a symmetric
//! operator on the orthogonal complement of one known unit vector.
//!
//! The basis is kept fully orthogonal and the projected matrix is rebuilt by
//! explicit Rayleigh-Ritz at every restart, which keeps the code short and
//! robust at the sizes the partitioner meets (tens of thousands of nodes).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) struct KrylovOptions {
    pub max_basis: usize,
    pub keep: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            max_basis: 60,
            keep: 20,
            max_iterations: 10_000,
            tolerance: 1e-10,
        }
    }
}

pub(crate) struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against `deflate` and `basis`.
fn orthogonalize(w: &mut [f64], deflate: &[f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        let c = dot(deflate, w);
        axpy(-c, deflate, w);
        for b in basis {
            let c = dot(b, w);
            axpy(-c, b, w);
        }
    }
}

/// Largest eigenpair of `apply` restricted to `deflate`'s complement.
/// `deflate` must be a unit vector spanning an invariant subspace.
pub(crate) fn largest_deflated(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    deflate: &[f64],
    opts: &KrylovOptions,
) -> Result<EigenPair> {
    if n < 2 {
        return Err(Error::invalid("eigenproblem needs at least two unknowns"));
    }
    let dim = n - 1;
    let max_basis = opts.max_basis.min(dim).max(1);
    let keep = opts.keep.min(max_basis.saturating_sub(1)).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f1ed);
    let mut random_unit = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            orthogonalize(&mut v, deflate, basis);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut next = random_unit(&basis);
    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;

    loop {
        while basis.len() < max_basis {
            let Some(v) = next.take() else { break };
            let mut av = vec![0.0; n];
            apply(&v, &mut av);
            iterations += 1;
            let mut w = av.clone();
            basis.push(v);
            images.push(av);
            orthogonalize(&mut w, deflate, &basis);
            let nw = norm(&w);
            let scale = norm(images.last().expect("just pushed")).max(1.0);
            if nw > 1e-12 * scale {
                w.iter_mut().for_each(|x| *x /= nw);
                next = Some(w);
            }
        }

        let m = basis.len();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let ritz = |col: usize| -> (Vec<f64>, Vec<f64>) {
            let mut y = vec![0.0; n];
            let mut ay = vec![0.0; n];
            for i in 0..m {
                let s = eig.eigenvectors[(i, col)];
                axpy(s, &basis[i], &mut y);
                axpy(s, &images[i], &mut ay);
            }
            (y, ay)
        };

        let theta = eig.eigenvalues[order[0]];
        let (y, ay) = ritz(order[0]);
        let residual = ay.iter().zip(&y).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        best_residual = best_residual.min(residual);
        if residual <= opts.tolerance {
            return Ok(EigenPair {
                value: theta,
                vector: y,
                iterations,
            });
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual: best_residual,
            });
        }

        // Restart from the leading Ritz vectors. The pending continuation
        // vector is orthogonal to the old basis, hence to the new one.
        let kept: Vec<(Vec<f64>, Vec<f64>)> = order.iter().take(keep).map(|&c| ritz(c)).collect();
        basis.clear();
        images.clear();
        for (y, ay) in kept {
            basis.push(y);
            images.push(ay);
        }
        if next.is_none() {
            // Invariant subspace exhausted without meeting the tolerance;
            // continue with a fresh direction.
            next = random_unit(&basis);
            if next.is_none() {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: best_residual,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let diag = [0.1, 0.9, 0.5, 0.95, 0.3, 0.2];
        // Deflate e_3 (eigenvalue 0.95); expect 0.9 next.
        let mut deflate = vec![0.0; 6];
        deflate[3] = 1.0;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..6 {
                y[i] = diag[i] * x[i];
            }
        };
        let pair = largest_deflated(6, apply, &deflate, &KrylovOptions::default()).unwrap();
        assert!((pair.value - 0.9).abs() < 1e-12);
        assert!((pair.vector[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn restarts_on_large_operator() {
        // Path-graph-like tridiagonal operator, n = 300, small basis to force
        // restarts.
        let n = 300;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 0.0;
                if i > 0 {
                    s += 0.5 * x[i - 1];
                }
                if i + 1 < n {
                    s += 0.5 * x[i + 1];
                }
                y[i] = s;
            }
        };
        // Eigenvectors sin(j i pi/(n+1)), eigenvalues cos(j pi/(n+1)).
        let h = std::f64::consts::PI / (n as f64 + 1.0);
        let mut top: Vec<f64> = (1..=n).map(|i| (i as f64 * h).sin()).collect();
        let nt = norm(&top);
        top.iter_mut().for_each(|x| *x /= nt);
        let opts = KrylovOptions {
            max_basis: 30,
            keep: 10,
            max_iterations: 200_000,
            tolerance: 1e-9,
        };
        let pair = largest_deflated(n, apply, &top, &opts).unwrap();
        assert!((pair.value - (2.0 * h).cos()).abs() < 1e-9, "{}", pair.value);
    }
}
