use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{Error, Result};

/// Radius at the inner end of each arm.
pub const SPIRAL_R_MIN: f64 = 0.5;
/// Radial growth per full turn; arms interleave at half this spacing.
pub const SPIRAL_GROWTH_PER_TURN: f64 = 1.0;

/// Two interleaved Archimedean spirals. Arm 0 follows
/// `(r cos φ, r sin φ)` with φ evenly spaced over `[0, turns·2π]` and
/// `r = SPIRAL_R_MIN + φ · SPIRAL_GROWTH_PER_TURN / 2π`; arm 1 is arm 0
/// rotated by π. Gaussian noise of scale `noise_sigma` is added to every
/// coordinate. Labels hold the arm index; rows are arm 0 then arm 1.
pub fn gen_two_spirals(n_per_arm: usize, turns: f64, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n_per_arm < 2 {
        return Err(Error::invalid(format!("n_per_arm must be at least 2, got {n_per_arm}")));
    }
    if !(turns > 0.0 && turns.is_finite()) {
        return Err(Error::invalid(format!("turns must be positive, got {turns}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid(format!("noise_sigma must be finite and >= 0, got {noise_sigma}")));
    }
    let noise = Normal::new(0.0, noise_sigma).expect("checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let phi_max = turns * 2.0 * PI;
    let mut points = Vec::with_capacity(4 * n_per_arm);
    let mut labels = Vec::with_capacity(2 * n_per_arm);
    for arm in 0..2u32 {
        let offset = f64::from(arm) * PI;
        for j in 0..n_per_arm {
            let phi = phi_max * j as f64 / (n_per_arm - 1) as f64;
            let r = SPIRAL_R_MIN + phi * SPIRAL_GROWTH_PER_TURN / (2.0 * PI);
            let angle = phi + offset;
            points.push(r * angle.cos() + noise.sample(&mut rng));
            points.push(r * angle.sin() + noise.sample(&mut rng));
            labels.push(arm);
        }
    }
    Dataset::new(points, 2 * n_per_arm, 2)?.with_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_points_lie_on_their_arm() {
        let ds = gen_two_spirals(200, 2.0, 0.0, 0).unwrap();
        let labels = ds.labels().unwrap();
        for (i, p) in ds.rows().enumerate() {
            let r = p[0].hypot(p[1]);
            assert!((SPIRAL_R_MIN..=SPIRAL_R_MIN + 2.0).contains(&r));
            let phi = (r - SPIRAL_R_MIN) * 2.0 * PI / SPIRAL_GROWTH_PER_TURN;
            let angle = phi + f64::from(labels[i]) * PI;
            let (ex, ey) = (r * angle.cos(), r * angle.sin());
            assert!((ex - p[0]).abs() < 1e-9 && (ey - p[1]).abs() < 1e-9, "point {i}");
        }
        assert_eq!(labels[199], 0);
        assert_eq!(labels[200], 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_two_spirals(100, 2.0, 0.05, 42).unwrap();
        let b = gen_two_spirals(100, 2.0, 0.05, 42).unwrap();
        let c = gen_two_spirals(100, 2.0, 0.05, 43).unwrap();
        assert_eq!(a.points(), b.points());
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gen_two_spirals(1, 2.0, 0.0, 0).is_err());
        assert!(gen_two_spirals(10, 2.0, -1.0, 0).is_err());
        assert!(gen_two_spirals(10, 0.0, 0.0, 0).is_err());
    }
}
