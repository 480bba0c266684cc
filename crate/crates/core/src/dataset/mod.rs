//! In-memory point sets and the loaders that produce them.
//!
//! A [`Dataset`] is an immutable N×D matrix of finite reals stored row-major.
//! Row ids are implicit (`0..N`). Optional ground-truth labels and 2-D display
//! coordinates ride along for evaluation and plotting.

mod csv;
mod idx;
mod synth;

pub use self::csv::{load_csv, write_csv};
pub use self::idx::{load_idx_images, load_idx_labels, write_idx_images, write_idx_labels};
pub use self::synth::gen_two_spirals;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
    labels: Option<Vec<u32>>,
    display_xy: Option<Vec<[f64; 2]>>,
}

impl Dataset {
    /// Wraps a row-major `n × d` buffer. For `d == 2` the display coordinates
    /// default to the points themselves.
    pub fn new(points: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("dataset must be non-empty, got {n}x{d}")));
        }
        if points.len() != n * d {
            return Err(Error::DimensionMismatch {
                left: points.len(),
                right: n * d,
            });
        }
        if let Some(pos) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let display_xy = (d == 2).then(|| points.chunks_exact(2).map(|p| [p[0], p[1]]).collect());
        Ok(Dataset {
            points,
            n,
            d,
            labels: None,
            display_xy,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                left: bad.len(),
                right: d,
            });
        }
        Dataset::new(rows.concat(), rows.len(), d)
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: self.n,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_display_xy(mut self, xy: Vec<[f64; 2]>) -> Result<Self> {
        if xy.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: xy.len(),
                right: self.n,
            });
        }
        if xy.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite display coordinate"));
        }
        self.display_xy = Some(xy);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn display_xy(&self) -> Option<&[[f64; 2]]> {
        self.display_xy.as_deref()
    }

    /// Keeps `count` rows chosen uniformly without replacement, in ascending
    /// original order. Returns the dataset unchanged when `count >= len`.
    pub fn subsample(&self, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("subsample size must be positive"));
        }
        if count >= self.n {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = index::sample(&mut rng, self.n, count).into_vec();
        keep.sort_unstable();
        self.select(&keep)
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n) {
            return Err(Error::invalid(format!("row {bad} out of range")));
        }
        let points = rows.iter().flat_map(|&r| self.point(r).iter().copied()).collect();
        let mut out = Dataset::new(points, rows.len(), self.d)?;
        if let Some(labels) = &self.labels {
            out.labels = Some(rows.iter().map(|&r| labels[r]).collect());
        }
        if let Some(xy) = &self.display_xy {
            out.display_xy = Some(rows.iter().map(|&r| xy[r]).collect());
        }
        Ok(out)
    }
}
