//! Grayscale adjacency rasters, written as binary PGM.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::{ComponentLabeling, EdgeMask};
use crate::knn::KnnGraph;

pub const KEPT_EDGE: u8 = 0;
pub const REMOVED_EDGE: u8 = 160;
pub const BACKGROUND: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Darkest value wins, so kept edges survive pooling over removed ones.
    fn darken(&mut self, row: usize, col: usize, value: u8) {
        let p = &mut self.pixels[row * self.width + col];
        *p = (*p).min(value);
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pgm()).map_err(|e| Error::io(path, e))
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::Format("malformed P5 header".into());
        // Header is four whitespace-separated tokens followed by one byte.
        let mut tokens = Vec::new();
        let mut pos = 0;
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad());
            }
            tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?);
        }
        if tokens[0] != "P5" || tokens[3] != "255" {
            return Err(bad());
        }
        let width: usize = tokens[1].parse().map_err(|_| bad())?;
        let height: usize = tokens[2].parse().map_err(|_| bad())?;
        let body = &bytes[(pos + 1).min(bytes.len())..];
        if body.len() != width * height {
            return Err(Error::Truncated {
                expected: width * height,
                actual: body.len(),
            });
        }
        Ok(Raster {
            width,
            height,
            pixels: body.to_vec(),
        })
    }
}

/// Renders the adjacency matrix with rows and columns in `perm` order.
pub fn render_adjacency(perm: &[usize], graph: &KnnGraph, keep_mask: &EdgeMask) -> Result<Raster> {
    render_adjacency_pooled(perm, graph, keep_mask, 1)
}

/// As [`render_adjacency`], max-pooled (darkest pixel) by `factor` in both
/// directions.
pub fn render_adjacency_pooled(perm: &[usize], graph: &KnnGraph, keep_mask: &EdgeMask, factor: usize) -> Result<Raster> {
    let n = graph.n();
    if factor == 0 {
        return Err(Error::invalid("downsample factor must be at least 1"));
    }
    if keep_mask.len() != graph.n_edges() {
        return Err(Error::DimensionMismatch {
            left: keep_mask.len(),
            right: graph.n_edges(),
        });
    }
    let position = inverse_permutation(perm, n)?;
    let side = n.div_ceil(factor);
    let mut raster = Raster::new(side, side);
    for (e, (u, v)) in graph.edges().enumerate() {
        let value = if keep_mask.kept(e) { KEPT_EDGE } else { REMOVED_EDGE };
        raster.darken(position[u] / factor, position[v] / factor, value);
    }
    Ok(raster)
}

pub fn inverse_permutation(perm: &[usize], n: usize) -> Result<Vec<usize>> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            left: perm.len(),
            right: n,
        });
    }
    let mut position = vec![usize::MAX; n];
    for (i, &node) in perm.iter().enumerate() {
        if node >= n || position[node] != usize::MAX {
            return Err(Error::invalid("ordering is not a permutation"));
        }
        position[node] = i;
    }
    Ok(position)
}

/// Diagonal box spanned by one component in a display ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentBox {
    pub component: usize,
    /// First display index covered.
    pub start: usize,
    /// Number of display indices covered.
    pub size: usize,
}

/// Boxes for every component with at least two nodes, in display order.
pub fn component_boxes(perm: &[usize], labeling: &ComponentLabeling) -> Result<Vec<ComponentBox>> {
    let position = inverse_permutation(perm, labeling.n())?;
    let mut span = vec![(usize::MAX, 0usize); labeling.count()];
    for (node, &c) in labeling.components().iter().enumerate() {
        let p = position[node];
        span[c].0 = span[c].0.min(p);
        span[c].1 = span[c].1.max(p);
    }
    let mut boxes: Vec<ComponentBox> = span
        .iter()
        .enumerate()
        .filter(|&(c, _)| labeling.sizes()[c] >= 2)
        .map(|(c, &(lo, hi))| ComponentBox {
            component: c,
            start: lo,
            size: hi - lo + 1,
        })
        .collect();
    boxes.sort_by_key(|b| b.start);
    Ok(boxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::Metric;

    fn tiny() -> KnnGraph {
        KnnGraph::from_parts(3, 1, vec![1, 0, 1], vec![1.0, 1.0, 2.0], Metric::Euclidean).unwrap()
    }

    #[test]
    fn single_kept_edge_one_dark_pixel() {
        let g = tiny();
        let mask = EdgeMask::from_vec(vec![true, false, false]);
        let r = render_adjacency(&[0, 1, 2], &g, &mask).unwrap();
        let dark: Vec<(usize, usize)> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| r.get(i, j) == KEPT_EDGE)
            .collect();
        assert_eq!(dark, vec![(0, 1)]);
        assert_eq!(r.get(1, 0), REMOVED_EDGE);
        assert_eq!(r.get(2, 2), BACKGROUND);
    }

    #[test]
    fn empty_mask_gives_only_gray() {
        let g = tiny();
        let r = render_adjacency(&[2, 0, 1], &g, &EdgeMask::none(3)).unwrap();
        assert_eq!(r.pixels().iter().filter(|&&p| p == REMOVED_EDGE).count(), 3);
        assert!(r.pixels().iter().all(|&p| p == REMOVED_EDGE || p == BACKGROUND));
    }

    #[test]
    fn permutation_moves_pixels() {
        let g = tiny();
        let r = render_adjacency(&[2, 1, 0], &g, &EdgeMask::all(3)).unwrap();
        // edge 0->1 lands at (pos 2, pos 1)
        assert_eq!(r.get(2, 1), KEPT_EDGE);
        assert_eq!(r.get(0, 1), KEPT_EDGE); // 2->1
    }

    #[test]
    fn pooling_keeps_darkest() {
        let g = tiny();
        let mask = EdgeMask::from_vec(vec![false, true, false]);
        let r = render_adjacency_pooled(&[0, 1, 2], &g, &mask, 2).unwrap();
        assert_eq!((r.width(), r.height()), (2, 2));
        assert_eq!(r.get(0, 0), KEPT_EDGE);
        assert_eq!(r.get(1, 0), REMOVED_EDGE);
        assert_eq!(r.get(0, 1), BACKGROUND);
    }

    #[test]
    fn pgm_round_trip() {
        let g = tiny();
        let r = render_adjacency(&[0, 1, 2], &g, &EdgeMask::all(3)).unwrap();
        let bytes = r.to_pgm();
        assert!(bytes.starts_with(b"P5\n3 3\n255\n"));
        assert_eq!(Raster::from_pgm(&bytes).unwrap(), r);
    }

    #[test]
    fn rejects_non_permutation() {
        let g = tiny();
        assert!(render_adjacency(&[0, 0, 1], &g, &EdgeMask::all(3)).is_err());
        assert!(render_adjacency(&[0, 1], &g, &EdgeMask::all(3)).is_err());
    }

    #[test]
    fn boxes_skip_singletons() {
        let lab = ComponentLabeling::from_groups(&[0, 0, 1, 2, 2, 2]);
        let boxes = component_boxes(&[3, 4, 5, 0, 1, 2], &lab).unwrap();
        assert_eq!(
            boxes,
            vec![
                ComponentBox { component: 0, start: 0, size: 3 },
                ComponentBox { component: 1, start: 3, size: 2 },
            ]
        );
    }
}
