//! Node-to-cluster assignments with an explicit "unassigned" state.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::filter::canonical_ids;

/// On-disk sentinel for unassigned nodes.
pub const UNASSIGNED: i64 = -1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<Option<usize>>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Relabels arbitrary cluster ids: decreasing size, ties by smallest
    /// member id.
    pub fn canonical(raw: Vec<Option<usize>>) -> Self {
        let (assignment, sizes) = canonical_ids(raw.into_iter());
        Partition { assignment, sizes }
    }

    /// Keeps ids as given; clusters may be empty.
    pub fn with_ids(assignment: Vec<Option<usize>>) -> Self {
        let count = assignment.iter().flatten().max().map_or(0, |&m| m + 1);
        let mut sizes = vec![0; count];
        for c in assignment.iter().flatten() {
            sizes[*c] += 1;
        }
        Partition { assignment, sizes }
    }

    pub fn unassigned(n: usize) -> Self {
        Partition {
            assignment: vec![None; n],
            sizes: Vec::new(),
        }
    }

    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![None; n];
        for (g, members) in groups.iter().enumerate() {
            for &v in members {
                if v >= n {
                    return Err(Error::invalid(format!("node {v} out of range")));
                }
                if raw[v].replace(g).is_some() {
                    return Err(Error::invalid(format!("node {v} listed in two groups")));
                }
            }
        }
        Ok(Partition::canonical(raw))
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn cluster_of(&self, node: usize) -> Option<usize> {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_assigned(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (v, c) in self.assignment.iter().enumerate() {
            if let Some(c) = c {
                out[*c].push(v);
            }
        }
        out
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        for (v, c) in self.assignment.iter().enumerate() {
            writeln!(w, "{v} {}", c.map_or(UNASSIGNED, |c| c as i64))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    /// Reads `node_id cluster_id` lines; ids are kept as written.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut assignment = Vec::new();
        for (row, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |column: usize, message: &str| Error::Parse {
                path: path.to_owned(),
                row: row + 1,
                column,
                message: message.to_owned(),
            };
            let mut it = line.split_whitespace();
            let node: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(1, "bad node id"))?;
            let cluster: i64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(2, "bad cluster id"))?;
            if node != assignment.len() {
                return Err(parse_err(1, "node ids must be 0..n-1 in order"));
            }
            assignment.push(match cluster {
                UNASSIGNED => None,
                c if c >= 0 => Some(c as usize),
                _ => return Err(parse_err(2, "negative cluster id other than -1")),
            });
        }
        Ok(Partition::with_ids(assignment))
    }
}
