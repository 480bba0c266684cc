//! Text persistence for kNN graphs and their edge scores.
//!
//! ```text
//! n k metric_tag
//! src dst distance [sK sJ sA]
//! ```
//!
//! Edges appear in enumeration order (source-major, rank-minor). Reals are
//! written with 17 significant digits so they read back bit-identically.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::knn::{KnnGraph, Metric};
use crate::similarity::EdgeScores;

pub fn write_edge_list(mut w: impl Write, graph: &KnnGraph, scores: Option<&EdgeScores>) -> Result<()> {
    if let Some(s) = scores {
        if !s.is_aligned_with(graph) {
            return Err(Error::invalid("scores do not match the graph"));
        }
    }
    let io = |e| Error::io("<edge list>", e);
    writeln!(w, "{} {} {}", graph.n(), graph.k(), graph.metric()).map_err(io)?;
    for (e, (u, v)) in graph.edges().enumerate() {
        match scores {
            Some(s) => writeln!(
                w,
                "{u} {v} {:.16e} {} {} {:.16e}",
                graph.edge_dist(e),
                s.sk()[e],
                s.sj()[e],
                s.sa()[e]
            ),
            None => writeln!(w, "{u} {v} {:.16e}", graph.edge_dist(e)),
        }
        .map_err(io)?;
    }
    Ok(())
}

pub fn save_edge_list(path: impl AsRef<Path>, graph: &KnnGraph, scores: Option<&EdgeScores>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_edge_list(&mut w, graph, scores).map_err(|e| relabel(e, path))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Reads a graph, plus scores when every edge line carries them.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<(KnnGraph, Option<EdgeScores>)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(std::io::BufReader::new(f), path)
}

pub fn read_edge_list(r: impl BufRead, path: &Path) -> Result<(KnnGraph, Option<EdgeScores>)> {
    let err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_owned(),
        row,
        column,
        message,
    };
    let mut lines = r.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Format(format!("{}: empty edge list", path.display()))),
        }
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(err(1, 1, "header must be `n k metric_tag`".into()));
    }
    let n: usize = head[0].parse().map_err(|_| err(1, 1, "bad n".into()))?;
    let k: usize = head[1].parse().map_err(|_| err(1, 2, "bad k".into()))?;
    let metric: Metric = head[2].parse()?;

    let mut neighbors = Vec::with_capacity(n * k);
    let mut dists = Vec::with_capacity(n * k);
    let (mut sk, mut sj) = (Vec::new(), Vec::new());
    let mut scored = None;
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let has_scores = match fields.len() {
            3 => false,
            6 => true,
            w => return Err(err(row, w, format!("expected 3 or 6 fields, found {w}"))),
        };
        if *scored.get_or_insert(has_scores) != has_scores {
            return Err(err(row, fields.len(), "mixed scored and unscored lines".into()));
        }
        let e = neighbors.len();
        let src: usize = fields[0].parse().map_err(|_| err(row, 1, "bad src".into()))?;
        if k == 0 || src != e / k {
            return Err(err(row, 1, format!("expected source {}", e / k.max(1))));
        }
        neighbors.push(fields[1].parse().map_err(|_| err(row, 2, "bad dst".into()))?);
        dists.push(fields[2].parse().map_err(|_| err(row, 3, "bad distance".into()))?);
        if has_scores {
            sk.push(fields[3].parse().map_err(|_| err(row, 4, "bad sK".into()))?);
            sj.push(fields[4].parse().map_err(|_| err(row, 5, "bad sJ".into()))?);
            let _: f64 = fields[5].parse().map_err(|_| err(row, 6, "bad sA".into()))?;
        }
    }
    if neighbors.len() != n * k {
        return Err(Error::Format(format!(
            "{}: expected {} edges, found {}",
            path.display(),
            n * k,
            neighbors.len()
        )));
    }
    let graph = KnnGraph::from_parts(n, k, neighbors, dists, metric)?;
    let scores = match scored {
        Some(true) => Some(EdgeScores::from_counts(k, sk, sj)?),
        _ => None,
    };
    Ok((graph, scores))
}
