//! Stage-per-command batch driver.
//!
//! Every stage reads its inputs from the run's output directory and writes
//! its own artifacts there, so cheap downstream stages can be re-run without
//! rebuilding the kNN graph.
//!
//! | stage      | reads                          | writes                                   |
//! |------------|--------------------------------|------------------------------------------|
//! | `build`    | input data                     | `edges.txt`, `dataset.json`              |
//! | `filter`   | `edges.txt`                    | `mask.txt`                               |
//! | `scc`      | `edges.txt`, `mask.txt`        | `components.txt`, `component_sizes.txt`  |
//! | `sweep`    | `edges.txt`                    | `sweep.txt`, `adjacency_<t>.pgm`         |
//! | `ncut`     | `edges.txt`, `mask.txt`        | `ncut_partition.txt`, `ncut_leaves.json` |
//!
//! `ncut` partitions the largest strongly connected component of the
//! filtered graph; every other node stays unassigned until `reassign`.
//! | `reassign` | `ncut_partition.txt`, `mask.txt` | `merge_spec.txt`, `merged_partition.txt`, `final_partition.txt` |
//! | `eval`     | partitions, `dataset.json`     | `eval.txt`                               |
//!
//! Each stage also appends one JSON object to `log.jsonl`.

mod config;

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use self::config::{parse_pair, parse_pairs, InputSpec, RunConfig};
use crate::dataset::Dataset;
use crate::edgelist::{load_edge_list, save_edge_list};
use crate::error::{Error, Result};
use crate::filter::{component_purity, filter_edges, scc, EdgeMask};
use crate::knn::{build_knn, KnnGraph};
use crate::ncut::{largest_component, ncut_recursive};
use crate::partition::Partition;
use crate::postprocess::{f_measure_report, merge_clusters, reassign_small, suggest_merges, MergeSpec};
use crate::raster::render_adjacency_pooled;
use crate::similarity::{score_all_edges, EdgeScores};
use crate::sweep::sweep_sort;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Build,
    Filter,
    Scc,
    Sweep,
    Ncut,
    Reassign,
    Eval,
    Serve,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Build,
        Stage::Filter,
        Stage::Scc,
        Stage::Sweep,
        Stage::Ncut,
        Stage::Reassign,
        Stage::Eval,
        Stage::Serve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Filter => "filter",
            Stage::Scc => "scc",
            Stage::Sweep => "sweep",
            Stage::Ncut => "ncut",
            Stage::Reassign => "reassign",
            Stage::Eval => "eval",
            Stage::Serve => "serve",
        }
    }

    /// Process exit code when this stage fails. Configuration errors use 2.
    pub fn exit_code(self) -> u8 {
        10 + Stage::ALL.iter().position(|&s| s == self).unwrap() as u8
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const EDGES: &str = "edges.txt";
    pub const DATASET: &str = "dataset.json";
    pub const MASK: &str = "mask.txt";
    pub const COMPONENTS: &str = "components.txt";
    pub const COMPONENT_SIZES: &str = "component_sizes.txt";
    pub const SWEEP: &str = "sweep.txt";
    pub const NCUT_PARTITION: &str = "ncut_partition.txt";
    pub const NCUT_LEAVES: &str = "ncut_leaves.json";
    pub const MERGE_SPEC: &str = "merge_spec.txt";
    pub const MERGED_PARTITION: &str = "merged_partition.txt";
    pub const FINAL_PARTITION: &str = "final_partition.txt";
    pub const EVAL: &str = "eval.txt";
    pub const LOG: &str = "log.jsonl";
}

/// Dataset facts that downstream stages and the server need without the
/// raw feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n: usize,
    pub d: usize,
    pub labels: Option<Vec<u32>>,
    pub display_xy: Option<Vec<[f64; 2]>>,
}

impl DatasetMeta {
    pub fn of(ds: &Dataset) -> Self {
        DatasetMeta {
            n: ds.len(),
            d: ds.dim(),
            labels: ds.labels().map(<[u32]>::to_vec),
            display_xy: ds.display_xy().map(<[[f64; 2]]>::to_vec),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).expect("metadata serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// What a stage produced, for printing and for the JSON-lines log.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: Stage,
    pub summary: Value,
    pub written: Vec<PathBuf>,
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.summary)?;
        for p in &self.written {
            write!(f, "\n  wrote {}", p.display())?;
        }
        Ok(())
    }
}

/// A configured run rooted at `config.output`.
pub struct Run {
    pub config: RunConfig,
}

impl Run {
    pub fn new(config: RunConfig) -> Self {
        Run { config }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.config.output.join(file)
    }

    fn require(&self, file: &str, producer: Stage) -> Result<PathBuf> {
        let path = self.path(file);
        if path.exists() {
            Ok(path)
        } else {
            Err(Error::MissingArtifact {
                path,
                stage: producer.name(),
            })
        }
    }

    pub fn load_graph(&self) -> Result<(KnnGraph, EdgeScores)> {
        let path = self.require(files::EDGES, Stage::Build)?;
        let (graph, scores) = load_edge_list(&path)?;
        let scores = scores.ok_or_else(|| Error::Format(format!("{} has no edge scores", path.display())))?;
        Ok((graph, scores))
    }

    pub fn load_meta(&self) -> Result<DatasetMeta> {
        DatasetMeta::load(self.require(files::DATASET, Stage::Build)?)
    }

    pub fn load_mask(&self, graph: &KnnGraph) -> Result<EdgeMask> {
        let path = self.require(files::MASK, Stage::Filter)?;
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let keep = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .enumerate()
            .map(|(row, l)| match l.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::Parse {
                    path: path.clone(),
                    row: row + 1,
                    column: 1,
                    message: format!("expected 0 or 1, got {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        if keep.len() != graph.n_edges() {
            return Err(Error::Format(format!(
                "{} holds {} entries for {} edges; rerun `nsgraph filter`",
                path.display(),
                keep.len(),
                graph.n_edges()
            )));
        }
        Ok(EdgeMask::from_vec(keep))
    }

    fn load_partition(&self, file: &str, producer: Stage) -> Result<Partition> {
        Partition::load(self.require(file, producer)?)
    }

    pub fn run(&self, stage: Stage) -> Result<StageReport> {
        fs::create_dir_all(&self.config.output).map_err(|e| Error::io(&self.config.output, e))?;
        let start = Instant::now();
        let report = match stage {
            Stage::Build => self.build(),
            Stage::Filter => self.filter(),
            Stage::Scc => self.scc(),
            Stage::Sweep => self.sweep(),
            Stage::Ncut => self.ncut(),
            Stage::Reassign => self.reassign(),
            Stage::Eval => self.eval(),
            Stage::Serve => Err(Error::Config("serve is not a batch stage".into())),
        }?;
        let mut entry = json!({
            "stage": stage.name(),
            "elapsed_ms": start.elapsed().as_millis() as u64,
        });
        entry["summary"] = report.summary.clone();
        self.append_log(&entry)?;
        Ok(report)
    }

    fn append_log(&self, entry: &Value) -> Result<()> {
        let path = self.path(files::LOG);
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        writeln!(f, "{entry}").map_err(|e| Error::io(&path, e))
    }

    fn build(&self) -> Result<StageReport> {
        let ds = self.config.load_dataset()?;
        if self.config.k >= ds.len() {
            return Err(Error::Config(format!("k = {} needs more than {} points", self.config.k, ds.len())));
        }
        let t = Instant::now();
        let graph = build_knn(&ds, self.config.k, self.config.metric)?;
        let knn_ms = t.elapsed().as_millis() as u64;
        let t = Instant::now();
        let scores = score_all_edges(&graph);
        let score_ms = t.elapsed().as_millis() as u64;

        let edges = self.path(files::EDGES);
        save_edge_list(&edges, &graph, Some(&scores))?;
        let meta = self.path(files::DATASET);
        DatasetMeta::of(&ds).save(&meta)?;
        Ok(StageReport {
            stage: Stage::Build,
            summary: json!({
                "n": graph.n(),
                "d": ds.dim(),
                "k": graph.k(),
                "metric": graph.metric().to_string(),
                "edges": graph.n_edges(),
                "knn_ms": knn_ms,
                "score_ms": score_ms,
            }),
            written: vec![edges, meta],
        })
    }

    fn filter(&self) -> Result<StageReport> {
        let (graph, scores) = self.load_graph()?;
        let mask = filter_edges(&graph, &scores, &self.config.filter)?;
        let path = self.path(files::MASK);
        let mut w = create(&path)?;
        let body = (|| {
            writeln!(w, "# {}", self.config.filter)?;
            for &keep in mask.as_slice() {
                writeln!(w, "{}", u8::from(keep))?;
            }
            w.flush()
        })();
        body.map_err(|e| Error::io(&path, e))?;
        Ok(StageReport {
            stage: Stage::Filter,
            summary: json!({
                "predicate": self.config.filter.to_string(),
                "edges": graph.n_edges(),
                "kept": mask.count_kept(),
            }),
            written: vec![path],
        })
    }

    fn scc(&self) -> Result<StageReport> {
        let (graph, _) = self.load_graph()?;
        let mask = self.load_mask(&graph)?;
        let meta = self.load_meta()?;
        let labeling = scc(&graph, &mask)?;
        let purity = meta
            .labels
            .as_deref()
            .map(|l| component_purity(&labeling, Some(l)))
            .transpose()?;

        let comp_path = self.path(files::COMPONENTS);
        let mut w = create(&comp_path)?;
        (|| {
            for (v, c) in labeling.components().iter().enumerate() {
                writeln!(w, "{v} {c}")?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(&comp_path, e))?;

        let sizes_path = self.path(files::COMPONENT_SIZES);
        let mut w = create(&sizes_path)?;
        (|| {
            for (c, size) in labeling.sizes().iter().enumerate() {
                match &purity {
                    Some(p) => writeln!(w, "{c} {size} {:.6}", p[c])?,
                    None => writeln!(w, "{c} {size}")?,
                }
            }
            w.flush()
        })()
        .map_err(|e| Error::io(&sizes_path, e))?;

        let sizes = labeling.sizes();
        Ok(StageReport {
            stage: Stage::Scc,
            summary: json!({
                "components": labeling.count(),
                "largest": &sizes[..sizes.len().min(10)],
                "singletons": sizes.iter().filter(|&&s| s == 1).count(),
            }),
            written: vec![comp_path, sizes_path],
        })
    }

    fn sweep(&self) -> Result<StageReport> {
        let (graph, scores) = self.load_graph()?;
        let result = sweep_sort(&graph, &scores, self.config.sweep_steps)?;
        let dump = self.path(files::SWEEP);
        let mut w = create(&dump)?;
        result
            .write_dump(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&dump, e))?;

        let mut written = vec![dump];
        let mut snapshots = Vec::new();
        for &t in &self.config.sweep_snapshots {
            let i = result
                .step_at_or_below(t)
                .expect("the sweep grid ends at threshold 0");
            let step = &result.steps()[i];
            let mask = result.mask_at(i, &graph, &scores)?;
            let raster = render_adjacency_pooled(&step.permutation, &graph, &mask, self.config.sweep_downsample)?;
            let path = self.path(&format!("adjacency_{t:.4}.pgm"));
            raster.write_pgm(&path)?;
            written.push(path);
            snapshots.push(json!({
                "requested": t,
                "threshold": step.threshold,
                "components": step.labeling.count(),
            }));
        }
        Ok(StageReport {
            stage: Stage::Sweep,
            summary: json!({
                "steps": result.steps().len(),
                "components_at_zero": result.last().labeling.count(),
                "snapshots": snapshots,
            }),
            written,
        })
    }

    fn ncut(&self) -> Result<StageReport> {
        let (graph, _) = self.load_graph()?;
        let mask = self.load_mask(&graph)?;
        let g = largest_component(&graph, &mask)?;
        let outcome = ncut_recursive(&g, &self.config.ncut)?;
        for w in &outcome.warnings {
            eprintln!("warning: part of {} nodes at depth {}: {}", w.size, w.depth, w.message);
        }
        let part_path = self.path(files::NCUT_PARTITION);
        outcome.partition.save(&part_path)?;
        let leaves_path = self.path(files::NCUT_LEAVES);
        let leaves: Vec<Value> = outcome
            .leaves
            .iter()
            .map(|l| json!({"size": l.nodes.len(), "depth": l.depth, "reason": l.reason}))
            .collect();
        let body = json!({"leaves": leaves, "warnings": outcome.warnings});
        fs::write(&leaves_path, body.to_string()).map_err(|e| Error::io(&leaves_path, e))?;

        let sizes = outcome.partition.sizes();
        Ok(StageReport {
            stage: Stage::Ncut,
            summary: json!({
                "input_nodes": g.len(),
                "clusters": outcome.partition.count(),
                "largest": &sizes[..sizes.len().min(20)],
                "warnings": outcome.warnings.len(),
            }),
            written: vec![part_path, leaves_path],
        })
    }

    /// Merges ncut clusters (explicit spec, else suggested from kept-edge
    /// density) and then reassigns points of small clusters.
    fn reassign(&self) -> Result<StageReport> {
        let (graph, _) = self.load_graph()?;
        let ncut = self.load_partition(files::NCUT_PARTITION, Stage::Ncut)?;
        let spec = match (&self.config.merge_spec, self.config.merge_suggest_density) {
            (Some(path), _) => MergeSpec::load(path)?,
            (None, Some(density)) => {
                let mask = self.load_mask(&graph)?;
                suggest_merges(&ncut, &graph, &mask, density)
            }
            (None, None) => MergeSpec::default(),
        };
        let merged = merge_clusters(&ncut, &spec)?;
        let fin = reassign_small(
            &merged,
            &graph,
            self.config.reassign_major_min_size,
            self.config.reassign_iterations,
        )?;

        let spec_path = self.path(files::MERGE_SPEC);
        fs::write(&spec_path, format!("{spec}")).map_err(|e| Error::io(&spec_path, e))?;
        let merged_path = self.path(files::MERGED_PARTITION);
        merged.save(&merged_path)?;
        let final_path = self.path(files::FINAL_PARTITION);
        fin.save(&final_path)?;
        Ok(StageReport {
            stage: Stage::Reassign,
            summary: json!({
                "merge_groups": spec.groups.len(),
                "merged_clusters": merged.count(),
                "final_clusters": fin.count(),
                "unassigned": fin.n() - fin.n_assigned(),
            }),
            written: vec![spec_path, merged_path, final_path],
        })
    }

    /// Scores every available partition against the dataset labels, or the
    /// partition named by `eval.partition` alone when set.
    fn eval(&self) -> Result<StageReport> {
        let meta = self.load_meta()?;
        let truth = meta
            .labels
            .ok_or_else(|| Error::Config("eval needs a dataset with labels".into()))?;
        let candidates: Vec<(String, PathBuf)> = match &self.config.eval_partition {
            Some(p) => vec![(p.display().to_string(), p.clone())],
            None => [
                ("ncut", files::NCUT_PARTITION),
                ("merged", files::MERGED_PARTITION),
                ("final", files::FINAL_PARTITION),
            ]
            .into_iter()
            .map(|(name, f)| (name.to_owned(), self.path(f)))
            .filter(|(_, p)| p.exists())
            .collect(),
        };
        if candidates.is_empty() {
            return Err(Error::MissingArtifact {
                path: self.path(files::NCUT_PARTITION),
                stage: Stage::Ncut.name(),
            });
        }
        let path = self.path(files::EVAL);
        let mut text = String::new();
        let mut summary = serde_json::Map::new();
        for (name, p) in candidates {
            let report = f_measure_report(&Partition::load(&p)?, &truth)?;
            text.push_str(&format!("{name} {}\n", report.f_measure));
            summary.insert(name, json!(report.f_measure));
        }
        fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        print!("{text}");
        Ok(StageReport {
            stage: Stage::Eval,
            summary: Value::Object(summary),
            written: vec![path],
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}
