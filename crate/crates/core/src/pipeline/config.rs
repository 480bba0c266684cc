//! Flat `key = value` run configuration.
//!
//! ```text
//! # two spirals, separated at sA >= 0.79
//! input.format = spirals
//! spirals.n_per_arm = 500
//! k = 20
//! filter = sA>=0.79
//! output = out/spirals
//! ```
//!
//! Relative paths resolve against the config file's directory. Overrides
//! given on the command line use the same `key=value` syntax and win over
//! the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::filter::FilterPredicate;
use crate::knn::Metric;
use crate::ncut::NcutParams;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Csv {
        path: PathBuf,
        has_header: bool,
        label_column: Option<usize>,
    },
    Idx {
        images: PathBuf,
        labels: Option<PathBuf>,
    },
    Spirals {
        n_per_arm: usize,
        turns: f64,
        noise: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSpec,
    pub subsample: Option<usize>,
    pub k: usize,
    pub metric: Metric,
    pub filter: FilterPredicate,
    pub sweep_steps: usize,
    pub sweep_snapshots: Vec<f64>,
    pub sweep_downsample: usize,
    pub ncut: NcutParams,
    pub merge_spec: Option<PathBuf>,
    pub merge_suggest_density: Option<f64>,
    pub reassign_major_min_size: usize,
    pub reassign_iterations: usize,
    pub eval_partition: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    pub serve_bind: String,
    pub serve_port: u16,
}

const KEYS: &[&str] = &[
    "input.format",
    "input.path",
    "input.labels",
    "input.has_header",
    "input.label_column",
    "input.subsample",
    "spirals.n_per_arm",
    "spirals.turns",
    "spirals.noise",
    "k",
    "metric",
    "filter",
    "sweep.steps",
    "sweep.snapshots",
    "sweep.downsample",
    "ncut.cut_threshold",
    "ncut.stability_threshold",
    "ncut.min_cluster_size",
    "ncut.max_depth",
    "ncut.candidates",
    "ncut.stability_bins",
    "merge.spec",
    "merge.suggest_density",
    "reassign.major_min_size",
    "reassign.iterations",
    "eval.partition",
    "output",
    "seed",
    "serve.bind",
    "serve.port",
];

/// Parses `key = value` lines into a map, rejecting unknown keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = parse_pair(line).map_err(|e| Error::Config(format!("line {}: {e}", row + 1)))?;
        out.insert(key, value);
    }
    Ok(out)
}

pub fn parse_pair(s: &str) -> Result<(String, String)> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key = value, got {s:?}")))?;
    let key = key.trim();
    if !KEYS.contains(&key) {
        return Err(Error::Config(format!("unknown key {key:?}")));
    }
    Ok((key.to_owned(), value.trim().to_owned()))
}

struct Pairs {
    map: BTreeMap<String, String>,
    base: PathBuf,
}

impl Pairs {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.map
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.map.get(key).map(|v| self.base.join(v))
    }

    fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key).ok_or_else(|| Error::Config(format!("{key} is required")))
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::from_text(&text, &base, overrides)
    }

    pub fn from_text(text: &str, base: &Path, overrides: &[String]) -> Result<Self> {
        let mut map = parse_pairs(text)?;
        for o in overrides {
            let (k, v) = parse_pair(o)?;
            map.insert(k, v);
        }
        let p = Pairs {
            map,
            base: base.to_path_buf(),
        };

        let format: String = p.get_or("input.format", "csv".to_owned())?;
        let input = match format.as_str() {
            "csv" => InputSpec::Csv {
                path: p.require_path("input.path")?,
                has_header: p.get_or("input.has_header", false)?,
                label_column: p.get("input.label_column")?,
            },
            "idx" => InputSpec::Idx {
                images: p.require_path("input.path")?,
                labels: p.path("input.labels"),
            },
            "spirals" => InputSpec::Spirals {
                n_per_arm: p.get_or("spirals.n_per_arm", 500)?,
                turns: p.get_or("spirals.turns", 2.0)?,
                noise: p.get_or("spirals.noise", 0.0)?,
            },
            other => return Err(Error::Config(format!("unknown input.format {other:?}"))),
        };

        let snapshots = match p.map.get("sweep.snapshots") {
            Some(list) => list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("sweep.snapshots: bad value {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };

        let defaults = NcutParams::default();
        let cfg = RunConfig {
            input,
            subsample: p.get("input.subsample")?,
            k: p.get_or("k", 20)?,
            metric: p.get_or("metric", Metric::Euclidean)?,
            filter: p.get_or("filter", FilterPredicate::Combined { sa_min: 0.0 })?,
            sweep_steps: p.get_or("sweep.steps", crate::sweep::DEFAULT_STEPS)?,
            sweep_snapshots: snapshots,
            sweep_downsample: p.get_or("sweep.downsample", 1)?,
            ncut: NcutParams {
                cut_threshold: p.get_or("ncut.cut_threshold", defaults.cut_threshold)?,
                stability_threshold: p.get_or("ncut.stability_threshold", defaults.stability_threshold)?,
                min_cluster_size: p.get_or("ncut.min_cluster_size", defaults.min_cluster_size)?,
                max_depth: p.get_or("ncut.max_depth", defaults.max_depth)?,
                n_candidates: p.get_or("ncut.candidates", defaults.n_candidates)?,
                stability_bins: p.get_or("ncut.stability_bins", defaults.stability_bins)?,
            },
            merge_spec: p.path("merge.spec"),
            merge_suggest_density: p.get("merge.suggest_density")?,
            reassign_major_min_size: p.get_or("reassign.major_min_size", 300)?,
            reassign_iterations: p.get_or("reassign.iterations", 2)?,
            eval_partition: p.path("eval.partition"),
            output: p.path("output").unwrap_or_else(|| base.join("out")),
            seed: p.get_or("seed", 0)?,
            serve_bind: p.get_or("serve.bind", "127.0.0.1".to_owned())?,
            serve_port: p.get_or("serve.port", 8080)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.filter.validate(self.k)?;
        self.ncut.validate()?;
        crate::sweep::sweep_thresholds(self.sweep_steps)?;
        if self.sweep_downsample == 0 {
            return Err(Error::Config("sweep.downsample must be at least 1".into()));
        }
        if let Some(bad) = self.sweep_snapshots.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Config(format!("sweep snapshot {bad} outside [0, 1]")));
        }
        let mut files: Vec<&Path> = Vec::new();
        match &self.input {
            InputSpec::Csv { path, .. } => files.push(path),
            InputSpec::Idx { images, labels } => {
                files.push(images);
                files.extend(labels.as_deref());
            }
            InputSpec::Spirals { .. } => {}
        }
        files.extend(self.merge_spec.as_deref());
        if let Some(missing) = files.into_iter().find(|f| !f.exists()) {
            return Err(Error::Config(format!("{} does not exist", missing.display())));
        }
        Ok(())
    }

    /// Loads (or generates) the dataset, applying `input.subsample`.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let ds = match &self.input {
            InputSpec::Csv {
                path,
                has_header,
                label_column,
            } => dataset::load_csv(path, *has_header, *label_column)?,
            InputSpec::Idx { images, labels } => {
                let ds = dataset::load_idx_images(images)?;
                match labels {
                    Some(l) => {
                        let labels = dataset::load_idx_labels(l)?;
                        if labels.len() != ds.len() {
                            return Err(Error::invalid(format!(
                                "{} holds {} labels for {} images",
                                l.display(),
                                labels.len(),
                                ds.len()
                            )));
                        }
                        ds.with_labels(labels)?
                    }
                    None => ds,
                }
            }
            InputSpec::Spirals { n_per_arm, turns, noise } => {
                dataset::gen_two_spirals(*n_per_arm, *turns, *noise, self.seed)?
            }
        };
        match self.subsample {
            Some(count) => ds.subsample(count, self.seed),
            None => Ok(ds),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_text(
            "input.format = spirals\nspirals.n_per_arm = 50 # short\nfilter = sA>=0.79\n",
            Path::new("/tmp"),
            &["k=7".into()],
        )
        .unwrap();
        assert_eq!(cfg.k, 7);
        assert_eq!(cfg.filter, FilterPredicate::Combined { sa_min: 0.79 });
        assert_eq!(cfg.ncut, NcutParams::default());
        assert_eq!(cfg.output, PathBuf::from("/tmp/out"));
        assert_eq!(cfg.load_dataset().unwrap().len(), 100);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_files() {
        assert!(RunConfig::from_text("colour = red\n", Path::new("."), &[]).is_err());
        assert!(RunConfig::from_text("input.path = /nonexistent.csv\n", Path::new("."), &[]).is_err());
        assert!(RunConfig::from_text("input.format = spirals\nk = 0\n", Path::new("."), &[]).is_err());
        assert!(RunConfig::from_text("input.format = spirals\n", Path::new("."), &["k".into()]).is_err());
    }

    #[test]
    fn count_filter_parses() {
        let cfg = RunConfig::from_text(
            "input.format = spirals\nfilter = sK<=14,sJ>=4\nsweep.snapshots = 1, 0.5,0\n",
            Path::new("."),
            &[],
        )
        .unwrap();
        assert_eq!(cfg.filter, FilterPredicate::Counts { sk_max: 14, sj_min: 4 });
        assert_eq!(cfg.sweep_snapshots, vec![1.0, 0.5, 0.0]);
    }
}
