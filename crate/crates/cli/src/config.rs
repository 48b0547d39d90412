//! Run configuration: a TOML file merged with command-line flags.
//!
//! Relative paths in the file resolve against the file's directory; paths
//! given as flags resolve against the working directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use srctrace_core::knn::Workers;
use srctrace_core::protocol::{HoldoutCount, SplitKind, SupportSetting, DEFAULT_OOD_RATIOS};
use srctrace_core::store::{LabelField, LabelTarget};
use srctrace_core::DEFAULT_K;

use crate::args::RunArgs;
use crate::error::{CliError, Result};

/// Default embedding layer.
pub const DEFAULT_LAYER: u32 = 4;
pub const DEFAULT_OUTPUT: &str = "results";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum GridEntry {
    Count(usize),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum HoldoutValue {
    Count(usize),
    Text(String),
}

/// `[split]` table of the config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub kind: String,
    pub ratios: Option<Vec<f64>>,
    pub stratify_by: Option<String>,
    pub n_per_class: Option<usize>,
    pub per_dataset: Option<usize>,
    pub in_domain_ratios: Option<Vec<f64>>,
    pub group_by: Option<String>,
    #[serde(default)]
    n: Option<HoldoutValue>,
}

impl SplitSection {
    pub fn ood(per_dataset: usize) -> Self {
        SplitSection {
            kind: "ood_holdout".into(),
            per_dataset: Some(per_dataset),
            ..Default::default()
        }
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::Usage(format!("split kind `{}` needs `{key}`", self.kind))
    }

    /// Resolves the table against the run's label target.
    pub fn to_kind(&self, target: &LabelTarget, base: &Path) -> Result<SplitKind> {
        Ok(match self.kind.as_str() {
            "ratio_split" => SplitKind::RatioSplit {
                ratios: self.ratios.clone().unwrap_or_else(|| vec![0.8, 0.2]),
                stratify_by: match &self.stratify_by {
                    Some(s) => parse_target(s, base)?,
                    None => target.clone(),
                },
            },
            "per_class_count" => {
                SplitKind::PerClassCount { n_per_class: self.n_per_class.ok_or_else(|| self.missing("n_per_class"))? }
            }
            "ood_holdout" => SplitKind::OodHoldout {
                per_dataset: self.per_dataset.ok_or_else(|| self.missing("per_dataset"))?,
                in_domain_ratios: self.in_domain_ratios.clone().unwrap_or_else(|| DEFAULT_OOD_RATIOS.to_vec()),
            },
            "leave_n_out" => {
                let group = self.group_by.as_deref().ok_or_else(|| self.missing("group_by"))?;
                let n = match self.n.as_ref().ok_or_else(|| self.missing("n"))? {
                    HoldoutValue::Count(n) => HoldoutCount::Count(*n),
                    HoldoutValue::Text(s) => s.parse().map_err(|e| CliError::Usage(format!("{e}")))?,
                };
                SplitKind::LeaveNOut { group_by: parse_field(group)?, n }
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown split kind `{other}` (ratio_split, per_class_count, ood_holdout, leave_n_out)"
                )))
            }
        })
    }
}

/// The config file as written.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    manifest: Option<PathBuf>,
    embeddings: Option<String>,
    target: Option<String>,
    k: Option<OneOrMany<usize>>,
    seeds: Option<OneOrMany<u64>>,
    layer: Option<u32>,
    layers: Option<Vec<u32>>,
    support: Option<Vec<GridEntry>>,
    datasets: Option<Vec<String>>,
    threads: Option<usize>,
    protocol: Option<PathBuf>,
    output: Option<PathBuf>,
    per_dataset: Option<usize>,
    group_by: Option<String>,
    split: Option<SplitSection>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: PathBuf,
    /// Embedding path, possibly containing `{layer}`.
    pub embeddings: String,
    pub target: LabelTarget,
    pub k: Vec<usize>,
    pub seeds: Vec<u64>,
    pub layer: u32,
    pub layers: Vec<u32>,
    pub support: Vec<SupportSetting>,
    pub datasets: Vec<String>,
    pub workers: Workers,
    pub protocol: Option<PathBuf>,
    pub output: PathBuf,
    pub per_dataset: Option<usize>,
    pub group_by: Option<LabelField>,
    pub split: Option<SplitSection>,
    /// Directory relative split-table paths resolve against.
    pub base: PathBuf,
}

pub fn parse_field(s: &str) -> Result<LabelField> {
    s.parse().map_err(|e| CliError::Usage(format!("{e}")))
}

/// Label target from its command-line spelling; a relabel map path is
/// resolved against `base`.
pub fn parse_target(s: &str, base: &Path) -> Result<LabelTarget> {
    let spec = match s.strip_prefix("relabel:") {
        Some(p) => format!("relabel:{}", resolve(base, Path::new(p)).display()),
        None => s.to_string(),
    };
    LabelTarget::parse(&spec).map_err(|e| match e {
        srctrace_core::store::StoreError::UnknownField(_) => CliError::Usage(e.to_string()),
        other => CliError::Store(other),
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn workers(threads: Option<usize>) -> Workers {
    match threads {
        None | Some(0) => Workers::Auto,
        Some(1) => Workers::Single,
        Some(n) => Workers::Fixed(n),
    }
}

impl RunConfig {
    /// Reads the config file named by `args` (if any) and applies the flags.
    pub fn load(args: &RunArgs) -> Result<RunConfig> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let file: FileConfig = toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, base)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let from_file = |p: &Option<PathBuf>| p.as_ref().map(|p| resolve(&base, p));

        let manifest = args
            .manifest
            .clone()
            .or_else(|| from_file(&file.manifest))
            .ok_or_else(|| {
                CliError::Usage("no manifest: pass --manifest or set `manifest`".into())
            })?;
        let embeddings = match (&args.embeddings, &file.embeddings) {
            (Some(e), _) => e.clone(),
            (None, Some(e)) => resolve(&base, Path::new(e)).to_string_lossy().into_owned(),
            (None, None) => {
                return Err(CliError::Usage(
                    "no embeddings: pass --embeddings or set `embeddings`".into(),
                ))
            }
        };
        let target = match (&args.target, &file.target) {
            (Some(t), _) => parse_target(t, Path::new(""))?,
            (None, Some(t)) => parse_target(t, &base)?,
            (None, None) => LabelTarget::checkpoint(),
        };
        let k = if !args.k.is_empty() {
            args.k.clone()
        } else {
            file.k
                .map(OneOrMany::into_vec)
                .unwrap_or_else(|| vec![DEFAULT_K])
        };
        if k.is_empty() || k.contains(&0) {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        let seeds = if !args.seed.is_empty() {
            args.seed.clone()
        } else {
            file.seeds
                .map(OneOrMany::into_vec)
                .unwrap_or_else(|| vec![0])
        };
        if seeds.is_empty() {
            return Err(CliError::Usage("seed list is empty".into()));
        }
        let layer = args.layer.or(file.layer).unwrap_or(DEFAULT_LAYER);
        let support = match file.support {
            Some(grid) => grid
                .into_iter()
                .map(|g| match g {
                    GridEntry::Count(n) => Ok(SupportSetting::PerClass(n)),
                    GridEntry::Text(s) => s.parse().map_err(|e| CliError::Usage(format!("{e}"))),
                })
                .collect::<Result<Vec<_>>>()?,
            None => SupportSetting::default_grid(),
        };
        let group_by = file.group_by.as_deref().map(parse_field).transpose()?;

        Ok(RunConfig {
            manifest,
            embeddings,
            target,
            k,
            seeds,
            layer,
            layers: file.layers.unwrap_or_else(|| vec![layer]),
            support,
            datasets: if args.datasets.is_empty() {
                file.datasets.unwrap_or_default()
            } else {
                args.datasets.clone()
            },
            workers: workers(args.threads.or(file.threads)),
            protocol: args.protocol.clone().or_else(|| from_file(&file.protocol)),
            output: args
                .out
                .clone()
                .or_else(|| from_file(&file.output))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
            per_dataset: file.per_dataset,
            group_by,
            split: file.split,
            base,
        })
    }

    /// Embedding file of `layer`.
    pub fn embeddings_for(&self, layer: u32) -> PathBuf {
        PathBuf::from(self.embeddings.replace("{layer}", &layer.to_string()))
    }

    pub fn layer_pattern(&self) -> bool {
        self.embeddings.contains("{layer}")
    }

    /// The single k of commands that take one.
    pub fn single_k(&self) -> Result<usize> {
        match self.k.as_slice() {
            [k] => Ok(*k),
            many => Err(CliError::Usage(format!(
                "this command takes one k, got {many:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(toml_text: &str, args: RunArgs) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, toml_text).unwrap();
        RunConfig::load(&RunArgs {
            config: Some(path),
            ..args
        })
    }

    #[test]
    fn flags_override_file() {
        let text = "manifest = \"m.jsonl\"\nembeddings = \"e_{layer}.emb\"\nk = [1, 5, 21]\nseeds = 3\nlayer = 7\n";
        let cfg = load(
            text,
            RunArgs {
                k: vec![9],
                layer: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.k, [9]);
        assert_eq!(cfg.seeds, [3]);
        assert_eq!(cfg.layer, 2);
        assert!(cfg.manifest.ends_with("m.jsonl"));
        assert!(cfg.embeddings_for(2).to_string_lossy().ends_with("e_2.emb"));
        assert_eq!(cfg.support, SupportSetting::default_grid());
    }

    #[test]
    fn rejects_bad_values() {
        let base = "manifest = \"m\"\nembeddings = \"e\"\n";
        assert!(matches!(
            load(&format!("{base}k = 0\n"), RunArgs::default()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            load(&format!("{base}colour = 1\n"), RunArgs::default()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            load(&format!("{base}target = \"genre\"\n"), RunArgs::default()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            load("", RunArgs::default()),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn split_tables() {
        let text = "manifest = \"m\"\nembeddings = \"e\"\nsupport = [10, \"ratio:0.8\"]\n\
                    [split]\nkind = \"leave_n_out\"\ngroup_by = \"acoustic_model\"\nn = \"half\"\n";
        let cfg = load(text, RunArgs::default()).unwrap();
        assert_eq!(
            cfg.support,
            [SupportSetting::PerClass(10), SupportSetting::Ratio(0.8)]
        );
        let kind = cfg.split.unwrap().to_kind(&cfg.target, &cfg.base).unwrap();
        assert_eq!(
            kind,
            SplitKind::LeaveNOut {
                group_by: LabelField::AcousticModel,
                n: HoldoutCount::Half
            }
        );
        let bad = SplitSection {
            kind: "ood_holdout".into(),
            ..Default::default()
        };
        assert!(bad
            .to_kind(&LabelTarget::checkpoint(), Path::new(""))
            .is_err());
    }
}
