//! Run configuration: one declarative JSON file, every key overridable
//! by a CLI flag of the same dotted name. `EKLN_SEED` overrides both the
//! split and train seeds; an explicit per-key flag wins over everything.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gekln::baselines::IrtConfig;
use gekln::data::{ColumnMap, LogFormat, ParseOptions};
use gekln::model::ModelConfig;
use gekln::train::TrainConfig;

use crate::AppError;

/// Which predictor `train`/`eval` operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    GraphEkln,
    Mf,
    MfTem,
    Rgcn,
    StudentAverage,
    Irt,
}

impl ModelKind {
    pub fn parse_name(name: &str) -> Option<ModelKind> {
        match name {
            "graph-ekln" => Some(ModelKind::GraphEkln),
            "mf" => Some(ModelKind::Mf),
            "mf-tem" => Some(ModelKind::MfTem),
            "rgcn" | "r-gcn" => Some(ModelKind::Rgcn),
            "student-average" => Some(ModelKind::StudentAverage),
            "irt" => Some(ModelKind::Irt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GraphEkln => "graph-ekln",
            ModelKind::Mf => "mf",
            ModelKind::MfTem => "mf-tem",
            ModelKind::Rgcn => "r-gcn",
            ModelKind::StudentAverage => "student-average",
            ModelKind::Irt => "irt",
        }
    }
}

/// Optional column-name overrides; unset fields keep the format default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnOverrides {
    pub student: Option<String>,
    pub exercise: Option<Vec<String>>,
    pub concepts: Option<String>,
    pub correct: Option<String>,
    pub order: Option<String>,
    pub concept_separator: Option<String>,
    pub exercise_join: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSection {
    /// Path to the raw log file. The only key without a default.
    pub path: Option<PathBuf>,
    /// One of generic-csv, assist-csv, kdd-tsv.
    pub format: String,
    /// Replace each record's concepts with one merged synthetic concept.
    /// `None` = only for kdd-tsv.
    pub merge_concepts: Option<bool>,
    /// Collapse rows that share (student, exercise, order id).
    /// `None` = for formats that carry an order column.
    pub dedup_by_order: Option<bool>,
    /// Source scores in `[0,1]` map to 1 iff >= this threshold.
    pub binarize_threshold: f64,
    pub columns: ColumnOverrides,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            path: None,
            format: "generic-csv".into(),
            merge_concepts: None,
            dedup_by_order: None,
            binarize_threshold: 0.5,
            columns: ColumnOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSection {
    pub test_ratio: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            test_ratio: 0.2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(flatten)]
    pub config: ModelConfig,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: ModelKind::GraphEkln,
            config: ModelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataSection,
    pub split: SplitSection,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub irt: IrtConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSection::default(),
            split: SplitSection::default(),
            model: ModelSection::default(),
            train: TrainConfig::default(),
            irt: IrtConfig::default(),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, AppError> {
        let mut cfg = match path {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| {
                    AppError::Input(format!("cannot read config {}: {e}", p.display()))
                })?;
                serde_json::from_slice(&bytes)
                    .map_err(|e| AppError::Input(format!("config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Ok(seed) = std::env::var("EKLN_SEED") {
            let seed: u64 = seed.parse().map_err(|_| {
                AppError::Input(format!("EKLN_SEED must be an integer, got {seed:?}"))
            })?;
            cfg.split.seed = seed;
            cfg.train.seed = seed;
        }
        Ok(cfg)
    }

    pub fn log_format(&self) -> Result<LogFormat, AppError> {
        LogFormat::parse_name(&self.data.format).ok_or_else(|| {
            AppError::Input(format!(
                "unknown data.format {:?} (expected generic-csv, assist-csv, or kdd-tsv)",
                self.data.format
            ))
        })
    }

    /// Effective concept-merge flag: explicit setting, else kdd only.
    pub fn merge_concepts(&self) -> Result<bool, AppError> {
        Ok(self
            .data
            .merge_concepts
            .unwrap_or(self.log_format()? == LogFormat::KddTsv))
    }

    /// Effective attempt-dedup flag: explicit setting, else on for
    /// formats whose column map carries an order column.
    pub fn dedup_by_order(&self) -> Result<bool, AppError> {
        let opts = self.parse_options()?;
        Ok(self
            .data
            .dedup_by_order
            .unwrap_or(opts.columns.order.is_some()))
    }

    pub fn parse_options(&self) -> Result<ParseOptions, AppError> {
        let format = self.log_format()?;
        let mut columns = ColumnMap::defaults_for(format);
        let o = &self.data.columns;
        if let Some(v) = &o.student {
            columns.student = v.clone();
        }
        if let Some(v) = &o.exercise {
            columns.exercise = v.clone();
        }
        if let Some(v) = &o.concepts {
            columns.concepts = v.clone();
        }
        if let Some(v) = &o.correct {
            columns.correct = v.clone();
        }
        if let Some(v) = &o.order {
            columns.order = Some(v.clone());
        }
        if let Some(v) = &o.concept_separator {
            columns.concept_separator = v.clone();
        }
        if let Some(v) = &o.exercise_join {
            columns.exercise_join = v.clone();
        }
        Ok(ParseOptions {
            format,
            columns,
            binarize_threshold: self.data.binarize_threshold,
        })
    }

    pub fn data_path(&self) -> Result<&Path, AppError> {
        self.data.path.as_deref().ok_or_else(|| {
            AppError::Input("data.path is required (config key or --data.path)".into())
        })
    }

    /// Fingerprint of everything that affects ingest output.
    pub fn ingest_options_fingerprint(&self) -> Result<String, AppError> {
        let opts = self.parse_options()?;
        let blob = format!(
            "{:?}|{:?}|merge={}|dedup={}|thresh={}",
            opts.format,
            opts.columns,
            self.merge_concepts()?,
            self.dedup_by_order()?,
            self.data.binarize_threshold,
        );
        Ok(gekln::data::sha256_hex(blob.as_bytes())[..16].to_string())
    }
}
