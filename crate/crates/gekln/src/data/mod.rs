//! Interaction-log ingestion: file parsing, preprocessing, dense index
//! spaces, and seeded train/test splits.
//!
//! Binary scores: a source value in [0, 1] maps to 1 iff it reaches the
//! binarization threshold (default 0.5); anything outside [0, 1] is out
//! of domain and skipped at parse time. Exercises that end up with no
//! knowledge concepts are dropped before indexing, so every exercise in
//! a built [`Dataset`] has at least one concept.

mod build;
mod cache;
mod parse;

pub use build::{
    build_dataset, merge_concepts_per_exercise, merge_duplicate_attempts, split_dataset,
};
pub use cache::{load_cache, save_cache, sha256_file, sha256_hex, CacheKey, DatasetCache};
pub use parse::{parse_log_file, ColumnMap, LogFormat, ParseOptions, ParseOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {path}")]
    FileNotFound { path: String },
    #[error("format error at line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("no records survive preprocessing")]
    EmptyDataset,
    #[error("test ratio must be in (0, 1), got {0}")]
    InvalidSplitRatio(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache decode error: {0}")]
    CacheDecode(String),
}

/// One raw observation as read from a log file, before indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLogRecord {
    pub student_key: String,
    pub exercise_key: String,
    pub concept_keys: Vec<String>,
    /// Binary score in {0, 1}.
    pub correct: u8,
    /// Original log order, when the source carries one.
    pub order_hint: Option<u64>,
}

/// One indexed observation; the unit of training/test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionLog {
    pub student: usize,
    pub exercise: usize,
    /// Binary score in {0, 1}.
    pub score: u8,
}

/// Sparse exercise -> concept relation map; rows sorted, non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QMatrix {
    rows: Vec<Vec<usize>>,
    num_concepts: usize,
}

impl QMatrix {
    pub fn new(rows: Vec<Vec<usize>>, num_concepts: usize) -> Self {
        debug_assert!(rows.iter().all(|r| {
            !r.is_empty()
                && r.windows(2).all(|w| w[0] < w[1])
                && r.iter().all(|&k| k < num_concepts)
        }));
        QMatrix { rows, num_concepts }
    }

    /// Concepts of exercise `p`, sorted ascending.
    pub fn concepts(&self, p: usize) -> &[usize] {
        &self.rows[p]
    }

    pub fn num_exercises(&self) -> usize {
        self.rows.len()
    }

    pub fn num_concepts(&self) -> usize {
        self.num_concepts
    }
}

/// Indexed corpus: logs plus the exercise-concept map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub num_students: usize,
    pub num_exercises: usize,
    pub num_concepts: usize,
    pub logs: Vec<InteractionLog>,
    pub q_matrix: QMatrix,
}

impl Dataset {
    /// Fill fraction of the score matrix: |logs| / (M * N).
    pub fn density(&self) -> f64 {
        self.logs.len() as f64 / (self.num_students as f64 * self.num_exercises as f64)
    }
}

/// Disjoint train/test partition of a dataset's logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<InteractionLog>,
    pub test: Vec<InteractionLog>,
    pub seed: u64,
}
