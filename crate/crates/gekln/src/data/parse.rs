use std::path::Path;

use super::{DataError, RawLogRecord};

/// Supported log file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    /// `student,exercise,concepts,correct` with `;`-separated concepts.
    GenericCsv,
    /// ASSISTments skill-builder export (comma-separated).
    AssistCsv,
    /// KDD Cup algebra export (tab-separated).
    KddTsv,
}

impl LogFormat {
    pub fn parse_name(name: &str) -> Option<LogFormat> {
        match name {
            "generic-csv" => Some(LogFormat::GenericCsv),
            "assist-csv" => Some(LogFormat::AssistCsv),
            "kdd-tsv" => Some(LogFormat::KddTsv),
            _ => None,
        }
    }

    fn delimiter(self) -> u8 {
        match self {
            LogFormat::KddTsv => b'\t',
            _ => b',',
        }
    }
}

/// Column-name mapping from a source export onto record fields. The
/// exercise key may be the join of several columns (e.g. problem + step).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub student: String,
    pub exercise: Vec<String>,
    pub concepts: String,
    pub correct: String,
    pub order: Option<String>,
    pub concept_separator: String,
    pub exercise_join: String,
}

impl ColumnMap {
    pub fn defaults_for(format: LogFormat) -> ColumnMap {
        match format {
            LogFormat::GenericCsv => ColumnMap {
                student: "student".into(),
                exercise: vec!["exercise".into()],
                concepts: "concepts".into(),
                correct: "correct".into(),
                order: None,
                concept_separator: ";".into(),
                exercise_join: "::".into(),
            },
            LogFormat::AssistCsv => ColumnMap {
                student: "user_id".into(),
                exercise: vec!["problem_id".into()],
                concepts: "skill_id".into(),
                correct: "correct".into(),
                order: Some("order_id".into()),
                concept_separator: ";".into(),
                exercise_join: "::".into(),
            },
            LogFormat::KddTsv => ColumnMap {
                student: "Anon Student Id".into(),
                exercise: vec!["Problem Name".into(), "Step Name".into()],
                concepts: "KC(Default)".into(),
                correct: "Correct First Attempt".into(),
                order: Some("Row".into()),
                concept_separator: "~~".into(),
                exercise_join: "::".into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOptions {
    pub format: LogFormat,
    pub columns: ColumnMap,
    /// A source score in [0, 1] maps to 1 iff it is >= this threshold.
    pub binarize_threshold: f64,
}

impl ParseOptions {
    pub fn new(format: LogFormat) -> ParseOptions {
        ParseOptions {
            format,
            columns: ColumnMap::defaults_for(format),
            binarize_threshold: 0.5,
        }
    }
}

/// Parsed records in file order plus the count of skipped rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub records: Vec<RawLogRecord>,
    pub skipped: usize,
}

/// Parse a log file into raw records, one per data row. Rows with a
/// missing student/exercise key or an out-of-domain score are counted
/// and skipped. Header columns named in the mapping must exist.
pub fn parse_log_file(path: &Path, opts: &ParseOptions) -> Result<ParseOutcome, DataError> {
    if !path.exists() {
        return Err(DataError::FileNotFound {
            path: path.display().to_string(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.format.delimiter())
        .flexible(true)
        .from_path(path)
        .map_err(|e| DataError::Format {
            line: 1,
            reason: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| DataError::Format {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let find_col = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::Format {
                line: 1,
                reason: format!("missing column {name:?} in header"),
            })
    };
    let student_col = find_col(&opts.columns.student)?;
    let exercise_cols: Vec<usize> = opts
        .columns
        .exercise
        .iter()
        .map(|c| find_col(c))
        .collect::<Result<_, _>>()?;
    let concepts_col = find_col(&opts.columns.concepts)?;
    let correct_col = find_col(&opts.columns.correct)?;
    let order_col = match &opts.columns.order {
        Some(c) => Some(find_col(c)?),
        None => None,
    };

    let mut records = Vec::new();
    let mut skipped = 0usize;
    // byte records + lossy decoding: real exports are not always UTF-8
    for (row_idx, row) in reader.byte_records().enumerate() {
        let row = row.map_err(|e| DataError::Format {
            line: row_idx + 2,
            reason: e.to_string(),
        })?;
        let field = |i: usize| -> std::borrow::Cow<'_, str> {
            match row.get(i) {
                Some(bytes) => match std::str::from_utf8(bytes) {
                    Ok(s) => std::borrow::Cow::Borrowed(s.trim()),
                    Err(_) => {
                        std::borrow::Cow::Owned(String::from_utf8_lossy(bytes).trim().to_string())
                    }
                },
                None => std::borrow::Cow::Borrowed(""),
            }
        };

        let student_key = field(student_col).to_string();
        let exercise_key = exercise_cols
            .iter()
            .map(|&i| field(i))
            .collect::<Vec<_>>()
            .join(&opts.columns.exercise_join);
        if student_key.is_empty() || exercise_cols.iter().all(|&i| field(i).is_empty()) {
            skipped += 1;
            continue;
        }
        let correct = match field(correct_col).parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => u8::from(v >= opts.binarize_threshold),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let concept_keys: Vec<String> = field(concepts_col)
            .split(&opts.columns.concept_separator)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let order_hint = order_col.and_then(|i| field(i).parse::<u64>().ok());

        records.push(RawLogRecord {
            student_key,
            exercise_key,
            concept_keys,
            correct,
            order_hint,
        });
    }
    Ok(ParseOutcome { records, skipped })
}
