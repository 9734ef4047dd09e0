use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset, InteractionLog, QMatrix, RawLogRecord, Split};

/// Replace each record's concept set with a single synthetic concept
/// whose key is the canonical (sorted, deduplicated, `|`-joined) form of
/// the originals. Identical concept sets map to the same key; idempotent.
pub fn merge_concepts_per_exercise(records: Vec<RawLogRecord>) -> Vec<RawLogRecord> {
    records
        .into_iter()
        .map(|mut r| {
            if !r.concept_keys.is_empty() {
                let mut keys = r.concept_keys;
                keys.sort_unstable();
                keys.dedup();
                r.concept_keys = vec![keys.join("|")];
            }
            r
        })
        .collect()
}

/// Collapse rows that describe the same attempt: identical
/// (student, exercise, order_hint) with a present order hint. Their
/// concept lists are unioned (a multi-concept attempt is often exported
/// as one row per concept); the first row's score wins. Records without
/// an order hint pass through untouched.
pub fn merge_duplicate_attempts(records: Vec<RawLogRecord>) -> Vec<RawLogRecord> {
    let mut out: Vec<RawLogRecord> = Vec::with_capacity(records.len());
    let mut seen: HashMap<(String, String, u64), usize> = HashMap::new();
    for r in records {
        let key = match r.order_hint {
            Some(o) => (r.student_key.clone(), r.exercise_key.clone(), o),
            None => {
                out.push(r);
                continue;
            }
        };
        match seen.get(&key) {
            Some(&idx) => {
                let existing = &mut out[idx];
                for c in r.concept_keys {
                    if !existing.concept_keys.contains(&c) {
                        existing.concept_keys.push(c);
                    }
                }
            }
            None => {
                seen.insert(key, out.len());
                out.push(r);
            }
        }
    }
    out
}

/// Index the raw records into a dense [`Dataset`].
///
/// An exercise's concept set is the union of concept keys across all of
/// its records; exercises whose union is empty are dropped along with
/// their records. Surviving student/exercise/concept keys get contiguous
/// indices in first-appearance order. Duplicate (student, exercise)
/// pairs are kept as separate logs.
pub fn build_dataset(records: &[RawLogRecord]) -> Result<Dataset, DataError> {
    // Union concepts per exercise key, preserving first-appearance order.
    let mut exercise_concepts: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in records {
        let entry = exercise_concepts.entry(&r.exercise_key).or_default();
        for c in &r.concept_keys {
            if !entry.contains(&c.as_str()) {
                entry.push(c);
            }
        }
    }

    let mut student_ids: HashMap<&str, usize> = HashMap::new();
    let mut exercise_ids: HashMap<&str, usize> = HashMap::new();
    let mut concept_ids: HashMap<&str, usize> = HashMap::new();
    let mut q_rows: Vec<Vec<usize>> = Vec::new();
    let mut logs = Vec::new();

    for r in records {
        let concepts = &exercise_concepts[r.exercise_key.as_str()];
        if concepts.is_empty() {
            continue;
        }
        let next_student = student_ids.len();
        let student = *student_ids.entry(&r.student_key).or_insert(next_student);
        let exercise = match exercise_ids.get(r.exercise_key.as_str()) {
            Some(&p) => p,
            None => {
                let p = exercise_ids.len();
                exercise_ids.insert(&r.exercise_key, p);
                let mut row: Vec<usize> = concepts
                    .iter()
                    .map(|&c| {
                        let next = concept_ids.len();
                        *concept_ids.entry(c).or_insert(next)
                    })
                    .collect();
                row.sort_unstable();
                q_rows.push(row);
                p
            }
        };
        logs.push(InteractionLog {
            student,
            exercise,
            score: r.correct,
        });
    }

    if logs.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let num_concepts = concept_ids.len();
    Ok(Dataset {
        num_students: student_ids.len(),
        num_exercises: exercise_ids.len(),
        num_concepts,
        logs,
        q_matrix: QMatrix::new(q_rows, num_concepts),
    })
}

/// Seeded uniform split of the dataset's logs. The leading
/// `(1 - test_ratio)` fraction of a shuffle becomes train, the rest
/// test. Students or exercises that only occur in test are retained.
pub fn split_dataset(ds: &Dataset, test_ratio: f64, seed: u64) -> Result<Split, DataError> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(DataError::InvalidSplitRatio(test_ratio));
    }
    let total = ds.logs.len();
    let mut n_test = (total as f64 * test_ratio).round() as usize;
    if total >= 2 {
        // keep both sides non-empty at extreme ratios; still within one
        // record of the requested fraction
        n_test = n_test.clamp(1, total - 1);
    }
    let n_train = total - n_test;

    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let train = order[..n_train].iter().map(|&i| ds.logs[i]).collect();
    let test = order[n_train..].iter().map(|&i| ds.logs[i]).collect();
    Ok(Split { train, test, seed })
}
