use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DataError, Dataset, Split};

/// Identity of a cached ingest run. A cache file is valid for a request
/// iff every key field matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub source_sha256: String,
    pub seed: u64,
    pub test_ratio: f64,
    /// Fingerprint of parse/preprocess options (format, column map,
    /// threshold, merge flags).
    pub options: String,
}

/// Serialized dataset + split, keyed by source hash and split settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCache {
    pub key: CacheKey,
    /// Content hash binding checkpoints to the data they were trained on.
    pub dataset_hash: String,
    pub dataset: Dataset,
    pub split: Split,
}

impl DatasetCache {
    pub fn new(key: CacheKey, dataset: Dataset, split: Split) -> DatasetCache {
        let dataset_hash = dataset_content_hash(&dataset, &split);
        DatasetCache {
            key,
            dataset_hash,
            dataset,
            split,
        }
    }
}

/// Hash of the indexed dataset content plus split identity.
pub fn dataset_content_hash(dataset: &Dataset, split: &Split) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(dataset).expect("dataset serializes"));
    hasher.update(split.seed.to_le_bytes());
    hasher.update(split.train.len().to_le_bytes());
    hasher.update(split.test.len().to_le_bytes());
    hex(&hasher.finalize())
}

pub fn sha256_file(path: &Path) -> Result<String, DataError> {
    let bytes = fs::read(path).map_err(|_| DataError::FileNotFound {
        path: path.display().to_string(),
    })?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_cache(path: &Path, cache: &DatasetCache) -> Result<(), DataError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let json = serde_json::to_vec(cache).expect("cache serializes");
    fs::write(path, json)?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<DatasetCache, DataError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| DataError::CacheDecode(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_dataset, split_dataset, RawLogRecord};

    fn sample_cache() -> DatasetCache {
        let records: Vec<RawLogRecord> = (0..20)
            .map(|i| RawLogRecord {
                student_key: format!("s{}", i % 3),
                exercise_key: format!("e{}", i % 5),
                concept_keys: vec![format!("c{}", i % 2)],
                correct: (i % 2) as u8,
                order_hint: None,
            })
            .collect();
        let dataset = build_dataset(&records).unwrap();
        let split = split_dataset(&dataset, 0.2, 9).unwrap();
        DatasetCache::new(
            CacheKey {
                source_sha256: sha256_hex(b"source"),
                seed: 9,
                test_ratio: 0.2,
                options: "generic-csv".into(),
            },
            dataset,
            split,
        )
    }

    #[test]
    fn cache_roundtrips_exactly() {
        let cache = sample_cache();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.cache.json");
        save_cache(&path, &cache).unwrap();
        let loaded = load_cache(&path).unwrap();
        assert_eq!(loaded, cache);
        // byte-equal on re-save
        save_cache(&dir.path().join("ds2.cache.json"), &loaded).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(dir.path().join("ds2.cache.json")).unwrap()
        );
    }

    #[test]
    fn dataset_hash_tracks_content() {
        let cache = sample_cache();
        let mut other = cache.clone();
        other.split.seed = 10;
        assert_ne!(
            dataset_content_hash(&cache.dataset, &cache.split),
            dataset_content_hash(&other.dataset, &other.split)
        );
    }

    #[test]
    fn corrupt_cache_is_a_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, b"{not json").unwrap();
        assert!(matches!(load_cache(&path), Err(DataError::CacheDecode(_))));
    }
}
