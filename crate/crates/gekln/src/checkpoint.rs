//! Binary checkpoints: a JSON metadata header followed by raw little-
//! endian parameter, moment, and snapshot buffers. Values round-trip
//! bit-exactly, so training resumed from a checkpoint matches an
//! uninterrupted run.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{ParameterStore, Tensor};
use crate::model::{ModelConfig, ProblemDims};
use crate::train::{BestSnapshot, TrainConfig, TrainState};

const MAGIC: &[u8; 8] = b"GEKLNCP1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Everything needed to evaluate or resume a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub model: ModelConfig,
    pub dims: ProblemDims,
    pub train: TrainConfig,
    pub dataset_hash: String,
    pub seed: u64,
    /// Epochs completed (the next epoch index).
    pub epoch: usize,
    pub best_auc: Option<f64>,
    pub best_epoch: Option<usize>,
    pub stale_evals: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub store: ParameterStore,
    /// Best-AUC parameter snapshot, slot order matching the store.
    pub best_values: Option<Vec<Tensor>>,
}

impl Checkpoint {
    pub fn assemble(
        model: ModelConfig,
        dims: ProblemDims,
        train: TrainConfig,
        dataset_hash: String,
        state: &TrainState,
        stopped_early: bool,
        store: &ParameterStore,
    ) -> Checkpoint {
        Checkpoint {
            meta: CheckpointMeta {
                version: FORMAT_VERSION,
                seed: train.seed,
                model,
                dims,
                train,
                dataset_hash,
                epoch: state.next_epoch,
                best_auc: state.best.as_ref().map(|b| b.auc),
                best_epoch: state.best.as_ref().map(|b| b.epoch),
                stale_evals: state.stale_evals,
                stopped_early,
            },
            store: store.clone(),
            best_values: state.best.as_ref().map(|b| b.values.clone()),
        }
    }

    /// Loop position for resuming training.
    pub fn train_state(&self) -> TrainState {
        TrainState {
            next_epoch: self.meta.epoch,
            best: match (&self.best_values, self.meta.best_auc, self.meta.best_epoch) {
                (Some(values), Some(auc), Some(epoch)) => Some(BestSnapshot {
                    auc,
                    epoch,
                    values: values.clone(),
                }),
                _ => None,
            },
            stale_evals: self.meta.stale_evals,
        }
    }

    /// Parameter values to evaluate with: best snapshot when early
    /// stopping tracked one, final values otherwise.
    pub fn selected_values(&self) -> Vec<Tensor> {
        match &self.best_values {
            Some(v) => v.clone(),
            None => self.store.values_snapshot(),
        }
    }
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64s<W: Write>(w: &mut W, vs: &[f64]) -> std::io::Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_tensor<W: Write>(w: &mut W, t: &Tensor) -> std::io::Result<()> {
    write_u64(w, t.rows() as u64)?;
    write_u64(w, t.cols() as u64)?;
    write_f64s(w, t.data())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, CheckpointError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor, CheckpointError> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    if rows.checked_mul(cols).is_none() || rows * cols > (1 << 32) {
        return Err(CheckpointError::Corrupt("implausible tensor shape".into()));
    }
    Ok(Tensor::from_vec(rows, cols, read_f64s(r, rows * cols)?))
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let meta = serde_json::to_vec(&ckpt.meta).expect("meta serializes");
    write_u64(&mut w, meta.len() as u64)?;
    w.write_all(&meta)?;

    write_u64(&mut w, ckpt.store.step())?;
    write_u64(&mut w, ckpt.store.len() as u64)?;
    for slot in ckpt.store.slots() {
        write_u64(&mut w, slot.name.len() as u64)?;
        w.write_all(slot.name.as_bytes())?;
        write_tensor(&mut w, &slot.value)?;
    }
    // moments follow the values in the same slot order
    for id in ckpt.store.ids() {
        let (m, v) = ckpt.store.moments(id);
        write_tensor(&mut w, m)?;
        write_tensor(&mut w, v)?;
    }

    match &ckpt.best_values {
        Some(values) => {
            w.write_all(&[1u8])?;
            write_u64(&mut w, values.len() as u64)?;
            for t in values {
                write_tensor(&mut w, t)?;
            }
        }
        None => w.write_all(&[0u8])?,
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::Corrupt("bad magic".into()));
    }
    let meta_len = read_u64(&mut r)? as usize;
    if meta_len > (1 << 24) {
        return Err(CheckpointError::Corrupt("implausible header length".into()));
    }
    let mut meta_bytes = vec![0u8; meta_len];
    r.read_exact(&mut meta_bytes)?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta_bytes)
        .map_err(|e| CheckpointError::Corrupt(format!("meta: {e}")))?;
    if meta.version != FORMAT_VERSION {
        return Err(CheckpointError::Corrupt(format!(
            "unsupported version {}",
            meta.version
        )));
    }

    let step = read_u64(&mut r)?;
    let n_slots = read_u64(&mut r)? as usize;
    if n_slots > (1 << 20) {
        return Err(CheckpointError::Corrupt("implausible slot count".into()));
    }
    let mut store = ParameterStore::new();
    let mut ids = Vec::with_capacity(n_slots);
    for _ in 0..n_slots {
        let name_len = read_u64(&mut r)? as usize;
        if name_len > (1 << 16) {
            return Err(CheckpointError::Corrupt("implausible slot name".into()));
        }
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| CheckpointError::Corrupt("slot name not utf-8".into()))?;
        let value = read_tensor(&mut r)?;
        ids.push(store.add(name, value));
    }
    for &id in &ids {
        let m = read_tensor(&mut r)?;
        let v = read_tensor(&mut r)?;
        let value = store.value(id).clone();
        if m.shape() != value.shape() || v.shape() != value.shape() {
            return Err(CheckpointError::Corrupt("moment shape mismatch".into()));
        }
        store.restore_slot(id, value, m, v);
    }
    store.step = step;

    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let best_values = if flag[0] == 1 {
        let n = read_u64(&mut r)? as usize;
        if n != n_slots {
            return Err(CheckpointError::Corrupt(
                "snapshot slot count mismatch".into(),
            ));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(read_tensor(&mut r)?);
        }
        Some(values)
    } else {
        None
    };

    Ok(Checkpoint {
        meta,
        store,
        best_values,
    })
}
