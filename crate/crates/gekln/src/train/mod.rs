//! Squared-loss training on the fused prediction, evaluation metrics,
//! and the ablation / alpha-sweep experiment protocols.
//!
//! A training step always re-runs the full-graph forward pass (the
//! propagation couples all nodes) and masks the loss to the batch's
//! triplets; `batch_size = 0` uses all train logs per step. Epoch
//! shuffles draw from a stream derived from (seed, epoch), so resuming
//! from a checkpoint replays exactly the schedule an uninterrupted run
//! would have used.

mod experiments;
mod metrics;

pub use experiments::{
    config_fingerprint, run_ablation, run_alpha_sweep, write_ablation_csv, write_sweep_csv,
    ExperimentRun, DEFAULT_ALPHAS,
};
pub use metrics::{accuracy, auc, rmse, rmse_raw, squared_loss, MetricError, MetricsReport};

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::InteractionLog;
use crate::diff::{
    optimizer_step, DiffError, OptimizerConfig, OptimizerKind, ParameterStore, Tape, Tensor,
};
use crate::graph::GraphError;
use crate::model::{GeklnModel, GraphContext, ModelError};
use crate::seeding;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
}

/// Training-loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// 0 = full batch.
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Evaluate test metrics every this many epochs; 0 disables.
    pub eval_every: usize,
    /// Stop after this many evaluations without an AUC improvement;
    /// 0 disables early stopping.
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            batch_size: 0,
            lr: 0.001,
            seed: 42,
            optimizer: OptimizerKind::Adaptive,
            eval_every: 1,
            early_stop_patience: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < 1 {
            return Err(TrainError::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::InvalidConfig(
                "lr must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Plain metric values for one evaluation (report assembly happens at
/// the experiment layer, which knows the provenance fields).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMetrics {
    pub accuracy: f64,
    pub rmse: f64,
    pub auc: f64,
    pub n: usize,
}

/// Best-so-far snapshot for early stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSnapshot {
    pub auc: f64,
    pub epoch: usize,
    pub values: Vec<Tensor>,
}

/// Resumable loop position.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// Next epoch index to run.
    pub next_epoch: usize,
    pub best: Option<BestSnapshot>,
    /// Evaluations since the last AUC improvement.
    pub stale_evals: usize,
}

impl TrainState {
    pub fn fresh() -> TrainState {
        TrainState::default()
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Mean train squared loss per completed epoch (this call only).
    pub loss_history: Vec<f64>,
    /// (epoch, metrics) at each evaluation point (this call only).
    pub eval_history: Vec<(usize, RawMetrics)>,
    pub state: TrainState,
    pub stopped_early: bool,
}

impl TrainResult {
    /// Parameter values the run selects: the best-AUC snapshot when
    /// early stopping tracked one, otherwise the final values.
    pub fn selected_parameters(&self, store: &ParameterStore) -> Vec<Tensor> {
        match &self.state.best {
            Some(best) => best.values.clone(),
            None => store.values_snapshot(),
        }
    }
}

/// Compute test metrics from frozen parameters.
pub fn evaluate(
    model: &GeklnModel,
    store: &ParameterStore,
    ctx: &GraphContext,
    logs: &[InteractionLog],
) -> Result<RawMetrics, TrainError> {
    let pairs: Vec<(usize, usize)> = logs.iter().map(|l| (l.student, l.exercise)).collect();
    let preds = model.predict_batch(store, ctx, &pairs)?;
    let labels: Vec<u8> = logs.iter().map(|l| l.score).collect();
    Ok(RawMetrics {
        accuracy: accuracy(&preds, &labels, 0.5)?,
        rmse: rmse(&preds, &labels)?,
        auc: auc(&preds, &labels)?,
        n: logs.len(),
    })
}

/// Train from a fresh state. See [`train_from`].
pub fn train(
    model: &GeklnModel,
    store: &mut ParameterStore,
    ctx: &GraphContext,
    train_logs: &[InteractionLog],
    test_logs: &[InteractionLog],
    cfg: &TrainConfig,
) -> Result<TrainResult, TrainError> {
    train_from(
        model,
        store,
        ctx,
        train_logs,
        test_logs,
        cfg,
        TrainState::fresh(),
    )
}

/// Run the training loop from `state` up to `cfg.epochs`, mutating the
/// store in place. Per epoch: seeded shuffle, batched forward /
/// squared-loss / backward / optimizer step; every `eval_every` epochs
/// test metrics are recorded and early stopping is applied when enabled.
pub fn train_from(
    model: &GeklnModel,
    store: &mut ParameterStore,
    ctx: &GraphContext,
    train_logs: &[InteractionLog],
    test_logs: &[InteractionLog],
    cfg: &TrainConfig,
    mut state: TrainState,
) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    let total = train_logs.len();
    if total == 0 {
        return Err(TrainError::InvalidConfig("train set is empty".into()));
    }
    let opt = OptimizerConfig {
        kind: cfg.optimizer,
        ..OptimizerConfig::adaptive(cfg.lr)
    };

    let mut loss_history = Vec::new();
    let mut eval_history = Vec::new();
    let mut stopped_early = false;

    for epoch in state.next_epoch..cfg.epochs {
        let mut order: Vec<usize> = (0..total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::mix(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        let batch_size = if cfg.batch_size == 0 {
            total
        } else {
            cfg.batch_size
        };

        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            let pairs: Arc<Vec<(usize, usize)>> = Arc::new(
                chunk
                    .iter()
                    .map(|&i| (train_logs[i].student, train_logs[i].exercise))
                    .collect(),
            );
            let labels: Vec<f64> = chunk.iter().map(|&i| train_logs[i].score as f64).collect();

            let mut tape = Tape::new();
            let preds = model.predict_batch_on_tape(&mut tape, store, ctx, pairs)?;
            let target = tape.constant(Tensor::column(labels));
            let residual = tape.sub(target, preds)?;
            let squared = tape.square(residual);
            let loss = tape.mean_all(squared);
            epoch_loss += tape.value(loss).data()[0] * chunk.len() as f64;
            tape.backward(loss, store)?;
            optimizer_step(store, &opt);
        }
        loss_history.push(epoch_loss / total as f64);
        state.next_epoch = epoch + 1;

        if !test_logs.is_empty() && cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0 {
            let m = evaluate(model, store, ctx, test_logs)?;
            eval_history.push((epoch, m));
            if cfg.early_stop_patience > 0 {
                let improved = state.best.as_ref().is_none_or(|b| m.auc > b.auc);
                if improved {
                    state.best = Some(BestSnapshot {
                        auc: m.auc,
                        epoch,
                        values: store.values_snapshot(),
                    });
                    state.stale_evals = 0;
                } else {
                    state.stale_evals += 1;
                    if state.stale_evals >= cfg.early_stop_patience {
                        stopped_early = true;
                        break;
                    }
                }
            }
        }
    }

    Ok(TrainResult {
        loss_history,
        eval_history,
        state,
        stopped_early,
    })
}
