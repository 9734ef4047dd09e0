use serde::{Deserialize, Serialize};

use super::params::ParameterStore;

/// Which update rule `optimizer_step` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Adam: bias-corrected first/second moment estimates.
    #[default]
    Adaptive,
    /// Plain stochastic gradient descent.
    Sgd,
}

/// Optimizer hyperparameters. Moment accumulators live in the store.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn adaptive(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adaptive,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Apply one update from the accumulated gradients, then zero them.
pub fn optimizer_step(store: &mut ParameterStore, cfg: &OptimizerConfig) {
    store.step += 1;
    let t = store.step;
    match cfg.kind {
        OptimizerKind::Adaptive => {
            let bc1 = 1.0 - cfg.beta1.powi(t as i32);
            let bc2 = 1.0 - cfg.beta2.powi(t as i32);
            for slot in store.slots_mut() {
                let g = slot.grad.data();
                let m = slot.m.data_mut();
                for (mi, gi) in m.iter_mut().zip(g) {
                    *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
                }
                let v = slot.v.data_mut();
                for (vi, gi) in v.iter_mut().zip(g) {
                    *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
                }
                let (m, v) = (slot.m.data(), slot.v.data());
                for ((p, mi), vi) in slot.value.data_mut().iter_mut().zip(m).zip(v) {
                    let m_hat = mi / bc1;
                    let v_hat = vi / bc2;
                    *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
                }
                slot.grad.fill(0.0);
            }
        }
        OptimizerKind::Sgd => {
            for slot in store.slots_mut() {
                let g = slot.grad.data();
                for (p, gi) in slot.value.data_mut().iter_mut().zip(g) {
                    *p -= cfg.lr * gi;
                }
                slot.grad.fill(0.0);
            }
        }
    }
}
