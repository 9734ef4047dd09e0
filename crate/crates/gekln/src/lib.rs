//! Graph-EKLN: student performance prediction on interaction logs.
//!
//! The model scores a (student, exercise) pair as the sum of two parts:
//! an exercise-space score from link-typed graph convolution over the
//! student–exercise bipartite graph, and a knowledge-space score from a
//! plain factorization of students against the exercise's knowledge
//! concepts. Everything runs on a small dense-tensor tape engine with
//! reverse-mode gradients, so the whole pipeline is dependency-light and
//! bit-for-bit reproducible under a fixed seed.
//!
//! Module map:
//! - [`data`]: log parsing, preprocessing, index spaces, train/test splits
//! - [`graph`]: the typed bipartite adjacency used by propagation
//! - [`diff`]: tensors, tape autodiff, Xavier init, Adam/SGD
//! - [`model`]: the Graph-EKLN forward computation and scoring
//! - [`baselines`]: Student Average, IRT, and ablation configurations
//! - [`train`]: squared-loss training, metrics, ablation and alpha sweeps
//! - [`checkpoint`]: binary checkpoints with a JSON metadata header

pub mod baselines;
pub mod checkpoint;
pub mod data;
pub mod diff;
pub mod graph;
pub mod model;
pub mod seeding;
pub mod synth;
pub mod train;

pub use data::{Dataset, InteractionLog, QMatrix, RawLogRecord, Split};
pub use diff::{ParameterStore, Tensor};
pub use graph::TypedBipartiteGraph;
pub use model::{GeklnModel, ModelConfig};
pub use train::{MetricsReport, TrainConfig};
