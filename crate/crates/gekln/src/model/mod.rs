//! The Graph-EKLN forward computation.
//!
//! A (student, exercise) pair is scored in two spaces and fused:
//!
//! - exercise space: initial embeddings U, V are propagated through L
//!   link-typed convolution layers over the bipartite graph; each layer
//!   mean-aggregates MLP-transformed neighbor embeddings per link type
//!   and adds an MLP self-transform. Per-layer embeddings are
//!   concatenated and the score is the inner product of the concatenated
//!   student and exercise rows.
//! - knowledge space: students X and concepts Y stay at their original
//!   embeddings (no propagation); the score is the mean inner product of
//!   the student row against the exercise's concepts.
//!
//! The fused prediction is `exercise_score + alpha * knowledge_score`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, QMatrix};
use crate::diff::{xavier_init, DiffError, NodeId, ParameterStore, Segments, SlotId, Tape, Tensor};
use crate::graph::{GraphSide, LinkType, TypedBipartiteGraph};
use crate::seeding;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("exercise {exercise} has no related concepts")]
    EmptyConceptSet { exercise: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Hyperparameters of the Graph-EKLN family. The ablation variants are
/// this struct with `use_gcn` / `use_knowledge_head` toggled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Embedding dimension D.
    pub embed_dim: usize,
    /// Propagation layer count L.
    pub layers: usize,
    /// Fusion weight on the knowledge-space score.
    pub alpha: f64,
    /// MLP hidden width; `None` means equal to `embed_dim`.
    pub mlp_hidden: Option<usize>,
    pub leaky_slope: f64,
    /// When off, scoring uses the initial embeddings only (no layers).
    pub use_gcn: bool,
    /// When off, the alpha term is dropped entirely.
    pub use_knowledge_head: bool,
    /// Share aggregation MLPs across layers.
    pub share_layers: bool,
    /// Share aggregation MLPs between the student and exercise sides.
    pub share_sides: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 128,
            layers: 2,
            alpha: 1.0,
            mlp_hidden: None,
            leaky_slope: 0.01,
            use_gcn: true,
            use_knowledge_head: true,
            share_layers: false,
            share_sides: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.embed_dim < 1 {
            return Err(ModelError::InvalidConfig("embed_dim must be >= 1".into()));
        }
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(ModelError::InvalidConfig("alpha must be >= 0".into()));
        }
        if self.mlp_hidden == Some(0) {
            return Err(ModelError::InvalidConfig("mlp_hidden must be >= 1".into()));
        }
        if !self.leaky_slope.is_finite() {
            return Err(ModelError::InvalidConfig(
                "leaky_slope must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn hidden_width(&self) -> usize {
        self.mlp_hidden.unwrap_or(self.embed_dim)
    }

    /// Layers that actually run in the forward pass.
    pub fn effective_layers(&self) -> usize {
        if self.use_gcn {
            self.layers
        } else {
            0
        }
    }
}

/// Index-space sizes the model is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDims {
    pub num_students: usize,
    pub num_exercises: usize,
    pub num_concepts: usize,
}

impl From<&Dataset> for ProblemDims {
    fn from(ds: &Dataset) -> Self {
        ProblemDims {
            num_students: ds.num_students,
            num_exercises: ds.num_exercises,
            num_concepts: ds.num_concepts,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct MlpSlots {
    w1: SlotId,
    w2: SlotId,
}

#[derive(Debug, Clone, Copy)]
struct SideSlots {
    self_transform: MlpSlots,
    incorrect: MlpSlots,
    correct: MlpSlots,
}

#[derive(Debug, Clone, Copy)]
struct LayerSlots {
    student: SideSlots,
    exercise: SideSlots,
}

#[derive(Debug, Clone)]
struct Layout {
    u: SlotId,
    v: SlotId,
    x: Option<SlotId>,
    y: Option<SlotId>,
    layers: Vec<LayerSlots>,
}

/// Aggregation views of the graph and Q-matrix, shared across forward
/// passes so the CSR structures are built once.
pub struct GraphContext {
    student_segments: [Arc<Segments>; 2],
    exercise_segments: [Arc<Segments>; 2],
    concept_segments: Arc<Segments>,
}

impl GraphContext {
    pub fn new(graph: &TypedBipartiteGraph, q: &QMatrix) -> GraphContext {
        let seg = |side: GraphSide, link: LinkType| {
            let (offsets, targets) = graph.csr(side, link);
            Arc::new(Segments::from_csr(offsets.to_vec(), targets.to_vec()))
        };
        let concept_lists: Vec<Vec<usize>> = (0..q.num_exercises())
            .map(|p| q.concepts(p).to_vec())
            .collect();
        GraphContext {
            student_segments: [
                seg(GraphSide::Student, LinkType::Incorrect),
                seg(GraphSide::Student, LinkType::Correct),
            ],
            exercise_segments: [
                seg(GraphSide::Exercise, LinkType::Incorrect),
                seg(GraphSide::Exercise, LinkType::Correct),
            ],
            concept_segments: Arc::new(Segments::from_lists(&concept_lists)),
        }
    }
}

/// Output nodes of one forward pass on a tape.
pub struct ForwardPass {
    /// M x (L+1)D concatenated student embeddings (M x D without GCN).
    pub h_s: NodeId,
    /// N x (L+1)D concatenated exercise embeddings.
    pub h_p: NodeId,
    /// M x D knowledge-space student embeddings, when the head is on.
    pub x: Option<NodeId>,
    /// N x D per-exercise mean of concept embeddings.
    pub y_mean: Option<NodeId>,
}

/// Frozen-parameter embeddings extracted from a forward pass.
pub struct Embeddings {
    pub h_s: Tensor,
    pub h_p: Tensor,
    pub x: Option<Tensor>,
    pub y_mean: Option<Tensor>,
    alpha: f64,
    use_knowledge_head: bool,
}

/// Graph-EKLN parameter layout plus forward computation.
#[derive(Debug)]
pub struct GeklnModel {
    config: ModelConfig,
    dims: ProblemDims,
    layout: Layout,
}

impl GeklnModel {
    /// Allocate and Xavier-initialize all parameters in `store`. Each
    /// slot's draw is seeded by (seed, slot name), so configs that share
    /// slot names draw identical values regardless of which other slots
    /// exist.
    pub fn new(
        config: ModelConfig,
        dims: ProblemDims,
        seed: u64,
        store: &mut ParameterStore,
    ) -> Result<GeklnModel, ModelError> {
        config.validate()?;
        let d = config.embed_dim;
        let hidden = config.hidden_width();

        // reuse slots already present (checkpoint loads), else initialize
        let mut alloc = |name: String, rows: usize, cols: usize| -> Result<SlotId, ModelError> {
            match store.find(&name) {
                Some(id) => {
                    if store.value(id).shape() != [rows, cols] {
                        return Err(ModelError::InvalidConfig(format!(
                            "existing parameter {name:?} has shape {:?}, expected [{rows}, {cols}]",
                            store.value(id).shape()
                        )));
                    }
                    Ok(id)
                }
                None => {
                    let t = xavier_init(rows, cols, seeding::mix_label(seed, &name));
                    Ok(store.add(name, t))
                }
            }
        };

        let u = alloc("u".into(), dims.num_students, d)?;
        let v = alloc("v".into(), dims.num_exercises, d)?;
        let (x, y) = if config.use_knowledge_head {
            (
                Some(alloc("x".into(), dims.num_students, d)?),
                Some(alloc("y".into(), dims.num_concepts, d)?),
            )
        } else {
            (None, None)
        };

        let mut layers = Vec::new();
        if config.use_gcn {
            for l in 0..config.layers {
                let layer_tag = if config.share_layers {
                    "L*".to_string()
                } else {
                    format!("L{l}")
                };
                let mut sides = Vec::with_capacity(2);
                for side_name in ["student", "exercise"] {
                    let side_tag = if config.share_sides { "both" } else { side_name };
                    let mut mlps = Vec::with_capacity(3);
                    for role in ["self", "f0", "f1"] {
                        let w1 = alloc(format!("{layer_tag}.{side_tag}.{role}.w1"), d, hidden)?;
                        let w2 = alloc(format!("{layer_tag}.{side_tag}.{role}.w2"), hidden, d)?;
                        mlps.push(MlpSlots { w1, w2 });
                    }
                    sides.push(SideSlots {
                        self_transform: mlps[0],
                        incorrect: mlps[1],
                        correct: mlps[2],
                    });
                }
                layers.push(LayerSlots {
                    student: sides[0],
                    exercise: sides[1],
                });
            }
        }

        Ok(GeklnModel {
            config,
            dims,
            layout: Layout { u, v, x, y, layers },
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }

    /// Two-layer perceptron `sigma(sigma(h W1) W2)` with LeakyReLU.
    fn mlp(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        slots: MlpSlots,
        input: NodeId,
    ) -> Result<NodeId, DiffError> {
        let w1 = tape.param(store, slots.w1);
        let z1 = tape.matmul(input, w1)?;
        let a1 = tape.leaky_relu(z1, self.config.leaky_slope);
        let w2 = tape.param(store, slots.w2);
        let z2 = tape.matmul(a1, w2)?;
        Ok(tape.leaky_relu(z2, self.config.leaky_slope))
    }

    /// One propagation layer on the tape. For each node, per-link-type
    /// transformed neighbor means plus a transformed self term; empty
    /// neighbor sets contribute a zero row.
    pub fn propagate_layer_on_tape(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        ctx: &GraphContext,
        h_s: NodeId,
        h_p: NodeId,
        layer: usize,
    ) -> Result<(NodeId, NodeId), ModelError> {
        let idx = if self.config.share_layers { 0 } else { layer };
        let slots = *self.layout.layers.get(idx).ok_or_else(|| {
            ModelError::InvalidConfig(format!(
                "layer {layer} out of range for a {}-layer stack",
                self.layout.layers.len()
            ))
        })?;

        let aggregate_side = |tape: &mut Tape,
                              side: SideSlots,
                              own: NodeId,
                              other: NodeId,
                              segments: &[Arc<Segments>; 2]|
         -> Result<NodeId, ModelError> {
            let t0 = self.mlp(tape, store, side.incorrect, other)?;
            let agg0 = tape.segment_mean(t0, segments[0].clone())?;
            let t1 = self.mlp(tape, store, side.correct, other)?;
            let agg1 = tape.segment_mean(t1, segments[1].clone())?;
            let own_t = self.mlp(tape, store, side.self_transform, own)?;
            let sum = tape.add(agg0, agg1)?;
            Ok(tape.add(sum, own_t)?)
        };

        let next_s = aggregate_side(tape, slots.student, h_s, h_p, &ctx.student_segments)?;
        let next_p = aggregate_side(tape, slots.exercise, h_p, h_s, &ctx.exercise_segments)?;
        Ok((next_s, next_p))
    }

    /// Full forward pass: propagation stack, layer concatenation, and
    /// the knowledge head's per-exercise concept means.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        ctx: &GraphContext,
    ) -> Result<ForwardPass, ModelError> {
        let mut s_layers = vec![tape.param(store, self.layout.u)];
        let mut p_layers = vec![tape.param(store, self.layout.v)];
        for l in 0..self.config.effective_layers() {
            let (s, p) = self.propagate_layer_on_tape(
                tape,
                store,
                ctx,
                *s_layers.last().unwrap(),
                *p_layers.last().unwrap(),
                l,
            )?;
            s_layers.push(s);
            p_layers.push(p);
        }
        let h_s = if s_layers.len() == 1 {
            s_layers[0]
        } else {
            tape.concat_cols(&s_layers)?
        };
        let h_p = if p_layers.len() == 1 {
            p_layers[0]
        } else {
            tape.concat_cols(&p_layers)?
        };

        let (x, y_mean) = if self.config.use_knowledge_head {
            let x = tape.param(store, self.layout.x.expect("knowledge head slots"));
            let y = tape.param(store, self.layout.y.expect("knowledge head slots"));
            let y_mean = tape.segment_mean(y, ctx.concept_segments.clone())?;
            (Some(x), Some(y_mean))
        } else {
            (None, None)
        };

        Ok(ForwardPass {
            h_s,
            h_p,
            x,
            y_mean,
        })
    }

    /// Fused predictions for a batch of pairs as a tape node, reusing a
    /// single forward pass for all pairs.
    pub fn predict_batch_on_tape(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        ctx: &GraphContext,
        pairs: Arc<Vec<(usize, usize)>>,
    ) -> Result<NodeId, ModelError> {
        let fwd = self.forward_on_tape(tape, store, ctx)?;
        let exercise_scores = tape.inner_product_rows_at(fwd.h_s, fwd.h_p, pairs.clone())?;
        match (fwd.x, fwd.y_mean) {
            (Some(x), Some(y_mean)) => {
                let knowledge_scores = tape.inner_product_rows_at(x, y_mean, pairs)?;
                let weighted = tape.scale(knowledge_scores, self.config.alpha);
                Ok(tape.add(exercise_scores, weighted)?)
            }
            _ => Ok(exercise_scores),
        }
    }

    /// Run a forward pass and extract frozen embeddings.
    pub fn forward_embeddings(
        &self,
        store: &ParameterStore,
        ctx: &GraphContext,
    ) -> Result<Embeddings, ModelError> {
        let mut tape = Tape::new();
        let fwd = self.forward_on_tape(&mut tape, store, ctx)?;
        Ok(Embeddings {
            h_s: tape.value(fwd.h_s).clone(),
            h_p: tape.value(fwd.h_p).clone(),
            x: fwd.x.map(|n| tape.value(n).clone()),
            y_mean: fwd.y_mean.map(|n| tape.value(n).clone()),
            alpha: self.config.alpha,
            use_knowledge_head: self.config.use_knowledge_head,
        })
    }

    /// Batch predictions with one forward pass; elementwise equal to
    /// [`Embeddings::predict`] on each pair.
    pub fn predict_batch(
        &self,
        store: &ParameterStore,
        ctx: &GraphContext,
        pairs: &[(usize, usize)],
    ) -> Result<Vec<f64>, ModelError> {
        let mut tape = Tape::new();
        let preds = self.predict_batch_on_tape(&mut tape, store, ctx, Arc::new(pairs.to_vec()))?;
        Ok(tape.value(preds).data().to_vec())
    }

    /// Single-layer propagation on plain tensors (testing hook).
    pub fn propagate_layer(
        &self,
        store: &ParameterStore,
        ctx: &GraphContext,
        h_s: &Tensor,
        h_p: &Tensor,
        layer: usize,
    ) -> Result<(Tensor, Tensor), ModelError> {
        let mut tape = Tape::new();
        let s = tape.constant(h_s.clone());
        let p = tape.constant(h_p.clone());
        let (ns, np) = self.propagate_layer_on_tape(&mut tape, store, ctx, s, p, layer)?;
        Ok((tape.value(ns).clone(), tape.value(np).clone()))
    }
}

impl Embeddings {
    /// Fused score for one pair: exercise-space inner product plus
    /// alpha-weighted knowledge-space score.
    pub fn predict(&self, s: usize, p: usize) -> f64 {
        let mut score = score_exercise_space(&self.h_s, &self.h_p, s, p);
        if self.use_knowledge_head {
            let x = self.x.as_ref().expect("knowledge embeddings present");
            let y_mean = self.y_mean.as_ref().expect("knowledge embeddings present");
            score += self.alpha * row_dot(x.row(s), y_mean.row(p));
        }
        score
    }
}

fn row_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Inner product of concatenated embeddings for one pair.
pub fn score_exercise_space(h_s: &Tensor, h_p: &Tensor, s: usize, p: usize) -> f64 {
    row_dot(h_s.row(s), h_p.row(p))
}

/// Mean inner product of a student's knowledge embedding against the
/// exercise's concept embeddings. X and Y are never propagated.
pub fn score_knowledge_space(
    x: &Tensor,
    y: &Tensor,
    q: &QMatrix,
    s: usize,
    p: usize,
) -> Result<f64, ModelError> {
    let concepts = q.concepts(p);
    if concepts.is_empty() {
        return Err(ModelError::EmptyConceptSet { exercise: p });
    }
    let d = y.cols();
    let mut mean = vec![0.0; d];
    for &k in concepts {
        for (m, &v) in mean.iter_mut().zip(y.row(k)) {
            *m += v;
        }
    }
    let inv = 1.0 / concepts.len() as f64;
    for m in &mut mean {
        *m *= inv;
    }
    Ok(row_dot(x.row(s), &mean))
}

/// Row-wise concatenation of per-layer embedding matrices, layer order
/// preserved.
pub fn concat_layers(layers: &[Tensor]) -> Tensor {
    assert!(!layers.is_empty());
    let rows = layers[0].rows();
    let cols: usize = layers.iter().map(|t| t.cols()).sum();
    let mut out = Tensor::zeros(rows, cols);
    let mut col_off = 0;
    for t in layers {
        assert_eq!(t.rows(), rows, "layer row counts must match");
        for i in 0..rows {
            let dst_start = i * cols + col_off;
            out.data_mut()[dst_start..dst_start + t.cols()].copy_from_slice(t.row(i));
        }
        col_off += t.cols();
    }
    out
}
