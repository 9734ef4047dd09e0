//! Reference predictors: Student Average, one/two-parameter IRT, and the
//! Graph-EKLN configurations (MF, MF-TEM, R-GCN) used by the ablation
//! grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::InteractionLog;
use crate::diff::{optimizer_step, OptimizerConfig, ParameterStore, Tape, Tensor};
use crate::model::ModelConfig;

/// Predicts a student's train-time mean score for every exercise;
/// students unseen in training fall back to the global train mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentAverageModel {
    means: Vec<Option<f64>>,
    global_mean: f64,
}

pub fn student_average_fit(train: &[InteractionLog], num_students: usize) -> StudentAverageModel {
    let mut sums = vec![0.0f64; num_students];
    let mut counts = vec![0usize; num_students];
    for log in train {
        sums[log.student] += log.score as f64;
        counts[log.student] += 1;
    }
    let total: usize = counts.iter().sum();
    let global_mean = if total == 0 {
        0.5
    } else {
        sums.iter().sum::<f64>() / total as f64
    };
    let means = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { None } else { Some(s / c as f64) })
        .collect();
    StudentAverageModel { means, global_mean }
}

pub fn student_average_predict(model: &StudentAverageModel, s: usize, _p: usize) -> f64 {
    model
        .means
        .get(s)
        .copied()
        .flatten()
        .unwrap_or(model.global_mean)
}

impl StudentAverageModel {
    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }
}

/// Exercise discrimination in the IRT response function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Discrimination {
    Fixed(f64),
    PerExercise(Vec<f64>),
}

/// One-dimensional latent trait model: ability theta per student,
/// difficulty beta per exercise, logistic response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtModel {
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub discrimination: Discrimination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Learn a per-exercise discrimination (2PL) instead of fixing a=1.
    pub two_parameter: bool,
}

impl Default for IrtConfig {
    fn default() -> Self {
        IrtConfig {
            epochs: 200,
            lr: 0.01,
            two_parameter: false,
        }
    }
}

/// Fit by full-batch gradient descent on the Bernoulli cross-entropy.
pub fn irt_fit(
    train: &[InteractionLog],
    num_students: usize,
    num_exercises: usize,
    cfg: &IrtConfig,
) -> IrtModel {
    let mut store = ParameterStore::new();
    let theta = store.add("theta", Tensor::zeros(num_students, 1));
    let beta = store.add("beta", Tensor::zeros(num_exercises, 1));
    let disc = if cfg.two_parameter {
        Some(store.add(
            "disc",
            Tensor::from_vec(num_exercises, 1, vec![1.0; num_exercises]),
        ))
    } else {
        None
    };

    let students: Arc<Vec<usize>> = Arc::new(train.iter().map(|l| l.student).collect());
    let exercises: Arc<Vec<usize>> = Arc::new(train.iter().map(|l| l.exercise).collect());
    let labels: Arc<Vec<f64>> = Arc::new(train.iter().map(|l| l.score as f64).collect());
    let opt = OptimizerConfig::adaptive(cfg.lr);

    for _ in 0..cfg.epochs {
        let mut tape = Tape::new();
        let t = tape.param(&store, theta);
        let b = tape.param(&store, beta);
        let ts = tape
            .row_gather(t, students.clone())
            .expect("indices in range");
        let bs = tape
            .row_gather(b, exercises.clone())
            .expect("indices in range");
        let mut logits = tape.sub(ts, bs).expect("same shape");
        if let Some(disc) = disc {
            let a = tape.param(&store, disc);
            let ap = tape
                .row_gather(a, exercises.clone())
                .expect("indices in range");
            logits = tape.mul(ap, logits).expect("same shape");
        }
        let loss = tape
            .bce_with_logits(logits, labels.clone())
            .expect("lengths match");
        tape.backward(loss, &mut store).expect("trace present");
        optimizer_step(&mut store, &opt);
    }

    IrtModel {
        theta: store.value(theta).data().to_vec(),
        beta: store.value(beta).data().to_vec(),
        discrimination: match disc {
            Some(d) => Discrimination::PerExercise(store.value(d).data().to_vec()),
            None => Discrimination::Fixed(1.0),
        },
    }
}

/// Probability of a correct answer: `logistic(a * (theta_s - beta_p))`.
pub fn irt_predict(model: &IrtModel, s: usize, p: usize) -> f64 {
    let a = match &model.discrimination {
        Discrimination::Fixed(a) => *a,
        Discrimination::PerExercise(v) => v[p],
    };
    let z = a * (model.theta[s] - model.beta[p]);
    1.0 / (1.0 + (-z).exp())
}

/// Ablation variants realized as Graph-EKLN configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Plain factorization: no knowledge head, no propagation.
    Mf,
    /// Factorization plus the knowledge head, no propagation.
    MfTem,
    /// Propagation only, no knowledge head.
    Rgcn,
}

/// Derive the ablation configuration from a base config, toggling only
/// the component flags.
pub fn make_baseline(base: &ModelConfig, kind: BaselineKind) -> ModelConfig {
    let mut cfg = base.clone();
    match kind {
        BaselineKind::Mf => {
            cfg.use_gcn = false;
            cfg.use_knowledge_head = false;
        }
        BaselineKind::MfTem => {
            cfg.use_gcn = false;
            cfg.use_knowledge_head = true;
        }
        BaselineKind::Rgcn => {
            cfg.use_gcn = true;
            cfg.use_knowledge_head = false;
        }
    }
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn log(s: usize, p: usize, score: u8) -> InteractionLog {
        InteractionLog {
            student: s,
            exercise: p,
            score,
        }
    }

    #[test]
    fn student_average_is_the_train_mean() {
        let model = student_average_fit(&[log(0, 0, 1), log(0, 1, 0), log(0, 2, 1)], 2);
        for p in 0..10 {
            let got = student_average_predict(&model, 0, p);
            assert!((got - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unseen_student_gets_global_mean() {
        let model = student_average_fit(&[log(0, 0, 1), log(0, 1, 0)], 3);
        assert_eq!(model.global_mean(), 0.5);
        assert_eq!(student_average_predict(&model, 2, 0), 0.5);
        let skewed = student_average_fit(&[log(0, 0, 1), log(1, 0, 1), log(1, 1, 0)], 3);
        assert!((student_average_predict(&skewed, 2, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(student_average_predict(&skewed, 2, 0), skewed.global_mean());
    }

    #[test]
    fn student_average_predictions_are_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train: Vec<InteractionLog> = (0..200)
            .map(|_| {
                log(
                    rng.gen_range(0..20),
                    rng.gen_range(0..30),
                    rng.gen_range(0..2u32) as u8,
                )
            })
            .collect();
        let model = student_average_fit(&train, 20);
        for s in 0..20 {
            let v = student_average_predict(&model, s, 0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn irt_logistic_midpoint_and_tail() {
        let model = IrtModel {
            theta: vec![1.3, 4.0],
            beta: vec![1.3, 0.0],
            discrimination: Discrimination::Fixed(1.0),
        };
        assert!((irt_predict(&model, 0, 0) - 0.5).abs() < 1e-15);
        let tail = irt_predict(&model, 1, 1); // theta - beta = 4
        assert!((tail - 0.982).abs() < 5e-4, "{tail}");
    }

    #[test]
    fn irt_is_monotone_in_ability_and_difficulty() {
        let model = IrtModel {
            theta: vec![-1.0, 0.0, 1.0],
            beta: vec![-0.5, 0.5],
            discrimination: Discrimination::Fixed(1.0),
        };
        assert!(irt_predict(&model, 0, 0) < irt_predict(&model, 1, 0));
        assert!(irt_predict(&model, 1, 0) < irt_predict(&model, 2, 0));
        assert!(irt_predict(&model, 1, 1) < irt_predict(&model, 1, 0));
    }

    #[test]
    fn irt_recovers_synthetic_rankings() {
        // generate from known abilities/difficulties, expect high AUC
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 50;
        let n = 50;
        let theta: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.5..2.5)).collect();
        let beta: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.5..2.5)).collect();
        let mut train = Vec::new();
        let mut heldout = Vec::new();
        for (s, &ability) in theta.iter().enumerate() {
            for _ in 0..40 {
                let p = rng.gen_range(0..n);
                let prob = 1.0 / (1.0 + (-1.5 * (ability - beta[p])).exp());
                let score = u8::from(rng.gen::<f64>() < prob);
                if rng.gen::<f64>() < 0.8 {
                    train.push(log(s, p, score));
                } else {
                    heldout.push(log(s, p, score));
                }
            }
        }
        let model = irt_fit(&train, m, n, &IrtConfig::default());
        let preds: Vec<f64> = heldout
            .iter()
            .map(|l| irt_predict(&model, l.student, l.exercise))
            .collect();
        let labels: Vec<u8> = heldout.iter().map(|l| l.score).collect();
        let auc = crate::train::auc(&preds, &labels).unwrap();
        assert!(auc >= 0.85, "auc = {auc}");
        for pred in preds {
            assert!(pred > 0.0 && pred < 1.0);
        }
    }

    #[test]
    fn two_parameter_fit_learns_discriminations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let train: Vec<InteractionLog> = (0..300)
            .map(|_| {
                log(
                    rng.gen_range(0..10),
                    rng.gen_range(0..10),
                    rng.gen_range(0..2u32) as u8,
                )
            })
            .collect();
        let cfg = IrtConfig {
            two_parameter: true,
            epochs: 50,
            ..IrtConfig::default()
        };
        let model = irt_fit(&train, 10, 10, &cfg);
        match model.discrimination {
            Discrimination::PerExercise(ref a) => assert_eq!(a.len(), 10),
            _ => panic!("expected per-exercise discrimination"),
        }
        assert!(model.theta.iter().all(|v| v.is_finite()));
        assert!(model.beta.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn baseline_kinds_toggle_the_right_flags() {
        let base = ModelConfig::default();
        let mf = make_baseline(&base, BaselineKind::Mf);
        assert!(!mf.use_gcn && !mf.use_knowledge_head);
        let mf_tem = make_baseline(&base, BaselineKind::MfTem);
        assert!(!mf_tem.use_gcn && mf_tem.use_knowledge_head);
        assert_eq!(mf_tem.effective_layers(), 0);
        let rgcn = make_baseline(&base, BaselineKind::Rgcn);
        assert!(rgcn.use_gcn && !rgcn.use_knowledge_head);
    }
}
