use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::baselines::{make_baseline, BaselineKind};
use crate::data::{Dataset, Split};
use crate::diff::ParameterStore;
use crate::graph::build_graph;
use crate::model::{GeklnModel, GraphContext, ModelConfig, ProblemDims};

use super::{evaluate, train, MetricsReport, TrainConfig, TrainError};

/// One trained-and-evaluated configuration.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub label: String,
    pub report: MetricsReport,
}

/// Short content hash identifying a (model, train) configuration pair.
pub fn config_fingerprint(model: &ModelConfig, train: &TrainConfig) -> String {
    let blob = serde_json::to_vec(&(model, train)).expect("configs serialize");
    crate::data::sha256_hex(&blob)[..16].to_string()
}

fn run_one(
    ctx: &GraphContext,
    dataset: &Dataset,
    split: &Split,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    dataset_hash: &str,
    label: &str,
) -> Result<ExperimentRun, TrainError> {
    let mut store = ParameterStore::new();
    let model = GeklnModel::new(
        model_cfg.clone(),
        ProblemDims::from(dataset),
        train_cfg.seed,
        &mut store,
    )?;
    let result = train(
        &model,
        &mut store,
        ctx,
        &split.train,
        &split.test,
        train_cfg,
    )?;
    let selected = result.selected_parameters(&store);
    store.load_values(&selected);
    let m = evaluate(&model, &store, ctx, &split.test)?;
    Ok(ExperimentRun {
        label: label.to_string(),
        report: MetricsReport::new(
            m.accuracy,
            m.rmse,
            m.auc,
            m.n,
            config_fingerprint(model_cfg, train_cfg),
            train_cfg.seed,
            dataset_hash.to_string(),
        ),
    })
}

/// Train and evaluate a list of labeled configurations under identical
/// seed and split. `jobs > 1` runs configurations on worker threads;
/// results are positionally ordered and bitwise independent of the
/// scheduling, since every run owns its parameters and RNG streams.
pub fn run_grid(
    dataset: &Dataset,
    split: &Split,
    configs: &[(String, ModelConfig)],
    train_cfg: &TrainConfig,
    dataset_hash: &str,
    jobs: usize,
) -> Result<Vec<ExperimentRun>, TrainError> {
    let graph = build_graph(&split.train, dataset.num_students, dataset.num_exercises)?;
    let ctx = GraphContext::new(&graph, &dataset.q_matrix);
    let slots: Vec<Mutex<Option<Result<ExperimentRun, TrainError>>>> =
        configs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(configs.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let (label, cfg) = &configs[i];
                let run = run_one(&ctx, dataset, split, cfg, train_cfg, dataset_hash, label);
                *slots[i].lock().unwrap() = Some(run);
            });
        }
    });

    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
        .collect()
}

/// The four-way component ablation: plain MF, MF plus knowledge head,
/// propagation only, and the full model — identical seeds and split.
pub fn run_ablation(
    dataset: &Dataset,
    split: &Split,
    base: &ModelConfig,
    train_cfg: &TrainConfig,
    dataset_hash: &str,
    jobs: usize,
) -> Result<Vec<ExperimentRun>, TrainError> {
    let configs = vec![
        ("mf".to_string(), make_baseline(base, BaselineKind::Mf)),
        (
            "mf-tem".to_string(),
            make_baseline(base, BaselineKind::MfTem),
        ),
        ("r-gcn".to_string(), make_baseline(base, BaselineKind::Rgcn)),
        ("graph-ekln".to_string(), base.clone()),
    ];
    run_grid(dataset, split, &configs, train_cfg, dataset_hash, jobs)
}

/// Default sweep grid for the fusion weight.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.1, 1.0, 5.0, 10.0];

/// One trained model per alpha, identical seed and split.
pub fn run_alpha_sweep(
    dataset: &Dataset,
    split: &Split,
    base: &ModelConfig,
    train_cfg: &TrainConfig,
    alphas: &[f64],
    dataset_hash: &str,
    jobs: usize,
) -> Result<Vec<(f64, MetricsReport)>, TrainError> {
    assert!(!alphas.is_empty(), "alpha sweep needs at least one value");
    let configs: Vec<(String, ModelConfig)> = alphas
        .iter()
        .map(|&alpha| {
            let mut cfg = base.clone();
            cfg.alpha = alpha;
            (format!("alpha={alpha}"), cfg)
        })
        .collect();
    let runs = run_grid(dataset, split, &configs, train_cfg, dataset_hash, jobs)?;
    Ok(alphas
        .iter()
        .copied()
        .zip(runs.into_iter().map(|r| r.report))
        .collect())
}

/// `model,accuracy,rmse,auc` with 6-decimal fixed-point reals.
pub fn write_ablation_csv<W: Write>(mut w: W, runs: &[ExperimentRun]) -> std::io::Result<()> {
    writeln!(w, "model,accuracy,rmse,auc")?;
    for run in runs {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            run.label, run.report.accuracy, run.report.rmse, run.report.auc
        )?;
    }
    Ok(())
}

/// `alpha,accuracy,rmse,auc` with 6-decimal fixed-point reals.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[(f64, MetricsReport)]) -> std::io::Result<()> {
    writeln!(w, "alpha,accuracy,rmse,auc")?;
    for (alpha, report) in rows {
        writeln!(
            w,
            "{alpha},{:.6},{:.6},{:.6}",
            report.accuracy, report.rmse, report.auc
        )?;
    }
    Ok(())
}
