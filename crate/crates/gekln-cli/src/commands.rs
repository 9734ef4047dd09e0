use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gekln::baselines::{
    irt_fit, irt_predict, make_baseline, student_average_fit, student_average_predict,
    BaselineKind, IrtModel, StudentAverageModel,
};
use gekln::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
use gekln::data::{
    build_dataset, load_cache, merge_concepts_per_exercise, merge_duplicate_attempts,
    parse_log_file, save_cache, sha256_file, split_dataset, CacheKey, DataError, Dataset,
    DatasetCache,
};
use gekln::diff::ParameterStore;
use gekln::graph::build_graph;
use gekln::model::{GeklnModel, GraphContext, ModelConfig, ProblemDims};
use gekln::train::{
    accuracy, auc, config_fingerprint, evaluate, rmse, rmse_raw, run_ablation, run_alpha_sweep,
    train as run_training, write_ablation_csv, write_sweep_csv, MetricsReport, DEFAULT_ALPHAS,
};

use crate::config::{ModelKind, RunConfig};
use crate::AppError;

fn data_err(e: DataError) -> AppError {
    match e {
        DataError::Io(io) => AppError::Internal(io.into()),
        other => AppError::Input(other.to_string()),
    }
}

/// Load the dataset cache when it matches the request, else ingest and
/// write it. Returns the cache and whether it was a hit.
fn ensure_dataset(cfg: &RunConfig) -> Result<(DatasetCache, bool), AppError> {
    let path = cfg.data_path()?;
    let key = CacheKey {
        source_sha256: sha256_file(path).map_err(data_err)?,
        seed: cfg.split.seed,
        test_ratio: cfg.split.test_ratio,
        options: cfg.ingest_options_fingerprint()?,
    };
    let cache_path = cfg.output_dir.join("dataset.cache.json");
    if cache_path.exists() {
        match load_cache(&cache_path) {
            Ok(cache) if cache.key == key => {
                println!("[ingest] cache hit: {}", cache_path.display());
                return Ok((cache, true));
            }
            Ok(_) => println!("[ingest] cache stale (source or settings changed); recomputing"),
            Err(e) => println!("[ingest] cache unreadable ({e}); recomputing"),
        }
    }

    let opts = cfg.parse_options()?;
    let parsed = parse_log_file(path, &opts).map_err(data_err)?;
    if parsed.skipped > 0 {
        println!("[ingest] skipped {} unparseable rows", parsed.skipped);
    }
    let mut records = parsed.records;
    if cfg.dedup_by_order()? {
        records = merge_duplicate_attempts(records);
    }
    if cfg.merge_concepts()? {
        records = merge_concepts_per_exercise(records);
    }
    let dataset = build_dataset(&records).map_err(data_err)?;
    let split = split_dataset(&dataset, cfg.split.test_ratio, cfg.split.seed).map_err(data_err)?;
    let cache = DatasetCache::new(key, dataset, split);
    save_cache(&cache_path, &cache).map_err(data_err)?;
    println!("[ingest] wrote {}", cache_path.display());
    Ok((cache, false))
}

fn print_stats(ds: &Dataset) {
    // density is conventionally reported truncated, not rounded
    let density_pct = (ds.density() * 10000.0).floor() / 100.0;
    println!("students   {}", ds.num_students);
    println!("exercises  {}", ds.num_exercises);
    println!("concepts   {}", ds.num_concepts);
    println!("logs       {}", ds.logs.len());
    println!("density    {density_pct:.2}%");
}

pub fn ingest(cfg: &RunConfig) -> Result<(), AppError> {
    let (cache, _) = ensure_dataset(cfg)?;
    print_stats(&cache.dataset);
    println!(
        "split      {} train / {} test (ratio {}, seed {})",
        cache.split.train.len(),
        cache.split.test.len(),
        cfg.split.test_ratio,
        cache.split.seed
    );
    Ok(())
}

/// On-disk form of the non-gradient baselines.
#[derive(Serialize, Deserialize)]
struct SavedBaseline {
    kind: String,
    dataset_hash: String,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    student_average: Option<StudentAverageModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    irt: Option<IrtModel>,
}

fn baseline_fingerprint(cfg: &RunConfig, kind: ModelKind) -> String {
    let blob = serde_json::to_vec(&(kind.name(), &cfg.train, &cfg.irt)).expect("configs serialize");
    gekln::data::sha256_hex(&blob)[..16].to_string()
}

fn write_report(cfg: &RunConfig, file: &str, report: &MetricsReport) -> Result<(), AppError> {
    let path = cfg.output_dir.join(file);
    fs::write(&path, report.to_json())?;
    println!(
        "{file}: accuracy={:.6} rmse={:.6} auc={:.6} (n={})",
        report.accuracy, report.rmse, report.auc, report.n_test
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn write_loss_history(cfg: &RunConfig, losses: &[f64]) -> Result<(), AppError> {
    let path = cfg.output_dir.join("loss_history.csv");
    let mut out = String::from("epoch,train_loss\n");
    for (i, loss) in losses.iter().enumerate() {
        out.push_str(&format!("{},{loss:.6}\n", i + 1));
    }
    fs::write(&path, out)?;
    Ok(())
}

fn baseline_report(
    cfg: &RunConfig,
    cache: &DatasetCache,
    kind: ModelKind,
    preds: &[f64],
) -> Result<MetricsReport, AppError> {
    let labels: Vec<u8> = cache.split.test.iter().map(|l| l.score).collect();
    Ok(MetricsReport::new(
        accuracy(preds, &labels, 0.5)?,
        rmse(preds, &labels)?,
        auc(preds, &labels)?,
        labels.len(),
        baseline_fingerprint(cfg, kind),
        cfg.train.seed,
        cache.dataset_hash.clone(),
    ))
}

pub fn train(cfg: &RunConfig) -> Result<(), AppError> {
    let (cache, _) = ensure_dataset(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    match cfg.model.kind {
        ModelKind::StudentAverage => {
            let model = student_average_fit(&cache.split.train, cache.dataset.num_students);
            let preds: Vec<f64> = cache
                .split
                .test
                .iter()
                .map(|l| student_average_predict(&model, l.student, l.exercise))
                .collect();
            let report = baseline_report(cfg, &cache, ModelKind::StudentAverage, &preds)?;
            let saved = SavedBaseline {
                kind: "student-average".into(),
                dataset_hash: cache.dataset_hash.clone(),
                seed: cfg.train.seed,
                student_average: Some(model),
                irt: None,
            };
            fs::write(
                cfg.output_dir.join("model.json"),
                serde_json::to_vec_pretty(&saved)?,
            )?;
            write_loss_history(cfg, &[])?;
            write_report(cfg, "metrics.json", &report)
        }
        ModelKind::Irt => {
            let ds = &cache.dataset;
            let model = irt_fit(
                &cache.split.train,
                ds.num_students,
                ds.num_exercises,
                &cfg.irt,
            );
            let preds: Vec<f64> = cache
                .split
                .test
                .iter()
                .map(|l| irt_predict(&model, l.student, l.exercise))
                .collect();
            let report = baseline_report(cfg, &cache, ModelKind::Irt, &preds)?;
            let saved = SavedBaseline {
                kind: "irt".into(),
                dataset_hash: cache.dataset_hash.clone(),
                seed: cfg.train.seed,
                student_average: None,
                irt: Some(model),
            };
            fs::write(
                cfg.output_dir.join("model.json"),
                serde_json::to_vec_pretty(&saved)?,
            )?;
            write_loss_history(cfg, &[])?;
            write_report(cfg, "metrics.json", &report)
        }
        kind => train_gekln(cfg, &cache, kind),
    }
}

fn gekln_config(cfg: &RunConfig, kind: ModelKind) -> ModelConfig {
    match kind {
        ModelKind::Mf => make_baseline(&cfg.model.config, BaselineKind::Mf),
        ModelKind::MfTem => make_baseline(&cfg.model.config, BaselineKind::MfTem),
        ModelKind::Rgcn => make_baseline(&cfg.model.config, BaselineKind::Rgcn),
        _ => cfg.model.config.clone(),
    }
}

fn train_gekln(cfg: &RunConfig, cache: &DatasetCache, kind: ModelKind) -> Result<(), AppError> {
    let ds = &cache.dataset;
    let model_cfg = gekln_config(cfg, kind);
    model_cfg
        .validate()
        .map_err(|e| AppError::Input(e.to_string()))?;
    let graph = build_graph(&cache.split.train, ds.num_students, ds.num_exercises)?;
    let ctx = GraphContext::new(&graph, &ds.q_matrix);
    let dims = ProblemDims::from(ds);
    let mut store = ParameterStore::new();
    let model = GeklnModel::new(model_cfg.clone(), dims, cfg.train.seed, &mut store)?;

    println!(
        "[train] {} D={} L={} alpha={} epochs={} lr={}",
        kind.name(),
        model_cfg.embed_dim,
        model_cfg.effective_layers(),
        model_cfg.alpha,
        cfg.train.epochs,
        cfg.train.lr
    );
    let started = std::time::Instant::now();
    let result = run_training(
        &model,
        &mut store,
        &ctx,
        &cache.split.train,
        &cache.split.test,
        &cfg.train,
    )?;
    println!(
        "[train] {} epochs in {:.1?}{}",
        result.state.next_epoch,
        started.elapsed(),
        match &result.state.best {
            Some(b) => format!(", best auc {:.6} at epoch {}", b.auc, b.epoch + 1),
            None => String::new(),
        }
    );

    let ckpt = Checkpoint::assemble(
        model_cfg.clone(),
        dims,
        cfg.train.clone(),
        cache.dataset_hash.clone(),
        &result.state,
        result.stopped_early,
        &store,
    );
    let ckpt_path = cfg.output_dir.join("checkpoint.ckpt");
    save_checkpoint(&ckpt_path, &ckpt)?;
    println!("wrote {}", ckpt_path.display());

    let mut eval_store = store.clone();
    eval_store.load_values(&result.selected_parameters(&store));
    let m = evaluate(&model, &eval_store, &ctx, &cache.split.test)?;
    let report = MetricsReport::new(
        m.accuracy,
        m.rmse,
        m.auc,
        m.n,
        config_fingerprint(&model_cfg, &cfg.train),
        cfg.train.seed,
        cache.dataset_hash.clone(),
    );
    write_loss_history(cfg, &result.loss_history)?;
    write_report(cfg, "metrics.json", &report)
}

pub fn eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    force: bool,
    clamp_rmse: bool,
) -> Result<(), AppError> {
    let (cache, _) = ensure_dataset(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;

    let mut magic = [0u8; 8];
    {
        let mut f = fs::File::open(checkpoint)
            .map_err(|e| AppError::Input(format!("cannot open {}: {e}", checkpoint.display())))?;
        let _ = f.read(&mut magic)?;
    }

    let (preds, fingerprint, seed) = if &magic == b"GEKLNCP1" {
        let ckpt = load_checkpoint(checkpoint).map_err(|e| match e {
            CheckpointError::Corrupt(msg) => {
                AppError::Input(format!("{}: {msg}", checkpoint.display()))
            }
            CheckpointError::Io(io) => AppError::Input(format!("{}: {io}", checkpoint.display())),
        })?;
        check_dataset_hash(&ckpt.meta.dataset_hash, &cache.dataset_hash, force)?;
        if ckpt.meta.dims != ProblemDims::from(&cache.dataset) {
            return Err(AppError::Compat(
                "checkpoint index spaces do not match the dataset".into(),
            ));
        }
        let mut store = ckpt.store.clone();
        store.load_values(&ckpt.selected_values());
        let model = GeklnModel::new(
            ckpt.meta.model.clone(),
            ckpt.meta.dims,
            ckpt.meta.seed,
            &mut store,
        )?;
        let graph = build_graph(
            &cache.split.train,
            cache.dataset.num_students,
            cache.dataset.num_exercises,
        )?;
        let ctx = GraphContext::new(&graph, &cache.dataset.q_matrix);
        let pairs: Vec<(usize, usize)> = cache
            .split
            .test
            .iter()
            .map(|l| (l.student, l.exercise))
            .collect();
        let preds = model.predict_batch(&store, &ctx, &pairs)?;
        let fp = config_fingerprint(&ckpt.meta.model, &ckpt.meta.train);
        (preds, fp, ckpt.meta.seed)
    } else {
        let bytes = fs::read(checkpoint)?;
        let saved: SavedBaseline = serde_json::from_slice(&bytes)
            .map_err(|e| AppError::Input(format!("{}: {e}", checkpoint.display())))?;
        check_dataset_hash(&saved.dataset_hash, &cache.dataset_hash, force)?;
        let preds: Vec<f64> = match (&saved.student_average, &saved.irt) {
            (Some(model), _) => cache
                .split
                .test
                .iter()
                .map(|l| student_average_predict(model, l.student, l.exercise))
                .collect(),
            (_, Some(model)) => cache
                .split
                .test
                .iter()
                .map(|l| irt_predict(model, l.student, l.exercise))
                .collect(),
            _ => {
                return Err(AppError::Input(format!(
                    "{}: no model payload",
                    checkpoint.display()
                )))
            }
        };
        let kind = ModelKind::parse_name(&saved.kind)
            .ok_or_else(|| AppError::Input(format!("unknown saved model kind {:?}", saved.kind)))?;
        (preds, baseline_fingerprint(cfg, kind), saved.seed)
    };

    let labels: Vec<u8> = cache.split.test.iter().map(|l| l.score).collect();
    let rmse_value = if clamp_rmse {
        rmse(&preds, &labels)?
    } else {
        rmse_raw(&preds, &labels)?
    };
    let report = MetricsReport::new(
        accuracy(&preds, &labels, 0.5)?,
        rmse_value,
        auc(&preds, &labels)?,
        labels.len(),
        fingerprint,
        seed,
        cache.dataset_hash.clone(),
    );
    write_report(cfg, "eval_metrics.json", &report)
}

fn check_dataset_hash(stored: &str, current: &str, force: bool) -> Result<(), AppError> {
    if stored == current {
        return Ok(());
    }
    eprintln!("warning: checkpoint dataset hash {stored} != current dataset hash {current}");
    if force {
        eprintln!("warning: proceeding because --force was given");
        Ok(())
    } else {
        Err(AppError::Compat(
            "checkpoint was built from a different dataset/split (rerun with --force to evaluate anyway)".into(),
        ))
    }
}

pub fn ablation(cfg: &RunConfig, jobs: usize) -> Result<(), AppError> {
    let (cache, _) = ensure_dataset(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let runs = run_ablation(
        &cache.dataset,
        &cache.split,
        &cfg.model.config,
        &cfg.train,
        &cache.dataset_hash,
        jobs,
    )?;
    let path = cfg.output_dir.join("ablation.csv");
    let mut file = fs::File::create(&path)?;
    write_ablation_csv(&mut file, &runs)?;

    println!(
        "{:<12} {:>9} {:>9} {:>9}",
        "model", "accuracy", "rmse", "auc"
    );
    for run in &runs {
        println!(
            "{:<12} {:>9.6} {:>9.6} {:>9.6}",
            run.label, run.report.accuracy, run.report.rmse, run.report.auc
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn alpha_sweep(cfg: &RunConfig, alphas: Option<&str>, jobs: usize) -> Result<(), AppError> {
    let alphas: Vec<f64> = match alphas {
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| AppError::Input(format!("bad alpha value {s:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => DEFAULT_ALPHAS.to_vec(),
    };
    if alphas.is_empty() {
        return Err(AppError::Input("alpha list is empty".into()));
    }
    let (cache, _) = ensure_dataset(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let rows = run_alpha_sweep(
        &cache.dataset,
        &cache.split,
        &cfg.model.config,
        &cfg.train,
        &alphas,
        &cache.dataset_hash,
        jobs,
    )?;
    let path = cfg.output_dir.join("alpha_sweep.csv");
    let mut file = fs::File::create(&path)?;
    write_sweep_csv(&mut file, &rows)?;

    println!(
        "{:<8} {:>9} {:>9} {:>9}",
        "alpha", "accuracy", "rmse", "auc"
    );
    for (alpha, report) in &rows {
        println!(
            "{:<8} {:>9.6} {:>9.6} {:>9.6}",
            alpha, report.accuracy, report.rmse, report.auc
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
