//! Acceptance suite. Each test prints one `[acceptance] ...: PASS/FAIL`
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! A1-A6 are self-contained property checks. A7-A9 are the desk-scale
//! ordering experiments defined against the ASSISTments skill-builder
//! export; point `EKLN_ASSIST_CSV` at that file to run them on real
//! data. Without the file, A7/A8 run the same protocol on a synthetic
//! corpus with equivalent latent structure (clearly labelled), and A9 -
//! whose target number is a property of the real label distribution -
//! reports SKIP.

use std::sync::Arc;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gekln::baselines::{make_baseline, student_average_fit, student_average_predict, BaselineKind};
use gekln::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use gekln::data::{
    build_dataset, merge_duplicate_attempts, parse_log_file, split_dataset, Dataset,
    InteractionLog, LogFormat, ParseOptions, QMatrix, Split,
};
use gekln::diff::{ParameterStore, Tape, Tensor};
use gekln::graph::{build_graph, LinkType, TypedBipartiteGraph};
use gekln::model::{GeklnModel, GraphContext, ModelConfig, ProblemDims};
use gekln::synth::{generate, toy_dataset, SynthConfig};
use gekln::train::{auc, run_ablation, train, train_from, TrainConfig};

fn pass(tag: &str, detail: &str) {
    println!("[acceptance] {tag}: PASS ({detail})");
}

// ---------------------------------------------------------------------
// A1: gradient correctness against central finite differences
// ---------------------------------------------------------------------

struct ToyInstance {
    ds_dims: ProblemDims,
    graph: TypedBipartiteGraph,
    q: QMatrix,
    model: GeklnModel,
    store: ParameterStore,
    pairs: Arc<Vec<(usize, usize)>>,
    labels: Vec<f64>,
}

fn random_toy(seed: u64) -> ToyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=8);
    let n = rng.gen_range(2..=8);
    let o = rng.gen_range(1..=3usize);
    let d = rng.gen_range(1..=4);
    let layers = rng.gen_range(0..=2);
    let dims = ProblemDims {
        num_students: m,
        num_exercises: n,
        num_concepts: o,
    };
    let logs: Vec<InteractionLog> = (0..rng.gen_range(4..=2 * m * n))
        .map(|_| InteractionLog {
            student: rng.gen_range(0..m),
            exercise: rng.gen_range(0..n),
            score: rng.gen_range(0..2u32) as u8,
        })
        .collect();
    let q_rows: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let count = rng.gen_range(1..=o);
            let mut ks: Vec<usize> = (0..o).collect();
            for i in (1..ks.len()).rev() {
                ks.swap(i, rng.gen_range(0..=i));
            }
            ks.truncate(count);
            ks.sort_unstable();
            ks
        })
        .collect();
    let graph = build_graph(&logs, m, n).unwrap();
    let q = QMatrix::new(q_rows, o);
    let config = ModelConfig {
        embed_dim: d,
        layers,
        alpha: 1.0,
        ..ModelConfig::default()
    };
    let mut store = ParameterStore::new();
    let model = GeklnModel::new(config, dims, seed ^ 0x5eed, &mut store).unwrap();
    let pairs: Arc<Vec<(usize, usize)>> =
        Arc::new(logs.iter().map(|l| (l.student, l.exercise)).collect());
    let labels: Vec<f64> = logs.iter().map(|l| l.score as f64).collect();
    ToyInstance {
        ds_dims: dims,
        graph,
        q,
        model,
        store,
        pairs,
        labels,
    }
}

fn fused_loss(inst: &ToyInstance, ctx: &GraphContext, store: &ParameterStore) -> f64 {
    let mut tape = Tape::new();
    let preds = inst
        .model
        .predict_batch_on_tape(&mut tape, store, ctx, inst.pairs.clone())
        .unwrap();
    let target = tape.constant(Tensor::column(inst.labels.clone()));
    let residual = tape.sub(target, preds).unwrap();
    let squared = tape.square(residual);
    let loss = tape.mean_all(squared);
    tape.value(loss).data()[0]
}

/// Full-loss gradcheck of one instance; returns (partials, worst rel).
fn gradcheck_instance(inst: &mut ToyInstance, label: &str) -> (usize, f64) {
    let step = 1e-5;
    let ctx = GraphContext::new(&inst.graph, &inst.q);

    // analytic gradients
    let mut tape = Tape::new();
    let preds = inst
        .model
        .predict_batch_on_tape(&mut tape, &inst.store, &ctx, inst.pairs.clone())
        .unwrap();
    let target = tape.constant(Tensor::column(inst.labels.clone()));
    let residual = tape.sub(target, preds).unwrap();
    let squared = tape.square(residual);
    let loss = tape.mean_all(squared);
    tape.backward(loss, &mut inst.store).unwrap();

    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let slot_ids: Vec<_> = inst.store.ids().collect();
    for id in slot_ids {
        let len = inst.store.value(id).len();
        for i in 0..len {
            let orig = inst.store.value(id).data()[i];
            inst.store.value_mut(id).data_mut()[i] = orig + step;
            let up = fused_loss(inst, &ctx, &inst.store);
            inst.store.value_mut(id).data_mut()[i] = orig - step;
            let down = fused_loss(inst, &ctx, &inst.store);
            inst.store.value_mut(id).data_mut()[i] = orig;

            let numeric = (up - down) / (2.0 * step);
            let analytic = inst.store.grad(id).data()[i];
            let diff = (analytic - numeric).abs();
            let tol = (1e-4 * analytic.abs().max(numeric.abs())).max(1e-8);
            let rel = diff / analytic.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(rel);
            checked += 1;
            assert!(
                diff <= tol,
                "{label}, slot {}, index {i}: analytic {analytic} vs numeric {numeric}",
                inst.store.name(id)
            );
        }
    }
    (checked, worst)
}

#[test]
fn a01_gradients_match_central_finite_differences() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;

    for seed in 0..20u64 {
        let mut inst = random_toy(seed);
        let (n, w) = gradcheck_instance(&mut inst, &format!("seed {seed}"));
        checked += n;
        worst = worst.max(w);
    }

    // weight sharing leases one slot several times per forward; the
    // accumulated gradients need their own check
    for seed in 0..5u64 {
        let mut inst = random_toy(seed + 60);
        let cfg = ModelConfig {
            layers: inst.model.config().layers.max(2),
            share_layers: true,
            share_sides: seed % 2 == 0,
            ..inst.model.config().clone()
        };
        let mut store = ParameterStore::new();
        inst.model = GeklnModel::new(cfg, inst.ds_dims, seed ^ 0x11, &mut store).unwrap();
        inst.store = store;
        let (n, w) = gradcheck_instance(&mut inst, &format!("shared seed {seed}"));
        checked += n;
        worst = worst.max(w);
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "gradient check took {elapsed:?}");
    pass(
        "A1 gradient-check",
        &format!("25 instances, {checked} partials, worst rel err {worst:.2e}, {elapsed:?}"),
    );
}

// ---------------------------------------------------------------------
// A2: propagation equals the dense-matrix formulation
// ---------------------------------------------------------------------

fn dense_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let [m, k] = a.shape();
    let [_, n] = b.shape();
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..k {
                acc += a.get(i, p) * b.get(p, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

fn dense_leaky(t: &Tensor, slope: f64) -> Tensor {
    let mut out = t.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
    out
}

fn dense_mlp(store: &ParameterStore, prefix: &str, slope: f64, h: &Tensor) -> Tensor {
    let w1 = store.value(store.find(&format!("{prefix}.w1")).unwrap());
    let w2 = store.value(store.find(&format!("{prefix}.w2")).unwrap());
    let a1 = dense_leaky(&dense_matmul(h, w1), slope);
    dense_leaky(&dense_matmul(&a1, w2), slope)
}

fn normalized_adjacency(graph: &TypedBipartiteGraph, link: LinkType, student_side: bool) -> Tensor {
    let (rows, cols) = if student_side {
        (graph.num_students(), graph.num_exercises())
    } else {
        (graph.num_exercises(), graph.num_students())
    };
    let mut a = Tensor::zeros(rows, cols);
    for r in 0..rows {
        let neighbors = if student_side {
            graph.student_neighbors(link, r)
        } else {
            graph.exercise_neighbors(link, r)
        };
        if neighbors.is_empty() {
            continue;
        }
        let w = 1.0 / neighbors.len() as f64;
        for &c in neighbors {
            a.set(r, c, w);
        }
    }
    a
}

#[test]
fn a02_propagation_matches_dense_oracle() {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut inst = random_toy(seed.wrapping_add(900));
        // force at least one layer so the propagation path runs
        if inst.model.config().effective_layers() == 0 {
            let cfg = ModelConfig {
                layers: 1,
                ..inst.model.config().clone()
            };
            let mut store = ParameterStore::new();
            inst.model = GeklnModel::new(cfg, inst.ds_dims, seed ^ 0x77, &mut store).unwrap();
            inst.store = store;
        }
        let ctx = GraphContext::new(&inst.graph, &inst.q);
        let d = inst.model.config().embed_dim;
        let slope = inst.model.config().leaky_slope;
        let h_s = gekln::diff::xavier_init(inst.graph.num_students(), d, seed + 1);
        let h_p = gekln::diff::xavier_init(inst.graph.num_exercises(), d, seed + 2);
        let (next_s, next_p) = inst
            .model
            .propagate_layer(&inst.store, &ctx, &h_s, &h_p, 0)
            .unwrap();

        for (student_side, own, other, got) in
            [(true, &h_s, &h_p, &next_s), (false, &h_p, &h_s, &next_p)]
        {
            let side = if student_side { "student" } else { "exercise" };
            let f0 = dense_mlp(&inst.store, &format!("L0.{side}.f0"), slope, other);
            let f1 = dense_mlp(&inst.store, &format!("L0.{side}.f1"), slope, other);
            let a0 = normalized_adjacency(&inst.graph, LinkType::Incorrect, student_side);
            let a1 = normalized_adjacency(&inst.graph, LinkType::Correct, student_side);
            let self_t = dense_mlp(&inst.store, &format!("L0.{side}.self"), slope, own);
            let m0 = dense_matmul(&a0, &f0);
            let m1 = dense_matmul(&a1, &f1);
            for i in 0..got.len() {
                let want = m0.data()[i] + m1.data()[i] + self_t.data()[i];
                let diff = (got.data()[i] - want).abs();
                worst = worst.max(diff);
                assert!(diff < 1e-10, "seed {seed} {side}: {diff}");
            }
        }
    }
    pass(
        "A2 propagation-oracle",
        &format!("50 graphs, max abs dev {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------
// A3: rank-based AUC equals the pairwise oracle
// ---------------------------------------------------------------------

#[test]
fn a03_auc_matches_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut worst: f64 = 0.0;
    for case in 0..120 {
        let n = rng.gen_range(2..250);
        // grid-valued predictions force heavy ties; occasionally nearly
        // degenerate labels (a single positive or negative)
        let levels = rng.gen_range(1..9);
        let preds: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..=levels) as f64 / levels as f64)
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u32) as u8).collect();
        labels[0] = 1;
        if n > 1 {
            labels[1] = 0;
        }
        if case % 10 == 0 {
            // near-degenerate: exactly one positive
            labels.iter_mut().for_each(|l| *l = 0);
            labels[rng.gen_range(0..n)] = 1;
        }

        let fast = auc(&preds, &labels).unwrap();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if preds[i] > preds[j] {
                        wins += 1.0;
                    } else if preds[i] == preds[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        let slow = wins / pairs;
        let diff = (fast - slow).abs();
        worst = worst.max(diff);
        assert!(diff < 1e-12, "case {case}: {fast} vs {slow}");
    }
    pass(
        "A3 auc-oracle",
        &format!("120 instances, max abs dev {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------
// A4: ablation configurations reduce exactly
// ---------------------------------------------------------------------

#[test]
fn a04_ablation_reductions_are_exact() {
    for seed in 0..10u64 {
        let base = random_toy(seed.wrapping_add(40));
        let ctx = GraphContext::new(&base.graph, &base.q);
        let dims = base.ds_dims;
        let mut pairs = Vec::new();
        for s in 0..dims.num_students {
            for p in 0..dims.num_exercises {
                pairs.push((s, p));
            }
        }

        // (no GCN, no knowledge head) equals independently coded MF
        let mf_cfg = make_baseline(base.model.config(), BaselineKind::Mf);
        let mut mf_store = ParameterStore::new();
        let mf_model = GeklnModel::new(mf_cfg, dims, seed ^ 0x5eed, &mut mf_store).unwrap();
        let preds = mf_model.predict_batch(&mf_store, &ctx, &pairs).unwrap();
        let u = mf_store.value(mf_store.find("u").unwrap());
        let v = mf_store.value(mf_store.find("v").unwrap());
        for (i, &(s, p)) in pairs.iter().enumerate() {
            let mut dot = 0.0;
            for j in 0..u.cols() {
                dot += u.get(s, j) * v.get(p, j);
            }
            assert_eq!(preds[i], dot, "seed {seed} pair ({s},{p})");
        }

        // alpha = 0 equals the R-GCN configuration
        let mut zero_cfg = base.model.config().clone();
        zero_cfg.alpha = 0.0;
        zero_cfg.use_gcn = true;
        zero_cfg.layers = zero_cfg.layers.max(1);
        let mut zero_store = ParameterStore::new();
        let zero_model =
            GeklnModel::new(zero_cfg.clone(), dims, seed ^ 0x5eed, &mut zero_store).unwrap();

        let rgcn_cfg = make_baseline(&zero_cfg, BaselineKind::Rgcn);
        let mut rgcn_store = ParameterStore::new();
        let rgcn_model = GeklnModel::new(rgcn_cfg, dims, seed ^ 0x5eed, &mut rgcn_store).unwrap();

        let a = zero_model.predict_batch(&zero_store, &ctx, &pairs).unwrap();
        let b = rgcn_model.predict_batch(&rgcn_store, &ctx, &pairs).unwrap();
        assert_eq!(a, b, "seed {seed}");
    }
    pass(
        "A4 ablation-reductions",
        "MF and alpha=0 reductions exact on 10 random instances",
    );
}

// ---------------------------------------------------------------------
// A5: determinism and checkpoint resume
// ---------------------------------------------------------------------

fn toy_ordering_setup() -> (Dataset, Split) {
    let ds = generate(&SynthConfig {
        students: 30,
        exercises: 60,
        concepts: 6,
        logs_per_student: 20,
        seed: 19,
        ..SynthConfig::default()
    });
    let split = split_dataset(&ds, 0.2, 19).unwrap();
    (ds, split)
}

#[test]
fn a05_determinism_and_resume() {
    let (ds, split) = toy_ordering_setup();
    let base = ModelConfig {
        embed_dim: 8,
        layers: 2,
        ..ModelConfig::default()
    };
    let tcfg = TrainConfig {
        epochs: 12,
        lr: 0.01,
        seed: 5,
        eval_every: 2,
        early_stop_patience: 0,
        ..TrainConfig::default()
    };

    // byte-identical metrics JSON across two identical runs
    let json_a = run_ablation(&ds, &split, &base, &tcfg, "hash", 1).unwrap()[3]
        .report
        .to_json();
    let json_b = run_ablation(&ds, &split, &base, &tcfg, "hash", 1).unwrap()[3]
        .report
        .to_json();
    assert_eq!(json_a.as_bytes(), json_b.as_bytes());

    // checkpoint-resume is bit-exact against an uninterrupted run
    let graph = build_graph(&split.train, ds.num_students, ds.num_exercises).unwrap();
    let ctx = GraphContext::new(&graph, &ds.q_matrix);
    let dims = ProblemDims::from(&ds);

    let mut full_store = ParameterStore::new();
    let full_model = GeklnModel::new(base.clone(), dims, tcfg.seed, &mut full_store).unwrap();
    let full = train(
        &full_model,
        &mut full_store,
        &ctx,
        &split.train,
        &split.test,
        &tcfg,
    )
    .unwrap();

    let mut leg_store = ParameterStore::new();
    let leg_model = GeklnModel::new(base.clone(), dims, tcfg.seed, &mut leg_store).unwrap();
    let half_cfg = TrainConfig {
        epochs: 6,
        ..tcfg.clone()
    };
    let leg1 = train(
        &leg_model,
        &mut leg_store,
        &ctx,
        &split.train,
        &split.test,
        &half_cfg,
    )
    .unwrap();

    let ckpt = Checkpoint::assemble(
        base.clone(),
        dims,
        half_cfg,
        "hash".into(),
        &leg1.state,
        leg1.stopped_early,
        &leg_store,
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.ckpt");
    save_checkpoint(&path, &ckpt).unwrap();

    let loaded = load_checkpoint(&path).unwrap();
    let mut resumed_store = loaded.store.clone();
    let resumed_model = GeklnModel::new(
        loaded.meta.model.clone(),
        loaded.meta.dims,
        loaded.meta.seed,
        &mut resumed_store,
    )
    .unwrap();
    let resume_cfg = TrainConfig {
        epochs: 12,
        ..loaded.meta.train.clone()
    };
    let leg2 = train_from(
        &resumed_model,
        &mut resumed_store,
        &ctx,
        &split.train,
        &split.test,
        &resume_cfg,
        loaded.train_state(),
    )
    .unwrap();

    assert_eq!(
        resumed_store, full_store,
        "resumed parameters/optimizer state diverged"
    );
    let mut joined = leg1.loss_history.clone();
    joined.extend(&leg2.loss_history);
    assert_eq!(joined, full.loss_history);
    let _ = full_model;
    pass(
        "A5 determinism+resume",
        "metrics JSON byte-equal; resume bit-exact over 6+6 epochs",
    );
}

// ---------------------------------------------------------------------
// A6: the toy corpus overfits
// ---------------------------------------------------------------------

#[test]
fn a06_toy_overfit() {
    let ds = toy_dataset();
    let graph = build_graph(&ds.logs, ds.num_students, ds.num_exercises).unwrap();
    let ctx = GraphContext::new(&graph, &ds.q_matrix);
    let mut store = ParameterStore::new();
    let model = GeklnModel::new(
        ModelConfig {
            embed_dim: 8,
            layers: 2,
            ..ModelConfig::default()
        },
        ProblemDims::from(&ds),
        42,
        &mut store,
    )
    .unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 0,
        lr: 0.01,
        seed: 42,
        eval_every: 0,
        early_stop_patience: 0,
        ..TrainConfig::default()
    };
    let result = train(&model, &mut store, &ctx, &ds.logs, &[], &cfg).unwrap();
    let final_loss = *result.loss_history.last().unwrap();
    assert!(
        final_loss < 0.05,
        "train loss {final_loss} after 200 epochs"
    );
    pass(
        "A6 toy-overfit",
        &format!("train squared loss {final_loss:.4} < 0.05"),
    );
}

// ---------------------------------------------------------------------
// A7-A9: desk-scale ordering experiments
// ---------------------------------------------------------------------

struct OrderingOutcome {
    corpus: &'static str,
    sa_auc: f64,
    sa_acc: f64,
    mf_auc: f64,
    mf_tem_auc: f64,
    rgcn_auc: f64,
    ekln_auc: f64,
    run_seconds: f64,
}

fn ordering_protocol(
    corpus: &'static str,
    ds: &Dataset,
    embed_dim: usize,
    train_cfg: &TrainConfig,
    seeds: &[u64],
) -> OrderingOutcome {
    let mut sums = [0.0f64; 6];
    let mut max_run_seconds = 0.0f64;
    for &seed in seeds {
        let split = split_dataset(ds, 0.2, seed).unwrap();

        let sa = student_average_fit(&split.train, ds.num_students);
        let preds: Vec<f64> = split
            .test
            .iter()
            .map(|l| student_average_predict(&sa, l.student, l.exercise))
            .collect();
        let labels: Vec<u8> = split.test.iter().map(|l| l.score).collect();
        sums[0] += auc(&preds, &labels).unwrap();
        sums[1] += gekln::train::accuracy(&preds, &labels, 0.5).unwrap();

        let base = ModelConfig {
            embed_dim,
            layers: 2,
            ..ModelConfig::default()
        };
        let tcfg = TrainConfig {
            seed,
            ..train_cfg.clone()
        };
        let started = Instant::now();
        let runs = run_ablation(ds, &split, &base, &tcfg, corpus, 4).unwrap();
        max_run_seconds = max_run_seconds.max(started.elapsed().as_secs_f64() / 4.0);
        assert_eq!(runs[0].label, "mf");
        assert_eq!(runs[1].label, "mf-tem");
        assert_eq!(runs[2].label, "r-gcn");
        assert_eq!(runs[3].label, "graph-ekln");
        for (i, run) in runs.iter().enumerate() {
            sums[2 + i] += run.report.auc;
        }
    }
    let k = seeds.len() as f64;
    OrderingOutcome {
        corpus,
        sa_auc: sums[0] / k,
        sa_acc: sums[1] / k,
        mf_auc: sums[2] / k,
        mf_tem_auc: sums[3] / k,
        rgcn_auc: sums[4] / k,
        ekln_auc: sums[5] / k,
        run_seconds: max_run_seconds,
    }
}

fn assist_corpus() -> Option<Dataset> {
    let path = std::env::var_os("EKLN_ASSIST_CSV")?;
    let parsed = parse_log_file(
        std::path::Path::new(&path),
        &ParseOptions::new(LogFormat::AssistCsv),
    )
    .expect("parse ASSIST export");
    let records = merge_duplicate_attempts(parsed.records);
    Some(build_dataset(&records).expect("non-empty dataset"))
}

fn stand_in_corpus() -> Dataset {
    generate(&SynthConfig {
        students: 150,
        exercises: 600,
        concepts: 12,
        logs_per_student: 60,
        max_concepts_per_exercise: 2,
        ability_weight: 0.4,
        concept_weight: 1.2,
        difficulty_weight: 0.9,
        steepness: 3.0,
        seed: 33,
    })
}

fn ordering_outcome() -> &'static OrderingOutcome {
    static OUTCOME: OnceLock<OrderingOutcome> = OnceLock::new();
    OUTCOME.get_or_init(|| match assist_corpus() {
        Some(ds) => {
            let cfg = TrainConfig {
                epochs: 200,
                batch_size: 0,
                lr: 0.01,
                eval_every: 1,
                early_stop_patience: 15,
                ..TrainConfig::default()
            };
            ordering_protocol("assist", &ds, 32, &cfg, &[1, 2, 3])
        }
        None => {
            let ds = stand_in_corpus();
            let cfg = TrainConfig {
                epochs: 300,
                batch_size: 0,
                lr: 0.01,
                eval_every: 5,
                early_stop_patience: 15,
                ..TrainConfig::default()
            };
            ordering_protocol("synthetic stand-in", &ds, 8, &cfg, &[1, 2, 3])
        }
    })
}

#[test]
fn a07_full_model_beats_mf_and_student_average() {
    let o = ordering_outcome();
    if o.corpus != "assist" {
        println!(
            "[acceptance] A7 assist-ordering: SKIP (set EKLN_ASSIST_CSV to run on the real export)"
        );
    }
    assert!(
        o.run_seconds < 1800.0,
        "per-run budget exceeded: {:.0}s",
        o.run_seconds
    );
    assert!(
        o.ekln_auc - o.mf_auc >= 0.005,
        "[{}] graph-ekln {:.4} vs mf {:.4}",
        o.corpus,
        o.ekln_auc,
        o.mf_auc
    );
    assert!(
        o.ekln_auc - o.sa_auc >= 0.10,
        "[{}] graph-ekln {:.4} vs student-average {:.4}",
        o.corpus,
        o.ekln_auc,
        o.sa_auc
    );
    pass(
        &format!("A7 ordering [{}]", o.corpus),
        &format!(
            "auc: ekln {:.4} > mf {:.4} (margin {:.4} >= 0.005) > student-avg {:.4} (margin {:.4} >= 0.10); {:.1}s/run",
            o.ekln_auc,
            o.mf_auc,
            o.ekln_auc - o.mf_auc,
            o.sa_auc,
            o.ekln_auc - o.sa_auc,
            o.run_seconds
        ),
    );
}

#[test]
fn a08_full_model_tops_the_ablation_grid() {
    let o = ordering_outcome();
    if o.corpus != "assist" {
        println!(
            "[acceptance] A8 assist-ablation: SKIP (set EKLN_ASSIST_CSV to run on the real export)"
        );
    }
    let best_single = o.mf_tem_auc.max(o.rgcn_auc);
    assert!(
        o.ekln_auc >= best_single - 0.003,
        "[{}] graph-ekln {:.4} vs best single-component {:.4}",
        o.corpus,
        o.ekln_auc,
        best_single
    );
    pass(
        &format!("A8 ablation-ordering [{}]", o.corpus),
        &format!(
            "auc: ekln {:.4} >= max(mf-tem {:.4}, r-gcn {:.4}) - 0.003",
            o.ekln_auc, o.mf_tem_auc, o.rgcn_auc
        ),
    );
}

#[test]
fn a09_student_average_accuracy_on_assist() {
    let o = ordering_outcome();
    if o.corpus != "assist" {
        println!(
            "[acceptance] A9 student-average-accuracy: SKIP (target 0.6942 is a property of the \
             real ASSIST label distribution; set EKLN_ASSIST_CSV to run)"
        );
        return;
    }
    let target = 0.6942;
    assert!(
        (o.sa_acc - target).abs() <= 0.03,
        "student-average accuracy {:.4} vs {target} +/- 0.03",
        o.sa_acc
    );
    pass(
        "A9 student-average-accuracy [assist]",
        &format!("{:.4} within +/-0.03 of {target}", o.sa_acc),
    );
}

#[test]
fn a10_exact_reported_numbers_are_not_a_gate() {
    println!(
        "[acceptance] A10 exact-numbers: N/A by design - the reference split/optimizer/epochs \
         are unspecified, so the ordering criteria A7-A9 stand in for exact reproduction"
    );
}
