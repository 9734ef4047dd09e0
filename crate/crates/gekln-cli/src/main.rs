//! `gekln` command-line interface.
//!
//! Subcommands: `ingest`, `train`, `eval`, `ablation`, `alpha-sweep`.
//! All settings live in one JSON config file; every key can be
//! overridden by a flag of the same dotted name. Exit codes: 0 success,
//! 2 input error, 3 compatibility error, 1 internal error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ModelKind, RunConfig};

#[derive(Debug)]
pub enum AppError {
    /// Bad config, missing files, malformed data. Exit 2.
    Input(String),
    /// Checkpoint does not match the dataset. Exit 3.
    Compat(String),
    /// Everything else. Exit 1.
    Internal(anyhow::Error),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Input(_) => 2,
            AppError::Compat(_) => 3,
            AppError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Input(msg) => write!(f, "input error: {msg}"),
            AppError::Compat(msg) => write!(f, "compatibility error: {msg}"),
            AppError::Internal(e) => write!(f, "internal error: {e}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Internal(e.into())
    }
}

/// Student performance prediction: link-typed graph convolution over the
/// student-exercise graph fused with a knowledge-concept factorization.
#[derive(Parser)]
#[command(name = "gekln", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a log file, build index spaces and the train/test split,
    /// and write the dataset cache (prints the corpus statistics).
    Ingest(CommonArgs),
    /// Train the configured model; writes checkpoint, metrics JSON, and
    /// loss-history CSV into the output directory.
    Train(CommonArgs),
    /// Recompute test metrics from a frozen checkpoint.
    Eval(EvalArgs),
    /// Train and compare mf, mf-tem, r-gcn, and graph-ekln under one
    /// seed and split; writes ablation.csv.
    Ablation(GridArgs),
    /// Train one model per fusion weight; writes alpha_sweep.csv.
    AlphaSweep(SweepArgs),
}

/// Config file plus per-key overrides. Defaults shown are the values
/// used when neither the config file nor a flag sets the key.
#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Convenience: sets both split.seed and train.seed.
    /// (EKLN_SEED in the environment does the same, with lower priority.)
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Convenience alias for --model.kind.
    #[arg(long, value_name = "KIND")]
    model: Option<String>,
    /// Convenience alias for --model.alpha.
    #[arg(long, value_name = "F64")]
    alpha: Option<f64>,

    /// Path to the raw interaction log (required; no default).
    #[arg(long = "data.path", value_name = "FILE")]
    data_path: Option<PathBuf>,
    /// Log layout: generic-csv, assist-csv, or kdd-tsv [default: generic-csv].
    #[arg(long = "data.format", value_name = "FORMAT")]
    data_format: Option<String>,
    /// Merge each record's concepts into one synthetic concept
    /// [default: true for kdd-tsv, false otherwise].
    #[arg(long = "data.merge_concepts", value_name = "BOOL")]
    data_merge_concepts: Option<bool>,
    /// Collapse duplicate rows of one attempt using the order column
    /// [default: true when the format has an order column].
    #[arg(long = "data.dedup_by_order", value_name = "BOOL")]
    data_dedup_by_order: Option<bool>,
    /// Binarization threshold for source scores in `[0,1]` [default: 0.5].
    #[arg(long = "data.binarize_threshold", value_name = "F64")]
    data_binarize_threshold: Option<f64>,

    /// Test fraction of the log-level split [default: 0.2].
    #[arg(long = "split.test_ratio", value_name = "F64")]
    split_test_ratio: Option<f64>,
    /// Split shuffle seed [default: 42].
    #[arg(long = "split.seed", value_name = "U64")]
    split_seed: Option<u64>,

    /// Predictor: graph-ekln, mf, mf-tem, rgcn, student-average, irt
    /// [default: graph-ekln].
    #[arg(long = "model.kind", value_name = "KIND")]
    model_kind: Option<String>,
    /// Embedding dimension D [default: 128].
    #[arg(long = "model.embed_dim", value_name = "USIZE")]
    model_embed_dim: Option<usize>,
    /// Propagation layer count L [default: 2].
    #[arg(long = "model.layers", value_name = "USIZE")]
    model_layers: Option<usize>,
    /// Fusion weight on the knowledge-space score [default: 1].
    #[arg(long = "model.alpha", value_name = "F64")]
    model_alpha: Option<f64>,
    /// MLP hidden width [default: embed_dim].
    #[arg(long = "model.mlp_hidden", value_name = "USIZE")]
    model_mlp_hidden: Option<usize>,
    /// LeakyReLU negative slope [default: 0.01].
    #[arg(long = "model.leaky_slope", value_name = "F64")]
    model_leaky_slope: Option<f64>,
    /// Enable graph propagation [default: true].
    #[arg(long = "model.use_gcn", value_name = "BOOL")]
    model_use_gcn: Option<bool>,
    /// Enable the knowledge-space head [default: true].
    #[arg(long = "model.use_knowledge_head", value_name = "BOOL")]
    model_use_knowledge_head: Option<bool>,
    /// Share aggregation MLPs across layers [default: false].
    #[arg(long = "model.share_layers", value_name = "BOOL")]
    model_share_layers: Option<bool>,
    /// Share aggregation MLPs across sides [default: false].
    #[arg(long = "model.share_sides", value_name = "BOOL")]
    model_share_sides: Option<bool>,

    /// Training epochs [default: 300].
    #[arg(long = "train.epochs", value_name = "USIZE")]
    train_epochs: Option<usize>,
    /// Batch size; 0 = full batch [default: 0].
    #[arg(long = "train.batch_size", value_name = "USIZE")]
    train_batch_size: Option<usize>,
    /// Learning rate [default: 0.001].
    #[arg(long = "train.lr", value_name = "F64")]
    train_lr: Option<f64>,
    /// Training seed (init, shuffles) [default: 42].
    #[arg(long = "train.seed", value_name = "U64")]
    train_seed: Option<u64>,
    /// Optimizer: adaptive or sgd [default: adaptive].
    #[arg(long = "train.optimizer", value_name = "NAME")]
    train_optimizer: Option<String>,
    /// Evaluate test metrics every N epochs; 0 disables [default: 1].
    #[arg(long = "train.eval_every", value_name = "USIZE")]
    train_eval_every: Option<usize>,
    /// Early-stop patience in evaluations; 0 disables [default: 20].
    #[arg(long = "train.early_stop_patience", value_name = "USIZE")]
    train_early_stop_patience: Option<usize>,

    /// IRT fit epochs [default: 200].
    #[arg(long = "irt.epochs", value_name = "USIZE")]
    irt_epochs: Option<usize>,
    /// IRT learning rate [default: 0.01].
    #[arg(long = "irt.lr", value_name = "F64")]
    irt_lr: Option<f64>,
    /// Learn per-exercise discrimination (2PL) [default: false].
    #[arg(long = "irt.two_parameter", value_name = "BOOL")]
    irt_two_parameter: Option<bool>,

    /// Where caches, checkpoints, and reports go [default: runs/default].
    #[arg(long = "output_dir", value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint (or saved-model JSON) to evaluate.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Proceed even if the checkpoint's dataset hash does not match.
    #[arg(long)]
    force: bool,
    /// Report RMSE on raw predictions instead of clamping to `[0,1]`.
    #[arg(long)]
    no_clamp_rmse: bool,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Max concurrent training runs [default: 1].
    #[arg(long, value_name = "USIZE", default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated fusion weights [default: 0,0.1,1,5,10].
    #[arg(long, value_name = "LIST")]
    alphas: Option<String>,
    /// Max concurrent training runs [default: 1].
    #[arg(long, value_name = "USIZE", default_value_t = 1)]
    jobs: usize,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, AppError> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.split.seed = seed;
            cfg.train.seed = seed;
        }
        if let Some(kind) = &self.model {
            cfg.model.kind = ModelKind::parse_name(kind)
                .ok_or_else(|| AppError::Input(format!("unknown model kind {kind:?}")))?;
        }
        if let Some(alpha) = self.alpha {
            cfg.model.config.alpha = alpha;
        }

        if let Some(v) = &self.data_path {
            cfg.data.path = Some(v.clone());
        }
        if let Some(v) = &self.data_format {
            cfg.data.format = v.clone();
        }
        if let Some(v) = self.data_merge_concepts {
            cfg.data.merge_concepts = Some(v);
        }
        if let Some(v) = self.data_dedup_by_order {
            cfg.data.dedup_by_order = Some(v);
        }
        if let Some(v) = self.data_binarize_threshold {
            cfg.data.binarize_threshold = v;
        }
        if let Some(v) = self.split_test_ratio {
            cfg.split.test_ratio = v;
        }
        if let Some(v) = self.split_seed {
            cfg.split.seed = v;
        }
        if let Some(kind) = &self.model_kind {
            cfg.model.kind = ModelKind::parse_name(kind)
                .ok_or_else(|| AppError::Input(format!("unknown model kind {kind:?}")))?;
        }
        if let Some(v) = self.model_embed_dim {
            cfg.model.config.embed_dim = v;
        }
        if let Some(v) = self.model_layers {
            cfg.model.config.layers = v;
        }
        if let Some(v) = self.model_alpha {
            cfg.model.config.alpha = v;
        }
        if let Some(v) = self.model_mlp_hidden {
            cfg.model.config.mlp_hidden = Some(v);
        }
        if let Some(v) = self.model_leaky_slope {
            cfg.model.config.leaky_slope = v;
        }
        if let Some(v) = self.model_use_gcn {
            cfg.model.config.use_gcn = v;
        }
        if let Some(v) = self.model_use_knowledge_head {
            cfg.model.config.use_knowledge_head = v;
        }
        if let Some(v) = self.model_share_layers {
            cfg.model.config.share_layers = v;
        }
        if let Some(v) = self.model_share_sides {
            cfg.model.config.share_sides = v;
        }
        if let Some(v) = self.train_epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.train_batch_size {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.train_lr {
            cfg.train.lr = v;
        }
        if let Some(v) = self.train_seed {
            cfg.train.seed = v;
        }
        if let Some(v) = &self.train_optimizer {
            cfg.train.optimizer = match v.as_str() {
                "adaptive" => gekln::diff::OptimizerKind::Adaptive,
                "sgd" => gekln::diff::OptimizerKind::Sgd,
                other => return Err(AppError::Input(format!("unknown optimizer {other:?}"))),
            };
        }
        if let Some(v) = self.train_eval_every {
            cfg.train.eval_every = v;
        }
        if let Some(v) = self.train_early_stop_patience {
            cfg.train.early_stop_patience = v;
        }
        if let Some(v) = self.irt_epochs {
            cfg.irt.epochs = v;
        }
        if let Some(v) = self.irt_lr {
            cfg.irt.lr = v;
        }
        if let Some(v) = self.irt_two_parameter {
            cfg.irt.two_parameter = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(args) => args.resolve().and_then(|cfg| commands::ingest(&cfg)),
        Command::Train(args) => args.resolve().and_then(|cfg| commands::train(&cfg)),
        Command::Eval(args) => args.common.resolve().and_then(|cfg| {
            commands::eval(&cfg, &args.checkpoint, args.force, !args.no_clamp_rmse)
        }),
        Command::Ablation(args) => args
            .common
            .resolve()
            .and_then(|cfg| commands::ablation(&cfg, args.jobs)),
        Command::AlphaSweep(args) => args
            .common
            .resolve()
            .and_then(|cfg| commands::alpha_sweep(&cfg, args.alphas.as_deref(), args.jobs)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gekln: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
