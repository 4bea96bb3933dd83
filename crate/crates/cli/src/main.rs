use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hprnnpb::harness::experiment::{self, Experiment};
use hprnnpb::harness::{files, load_state, save_state, write_report, ExperimentConfig};
use hprnnpb::modes::EpochStats;
use hprnnpb::{gradient_check, Error, Shape};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_DIVERGENCE: u8 = 4;
const EXIT_PERSISTENCE: u8 = 5;

/// Horizontal-product recurrent network with parametric bias units.
#[derive(Parser)]
#[command(name = "hprnnpb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for data, initialisation and shuffling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training epochs (recognition epochs for `recognize` and `predict`).
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    speed_factor: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Print progress every N training epochs.
    #[arg(long, default_value_t = 1000)]
    progress: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic trajectories, one CSV per sequence.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Comma-separated shapes (cosine, square, circle).
        #[arg(long, value_delimiter = ',')]
        shapes: Option<Vec<String>>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Train on a dataset directory (or freshly generated data) and save the model.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Fit PB values to observed sequences with frozen weights.
    Recognize {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Recognize, then generate closed-loop from the first frame.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Compare BPTT with finite differences on a random small network.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one experiment pipeline (fig4..fig8) and write its report.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        experiment: String,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) => EXIT_USAGE,
        Error::Data(_) | Error::Shape(_) => EXIT_DATA,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Persistence(_) | Error::Version { .. } | Error::Io { .. } => EXIT_PERSISTENCE,
        Error::Experiment { .. } => EXIT_FAILED_CHECK,
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) if !path.is_file() => {
            return Err(Error::Config(format!("config file {} not found", path.display())))
        }
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    cfg.sync_seeds();
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(s) = common.speed_factor {
        cfg.data.speed_factor = s;
        cfg.fast_speed_factor = s;
    }
    if let Some(n) = common.noise_sigma {
        cfg.data.noise_sigma = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn progress(every: usize) -> impl FnMut(&EpochStats) {
    move |s: &EpochStats| {
        if every > 0 && s.epoch % every == 0 {
            eprintln!("epoch {:>6}  cost {:.6e}  lr [{:.2e}, {:.2e}]", s.epoch, s.cost, s.lr_min, s.lr_max);
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Persistence(format!("{}: {e}", dir.display())))
}

fn read_data(path: &Path) -> Result<Vec<hprnnpb::LabeledSequence>, Error> {
    if !path.exists() {
        return Err(Error::Data(format!("{} does not exist", path.display())));
    }
    files::read_dataset(path)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::GenData { common, shapes, repeats } => {
            let mut cfg = load_config(&common)?;
            if let Some(names) = shapes {
                cfg.data.shapes = names.iter().map(|s| s.parse::<Shape>()).collect::<Result<_, _>>()?;
            }
            if let Some(r) = repeats {
                cfg.data.repeats = r;
            }
            let data = hprnnpb::trajectories::make_dataset(&cfg.data)?;
            ensure_dir(&cfg.output_dir)?;
            let paths = files::write_dataset(&cfg.output_dir, &data)?;
            println!("wrote {} sequences to {}", paths.len(), cfg.output_dir.display());
        }
        Command::Train { common, data } => {
            let mut cfg = load_config(&common)?;
            if let Some(e) = common.epochs {
                cfg.train.max_epochs = e;
            }
            cfg.validate()?;
            let dataset = match &data {
                Some(p) => read_data(p)?,
                None => experiment::training_set(&cfg, cfg.data.speed_factor)?,
            };
            let model = experiment::train_model(&cfg, dataset, progress(common.progress))?;
            let th = experiment::Thresholds::default();
            let one_step = experiment::one_step_mse(&model.state, &model.outcome.pb_table, &model.dataset)?;
            let checks = vec![
                experiment::check_cost_drop(&model.outcome.cost_curve, &th),
                experiment::check_one_step(&one_step, &th),
                experiment::check_separable("pb_separable", &model.outcome.pb_table),
                experiment::check_lr_bounds(&model.outcome.lr_range, &cfg),
            ];
            let dir = &cfg.output_dir;
            ensure_dir(dir)?;
            save_state(&model.state, &dir.join("state.json"))?;
            let (d, v) = (cfg.network.n_pb_d, cfg.network.n_pb_v);
            files::write_pb_table(&dir.join("pb_table.csv"), &model.outcome.pb_table, d, v)?;
            files::write_cost_curve(&dir.join("cost_curve.csv"), &model.outcome.cost_curve)?;
            let curve = &model.outcome.cost_curve;
            files::write_json(
                &dir.join("summary.json"),
                &json!({
                    "epochs_run": curve.len(),
                    "initial_cost": curve.first(),
                    "final_cost": curve.last(),
                    "one_step_mse": one_step.to_vec(),
                    "checks": checks,
                }),
            )?;
            files::write_json(
                &dir.join("MANIFEST.json"),
                &json!({"tool": "hprnnpb", "command": "train", "seed": cfg.seed, "config": cfg,
                        "thresholds": th, "files": ["state.json", "pb_table.csv", "cost_curve.csv", "summary.json"]}),
            )?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("model written to {}", dir.display());
        }
        Command::Recognize { common, model, data } => {
            let (cfg, (_, _, recs)) = recognize_cmd(&common, &model, &data)?;
            files::write_json(
                &cfg.output_dir.join("summary.json"),
                &json!({ "classification": classification(&recs) }),
            )?;
        }
        Command::Predict { common, model, data, steps } => {
            let (mut cfg, (state, sequences, recs)) = recognize_cmd(&common, &model, &data)?;
            if let Some(s) = steps {
                cfg.prediction.steps = s;
            }
            cfg.validate()?;
            let preds = experiment::predict_all(&cfg, &state, &recs, &sequences)?;
            let rows: Vec<_> = preds.iter().map(|p| (p.label, &p.generated, &p.truth)).collect();
            files::write_prediction_traces(&cfg.output_dir.join("prediction_trace.csv"), &rows, cfg.network.n_output)?;
            let (early, late) = experiment::early_late_errors(&preds, experiment::Thresholds::default().early_steps);
            files::write_json(
                &cfg.output_dir.join("summary.json"),
                &json!({
                    "classification": classification(&recs),
                    "per_unit_mse": preds.iter().map(|p| json!({"sequence": p.label.to_string(), "mse": p.per_unit_mse.to_vec()})).collect::<Vec<_>>(),
                    "early_step_error": early,
                    "late_step_error": late,
                }),
            )?;
            for p in &preds {
                println!("{} per-unit MSE {:.3e}", p.label, p.per_unit_mse);
            }
        }
        Command::Gradcheck { seed } => {
            let err = gradient_check(seed)?;
            let ok = err <= 1e-4;
            println!("max relative gradient error {err:.3e} ({})", if ok { "ok" } else { "above 1e-4" });
            return Ok(if ok { 0 } else { EXIT_FAILED_CHECK });
        }
        Command::Reproduce { common, experiment: name } => {
            let name: Experiment = name.parse()?;
            let mut cfg = load_config(&common)?;
            if let Some(e) = common.epochs {
                cfg.train.max_epochs = e;
            }
            if common.out.is_none() {
                cfg.output_dir = cfg.output_dir.join(name.as_str());
            }
            cfg.validate()?;
            let report = experiment::reproduce_with(name, &cfg, progress(common.progress))?;
            write_report(&report, &cfg, &cfg.output_dir)?;
            for c in &report.checks {
                let tag = match (c.passed, c.informational) {
                    (true, _) => "PASS",
                    (false, true) => "INFO",
                    (false, false) => "FAIL",
                };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            println!("report written to {}", cfg.output_dir.display());
        }
    }
    Ok(0)
}

type Recognition = (
    hprnnpb::NetworkState,
    Vec<hprnnpb::LabeledSequence>,
    Vec<experiment::Recognized>,
);

fn recognize_cmd(common: &Common, model: &Path, data: &Path) -> Result<(ExperimentConfig, Recognition), Error> {
    let mut cfg = load_config(common)?;
    if let Some(e) = common.epochs {
        cfg.recognition.epochs = e;
    }
    let state = load_state(&model.join("state.json"))?;
    cfg.network = state.config.clone();
    cfg.validate()?;
    let table = files::read_pb_table(&model.join("pb_table.csv"))?;
    let sequences = read_data(data)?;
    let th = experiment::Thresholds::default();
    let recs = experiment::recognize_all(&cfg, &state, &table, &sequences, &th)?;
    ensure_dir(&cfg.output_dir)?;
    let traces: Vec<_> = recs.iter().map(|r| (r.label, &r.trace)).collect();
    let (d, v) = (cfg.network.n_pb_d, cfg.network.n_pb_v);
    files::write_recognition_traces(&cfg.output_dir.join("recognition_trace.csv"), &traces, d, v)?;
    for r in &recs {
        println!("{} -> {} (converged: {})", r.label, r.predicted, r.converged);
    }
    Ok((cfg, (state, sequences, recs)))
}

fn classification(recs: &[experiment::Recognized]) -> serde_json::Value {
    json!(recs
        .iter()
        .map(|r| json!({
            "sequence": r.label.to_string(),
            "true_class": r.label.class().to_string(),
            "predicted_class": r.predicted.to_string(),
            "converged": r.converged,
            "final_pb": r.trace.final_activation().map(|a| a.to_vec()),
        }))
        .collect::<Vec<_>>())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
