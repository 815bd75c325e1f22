use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cfn_cli::pipeline::{benchmark, evaluate, fit, history_csv, model_file, Overrides, RunSpec};
use cfn_cli::presets::Preset;
use cfn_cli::report::{ClosedForm, Report};
use cfn_core::data::{gen_concentric, gen_shm, gen_spiral, load_csv, Dataset, ShmParams};
use cfn_core::metrics::Task;
use cfn_core::model::{write_atomic, ModelFile, NodeRegistry};

#[derive(Parser)]
#[command(name = "cfn", version, about = "Train, inspect and benchmark compositional function networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Train a preset network on a CSV file and save the model.
    Train(TrainArgs),
    /// Score a saved model on a CSV file.
    Evaluate(EvaluateArgs),
    /// Print the learned parameters of a saved model.
    Report(ReportArgs),
    /// Repeat training over several seeds with the split held fixed.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Shm,
    Spiral,
    Concentric,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// Rows (points per class for spiral).
    #[arg(long)]
    n: Option<usize>,
    /// Noise standard deviation (shm, spiral).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    target: String,
    /// regression, binary or multiclass.
    #[arg(long)]
    task: Task,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    preset: Preset,
    #[arg(long, default_value_t = cfn_core::data::DEFAULT_SPLIT_SEED)]
    split_seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// 0 trains on the full batch.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

impl RunArgs {
    fn spec(&self, seed: u64) -> RunSpec {
        RunSpec {
            split_seed: self.split_seed,
            overrides: Overrides {
                epochs: self.epochs,
                learning_rate: self.lr,
                batch_size: self.batch_size,
                patience: self.patience,
            },
            ..RunSpec::new(self.preset, seed)
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Training history CSV [default: next to the model, `<name>.history.csv`].
    #[arg(long)]
    history: Option<PathBuf>,
    /// Metrics document [default: next to the model, `<name>.metrics.json`].
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Also write the held-out rows as CSV.
    #[arg(long)]
    test_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to the target recorded in the model file.
    #[arg(long)]
    target: Option<String>,
    /// Defaults to the task recorded in the model file.
    #[arg(long)]
    task: Option<Task>,
    #[arg(long, value_enum, default_value_t = Format::Structured)]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// First run seed; runs use consecutive seeds from here.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Benchmark report to write as well as print.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn json(value: &impl serde::Serialize) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load(args: &DataArgs) -> anyhow::Result<Dataset> {
    Ok(load_csv(&args.data, &args.target, args.task)?)
}

fn generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let data = match a.kind {
        GenKind::Shm => {
            let base = ShmParams::default();
            gen_shm(&ShmParams {
                n: a.n.unwrap_or(base.n),
                noise_sd: a.noise.unwrap_or(base.noise_sd),
                seed: a.seed,
                ..base
            })?
        }
        GenKind::Spiral => gen_spiral(a.n.unwrap_or(300), 3, a.noise.unwrap_or(0.2), a.seed)?,
        GenKind::Concentric => {
            if a.noise.is_some() {
                bail!("the concentric generator is noiseless; drop --noise");
            }
            gen_concentric(a.n.unwrap_or(2000), a.seed)?
        }
    };
    data.write_csv(&a.out)?;
    log::info!("wrote {} rows to {}", data.len(), a.out.display());
    Ok(())
}

fn train(a: &TrainArgs) -> anyhow::Result<()> {
    let data = load(&a.data)?;
    let spec = a.run.spec(a.seed);
    let t = fit(&data, &spec)?;
    let file = model_file(&t, &data, &spec);
    file.save(&a.out)?;
    let history = a.history.clone().unwrap_or_else(|| sibling(&a.out, ".history.csv"));
    write_atomic(&history, &history_csv(&t.result)?)?;
    let metrics_path = a.metrics.clone().unwrap_or_else(|| sibling(&a.out, ".metrics.json"));
    write_atomic(&metrics_path, json(&t.metrics)?.as_bytes())?;
    if let Some(path) = &a.test_out {
        t.test.write_csv(path)?;
    }
    match a.format {
        Format::Structured => print!("{}", json(&t.metrics)?),
        Format::Text => {
            println!(
                "{} on {}: {} train rows, {} held out; stopped at epoch {} (best {}), {:.2}s",
                spec.preset,
                a.data.data.display(),
                data.len() - t.test.len(),
                t.test.len(),
                t.result.stopped_epoch,
                t.result.best_epoch,
                t.seconds
            );
            for (name, v) in t.metrics.values() {
                println!("{name}: {v:.4}");
            }
            if let Some(c) = ClosedForm::of(&file.network) {
                println!("{}", c.expression());
                println!("Amplitude (A): {:.4}", c.amplitude);
                println!("Angular frequency (ω): {:.4}", c.omega);
                println!("Phase (φ): {:.4}", c.phase);
            }
        }
    }
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> anyhow::Result<()> {
    let file = ModelFile::read(&a.model)?;
    let meta = |key: &str| file.metadata.get(key).and_then(|v| v.as_str()).map(str::to_string);
    let target = a
        .target
        .clone()
        .or_else(|| meta("target"))
        .context("--target is required: the model file does not record one")?;
    let task = match a.task {
        Some(t) => t,
        None => meta("task")
            .context("--task is required: the model file does not record one")?
            .parse()?,
    };
    let net = file.network(&NodeRegistry::default())?;
    let data = load_csv(&a.data, &target, task)?;
    let m = evaluate(&net, file.scaler.as_ref(), &data)?;
    match a.format {
        Format::Structured => print!("{}", json(&m)?),
        Format::Text => {
            for (name, v) in m.values() {
                println!("{name}: {v:.4}");
            }
        }
    }
    Ok(())
}

fn report(a: &ReportArgs) -> anyhow::Result<()> {
    let file = ModelFile::read(&a.model)?;
    let r = Report::new(&file);
    match a.format {
        Format::Text => print!("{}", r.to_text()),
        Format::Structured => print!("{}", r.to_json()?),
    }
    Ok(())
}

fn benchmark_cmd(a: &BenchmarkArgs) -> anyhow::Result<()> {
    let data = load(&a.data)?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let rep = benchmark(&data, &a.run.spec(a.seed), &seeds)?;
    let text = json(&rep)?;
    if let Some(out) = &a.out {
        write_atomic(out, text.as_bytes())?;
    }
    match a.format {
        Format::Structured => print!("{text}"),
        Format::Text => {
            println!("{} on {}, {} seeds, split seed {}", rep.preset, a.data.data.display(), seeds.len(), rep.split_seed);
            for run in &rep.runs {
                let values = match (&run.metrics, &run.error) {
                    (Some(m), _) => m
                        .values()
                        .iter()
                        .map(|(k, v)| format!("{k} {v:.4}"))
                        .collect::<Vec<_>>()
                        .join(", "),
                    (None, Some(e)) => format!("FAILED: {e}"),
                    (None, None) => String::new(),
                };
                println!("  seed {}: {values} ({:.2}s)", run.seed, run.seconds);
            }
            for s in &rep.summary {
                println!("{}: {:.4} ± {:.4}", s.metric, s.mean, s.sd);
            }
            println!("seconds: {:.2} ± {:.2}", rep.seconds.mean, rep.seconds.sd);
            if !rep.sd_defined {
                println!("(fewer than two successful runs: standard deviations are reported as 0)");
            }
        }
    }
    if rep.failed > 0 {
        bail!("{} of {} runs failed", rep.failed, seeds.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Report(a) => report(a),
        Command::Benchmark(a) => benchmark_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
