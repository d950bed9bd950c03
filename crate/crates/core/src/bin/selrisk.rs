use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use selrisk::combiner::CombinerKind;
use selrisk::config::Config;
use selrisk::data::{load_records, split_records, validate_records, write_records, write_splits, Split};
use selrisk::pipeline::{self, files, Method};
use selrisk::policy::calibrate_threshold;
use selrisk::report::render_report;
use selrisk::synth::{generate, SynthConfig};
use selrisk::{Error, Result};

/// Selective-prediction evaluation: entropy baselines, correctness probes,
/// combined risk scores and calibrated abstention policies.
#[derive(Parser)]
#[command(name = "selrisk", version)]
struct Cli {
    /// Seed for splits, CV folds, bootstrap resampling and synthesis [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluation settings (JSON); omitted keys keep their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input record file (JSONL)
    #[arg(long)]
    input: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitIo {
    #[command(flatten)]
    io: Io,
    /// Split assignments [default: <out>/splits.csv]
    #[arg(long)]
    splits: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Logistic,
    Mlp,
}

#[derive(Subcommand)]
enum Command {
    /// Check a record file against the schema and report every invalid line
    Validate {
        #[arg(long)]
        input: PathBuf,
        /// Also write validation.json here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stratified 70/15/15 train/calibration/test split
    Split(Io),
    /// Generate a synthetic record file
    Synth {
        /// Synthetic-data settings (JSON); defaults when omitted
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-record NLL and semantic entropy
    Score(Io),
    /// Select a layer and fit the correctness and SE probes on the train split
    TrainProbe(SplitIo),
    /// Fit the PC+entropy combiners on the train split
    TrainCombiner {
        #[command(flatten)]
        io: SplitIo,
        #[arg(long, value_enum, default_value = "logistic")]
        kind: KindArg,
    },
    /// Calibrate an abstention threshold for one method on the calibration split
    Calibrate {
        #[command(flatten)]
        io: SplitIo,
        #[arg(long, default_value = "pc+se")]
        method: String,
        /// Target hallucination rate [default: high_trust_alpha from the config]
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Fit everything and compute all metrics for the seven methods
    Evaluate(SplitIo),
    /// Tables and figures from an `evaluate` output directory
    Report {
        /// Directory written by `evaluate`
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Validate { input, out } => {
            let report = validate_records(&input)?;
            if let Some(out) = out {
                create_dir(&out)?;
                pipeline::write_text(&out.join(files::VALIDATION), &serde_json::to_string_pretty(&report)?)?;
            }
            print_json(&serde_json::to_value(&report)?)?;
            if !report.is_clean() {
                let mut lines: Vec<usize> = report.errors.iter().map(|e| e.line).collect();
                lines.dedup();
                return Err(Error::invalid(format!(
                    "{} invalid lines ({} valid records)",
                    lines.len(),
                    report.count
                )));
            }
        }
        Command::Split(io) => {
            let records = load_records(&io.input)?;
            let assignments = split_records(&records, seed)?;
            create_dir(&io.out)?;
            write_splits(&io.out.join(files::SPLITS), &assignments)?;
            let count = |s: Split| assignments.iter().filter(|a| a.split == s).count();
            print_json(&json!({
                "train": count(Split::Train),
                "calibration": count(Split::Calibration),
                "test": count(Split::Test),
            }))?;
        }
        Command::Synth { input, out } => {
            let mut synth = match input {
                Some(path) => SynthConfig::load(&path)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = cli.seed {
                synth.seed = s;
            }
            let records = generate(&synth)?;
            create_dir(&out)?;
            write_records(&out.join(files::RECORDS), &records)?;
            print_json(&json!({ "records": records.len(), "seed": synth.seed }))?;
        }
        Command::Score(io) => {
            let records = load_records(&io.input)?;
            let scores = pipeline::base_scores(&records)?;
            create_dir(&io.out)?;
            pipeline::write_scores(&io.out.join(files::SCORES), &records, &scores)?;
        }
        Command::TrainProbe(io) => {
            let records = load_records(&io.io.input)?;
            let splits = pipeline::load_split_indices(&records, &io.io.out, io.splits.as_deref())?;
            let scores = pipeline::base_scores(&records)?;
            let probes = pipeline::fit_probes(&records, &scores, &splits, &config, seed)?;
            pipeline::write_probe_artifacts(&io.io.out, &probes)?;
            print_json(&serde_json::to_value(&probes.selections)?)?;
        }
        Command::TrainCombiner { io, kind } => {
            let records = load_records(&io.io.input)?;
            let splits = pipeline::load_split_indices(&records, &io.io.out, io.splits.as_deref())?;
            let probes = pipeline::read_probe_artifacts(&io.io.out)?;
            let scores = pipeline::base_scores(&records)?;
            let features = pipeline::Features::new(&records, &scores, &probes.pc, &probes.sep)?;
            let kind = match kind {
                KindArg::Logistic => CombinerKind::Logistic,
                KindArg::Mlp => CombinerKind::Mlp,
            };
            let combiners = pipeline::fit_combiners(&records, &features, &splits, kind, seed)?;
            pipeline::write_combiners(&io.io.out, &combiners)?;
        }
        Command::Calibrate { io, method, alpha } => {
            let method: Method = method.parse()?;
            let alpha = alpha.unwrap_or(config.high_trust_alpha);
            let records = load_records(&io.io.input)?;
            let splits = pipeline::load_split_indices(&records, &io.io.out, io.splits.as_deref())?;
            let risks = pipeline::method_risks_from_dir(&records, &io.io.out, method)?;
            let pick = |idx: &[usize]| -> (Vec<f64>, Vec<bool>) {
                (idx.iter().map(|&i| risks[i]).collect(), idx.iter().map(|&i| records[i].hallucinated()).collect())
            };
            let (cal_r, cal_l) = pick(&splits.calibration);
            let policy = calibrate_threshold(method.name(), &cal_r, &cal_l, alpha)?;
            let (test_r, test_l) = pick(&splits.test);
            let (coverage, risk) = policy.evaluate(&test_r, &test_l);
            pipeline::write_text(&io.io.out.join(files::policy(method)), &policy.to_json()?)?;
            print_json(&json!({
                "policy": policy,
                "test": { "coverage": coverage, "selective_risk": risk },
            }))?;
        }
        Command::Evaluate(io) => {
            let records = load_records(&io.io.input)?;
            let splits = pipeline::load_split_indices(&records, &io.io.out, io.splits.as_deref())?;
            let evaluation = pipeline::evaluate(&records, &splits, &config, seed)?;
            pipeline::write_evaluation(&io.io.out, &evaluation)?;
            let summary: serde_json::Map<String, serde_json::Value> = evaluation
                .methods
                .iter()
                .map(|m| {
                    let r = &m.report;
                    (
                        r.method.clone(),
                        json!({ "auroc": r.auroc.mean, "auprc": r.auprc.mean, "e_aurc": r.e_aurc.mean, "tce": r.tce.mean }),
                    )
                })
                .collect();
            print_json(&serde_json::Value::Object(summary))?;
        }
        Command::Report { input, out } => {
            let written = render_report(&input, &out, config.high_trust_alpha)?;
            for path in written {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
