use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eans::analysis::{
    neg_weight_cdf, run_sweep, score_gap_report, substitution_histogram, write_csv, NegativeGroup,
    ProbeSampler, ScoreGapRow, SubstitutionHistogram, SweepRow, WeightCdf,
};
use eans::config::{keys_markdown, preset, preset_names, RunConfig};
use eans::dataset::{load_dataset, KgDataset, Split, Splits};
use eans::evaluator::{evaluate, Metrics, Protocol};
use eans::params::{load_checkpoint, Checkpoint};
use eans::sampling::Strategy;
use eans::synthetic::{generate, ToySpec};
use eans::trainer::{run_ablation, AblationRow, RunOutput, Trainer};
use eans::Error;

#[derive(Parser)]
#[command(
    name = "eans",
    version,
    about = "Knowledge-graph embedding with entity-aware negative sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset, applied before the config file.
    #[arg(long)]
    preset: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Dataset directory (overrides the config).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and evaluate the final and best checkpoints.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Continue from this checkpoint directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Filtered link-prediction metrics of a checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Rank against every entity without filtering known facts.
        #[arg(long)]
        raw: bool,
        /// CSV file the metrics row is appended to.
        #[arg(long, default_value = "metrics.csv")]
        csv: PathBuf,
    },
    /// Score gaps, negative-weight CDF or substitution histogram.
    Analyze {
        kind: AnalysisKind,
        /// Checkpoint directories (several for `gap`).
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        /// Samplers to compare; defaults to the config's strategy.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train and evaluate every (n, method, seed) cell.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train and evaluate the 2x2 grid of sampler and substitution switches.
    Ablation {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write the bundled synthetic dataset.
    GenToy {
        #[arg(long, default_value = "data/toy")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a resolved config, the key list or the preset names.
    ShowConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        keys: bool,
        #[arg(long)]
        list_presets: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisKind {
    Gap,
    Cdf,
    Hist,
}

/// An error tagged with the module that raised it.
struct Failure {
    module: &'static str,
    error: Error,
}

trait Context<T> {
    fn during(self, module: &'static str) -> Result<T, Failure>;
}

impl<T> Context<T> for eans::Result<T> {
    fn during(self, module: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { module, error })
    }
}

fn io_failure(module: &'static str, path: &Path, e: std::io::Error) -> Failure {
    Failure {
        module,
        error: Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    }
}

fn resolve(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.preset {
        Some(p) => preset(p).during("config")?,
        None => RunConfig::default(),
    };
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| io_failure("config", path, e))?;
        cfg.apply_str(&text, path).during("config")?;
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure {
            module: "config",
            error: Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")),
        })?;
        cfg.set(k.trim(), v.trim()).during("config")?;
    }
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate().during("config")?;
    Ok(cfg)
}

fn require<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, Failure> {
    value.as_deref().ok_or_else(|| Failure {
        module: "config",
        error: Error::Config(format!(
            "`{key}` is not set (use --{key} or a `{key} =` line)"
        )),
    })
}

fn load(cfg: &RunConfig) -> Result<KgDataset, Failure> {
    let dir = require(&cfg.dataset, "dataset")?;
    load_dataset(dir, Splits::ALL).during("dataset")
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_failure("cli", dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_failure("cli", path, e))
}

fn write_resolved(cfg: &RunConfig, ds: &KgDataset, path: &Path) -> Result<(), Failure> {
    let mut resolved = cfg.clone();
    resolved.train = cfg.train.resolved(ds.num_entities());
    write_text(path, &resolved.render())
}

fn dataset_label(cfg: &RunConfig) -> String {
    cfg.dataset
        .as_deref()
        .and_then(Path::file_name)
        .map_or_else(
            || "dataset".to_owned(),
            |n| n.to_string_lossy().into_owned(),
        )
}

fn cmd_train(args: &ConfigArgs, resume: Option<&Path>) -> Result<(), Failure> {
    let cfg = resolve(args)?;
    let ds = load(&cfg)?;
    let out = RunOutput::new(require(&cfg.out, "out")?);
    write_resolved(&cfg, &ds, &out.resolved_config())?;
    let trainer = match resume {
        Some(dir) => Trainer::resume_from_dir(&ds, &cfg.train, dir).during("trainer")?,
        None => Trainer::new(&ds, &cfg.train).during("trainer")?,
    };
    let mut trainer = trainer.with_output(out.clone()).during("trainer")?;
    eprintln!(
        "training {} ({}) for {} steps, digest {}",
        cfg.train.model,
        cfg.train.strategy,
        cfg.train.max_steps,
        trainer.digest()
    );
    trainer.run().during("trainer")?;
    let (params, log) = trainer.finish().during("trainer")?;
    if let Some(last) = log.records.last() {
        eprintln!("step {} loss {:.6}", last.step, last.loss);
    }

    let split = ds.split(cfg.eval_split);
    let label = dataset_label(&cfg);
    let strategy = cfg.train.strategy.as_str();
    let mut rows = vec![format!("checkpoint,{}", Metrics::CSV_HEADER)];
    let final_metrics = evaluate(&params, split, &ds.filter, Protocol::Filtered);
    println!("{}", final_metrics.to_json());
    rows.push(format!(
        "final,{}",
        final_metrics.csv_row(&label, params.kind.as_str(), strategy)
    ));
    let best = out.checkpoint("best");
    if best.exists() {
        let ckpt = load_checkpoint(&best).during("params")?;
        let m = evaluate(&ckpt.params, split, &ds.filter, Protocol::Filtered);
        rows.push(format!(
            "best,{}",
            m.csv_row(&label, params.kind.as_str(), strategy)
        ));
    }
    write_text(&out.metrics(), &(rows.join("\n") + "\n"))
}

fn cmd_evaluate(
    checkpoint: &Path,
    dataset: &Path,
    split: &str,
    raw: bool,
    csv: &Path,
) -> Result<(), Failure> {
    let split: Split = split.parse().during("cli")?;
    if split == Split::Train {
        eprintln!("warning: evaluating on the training split");
    }
    let ckpt = load_checkpoint(checkpoint).during("params")?;
    let ds = load_dataset(dataset, Splits::ALL).during("dataset")?;
    ckpt.ensure_compatible(None, ds.num_entities(), ds.num_relations())
        .during("evaluator")?;
    let protocol = if raw {
        Protocol::Raw
    } else {
        Protocol::Filtered
    };
    let m = evaluate(&ckpt.params, ds.split(split), &ds.filter, protocol);
    println!("{}", m.to_json());
    let fresh = !csv.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(csv)
        .map_err(|e| io_failure("cli", csv, e))?;
    let label = dataset
        .file_name()
        .map_or_else(|| "dataset".into(), |n| n.to_string_lossy().into_owned());
    let strategy = ckpt.extra("map").map_or("uniform", |_| "eans");
    let mut text = String::new();
    if fresh {
        text.push_str(Metrics::CSV_HEADER);
        text.push('\n');
    }
    text.push_str(&m.csv_row(&label, ckpt.params.kind.as_str(), strategy));
    text.push('\n');
    f.write_all(text.as_bytes())
        .map_err(|e| io_failure("cli", csv, e))
}

fn load_checkpoints(paths: &[PathBuf], ds: &KgDataset) -> Result<Vec<Checkpoint>, Failure> {
    paths
        .iter()
        .map(|p| {
            let c = load_checkpoint(p).during("params")?;
            c.ensure_compatible(None, ds.num_entities(), ds.num_relations())
                .during("analysis")?;
            Ok(c)
        })
        .collect()
}

fn cmd_analyze(
    kind: AnalysisKind,
    paths: &[PathBuf],
    strategies: &[String],
    args: &ConfigArgs,
) -> Result<(), Failure> {
    let cfg = resolve(args)?;
    let ds = load(&cfg)?;
    let out = RunOutput::new(require(&cfg.out, "out")?);
    let ckpts = load_checkpoints(paths, &ds)?;
    let base = ProbeSampler::from_config(&cfg.train);
    let samplers: Vec<ProbeSampler> = if strategies.is_empty() {
        vec![base.clone()]
    } else {
        strategies
            .iter()
            .map(|s| s.parse::<Strategy>().map(|st| base.with_strategy(st)))
            .collect::<eans::Result<_>>()
            .during("config")?
    };
    let digest = cfg.train.resolved(ds.num_entities()).digest();
    let name = match kind {
        AnalysisKind::Gap => "gap",
        AnalysisKind::Cdf => "cdf",
        AnalysisKind::Hist => "hist",
    };
    write_resolved(&cfg, &ds, &out.analysis().join(format!("{name}.cfg")))?;
    let sources: Vec<String> = paths
        .iter()
        .map(|p| format!("checkpoint {}", p.display()))
        .collect();
    match kind {
        AnalysisKind::Gap => {
            let list: Vec<(u64, &_)> = ckpts.iter().map(|c| (c.state.step, &c.params)).collect();
            let rows =
                score_gap_report(&list, &ds, &samplers, cfg.gap_batches).during("analysis")?;
            let lines: Vec<String> = rows.iter().map(ScoreGapRow::csv_row).collect();
            let mut notes = sources;
            notes.push(
                "f is a dissimilarity (lower = more plausible); neg_* columns report -f".into(),
            );
            write_csv(
                &out.analysis().join("gap.csv"),
                &digest,
                &notes,
                ScoreGapRow::CSV_HEADER,
                &lines,
            )
            .during("analysis")?;
        }
        AnalysisKind::Cdf => {
            for (ckpt, path) in ckpts.iter().zip(paths) {
                for s in &samplers {
                    let cdf: WeightCdf =
                        neg_weight_cdf(&ckpt.params, &ds, s, cfg.cdf_temperature, cfg.cdf_batches)
                            .during("analysis")?;
                    let mut notes = vec![format!("checkpoint {}", path.display())];
                    notes.push(format!(
                        "strategy {} batches {} batch_size {} negatives {} temperature {}",
                        s.strategy, cdf.batches, cdf.batch_size, s.negatives, cdf.temperature
                    ));
                    let file = format!("cdf-step{}-{}.csv", ckpt.state.step, s.strategy);
                    write_csv(
                        &out.analysis().join(file),
                        &digest,
                        &notes,
                        WeightCdf::CSV_HEADER,
                        &cdf.csv_rows(),
                    )
                    .during("analysis")?;
                }
            }
        }
        AnalysisKind::Hist => {
            for (ckpt, path) in ckpts.iter().zip(paths) {
                let s = &samplers[0];
                let h: SubstitutionHistogram =
                    substitution_histogram(&ckpt.params, &ds, s, cfg.hist_batches, cfg.hist_bins)
                        .during("analysis")?;
                let mut notes = vec![
                    format!("checkpoint {}", path.display()),
                    "raw substitution score f(e, r_sub, e') (dissimilarity)".into(),
                ];
                notes.extend(h.summary_lines());
                notes.push(format!(
                    "separation train_fn vs true_neg = {:.3} pooled SE",
                    h.separation(
                        NegativeGroup::TrainFalseNegative,
                        NegativeGroup::TrueNegative
                    )
                ));
                let file = format!("hist-step{}.csv", ckpt.state.step);
                write_csv(
                    &out.analysis().join(file),
                    &digest,
                    &notes,
                    SubstitutionHistogram::CSV_HEADER,
                    &h.csv_rows(),
                )
                .during("analysis")?;
            }
        }
    }
    Ok(())
}

fn cmd_sweep(args: &ConfigArgs) -> Result<(), Failure> {
    let cfg = resolve(args)?;
    let ds = load(&cfg)?;
    let out = RunOutput::new(require(&cfg.out, "out")?);
    write_resolved(&cfg, &ds, &out.analysis().join("sweep.cfg"))?;
    let rows = run_sweep(
        &ds,
        &cfg.train,
        &cfg.n_values,
        &cfg.methods,
        &cfg.sweep_seeds,
        cfg.eval_split,
        cfg.jobs,
    )
    .during("analysis")?;
    let lines: Vec<String> = rows.iter().map(SweepRow::csv_row).collect();
    for l in &lines {
        println!("{l}");
    }
    let notes = vec![format!("split {}", cfg.eval_split.as_str())];
    let digest = cfg.train.resolved(ds.num_entities()).digest();
    write_csv(
        &out.analysis().join("sweep.csv"),
        &digest,
        &notes,
        SweepRow::CSV_HEADER,
        &lines,
    )
    .during("analysis")
}

fn cmd_ablation(args: &ConfigArgs) -> Result<(), Failure> {
    let cfg = resolve(args)?;
    let ds = load(&cfg)?;
    let out = RunOutput::new(require(&cfg.out, "out")?);
    write_resolved(&cfg, &ds, &out.analysis().join("ablation.cfg"))?;
    let rows = run_ablation(&ds, &cfg.train, cfg.eval_split).during("trainer")?;
    let lines: Vec<String> = rows.iter().map(AblationRow::csv_row).collect();
    for l in &lines {
        println!("{l}");
    }
    let notes = vec![format!("split {}", cfg.eval_split.as_str())];
    let digest = cfg.train.resolved(ds.num_entities()).digest();
    write_csv(
        &out.analysis().join("ablation.csv"),
        &digest,
        &notes,
        AblationRow::CSV_HEADER,
        &lines,
    )
    .during("trainer")
}

fn cmd_gen_toy(out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = ToySpec::default();
    if let Some(s) = seed {
        spec.seed = s;
    }
    let ds = generate(&spec).during("synthetic")?;
    ds.write_dir(out).during("dataset")?;
    eprint!("{}", ds.report);
    Ok(())
}

fn cmd_show_config(args: &ConfigArgs, keys: bool, list: bool) -> Result<(), Failure> {
    if keys {
        print!("{}", keys_markdown());
    } else if list {
        for name in preset_names() {
            println!("{name}");
        }
    } else {
        print!("{}", resolve(args)?.render());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { cfg, resume } => cmd_train(&cfg, resume.as_deref()),
        Command::Evaluate {
            checkpoint,
            dataset,
            split,
            raw,
            csv,
        } => cmd_evaluate(&checkpoint, &dataset, &split, raw, &csv),
        Command::Analyze {
            kind,
            checkpoints,
            strategies,
            cfg,
        } => cmd_analyze(kind, &checkpoints, &strategies, &cfg),
        Command::Sweep { cfg } => cmd_sweep(&cfg),
        Command::Ablation { cfg } => cmd_ablation(&cfg),
        Command::GenToy { out, seed } => cmd_gen_toy(&out, seed),
        Command::ShowConfig {
            cfg,
            keys,
            list_presets,
        } => cmd_show_config(&cfg, keys, list_presets),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { module, error }) => {
            eprintln!("error in {module}: {error}");
            if error.is_user_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
