use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ilearn::datasets::{load_csv, load_optdigits_pool, load_wine_pool, make_increments, IncrementSpec};
use ilearn::harness::{
    acceptance_checks, render_report, resolve_data_dir, run_experiment_with_models, Check, DatasetSource, Model,
    DATA_DIR_ENV,
};
use ilearn::learnpp::Combination;
use ilearn::{Error, ExperimentConfig, Method, ModelFile, Protocol, ReportFormat, RunReport};

#[derive(Parser)]
#[command(name = "ilearn", version, about = "Incremental learning with GA-optimized SVM ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Ocr,
    Wine,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Ocr => Protocol::Ocr,
            ProtocolArg::Wine => Protocol::Wine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Iluga,
    Learnpp,
    #[value(name = "learnpp_mt", alias = "learnpp-mt")]
    LearnppMt,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Iluga => Method::Iluga,
            MethodArg::Learnpp => Method::Learnpp,
            MethodArg::LearnppMt => Method::LearnppMt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    #[value(alias = "text-table", alias = "table")]
    Text,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Text => ReportFormat::Text,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Combine {
    Plain,
    Mt,
}

#[derive(Subcommand)]
enum Command {
    /// Run a canonical protocol and check it against the accuracy thresholds.
    Reproduce {
        #[arg(value_enum)]
        protocol: ProtocolArg,
        #[arg(long, value_enum, default_value = "iluga")]
        method: MethodArg,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Run an experiment described by a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        /// Save the final model of the first repetition.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Learn one or more increment CSVs, optionally resuming from a saved model.
    Learn {
        #[arg(long = "increment", required = true)]
        increments: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "iluga")]
        method: MethodArg,
        /// Model to extend; its training data is not needed.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Experiment config whose method sections are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of a saved model on a labelled CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Vote combination for Learn++ models.
        #[arg(long, value_enum, default_value = "mt")]
        combine: Combine,
    },
    /// Convert a JSON run report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one repetition's increments, validation and test sets as CSV.
    Split {
        #[arg(value_enum)]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("{c}");
    }
    checks.iter().all(|c| c.passed)
}

fn run(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Reproduce {
            protocol,
            method,
            reps,
            seed,
            data_dir,
            out,
            timing,
        } => {
            let protocol = protocol.into();
            let mut cfg = ExperimentConfig::canonical(protocol, method.into(), reps, seed);
            cfg.data_dir = data_dir;
            cfg.output = out.clone();
            let start = Instant::now();
            let (mut report, _) = run_experiment_with_models(&cfg)?;
            if timing {
                report.elapsed_secs = Some(start.elapsed().as_secs_f64());
            }
            print!("{}", render_report(&report, ReportFormat::Text)?);
            if let Some(p) = &out {
                write_or_print(&report.to_json()?, Some(p))?;
            }
            Ok(print_checks(&acceptance_checks(protocol, &report)))
        }
        Command::Train {
            config,
            data_dir,
            model_out,
        } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if data_dir.is_some() {
                cfg.data_dir = data_dir;
            }
            let (report, models) = run_experiment_with_models(&cfg)?;
            print!("{}", render_report(&report, ReportFormat::Text)?);
            if let Some(p) = &cfg.output {
                write_or_print(&report.to_json()?, Some(p))?;
            }
            if let (Some(p), Some(m)) = (model_out, models.first()) {
                m.to_file().save(p)?;
            }
            let protocol = match (&cfg.dataset, &cfg.increments) {
                (DatasetSource::Ocr, None) => Some(Protocol::Ocr),
                (DatasetSource::Wine, None) => Some(Protocol::Wine),
                _ => None,
            };
            Ok(protocol.is_none_or(|p| print_checks(&acceptance_checks(p, &report))))
        }
        Command::Learn {
            increments,
            method,
            model,
            config,
            seed,
            out,
        } => {
            let method: Method = method.into();
            let cfg = match config {
                Some(p) => ExperimentConfig::from_json_file(p)?,
                None => ExperimentConfig {
                    dataset: DatasetSource::Csv { path: PathBuf::new() },
                    ..ExperimentConfig::canonical(Protocol::Wine, method, 1, 0)
                },
            };
            let mut m = match model {
                Some(p) => Model::from_file(ModelFile::load(p)?, method == Method::LearnppMt),
                None => Model::new(method),
            };
            let seed = seed.unwrap_or(cfg.seed);
            for (k, path) in increments.iter().enumerate() {
                let data = load_csv(path)?;
                let step_seed = ilearn::derive_seed(seed, (m.classifier_count() + k) as u64);
                m = learn_one(m, &data, &cfg, step_seed)?;
                println!(
                    "{}: {} samples, {} classifiers, classes {:?}",
                    path.display(),
                    data.len(),
                    m.classifier_count(),
                    m.known_classes()
                );
            }
            m.to_file().save(&out)?;
            Ok(true)
        }
        Command::Eval { model, test, combine } => {
            let m = Model::from_file(ModelFile::load(&model)?, matches!(combine, Combine::Mt));
            let data = load_csv(&test)?;
            let classes: Vec<_> = data.classes().iter().copied().collect();
            let (correct, per_class) = ilearn::harness::evaluate(&m, &data, &classes)?;
            for (c, acc) in classes.iter().zip(&per_class) {
                println!("class {c}: {:.4}", acc);
            }
            println!("accuracy: {:.4} ({correct}/{})", correct as f64 / data.len() as f64, data.len());
            Ok(true)
        }
        Command::Report { input, format, out } => {
            let text = std::fs::read_to_string(&input).map_err(|e| Error::Io { path: input, source: e })?;
            let report = RunReport::from_json(&text)?;
            write_or_print(&render_report(&report, format.into())?, out.as_deref())?;
            Ok(true)
        }
        Command::Split {
            protocol,
            seed,
            data_dir,
            out_dir,
        } => {
            let dir = resolve_data_dir(data_dir.as_deref());
            let (pool, spec) = match protocol {
                ProtocolArg::Ocr => (load_optdigits_pool(&dir)?, IncrementSpec::ocr()),
                ProtocolArg::Wine => (load_wine_pool(&dir)?, IncrementSpec::wine()),
            };
            let sets = make_increments(&pool, &spec, seed)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            for (k, inc) in sets.increments.iter().enumerate() {
                inc.write_csv(out_dir.join(format!("ds{}.csv", k + 1)))?;
            }
            if let Some(v) = &sets.validation {
                v.write_csv(out_dir.join("validation.csv"))?;
            }
            sets.test.write_csv(out_dir.join("test.csv"))?;
            println!("wrote {} increments to {}", sets.increments.len(), out_dir.display());
            Ok(true)
        }
    }
}

fn learn_one(model: Model, data: &ilearn::Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<Model, Error> {
    Ok(match model {
        Model::Iluga(e) => {
            let icfg = ilearn::IlugaConfig {
                seed,
                ..cfg.iluga.clone()
            };
            Model::Iluga(ilearn::learn_increment(&e, data, &icfg)?)
        }
        Model::Learnpp { state, mt } => {
            let lcfg = ilearn::LearnppConfig {
                seed,
                combination: if mt { Combination::Mt } else { Combination::Plain },
                ..cfg.learnpp.clone()
            };
            Model::Learnpp {
                state: ilearn::train_increment_learnpp(&state, data, &lcfg)?,
                mt,
            }
        }
    })
}
