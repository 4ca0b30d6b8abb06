use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ekinfer::harness::io::{read_samples_csv, to_json_pretty, write_atomic};
use ekinfer::harness::{analyze, compare, load_bounds, posterior_predictive, run_experiment, write_outputs, ExperimentConfig};
use ekinfer::streams::Streams;
use ekinfer::Error;

#[derive(Parser)]
#[command(name = "ekinfer", version, about = "Ensemble Kalman and tempering SMC inference runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Log,
    Logit,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write samples, report and predictive summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the run seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several configurations on one model and tabulate cost and accuracy.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "compare")]
        out: PathBuf,
    },
    /// Eigen-analysis of the sensitivity matrix of a samples file.
    Sloppiness {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, value_enum)]
        transform: TransformArg,
        /// JSON object of parameter name -> [lower, upper]; its keys pick the columns.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        #[arg(long, default_value = "sloppiness")]
        out: PathBuf,
    },
    /// Posterior predictive bands for a samples file under a config's model.
    Predict {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("EKINFER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("EKINFER_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn put(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), Error> {
    let p = dir.join(name);
    write_atomic(&p, bytes)?;
    written.push(p);
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = output_dir(&cfg, out);
            let result = run_experiment(&cfg)?;
            report_written(&write_outputs(&result, &dir)?);
        }
        Command::Compare { configs, out } => {
            let cfgs = configs
                .iter()
                .map(|p| ExperimentConfig::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let rep = compare(&cfgs)?;
            let mut written = Vec::new();
            put(&out, "compare.csv", &rep.to_csv()?, &mut written)?;
            put(&out, "compare.json", to_json_pretty(&rep)?.as_bytes(), &mut written)?;
            report_written(&written);
        }
        Command::Sloppiness {
            samples,
            transform,
            bounds,
            top_k,
            out,
        } => {
            let (names, data) = read_samples_csv(&samples)?;
            let bounds = bounds.as_deref().map(load_bounds).transpose()?;
            let res = analyze(&names, &data, matches!(transform, TransformArg::Logit), bounds.as_ref(), top_k)?;
            let mut written = Vec::new();
            put(&out, "eigenvectors.csv", &res.eigenvectors_csv()?, &mut written)?;
            put(&out, "eigenparameters.csv", &res.eigenparameters_csv()?, &mut written)?;
            put(&out, "sensitivity.json", to_json_pretty(&res.summary)?.as_bytes(), &mut written)?;
            report_written(&written);
        }
        Command::Predict { samples, model, out } => {
            let cfg = ExperimentConfig::load(&model)?;
            let m = cfg.model.build_static()?;
            let (names, data) = read_samples_csv(&samples)?;
            if names != m.param_names() {
                return Err(Error::Config(format!(
                    "sample columns [{}] do not match model parameters [{}]",
                    names.join(", "),
                    m.param_names().join(", ")
                )));
            }
            let p = posterior_predictive(&m, &data, &Streams::new(cfg.seed))?;
            let csv = p.to_csv()?;
            match out {
                Some(path) => {
                    write_atomic(&path, &csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{}", String::from_utf8_lossy(&csv)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = configure_threads().and_then(|()| execute(cli.command));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("ekinfer: configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ekinfer: {e}");
            ExitCode::from(1)
        }
    }
}
