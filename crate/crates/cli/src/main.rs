use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use kidrank_cli::commands::{self, print, ExplainRequest, DEFAULT_ROSTER};
use kidrank_cli::explain::{KidneyRef, SegmentSpec};
use kidrank_cli::{exit_code, ConfigError};

#[derive(Parser)]
#[command(
    name = "kidrank",
    version,
    about = "Rank transplant centers for hard-to-place kidneys by predicted acceptance"
)]
struct Cli {
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a calibrated synthetic dataset.
    Generate {
        /// Generator TOML; omitted keys take the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an experiment end to end into one run directory.
    Run {
        /// Experiment TOML.
        #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Re-run the config recorded in an earlier run's manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Compare learners over repeated donor-wise splits.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated learners.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ROSTER.iter().map(|s| s.to_string()))]
        roster: Vec<String>,
        #[arg(long, default_value_t = 10)]
        splits: usize,
    },
    /// SHAP outputs for a finished run (written to <run>/explain by default).
    Explain {
        /// Run directory holding model.json and features_eval.csv.
        #[arg(long)]
        run: PathBuf,
        /// Mean |SHAP| importance over the evaluation rows.
        #[arg(long)]
        global: bool,
        /// Importance within a feature tail, e.g. kdri:bottom10 or cit:top10.
        #[arg(long)]
        segment: Vec<SegmentSpec>,
        /// Top and bottom centers with force data for a kidney, DONOR#K.
        #[arg(long)]
        kidney: Vec<KidneyRef>,
        /// Features kept per force plot and in shap_points.csv.
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Also write the per-row SHAP matrix for --global.
        #[arg(long)]
        shap_values: bool,
    },
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf> {
    out.ok_or_else(|| ConfigError::new("out", "this command needs --out DIR").into())
}

fn real_main(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::new("threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Generate { config } => {
            let cfg = commands::read_generator_config(config.as_deref())?;
            let s = commands::generate(cfg, cli.seed, &require_out(cli.out)?)?;
            print(&s.to_string());
        }
        Command::Run { config, manifest } => {
            let out = require_out(cli.out)?;
            let cfg = match (config, manifest) {
                (Some(c), _) => commands::load_experiment(&c, cli.seed)?,
                (None, Some(m)) => {
                    if cli.seed.is_some() {
                        return Err(ConfigError::new("seed", "a manifest pins its seed").into());
                    }
                    commands::experiment_from_manifest(&m)?.0
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            print(&commands::run(&cfg, &out)?.to_string());
        }
        Command::Compare { config, roster, splits } => {
            let out = require_out(cli.out)?;
            let cfg = commands::load_experiment(&config, cli.seed)?;
            let roster = commands::roster(&roster, &cfg)?;
            let c = commands::compare(&cfg, &roster, splits, &out)?;
            print(&commands::comparison_table(&c));
        }
        Command::Explain {
            run,
            global,
            segment,
            kidney,
            top_k,
            shap_values,
        } => {
            let out = cli.out.unwrap_or_else(|| run.join("explain"));
            let req = ExplainRequest {
                global,
                segments: segment,
                kidneys: kidney,
                top_k,
                shap_values,
            };
            print(&commands::explain(&run, &req, &out)?.to_string());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
