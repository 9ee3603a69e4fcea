use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use semveh_core::config::{ConfigFormat, ExperimentConfig};
use semveh_core::experiment::{self, SweepAxis};
use semveh_core::extractor::DEFAULT_L_MAX;

#[derive(Parser)]
#[command(name = "semveh", version, about = "Vehicular semantic-communication simulator and GAE-PPO trainer")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML or JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override, e.g. `--set rl.gae_lambda=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one agent per seed; writes logs, checkpoints and evaluation CSVs.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// A count (`5` means seeds 0..5) or a list (`3,7,9`); config seeds otherwise.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate each method at every value of one scenario axis.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `num_vehicles` or `u_max`.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "gae-ppo,ppo,random")]
        methods: Vec<String>,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive single-step optimum and reward histogram on one channel draw.
    Oracle {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        channel_seed: u64,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compression report over a fixture directory (mock backend unless --remote).
    Extract {
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long, default_value_t = DEFAULT_L_MAX)]
        l_max: usize,
        /// Base URL of an OpenAI-compatible endpoint; key from SEMVEH_LLM_API_KEY.
        #[arg(long)]
        remote: Option<String>,
        #[arg(long, default_value_t = 60.0)]
        timeout_s: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the resolved config (defaults, file and overrides) as TOML.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Repeat the run described by a manifest into a new directory.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let cfg = match &args.config {
        Some(path) => semveh_core::load_config(path, &args.overrides)?,
        None => ExperimentConfig::parse_with_overrides("", ConfigFormat::Toml, "<defaults>", &args.overrides)?,
    };
    Ok(cfg)
}

fn parse_seeds(spec: Option<&str>, cfg: &ExperimentConfig) -> Result<Vec<u64>> {
    let Some(spec) = spec else {
        return Ok(cfg.rl.seeds.clone());
    };
    let seeds: Vec<u64> = if spec.contains(',') {
        spec.split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad seed list `{spec}`"))?
    } else {
        let n: u64 = spec.trim().parse().with_context(|| format!("bad seed count `{spec}`"))?;
        (0..n).collect()
    };
    if seeds.is_empty() {
        bail!("--seeds must name at least one seed");
    }
    Ok(seeds)
}

fn print_files(dir: &Path, files: &[String]) {
    println!("wrote {} files to {}", files.len() + 1, dir.display());
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Train { cfg, seeds, out } => {
            let cfg = load(&cfg)?;
            let seeds = parse_seeds(seeds.as_deref(), &cfg)?;
            let outcome = experiment::run_train(&cfg, &seeds, &out)?;
            for r in &outcome.results {
                println!(
                    "seed {:>3} [{}]  return {:>12.3}  qoe {:>10.3}",
                    r.seed, outcome.manifest.method, r.mean_return, r.mean_qoe
                );
            }
            print_files(&out, &outcome.manifest.files);
        }
        Cmd::Eval {
            checkpoint,
            episodes,
            seed,
            out,
        } => {
            let (report, manifest) = experiment::run_eval(&checkpoint, episodes, seed, &out)?;
            println!("episodes {}  return {:.3}  qoe {:.3}", episodes, report.mean_return, report.mean_qoe);
            for (v, s) in report.mean_steps_to_demand.iter().enumerate() {
                println!("vehicle {v}: steps to demand {s:.2}");
            }
            print_files(&out, &manifest.files);
        }
        Cmd::Sweep {
            cfg,
            axis,
            values,
            methods,
            seeds,
            out,
        } => {
            let cfg = load(&cfg)?;
            let seeds = parse_seeds(seeds.as_deref(), &cfg)?;
            let axis = SweepAxis::parse(&axis)?;
            let (points, rows, manifest) = experiment::run_sweep(&cfg, axis, &values, &methods, &seeds, &out)?;
            for r in &rows {
                println!(
                    "{}={:<4} {:<8} qoe {:>10.3} ± {:.3}  words/step {:.2}",
                    axis.name(),
                    r.axis_value,
                    r.method,
                    r.mean_qoe,
                    r.ci95,
                    r.words_per_step
                );
            }
            let failed = points.iter().filter(|p| p.result.is_err()).count();
            print_files(&out, &manifest.files);
            if failed > 0 {
                eprintln!("{failed} sweep point(s) failed; see sweep_failures.csv");
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Oracle {
            cfg,
            channel_seed,
            bins,
            out,
        } => {
            let cfg = load(&cfg)?;
            let (best, manifest) = experiment::run_oracle(&cfg, channel_seed, bins, &out)?;
            println!("optimum index {}  reward {:.6}", best.index, best.reward);
            print_files(&out, &manifest.files);
        }
        Cmd::Extract {
            fixtures,
            l_max,
            remote,
            timeout_s,
            out,
        } => {
            let o = experiment::run_extract(&fixtures, l_max, remote.as_deref(), timeout_s, &out)?;
            let r = &o.report;
            println!(
                "{} images  mean ratio {:.4}  min {:.4}  max {:.4}  {}",
                r.count,
                r.mean_ratio,
                r.min_ratio,
                r.max_ratio,
                if r.pass { "PASS" } else { "FAIL" }
            );
            print_files(&out, &o.manifest.files);
            if !r.pass {
                return Ok(ExitCode::from(3));
            }
        }
        Cmd::Config { cfg } => {
            print!("{}", load(&cfg)?.to_toml_string()?);
        }
        Cmd::Rerun { manifest, out } => {
            let m = experiment::rerun(&manifest, &out)?;
            println!("reran `{}`", m.command.name());
            print_files(&out, &m.files);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
