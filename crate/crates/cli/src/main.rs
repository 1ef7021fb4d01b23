use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lmoments::harness::{self, Suite, SweepConfig};
use lmoments::Error;

#[derive(Parser)]
#[command(
    name = "lmoments",
    version,
    about = "Twisted second moments of weight-2 L-functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute eigenvalue tables for a level and write them as JSON.
    Eigendata {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical moment against its main term, as one JSON line.
    Moment {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        p: u64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        j: u32,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Closed-form main term.
    Mainterm {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        p: u64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        j: u32,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
    },
    /// Sweep a grid of levels and write CSV.
    Sweep {
        /// TOML configuration; command-line flags override its entries.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        qmin: Option<u64>,
        #[arg(long)]
        qmax: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        p: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        j: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Record per-level wall-clock times.
        #[arg(long)]
        timing: bool,
    },
    /// Run invariant checks and print a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::UnsupportedLevel(_)
            | Error::UnsupportedHeckeIndex { .. }
            | Error::Toml(_) => Failure::Usage(e.into()),
            other => Failure::Compute(other.into()),
        }
    }
}

fn sweep_config(cmd: Command) -> Result<SweepConfig, Failure> {
    let Command::Sweep {
        config,
        qmin,
        qmax,
        p,
        j,
        t,
        tol,
        seed,
        cache_dir,
        out,
        threads,
        timing,
    } = cmd
    else {
        unreachable!("called with a sweep command")
    };
    let mut cfg = match config {
        Some(path) => SweepConfig::load(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Usage)?,
        None => {
            let (Some(q_min), Some(q_max)) = (qmin, qmax) else {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "--qmin and --qmax are required without --config"
                )));
            };
            SweepConfig::from_toml(&format!("q_min = {q_min}\nq_max = {q_max}\np_list = [2]\n"))?
        }
    };
    if let Some(v) = qmin {
        cfg.q_min = v;
    }
    if let Some(v) = qmax {
        cfg.q_max = v;
    }
    if !p.is_empty() {
        cfg.p_list = p;
    }
    if !j.is_empty() {
        cfg.j_list = j;
    }
    if !t.is_empty() {
        cfg.t_list = t;
    }
    if let Some(v) = tol {
        cfg.tol = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if cache_dir.is_some() {
        cfg.cache_dir = cache_dir;
    }
    if out.is_some() {
        cfg.out_path = out;
    }
    if let Some(v) = threads {
        cfg.threads = v;
    }
    cfg.timing |= timing;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Eigendata {
            q,
            n_max,
            seed,
            out,
        } => {
            let file = harness::cmd_eigendata(q, n_max, seed, &out)?;
            eprintln!("wrote {} forms for q = {q} to {}", file.dim, out.display());
        }
        Command::Moment {
            q,
            p,
            j,
            t,
            tol,
            seed,
            cache_dir,
        } => {
            let record = harness::cmd_moment(q, p, j, t, tol, seed, cache_dir.as_deref())?;
            println!(
                "{}",
                serde_json::to_string(&record).map_err(|e| Failure::Compute(e.into()))?
            );
        }
        Command::Mainterm { q, p, j, t } => {
            let v = harness::cmd_mainterm(p, q, j, t)?;
            println!("{{\"re\":{:e},\"im\":{:e}}}", v.re, v.im);
        }
        cmd @ Command::Sweep { .. } => {
            let cfg = sweep_config(cmd)?;
            let outcome = harness::cmd_sweep(&cfg)?;
            let failed = outcome.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                log::warn!("{failed} of {} rows failed", outcome.rows.len());
            }
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = harness::cmd_verify(suite);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| Failure::Compute(e.into()))?
            );
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
