#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use gls_tail::conjugate::{fenchel_transform, tail_from_psi_with, FenchelConfig};
use gls_tail::descriptor::{parse_kernel, parse_oracle, parse_psi};
use gls_tail::harness::{
    run_experiment, simulate_martingale, ExperimentConfig, IncrementLaw, VerificationReport,
};
use gls_tail::moments::gls_norm;
use gls_tail::transfer::psi_from_kernel;

/// Generating functions, Young-Fenchel tail bounds and martingale checks.
#[derive(Parser)]
#[command(name = "gls-tail", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate h*(y) = sup_p (py - p ln psi(p)).
    Conjugate {
        #[arg(long)]
        psi: String,
        /// Explicit y values; overrides the range options.
        #[arg(long, num_args = 1..)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        y_min: f64,
        #[arg(long, default_value_t = 3.0)]
        y_max: f64,
        #[arg(long, default_value_t = 31)]
        y_points: usize,
        #[arg(long, default_value_t = 512)]
        p_grid: usize,
        #[arg(long)]
        p_max: Option<f64>,
        /// Write the table as CSV (`y,hstar,argmax_p`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the tail bound exp(-h*(ln(t/C))).
    Tailbound {
        #[arg(long)]
        psi: String,
        #[arg(long = "C", visible_alias = "c", default_value_t = 1.0)]
        scale_c: f64,
        #[arg(long, num_args = 1.., required = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 512)]
        p_grid: usize,
    },
    /// Evaluate psi(p) = inf_r g(p, r, |eta|_r) for a kernel and an oracle.
    Transfer {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long, num_args = 1.., required = true)]
        p: Vec<f64>,
    },
    /// GLS norm sup_p |zeta|_p / kappa(p) on a log grid.
    GlsNorm {
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        kappa: String,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Simulate a martingale and write its samples as CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check the Doob maximal inequality on simulated walks.
    VerifyDoob {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check the BDG upper inequality with constant sqrt(e).
    VerifyBdg {
        #[command(flatten)]
        run: RunArgs,
        /// Exit with status 2 on violations instead of only warning.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gaussian[:sigma], rademacher or uniform[:half_width]
    #[arg(long)]
    law: Option<String>,
    /// Number of steps.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    /// Moment grid, e.g. `--p 2 4 6`.
    #[arg(long, num_args = 1..)]
    p: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_law(text: &str) -> anyhow::Result<IncrementLaw> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (text.trim(), None),
    };
    let value = |default: f64| -> anyhow::Result<f64> {
        arg.map_or(Ok(default), |a| a.parse().with_context(|| format!("bad law parameter `{a}`")))
    };
    Ok(match name {
        "gaussian" | "normal" => IncrementLaw::Gaussian { sigma: value(1.0)? },
        "rademacher" if arg.is_none() => IncrementLaw::Rademacher,
        "uniform" => IncrementLaw::Uniform {
            half_width: value(1.0)?,
        },
        _ => bail!("unknown law `{text}`; use gaussian[:sigma], rademacher or uniform[:half_width]"),
    })
}

fn experiment(run: &RunArgs, base: ExperimentConfig) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &run.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => base.clone(),
    };
    // the subcommand decides the kernel
    cfg.kernel = base.kernel;
    if let Some(law) = &run.law {
        cfg.law = parse_law(law)?;
    }
    if let Some(n) = run.n {
        cfg.n_steps = n;
    }
    if let Some(t) = run.trials {
        cfg.n_trials = t;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if run.serial {
        cfg.parallel = false;
    }
    if !run.p.is_empty() {
        cfg.moments.p_grid = Some(run.p.clone());
    }
    if let Some(out) = &run.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fenchel_config(p_grid: usize, p_max: Option<f64>) -> FenchelConfig {
    let cfg = FenchelConfig::with_grid_size(p_grid);
    match p_max {
        Some(m) => cfg.with_p_max(m),
        None => cfg,
    }
}

fn report_outputs(report: &VerificationReport, dir: &Path) -> anyhow::Result<()> {
    report.write_outputs(dir)?;
    println!("{}", report.summary());
    println!("reports written to {}", dir.display());
    Ok(())
}

/// Ok(true) when a verification found violations that should fail the run.
fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Conjugate {
            psi,
            y,
            y_min,
            y_max,
            y_points,
            p_grid,
            p_max,
            out,
        } => {
            let psi = parse_psi(&psi)?;
            let ys = if y.is_empty() {
                if y_points < 2 || !(y_max > y_min) {
                    bail!("need y_max > y_min and y_points >= 2");
                }
                let step = (y_max - y_min) / (y_points - 1) as f64;
                (0..y_points).map(|i| y_min + step * i as f64).collect()
            } else {
                y
            };
            let table = fenchel_transform(&psi, &ys, &fenchel_config(p_grid, p_max))?;
            println!("y,hstar,argmax_p");
            for i in 0..table.len() {
                println!("{},{},{}", table.y_grid()[i], table.hstar()[i], table.argmax_p()[i]);
            }
            if let Some(path) = out {
                table.write_csv(&path)?;
            }
        }
        Command::Tailbound {
            psi,
            scale_c,
            t,
            p_grid,
        } => {
            let psi = parse_psi(&psi)?;
            let cfg = fenchel_config(p_grid, None);
            for t in t {
                println!("{}", tail_from_psi_with(&psi, scale_c, t, &cfg)?);
            }
        }
        Command::Transfer { kernel, oracle, p0, p } => {
            let mut kernel = parse_kernel(&kernel)?;
            if let Some(p0) = p0 {
                kernel = kernel.with_p0(p0)?;
            }
            let eta = parse_oracle(&oracle)?;
            println!("p,psi,argmin_r");
            for p in p {
                let inf = psi_from_kernel(&kernel, &eta, p)?;
                println!("{p},{},{}", inf.value, inf.argmin_r);
            }
        }
        Command::GlsNorm { oracle, kappa, grid } => {
            let sup = gls_norm(&parse_oracle(&oracle)?, &parse_psi(&kappa)?, grid)?;
            println!("{}", sup.value);
            eprintln!("attained at p = {}", sup.argmax_p);
        }
        Command::Simulate { run } => {
            let cfg = experiment(&run, ExperimentConfig::default())?;
            let batch = simulate_martingale(&cfg.simulation())?;
            let dir = &cfg.output_dir;
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            batch.terminal.write_csv(dir.join("terminal.csv"))?;
            batch.running_max.write_csv(dir.join("running_max.csv"))?;
            batch.quad_variation_sqrt.write_csv(dir.join("quad_variation_sqrt.csv"))?;
            println!(
                "simulated {} trials of {} steps ({}, seed {})",
                cfg.n_trials,
                cfg.n_steps,
                cfg.law.name(),
                cfg.seed
            );
            println!("pathwise violations: {}", batch.pathwise_violations());
            println!("samples written to {}", dir.display());
        }
        Command::VerifyDoob { run } => {
            let cfg = experiment(&run, ExperimentConfig::default())?;
            let report = run_experiment(&cfg)?;
            report_outputs(&report, &cfg.output_dir)?;
            return Ok(!report.passed());
        }
        Command::VerifyBdg { run, strict } => {
            let cfg = experiment(&run, ExperimentConfig::bdg_defaults())?;
            let report = run_experiment(&cfg)?;
            report_outputs(&report, &cfg.output_dir)?;
            return Ok(strict && !report.passed());
        }
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
