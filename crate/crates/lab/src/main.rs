use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use sglr_lab::config::{parse_list, parse_strategy};
use sglr_lab::run::{self, AttackOverride, Which};
use sglr_lab::{io, ExperimentConfig, LabError, LabResult};

#[derive(Parser)]
#[command(name = "sglr", version, about = "Adversarial training with self-guided label refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (`key = value` lines or flat JSON); defaults apply without one
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings applied after the file
    #[arg(short = 's', long = "set")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> LabResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) if !p.exists() => return Err(LabError::MissingInput(format!("no config file at {}", p.display()))),
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_overrides(&self.set)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AttackArgs {
    /// ℓ∞ radius (default: the run's attack)
    #[arg(long)]
    eps: Option<f64>,
    /// PGD step size (default: eps/4)
    #[arg(long)]
    step: Option<f64>,
    /// PGD iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Which checkpoint to load: best or final
    #[arg(long, default_value = "final")]
    checkpoint: String,
}

impl AttackArgs {
    fn split(&self) -> LabResult<(Which, AttackOverride)> {
        let which = match self.checkpoint.as_str() {
            "best" => Which::Best,
            "final" => Which::Final,
            other => return Err(LabError::Validation(format!("checkpoint {other:?}: expected best or final"))),
        };
        Ok((which, AttackOverride { eps: self.eps, step: self.step, iters: self.iters }))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the train/test split of a config as CSV
    GenData {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train one configuration into a run directory
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run directory (default: the config's out_dir)
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(short, long)]
        quiet: bool,
    },
    /// Evaluate a saved checkpoint
    Eval {
        #[arg(short, long)]
        run: PathBuf,
        #[command(flatten)]
        attack: AttackArgs,
        /// Rademacher probes for the Hessian trace (0 skips it)
        #[arg(long, default_value_t = 0)]
        probes: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Craft adversarial test examples against a saved checkpoint
    Attack {
        #[arg(short, long)]
        run: PathBuf,
        #[command(flatten)]
        attack: AttackArgs,
        /// Destination CSV
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Smoothing level × temperature grid
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated r values
        #[arg(long)]
        r: String,
        /// Comma-separated temperatures
        #[arg(long)]
        t: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Label strategy × noise-rate grid
    NoiseSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated noise rates
        #[arg(long)]
        rates: String,
        /// Comma-separated strategies (hard, uniform_ls, sglr)
        #[arg(long, default_value = "hard,sglr")]
        strategies: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Score examples crafted on one run against another run's model
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        attack: AttackArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Numerical checks of the identities behind the method
    TheoryCheck {
        /// self_mix, target_mix, noise_symmetric, noise_asymmetric, xent_decomposition, log_sum, iiw_reduction or all
        #[arg(long, default_value = "all")]
        check: String,
        /// Trials per check (default: each check's standard count)
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Plot-ready CSVs from a run directory
    ExportPlots {
        #[arg(short, long)]
        run: PathBuf,
        /// Destination directory (default: <run>/plots)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn emit(v: &Value, out: Option<&Path>) -> LabResult<()> {
    match out {
        Some(p) => io::write_json(p, v),
        None => {
            println!("{}", serde_json::to_string_pretty(v)?);
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> LabResult<()> {
    match cmd {
        Command::GenData { cfg, out } => {
            let data = run::run_gen_data(&cfg.load()?, &out)?;
            println!("wrote {} train and {} test examples to {}", data.train.len(), data.test.len(), out.display());
        }
        Command::Train { cfg, out, quiet } => {
            let cfg = cfg.load()?;
            let dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let s = run::run_train(&cfg, &dir, !quiet)?;
            println!(
                "best robust {:.4} at epoch {}, final {:.4}, diff {:.4} -> {}",
                s.robust_gap.best,
                s.robust_gap.best_epoch,
                s.robust_gap.last,
                s.robust_gap.diff,
                dir.display()
            );
        }
        Command::Eval { run: dir, attack, probes, out } => {
            let (which, ov) = attack.split()?;
            emit(&run::run_eval(&dir, which, &ov, probes)?, out.as_deref())?;
        }
        Command::Attack { run: dir, attack, out } => {
            let (which, ov) = attack.split()?;
            emit(&run::run_attack(&dir, which, &ov, &out)?, None)?;
        }
        Command::Ablate { cfg, r, t, out } => {
            let cfg = cfg.load()?;
            let (rs, ts) = (parse_list("--r", &r)?, parse_list("--t", &t)?);
            run::run_ablate(&cfg, &rs, &ts, &out, true)?;
            println!("summary -> {}", out.join("summary.csv").display());
        }
        Command::NoiseSweep { cfg, rates, strategies, out } => {
            let cfg = cfg.load()?;
            let rates = parse_list("--rates", &rates)?;
            let strategies = strategies.split(',').map(parse_strategy).collect::<LabResult<Vec<_>>>()?;
            run::run_noise_sweep(&cfg, &rates, &strategies, &out, true)?;
            println!("summary -> {}", out.join("summary.csv").display());
        }
        Command::Transfer { source, target, attack, out } => {
            let (which, ov) = attack.split()?;
            emit(&run::run_transfer(&source, &target, which, &ov)?, out.as_deref())?;
        }
        Command::TheoryCheck { check, trials, seed, out } => {
            let reports = run::run_theory(&check, trials, seed)?;
            let failed = reports.iter().filter(|r| r["pass"] != Value::Bool(true)).count();
            emit(&Value::Array(reports), out.as_deref())?;
            if failed > 0 {
                return Err(LabError::Validation(format!("{failed} theory check(s) failed")));
            }
        }
        Command::ExportPlots { run: dir, out } => {
            let out = out.unwrap_or_else(|| dir.join("plots"));
            for p in run::export_plots(&dir, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
