use clap::{Args, Parser, Subcommand};
use deltafi::campaign::{golden, mine, random, report, selfcheck, train, CampaignConfig};
use deltafi::exec::{with_workers, Execution};
use deltafi::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "deltafi", version, about = "Safety-potential driven fault injection campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fault-free reference runs; exits 3 if any of them is hazardous.
    Golden(Common),
    /// Baseline campaign drawing one fault plan per experiment.
    RandomCampaign(Common),
    /// Collect training data and fit the network.
    Train(Common),
    /// Mine critical (scene, fault) pairs with a trained model and replay them.
    Mine(Common),
    /// Consolidate campaign directories into MVF, compensation and boxplot tables.
    Report {
        /// Campaign output directories, including at least one golden directory.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Quick numerical checks of kinematics, inference and learning.
    Selfcheck,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Library id (A1..A6), `all`, or a scenario file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Experiments, or golden runs per scenario for `golden`.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self, golden: bool) -> Result<CampaignConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => CampaignConfig::load(p)?,
            None => CampaignConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = s.clone();
        }
        if let Some(m) = &self.model {
            cfg.model = Some(m.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.runs {
            if golden {
                cfg.golden_runs = n;
            } else {
                cfg.experiments = n;
            }
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::UnknownVariable(_) | Error::UnknownFault(_) => 2,
        Error::GoldenHazard { .. } => 3,
        Error::Unconverged { .. } => 4,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<bool, Error> {
    let run = |c: &Common, golden: bool, f: &(dyn Fn(&CampaignConfig, Execution) -> Result<(), Error> + Sync)| {
        let cfg = c.config(golden)?;
        let exec = Execution::from_workers(cfg.workers);
        with_workers(cfg.workers, || f(&cfg, exec))
    };
    match command {
        Command::Golden(c) => run(&c, true, &|cfg, exec| {
            for s in golden::cmd_golden(cfg, exec)? {
                println!("{}: {} runs, min cipo {:.3}, max lk {:.3}, hazards 0", s.scenario, s.runs, s.min_min_cipo, s.max_max_lk);
            }
            Ok(())
        })?,
        Command::RandomCampaign(c) => run(&c, false, &|cfg, exec| {
            for s in random::cmd_random_campaign(cfg, exec)? {
                println!("{} {}: {} experiments, {} hazards ({:.2}%)", s.label, s.scenario, s.experiments, s.hazards, 100.0 * s.hazard_rate());
            }
            Ok(())
        })?,
        Command::Train(c) => run(&c, false, &|cfg, exec| {
            let (_, s) = train::cmd_train(cfg, exec)?;
            println!(
                "{} rows ({} dropped), {} EM iterations, converged {}, model written to {}",
                s.rows,
                s.dropped,
                s.report.log_likelihood.len(),
                s.report.converged,
                s.model_path.display()
            );
            Ok(())
        })?,
        Command::Mine(c) => run(&c, false, &|cfg, exec| {
            for r in mine::cmd_mine(cfg, exec)? {
                println!(
                    "{}: {} critical pairs over {} scenes, {}/{} manifested, speedup {:.1}x",
                    r.scenario,
                    r.pairs.len(),
                    r.critical_scenes.len(),
                    r.manifested(),
                    r.replayed(),
                    r.speedup()
                );
            }
            Ok(())
        })?,
        Command::Report { dirs, out } => {
            let r = report::cmd_report(&dirs, &out)?;
            println!("{} campaigns, {} compensation curves, written to {}", r.campaigns.len(), r.compensation.len(), out.display());
        }
        Command::Selfcheck => {
            let checks = selfcheck::run_all()?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
