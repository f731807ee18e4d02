use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sreda_core::params::{derive_params, derive_params_finite, predicted_evals};
use sreda_core::{Algorithm, SmoothnessProfile};
use sreda_harness::checks::run_checks;
use sreda_harness::runner::{execute_run, execute_sweep};
use sreda_harness::{ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "sreda", version, about = "Run SREDA and baseline minimax solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds; replaces the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Hard cap on outer iterations.
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long)]
    no_diagnostics: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over all seeds and write traces plus a summary.
    Run(RunFlags),
    /// Run several algorithms over several epsilons and fit complexity slopes.
    Sweep {
        #[command(flatten)]
        flags: RunFlags,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1])]
        epsilons: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values = ["sreda", "sgda"])]
        algorithms: Vec<Algorithm>,
    },
    /// Run the property suite and print one line per property.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the derived parameters and predicted oracle calls.
    Params {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        delta_f: f64,
        /// Number of components for the finite-sum parameter set.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn load(flags: &RunFlags) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&flags.config)?;
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(seeds) = &flags.seeds {
        cfg.seeds = seeds.clone();
    }
    if flags.cap.is_some() {
        cfg.cap = flags.cap;
    }
    if flags.no_diagnostics {
        cfg.diagnostics = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn params_table(epsilon: f64, kappa: f64, ell: f64, sigma: f64, delta_f: f64, n: Option<usize>) -> Result<(), HarnessError> {
    let prof = SmoothnessProfile::new(ell, ell / kappa, sigma)?;
    let p = match n {
        Some(n) => derive_params_finite(epsilon, &prof, delta_f, n)?,
        None => derive_params(epsilon, &prof, delta_f)?,
    };
    let pred = predicted_evals(&p);
    println!("epsilon        {}", p.epsilon);
    println!("zeta           {}", p.zeta);
    println!("lambda         {}", p.lambda);
    println!("q              {}", p.q);
    println!("S1             {}", p.s1);
    println!("S2             {}", p.s2);
    println!("K              {}", p.k);
    println!("m              {}", p.m);
    println!("eta_num        {}", p.eta_num);
    println!("eta_cap        {}", p.eta_cap);
    println!("restart        {:?}", p.restart);
    println!("bound          {}", p.bound);
    println!("restarts       {}", pred.restarts);
    println!("evals restart  {}", pred.restart_evals);
    println!("evals inner    {} (nominal) / {} (physical)", pred.inner_paper, pred.inner_physical);
    println!("evals total    {} (nominal) / {} (physical)", pred.total_paper, pred.total_physical);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run(flags) => {
            let cfg = load(&flags)?;
            let s = execute_run(&cfg)?;
            println!(
                "{}: mean |grad Phi(x_hat)| = {:.6} (std {:.2e}, {}), bound {:.6}, certified {}",
                s.algorithm, s.phi_grad_norm.mean, s.phi_grad_norm.std, s.stationarity_method, s.bound, s.bound_certified
            );
            println!("mean oracle calls {:.0} physical / {:.0} nominal; output in {}", s.evals_physical.mean, s.evals_paper.mean, cfg.out.display());
            Ok(true)
        }
        Command::Sweep { flags, epsilons, algorithms } => {
            let cfg = load(&flags)?;
            let s = execute_sweep(&cfg, &epsilons, &algorithms)?;
            for c in &s.curves {
                match c.slope {
                    Some(v) => println!("{}: slope {v:.3}", c.algorithm),
                    None => println!("{}: no slope ({})", c.algorithm, c.slope_error.as_deref().unwrap_or("")),
                }
            }
            Ok(true)
        }
        Command::Check { seed } => {
            let results = run_checks(seed);
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(results.iter().all(|r| r.passed))
        }
        Command::Params { epsilon, kappa, ell, sigma, delta_f, n } => {
            params_table(epsilon, kappa, ell, sigma, delta_f, n)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
