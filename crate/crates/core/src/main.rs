use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use consensus_saddle::copt::run_dual_bound_protocol;
use consensus_saddle::harness::{
    bound_report, check_trace, oracle_solve, run_experiment, write_outputs, ExperimentConfig,
    HarnessError, ProblemSpec, Setup,
};

#[derive(Parser)]
#[command(
    name = "consensus-saddle",
    version,
    about = "Distributed saddle-point subgradient dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for trace.csv and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record every K-th step.
    #[arg(long)]
    stride: Option<usize>,
    /// Number of iterations.
    #[arg(long = "T", value_name = "N")]
    horizon: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dynamics on a separable problem from a config.
    Run(Common),
    /// Run the logarithmic benchmark (50 agents unless configured).
    Bench(Common),
    /// Compute the dual radius with the distributed protocol.
    Dualbound(Common),
    /// Print the bound constants and the convergence envelope.
    Bound(Common),
    /// Re-check a trace CSV against the bounds in its metadata.
    Check {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Solve a benchmark instance centrally.
    Oracle(Common),
}

fn config_from(
    common: &Common,
    default: Option<ExperimentConfig>,
) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match (&common.config, default) {
        (Some(path), _) => ExperimentConfig::load_lenient(path)?,
        (None, Some(cfg)) => cfg,
        (None, None) => return Err(HarnessError::Config("missing --config PATH".into())),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.out.is_some() {
        cfg.out.clone_from(&common.out);
    }
    if let Some(k) = common.stride {
        cfg.stride = k;
    }
    if let Some(t) = common.horizon {
        cfg.horizon = t;
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(v: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

#[derive(Serialize)]
struct DualBoundOutput {
    r: f64,
    gamma_lower: f64,
    k_star: Vec<usize>,
    k_star_star: usize,
    rounds_total: usize,
    restarts: usize,
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    w: &'a [f64],
    z: f64,
    #[serde(rename = "L")]
    value: f64,
    dual_value: f64,
    constraint_active: bool,
    kkt: &'a consensus_saddle::harness::oracle::KktResiduals,
}

fn experiment(cfg: &ExperimentConfig) -> Result<bool, HarnessError> {
    let out = run_experiment(cfg)?;
    if let Some(dir) = &cfg.out {
        let (trace, report) = write_outputs(dir, &out)?;
        log::info!("wrote {} and {}", trace.display(), report.display());
    }
    print_json(&out.report)?;
    Ok(true)
}

fn execute(cmd: Command) -> Result<bool, HarnessError> {
    match cmd {
        Command::Run(c) => {
            let cfg = config_from(&c, None)?;
            experiment(&cfg)
        }
        Command::Bench(c) => {
            let cfg = config_from(&c, Some(ExperimentConfig::default_benchmark()))?;
            if !matches!(
                cfg.problem,
                ProblemSpec::Benchmark { .. } | ProblemSpec::Instance { .. }
            ) {
                return Err(HarnessError::Invalid(
                    "bench needs a benchmark or instance problem".into(),
                ));
            }
            experiment(&cfg)
        }
        Command::Dualbound(c) => {
            let cfg = config_from(&c, None)?;
            let setup = Setup::new(&cfg)?;
            let run = run_dual_bound_protocol(
                &setup.problem,
                &setup.graphs,
                setup.sigma,
                &setup.protocol_options(),
            )?;
            print_json(&DualBoundOutput {
                r: run.radius(),
                gamma_lower: run.gamma(),
                k_star: run.k_star.clone(),
                k_star_star: run.k_star_star,
                rounds_total: run.rounds_total,
                restarts: run.restarts,
            })?;
            Ok(true)
        }
        Command::Bound(c) => {
            let cfg = config_from(&c, None)?;
            print_json(&bound_report(&cfg)?)?;
            Ok(true)
        }
        Command::Check { trace } => {
            let report = check_trace(&trace)?;
            print_json(&report)?;
            Ok(report.passed)
        }
        Command::Oracle(c) => {
            let cfg = config_from(&c, None)?;
            if matches!(cfg.problem, ProblemSpec::Benchmark { .. }) && cfg.seed.is_none() {
                return Err(HarnessError::Invalid(
                    "a seed is required for benchmark problems".into(),
                ));
            }
            let inst = cfg.benchmark_instance()?.ok_or_else(|| {
                HarnessError::Invalid("oracle needs a benchmark or instance problem".into())
            })?;
            let sol = oracle_solve(&inst, cfg.oracle_tol, 2.0 * inst.formula_radius())?;
            print_json(&OracleOutput {
                w: &sol.w,
                z: sol.z,
                value: sol.value,
                dual_value: sol.dual_value,
                constraint_active: sol.constraint_active,
                kkt: &sol.kkt,
            })?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
