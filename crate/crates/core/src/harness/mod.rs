//! Experiment runner, benchmark reproduction, reference oracle, slope
//! fitting and file surfaces.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    check_dominance, check_iss_bounds, check_iss_records, check_times, corollary_constants,
    theorem_bound, AnalysisError, BoundConstants, DominanceReport, IssReport, NetworkParams,
};
use crate::copt::{
    exact_radius, run_dual_bound_protocol, CoptError, Cspsg, ProtocolOptions, SeparableProblem,
};
use crate::dynamics::{
    run, AuxMetrics, Blocks, DynamicsError, RunOptions, RunTrace, SaddleIteration, StepRecord,
};
use crate::graph::{DigraphSequence, GraphError, StepsizeWindow};

pub mod benchmark;
pub mod config;
pub mod io;
pub mod oracle;
pub mod slope;

pub use benchmark::BenchmarkInstance;
pub use config::{ExperimentConfig, GraphSpec, ProblemSpec};
pub use io::{read_trace, write_atomic, write_trace, TraceMeta, TRACE_COLUMNS, TRACE_FORMAT};
pub use oracle::{oracle_solve, OracleSolution};
pub use slope::{fit_loglog_slope, SlopeError};

/// Default fitting window for reported slopes.
pub const SLOPE_WINDOW: (f64, f64) = (1e2, 1e4);

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{0}")]
    Config(String),
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Copt(#[from] CoptError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Slope(#[from] SlopeError),
}

fn dynamics_is_validation(e: &DynamicsError) -> bool {
    matches!(
        e,
        DynamicsError::SigmaOutsideWindow { .. }
            | DynamicsError::InfeasibleInitial(_)
            | DynamicsError::InvalidSchedule(..)
            | DynamicsError::ZeroHorizon
            | DynamicsError::ZeroStride
            | DynamicsError::Graph(_)
            | DynamicsError::Projection(_)
    )
}

impl HarnessError {
    /// Whether the error stems from bad input rather than a failure while
    /// computing.
    pub fn is_validation(&self) -> bool {
        match self {
            HarnessError::Invalid(_) | HarnessError::Config(_) | HarnessError::Trace(_) => true,
            HarnessError::Dynamics(e) => dynamics_is_validation(e),
            HarnessError::Copt(e) => match e {
                CoptError::Invalid(_)
                | CoptError::AgreementVariables
                | CoptError::SlaterNotCertified(_)
                | CoptError::NonPositiveRadius(_)
                | CoptError::Graph(_)
                | CoptError::Projection(_) => true,
                CoptError::Dynamics(d) => dynamics_is_validation(d),
                _ => false,
            },
            _ => false,
        }
    }

    /// Process exit code: 1 for validation errors, 2 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            1
        } else {
            2
        }
    }
}

impl From<GraphError> for HarnessError {
    fn from(e: GraphError) -> Self {
        HarnessError::Invalid(e.to_string())
    }
}

/// How the dual radius was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub r: f64,
    /// `"protocol"` or `"config"`.
    pub source: String,
    pub gamma_lower: Option<f64>,
    pub k_star: Option<Vec<usize>>,
    pub k_star_star: Option<usize>,
    pub rounds_total: Option<usize>,
    pub restarts: Option<usize>,
    /// Radius with the exact `γ` at the same Slater point.
    pub exact_radius: Option<f64>,
    /// Closed-form radius of the benchmark family.
    pub formula_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub window: (f64, f64),
    pub saddle_gap: Option<f64>,
    pub cost_err: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: Option<u64>,
    pub n: usize,
    pub horizon: usize,
    pub sigma: f64,
    pub window: Option<StepsizeWindow>,
    pub radius: RadiusReport,
    pub oracle: Option<OracleSolution>,
    /// `φ` at the oracle saddle point.
    pub saddle_value: Option<f64>,
    /// Constants from set diameters and subgradient bounds.
    pub constants: BoundConstants,
    /// Constants from the largest norms observed in the run.
    pub constants_a_posteriori: BoundConstants,
    pub iss: IssReport,
    pub dominance: DominanceReport,
    pub dominance_a_posteriori: DominanceReport,
    pub slopes: SlopeReport,
    pub final_record: StepRecord,
}

pub struct ExperimentOutput {
    pub trace: RunTrace,
    pub report: ExperimentReport,
    pub meta: TraceMeta,
}

/// Everything derived from a config before the dynamics run.
pub struct Setup {
    pub config: ExperimentConfig,
    pub instance: Option<BenchmarkInstance>,
    pub problem: SeparableProblem,
    pub graphs: DigraphSequence,
    pub sigma: f64,
    pub window: Option<StepsizeWindow>,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let instance = config.benchmark_instance()?;
        let problem = config.separable_problem()?;
        let graphs = config.graphs(problem.n_agents())?;
        let window = if graphs.n() == 1 {
            None
        } else {
            Some(graphs.stepsize_window(config.delta_tilde_prime)?)
        };
        let sigma = match (config.sigma, window) {
            (Some(s), _) => s,
            (None, Some(w)) => 0.5 * (w.lo + w.hi),
            (None, None) => 0.0,
        };
        Ok(Setup {
            config: config.clone(),
            instance,
            problem,
            graphs,
            sigma,
            window,
        })
    }

    pub fn network(&self) -> Result<NetworkParams, HarnessError> {
        Ok(NetworkParams::from_graphs(
            &self.graphs,
            self.sigma,
            self.config.delta_tilde_prime,
        )?)
    }

    /// The configured radius, or the protocol's.
    pub fn radius(&self) -> Result<RadiusReport, HarnessError> {
        let formula_radius = self
            .instance
            .as_ref()
            .map(BenchmarkInstance::formula_radius);
        if let Some(r) = self.config.radius {
            return Ok(RadiusReport {
                r,
                source: "config".into(),
                gamma_lower: None,
                k_star: None,
                k_star_star: None,
                rounds_total: None,
                restarts: None,
                exact_radius: None,
                formula_radius,
            });
        }
        let run = run_dual_bound_protocol(
            &self.problem,
            &self.graphs,
            self.sigma,
            &self.protocol_options(),
        )?;
        let exact = exact_radius(&self.problem, &run.z_bar).ok();
        Ok(RadiusReport {
            r: run.radius(),
            source: "protocol".into(),
            gamma_lower: Some(run.gamma()),
            k_star: Some(run.k_star.clone()),
            k_star_star: Some(run.k_star_star),
            rounds_total: Some(run.rounds_total),
            restarts: Some(run.restarts),
            exact_radius: exact,
            formula_radius,
        })
    }

    pub fn protocol_options(&self) -> ProtocolOptions {
        let mut opts = ProtocolOptions {
            delta_tilde_prime: self.config.delta_tilde_prime,
            ..ProtocolOptions::default()
        };
        if let Some(f) = self.config.safety_factor {
            opts.safety_factor = f;
        }
        opts
    }

    pub fn constants(&self, r: f64) -> Result<BoundConstants, HarnessError> {
        let h = self.problem.subgradient_bounds()?;
        Ok(corollary_constants(&self.problem, r, self.network()?, h)?)
    }

    /// Oracle solution of a benchmark instance, searching `[0, 2r]`.
    pub fn oracle(&self, r: f64) -> Result<Option<OracleSolution>, HarnessError> {
        self.instance
            .as_ref()
            .map(|inst| oracle_solve(inst, self.config.oracle_tol, 2.0 * r))
            .transpose()
    }
}

/// The network state with every agent at `(w, z)`.
pub fn agreed_point(alg: &Cspsg, w: &[f64], z: &[f64]) -> Blocks {
    let dims = alg.dims();
    Blocks {
        w: w.to_vec(),
        d: vec![0.0; dims.agents * dims.d],
        mu: vec![],
        z: (0..dims.agents).flat_map(|_| z.iter().copied()).collect(),
    }
}

fn fit_or_note(series: &[(f64, f64)], name: &str, notes: &mut Vec<String>) -> Option<f64> {
    match fit_loglog_slope(series, SLOPE_WINDOW.0, SLOPE_WINDOW.1) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    }
}

pub fn series(
    records: &[StepRecord],
    pick: impl Fn(&StepRecord) -> Option<f64>,
) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| pick(r).map(|v| (r.t as f64, v)))
        .collect()
}

/// Runs the dynamics described by `config` and checks the bounds on the
/// result.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let setup = Setup::new(config)?;
    let radius = setup.radius()?;
    let r = radius.r;
    let oracle = setup.oracle(r)?;
    let constants = setup.constants(r)?;
    let alg = Cspsg::new(&setup.problem, r)?;

    let saddle_value = oracle
        .as_ref()
        .map(|o| alg.value(&agreed_point(&alg, &o.w, &[o.z])));
    let probe = |p: &Blocks| match (&setup.instance, &oracle) {
        (Some(inst), Some(o)) => AuxMetrics {
            cost_err: Some((inst.cost(&p.w) - o.value).abs()),
            constraint_violation: Some(inst.constraint(&p.w)),
        },
        _ => AuxMetrics {
            cost_err: None,
            constraint_violation: None,
        },
    };
    let opts = RunOptions {
        stride: config.stride,
        keep_history: false,
        saddle_value,
        delta_tilde_prime: config.delta_tilde_prime,
        enforce_sigma_window: !config.allow_sigma_outside_window,
        aux: Some(&probe),
    };
    let initial = Blocks::zeros(&alg.dims());
    let trace = run(
        &alg,
        &setup.graphs,
        setup.sigma,
        &config.schedule,
        config.horizon,
        initial,
        &opts,
    )?;

    let posterior = BoundConstants::from_trace(&trace, setup.network()?)?;
    let iss = check_iss_bounds(&trace, &constants);
    let dominance = check_dominance(&trace.records, &constants);
    let dominance_a_posteriori = check_dominance(&trace.records, &posterior);
    let mut notes = Vec::new();
    let slopes = SlopeReport {
        window: SLOPE_WINDOW,
        saddle_gap: saddle_value.and_then(|_| {
            fit_or_note(
                &series(&trace.records, |r| r.saddle_gap),
                "saddle_gap",
                &mut notes,
            )
        }),
        cost_err: oracle.as_ref().and_then(|_| {
            fit_or_note(
                &series(&trace.records, |r| r.cost_err),
                "cost_err",
                &mut notes,
            )
        }),
        notes,
    };

    // The output location is not part of the experiment; leaving it out keeps
    // traces of the same run byte-identical wherever they are written.
    let mut recorded = config.clone();
    recorded.out = None;
    let meta = TraceMeta {
        config: recorded,
        seed: config.seed,
        sigma: setup.sigma,
        schedule: config.schedule,
        horizon: config.horizon,
        stride: config.stride,
        radius: r,
        initial_norms: trace.summary.initial_norms,
        constants,
        oracle_value: oracle.as_ref().map(|o| o.value),
    };
    let report = ExperimentReport {
        seed: config.seed,
        n: setup.problem.n_agents(),
        horizon: config.horizon,
        sigma: setup.sigma,
        window: setup.window,
        radius,
        oracle,
        saddle_value,
        constants,
        constants_a_posteriori: posterior,
        iss,
        dominance,
        dominance_a_posteriori,
        slopes,
        final_record: trace.records.last().cloned().expect("a run records t = 1"),
    };
    Ok(ExperimentOutput {
        trace,
        report,
        meta,
    })
}

/// Writes `trace.csv` and `report.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    out: &ExperimentOutput,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let trace_path = dir.join("trace.csv");
    let report_path = dir.join("report.json");
    write_trace(&trace_path, &out.meta, &out.trace.records)?;
    io::write_json_atomic(&report_path, &out.report)?;
    Ok((trace_path, report_path))
}

/// Alias for [`run_experiment`] on a benchmark config.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    if !matches!(
        config.problem,
        ProblemSpec::Benchmark { .. } | ProblemSpec::Instance { .. }
    ) {
        return Err(HarnessError::Invalid(
            "benchmark runs need a benchmark or instance problem".into(),
        ));
    }
    run_experiment(config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub t: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOutput {
    pub n: usize,
    pub sigma: f64,
    pub window: Option<StepsizeWindow>,
    pub radius: RadiusReport,
    pub constants: BoundConstants,
    pub envelope: Vec<EnvelopePoint>,
}

/// Constants and the convergence envelope at logarithmically spaced steps.
pub fn bound_report(config: &ExperimentConfig) -> Result<BoundOutput, HarnessError> {
    let setup = Setup::new(config)?;
    let radius = setup.radius()?;
    let constants = setup.constants(radius.r)?;
    let envelope = check_times(config.horizon)
        .into_iter()
        .filter(|t| *t >= 2)
        .map(|t| {
            Ok(EnvelopePoint {
                t,
                bound: theorem_bound(t, &constants)?,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(BoundOutput {
        n: setup.problem.n_agents(),
        sigma: setup.sigma,
        window: setup.window,
        radius,
        constants,
        envelope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    pub records: usize,
    pub iss: IssReport,
    pub dominance: DominanceReport,
}

/// Re-checks a written trace against the constants in its metadata.
pub fn check_trace(path: &Path) -> Result<CheckReport, HarnessError> {
    let (meta, records) = read_trace(path)?;
    let iss = check_iss_records(&records, meta.initial_norms, &meta.constants);
    let dominance = check_dominance(&records, &meta.constants);
    Ok(CheckReport {
        passed: iss.passed() && dominance.ok,
        records: records.len(),
        iss,
        dominance,
    })
}
