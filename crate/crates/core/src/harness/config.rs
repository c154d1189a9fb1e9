//! Experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::benchmark::BenchmarkInstance;
use super::HarnessError;
use crate::copt::SeparableProblem;
use crate::dynamics::Schedule;
use crate::graph::{watts_strogatz, DigraphSequence, WeightedDigraph, DEFAULT_DELTA_TILDE_PRIME};

pub const DEFAULT_HORIZON: usize = 100_000;
pub const DEFAULT_STRIDE: usize = 100;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Random instance of the logarithmic benchmark; `b` defaults to `N/10`.
    Benchmark {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
    Instance {
        c: Vec<f64>,
        d: Vec<f64>,
        b: f64,
    },
    Separable {
        problem: SeparableProblem,
    },
    /// Separable problem JSON on disk.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    SmallWorld {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_p")]
        p: f64,
    },
    Complete,
    Ring,
    Sequence {
        #[serde(rename = "B")]
        b: usize,
        graphs: Vec<WeightedDigraph>,
    },
    /// Graph-sequence JSON `{"B": .., "graphs": [..]}` on disk.
    File {
        path: PathBuf,
    },
}

fn default_k() -> usize {
    4
}

fn default_p() -> f64 {
    0.2
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec::SmallWorld {
            k: default_k(),
            p: default_p(),
        }
    }
}

fn default_dtp() -> f64 {
    DEFAULT_DELTA_TILDE_PRIME
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

fn default_oracle_tol() -> f64 {
    DEFAULT_ORACLE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub graph: GraphSpec,
    /// Consensus stepsize; the middle of the admissible window when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_dtp")]
    pub delta_tilde_prime: f64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Dual radius; computed by the distributed protocol when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub allow_sigma_outside_window: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_factor: Option<f64>,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec) -> Self {
        ExperimentConfig {
            problem,
            graph: GraphSpec::default(),
            sigma: None,
            delta_tilde_prime: DEFAULT_DELTA_TILDE_PRIME,
            schedule: Schedule::default(),
            horizon: DEFAULT_HORIZON,
            seed: None,
            stride: DEFAULT_STRIDE,
            out: None,
            radius: None,
            allow_sigma_outside_window: false,
            safety_factor: None,
            oracle_tol: DEFAULT_ORACLE_TOL,
        }
    }

    /// The 50-agent benchmark on a small-world graph.
    pub fn default_benchmark() -> Self {
        Self::new(ProblemSpec::Benchmark { n: 50, b: None })
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read_config_text(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    /// Like [`ExperimentConfig::load`], but also accepts a bare benchmark
    /// instance or separable problem, wrapped in the default settings with a
    /// complete communication graph.
    pub fn load_lenient(path: &Path) -> Result<Self, HarnessError> {
        let text = read_config_text(path)?;
        let full_err = match Self::from_json(&text) {
            Ok(mut cfg) => {
                cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
                return Ok(cfg);
            }
            Err(e) => e,
        };
        let problem = if let Ok(inst) = serde_json::from_str::<BenchmarkInstance>(&text) {
            ProblemSpec::Instance {
                c: inst.c,
                d: inst.d,
                b: inst.b,
            }
        } else if let Ok(problem) = serde_json::from_str::<SeparableProblem>(&text) {
            ProblemSpec::Separable { problem }
        } else {
            return Err(full_err);
        };
        let mut cfg = Self::new(problem);
        cfg.graph = GraphSpec::Complete;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ProblemSpec::File { path } = &mut self.problem {
            fix(path);
        }
        if let GraphSpec::File { path } = &mut self.graph {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.horizon == 0 {
            return bad("T must be at least 1".into());
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if !(self.delta_tilde_prime > 0.0 && self.delta_tilde_prime < 1.0) {
            return bad(format!(
                "delta_tilde_prime must lie in (0, 1), got {}",
                self.delta_tilde_prime
            ));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("sigma must be positive, got {s}"));
            }
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        if let Some(f) = self.safety_factor {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("safety_factor must lie in (0, 1], got {f}"));
            }
        }
        if !(self.oracle_tol > 0.0 && self.oracle_tol.is_finite()) {
            return bad(format!(
                "oracle_tol must be positive, got {}",
                self.oracle_tol
            ));
        }
        self.schedule
            .validate()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        let randomized_problem = matches!(self.problem, ProblemSpec::Benchmark { .. });
        let randomized_graph = matches!(self.graph, GraphSpec::SmallWorld { .. });
        if (randomized_problem || randomized_graph) && self.seed.is_none() {
            return bad("a seed is required for randomized problems and graphs".into());
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Builds the benchmark instance when the problem is one.
    pub fn benchmark_instance(&self) -> Result<Option<BenchmarkInstance>, HarnessError> {
        match &self.problem {
            ProblemSpec::Benchmark { n, b } => {
                let b = b.unwrap_or(*n as f64 / 10.0);
                BenchmarkInstance::generate(*n, b, self.seed()).map(Some)
            }
            ProblemSpec::Instance { c, d, b } => {
                BenchmarkInstance::new(c.clone(), d.clone(), *b).map(Some)
            }
            _ => Ok(None),
        }
    }

    pub fn separable_problem(&self) -> Result<SeparableProblem, HarnessError> {
        if let Some(inst) = self.benchmark_instance()? {
            return Ok(inst.to_separable());
        }
        let p = match &self.problem {
            ProblemSpec::Separable { problem } => problem.clone(),
            ProblemSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
            }
            _ => unreachable!("benchmark problems handled above"),
        };
        p.validate()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        Ok(p)
    }

    /// Builds the communication graphs for `n` agents. Small-world graphs
    /// draw from seed `seed + 1`.
    pub fn graphs(&self, n: usize) -> Result<DigraphSequence, HarnessError> {
        let invalid = |e: crate::graph::GraphError| HarnessError::Invalid(e.to_string());
        if n == 1 {
            let g = WeightedDigraph::empty(1).map_err(invalid)?;
            return DigraphSequence::fixed(g).map_err(invalid);
        }
        let seq = match &self.graph {
            GraphSpec::SmallWorld { k, p } => {
                if n <= *k {
                    DigraphSequence::fixed(complete_graph(n)?).map_err(invalid)?
                } else {
                    let g =
                        watts_strogatz(n, *k, *p, self.seed().wrapping_add(1)).map_err(invalid)?;
                    DigraphSequence::fixed(g).map_err(invalid)?
                }
            }
            GraphSpec::Complete => DigraphSequence::fixed(complete_graph(n)?).map_err(invalid)?,
            GraphSpec::Ring => {
                let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                let w = if n == 2 { 1.0 } else { 0.5 };
                let g = WeightedDigraph::undirected(n, &pairs, w).map_err(invalid)?;
                DigraphSequence::fixed(g).map_err(invalid)?
            }
            GraphSpec::Sequence { b, graphs } => {
                DigraphSequence::new(graphs.clone(), *b).map_err(invalid)?
            }
            GraphSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))?
            }
        };
        if seq.n() != n {
            return Err(HarnessError::Invalid(format!(
                "graph has {} nodes, problem has {n} agents",
                seq.n()
            )));
        }
        Ok(seq)
    }
}

/// Complete graph with weights `1/(n−1)`, so every weighted degree is 1.
fn complete_graph(n: usize) -> Result<WeightedDigraph, HarnessError> {
    let pairs: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    WeightedDigraph::undirected(n, &pairs, 1.0 / (n - 1) as f64)
        .map_err(|e| HarnessError::Invalid(e.to_string()))
}

fn read_config_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))
}
