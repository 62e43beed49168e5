//! Benchmark records, baselines, statistics and the figure suites.

mod stats;
mod suite;
mod table;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_master_equation, IntegratorConfig, SchrodingerEngine};
use crate::error::{QgoError, Result};
use crate::measures::{energy_expectation, fidelity, ground_mass, solution_exact, solution_success, GroundTruth};
use crate::model::{CVector, IsingProblem, ScheduleParams};
use crate::qgo::{run_sequential, run_single_shot, yfield_greedy, Measure, QaMeasure, QgoConfig};

pub use stats::{bootstrap_ci, instance_seed, overhead_factor, qgo_tts_adjusted, tts, DEFAULT_RESAMPLES};
pub use suite::{run_suite, Figure, SuiteOutput, SuiteSpec};
pub use table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Qgo,
    SingleShotQgo,
    Yfield,
    Qa,
    Sa,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Qgo => "qgo",
            Method::SingleShotQgo => "single-shot-qgo",
            Method::Yfield => "yfield",
            Method::Qa => "qa",
            Method::Sa => "sa",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = QgoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qgo" | "sequential" => Ok(Method::Qgo),
            "single-shot-qgo" | "single-shot" => Ok(Method::SingleShotQgo),
            "yfield" => Ok(Method::Yfield),
            "qa" => Ok(Method::Qa),
            "sa" => Ok(Method::Sa),
            other => Err(QgoError::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// How to read [`BenchRecord::success`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessKind {
    /// 0 or 1: whether the returned configuration is a ground state.
    Binary,
    /// Ground-space probability of a final state or distribution.
    Probability,
}

impl SuccessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuccessKind::Binary => "binary",
            SuccessKind::Probability => "probability",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// Position of the instance within its suite.
    pub instance: usize,
    pub seed: u64,
    pub method: Method,
    /// Optimisation measure of the greedy methods.
    pub measure: Option<Measure>,
    pub n: usize,
    pub tau: f64,
    /// Up to the global flip.
    pub success: f64,
    pub success_kind: SuccessKind,
    /// Same without the flip: the designated ground configuration only.
    pub success_exact: f64,
    /// Energy of the returned configuration, or the expectation for QA/SA.
    pub energy: f64,
    pub qa_calls: usize,
    /// Seconds. Not part of any CSV output.
    pub wall_time: f64,
}

impl BenchRecord {
    fn new(problem: &IsingProblem, method: Method, tau: f64, kind: SuccessKind) -> Self {
        Self {
            instance: 0,
            seed: problem.seed().unwrap_or(0),
            method,
            measure: None,
            n: problem.n(),
            tau,
            success: 0.0,
            success_kind: kind,
            success_exact: 0.0,
            energy: 0.0,
            qa_calls: 0,
            wall_time: 0.0,
        }
    }

    pub fn with_instance(mut self, instance: usize) -> Self {
        self.instance = instance;
        self
    }
}

fn check_truth(problem: &IsingProblem, truth: &GroundTruth) -> Result<()> {
    if truth.n != problem.n() {
        return Err(QgoError::InvalidSize("ground truth does not match the problem".into()));
    }
    Ok(())
}

/// Plain annealing (`c ≡ 0`); success is the final ground-space fidelity.
pub fn run_qa(
    problem: &IsingProblem,
    truth: &GroundTruth,
    p: &ScheduleParams,
    cfg: &IntegratorConfig,
) -> Result<BenchRecord> {
    check_truth(problem, truth)?;
    let start = Instant::now();
    let psi = SchrodingerEngine::new(problem).evolve(p, &CVector::zeros(problem.n()), cfg)?;
    let mut rec = BenchRecord::new(problem, Method::Qa, p.tau, SuccessKind::Probability);
    rec.success = fidelity(&psi, truth, None)?;
    rec.success_exact = fidelity(&psi, truth, Some(truth.designated_target()))?;
    rec.energy = energy_expectation(&psi, problem)?;
    rec.qa_calls = 1;
    rec.wall_time = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Simulated annealing by the master equation; success is the ground mass.
pub fn run_sa(problem: &IsingProblem, truth: &GroundTruth, tau: f64, cfg: &IntegratorConfig) -> Result<BenchRecord> {
    check_truth(problem, truth)?;
    let start = Instant::now();
    let dist = evolve_master_equation(problem, tau, cfg)?;
    let mut rec = BenchRecord::new(problem, Method::Sa, tau, SuccessKind::Probability);
    rec.success = ground_mass(&dist, truth)?;
    rec.success_exact = dist.probabilities()[truth.designated_target().basis_index()];
    rec.energy = dist.probabilities().iter().zip(problem.energy_diagonal()).map(|(p, e)| p * e).sum();
    rec.wall_time = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// One greedy run (`Qgo`, `SingleShotQgo` or `Yfield`) scored against `truth`.
pub fn run_greedy(problem: &IsingProblem, truth: &GroundTruth, method: Method, cfg: &QgoConfig) -> Result<BenchRecord> {
    check_truth(problem, truth)?;
    let start = Instant::now();
    let (config, trace) = match method {
        Method::Qgo => run_sequential(&QaMeasure::with_truth(problem, cfg, Some(truth))?, cfg)?,
        Method::SingleShotQgo => run_single_shot(&QaMeasure::with_truth(problem, cfg, Some(truth))?, cfg)?,
        Method::Yfield => yfield_greedy(problem, cfg)?,
        other => return Err(QgoError::InvalidArgument(format!("{other} is not a greedy method"))),
    };
    let mut rec = BenchRecord::new(problem, method, cfg.schedule.tau, SuccessKind::Binary);
    rec.measure = Some(cfg.measure);
    rec.success = f64::from(u8::from(solution_success(&config, truth)));
    rec.success_exact = f64::from(u8::from(solution_exact(&config, truth)));
    rec.energy = problem.energy(&config)?;
    rec.qa_calls = trace.qa_calls;
    rec.wall_time = start.elapsed().as_secs_f64();
    Ok(rec)
}
