//! Greedy sign selection of the y-field coefficients (sequential and
//! single-shot), the pure y-rotation variant, and calibration of the
//! schedule amplitudes `(b, c)`.

mod calibrate;
mod greedy;
mod yfield;

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, SchrodingerEngine, StateVector};
use crate::error::{QgoError, Result};
use crate::measures::{ground_states, GroundTruth};
use crate::model::{CVector, IsingProblem, ScheduleParams};

pub use calibrate::{optimize_bc, BcFamily, BcOptimum, CalibrationConfig, ScanPoint};
pub use greedy::{gradient_vector, run_sequential, run_single_shot, sequential_qgo, single_shot_qgo};
pub use yfield::{product_state, product_state_energy, yfield_energy, yfield_greedy};

/// Gradients smaller than this on every candidate site count as zero.
pub const ZERO_GRADIENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// Final energy `⟨H^z⟩`.
    Energy,
    /// `1 - P` with `P` the probability of the designated ground configuration.
    Fidelity,
}

impl std::str::FromStr for Measure {
    type Err = QgoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Measure::Energy),
            "fidelity" => Ok(Measure::Fidelity),
            other => Err(QgoError::InvalidArgument(format!("unknown measure {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientRule {
    /// `(f(c + Δ e_j) - f(c)) / Δ`.
    #[default]
    Forward,
    /// Mean of the forward slopes over widths `Δ/3`, `2Δ/3` and `Δ`.
    Average3,
}

impl GradientRule {
    fn widths(self, delta: f64) -> Vec<f64> {
        match self {
            GradientRule::Forward => vec![delta],
            GradientRule::Average3 => (1..=3).map(|k| delta * k as f64 / 3.0).collect(),
        }
    }
}

/// Settings shared by the greedy algorithms. `schedule.b` is the transverse
/// amplitude and `schedule.c_amp` the magnitude given to every fixed sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QgoConfig {
    pub measure: Measure,
    pub delta: f64,
    pub schedule: ScheduleParams,
    pub integrator: IntegratorConfig,
    pub gradient: GradientRule,
}

impl Default for QgoConfig {
    fn default() -> Self {
        Self {
            measure: Measure::Energy,
            delta: 0.1,
            schedule: ScheduleParams::default(),
            integrator: IntegratorConfig::default(),
            gradient: GradientRule::Forward,
        }
    }
}

impl QgoConfig {
    pub fn b_opt(&self) -> f64 {
        self.schedule.b
    }

    pub fn c_opt(&self) -> f64 {
        self.schedule.c_amp
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(QgoError::InvalidArgument(format!("probe width must be > 0, got {}", self.delta)));
        }
        if !(self.c_opt() > 0.0) {
            return Err(QgoError::InvalidArgument(format!("c_opt must be > 0, got {}", self.c_opt())));
        }
        self.schedule.validate()?;
        self.integrator.validate()
    }
}

/// One greedy iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QgoStep {
    pub iteration: usize,
    /// `(site, gradient)` for every probed site, in site order.
    pub gradients: Vec<(usize, f64)>,
    /// Sites fixed in this iteration with the sign given to each.
    pub assigned: Vec<(usize, i8)>,
    /// Measure after the assignment.
    pub measure_value: f64,
    /// Cumulative subroutine count at the end of the iteration.
    pub qa_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QgoTrace {
    pub steps: Vec<QgoStep>,
    /// Annealing (or circuit) evaluations the algorithm needed. The extra
    /// evaluation reporting the measure after the last assignment is not
    /// counted.
    pub qa_calls: usize,
    /// Final coefficients (`c` for QGO, rotation angles for the y-field
    /// variant).
    pub coefficients: CVector,
}

/// `f(b, c)`: one anneal followed by the chosen measure.
#[derive(Debug, Clone)]
pub struct QaMeasure {
    engine: SchrodingerEngine,
    measure: Measure,
    schedule: ScheduleParams,
    integrator: IntegratorConfig,
    target: Option<usize>,
    diag: Vec<f64>,
}

impl QaMeasure {
    /// The ground truth is computed on demand for the fidelity measure.
    pub fn new(problem: &IsingProblem, cfg: &QgoConfig) -> Result<Self> {
        let truth = match cfg.measure {
            Measure::Fidelity => Some(ground_states(problem)?),
            Measure::Energy => None,
        };
        Self::with_truth(problem, cfg, truth.as_ref())
    }

    pub fn with_truth(problem: &IsingProblem, cfg: &QgoConfig, truth: Option<&GroundTruth>) -> Result<Self> {
        cfg.validate()?;
        let target = match cfg.measure {
            Measure::Fidelity => {
                let truth =
                    truth.ok_or_else(|| QgoError::InvalidArgument("fidelity measure needs the ground truth".into()))?;
                if truth.n != problem.n() {
                    return Err(QgoError::InvalidSize("ground truth does not match the problem".into()));
                }
                Some(truth.designated_target().basis_index())
            }
            Measure::Energy => None,
        };
        let engine = SchrodingerEngine::new(problem);
        let diag = engine.energy_diagonal().to_vec();
        Ok(Self { engine, measure: cfg.measure, schedule: cfg.schedule, integrator: cfg.integrator, target, diag })
    }

    pub fn n(&self) -> usize {
        self.engine.n()
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    /// Final state of the anneal behind [`QaMeasure::value`].
    pub fn evolve(&self, c: &CVector) -> Result<StateVector> {
        self.engine.evolve(&self.schedule, c, &self.integrator)
    }

    pub fn value(&self, c: &CVector) -> Result<f64> {
        let psi = self.evolve(c)?;
        Ok(match self.target {
            Some(z) => 1.0 - psi.amplitudes()[z].norm_sqr(),
            None => psi.probabilities().iter().zip(&self.diag).map(|(p, e)| p * e).sum(),
        })
    }
}

/// Measure of a single anneal with transverse amplitude `b`.
pub fn measure_value(problem: &IsingProblem, b: f64, c: &CVector, cfg: &QgoConfig) -> Result<f64> {
    let mut cfg = *cfg;
    cfg.schedule.b = b;
    QaMeasure::new(problem, &cfg)?.value(c)
}
