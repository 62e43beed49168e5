use num_complex::Complex64;

use crate::error::{QgoError, Result};
use crate::model::{rotated_coefficients, rotation_angle, spin_of, CVector, IsingProblem, ScheduleParams};

use super::hamiltonian::{apply_minus_i_h, SiteFields};
use super::integrator::{integrate, IntegratorConfig, Method, OdeSystem};
use super::StateVector;

/// Norm drift beyond which an evolution is reported as failed.
pub const NORM_FAILURE_TOL: f64 = 1e-6;

/// Largest `ω·dt` the rotated-frame RK4 run accepts, `ω` bounding the local
/// frequencies. Near `t = τ` the longitudinal field `C'` reaches
/// `c π² / (2 τ b)`, well above any lab-frame field.
const ROTATED_MAX_PHASE_STEP: f64 = 0.02;

/// Statevector propagator for one problem instance.
///
/// Holds the `H^z` diagonal so that repeated anneals of the same instance
/// (gradient probes, parameter scans) do not rebuild it.
#[derive(Debug, Clone)]
pub struct SchrodingerEngine {
    n: usize,
    diag: Vec<f64>,
}

struct LabFrame<'a> {
    n: usize,
    diag: &'a [f64],
    sched: ScheduleParams,
    c: &'a [f64],
    fields: SiteFields,
}

impl OdeSystem for LabFrame<'_> {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let b = self.sched.b_at(t);
        let env = self.sched.y_envelope(t);
        for i in 0..self.n {
            // H^x = -Σσ^x, H^y_i = -σ^y_i
            self.fields.x[i] = -b;
            self.fields.y[i] = -self.c[i] * env;
        }
        apply_minus_i_h(self.n, self.diag, self.sched.a_at(t), &self.fields, y, dy);
    }
}

/// `H_eff = A H^z + Σ C'_i σ^z_i - Σ B'_i σ^x_i` in the frame rotated by
/// `U_g = exp(i/2 Σ θ_i σ^z_i)`.
struct RotatedFrame<'a> {
    n: usize,
    diag: &'a [f64],
    sched: ScheduleParams,
    c: &'a [f64],
    fields: SiteFields,
}

impl OdeSystem for RotatedFrame<'_> {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        for i in 0..self.n {
            let rc = rotated_coefficients(t, &self.sched, self.c[i]);
            self.fields.z[i] = rc.c_prime;
            self.fields.x[i] = -rc.b_prime;
        }
        apply_minus_i_h(self.n, self.diag, self.sched.a_at(t), &self.fields, y, dy);
    }
}

impl SchrodingerEngine {
    pub fn new(problem: &IsingProblem) -> Self {
        Self { n: problem.n(), diag: problem.energy_diagonal() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energy_diagonal(&self) -> &[f64] {
        &self.diag
    }

    fn check_inputs(&self, p: &ScheduleParams, c: &CVector, cfg: &IntegratorConfig) -> Result<()> {
        if c.len() != self.n {
            return Err(QgoError::InvalidSize(format!("{} y-field coefficients for {} sites", c.len(), self.n)));
        }
        p.validate()?;
        cfg.validate()
    }

    /// `ψ(τ)` from `ψ(0) = |+…+⟩`.
    pub fn evolve(&self, p: &ScheduleParams, c: &CVector, cfg: &IntegratorConfig) -> Result<StateVector> {
        self.evolve_observed(p, c, cfg, p.tau, |_, _| {})
    }

    /// Same schedule, stopped at `t_end` (which may exceed `τ`).
    pub fn evolve_until(
        &self,
        p: &ScheduleParams,
        c: &CVector,
        cfg: &IntegratorConfig,
        t_end: f64,
    ) -> Result<StateVector> {
        self.evolve_observed(p, c, cfg, t_end, |_, _| {})
    }

    pub fn evolve_observed<F>(
        &self,
        p: &ScheduleParams,
        c: &CVector,
        cfg: &IntegratorConfig,
        t_end: f64,
        mut observe: F,
    ) -> Result<StateVector>
    where
        F: FnMut(f64, &StateVector),
    {
        self.check_inputs(p, c, cfg)?;
        let mut sys =
            LabFrame { n: self.n, diag: &self.diag, sched: *p, c: c.values(), fields: SiteFields::zeros(self.n) };
        let mut y = StateVector::plus_state(self.n).to_split();
        let n = self.n;
        integrate(&mut sys, &mut y, 0.0, t_end, cfg, |t, y| observe(t, &StateVector::from_split(n, y)))?;
        let out = StateVector::from_split(self.n, &y);
        out.check_norm(NORM_FAILURE_TOL)?;
        Ok(out)
    }

    /// Rotated-frame evolution; returns the rotated-frame state at `τ`.
    pub fn evolve_effective(&self, p: &ScheduleParams, c: &CVector, cfg: &IntegratorConfig) -> Result<StateVector> {
        self.evolve_effective_observed(p, c, cfg, |_, _| {})
    }

    pub fn evolve_effective_observed<F>(
        &self,
        p: &ScheduleParams,
        c: &CVector,
        cfg: &IntegratorConfig,
        mut observe: F,
    ) -> Result<StateVector>
    where
        F: FnMut(f64, &StateVector),
    {
        self.check_inputs(p, c, cfg)?;
        let cfg = &self.rotated_grid(p, c, cfg);
        let mut sys =
            RotatedFrame { n: self.n, diag: &self.diag, sched: *p, c: c.values(), fields: SiteFields::zeros(self.n) };
        let start = to_rotated_frame(&StateVector::plus_state(self.n), p, c, 0.0);
        let mut y = start.to_split();
        let n = self.n;
        integrate(&mut sys, &mut y, 0.0, p.tau, cfg, |t, y| observe(t, &StateVector::from_split(n, y)))?;
        let out = StateVector::from_split(self.n, &y);
        out.check_norm(NORM_FAILURE_TOL)?;
        Ok(out)
    }
}

impl SchrodingerEngine {
    /// `cfg` with its RK4 grid refined by an integer factor, so that sample
    /// times are unchanged, until the step meets [`ROTATED_MAX_PHASE_STEP`].
    fn rotated_grid(&self, p: &ScheduleParams, c: &CVector, cfg: &IntegratorConfig) -> IntegratorConfig {
        if cfg.method != Method::Rk4 {
            return *cfg;
        }
        let diag_max = self.diag.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let probes = 256;
        let omega = (0..=probes)
            .map(|k| {
                let t = p.tau * k as f64 / probes as f64;
                let fields: f64 = c
                    .values()
                    .iter()
                    .map(|&ci| {
                        let rc = rotated_coefficients(t, p, ci);
                        rc.b_prime.abs() + rc.c_prime.abs()
                    })
                    .sum();
                p.a_at(t).abs() * diag_max + fields
            })
            .fold(0.0f64, f64::max);
        let dt = 1.0 / cfg.steps_per_unit as f64;
        let factor = ((omega * dt / ROTATED_MAX_PHASE_STEP).ceil() as usize).max(1);
        IntegratorConfig {
            steps_per_unit: cfg.steps_per_unit * factor,
            sample_stride: cfg.sample_stride * factor,
            ..*cfg
        }
    }
}

/// Apply `U_g(t) = exp(i/2 Σ θ_i(t) σ^z_i)` to a lab-frame state.
pub fn to_rotated_frame(state: &StateVector, p: &ScheduleParams, c: &CVector, t: f64) -> StateVector {
    let n = state.n();
    let theta: Vec<f64> = c.values().iter().map(|ci| rotation_angle(t, p, *ci)).collect();
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(z, a)| {
            let phase: f64 = (0..n).map(|i| theta[i] * spin_of(n, z, i)).sum::<f64>() * 0.5;
            a * Complex64::from_polar(1.0, phase)
        })
        .collect();
    StateVector::new(n, amps).expect("dimension preserved")
}

/// Lab-frame anneal under the full Hamiltonian with y-field.
pub fn evolve_schrodinger(
    problem: &IsingProblem,
    p: &ScheduleParams,
    c: &CVector,
    cfg: &IntegratorConfig,
) -> Result<StateVector> {
    SchrodingerEngine::new(problem).evolve(p, c, cfg)
}

/// Rotated-frame anneal under the stoquastic effective Hamiltonian.
pub fn evolve_effective(
    problem: &IsingProblem,
    p: &ScheduleParams,
    c: &CVector,
    cfg: &IntegratorConfig,
) -> Result<StateVector> {
    SchrodingerEngine::new(problem).evolve_effective(p, c, cfg)
}
