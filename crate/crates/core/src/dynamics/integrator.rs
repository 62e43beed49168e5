use serde::{Deserialize, Serialize};

use crate::error::{QgoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with step-size control.
    Adaptive,
}

impl std::str::FromStr for Method {
    type Err = QgoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "adaptive" | "dopri5" => Ok(Method::Adaptive),
            other => Err(QgoError::InvalidArgument(format!("unknown integrator method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// RK4 steps per unit of time; also sets the sampling grid spacing.
    pub steps_per_unit: usize,
    /// Local error tolerance (absolute and relative) of the adaptive method.
    pub tol: f64,
    /// Observables are sampled every `sample_stride` grid steps.
    pub sample_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { method: Method::Rk4, steps_per_unit: 1000, tol: 1e-10, sample_stride: 10 }
    }
}

impl IntegratorConfig {
    pub fn rk4(steps_per_unit: usize) -> Self {
        Self { steps_per_unit, ..Self::default() }
    }

    pub fn adaptive(tol: f64) -> Self {
        Self { method: Method::Adaptive, tol, ..Self::default() }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_unit == 0 || self.sample_stride == 0 {
            return Err(QgoError::InvalidArgument("integrator needs steps >= 1 and stride >= 1".into()));
        }
        if self.method == Method::Adaptive && !(self.tol > 0.0) {
            return Err(QgoError::InvalidArgument("adaptive integrator needs tol > 0".into()));
        }
        Ok(())
    }

    /// Number of grid steps covering `duration` (at least one).
    pub fn steps_for(&self, duration: f64) -> usize {
        let x = self.steps_per_unit as f64 * duration;
        let steps = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
        (steps as usize).max(1)
    }
}

/// A first-order system `dy/dt = f(t, y)` over a flat real state.
pub trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Advance `y` from `t0` to `t1`, calling `observe` on the sampling grid
/// (including both end points).
pub fn integrate<S, F>(
    sys: &mut S,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    observe: F,
) -> Result<IntegrationStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    if !(t1 >= t0) {
        return Err(QgoError::InvalidArgument(format!("integration interval [{t0}, {t1}] is empty")));
    }
    match cfg.method {
        Method::Rk4 => Ok(rk4(sys, y, t0, t1, cfg, observe)),
        Method::Adaptive => dopri5(sys, y, t0, t1, cfg, observe),
    }
}

fn rk4<S, F>(sys: &mut S, y: &mut [f64], t0: f64, t1: f64, cfg: &IntegratorConfig, mut observe: F) -> IntegrationStats
where
    S: OdeSystem,
    F: FnMut(f64, &[f64]),
{
    let steps = cfg.steps_for(t1 - t0);
    let h = (t1 - t0) / steps as f64;
    let dim = y.len();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    observe(t0, y);
    for step in 0..steps {
        let t = t0 + h * step as f64;
        sys.rhs(t, y, &mut k1);
        for ((o, yi), k) in tmp.iter_mut().zip(y.iter()).zip(&k1) {
            *o = yi + 0.5 * h * k;
        }
        sys.rhs(t + 0.5 * h, &tmp, &mut k2);
        for ((o, yi), k) in tmp.iter_mut().zip(y.iter()).zip(&k2) {
            *o = yi + 0.5 * h * k;
        }
        sys.rhs(t + 0.5 * h, &tmp, &mut k3);
        for ((o, yi), k) in tmp.iter_mut().zip(y.iter()).zip(&k3) {
            *o = yi + h * k;
        }
        sys.rhs(t + h, &tmp, &mut k4);
        let w = h / 6.0;
        for i in 0..dim {
            y[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        if (step + 1) % cfg.sample_stride == 0 || step + 1 == steps {
            let t_next = if step + 1 == steps { t1 } else { t0 + h * (step + 1) as f64 };
            observe(t_next, y);
        }
    }
    IntegrationStats { steps, rejected: 0, rhs_evals: 4 * steps }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth- minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri5<S, F>(
    sys: &mut S,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut observe: F,
) -> Result<IntegrationStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[f64]),
{
    let dim = y.len();
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut stats = IntegrationStats::default();

    // sampling grid identical to the RK4 one
    let grid_steps = cfg.steps_for(t1 - t0);
    let sample_dt = (t1 - t0) / grid_steps as f64 * cfg.sample_stride as f64;
    let mut next_sample = 1usize;
    let sample_time = |k: usize| {
        let s = t0 + sample_dt * k as f64;
        if s >= t1 - 1e-12 * (t1 - t0) {
            t1
        } else {
            s
        }
    };

    observe(t0, y);
    if t1 == t0 {
        return Ok(stats);
    }
    let mut t = t0;
    let mut h = ((t1 - t0) / grid_steps as f64).max(1e-12);
    sys.rhs(t, y, &mut k[0]);
    stats.rhs_evals += 1;
    let max_attempts = 50_000_000usize;

    while t < t1 {
        if stats.steps + stats.rejected > max_attempts {
            return Err(QgoError::Integration("adaptive integrator exceeded its step budget".into()));
        }
        let target = sample_time(next_sample);
        let mut hit = false;
        let mut step = h;
        if t + step >= target {
            step = target - t;
            hit = true;
        }
        {
            let (k0, rest) = k.split_at_mut(1);
            let k0 = &k0[0];
            let stage = |tmp: &mut [f64], coeffs: &[(f64, &[f64])], y: &[f64]| {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (a, ki) in coeffs {
                        acc += step * a * ki[i];
                    }
                    tmp[i] = acc;
                }
            };
            stage(&mut tmp, &[(A21, k0)], y);
            sys.rhs(t + C2 * step, &tmp, &mut rest[0]);
            stage(&mut tmp, &[(A31, k0), (A32, &rest[0])], y);
            sys.rhs(t + C3 * step, &tmp, &mut rest[1]);
            stage(&mut tmp, &[(A41, k0), (A42, &rest[0]), (A43, &rest[1])], y);
            sys.rhs(t + C4 * step, &tmp, &mut rest[2]);
            stage(&mut tmp, &[(A51, k0), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])], y);
            sys.rhs(t + C5 * step, &tmp, &mut rest[3]);
            stage(&mut tmp, &[(A61, k0), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])], y);
            sys.rhs(t + step, &tmp, &mut rest[4]);
            stage(&mut y_new, &[(B1, k0), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])], y);
            sys.rhs(t + step, &y_new, &mut rest[5]);
        }
        stats.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..dim {
            let e = step * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let scale = cfg.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err += (e / scale).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() {
            return Err(QgoError::Integration("non-finite error estimate".into()));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            t = if hit { target } else { t + step };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            stats.steps += 1;
            if hit {
                observe(t, y);
                next_sample += 1;
                // a truncated step says little about the next one
                h = if step < h { h } else { step * factor };
            } else {
                h = step * factor;
            }
        } else {
            stats.rejected += 1;
            h = step * factor;
        }
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(QgoError::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Ok(stats)
}
