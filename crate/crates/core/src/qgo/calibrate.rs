use serde::{Deserialize, Serialize};

use crate::dynamics::{final_magnetization, CollectiveEngine, IntegratorConfig, MeanFieldParams};
use crate::error::{QgoError, Result};
use crate::model::ScheduleParams;

use super::Measure;

/// Systems whose anneal is tuned by [`optimize_bc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcFamily {
    /// Single self-consistent spin; maximises the final `⟨σ^z⟩`.
    MeanField,
    /// Fully connected ferromagnet with a uniform positive y-field.
    Ferro { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Grid points per axis of the coarse scan.
    pub grid: usize,
    pub b_range: (f64, f64),
    /// Range of `c` at `τ = 1`; divided by `τ` otherwise.
    pub c_range: (f64, f64),
    pub tau: f64,
    pub integrator: IntegratorConfig,
    /// Ferro objective. Fidelity is the all-up probability.
    pub measure: Measure,
    pub max_iter: usize,
    /// Stop once the finite-difference gradient norm falls below this.
    pub grad_tol: f64,
    /// Finite-difference step of the refinement gradient.
    pub fd_step: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            grid: 21,
            b_range: (0.0, 1.0),
            c_range: (1.0, 2.0),
            tau: 1.0,
            integrator: IntegratorConfig::default(),
            measure: Measure::Fidelity,
            max_iter: 100,
            grad_tol: 1e-6,
            fd_step: 1e-4,
        }
    }
}

impl CalibrationConfig {
    fn validate(&self) -> Result<()> {
        let ranges = [self.b_range, self.c_range];
        if self.grid < 2 || ranges.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(QgoError::InvalidArgument(format!("calibration grid {self:?}")));
        }
        if !(self.tau > 0.0) || !(self.fd_step > 0.0) || !(self.grad_tol > 0.0) {
            return Err(QgoError::InvalidArgument(format!("calibration settings {self:?}")));
        }
        self.integrator.validate()
    }
}

/// One point of the coarse scan. `value` is the physical quantity
/// (`⟨σ^z⟩`, fidelity or energy), not the minimised objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub b: f64,
    pub c: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcOptimum {
    pub b: f64,
    pub c: f64,
    /// Measure at `(b, c)`.
    pub value: f64,
    /// Gradient norm of the objective at the returned point.
    pub residual: f64,
    /// False when the refinement stopped without meeting the tolerance; the
    /// returned point is then the best one seen (possibly a grid point).
    pub converged: bool,
    pub grid: Vec<ScanPoint>,
}

struct Objective {
    family: BcFamily,
    engine: Option<CollectiveEngine>,
    cfg: CalibrationConfig,
}

impl Objective {
    fn new(family: BcFamily, cfg: &CalibrationConfig) -> Result<Self> {
        let engine = match family {
            BcFamily::MeanField => None,
            BcFamily::Ferro { n } => Some(CollectiveEngine::ferro(n, 1.0)?),
        };
        Ok(Self { family, engine, cfg: *cfg })
    }

    fn value(&self, b: f64, c: f64) -> Result<f64> {
        match &self.engine {
            Some(engine) => {
                let p = ScheduleParams::new(1.0, b, self.cfg.tau, c)?;
                let psi = engine.evolve(&p, c, &self.cfg.integrator)?;
                Ok(match self.cfg.measure {
                    Measure::Fidelity => psi.fidelity_all_up(),
                    Measure::Energy => psi.energy(),
                })
            }
            None => final_magnetization(&MeanFieldParams::new(b, c, self.cfg.tau), &self.cfg.integrator),
        }
    }

    /// Quantity to minimise.
    fn cost(&self, x: [f64; 2]) -> Result<f64> {
        Ok(self.cost_of(self.value(x[0], x[1])?))
    }

    fn cost_of(&self, value: f64) -> f64 {
        match (self.family, self.cfg.measure) {
            (BcFamily::Ferro { .. }, Measure::Energy) => value,
            _ => -value,
        }
    }

    fn gradient(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let h = self.cfg.fd_step;
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate() {
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            *gk = (self.cost(xp)? - self.cost(xm)?) / (2.0 * h);
        }
        Ok(g)
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

/// BFGS with Armijo backtracking. Returns `(x, |∇f|, converged)`.
fn bfgs(obj: &Objective, mut x: [f64; 2], mut f: f64) -> Result<([f64; 2], f64, bool)> {
    let cfg = &obj.cfg;
    let mut g = obj.gradient(x)?;
    // inverse Hessian estimate, row major
    let mut hinv = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..cfg.max_iter {
        if norm(g) < cfg.grad_tol {
            return Ok((x, norm(g), true));
        }
        let mut d = [-(hinv[0][0] * g[0] + hinv[0][1] * g[1]), -(hinv[1][0] * g[0] + hinv[1][1] * g[1])];
        if dot(d, g) >= 0.0 {
            hinv = [[1.0, 0.0], [0.0, 1.0]];
            d = [-g[0], -g[1]];
        }
        let mut step = 1.0;
        let accepted = loop {
            let trial = [x[0] + step * d[0], x[1] + step * d[1]];
            let ft = obj.cost(trial)?;
            if ft <= f + 1e-4 * step * dot(g, d) {
                break Some((trial, ft));
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        let Some((xn, fn_)) = accepted else {
            // no descent left at this resolution
            return Ok((x, norm(g), norm(g) < 1e3 * cfg.grad_tol));
        };
        let gn = obj.gradient(xn)?;
        let s = [xn[0] - x[0], xn[1] - x[1]];
        let y = [gn[0] - g[0], gn[1] - g[1]];
        let sy = dot(s, y);
        if sy > 1e-16 {
            let r = 1.0 / sy;
            let hy = [hinv[0][0] * y[0] + hinv[0][1] * y[1], hinv[1][0] * y[0] + hinv[1][1] * y[1]];
            let yhy = dot(y, hy);
            for i in 0..2 {
                for j in 0..2 {
                    hinv[i][j] += (1.0 + r * yhy) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = xn;
        f = fn_;
        g = gn;
    }
    let gn = norm(g);
    Ok((x, gn, gn < cfg.grad_tol))
}

/// Coarse grid scan over `(b, c)` followed by quasi-Newton refinement from
/// the best grid point.
pub fn optimize_bc(family: BcFamily, cfg: &CalibrationConfig) -> Result<BcOptimum> {
    cfg.validate()?;
    let obj = Objective::new(family, cfg)?;
    let k = cfg.grid;
    let axis = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;
    let mut grid = Vec::with_capacity(k * k);
    let mut best = ([0.0; 2], f64::INFINITY);
    for i in 0..k {
        for j in 0..k {
            let b = axis(cfg.b_range, i);
            let c = axis(cfg.c_range, j) / cfg.tau;
            let value = obj.value(b, c)?;
            let cost = obj.cost_of(value);
            grid.push(ScanPoint { b, c, value });
            if cost < best.1 {
                best = ([b, c], cost);
            }
        }
    }
    let (x, residual, converged) = bfgs(&obj, best.0, best.1)?;
    if !converged {
        log::warn!("(b, c) refinement stopped at residual {residual:.3e}; returning best point found");
    }
    let value = obj.value(x[0], x[1])?;
    Ok(BcOptimum { b: x[0], c: x[1], value, residual, converged, grid })
}
