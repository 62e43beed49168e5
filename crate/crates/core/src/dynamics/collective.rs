//! Annealing of the uniform all-to-all ferromagnet with a uniform y-field.
//!
//! Both the Hamiltonian and `|+…+⟩` are invariant under site permutations,
//! so the evolution stays in the symmetric subspace spanned by the Dicke
//! states `|k⟩` (k spins down), which has dimension `n + 1`.

use num_complex::Complex64;

use crate::error::{QgoError, Result};
use crate::model::ScheduleParams;

use super::integrator::{integrate, IntegratorConfig, OdeSystem};
use super::schrodinger::NORM_FAILURE_TOL;
use super::StateVector;

/// Propagator for `ferro_problem(n, j)` with every `c_i` equal.
#[derive(Debug, Clone)]
pub struct CollectiveEngine {
    n: usize,
    j: f64,
    energies: Vec<f64>,
    // ⟨k+1| Σσ^x |k⟩
    hop: Vec<f64>,
}

/// Amplitudes over the Dicke basis, `amps[k]` for k spins down.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveState {
    n: usize,
    amps: Vec<Complex64>,
    energies: Vec<f64>,
}

struct Collective<'a> {
    engine: &'a CollectiveEngine,
    sched: ScheduleParams,
    c: f64,
}

impl OdeSystem for Collective<'_> {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let e = self.engine;
        let dim = e.n + 1;
        let (yr, yi) = y.split_at(dim);
        let (dr, di) = dy.split_at_mut(dim);
        let a = self.sched.a_at(t);
        let b = self.sched.b_at(t);
        let cy = self.c * self.sched.y_envelope(t);
        for k in 0..dim {
            let psi = Complex64::new(yr[k], yi[k]);
            let mut h = psi * (a * e.energies[k]);
            if k + 1 < dim {
                let next = Complex64::new(yr[k + 1], yi[k + 1]);
                // -B Σσ^x - C Σσ^y connects k to k ± 1
                h -= next * Complex64::new(b, -cy) * e.hop[k];
            }
            if k > 0 {
                let prev = Complex64::new(yr[k - 1], yi[k - 1]);
                h -= prev * Complex64::new(b, cy) * e.hop[k - 1];
            }
            dr[k] = h.im;
            di[k] = -h.re;
        }
    }
}

impl CollectiveEngine {
    pub fn ferro(n: usize, j: f64) -> Result<Self> {
        if n < 2 {
            return Err(QgoError::InvalidSize(format!("ferromagnet needs n >= 2, got {n}")));
        }
        if !(j > 0.0) || !j.is_finite() {
            return Err(QgoError::InvalidArgument(format!("ferromagnetic J must be > 0, got {j}")));
        }
        let nf = n as f64;
        let energies = (0..=n)
            .map(|k| {
                let m = nf - 2.0 * k as f64;
                -j / (nf - 1.0) * (m * m - nf) / 2.0
            })
            .collect();
        let hop = (0..n).map(|k| (((k + 1) * (n - k)) as f64).sqrt()).collect();
        Ok(Self { n, j, energies, hop })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    /// Image of `|+…+⟩`: `sqrt(C(n, k)) / 2^(n/2)`.
    pub fn plus_state(&self) -> CollectiveState {
        let n = self.n;
        let mut log_binom = 0.0;
        let amps = (0..=n)
            .map(|k| {
                if k > 0 {
                    log_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
                }
                Complex64::new((0.5 * log_binom - 0.5 * n as f64 * std::f64::consts::LN_2).exp(), 0.0)
            })
            .collect();
        CollectiveState { n, amps, energies: self.energies.clone() }
    }

    pub fn evolve(&self, p: &ScheduleParams, c: f64, cfg: &IntegratorConfig) -> Result<CollectiveState> {
        self.evolve_observed(p, c, cfg, p.tau, |_, _| {})
    }

    pub fn evolve_until(
        &self,
        p: &ScheduleParams,
        c: f64,
        cfg: &IntegratorConfig,
        t_end: f64,
    ) -> Result<CollectiveState> {
        self.evolve_observed(p, c, cfg, t_end, |_, _| {})
    }

    pub fn evolve_observed<F>(
        &self,
        p: &ScheduleParams,
        c: f64,
        cfg: &IntegratorConfig,
        t_end: f64,
        mut observe: F,
    ) -> Result<CollectiveState>
    where
        F: FnMut(f64, &CollectiveState),
    {
        p.validate()?;
        cfg.validate()?;
        if !c.is_finite() {
            return Err(QgoError::InvalidArgument(format!("y-field amplitude {c}")));
        }
        let start = self.plus_state();
        let mut y: Vec<f64> = start.amps.iter().map(|a| a.re).chain(start.amps.iter().map(|a| a.im)).collect();
        let mut sys = Collective { engine: self, sched: *p, c };
        integrate(&mut sys, &mut y, 0.0, t_end, cfg, |t, y| observe(t, &self.state_from_split(y)))?;
        let out = self.state_from_split(&y);
        out.check_norm()?;
        Ok(out)
    }

    fn state_from_split(&self, y: &[f64]) -> CollectiveState {
        let dim = self.n + 1;
        let amps = (0..dim).map(|k| Complex64::new(y[k], y[dim + k])).collect();
        CollectiveState { n: self.n, amps, energies: self.energies.clone() }
    }
}

impl CollectiveState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn fidelity_all_up(&self) -> f64 {
        self.amps[0].norm_sqr()
    }

    /// Mass on both ground states (all up, all down).
    pub fn ground_fidelity(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[self.n].norm_sqr()
    }

    pub fn energy(&self) -> f64 {
        self.amps.iter().zip(&self.energies).map(|(a, e)| a.norm_sqr() * e).sum()
    }

    /// `⟨σ^z_i⟩`, the same on every site.
    pub fn magnetization(&self) -> f64 {
        let n = self.n as f64;
        self.amps.iter().enumerate().map(|(k, a)| a.norm_sqr() * (n - 2.0 * k as f64) / n).sum()
    }

    /// Embedding into the full `2^n` space.
    pub fn to_state_vector(&self) -> StateVector {
        let n = self.n;
        let binom: Vec<f64> = (0..=n)
            .scan(1.0f64, |acc, k| {
                if k > 0 {
                    *acc = *acc * (n - k + 1) as f64 / k as f64;
                }
                Some(*acc)
            })
            .collect();
        let amps = (0..1usize << n)
            .map(|z| {
                let k = z.count_ones() as usize;
                self.amps[k] / binom[k].sqrt()
            })
            .collect();
        StateVector::new(n, amps).expect("dimension 2^n")
    }

    fn check_norm(&self) -> Result<()> {
        if self.amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QgoError::Integration("non-finite amplitude".into()));
        }
        let drift = (self.norm() - 1.0).abs();
        if drift > NORM_FAILURE_TOL {
            return Err(QgoError::Integration(format!("norm drifted by {drift:e}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SchrodingerEngine;
    use crate::model::{ferro_problem, CVector};

    #[test]
    fn plus_state_embeds_to_uniform_superposition() {
        let s = CollectiveEngine::ferro(7, 1.0).unwrap().plus_state();
        assert!((s.norm() - 1.0).abs() < 1e-14);
        let full = s.to_state_vector();
        assert!((full.overlap_sqr(&StateVector::plus_state(7)) - 1.0).abs() < 1e-12);
        assert!(s.magnetization().abs() < 1e-14);
        assert!(s.energy().abs() < 1e-12);
    }

    #[test]
    fn matches_full_statevector() {
        for &(n, c, tau_end) in &[(6usize, 1.563f64, 1.0), (7, -0.8, 1.0), (8, 1.2, 1.4)] {
            let p = ScheduleParams::new(1.0, 0.539, 1.0, c.abs()).unwrap();
            let cfg = IntegratorConfig::default();
            let coll = CollectiveEngine::ferro(n, 1.0).unwrap().evolve_until(&p, c, &cfg, tau_end).unwrap();
            let full = SchrodingerEngine::new(&ferro_problem(n, 1.0).unwrap())
                .evolve_until(&p, &CVector::uniform(n, c), &cfg, tau_end)
                .unwrap();
            let embedded = coll.to_state_vector();
            assert!((embedded.inner(&full).norm() - 1.0).abs() < 1e-10);
            assert!((coll.fidelity_all_up() - full.probabilities()[0]).abs() < 1e-10);
            assert!((coll.magnetization() - full.magnetization(0)).abs() < 1e-10);
            let e_full: f64 = full
                .probabilities()
                .iter()
                .zip(ferro_problem(n, 1.0).unwrap().energy_diagonal())
                .map(|(p, e)| p * e)
                .sum();
            assert!((coll.energy() - e_full).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_energy_of_dicke_ends() {
        let e = CollectiveEngine::ferro(5, 1.0).unwrap();
        assert!((e.energies[0] + 2.5).abs() < 1e-14);
        assert!((e.energies[5] + 2.5).abs() < 1e-14);
        // one spin flipped: 4 broken bonds of strength 1/4 relative to ground
        assert!((e.energies[1] - (-2.5 + 2.0)).abs() < 1e-14);
    }
}
