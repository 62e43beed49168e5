//! Classical master equation for simulated annealing with single-spin-flip
//! Metropolis rates `min(1, exp(-β ΔE))`, one attempt per spin per unit time.

use serde::Serialize;

use crate::error::{QgoError, Result};
use crate::model::IsingProblem;

use super::integrator::{integrate, IntegratorConfig, OdeSystem};

/// Entries more negative than this abort the evolution.
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-10;

/// Probability distribution over the `2^n` spin configurations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        Self { n, probs: vec![1.0 / dim as f64; dim] }
    }

    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n {
            return Err(QgoError::InvalidSize(format!("{} probabilities for {n} sites", probs.len())));
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn check(&self) -> Result<()> {
        if let Some((z, p)) =
            self.probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < -NEGATIVE_PROBABILITY_TOL)
        {
            return Err(QgoError::Integration(format!("probability of state {z} is {p:e}")));
        }
        Ok(())
    }
}

/// `β(t) = s / (1.1 - s)` with `s = t/τ`; `β(0) = 0`, `β(τ) = 10`.
pub fn sa_beta(t: f64, tau: f64) -> f64 {
    let s = t / tau;
    s / (1.1 - s)
}

struct Master<'a, B> {
    n: usize,
    diag: &'a [f64],
    beta: B,
}

impl<B: Fn(f64) -> f64> OdeSystem for Master<'_, B> {
    fn rhs(&mut self, t: f64, p: &[f64], dp: &mut [f64]) {
        let beta = (self.beta)(t);
        dp.fill(0.0);
        for site in 0..self.n {
            let m = 1usize << (self.n - 1 - site);
            for z in (0..p.len()).filter(|z| z & m == 0) {
                let w = z | m;
                let de = self.diag[w] - self.diag[z];
                // the downhill move is always accepted
                let (up, down) = if de > 0.0 { ((-beta * de).exp(), 1.0) } else { (1.0, (beta * de).exp()) };
                let flux = down * p[w] - up * p[z];
                dp[z] += flux;
                dp[w] -= flux;
            }
        }
    }
}

/// Simulated annealing from the uniform distribution with the standard
/// inverse-temperature ramp [`sa_beta`].
pub fn evolve_master_equation(
    problem: &IsingProblem,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<ClassicalDistribution> {
    evolve_master_with_beta(problem, tau, cfg, |t| sa_beta(t, tau))
}

/// Same dynamics under an arbitrary `β(t)` on `[0, τ]`.
pub fn evolve_master_with_beta<B>(
    problem: &IsingProblem,
    tau: f64,
    cfg: &IntegratorConfig,
    beta: B,
) -> Result<ClassicalDistribution>
where
    B: Fn(f64) -> f64,
{
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(QgoError::InvalidArgument(format!("annealing time must be > 0, got {tau}")));
    }
    cfg.validate()?;
    let diag = problem.energy_diagonal();
    let n = problem.n();
    let mut sys = Master { n, diag: &diag, beta };
    let mut p = ClassicalDistribution::uniform(n).probs;
    integrate(&mut sys, &mut p, 0.0, tau, cfg, |_, _| {})?;
    let out = ClassicalDistribution { n, probs: p };
    out.check()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ferro_problem, sk_problem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn beta_schedule_end_points() {
        assert_eq!(sa_beta(0.0, 3.0), 0.0);
        assert!((sa_beta(3.0, 3.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_temperature_keeps_uniform() {
        let problem = sk_problem(6, 4).unwrap();
        let out = evolve_master_with_beta(&problem, 2.0, &cfg(), |_| 0.0).unwrap();
        let u = 1.0 / 64.0;
        assert!(out.probabilities().iter().all(|p| (p - u).abs() < 1e-8));
    }

    #[test]
    fn single_site_stays_uniform() {
        let problem = IsingProblem::new(1, []).unwrap();
        let out = evolve_master_equation(&problem, 5.0, &cfg()).unwrap();
        assert!(out.probabilities().iter().all(|p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn probability_is_conserved() {
        for seed in 0..5 {
            let out = evolve_master_equation(&sk_problem(7, seed).unwrap(), 1.0, &cfg()).unwrap();
            assert!((out.total() - 1.0).abs() < 1e-8);
            assert!(out.probabilities().iter().all(|p| *p >= -NEGATIVE_PROBABILITY_TOL));
        }
    }

    #[test]
    fn fixed_temperature_relaxes_to_boltzmann() {
        let problem = sk_problem(4, 11).unwrap();
        let beta = 1.3;
        let out = evolve_master_with_beta(&problem, 60.0, &IntegratorConfig::rk4(50), |_| beta).unwrap();
        let w: Vec<f64> = problem.energy_diagonal().iter().map(|e| (-beta * e).exp()).collect();
        let z: f64 = w.iter().sum();
        for (p, w) in out.probabilities().iter().zip(&w) {
            assert!((p - w / z).abs() < 1e-8, "{p} vs {}", w / z);
        }
    }

    #[test]
    fn rates_satisfy_detailed_balance() {
        let problem = sk_problem(5, 2).unwrap();
        let diag = problem.energy_diagonal();
        let beta = 0.7;
        let rate = |from: usize, to: usize| (-beta * (diag[to] - diag[from])).exp().min(1.0);
        for z in 0..32usize {
            for bit in 0..5 {
                let w = z ^ (1 << bit);
                let lhs = rate(z, w) * (-beta * diag[z]).exp();
                let rhs = rate(w, z) * (-beta * diag[w]).exp();
                assert!((lhs - rhs).abs() < 1e-12 * lhs.max(rhs));
            }
        }
    }

    /// Continuous-time Metropolis walkers: attempts arrive at rate `n`, each
    /// picks a spin uniformly and is accepted with the rate at that instant.
    fn monte_carlo_ground_mass(problem: &IsingProblem, tau: f64, walkers: usize, ground: &[usize]) -> f64 {
        let n = problem.n();
        let diag = problem.energy_diagonal();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut hits = 0usize;
        for _ in 0..walkers {
            let mut z = rng.random_range(0..1usize << n);
            let mut t = 0.0;
            loop {
                let u: f64 = rng.random();
                t += -(1.0 - u).ln() / n as f64;
                if t >= tau {
                    break;
                }
                let w = z ^ (1 << rng.random_range(0..n));
                let accept = (-sa_beta(t, tau) * (diag[w] - diag[z])).exp().min(1.0);
                if rng.random::<f64>() < accept {
                    z = w;
                }
            }
            hits += ground.contains(&z) as usize;
        }
        hits as f64 / walkers as f64
    }

    #[test]
    fn ferro_gains_ground_mass_and_matches_monte_carlo() {
        let problem = ferro_problem(8, 1.0).unwrap();
        let out = evolve_master_equation(&problem, 1.0, &cfg()).unwrap();
        let mass = out.probabilities()[0] + out.probabilities()[255];
        assert!(mass > 2.0 / 256.0, "{mass}");
        let walkers = 200_000;
        let mc = monte_carlo_ground_mass(&problem, 1.0, walkers, &[0, 255]);
        let sigma = (mass * (1.0 - mass) / walkers as f64).sqrt();
        assert!((mc - mass).abs() < 5.0 * sigma, "master {mass} vs mc {mc} (σ {sigma})");
    }
}
