use std::f64::consts::FRAC_PI_2;

use crate::dynamics::StateVector;
use crate::error::{QgoError, Result};
use crate::measures::energy_expectation;
use crate::model::{site_bit, CVector, IsingProblem, SpinConfig};

use super::{QgoConfig, QgoStep, QgoTrace, ZERO_GRADIENT_TOL};

/// `∏_i exp(i θ_i σ^y_i / 2) |+…+⟩`, applied gate by gate.
///
/// With this sign a positive angle tilts the spin towards `+z`:
/// `⟨σ^z_i⟩ = sin θ_i`.
pub fn product_state(theta: &[f64]) -> StateVector {
    let n = theta.len();
    let mut amps = StateVector::plus_state(n).amplitudes().to_vec();
    for (site, &th) in theta.iter().enumerate() {
        // exp(iθσ^y/2) = cos(θ/2) + sin(θ/2) [[0, 1], [-1, 0]]
        let (s, c) = (0.5 * th).sin_cos();
        let m = 1usize << site_bit(n, site);
        for z in (0..amps.len()).filter(|z| z & m == 0) {
            let (up, down) = (amps[z], amps[z | m]);
            amps[z] = up * c + down * s;
            amps[z | m] = down * c - up * s;
        }
    }
    StateVector::new(n, amps).expect("dimension 2^n")
}

/// Closed form `-Σ J_ij sin θ_i sin θ_j` of the product-state energy.
pub fn product_state_energy(problem: &IsingProblem, theta: &[f64]) -> f64 {
    problem.couplings().map(|(i, j, v)| -v * theta[i].sin() * theta[j].sin()).sum()
}

/// Energy measure of the rotation circuit, evaluated on the statevector.
pub fn yfield_energy(problem: &IsingProblem, theta: &[f64]) -> Result<f64> {
    if theta.len() != problem.n() {
        return Err(QgoError::InvalidSize(format!("{} angles for {} sites", theta.len(), problem.n())));
    }
    energy_expectation(&product_state(theta), problem)
}

/// Greedy `±π/2` assignment of the rotation angles.
///
/// Every gradient vanishes while no angle is fixed (the x-polarised state
/// has zero energy to first order in any single angle), and again whenever
/// the remaining sites are decoupled from the fixed ones. Such a step breaks
/// the symmetry by fixing the lowest unfixed site to `+π/2`, like the first
/// coefficient of the single-shot variant. A problem without couplings is
/// rejected as ambiguous.
pub fn yfield_greedy(problem: &IsingProblem, cfg: &QgoConfig) -> Result<(SpinConfig, QgoTrace)> {
    if !(cfg.delta > 0.0) {
        return Err(QgoError::InvalidArgument(format!("probe width must be > 0, got {}", cfg.delta)));
    }
    if problem.is_trivial() {
        return Err(QgoError::Ambiguity("no couplings; every configuration is optimal".into()));
    }
    let n = problem.n();
    let mut theta = vec![0.0; n];
    let mut base = yfield_energy(problem, &theta)?;
    let mut calls = 1;
    let mut steps = Vec::with_capacity(n);
    for iteration in 0..n {
        let free: Vec<usize> = (0..n).filter(|&i| theta[i] == 0.0).collect();
        let gradients = free
            .iter()
            .map(|&j| {
                let mut probe = theta.clone();
                probe[j] += cfg.delta;
                Ok((j, (yfield_energy(problem, &probe)? - base) / cfg.delta))
            })
            .collect::<Result<Vec<_>>>()?;
        calls += free.len();
        let mut best = gradients[0];
        for &(j, g) in &gradients[1..] {
            if g.abs() > best.1.abs() {
                best = (j, g);
            }
        }
        let (site, sign) = if best.1.abs() < ZERO_GRADIENT_TOL {
            (free[0], 1)
        } else if best.1 > 0.0 {
            (best.0, -1)
        } else {
            (best.0, 1)
        };
        theta[site] = f64::from(sign) * FRAC_PI_2;
        base = yfield_energy(problem, &theta)?;
        if iteration + 1 < n {
            calls += 1;
        }
        steps.push(QgoStep {
            iteration,
            gradients,
            assigned: vec![(site, sign)],
            measure_value: base,
            qa_calls: calls,
        });
    }
    let angles = CVector::new(theta);
    Ok((angles.signs()?, QgoTrace { steps, qa_calls: calls, coefficients: angles }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ferro_problem, sk_problem};
    use num_complex::Complex64;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn statevector_matches_closed_form(seed in 0u64..500, angles in proptest::collection::vec(-3.2f64..3.2, 6)) {
            let problem = sk_problem(6, seed).unwrap();
            let sv = yfield_energy(&problem, &angles).unwrap();
            prop_assert!((sv - product_state_energy(&problem, &angles)).abs() < 1e-10);
            let state = product_state(&angles);
            prop_assert!((state.norm() - 1.0).abs() < 1e-12);
            for (i, th) in angles.iter().enumerate() {
                prop_assert!((state.magnetization(i) - th.sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unrotated_state_has_zero_energy() {
        for seed in 0..5 {
            let problem = sk_problem(7, seed).unwrap();
            assert!(yfield_energy(&problem, &[0.0; 7]).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_points_up() {
        let s = product_state(&[FRAC_PI_2]);
        assert!((s.amplitudes()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ferro_greedy_aligns_all_spins() {
        let (config, trace) = yfield_greedy(&ferro_problem(6, 1.0).unwrap(), &QgoConfig::default()).unwrap();
        assert_eq!(config, SpinConfig::all_up(6));
        assert_eq!(trace.qa_calls, 6 * 9 / 2);
    }

    #[test]
    fn decoupled_problem_is_ambiguous() {
        let err = yfield_greedy(&IsingProblem::new(4, []).unwrap(), &QgoConfig::default());
        assert!(matches!(err, Err(QgoError::Ambiguity(_))));
    }
}
