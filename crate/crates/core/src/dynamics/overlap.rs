//! Overlaps of the annealed state with instantaneous ground spaces, by dense
//! diagonalisation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QgoError, Result};
use crate::model::{coefficients, CVector, IsingProblem, ScheduleParams};

use super::{IntegratorConfig, SchrodingerEngine, StateVector};

/// Largest size accepted by [`overlap_trace`].
pub const MAX_OVERLAP_SITES: usize = 12;

/// Levels within this distance (relative to the ground energy scale) of
/// the minimum count as one ground space.
const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapSample {
    pub t: f64,
    /// Ground space of `H^z`.
    pub problem: f64,
    /// Ground space of `A H^z + B H^x`.
    pub transverse: f64,
    /// Ground space of the full Hamiltonian including the y-field.
    pub full: f64,
}

/// Dense `A H^z + B H^x + Σ C_i H^y_i` at time `t`.
fn dense_hamiltonian(diag: &[f64], n: usize, a: f64, b: f64, cy: &[f64]) -> DMatrix<Complex64> {
    let dim = diag.len();
    let mut h = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for z in 0..dim {
        h[(z, z)] = Complex64::new(a * diag[z], 0.0);
        for (site, &c) in cy.iter().enumerate().take(n) {
            let m = 1usize << (n - 1 - site);
            if z & m != 0 {
                continue;
            }
            let w = z | m;
            // -B σ^x - C σ^y with σ^y|up⟩ = i|down⟩
            h[(w, z)] = Complex64::new(-b, -c);
            h[(z, w)] = Complex64::new(-b, c);
        }
    }
    h
}

/// `Σ_k |⟨v_k|ψ⟩|²` over the lowest eigenspace.
fn ground_space_overlap(h: DMatrix<Complex64>, psi: &DVector<Complex64>) -> f64 {
    let eig = h.symmetric_eigen();
    let e0 = eig.eigenvalues.min();
    let tol = DEGENERACY_TOL * (1.0 + e0.abs());
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, e)| **e - e0 <= tol)
        .map(|(k, _)| eig.eigenvectors.column(k).dotc(psi).norm_sqr())
        .sum()
}

fn problem_overlap(diag: &[f64], state: &StateVector) -> f64 {
    let e0 = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = DEGENERACY_TOL * (1.0 + e0.abs());
    diag.iter().zip(state.amplitudes()).filter(|(e, _)| **e - e0 <= tol).map(|(_, a)| a.norm_sqr()).sum()
}

/// Lab-frame anneal sampled at the integrator's observation grid.
pub fn overlap_trace(
    problem: &IsingProblem,
    p: &ScheduleParams,
    c: &CVector,
    cfg: &IntegratorConfig,
) -> Result<Vec<OverlapSample>> {
    let n = problem.n();
    if n > MAX_OVERLAP_SITES {
        return Err(QgoError::Capability(format!(
            "dense diagonalisation limited to n <= {MAX_OVERLAP_SITES}, got {n}"
        )));
    }
    let engine = SchrodingerEngine::new(problem);
    let diag = engine.energy_diagonal().to_vec();
    let zeros = vec![0.0; n];
    let mut out = Vec::new();
    engine.evolve_observed(p, c, cfg, p.tau, |t, state| {
        let k = coefficients(t, p, c);
        let psi = DVector::from_column_slice(state.amplitudes());
        out.push(OverlapSample {
            t,
            problem: problem_overlap(&diag, state),
            transverse: ground_space_overlap(dense_hamiltonian(&diag, n, k.a, k.b, &zeros), &psi),
            full: ground_space_overlap(dense_hamiltonian(&diag, n, k.a, k.b, &k.c), &psi),
        });
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ferro_problem;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default().with_stride(250)
    }

    #[test]
    fn dense_matches_matrix_free_action() {
        use crate::dynamics::hamiltonian::{apply_minus_i_h, SiteFields};
        let problem = crate::model::sk_problem(4, 5).unwrap();
        let diag = problem.energy_diagonal();
        let p = ScheduleParams::new(1.0, 0.6, 1.0, 1.5).unwrap();
        let c = CVector::new(vec![1.5, -1.5, 1.5, 1.5]);
        let k = coefficients(0.37, &p, &c);
        let h = dense_hamiltonian(&diag, 4, k.a, k.b, &k.c);
        assert!((h.adjoint() - &h).norm() < 1e-14);

        let psi = DVector::from_fn(16, |z, _| Complex64::new((z as f64).cos(), (0.3 * z as f64).sin()));
        let expected = (&h * &psi) * Complex64::new(0.0, -1.0);
        let fields = SiteFields { z: vec![0.0; 4], x: vec![-k.b; 4], y: k.c.iter().map(|v| -v).collect() };
        let y: Vec<f64> = psi.iter().map(|a| a.re).chain(psi.iter().map(|a| a.im)).collect();
        let mut dy = vec![0.0; 32];
        apply_minus_i_h(4, &diag, k.a, &fields, &y, &mut dy);
        for z in 0..16 {
            assert!((Complex64::new(dy[z], dy[16 + z]) - expected[z]).norm() < 1e-12);
        }
    }

    #[test]
    fn start_overlaps() {
        let problem = ferro_problem(8, 1.0).unwrap();
        let p = ScheduleParams::new(1.0, 0.539, 1.0, 1.563).unwrap();
        let trace = overlap_trace(&problem, &p, &CVector::uniform(8, 1.563), &cfg()).unwrap();
        let first = trace[0];
        assert_eq!(first.t, 0.0);
        assert!((first.full - 1.0).abs() < 1e-8);
        assert!((first.transverse - 1.0).abs() < 1e-8);
        assert!((first.problem - 2.0 / 256.0).abs() < 1e-12);
        for s in &trace {
            for v in [s.problem, s.transverse, s.full] {
                assert!((-1e-12..=1.0 + 1e-9).contains(&v));
            }
        }
    }

    #[test]
    fn y_field_raises_final_problem_overlap() {
        let problem = ferro_problem(8, 1.0).unwrap();
        let p = ScheduleParams::new(1.0, 0.539, 1.0, 1.563).unwrap();
        let qgo = overlap_trace(&problem, &p, &CVector::uniform(8, 1.563), &cfg()).unwrap();
        let qa = overlap_trace(&problem, &p, &CVector::zeros(8), &cfg()).unwrap();
        let (q, a) = (qgo.last().unwrap(), qa.last().unwrap());
        assert_eq!(q.t, 1.0);
        assert!(q.problem > a.problem, "{} vs {}", q.problem, a.problem);
        // at t = τ all three Hamiltonians share the ground space
        assert!((q.problem - q.full).abs() < 1e-8);
    }

    #[test]
    fn rejects_large_systems() {
        let problem = ferro_problem(13, 1.0).unwrap();
        let err = overlap_trace(&problem, &ScheduleParams::default(), &CVector::zeros(13), &cfg());
        assert!(matches!(err, Err(QgoError::Capability(_))));
    }
}
