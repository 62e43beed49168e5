//! Energies, fidelities, the brute-force ground-state oracle and success
//! accounting.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ClassicalDistribution, StateVector};
use crate::error::{QgoError, Result};
use crate::model::{IsingProblem, SpinConfig};

/// Largest problem [`ground_states`] will enumerate.
pub const MAX_ENUMERATION_SITES: usize = 24;

/// Absolute tolerance for counting a configuration as degenerate with the
/// minimum.
pub const TIE_TOL: f64 = 1e-12;

/// Minimum of `H^z` and every configuration attaining it, sorted by basis
/// index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n: usize,
    pub energy: f64,
    pub configs: Vec<SpinConfig>,
}

impl GroundTruth {
    pub fn contains(&self, config: &SpinConfig) -> bool {
        self.configs.contains(config)
    }

    pub fn degeneracy(&self) -> usize {
        self.configs.len()
    }

    /// Ground configuration used as the fidelity target: the first (lowest
    /// basis index) one whose site 0 is `+1`.
    pub fn designated_target(&self) -> &SpinConfig {
        self.configs.iter().find(|c| c.signs()[0] > 0).expect("ground space is closed under global flip")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let gt: Self = serde_json::from_str(text).map_err(|e| QgoError::Parse(format!("ground-truth JSON: {e}")))?;
        if gt.configs.is_empty() || gt.configs.iter().any(|c| c.len() != gt.n) {
            return Err(QgoError::Parse("ground-truth JSON has no or mis-sized configurations".into()));
        }
        Ok(gt)
    }
}

fn check_size(what: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(QgoError::InvalidSize(format!("{what} has {got} sites, problem has {n}")));
    }
    Ok(())
}

/// `-Σ_{i<j} J_ij s_i s_j`.
pub fn ising_energy(config: &SpinConfig, problem: &IsingProblem) -> Result<f64> {
    problem.energy(config)
}

/// Exhaustive search over all `2^n` configurations.
///
/// Energies are streamed in Gray-code order with local-field updates;
/// candidates near the running minimum are re-evaluated directly before the
/// tie tolerance is applied, so accumulated rounding cannot merge or split
/// levels.
pub fn ground_states(problem: &IsingProblem) -> Result<GroundTruth> {
    let n = problem.n();
    if n > MAX_ENUMERATION_SITES {
        return Err(QgoError::Capability(format!(
            "ground-state enumeration limited to n <= {MAX_ENUMERATION_SITES}, got {n}"
        )));
    }
    let dense = problem.dense();
    // Only configurations with site 0 up are visited; flips are added after.
    let mut spins = vec![1.0f64; n];
    let mut field: Vec<f64> = (0..n).map(|i| dense[i].iter().sum()).collect();
    let mut energy = -0.5 * field.iter().sum::<f64>();
    let screen = 1e-9 * (1.0 + energy.abs());
    let mut best = energy;
    let mut candidates: Vec<usize> = vec![0];
    let free = n - 1;
    for step in 1..(1usize << free) {
        // Gray code flips the lowest set bit of the step counter
        let bit = step.trailing_zeros() as usize;
        let site = n - 1 - bit;
        energy += 2.0 * spins[site] * field[site];
        let new = -spins[site];
        spins[site] = new;
        for (f, row) in field.iter_mut().zip(&dense) {
            *f += 2.0 * new * row[site];
        }
        if energy < best - screen {
            best = energy;
            candidates.clear();
        }
        if energy <= best + screen {
            let gray = step ^ (step >> 1);
            candidates.push(gray);
        }
    }

    let exact: Vec<(usize, f64)> = candidates
        .into_iter()
        .map(|z| {
            let c = SpinConfig::from_basis_index(n, z);
            (z, problem.energy(&c).expect("sized"))
        })
        .collect();
    let e0 = exact.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    let mut indices: Vec<usize> =
        exact.iter().filter(|(_, e)| *e - e0 <= TIE_TOL).flat_map(|(z, _)| [*z, *z ^ ((1usize << n) - 1)]).collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(GroundTruth {
        n,
        energy: e0,
        configs: indices.into_iter().map(|z| SpinConfig::from_basis_index(n, z)).collect(),
    })
}

/// `Σ_z |ψ_z|² E(z)`.
pub fn energy_expectation(state: &StateVector, problem: &IsingProblem) -> Result<f64> {
    check_size("state", state.n(), problem.n())?;
    Ok(state.amplitudes().iter().zip(problem.energy_diagonal()).map(|(a, e)| a.norm_sqr() * e).sum())
}

/// `|⟨target|ψ⟩|²`, or the summed projector overlap with the whole ground
/// space when no target is given.
pub fn fidelity(state: &StateVector, truth: &GroundTruth, target: Option<&SpinConfig>) -> Result<f64> {
    check_size("state", state.n(), truth.n)?;
    let amps = state.amplitudes();
    match target {
        Some(t) => {
            check_size("target", t.len(), truth.n)?;
            if !truth.contains(t) {
                return Err(QgoError::InvalidTarget(t.to_string()));
            }
            Ok(amps[t.basis_index()].norm_sqr())
        }
        None => Ok(truth.configs.iter().map(|c| amps[c.basis_index()].norm_sqr()).sum()),
    }
}

/// Ground-state probability mass of a classical distribution.
pub fn ground_mass(dist: &ClassicalDistribution, truth: &GroundTruth) -> Result<f64> {
    check_size("distribution", dist.n(), truth.n)?;
    let p = dist.probabilities();
    Ok(truth.configs.iter().map(|c| p[c.basis_index()]).sum())
}

/// True when `config` or its global flip is a ground state.
pub fn solution_success(config: &SpinConfig, truth: &GroundTruth) -> bool {
    config.len() == truth.n && (truth.contains(config) || truth.contains(&config.flipped()))
}

/// True only for an exact match with the designated target.
pub fn solution_exact(config: &SpinConfig, truth: &GroundTruth) -> bool {
    config == truth.designated_target()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ferro_problem, sk_problem};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: plain double loop over pairs for every index.
    fn naive_ground(problem: &IsingProblem) -> (f64, Vec<usize>) {
        let n = problem.n();
        let energies: Vec<f64> = (0..1usize << n)
            .map(|z| {
                let s: Vec<f64> = (0..n).map(|i| if z >> (n - 1 - i) & 1 == 0 { 1.0 } else { -1.0 }).collect();
                let mut e = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        e -= problem.coupling(i, j) * s[i] * s[j];
                    }
                }
                e
            })
            .collect();
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let idx = (0..energies.len()).filter(|z| energies[*z] - e0 <= TIE_TOL).collect();
        (e0, idx)
    }

    #[test]
    fn energy_examples() {
        let ferro = ferro_problem(3, 1.0).unwrap();
        assert!((ising_energy(&SpinConfig::all_up(3), &ferro).unwrap() + 1.5).abs() < 1e-15);
        let pair = IsingProblem::new(2, [(0, 1, -0.7)]).unwrap();
        let e = ising_energy(&SpinConfig::new(vec![1, -1]).unwrap(), &pair).unwrap();
        assert!((e + 0.7).abs() < 1e-15);
        assert!(ising_energy(&SpinConfig::all_up(4), &ferro).is_err());
    }

    #[test]
    fn ground_state_examples() {
        let gt = ground_states(&ferro_problem(3, 1.0).unwrap()).unwrap();
        assert!((gt.energy + 1.5).abs() < 1e-15);
        let shown: Vec<String> = gt.configs.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["+++", "---"]);
        let gt = ground_states(&IsingProblem::new(2, [(0, 1, -0.7)]).unwrap()).unwrap();
        assert!((gt.energy + 0.7).abs() < 1e-15);
        let shown: Vec<String> = gt.configs.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["+-", "-+"]);
        assert_eq!(gt.designated_target().to_string(), "+-");
    }

    #[test]
    fn single_site_and_free_spins() {
        let gt = ground_states(&IsingProblem::new(1, []).unwrap()).unwrap();
        assert_eq!(gt.configs.len(), 2);
        let gt = ground_states(&IsingProblem::new(3, []).unwrap()).unwrap();
        assert_eq!(gt.configs.len(), 8);
    }

    #[test]
    fn matches_naive_enumeration_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..50u64 {
            let n = rng.random_range(2..=10);
            let problem = sk_problem(n, 1000 + k).unwrap();
            let gt = ground_states(&problem).unwrap();
            let (e0, idx) = naive_ground(&problem);
            assert!((gt.energy - e0).abs() < 1e-12);
            let got: Vec<usize> = gt.configs.iter().map(|c| c.basis_index()).collect();
            assert_eq!(got, idx, "instance {k}");
        }
    }

    #[test]
    fn rejects_oversized_enumeration() {
        let problem = IsingProblem::new(25, []).unwrap();
        assert!(matches!(ground_states(&problem), Err(QgoError::Capability(_))));
    }

    #[test]
    fn expectation_examples() {
        let ferro = ferro_problem(3, 1.0).unwrap();
        let e = energy_expectation(&StateVector::basis(3, 0), &ferro).unwrap();
        assert!((e + 1.5).abs() < 1e-15);
        for seed in 0..5 {
            let sk = sk_problem(6, seed).unwrap();
            assert!(energy_expectation(&StateVector::plus_state(6), &sk).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_matches_sampling_estimate() {
        let problem = sk_problem(5, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let amps: Vec<Complex64> =
            (0..32).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let state = StateVector::new(5, amps.iter().map(|a| a / norm).collect()).unwrap();
        let exact = energy_expectation(&state, &problem).unwrap();
        let probs = state.probabilities();
        let shots = 400_000;
        let mut total = 0.0;
        let mut sq = 0.0;
        for _ in 0..shots {
            let mut u: f64 = rng.random();
            let mut z = 0;
            while z < 31 && u >= probs[z] {
                u -= probs[z];
                z += 1;
            }
            let e = ising_energy(&SpinConfig::from_basis_index(5, z), &problem).unwrap();
            total += e;
            sq += e * e;
        }
        let mean = total / shots as f64;
        let sd = ((sq / shots as f64 - mean * mean) / shots as f64).sqrt();
        assert!((mean - exact).abs() < 5.0 * sd, "{mean} vs {exact}");
    }

    #[test]
    fn fidelity_examples() {
        let ferro = ferro_problem(8, 1.0).unwrap();
        let gt = ground_states(&ferro).unwrap();
        assert_eq!(fidelity(&StateVector::basis(8, 255), &gt, None).unwrap(), 1.0);
        let plus = StateVector::plus_state(8);
        assert!((fidelity(&plus, &gt, None).unwrap() - 2.0 / 256.0).abs() < 1e-15);
        let up = SpinConfig::all_up(8);
        assert!((fidelity(&plus, &gt, Some(&up)).unwrap() - 1.0 / 256.0).abs() < 1e-15);
        let bad = SpinConfig::from_basis_index(8, 1);
        assert!(matches!(fidelity(&plus, &gt, Some(&bad)), Err(QgoError::InvalidTarget(_))));
    }

    #[test]
    fn success_examples() {
        let gt = ground_states(&ferro_problem(5, 1.0).unwrap()).unwrap();
        assert!(solution_success(&SpinConfig::all_up(5), &gt));
        assert!(solution_success(&SpinConfig::all_up(5).flipped(), &gt));
        assert!(!solution_success(&SpinConfig::from_basis_index(5, 1), &gt));
        assert!(solution_exact(&SpinConfig::all_up(5), &gt));
        assert!(!solution_exact(&SpinConfig::all_up(5).flipped(), &gt));
    }

    #[test]
    fn json_cache_round_trip() {
        let gt = ground_states(&sk_problem(7, 1).unwrap()).unwrap();
        assert_eq!(GroundTruth::from_json(&gt.to_json()).unwrap(), gt);
        assert!(GroundTruth::from_json("{\"n\":2,\"energy\":0.0,\"configs\":[]}").is_err());
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<Complex64> =
            (0..1usize << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::new(n, amps.iter().map(|a| a / norm).collect()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn energy_is_flip_invariant(n in 2usize..9, seed in 0u64..1000, z in 0usize..256) {
            let problem = sk_problem(n, seed).unwrap();
            let c = SpinConfig::from_basis_index(n, z % (1 << n));
            let a = ising_energy(&c, &problem).unwrap();
            let b = ising_energy(&c.flipped(), &problem).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn ground_space_is_closed_and_minimal(n in 2usize..9, seed in 0u64..1000) {
            let problem = sk_problem(n, seed).unwrap();
            let gt = ground_states(&problem).unwrap();
            prop_assert!(!gt.configs.is_empty());
            for c in &gt.configs {
                prop_assert!(gt.contains(&c.flipped()));
                prop_assert!((ising_energy(c, &problem).unwrap() - gt.energy).abs() <= TIE_TOL);
            }
        }

        #[test]
        fn fidelity_bounds_and_decomposition(n in 2usize..8, seed in 0u64..1000) {
            let problem = sk_problem(n, seed).unwrap();
            let gt = ground_states(&problem).unwrap();
            let state = random_state(n, seed);
            let total = fidelity(&state, &gt, None).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&total));
            let parts: f64 = gt.configs.iter().map(|c| fidelity(&state, &gt, Some(c)).unwrap()).sum();
            prop_assert!((total - parts).abs() < 1e-14);
            prop_assert!(energy_expectation(&state, &problem).unwrap() >= gt.energy - 1e-12);
        }
    }
}
