use rayon::prelude::*;

use crate::error::{QgoError, Result};
use crate::model::{CVector, IsingProblem, SpinConfig};

use super::{GradientRule, QaMeasure, QgoConfig, QgoStep, QgoTrace, ZERO_GRADIENT_TOL};

/// Finite-difference slopes at `c` for each of `sites`, given `f(c)`.
/// Probes run concurrently; results come back in site order.
fn probe_gradients(
    measure: &QaMeasure,
    c: &CVector,
    base: f64,
    sites: &[usize],
    rule: GradientRule,
    delta: f64,
) -> Result<Vec<(usize, f64)>> {
    let widths = rule.widths(delta);
    let jobs: Vec<(usize, f64)> = sites.iter().flat_map(|&s| widths.iter().map(move |&w| (s, w))).collect();
    let slopes: Vec<f64> =
        jobs.par_iter().map(|&(site, w)| Ok((measure.value(&c.probed(site, w))? - base) / w)).collect::<Result<_>>()?;
    Ok(sites
        .iter()
        .zip(slopes.chunks(widths.len()))
        .map(|(&site, s)| (site, s.iter().sum::<f64>() / s.len() as f64))
        .collect())
}

/// Gradient over the unfixed sites (`c_j == 0`) of `f(b, c)`.
pub fn gradient_vector(problem: &IsingProblem, b: f64, c: &CVector, cfg: &QgoConfig) -> Result<Vec<(usize, f64)>> {
    let mut cfg = *cfg;
    cfg.schedule.b = b;
    let measure = QaMeasure::new(problem, &cfg)?;
    check_len(c, measure.n())?;
    let base = measure.value(c)?;
    let free: Vec<usize> = (0..c.len()).filter(|&i| !c.is_fixed(i)).collect();
    probe_gradients(&measure, c, base, &free, cfg.gradient, cfg.delta)
}

fn check_len(c: &CVector, n: usize) -> Result<()> {
    if c.len() != n {
        return Err(QgoError::InvalidSize(format!("{} coefficients for {n} sites", c.len())));
    }
    Ok(())
}

fn sign_against(g: f64) -> i8 {
    if g > 0.0 {
        -1
    } else {
        1
    }
}

/// Site with the largest `|g|`, lowest index on ties.
fn select(gradients: &[(usize, f64)]) -> Result<(usize, f64)> {
    let mut best = gradients[0];
    for &(site, g) in &gradients[1..] {
        if g.abs() > best.1.abs() {
            best = (site, g);
        }
    }
    if best.1.abs() < ZERO_GRADIENT_TOL {
        return Err(QgoError::Ambiguity(
            "every candidate gradient vanishes; all remaining signs are equivalent".into(),
        ));
    }
    Ok(best)
}

/// Sequential greedy sign assignment over a prepared measure.
pub fn run_sequential(measure: &QaMeasure, cfg: &QgoConfig) -> Result<(SpinConfig, QgoTrace)> {
    cfg.validate()?;
    let n = measure.n();
    let per_probe = cfg.gradient.widths(cfg.delta).len();
    let mut c = CVector::zeros(n);
    let mut calls = 0;
    let mut base = measure.value(&c)?;
    calls += 1;
    let mut steps = Vec::with_capacity(n);
    for iteration in 0..n {
        let free: Vec<usize> = (0..n).filter(|&i| !c.is_fixed(i)).collect();
        let gradients = probe_gradients(measure, &c, base, &free, cfg.gradient, cfg.delta)?;
        calls += free.len() * per_probe;
        let (site, g) = select(&gradients)?;
        let sign = sign_against(g);
        c.set(site, f64::from(sign) * cfg.c_opt());
        // the next iteration's base point; after the last one it is only reported
        base = measure.value(&c)?;
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
    let config = c.signs()?;
    Ok((config, QgoTrace { steps, qa_calls: calls, coefficients: c }))
}

/// Sequential QGO: `n(n+3)/2` anneals with the forward rule.
pub fn sequential_qgo(problem: &IsingProblem, cfg: &QgoConfig) -> Result<(SpinConfig, QgoTrace)> {
    run_sequential(&QaMeasure::new(problem, cfg)?, cfg)
}

/// Single-shot assignment over a prepared measure. Site 0 is fixed to
/// `+c_opt`; every other sign comes from one gradient at that point.
pub fn run_single_shot(measure: &QaMeasure, cfg: &QgoConfig) -> Result<(SpinConfig, QgoTrace)> {
    cfg.validate()?;
    let n = measure.n();
    let per_probe = cfg.gradient.widths(cfg.delta).len();
    let mut c = CVector::zeros(n);
    c.set(0, cfg.c_opt());
    let base = measure.value(&c)?;
    let free: Vec<usize> = (1..n).collect();
    let gradients = probe_gradients(measure, &c, base, &free, cfg.gradient, cfg.delta)?;
    let calls = 1 + free.len() * per_probe;
    if !gradients.is_empty() {
        select(&gradients)?;
    }
    let mut assigned = vec![(0, 1)];
    for &(site, g) in &gradients {
        let sign = if g.abs() < ZERO_GRADIENT_TOL {
            log::warn!("site {site} has a vanishing gradient; assigning +1");
            1
        } else {
            sign_against(g)
        };
        c.set(site, f64::from(sign) * cfg.c_opt());
        assigned.push((site, sign));
    }
    let measure_value = measure.value(&c)?;
    let step = QgoStep { iteration: 0, gradients, assigned, measure_value, qa_calls: calls };
    Ok((c.signs()?, QgoTrace { steps: vec![step], qa_calls: calls, coefficients: c }))
}

/// Single-shot QGO: `n` anneals with the forward rule.
pub fn single_shot_qgo(problem: &IsingProblem, cfg: &QgoConfig) -> Result<(SpinConfig, QgoTrace)> {
    run_single_shot(&QaMeasure::new(problem, cfg)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntegratorConfig;
    use crate::measures::{ground_states, solution_success};
    use crate::model::{ferro_problem, sk_problem, ScheduleParams};
    use crate::qgo::{measure_value, Measure};

    fn cfg(measure: Measure) -> QgoConfig {
        QgoConfig {
            measure,
            schedule: ScheduleParams::new(1.0, 0.539, 1.0, 1.563).unwrap(),
            integrator: IntegratorConfig::rk4(250),
            ..Default::default()
        }
    }

    #[test]
    fn ferro_gradients_at_origin_are_equal_and_same_signed() {
        let problem = ferro_problem(6, 1.0).unwrap();
        let g = gradient_vector(&problem, 0.539, &CVector::zeros(6), &cfg(Measure::Energy)).unwrap();
        assert_eq!(g.len(), 6);
        for &(_, v) in &g {
            assert!((v - g[0].1).abs() < 1e-9);
        }
        assert!(g.iter().all(|(_, v)| v.signum() == g[0].1.signum() && *v != 0.0));
    }

    #[test]
    fn fixed_sites_are_not_probed() {
        let problem = sk_problem(5, 3).unwrap();
        let mut c = CVector::zeros(5);
        c.set(2, -1.563);
        let g = gradient_vector(&problem, 0.539, &c, &cfg(Measure::Energy)).unwrap();
        let sites: Vec<usize> = g.iter().map(|(s, _)| *s).collect();
        assert_eq!(sites, [0, 1, 3, 4]);
    }

    #[test]
    fn forward_signs_match_finer_central_differences() {
        let problem = sk_problem(8, 21).unwrap();
        let config = cfg(Measure::Energy);
        let mut c = CVector::zeros(8);
        c.set(3, 1.563);
        let g = gradient_vector(&problem, 0.539, &c, &config).unwrap();
        let measure = QaMeasure::new(&problem, &config).unwrap();
        let h = 0.01;
        for &(site, gj) in &g {
            let fp = measure.value(&c.probed(site, 0.5 * h)).unwrap();
            let fm = measure.value(&c.probed(site, -0.5 * h)).unwrap();
            let central = (fp - fm) / h;
            assert_eq!(gj.signum(), central.signum(), "site {site}: {gj} vs {central}");
        }
    }

    #[test]
    fn energy_measure_is_even_in_c() {
        let problem = sk_problem(6, 5).unwrap();
        let c = CVector::new(vec![1.563, -1.563, 0.0, 1.563, 0.0, -1.563]);
        let neg = CVector::new(c.values().iter().map(|v| -v).collect());
        let config = cfg(Measure::Energy);
        let a = measure_value(&problem, 0.539, &c, &config).unwrap();
        let b = measure_value(&problem, 0.539, &neg, &config).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn ferro_sequential_returns_uniform_signs_with_44_calls() {
        let problem = ferro_problem(8, 1.0).unwrap();
        let (config, trace) = sequential_qgo(&problem, &cfg(Measure::Energy)).unwrap();
        assert!(config.is_uniform(), "{config}");
        assert_eq!(trace.qa_calls, 44);
        assert_eq!(trace.steps.len(), 8);
        assert!(trace.coefficients.values().iter().all(|v| v.abs() == 1.563));
    }

    #[test]
    fn subroutine_count_is_quadratic() {
        for n in 2..7 {
            let problem = sk_problem(n, n as u64).unwrap();
            let (_, trace) = sequential_qgo(&problem, &cfg(Measure::Energy)).unwrap();
            assert_eq!(trace.qa_calls, n * (n + 3) / 2);
            assert_eq!(trace.steps.last().unwrap().qa_calls, n * (n + 3) / 2);
        }
    }

    #[test]
    fn average_rule_costs_three_probes() {
        let problem = sk_problem(4, 1).unwrap();
        let config = QgoConfig { gradient: GradientRule::Average3, ..cfg(Measure::Energy) };
        let (_, trace) = sequential_qgo(&problem, &config).unwrap();
        assert_eq!(trace.qa_calls, 4 + 3 * (4 + 3 + 2 + 1));
    }

    #[test]
    fn decoupled_problem_is_ambiguous() {
        let problem = IsingProblem::new(3, []).unwrap();
        let err = sequential_qgo(&problem, &cfg(Measure::Energy));
        assert!(matches!(err, Err(QgoError::Ambiguity(_))));
    }

    #[test]
    fn single_shot_fidelity_on_small_ferro_returns_all_up() {
        let problem = ferro_problem(4, 1.0).unwrap();
        let (config, trace) = single_shot_qgo(&problem, &cfg(Measure::Fidelity)).unwrap();
        assert_eq!(config, SpinConfig::all_up(4));
        assert_eq!(trace.qa_calls, 4);
        let truth = ground_states(&problem).unwrap();
        assert!(solution_success(&config, &truth));
    }

    #[test]
    fn sequential_is_deterministic() {
        let problem = sk_problem(6, 77).unwrap();
        let a = sequential_qgo(&problem, &cfg(Measure::Fidelity)).unwrap();
        let b = sequential_qgo(&problem, &cfg(Measure::Fidelity)).unwrap();
        assert_eq!(a, b);
    }
}
