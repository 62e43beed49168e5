use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QgoError, Result};

use super::{BenchRecord, Method};

pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Time to reach success probability `target` by repeating a run of length
/// `tau` with success probability `p`.
///
/// `p = 0` gives `+inf`; `p = 1` gives `tau` (one run always suffices).
pub fn tts(p: f64, tau: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(QgoError::InvalidArgument(format!("target probability must be in (0, 1), got {target}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(QgoError::InvalidArgument(format!("success probability must be in [0, 1], got {p}")));
    }
    if !(tau > 0.0) {
        return Err(QgoError::InvalidArgument(format!("annealing time must be > 0, got {tau}")));
    }
    Ok(if p == 0.0 {
        f64::INFINITY
    } else if p == 1.0 {
        tau
    } else {
        tau * (1.0 - target).ln() / (1.0 - p).ln()
    })
}

/// Annealing runs one greedy solve costs relative to a single anneal.
pub fn overhead_factor(method: Method, n: usize) -> Result<f64> {
    match method {
        Method::Qgo => Ok((n * (n + 3) / 2) as f64),
        Method::SingleShotQgo => Ok(n as f64),
        other => Err(QgoError::InvalidArgument(format!("no run-count overhead for {other}"))),
    }
}

/// [`tts`] of the record's success times [`overhead_factor`].
pub fn qgo_tts_adjusted(record: &BenchRecord, target: f64) -> Result<f64> {
    let factor = overhead_factor(record.method, record.n)?;
    Ok(tts(record.success, record.tau, target)? * factor)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of instance `k` of size `n` under `master`: nested splitmix64 over
/// the counters, so any instance can be generated on its own.
pub fn instance_seed(master: u64, n: usize, k: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n as u64) ^ k as u64)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Percentile bootstrap interval of the mean.
pub fn bootstrap_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(QgoError::InvalidArgument("bootstrap needs at least one sample".into()));
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(QgoError::InvalidArgument(format!("bootstrap with {resamples} resamples at level {level}")));
    }
    let m = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..m).map(|_| samples[rng.random_range(0..m)]).sum::<f64>() / m as f64).collect();
    means.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    let at = |q: f64| {
        let x = q * (resamples - 1) as f64;
        let (i, frac) = (x.floor() as usize, x - x.floor());
        let hi = means[(i + 1).min(resamples - 1)];
        means[i] + frac * (hi - means[i])
    };
    let (lo, hi) = (at(alpha), at(1.0 - alpha));
    // guard the containment of the mean against float noise in the sums
    let mu = mean(samples);
    Ok((lo.min(mu), hi.max(mu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::SuccessKind;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn tts_values() {
        assert!((tts(0.99, 1.0, 0.99).unwrap() - 1.0).abs() < 1e-12);
        assert!((tts(0.5, 1.0, 0.99).unwrap() - 6.643856189774724).abs() < 1e-12);
        assert_eq!(tts(1.0, 3.0, 0.99).unwrap(), 3.0);
        assert_eq!(tts(0.0, 3.0, 0.99).unwrap(), f64::INFINITY);
        assert!(tts(0.5, 1.0, 1.0).is_err());
        assert!(tts(0.5, 1.0, 0.0).is_err());
        assert!(tts(1.5, 1.0, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn tts_decreases_with_success(a in 0.001f64..0.999, b in 0.001f64..0.999, tau in 0.1f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(tts(lo, tau, 0.99).unwrap() > tts(hi, tau, 0.99).unwrap());
        }
    }

    fn record(method: Method, n: usize, success: f64) -> BenchRecord {
        BenchRecord {
            instance: 0,
            seed: 0,
            method,
            measure: None,
            n,
            tau: 1.0,
            success,
            success_kind: SuccessKind::Probability,
            success_exact: success,
            energy: 0.0,
            qa_calls: 0,
            wall_time: 0.0,
        }
    }

    #[test]
    fn overhead_factors() {
        let raw = tts(0.3, 1.0, 0.99).unwrap();
        assert!((qgo_tts_adjusted(&record(Method::Qgo, 8, 0.3), 0.99).unwrap() - 44.0 * raw).abs() < 1e-9);
        assert_eq!(overhead_factor(Method::Qgo, 4).unwrap(), 14.0);
        assert_eq!(overhead_factor(Method::SingleShotQgo, 8).unwrap(), 8.0);
        assert!(qgo_tts_adjusted(&record(Method::Qa, 8, 0.3), 0.99).is_err());
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let mut seen = std::collections::HashSet::new();
        for n in 2..20 {
            for k in 0..200 {
                assert!(seen.insert(instance_seed(7, n, k)));
            }
        }
        assert_eq!(instance_seed(7, 8, 3), instance_seed(7, 8, 3));
        assert_ne!(instance_seed(7, 8, 3), instance_seed(8, 8, 3));
    }

    #[test]
    fn constant_samples_give_point_interval() {
        assert_eq!(bootstrap_ci(&[0.25; 40], 500, 0.95, 1).unwrap(), (0.25, 0.25));
        assert!(bootstrap_ci(&[], 500, 0.95, 1).is_err());
    }

    proptest! {
        #[test]
        fn interval_contains_mean(x in proptest::collection::vec(0.0f64..1.0, 1..60), seed in 0u64..1000) {
            let (lo, hi) = bootstrap_ci(&x, 300, 0.95, seed).unwrap();
            let mu = mean(&x);
            prop_assert!(lo <= mu && mu <= hi);
            prop_assert_eq!((lo, hi), bootstrap_ci(&x, 300, 0.95, seed).unwrap());
        }
    }

    #[test]
    fn bernoulli_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let mut covered = 0;
        for t in 0..trials {
            let x: Vec<f64> = (0..100).map(|_| f64::from(u8::from(rng.random_bool(0.3)))).collect();
            let (lo, hi) = bootstrap_ci(&x, 2000, 0.95, t).unwrap();
            if lo <= 0.3 && 0.3 <= hi {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!((rate - 0.95).abs() <= 0.02, "coverage {rate}");
    }
}
