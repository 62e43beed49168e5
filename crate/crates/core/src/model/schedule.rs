use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QgoError, Result};

use super::CVector;

/// Amplitudes and duration of the annealing schedule
/// `A(t) = a t/τ`, `B(t) = b (1 - t/τ)`, `C_i(t) = c_i sin²(π t/τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    /// Magnitude assigned to every fixed y-field coefficient.
    pub c_amp: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self { a: 1.0, b: 0.539, tau: 1.0, c_amp: 1.565 }
    }
}

impl ScheduleParams {
    pub fn new(a: f64, b: f64, tau: f64, c_amp: f64) -> Result<Self> {
        let p = Self { a, b, tau, c_amp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.tau, self.c_amp].iter().all(|v| v.is_finite());
        if !finite || !(self.tau > 0.0) || !(self.a > 0.0) || self.b < 0.0 || self.c_amp < 0.0 {
            return Err(QgoError::InvalidArgument(format!(
                "schedule needs tau > 0, a > 0, b >= 0, c_amp >= 0; got {self:?}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn a_at(&self, t: f64) -> f64 {
        self.a * t / self.tau
    }

    #[inline]
    pub fn b_at(&self, t: f64) -> f64 {
        self.b * (1.0 - t / self.tau)
    }

    /// `sin²(π t/τ)`, the common envelope of every `C_i(t)`.
    #[inline]
    pub fn y_envelope(&self, t: f64) -> f64 {
        let s = (PI * t / self.tau).sin();
        s * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: Vec<f64>,
}

/// `A(t)`, `B(t)` and every `C_i(t)`. Any `t >= 0` is accepted so that
/// early-terminated and over-run anneals use the same formulas.
pub fn coefficients(t: f64, p: &ScheduleParams, c: &CVector) -> Coefficients {
    let env = p.y_envelope(t);
    Coefficients { a: p.a_at(t), b: p.b_at(t), c: c.values().iter().map(|ci| ci * env).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedCoefficients {
    /// Transverse field `B'_i = sqrt(B² + C_i²)`.
    pub b_prime: f64,
    /// Longitudinal field `C'_i = -θ̇_i / 2`.
    pub c_prime: f64,
}

/// Coefficients of site `i` after the z-rotation that removes the y-field.
///
/// At `t = τ` (with `b > 0`) both `θ̇` numerator and denominator vanish; the
/// right value there is the limit `c_i π² / (2 τ b)`.
pub fn rotated_coefficients(t: f64, p: &ScheduleParams, c_i: f64) -> RotatedCoefficients {
    let b = p.b_at(t);
    let c = c_i * p.y_envelope(t);
    RotatedCoefficients { b_prime: b.hypot(c), c_prime: -0.5 * theta_rate(t, p, c_i) }
}

/// `dθ_i/dt` for `θ_i = arctan(C_i / B)`.
pub(crate) fn theta_rate(t: f64, p: &ScheduleParams, c_i: f64) -> f64 {
    if c_i == 0.0 || p.b == 0.0 {
        return 0.0;
    }
    let tau = p.tau;
    // u = 1 - t/τ keeps the cancellation near t = τ well conditioned
    let u = 1.0 - t / tau;
    if u.abs() < 1e-12 {
        return -c_i * PI * PI / (tau * p.b);
    }
    let s1 = (PI * u).sin();
    let s2 = (2.0 * PI * u).sin();
    let num = p.b * c_i * (s1 * s1 - PI * u * s2);
    let den = tau * (p.b * p.b * u * u + c_i * c_i * s1.powi(4));
    num / den
}

/// Rotation angle `θ_i(t) = arctan(C_i(t) / B(t))`.
///
/// Where `B = C = 0` the analytic limit is returned: `0` at `t = τ` when
/// `b > 0` (since `C_i / B ~ c_i π² (1 - t/τ) / b`), and `±π/2` for every `t`
/// when `b = 0`.
pub fn rotation_angle(t: f64, p: &ScheduleParams, c_i: f64) -> f64 {
    if c_i == 0.0 {
        return 0.0;
    }
    if p.b == 0.0 {
        return 0.5 * PI * c_i.signum();
    }
    let b = p.b_at(t);
    if b == 0.0 {
        return 0.0;
    }
    (c_i * p.y_envelope(t) / b).atan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(b: f64, tau: f64) -> ScheduleParams {
        ScheduleParams::new(1.0, b, tau, 1.5).unwrap()
    }

    #[test]
    fn boundary_conditions() {
        let p = params(0.5, 2.0);
        let c = CVector::new(vec![1.5, -0.3]);
        let start = coefficients(0.0, &p, &c);
        assert_eq!((start.a, start.b), (0.0, 0.5));
        assert!(start.c.iter().all(|v| *v == 0.0));
        let end = coefficients(2.0, &p, &c);
        assert_eq!((end.a, end.b), (1.0, 0.0));
        assert!(end.c.iter().all(|v| v.abs() < 1e-30));
    }

    #[test]
    fn midpoint_values() {
        let p = params(0.5, 1.0);
        let k = coefficients(0.5, &p, &CVector::uniform(2, 1.5));
        assert_abs_diff_eq!(k.a, 0.5);
        assert_abs_diff_eq!(k.b, 0.25);
        assert_abs_diff_eq!(k.c[0], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn validation() {
        assert!(ScheduleParams::new(1.0, 0.5, 0.0, 1.0).is_err());
        assert!(ScheduleParams::new(0.0, 0.5, 1.0, 1.0).is_err());
        assert!(ScheduleParams::new(1.0, -0.1, 1.0, 1.0).is_err());
        assert!(ScheduleParams::new(1.0, 0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn rotated_endpoints() {
        let p = params(0.5, 1.0);
        let start = rotated_coefficients(0.0, &p, 1.5);
        assert_abs_diff_eq!(start.b_prime, 0.5);
        assert_abs_diff_eq!(start.c_prime, 0.0, epsilon = 1e-14);

        let end = rotated_coefficients(1.0, &p, 1.5);
        let limit = 1.5 * PI * PI / (2.0 * 0.5);
        assert_abs_diff_eq!(end.b_prime, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(end.c_prime, limit, epsilon = 1e-12);
        assert_abs_diff_eq!(limit, 14.804, epsilon = 1e-3);
        // the limit is approached from inside the interval
        let near = rotated_coefficients(1.0 - 1e-6, &p, 1.5);
        assert!((near.c_prime - limit).abs() / limit < 1e-4, "{}", near.c_prime);
    }

    #[test]
    fn c_prime_is_minus_half_theta_rate() {
        // central differences of θ(t) are the independent route
        let p = params(0.5, 1.3);
        for &c in &[1.5, -0.7] {
            for k in 1..50 {
                let t = 1.3 * k as f64 / 50.0;
                let h = 1e-6;
                let fd = (rotation_angle(t + h, &p, c) - rotation_angle(t - h, &p, c)) / (2.0 * h);
                let cp = rotated_coefficients(t, &p, c).c_prime;
                assert!((cp + 0.5 * fd).abs() < 1e-6 * (1.0 + fd.abs()), "t={t} {cp} {fd}");
            }
        }
    }

    #[test]
    fn b_prime_dominates_b_and_curves_are_non_monotonic() {
        let p = params(0.5, 1.0);
        let ts: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
        let rc: Vec<_> = ts.iter().map(|&t| rotated_coefficients(t, &p, 1.5)).collect();
        for (t, r) in ts.iter().zip(&rc) {
            assert!(r.b_prime >= p.b_at(*t));
            assert!(r.c_prime.is_finite());
        }
        let non_monotonic = |v: Vec<f64>| {
            let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
            d.iter().any(|x| *x > 1e-12) && d.iter().any(|x| *x < -1e-12)
        };
        assert!(non_monotonic(rc.iter().map(|r| r.b_prime).collect()));
        assert!(non_monotonic(rc.iter().map(|r| r.c_prime).collect()));
    }

    #[test]
    fn rotation_angle_values() {
        let p = params(0.5, 1.0);
        assert_eq!(rotation_angle(0.0, &p, 1.5), 0.0);
        assert_abs_diff_eq!(rotation_angle(0.5, &p, 1.5), 6f64.atan(), epsilon = 1e-12);
        assert_abs_diff_eq!(6f64.atan(), 1.4056, epsilon = 1e-4);
        assert_eq!(rotation_angle(0.3, &p, 0.0), 0.0);
        // continuous at the end point
        assert_eq!(rotation_angle(1.0, &p, 1.5), 0.0);
        assert!(rotation_angle(1.0 - 1e-9, &p, 1.5).abs() < 1e-7);
        let p0 = params(0.0, 1.0);
        assert_abs_diff_eq!(rotation_angle(0.4, &p0, -2.0), -0.5 * PI);
    }
}
