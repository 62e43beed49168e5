//! Single-qubit mean-field dynamics
//! `H = -s (g⟨σ^z⟩ + h) σ^z - b (1 - s) σ^x - c(t) σ^y`, `s = t/τ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QgoError, Result};

use super::integrator::{integrate, IntegratorConfig, OdeSystem};
use super::schrodinger::NORM_FAILURE_TOL;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl MeanFieldState {
    /// Ground state of `-σ^x`.
    pub fn plus() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { alpha: a, beta: a }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    pub fn magnetization(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    fn from_slice(y: &[f64]) -> Self {
        Self { alpha: Complex64::new(y[0], y[1]), beta: Complex64::new(y[2], y[3]) }
    }

    fn to_array(self) -> [f64; 4] {
        [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im]
    }

    fn check_norm(&self) -> Result<()> {
        let n = self.norm_sqr();
        if !n.is_finite() || (n.sqrt() - 1.0).abs() > NORM_FAILURE_TOL {
            return Err(QgoError::Integration(format!("mean-field norm {n}")));
        }
        Ok(())
    }
}

/// Schedule amplitudes and the longitudinal couplings `g` (self-interaction)
/// and `h` (external field). `g = 1, h = 0` is the plain mean-field model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldParams {
    pub b: f64,
    pub c: f64,
    pub tau: f64,
    pub g: f64,
    pub h: f64,
}

impl MeanFieldParams {
    pub fn new(b: f64, c: f64, tau: f64) -> Self {
        Self { b, c, tau, g: 1.0, h: 0.0 }
    }

    pub fn with_field(self, g: f64, h: f64) -> Self {
        Self { g, h, ..self }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.b, self.c, self.tau, self.g, self.h].iter().all(|v| v.is_finite());
        if !finite || !(self.tau > 0.0) {
            return Err(QgoError::InvalidArgument(format!("mean-field parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldSample {
    pub t: f64,
    pub state: MeanFieldState,
    pub magnetization: f64,
}

/// `H` as a 2×2 matrix for a given magnetisation `m`.
pub fn meanfield_hamiltonian(t: f64, p: &MeanFieldParams, m: f64) -> [[Complex64; 2]; 2] {
    let s = t / p.tau;
    let hz = s * (p.g * m + p.h);
    let hx = p.b * (1.0 - s);
    let hy = p.c * (PI * s).sin().powi(2);
    // -hz σ^z - hx σ^x - hy σ^y
    [[Complex64::new(-hz, 0.0), Complex64::new(-hx, hy)], [Complex64::new(-hx, -hy), Complex64::new(hz, 0.0)]]
}

/// Time derivative of `(α, β)` written out as the 2×2 linear system with
/// `⟨σ^z⟩ = |α|² - |β|²` taken from the state itself.
pub fn meanfield_rhs(t: f64, p: &MeanFieldParams, psi: &MeanFieldState) -> MeanFieldState {
    let s = t / p.tau;
    let m = psi.magnetization();
    let z = s * (p.g * m + p.h);
    let x = p.b * (1.0 - s);
    let y = p.c * (PI * s).sin().powi(2);
    MeanFieldState {
        alpha: I * z * psi.alpha + (I * x + y) * psi.beta,
        beta: (I * x - y) * psi.alpha - I * z * psi.beta,
    }
}

struct MeanField {
    p: MeanFieldParams,
}

impl OdeSystem for MeanField {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let d = meanfield_rhs(t, &self.p, &MeanFieldState::from_slice(y));
        dy.copy_from_slice(&d.to_array());
    }
}

/// Integrates from `|+⟩`; samples follow the integrator stride.
pub fn evolve_meanfield(p: &MeanFieldParams, cfg: &IntegratorConfig) -> Result<Vec<MeanFieldSample>> {
    p.validate()?;
    cfg.validate()?;
    let mut y = MeanFieldState::plus().to_array();
    let mut samples = Vec::new();
    integrate(&mut MeanField { p: *p }, &mut y, 0.0, p.tau, cfg, |t, y| {
        let state = MeanFieldState::from_slice(y);
        samples.push(MeanFieldSample { t, state, magnetization: state.magnetization() });
    })?;
    MeanFieldState::from_slice(&y).check_norm()?;
    Ok(samples)
}

/// `⟨σ^z(τ)⟩` without keeping the trajectory.
pub fn final_magnetization(p: &MeanFieldParams, cfg: &IntegratorConfig) -> Result<f64> {
    p.validate()?;
    cfg.validate()?;
    let mut y = MeanFieldState::plus().to_array();
    integrate(&mut MeanField { p: *p }, &mut y, 0.0, p.tau, cfg, |_, _| {})?;
    let out = MeanFieldState::from_slice(&y);
    out.check_norm()?;
    Ok(out.magnetization())
}

/// Orientation of the counterdiabatic y-field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CdSign {
    /// `c = -φ̇/2` with `φ` the polar angle of the field `(h_x, h_z)`;
    /// cancels the diabatic term for `H = -h_z σ^z - h_x σ^x - c σ^y`.
    #[default]
    Tracking,
    Opposite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCdConfig {
    pub sign: CdSign,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ExactCdConfig {
    fn default() -> Self {
        Self { sign: CdSign::Tracking, max_iter: 100_000, tol: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactCdSample {
    pub t: f64,
    pub magnetization: f64,
    pub c_exact: f64,
    /// `|⟨gs(t)|ψ(t)⟩|²` against the instantaneous self-consistent ground state.
    pub ground_fidelity: f64,
    /// Magnetisation of that ground state.
    pub ground_magnetization: f64,
}

/// Self-consistent ground-state field and the resulting y-field at one time.
#[derive(Debug, Clone, Copy)]
struct CdPoint {
    m: f64,
    hx: f64,
    hz: f64,
    c: f64,
}

struct ExactCd {
    p: MeanFieldParams,
    cd: ExactCdConfig,
    m_seed: f64,
    failure: Option<QgoError>,
}

impl ExactCd {
    /// Ground-state magnetisation solves `m = s(gm + h) / R`,
    /// `R = sqrt(s²(gm + h)² + b²(1 - s)²)`.
    fn point(&mut self, t: f64) -> Result<CdPoint> {
        let MeanFieldParams { b, tau, g, h, .. } = self.p;
        let s = t / tau;
        let radius = |m: f64| ((s * (g * m + h)).powi(2) + (b * (1.0 - s)).powi(2)).sqrt();
        let mut m = self.m_seed;
        let mut converged = false;
        for _ in 0..self.cd.max_iter {
            let r = radius(m);
            let next = if r == 0.0 { m } else { s * (g * m + h) / r };
            let done = (next - m).abs() <= self.cd.tol;
            m = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(QgoError::Convergence(format!(
                "self-consistent magnetisation at t = {t} after {} iterations",
                self.cd.max_iter
            )));
        }
        self.m_seed = m;

        let u = g * m + h;
        let r = radius(m);
        let (hx, hz) = (b * (1.0 - s), s * u);
        // implicit differentiation of F(m, s) = m R - s u
        let r_m = s * s * u * g / r;
        let r_s = (s * u * u - b * b * (1.0 - s)) / r;
        let f_m = r + m * r_m - s * g;
        let f_s = m * r_s - u;
        let dm_ds = if f_m == 0.0 { 0.0 } else { -f_s / f_m };
        let hx_dot = -b / tau;
        let hz_dot = (u + s * g * dm_ds) / tau;
        let phi_dot = (hx_dot * hz - hx * hz_dot) / (hx * hx + hz * hz);
        let c = match self.cd.sign {
            CdSign::Tracking => -0.5 * phi_dot,
            CdSign::Opposite => 0.5 * phi_dot,
        };
        Ok(CdPoint { m, hx, hz, c })
    }
}

impl OdeSystem for ExactCd {
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let c = match self.point(t) {
            Ok(pt) => pt.c,
            Err(e) => {
                self.failure.get_or_insert(e);
                0.0
            }
        };
        let p = self.p;
        let psi = MeanFieldState::from_slice(y);
        let s = t / p.tau;
        let z = s * (p.g * psi.magnetization() + p.h);
        let x = p.b * (1.0 - s);
        let d = MeanFieldState {
            alpha: I * z * psi.alpha + (I * x + c) * psi.beta,
            beta: (I * x - c) * psi.alpha - I * z * psi.beta,
        };
        dy.copy_from_slice(&d.to_array());
    }
}

/// Mean-field dynamics driven by the exact two-level counterdiabatic
/// y-field of the self-consistent ground state. Requires `b > 0` and
/// `h != 0`.
pub fn exact_cd_meanfield(
    g: f64,
    h: f64,
    b: f64,
    tau: f64,
    cfg: &IntegratorConfig,
    cd: &ExactCdConfig,
) -> Result<Vec<ExactCdSample>> {
    if h == 0.0 {
        return Err(QgoError::InvalidArgument("exact counterdiabatic driving needs h != 0".into()));
    }
    if !(b > 0.0) {
        return Err(QgoError::InvalidArgument(format!("exact counterdiabatic driving needs b > 0, got {b}")));
    }
    let p = MeanFieldParams { b, c: 0.0, tau, g, h };
    p.validate()?;
    cfg.validate()?;
    let mut sys = ExactCd { p, cd: *cd, m_seed: 0.0, failure: None };
    let mut y = MeanFieldState::plus().to_array();
    let mut raw = Vec::new();
    integrate(&mut sys, &mut y, 0.0, tau, cfg, |t, y| raw.push((t, MeanFieldState::from_slice(y))))?;
    if let Some(e) = sys.failure.take() {
        return Err(e);
    }
    MeanFieldState::from_slice(&y).check_norm()?;

    let mut probe = ExactCd { p, cd: *cd, m_seed: 0.0, failure: None };
    raw.into_iter()
        .map(|(t, state)| {
            let pt = probe.point(t)?;
            let phi = pt.hx.atan2(pt.hz);
            let gs = [(0.5 * phi).cos(), (0.5 * phi).sin()];
            let overlap = state.alpha.conj() * gs[0] + state.beta.conj() * gs[1];
            Ok(ExactCdSample {
                t,
                magnetization: state.magnetization(),
                c_exact: pt.c,
                ground_fidelity: overlap.norm_sqr(),
                ground_magnetization: pt.m,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn calibrated_point_polarises_fully() {
        let traj = evolve_meanfield(&MeanFieldParams::new(0.539, 1.565, 1.0), &cfg()).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert!(last.magnetization >= 0.999, "{}", last.magnetization);
        for s in &traj {
            assert!((s.state.norm_sqr() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn very_short_anneal_leaves_equator() {
        let m = final_magnetization(&MeanFieldParams::new(0.7, 0.0, 1e-3), &cfg()).unwrap();
        assert!(m.abs() < 1e-6, "{m}");
    }

    #[test]
    fn no_transverse_fields_keeps_zero_magnetisation() {
        let traj = evolve_meanfield(&MeanFieldParams::new(0.0, 0.0, 1.0), &cfg()).unwrap();
        assert!(traj.iter().all(|s| s.magnetization.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn rhs_equals_minus_i_h_psi(
            ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0,
            t in 0.0f64..1.0, b in 0.0f64..2.0, c in -2.0f64..2.0, g in -1.0f64..2.0, h in -1.0f64..1.0,
        ) {
            let norm = (ar * ar + ai * ai + br * br + bi * bi).sqrt();
            prop_assume!(norm > 1e-3);
            let psi = MeanFieldState {
                alpha: Complex64::new(ar, ai) / norm,
                beta: Complex64::new(br, bi) / norm,
            };
            let p = MeanFieldParams { b, c, tau: 1.0, g, h };
            let hm = meanfield_hamiltonian(t, &p, psi.magnetization());
            let rhs = meanfield_rhs(t, &p, &psi);
            let ha = hm[0][0] * psi.alpha + hm[0][1] * psi.beta;
            let hb = hm[1][0] * psi.alpha + hm[1][1] * psi.beta;
            prop_assert!((rhs.alpha - (-I) * ha).norm() < 1e-12);
            prop_assert!((rhs.beta - (-I) * hb).norm() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let hm = meanfield_hamiltonian(0.3, &MeanFieldParams::new(0.5, 1.5, 1.0), 0.2);
        assert_eq!(hm[0][1], hm[1][0].conj());
    }

    #[test]
    fn exact_cd_initial_amplitude() {
        let traj = exact_cd_meanfield(0.0, 1.0, 0.5, 1.0, &cfg(), &ExactCdConfig::default()).unwrap();
        assert_eq!(traj[0].t, 0.0);
        assert!((traj[0].c_exact.abs() - 1.0).abs() < 1e-6, "{}", traj[0].c_exact);
        // positive y-field pushes towards spin up, as for the fixed amplitude
        assert!(traj[0].c_exact > 0.0);
    }

    #[test]
    fn exact_cd_tracks_ground_state() {
        let traj = exact_cd_meanfield(0.0, 1.0, 0.5, 1.0, &cfg(), &ExactCdConfig::default()).unwrap();
        let worst = traj.iter().map(|s| s.ground_fidelity).fold(1.0, f64::min);
        assert!(worst >= 1.0 - 1e-4, "{worst}");
    }

    #[test]
    fn opposite_sign_loses_the_ground_state() {
        let cd = ExactCdConfig { sign: CdSign::Opposite, ..Default::default() };
        let traj = exact_cd_meanfield(0.0, 1.0, 0.5, 1.0, &cfg(), &cd).unwrap();
        let worst = traj.iter().map(|s| s.ground_fidelity).fold(1.0, f64::min);
        assert!(worst < 0.9, "{worst}");
    }

    #[test]
    fn exact_cd_final_magnetisation() {
        for &(g, h) in &[(0.0, 1.0), (1.0, 0.01), (1.0, 0.1), (1.0, 0.3), (1.0, 1.0)] {
            let traj = exact_cd_meanfield(g, h, 0.5, 1.0, &cfg(), &ExactCdConfig::default()).unwrap();
            let m = traj.last().unwrap().magnetization;
            assert!(m >= 0.999, "(g, h) = ({g}, {h}): {m}");
        }
    }

    #[test]
    fn exact_cd_rejects_degenerate_field() {
        assert!(exact_cd_meanfield(1.0, 0.0, 0.5, 1.0, &cfg(), &ExactCdConfig::default()).is_err());
    }

    #[test]
    fn exact_cd_reports_iteration_cap() {
        let cd = ExactCdConfig { max_iter: 1, ..Default::default() };
        let err = exact_cd_meanfield(1.0, 0.1, 0.5, 1.0, &cfg(), &cd);
        assert!(matches!(err, Err(QgoError::Convergence(_))));
    }
}
