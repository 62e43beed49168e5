use num_complex::Complex64;

use crate::error::{QgoError, Result};
use crate::model::spin_of;

/// Pure state of `n` qubits over the `2^n` computational basis
/// (site 0 most significant, clear bit = spin up).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(QgoError::InvalidSize(format!("{} amplitudes for {n} qubits", amps.len())));
        }
        Ok(Self { n, amps })
    }

    /// `|+…+⟩`, the ground state of `H^x = -Σ σ^x_i`.
    pub fn plus_state(n: usize) -> Self {
        let dim = 1 << n;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self { n, amps: vec![a; dim] }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn overlap_sqr(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `⟨σ^z_site⟩`.
    pub fn magnetization(&self, site: usize) -> f64 {
        self.amps.iter().enumerate().map(|(z, a)| spin_of(self.n, z, site) * a.norm_sqr()).sum()
    }

    pub(crate) fn from_split(n: usize, y: &[f64]) -> Self {
        let dim = 1 << n;
        let (re, im) = y.split_at(dim);
        Self { n, amps: re.iter().zip(im).map(|(r, i)| Complex64::new(*r, *i)).collect() }
    }

    pub(crate) fn to_split(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.dim());
        y.extend(self.amps.iter().map(|a| a.re));
        y.extend(self.amps.iter().map(|a| a.im));
        y
    }

    /// Fails on non-finite amplitudes or a norm off by more than `tol`.
    pub(crate) fn check_norm(&self, tol: f64) -> Result<()> {
        if self.amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QgoError::Integration("non-finite amplitude".into()));
        }
        let drift = (self.norm() - 1.0).abs();
        if drift > tol {
            return Err(QgoError::Integration(format!("norm drifted by {drift:e}")));
        }
        Ok(())
    }
}
