use serde::{Deserialize, Serialize};

use crate::error::{QgoError, Result};

use super::site_bit;

/// Classical spin configuration with entries in `{+1, -1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(QgoError::InvalidSize("empty spin configuration".into()));
        }
        if let Some(bad) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(QgoError::InvalidArgument(format!("spin entries must be +1 or -1, got {bad}")));
        }
        Ok(Self(signs))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Decode a basis index (site 0 = most significant bit, clear bit = +1).
    pub fn from_basis_index(n: usize, index: usize) -> Self {
        Self((0..n).map(|i| if (index >> site_bit(n, i)) & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn basis_index(&self) -> usize {
        let n = self.0.len();
        self.0.iter().enumerate().filter(|(_, s)| **s < 0).fold(0, |acc, (i, _)| acc | (1 << site_bit(n, i)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn is_uniform(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = QgoError;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(s: SpinConfig) -> Self {
        s.0
    }
}

impl std::fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Per-site y-field coefficients `c_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVector(Vec<f64>);

impl CVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn uniform(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn from_signs(signs: &SpinConfig, amplitude: f64) -> Self {
        Self(signs.signs().iter().map(|s| f64::from(*s) * amplitude).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.0[i] = value;
    }

    /// Copy with `delta` added to site `i`.
    pub fn probed(&self, i: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.0[i] += delta;
        out
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.0[i] != 0.0
    }

    /// `sgn c`; fails if any entry is still zero.
    pub fn signs(&self) -> Result<SpinConfig> {
        if self.0.contains(&0.0) {
            return Err(QgoError::InvalidArgument("cannot take the sign of an unfixed (zero) coefficient".into()));
        }
        Ok(SpinConfig(self.0.iter().map(|c| if *c > 0.0 { 1 } else { -1 }).collect()))
    }
}
