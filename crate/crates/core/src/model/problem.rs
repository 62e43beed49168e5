use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QgoError, Result};

use super::{site_bit, SpinConfig};

/// Ising problem `H^z = -Σ_{i<j} J_ij σ^z_i σ^z_j` without longitudinal fields.
///
/// Couplings are kept in an upper-triangular map keyed by `(i, j)` with
/// `i < j`; lookups through [`IsingProblem::coupling`] are symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    seed: Option<u64>,
    label: Option<String>,
}

/// On-disk instance format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl IsingProblem {
    /// Build from `(i, j, J_ij)` triples. Pairs may be given in either
    /// orientation, but each unordered pair at most once.
    pub fn new(n: usize, couplings: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(QgoError::InvalidSize("problem needs at least one site".into()));
        }
        if n > 32 {
            return Err(QgoError::InvalidSize(format!("n = {n} exceeds the supported 32 sites")));
        }
        let mut map = BTreeMap::new();
        for (i, j, value) in couplings {
            if i >= n || j >= n {
                return Err(QgoError::InvalidArgument(format!("coupling ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(QgoError::InvalidArgument(format!("self-coupling ({i}, {i})")));
            }
            if !value.is_finite() {
                return Err(QgoError::InvalidArgument(format!("coupling ({i}, {j}) is not finite")));
            }
            let key = (i.min(j), i.max(j));
            if map.insert(key, value).is_some() {
                return Err(QgoError::InvalidArgument(format!("duplicate coupling ({}, {})", key.0, key.1)));
            }
        }
        Ok(Self { n, couplings: map, seed: None, label: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    /// `(i, j, J_ij)` with `i < j`, in lexicographic order.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    /// True when every coupling vanishes, i.e. every configuration is optimal.
    pub fn is_trivial(&self) -> bool {
        self.couplings.values().all(|v| *v == 0.0)
    }

    /// Dense symmetric coupling matrix, zero diagonal.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.couplings() {
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }

    fn neighbours(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, j, v) in self.couplings() {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }

    pub fn energy(&self, config: &SpinConfig) -> Result<f64> {
        if config.len() != self.n {
            return Err(QgoError::InvalidSize(format!(
                "configuration has {} sites, problem has {}",
                config.len(),
                self.n
            )));
        }
        let s = config.signs();
        Ok(-self.couplings().map(|(i, j, v)| v * f64::from(s[i]) * f64::from(s[j])).sum::<f64>())
    }

    /// Diagonal of `H^z` over all `2^n` basis states.
    ///
    /// Built incrementally: each index differs from `index & (index - 1)`
    /// by one spin flip, so the whole table costs `O(n 2^n)`.
    pub fn energy_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let adj = self.neighbours();
        let mut diag = vec![0.0; 1 << n];
        diag[0] = -self.couplings.values().sum::<f64>();
        for z in 1..diag.len() {
            let bit = z.trailing_zeros() as usize;
            let site = n - 1 - bit;
            let parent = z & (z - 1);
            // site is +1 in `parent`; flipping it costs 2 Σ_j J_ij s_j
            let field: f64 =
                adj[site].iter().map(|&(j, v)| if (parent >> site_bit(n, j)) & 1 == 0 { v } else { -v }).sum();
            diag[z] = diag[parent] + 2.0 * field;
        }
        diag
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile { n: self.n, couplings: self.couplings().collect(), seed: self.seed, label: self.label.clone() }
    }

    pub fn from_file(file: ProblemFile) -> Result<Self> {
        let mut p = Self::new(file.n, file.couplings)?;
        p.seed = file.seed;
        p.label = file.label;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("problem file serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)
            .map_err(|e| QgoError::InvalidArgument(format!("malformed instance JSON: {e}")))?;
        Self::from_file(file)
    }
}

/// All-to-all ferromagnet with `J_ij = J / (n - 1)`.
pub fn ferro_problem(n: usize, j: f64) -> Result<IsingProblem> {
    if n < 2 {
        return Err(QgoError::InvalidSize(format!("ferromagnet needs n >= 2, got {n}")));
    }
    if !(j > 0.0) {
        return Err(QgoError::InvalidArgument(format!("ferromagnetic J must be > 0, got {j}")));
    }
    let value = j / (n - 1) as f64;
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k, value)));
    Ok(IsingProblem::new(n, pairs)?.with_label(format!("ferro-n{n}")))
}

/// Sherrington–Kirkpatrick instance: i.i.d. Gaussian couplings with mean 0
/// and variance `1 / (n - 1)`.
///
/// Generator: ChaCha8 seeded with `seed`, normals drawn by the ziggurat
/// sampler of `rand_distr::StandardNormal`, pairs visited in lexicographic
/// `(i, j)` order. The instance is a pure function of `(n, seed)`.
pub fn sk_problem(n: usize, seed: u64) -> Result<IsingProblem> {
    if n < 2 {
        return Err(QgoError::InvalidSize(format!("SK model needs n >= 2, got {n}")));
    }
    let sigma = (1.0 / (n - 1) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let x: f64 = rng.sample(StandardNormal);
            pairs.push((i, j, sigma * x));
        }
    }
    Ok(IsingProblem::new(n, pairs)?.with_seed(seed).with_label(format!("sk-n{n}-s{seed}")))
}
