use std::path::Path;

use anyhow::{bail, Context, Result};
use qgo_core::dynamics::{IntegratorConfig, Method};
use serde::{Deserialize, Serialize};

use crate::args::Common;

/// Settings readable from a config file. Every field is optional; flags
/// override it and built-in defaults fill whatever is left. The resolved
/// values are written back in this shape into each manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
}

impl FileConfig {
    /// TOML, or JSON: either this shape or a manifest carrying it under `config`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut value: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            return serde_json::from_value(value).with_context(|| format!("config fields in {}", path.display()));
        }
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Flags layered over the config file.
pub struct Layers {
    pub common: Common,
    pub file: FileConfig,
    /// Values actually used, for the manifest.
    pub resolved: FileConfig,
}

impl Layers {
    pub fn new(common: Common) -> Result<Self> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Ok(Self { common, file, resolved: FileConfig::default() })
    }

    /// Resolves the integrator with `default_steps` RK4 steps per unit time.
    pub fn integrator(&mut self, default_steps: usize) -> Result<IntegratorConfig> {
        let method = self.common.method.clone().or(self.file.method.clone()).unwrap_or_else(|| "rk4".into());
        let steps = self.common.steps.or(self.file.steps).unwrap_or(default_steps);
        let tol = self.common.tol.or(self.file.tol).unwrap_or(IntegratorConfig::default().tol);
        let parsed: Method = method.parse()?;
        let cfg = IntegratorConfig { method: parsed, steps_per_unit: steps, tol, ..IntegratorConfig::default() };
        cfg.validate()?;
        self.resolved.method = Some(method);
        self.resolved.steps = Some(steps);
        if parsed == Method::Adaptive {
            self.resolved.tol = Some(tol);
        }
        Ok(cfg)
    }

    pub fn threads(&mut self) -> usize {
        let t = self
            .common
            .threads
            .or(self.file.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        self.resolved.threads = Some(t);
        t
    }

    pub fn seed(&mut self, default: u64) -> u64 {
        let s = self.common.seed.or(self.file.seed).unwrap_or(default);
        self.resolved.seed = Some(s);
        s
    }
}

/// `flag`, else the file value, else `default`; records the choice.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T, resolved: &mut Option<T>) -> T {
    let v = flag.or_else(|| file.clone()).unwrap_or(default);
    *resolved = Some(v.clone());
    v
}

/// Like [`pick`] without a default.
pub fn pick_opt<T: Clone>(flag: Option<T>, file: &Option<T>, resolved: &mut Option<T>) -> Option<T> {
    let v = flag.or_else(|| file.clone());
    resolved.clone_from(&v);
    v
}

/// `lo:hi:step`, `lo:hi` or a comma list.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let sizes: Vec<usize> = match parts.as_slice() {
        [single] => {
            single.split(',').map(|s| s.trim().parse().with_context(|| format!("size {s:?}"))).collect::<Result<_>>()?
        }
        [lo, hi] | [lo, hi, _] => {
            let step: usize = if parts.len() == 3 { parts[2].parse().context("size step")? } else { 1 };
            let (lo, hi): (usize, usize) = (lo.parse().context("size range")?, hi.parse().context("size range")?);
            if step == 0 || lo > hi {
                bail!("empty size range {text:?}");
            }
            (lo..=hi).step_by(step).collect()
        }
        _ => bail!("cannot read sizes {text:?}; use lo:hi:step or a comma list"),
    };
    if sizes.is_empty() {
        bail!("no sizes in {text:?}");
    }
    Ok(sizes)
}
