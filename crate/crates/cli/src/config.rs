//! TOML configuration files for `fit` and `simulate`. Every key is optional;
//! command-line flags take precedence over file values.

use std::path::Path;

use anyhow::{Context, Result};
use corrmat::irt::FitConfig;
use serde::Deserialize;

pub const SEED_ENV: &str = "CORRMAT_SEED";

pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFile {
    pub max_outer_iterations: Option<usize>,
    pub ll_tolerance: Option<f64>,
    pub param_tolerance: Option<f64>,
    pub logit_bound: Option<f64>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub max_halvings: Option<usize>,
}

impl FitFile {
    pub fn apply(&self, config: &mut FitConfig) {
        let d = config;
        if let Some(v) = self.max_outer_iterations {
            d.max_outer_iterations = v;
        }
        if let Some(v) = self.ll_tolerance {
            d.ll_tolerance = v;
        }
        if let Some(v) = self.param_tolerance {
            d.param_tolerance = v;
        }
        if let Some(v) = self.logit_bound {
            d.logit_bound = v;
        }
        if let Some(v) = self.d_min {
            d.d_min = v;
        }
        if let Some(v) = self.d_max {
            d.d_max = v;
        }
        if let Some(v) = self.max_halvings {
            d.max_halvings = v;
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OptionCounts {
    Uniform(u32),
    PerItem(Vec<u32>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub options: Option<OptionCounts>,
    pub guess_rate: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    /// `rasch` or `2pl-item`.
    pub model: Option<String>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub theta_mean: Option<f64>,
    pub theta_sd: Option<f64>,
    pub delta_mean: Option<f64>,
    pub delta_sd: Option<f64>,
    pub fit_irt: Option<bool>,
}

/// Flag, then file, then environment.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}
