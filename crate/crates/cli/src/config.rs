//! Run configuration: the versioned defaults, an optional JSON file on top,
//! then command-line flags on top of both.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// The defaults shipped with this version.
pub const DEFAULTS_JSON: &str = include_str!("../defaults.json");
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub m1: i64,
    pub m2: i64,
    pub kernel_table: KernelTableConfig,
    pub abel: AbelConfig,
    pub lorentz: LorentzConfig,
    pub trilinear: TrilinearConfig,
    pub verify: VerifyConfig,
    pub maximal: MaximalConfig,
    pub weak_type: WeakTypeConfig,
    pub covering: CoveringConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTableConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
    /// Rows need `t ≥ |s| + band`.
    pub band: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbelConfig {
    pub intervals: Vec<(f64, f64)>,
    pub s_min: f64,
    pub s_max: f64,
    pub n_s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzConfig {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrilinearConfig {
    pub r_f: f64,
    pub r_g: f64,
    pub r_h: f64,
    pub samples: u64,
}

/// Case counts of the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub kernel_step: f64,
    pub kappa_samples: u64,
    pub abel_random: usize,
    pub rearrange_cases: usize,
    pub row_embedding_cases: usize,
    pub chain_models: usize,
    pub endpoint_samples: u64,
    pub probe_samples: u64,
    pub probe_radius: f64,
    pub probe_layers: usize,
    pub theorem8_models: usize,
    pub maximal_fields: usize,
    pub covering_families: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalConfig {
    pub v_half: f64,
    pub s_half: f64,
    pub n_v: usize,
    pub n_s: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub fields: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakTypeConfig {
    /// `separation` or `shells`.
    pub family: String,
    pub counts: Vec<usize>,
    pub min_distance: f64,
    pub r_max: f64,
    pub dv: f64,
    pub n_s: usize,
    pub max_shells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub balls_min: usize,
    pub balls_max: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub v_half: f64,
    pub s_half: f64,
    pub n_v: usize,
    pub n_s: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULTS_JSON).expect("the shipped defaults parse")
    }
}

impl RunConfig {
    /// The defaults overlaid with a JSON file. The file may set any subset
    /// of fields, at any depth.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_overlay(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_overlay(text: &str) -> Result<Self, String> {
        let mut base: serde_json::Value = serde_json::from_str(DEFAULTS_JSON).expect("the shipped defaults parse");
        let overlay: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        merge(&mut base, overlay);
        let cfg: RunConfig = serde_json::from_value(base).map_err(|e| e.to_string())?;
        if cfg.version != CONFIG_VERSION {
            return Err(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                cfg.version
            ));
        }
        Ok(cfg)
    }
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.version, CONFIG_VERSION);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_overlay(&text).unwrap(), cfg);
    }

    #[test]
    fn overlays_replace_only_what_they_name() {
        let cfg = RunConfig::from_overlay(r#"{"seed": 11, "verify": {"chain_models": 3}}"#).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.verify.chain_models, 3);
        assert_eq!(cfg.verify.rearrange_cases, RunConfig::default().verify.rearrange_cases);
    }

    #[test]
    fn bad_overlays_are_rejected() {
        assert!(RunConfig::from_overlay(r#"{"sed": 1}"#).is_err());
        assert!(RunConfig::from_overlay(r#"{"version": 2}"#).is_err());
        assert!(RunConfig::from_overlay("not json").is_err());
        assert!(RunConfig::from_overlay(r#"{"verify": {"chain_models": -1}}"#).is_err());
    }
}
