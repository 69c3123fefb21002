//! Run configuration.
//!
//! A run is described by one JSON document; every field has a default, so
//! `{}` is a valid configuration. Command-line flags override fields of the
//! loaded document, which overrides the defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cache::TimeUnit;
use crate::policy::{EnumerationMode, DEFAULT_POLICY_BUDGET};
use crate::rga::{DEFAULT_MAX_ITERATIONS, DEFAULT_V_LIMIT};
use crate::{Error, Result};

/// How rates are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Utility maximization over enumerated policies.
    Analytical,
    /// Utility maximization over one super-user vector per pattern.
    #[default]
    Superuser,
    /// The greedy association scheduler.
    Rga,
    /// Single profile, no multicasting; solved with `baseline`.
    Uncoded,
}

/// Helper grid and radii, or a topology file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySpec {
    pub rings: usize,
    pub hex_radius: f64,
    pub r_trans: f64,
    pub r_inter: f64,
    /// Fixed topology; relative paths resolve against the config file.
    pub fixture: Option<PathBuf>,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            rings: 1,
            hex_radius: 1.0,
            r_trans: 1.0,
            r_inter: 1.2,
            fixture: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologySpec,
    /// Mean users per helper.
    pub users_per_helper: f64,
    /// `L`
    pub profiles: usize,
    /// `M`, chunks per cache.
    pub memory: u64,
    /// `N`, chunks in the library.
    pub library: u64,
    /// Explicit 1-based profile per user; random otherwise.
    pub profile_map: Option<Vec<usize>>,
    pub mode: Mode,
    /// Solver for the uncoded mode.
    pub baseline: Mode,
    pub enumeration: EnumerationMode,
    pub time_unit: TimeUnit,
    pub alpha: f64,
    /// Solver tolerance; `1e-6 * K` when absent.
    pub tol: Option<f64>,
    pub max_solver_iterations: usize,
    pub budget: u64,
    pub drop_unserved: bool,
    pub v_limit: u64,
    pub max_iterations: u64,
    pub shuffle_degrees: bool,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::default(),
            users_per_helper: 10.0,
            profiles: 5,
            memory: 1,
            library: 5,
            profile_map: None,
            mode: Mode::Superuser,
            baseline: Mode::Superuser,
            enumeration: EnumerationMode::Restricted,
            time_unit: TimeUnit::Codeword,
            alpha: 1.0,
            tol: None,
            max_solver_iterations: crate::fairness::DEFAULT_MAX_ITERS,
            budget: DEFAULT_POLICY_BUDGET,
            drop_unserved: false,
            v_limit: DEFAULT_V_LIMIT,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            shuffle_degrees: true,
            seeds: (0..20).collect(),
        }
    }
}

/// A stored report carries its configuration under `config`.
#[derive(Deserialize)]
struct Wrapped {
    config: RunConfig,
}

impl RunConfig {
    /// Reads a configuration, or the configuration embedded in a report.
    /// A relative fixture path is made relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let mut config: RunConfig = if value.get("config").is_some() {
            serde_json::from_value::<Wrapped>(value)?.config
        } else {
            serde_json::from_value(value)?
        };
        if let (Some(fixture), Some(dir)) = (&config.topology.fixture, path.parent()) {
            if fixture.is_relative() {
                config.topology.fixture = Some(dir.join(fixture));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.mode == Mode::Uncoded && self.profiles != 1 {
            return bad("mode uncoded requires profiles = 1");
        }
        if matches!(self.baseline, Mode::Uncoded) {
            return bad("baseline must be analytical, superuser or rga");
        }
        if !(self.users_per_helper > 0.0 && self.users_per_helper.is_finite()) {
            return bad("users_per_helper must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and >= 0");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.v_limit == 0 {
            return bad("v_limit must be at least 1");
        }
        if let Some(map) = &self.profile_map {
            if map.iter().any(|&l| l == 0 || l > self.profiles) {
                return bad("profile_map entries must lie in 1..=profiles");
            }
        }
        Ok(())
    }

    /// Solver actually used for rates.
    pub fn solver(&self) -> Mode {
        if self.mode == Mode::Uncoded {
            self.baseline
        } else {
            self.mode
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.seeds.len(), 20);
        assert_eq!(c.topology.rings, 1);
    }

    #[test]
    fn uncoded_needs_single_profile() {
        let c = RunConfig {
            mode: Mode::Uncoded,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            mode: Mode::Uncoded,
            profiles: 1,
            ..RunConfig::default()
        };
        c.validate().unwrap();
        assert_eq!(c.solver(), Mode::Superuser);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"profile": 3}"#).is_err());
    }
}
