use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{validate_params, ValidationError, ValidationReport};
use crate::qsim::{AmplitudeModel, CommitOptions, DEFAULT_HADAMARD_THRESHOLD};
use crate::samplers::ParameterSet;

/// Directory (or file) holding `profiles.toml`, used when no path is given.
pub const PROFILE_ENV: &str = "LOSSYRAND_PROFILES";
pub const PROFILE_FILE: &str = "profiles.toml";
const BUILTIN: &str = include_str!("../../profiles/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {origin}: {source}")]
    Parse { origin: String, source: toml::de::Error },
    #[error("profile `{name}`: {source}")]
    Invalid { name: String, source: ValidationError },
    #[error("unknown profile `{0}` (available: {1})")]
    UnknownProfile(String, String),
    #[error("{0}")]
    Unsupported(String),
}

fn default_threshold() -> usize {
    DEFAULT_HADAMARD_THRESHOLD
}

fn default_c_offset() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    /// Filled from the table key when loaded from a profiles file.
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    /// Most candidate points the simulated prover's preimage scan may examine.
    pub budget: u64,
    #[serde(default = "default_threshold")]
    pub hadamard_threshold: usize,
    #[serde(default)]
    pub amplitude: AmplitudeModel,
    /// The constant subtracted in the entropy bound, in bits.
    #[serde(default = "default_c_offset")]
    pub c_offset: f64,
    pub params: ParameterSet,
}

impl Profile {
    pub fn commit_options(&self) -> CommitOptions {
        CommitOptions { budget: self.budget as u128, amplitude: self.amplitude }
    }

    pub fn validate(&self) -> Result<ValidationReport, ValidationError> {
        validate_params(&self.params)
    }
}

#[derive(Clone, Debug)]
pub struct ProfileSet {
    pub origin: String,
    pub profiles: BTreeMap<String, Profile>,
}

impl ProfileSet {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let raw: BTreeMap<String, Profile> =
            toml::from_str(text).map_err(|source| ConfigError::Parse { origin: origin.to_string(), source })?;
        let mut profiles = BTreeMap::new();
        for (name, mut p) in raw {
            p.validate().map_err(|source| ConfigError::Invalid { name: name.clone(), source })?;
            p.name = name.clone();
            profiles.insert(name, p);
        }
        Ok(Self { origin: origin.to_string(), profiles })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN, "built-in profiles").expect("shipped profiles are valid")
    }

    /// Loads from `path` (a file, or a directory containing `profiles.toml`),
    /// else from the directory named by `LOSSYRAND_PROFILES`, else the
    /// built-in set.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let chosen = path.map(Path::to_path_buf).or_else(|| std::env::var_os(PROFILE_ENV).map(PathBuf::from));
        let Some(mut file) = chosen else {
            return Ok(Self::builtin());
        };
        if file.is_dir() {
            file.push(PROFILE_FILE);
        }
        let text = std::fs::read_to_string(&file).map_err(|source| ConfigError::Read { path: file.clone(), source })?;
        Self::parse(&text, &file.display().to_string())
    }

    pub fn get(&self, name: &str) -> Result<&Profile, ConfigError> {
        let key = name.to_ascii_lowercase();
        self.profiles.get(&key).ok_or_else(|| {
            ConfigError::UnknownProfile(name.to_string(), self.profiles.keys().cloned().collect::<Vec<_>>().join(", "))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_load() {
        let set = ProfileSet::builtin();
        for name in ["t1", "t2", "t2l1", "t3", "t4"] {
            let p = set.get(name).unwrap();
            assert_eq!(p.name, name);
            assert_eq!(p.params.w, p.params.n * p.params.q.bits() as usize);
        }
        assert!(set.get("T1").is_ok());
        assert!(matches!(set.get("t9"), Err(ConfigError::UnknownProfile(..))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BUILTIN.replacen("budget =", "budgett =", 1);
        assert!(matches!(ProfileSet::parse(&text, "test"), Err(ConfigError::Parse { .. })));
        let text = BUILTIN.replacen("b_l =", "extra = 1\nb_l =", 1);
        assert!(matches!(ProfileSet::parse(&text, "test"), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let text = "[bad]\nseed = 1\nbudget = 10\n[bad.params]\nlambda = 8\nell = 1\nn = 2\nm = 18\nw = 15\nq = 191\nb_l = 3\nb_v = 4\nb_p = 6\nc_t = 1.0\n";
        assert!(matches!(ProfileSet::parse(text, "test"), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn loads_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(PROFILE_FILE), BUILTIN).unwrap();
        let set = ProfileSet::load(Some(dir.path())).unwrap();
        assert_eq!(set.profiles.len(), ProfileSet::builtin().profiles.len());
        assert!(matches!(ProfileSet::load(Some(&dir.path().join("missing.toml"))), Err(ConfigError::Read { .. })));
    }
}
