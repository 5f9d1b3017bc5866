//! JSON run configuration. Big integers and rationals are decimal strings.
//!
//! ```json
//! {
//!   "name": "table1:k9-5-31-special",
//!   "t_min": "9/5", "t_max": "9/5", "k": 9,
//!   "ignored_primes": ["3"],
//!   "B": "10000000000000000", "P_init": "5",
//!   "initial_on": [{"p": "5", "kind": "exact", "e": 2}, {"p": "31", "kind": "min", "e": 96}],
//!   "initial_off": [],
//!   "special": {"r": "31", "log_r_L": 14, "delta": 1, "certified": true},
//!   "initial_f_r": {"5": 1, "31": 0},
//!   "factor_policy": {"trial_limit": 1000000, "allow_general": true, "factordb": "cache"},
//!   "long_run": true
//! }
//! ```
//!
//! A special prime must carry `"certified": true`; loading re-runs the
//! certification and rejects the file if it fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abundancy_core::arith::{format_rational, parse_rational};
use abundancy_core::search::ConfigError;
use abundancy_core::{ExponentKind, OffEntry, OnEntry, SearchConfig, SpecialPrimeSpec, TierPolicy};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{FactorDbMode, FactorPolicy};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema: {0}")]
    Schema(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: &str, message: impl ToString) -> ConfigFileError {
    ConfigFileError::Field { field: field.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOn {
    p: String,
    kind: RawKind,
    e: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawKind {
    Exact,
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOff {
    p: String,
    b: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecial {
    r: String,
    #[serde(rename = "log_r_L")]
    log_r_l: u32,
    delta: u32,
    #[serde(default)]
    certified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    #[serde(default = "default_trial_limit")]
    trial_limit: u64,
    #[serde(default = "default_true")]
    allow_general: bool,
    #[serde(default)]
    factordb: FactorDbMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cache_path: Option<PathBuf>,
}

fn default_trial_limit() -> u64 {
    TierPolicy::default().trial_limit
}

fn default_true() -> bool {
    true
}

impl Default for RawPolicy {
    fn default() -> Self {
        RawPolicy { trial_limit: default_trial_limit(), allow_general: true, factordb: FactorDbMode::default(), cache_path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: String,
    t_min: String,
    t_max: String,
    k: u32,
    ignored_primes: Vec<String>,
    #[serde(rename = "B")]
    cutoff: String,
    #[serde(rename = "P_init")]
    floor: String,
    #[serde(default)]
    initial_on: Vec<RawOn>,
    #[serde(default)]
    initial_off: Vec<RawOff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    special: Option<RawSpecial>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    initial_f_r: BTreeMap<String, u64>,
    #[serde(default)]
    factor_policy: RawPolicy,
    #[serde(default)]
    long_run: bool,
}

/// A validated run: search data plus how to factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub name: String,
    pub search: SearchConfig,
    pub factor_policy: FactorPolicy,
    /// Excluded unless long runs are requested.
    pub long_run: bool,
}

fn integer(name: &str, s: &str) -> Result<BigUint, ConfigFileError> {
    s.trim().parse().map_err(|_| field(name, format!("{s:?} is not a non-negative integer")))
}

fn config_error(e: ConfigError) -> ConfigFileError {
    let name = match &e {
        ConfigError::BadTargets => "t_min",
        ConfigError::BadK => "k",
        ConfigError::BadCutoff => "B",
        ConfigError::NotPrime(_) | ConfigError::DuplicatePrime(_) | ConfigError::ZeroExponent(_) => "initial_on/initial_off",
        ConfigError::IgnoredMissing(_) | ConfigError::TargetUnfactored => "ignored_primes",
        ConfigError::SpecialNotOddPrime(_) | ConfigError::SpecialNotListed(_) | ConfigError::SpecialDividesTarget(_) => {
            "special"
        }
    };
    field(name, e)
}

impl RunConfig {
    fn from_raw(raw: RawConfig) -> Result<Self, ConfigFileError> {
        let rational = |name: &str, s: &str| parse_rational(s).ok_or_else(|| field(name, format!("{s:?} is not a rational")));
        let t_min = rational("t_min", &raw.t_min)?;
        let t_max = rational("t_max", &raw.t_max)?;
        let ignored = raw.ignored_primes.iter().map(|s| integer("ignored_primes", s)).collect::<Result<_, _>>()?;
        let initial_on = raw
            .initial_on
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    RawKind::Exact => ExponentKind::Exact,
                    RawKind::Min => ExponentKind::Min,
                };
                Ok(OnEntry { p: integer("initial_on", &e.p)?, kind, e: e.e })
            })
            .collect::<Result<_, ConfigFileError>>()?;
        let initial_off = raw
            .initial_off
            .iter()
            .map(|e| Ok(OffEntry { p: integer("initial_off", &e.p)?, b: e.b }))
            .collect::<Result<_, ConfigFileError>>()?;
        let special = match &raw.special {
            None => None,
            Some(s) => {
                let spec = SpecialPrimeSpec { r: integer("special.r", &s.r)?, l_exponent: s.log_r_l, delta: s.delta };
                if !s.certified {
                    return Err(field("special.certified", "special prime has no certification record"));
                }
                Some(spec)
            }
        };
        let initial_f_r = raw
            .initial_f_r
            .iter()
            .map(|(k, v)| Ok((integer("initial_f_r", k)?, *v)))
            .collect::<Result<_, ConfigFileError>>()?;
        let search = SearchConfig {
            t_min,
            t_max,
            k: raw.k,
            ignored,
            cutoff: integer("B", &raw.cutoff)?,
            floor: integer("P_init", &raw.floor)?,
            initial_on,
            initial_off,
            special,
            initial_f_r,
        };
        search.validate().map_err(config_error)?;
        if let Some(spec) = &search.special {
            match spec.certify() {
                Ok(true) => {}
                Ok(false) => return Err(field("special", "certification failed")),
                Err(e) => return Err(field("special", e)),
            }
        }
        let p = &raw.factor_policy;
        if p.trial_limit < 2 {
            return Err(field("factor_policy.trial_limit", "must be at least 2"));
        }
        let factor_policy = FactorPolicy {
            tiers: TierPolicy { trial_limit: p.trial_limit, allow_general: p.allow_general, ..TierPolicy::default() },
            factordb: p.factordb,
            cache_path: p.cache_path.clone(),
            ..FactorPolicy::default()
        };
        Ok(RunConfig { name: raw.name, search, factor_policy, long_run: raw.long_run })
    }

    fn to_raw(&self) -> RawConfig {
        let s = &self.search;
        RawConfig {
            name: self.name.clone(),
            t_min: format_rational(&s.t_min),
            t_max: format_rational(&s.t_max),
            k: s.k,
            ignored_primes: s.ignored.iter().map(ToString::to_string).collect(),
            cutoff: s.cutoff.to_string(),
            floor: s.floor.to_string(),
            initial_on: s
                .initial_on
                .iter()
                .map(|e| RawOn {
                    p: e.p.to_string(),
                    kind: match e.kind {
                        ExponentKind::Exact => RawKind::Exact,
                        ExponentKind::Min => RawKind::Min,
                    },
                    e: e.e,
                })
                .collect(),
            initial_off: s.initial_off.iter().map(|e| RawOff { p: e.p.to_string(), b: e.b }).collect(),
            special: s.special.as_ref().map(|sp| RawSpecial {
                r: sp.r.to_string(),
                log_r_l: sp.l_exponent,
                delta: sp.delta,
                certified: true,
            }),
            initial_f_r: s.initial_f_r.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            factor_policy: RawPolicy {
                trial_limit: self.factor_policy.tiers.trial_limit,
                allow_general: self.factor_policy.tiers.allow_general,
                factordb: self.factor_policy.factordb,
                cache_path: self.factor_policy.cache_path.clone(),
            },
            long_run: self.long_run,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigFileError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigFileError::Schema(e.to_string()))?;
        Self::from_raw(raw)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
    RunConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const K5: &str = r#"{"name":"k5","t_min":"9/5","t_max":"9/5","k":5,"ignored_primes":["3"],"B":"1000","P_init":"4"}"#;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_json(K5).unwrap();
        assert_eq!(cfg.search.k, 5);
        assert_eq!(cfg.search.cutoff, BigUint::from(1000u32));
        assert_eq!(cfg.factor_policy.factordb, FactorDbMode::Cache);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn missing_ignored_prime_is_rejected() {
        let text = K5.replace(r#"["3"]"#, "[]");
        match RunConfig::from_json(&text) {
            Err(ConfigFileError::Field { field, .. }) => assert_eq!(field, "ignored_primes"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn special_prime_needs_certificate() {
        let mut v: serde_json::Value = serde_json::from_str(K5).unwrap();
        v["k"] = 9.into();
        v["P_init"] = "5".into();
        v["initial_on"] = serde_json::json!([{"p": "5", "kind": "exact", "e": 2}, {"p": "31", "kind": "min", "e": 96}]);
        v["special"] = serde_json::json!({"r": "31", "log_r_L": 14, "delta": 1});
        match RunConfig::from_json(&v.to_string()) {
            Err(ConfigFileError::Field { field, .. }) => assert_eq!(field, "special.certified"),
            other => panic!("{other:?}"),
        }
        v["special"]["certified"] = true.into();
        let cfg = RunConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.search.special.as_ref().unwrap().r, BigUint::from(31u32));
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        v["special"]["r"] = "7".into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(RunConfig::from_json("{}"), Err(ConfigFileError::Schema(_))));
        let bad = K5.replace(r#""9/5""#, r#""nine""#);
        assert!(matches!(RunConfig::from_json(&bad), Err(ConfigFileError::Field { .. })));
        let extra = K5.replace(r#""k":5"#, r#""k":5,"bogus":1"#);
        assert!(matches!(RunConfig::from_json(&extra), Err(ConfigFileError::Schema(_))));
    }
}
