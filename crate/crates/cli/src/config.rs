//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! box_length = 6.283185307179586   # default 2π
//! modes_per_axis = 16
//! # cutoff = 7                     # default modes_per_axis/2 - 1
//!
//! [physics]
//! nu = 0.1
//! alpha = 1.0
//! order = 5                        # or: orders = [2, 5, 10]
//! epsilon = 0.1                    # or: [physics.epsilon_rule]
//!
//! [time]
//! dt = 0.01
//! t_end = 1.0
//! # cfl_safety = 0.5
//! # observer_cadence = 10
//!
//! [initial_condition]
//! preset = "taylor-green"          # or: snapshot = "path/to/file.admb"
//!
//! [output]
//! directory = "out"
//! # snapshot_interval = 0          # steps; 0 writes only the final state
//! # formats = ["csv", "snapshot"]
//! ```
use std::f64::consts::PI;
use std::path::PathBuf;

use admlab_core::convergence::{RuleParams, DEFAULT_EPS0, DEFAULT_RULE};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value {value} for `{name}`: expected {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("conflicting settings: {0}")]
    Conflict(String),
    #[error("missing setting: {0}")]
    Missing(String),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub time: TimeConfig,
    pub initial_condition: InitialConditionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_box_length")]
    pub box_length: f64,
    pub modes_per_axis: usize,
    pub cutoff: Option<usize>,
}

fn default_box_length() -> f64 {
    2.0 * PI
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub alpha: f64,
    pub order: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub epsilon: Option<f64>,
    pub epsilon_rule: Option<EpsilonRuleConfig>,
    /// Concurrent family members; 0 uses one thread per member.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EpsilonRuleConfig {
    #[serde(default = "default_rule_name")]
    pub name: String,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    pub exponent: Option<f64>,
}

fn default_rule_name() -> String {
    DEFAULT_RULE.to_string()
}

fn default_eps0() -> f64 {
    DEFAULT_EPS0
}

impl EpsilonRuleConfig {
    pub fn params(&self) -> RuleParams {
        RuleParams {
            eps0: self.eps0,
            exponent: self.exponent,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_cadence")]
    pub observer_cadence: usize,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_cadence() -> usize {
    10
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConditionConfig {
    pub preset: Option<String>,
    pub snapshot: Option<PathBuf>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub theta_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_k_max() -> usize {
    4
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Snapshot,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Steps between snapshots; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_interval: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            snapshot_interval: 0,
            formats: default_formats(),
        }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("admlab-out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Snapshot]
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Whether the physics section describes one run or a family.
#[derive(Clone, Debug, PartialEq)]
pub enum Members {
    Single { order: usize, epsilon: f64 },
    Family { orders: Vec<usize>, rule: EpsilonRuleConfig },
}

fn domain(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<(), ConfigError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Domain { name, value, range })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        domain("box_length", g.box_length, g.box_length > 0.0, "box_length > 0")?;
        let m = g.modes_per_axis;
        domain(
            "modes_per_axis",
            m as f64,
            m >= 4 && m.is_multiple_of(2),
            "an even integer ≥ 4",
        )?;
        if let Some(c) = g.cutoff {
            domain("cutoff", c as f64, c >= 1 && c < m / 2, "1 ≤ cutoff < modes_per_axis/2")?;
        }

        let p = &self.physics;
        domain("nu", p.nu, p.nu > 0.0, "ν > 0")?;
        domain("alpha", p.alpha, p.alpha > 0.0, "α > 0")?;
        self.members()?;

        let t = &self.time;
        domain("dt", t.dt, t.dt > 0.0, "dt > 0")?;
        domain("t_end", t.t_end, t.t_end > 0.0, "t_end > 0")?;
        domain("cfl_safety", t.cfl_safety, t.cfl_safety > 0.0, "cfl_safety > 0")?;
        domain(
            "observer_cadence",
            t.observer_cadence as f64,
            t.observer_cadence >= 1,
            "observer_cadence ≥ 1",
        )?;

        let interval = self.output.snapshot_interval;
        domain(
            "snapshot_interval",
            interval as f64,
            interval.is_multiple_of(t.observer_cadence.max(1)),
            "a multiple of observer_cadence",
        )?;

        let ic = &self.initial_condition;
        match (&ic.preset, &ic.snapshot) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Conflict(
                    "initial_condition: give either `preset` or `snapshot`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError::Missing(
                    "initial_condition.preset or initial_condition.snapshot".into(),
                ))
            }
            _ => {}
        }
        domain("amplitude", ic.amplitude, ic.amplitude >= 0.0, "amplitude ≥ 0")?;
        domain(
            "theta_amplitude",
            ic.theta_amplitude,
            ic.theta_amplitude >= 0.0,
            "theta_amplitude ≥ 0",
        )?;
        domain(
            "k_min",
            ic.k_min as f64,
            ic.k_min >= 1 && ic.k_min <= ic.k_max,
            "1 ≤ k_min ≤ k_max",
        )?;
        Ok(())
    }

    pub fn members(&self) -> Result<Members, ConfigError> {
        let p = &self.physics;
        let eps_range = "0 < ε < 1";
        match (p.order, &p.orders, p.epsilon, &p.epsilon_rule) {
            (Some(_), Some(_), _, _) => Err(ConfigError::Conflict(
                "physics: give either `order` or `orders`, not both".into(),
            )),
            (_, _, Some(_), Some(_)) => Err(ConfigError::Conflict(
                "physics: give either `epsilon` or `epsilon_rule`, not both".into(),
            )),
            (None, None, _, _) => Err(ConfigError::Missing("physics.order or physics.orders".into())),
            (_, _, None, None) => Err(ConfigError::Missing(
                "physics.epsilon or physics.epsilon_rule".into(),
            )),
            (Some(order), None, Some(epsilon), None) => {
                domain("epsilon", epsilon, epsilon > 0.0 && epsilon < 1.0, eps_range)?;
                Ok(Members::Single { order, epsilon })
            }
            (Some(_), None, None, Some(_)) => Err(ConfigError::Conflict(
                "physics: `epsilon_rule` requires `orders`".into(),
            )),
            (None, Some(_), Some(epsilon), None) => {
                domain("epsilon", epsilon, epsilon > 0.0 && epsilon < 1.0, eps_range)?;
                Err(ConfigError::Conflict(
                    "physics: `orders` needs an `epsilon_rule` so that ε decreases with N".into(),
                ))
            }
            (None, Some(orders), None, Some(rule)) => {
                domain("epsilon_rule.eps0", rule.eps0, rule.eps0 > 0.0 && rule.eps0 < 1.0, eps_range)?;
                Ok(Members::Family {
                    orders: orders.clone(),
                    rule: rule.clone(),
                })
            }
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
modes_per_axis = 16

[physics]
nu = 0.1
alpha = 1.0
order = 5
epsilon = 0.1

[time]
dt = 0.01
t_end = 1.0

[initial_condition]
preset = "taylor-green"
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.box_length, 2.0 * PI);
        assert_eq!(c.grid.cutoff, None);
        assert_eq!(c.time.cfl_safety, 0.5);
        assert_eq!(c.time.observer_cadence, 10);
        assert_eq!(c.output, OutputConfig::default());
        assert_eq!(c.initial_condition.amplitude, 1.0);
        assert_eq!(
            c.members().unwrap(),
            Members::Single {
                order: 5,
                epsilon: 0.1
            }
        );
    }

    #[test]
    fn epsilon_out_of_range_names_the_range() {
        let err = parse_config(&MINIMAL.replace("epsilon = 0.1", "epsilon = 1.5")).unwrap_err();
        assert!(err.to_string().contains("0 < ε < 1"), "{err}");
    }

    #[test]
    fn epsilon_and_rule_conflict() {
        let text = MINIMAL.replace(
            "epsilon = 0.1",
            "epsilon = 0.1\nepsilon_rule = { name = \"inverse-linear\" }",
        );
        assert!(matches!(parse_config(&text), Err(ConfigError::Conflict(_))));
    }

    #[test]
    fn rule_requires_orders() {
        let text = MINIMAL.replace("epsilon = 0.1", "epsilon_rule = { eps0 = 0.5 }");
        assert!(matches!(parse_config(&text), Err(ConfigError::Conflict(_))));
        let family = text.replace("order = 5", "orders = [2, 8, 32]");
        let c = parse_config(&family).unwrap();
        match c.members().unwrap() {
            Members::Family { orders, rule } => {
                assert_eq!(orders, vec![2, 8, 32]);
                assert_eq!(rule.name, "inverse-linear");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named_with_location() {
        let err = parse_config(&MINIMAL.replace("nu = 0.1", "nu = 0.1\nnuu = 0.2")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nuu"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn domain_checks() {
        for (from, to, name) in [
            ("nu = 0.1", "nu = 0.0", "nu"),
            ("alpha = 1.0", "alpha = -1.0", "alpha"),
            ("modes_per_axis = 16", "modes_per_axis = 9", "modes_per_axis"),
            ("dt = 0.01", "dt = 0.0", "dt"),
        ] {
            match parse_config(&MINIMAL.replace(from, to)) {
                Err(ConfigError::Domain { name: n, .. }) => assert_eq!(n, name),
                other => panic!("{name}: {other:?}"),
            }
        }
    }
}
