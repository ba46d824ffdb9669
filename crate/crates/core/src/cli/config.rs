//! JSON scenario configuration.

use serde::Deserialize;

use crate::analysis::{DEFAULT_DETECTABILITY_TOL, DEFAULT_PR_TOL, DEFAULT_ZERO_TOL};
use crate::controller::{
    default_eps1, BlockingSchedule, GraininessPolicy, PolicyVariant, WiggleSequence,
    DEFAULT_MU_INIT,
};
use crate::plant::LtiPlant;
use crate::timescale::{Segment, TimeScaleProgram, DEFAULT_H_INT};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantConfig,
    pub timescale: TimescaleConfig,
    pub controller: ControllerConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub check: CheckConfig,
}

/// Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimescaleConfig {
    /// Dense control interrupted by one adaptive block after every
    /// `continuous_run` seconds.
    Blocking { continuous_run: f64, block_cap_fraction: f64 },
    /// Fixed, cyclically repeated segments.
    Program {
        segments: Vec<SegmentConfig>,
        #[serde(default)]
        origin: f64,
    },
    /// Every point scattered, graininess from the policy.
    Sampled,
    /// Purely dense.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentConfig {
    Dense(f64),
    Gap(f64),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub k0: f64,
    pub policy: PolicyConfig,
    /// Overrides the `CB` the policy is told about (defaults to the plant's).
    #[serde(default)]
    pub cb: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub wiggle: Option<WiggleConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    SisoBound {
        c_safe: f64,
    },
    MimoBound {
        #[serde(default)]
        eps1: Option<f64>,
    },
    IlchmannTownley {
        #[serde(default)]
        mu_init: Option<f64>,
    },
    Fixed {
        mu: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WiggleConfig {
    Repeating {
        values: Vec<f64>,
    },
    /// `n!+1` prime-root values; `order` defaults to the plant order.
    PrimeRoot {
        #[serde(default)]
        order: Option<usize>,
    },
    Random {
        bits: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    #[serde(default = "default_h_int")]
    pub h_int: f64,
    #[serde(default)]
    pub trace: Option<String>,
    #[serde(default)]
    pub report: Option<String>,
}

fn default_h_int() -> f64 {
    DEFAULT_H_INT
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub detectability_tol: f64,
    pub pr_tol: f64,
    pub blowup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_tol: DEFAULT_ZERO_TOL,
            detectability_tol: DEFAULT_DETECTABILITY_TOL,
            pr_tol: DEFAULT_PR_TOL,
            blowup: 1e12,
        }
    }
}

/// Inputs of the `check` command.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Graininess values for detectability and the certificate lattice.
    pub mu: Vec<f64>,
    /// Gains for the certificate lattice.
    pub k: Vec<f64>,
    /// Gains for the positive-real diagnostic.
    pub k_star: Vec<f64>,
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub policy: Option<PolicyConfig>,
    pub mu: Option<Vec<f64>>,
}

/// `siso-bound | mimo-bound | ilchmann-townley | fixed:<mu>`.
pub fn parse_policy_flag(s: &str) -> Result<PolicyConfig> {
    match s {
        "siso-bound" => Ok(PolicyConfig::SisoBound { c_safe: 1.9 }),
        "mimo-bound" => Ok(PolicyConfig::MimoBound { eps1: None }),
        "ilchmann-townley" => Ok(PolicyConfig::IlchmannTownley { mu_init: None }),
        other => match other.strip_prefix("fixed:") {
            Some(v) => v
                .parse()
                .map(|mu| PolicyConfig::Fixed { mu })
                .map_err(|_| Error::invalid(format!("bad fixed graininess '{v}'"))),
            None => Err(Error::invalid(format!("unknown policy '{other}'"))),
        },
    }
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::invalid(format!("{name} must be a non-empty matrix")));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::invalid(format!(
            "{name}: row {i} has {} entries, expected {c}",
            rows[i].len()
        )));
    }
    Ok(Matrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

/// How the closed loop's time scale is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeDomain {
    Blocking(BlockingSchedule),
    Program(TimeScaleProgram),
    Sampled,
    Continuous,
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: LtiPlant,
    pub domain: TimeDomain,
    pub policy: GraininessPolicy,
    /// `ε₁` used for certification; `None` when `CB` is not usable.
    pub eps1: Option<f64>,
    pub k0: f64,
    pub horizon: f64,
    pub h_int: f64,
    pub seed: u64,
    pub trace: Option<String>,
    pub report: Option<String>,
    pub tolerances: Tolerances,
    pub check: CheckConfig,
}

impl ScenarioConfig {
    /// Parses a JSON document; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidArgument(format!("config line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn build(&self, overrides: &Overrides) -> Result<Scenario> {
        let p = &self.plant;
        let plant = LtiPlant::new(
            matrix("plant.a", &p.a)?,
            matrix("plant.b", &p.b)?,
            matrix("plant.c", &p.c)?,
            Vector::from_vec(p.x0.clone()),
        )?;

        let horizon = overrides.horizon.unwrap_or(self.run.horizon);
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("run.horizon must be positive, got {horizon}")));
        }
        let h_int = self.run.h_int;
        if !(h_int > 0.0 && h_int.is_finite()) {
            return Err(Error::invalid(format!("run.h_int must be positive, got {h_int}")));
        }
        let seed = overrides.seed.unwrap_or(self.controller.seed);

        let cb = match &self.controller.cb {
            Some(rows) => matrix("controller.cb", rows)?,
            None => plant.cb(),
        };
        let policy_cfg = overrides.policy.as_ref().unwrap_or(&self.controller.policy);
        let variant = match *policy_cfg {
            PolicyConfig::SisoBound { c_safe } => PolicyVariant::SisoBound { c_safe },
            PolicyConfig::MimoBound { eps1 } => PolicyVariant::MimoBound {
                eps1: match eps1 {
                    Some(e) => e,
                    None => default_eps1(&cb)?,
                },
            },
            PolicyConfig::IlchmannTownley { mu_init } => {
                PolicyVariant::IlchmannTownley { mu_init: mu_init.unwrap_or(DEFAULT_MU_INIT) }
            }
            PolicyConfig::Fixed { mu } => PolicyVariant::Fixed { mu },
        };
        let mut policy = GraininessPolicy::new(variant, Some(cb.clone()))?;
        if let Some(w) = &self.controller.wiggle {
            let seq = match w {
                WiggleConfig::Repeating { values } => WiggleSequence::repeating(values.clone())?,
                WiggleConfig::PrimeRoot { order } => {
                    WiggleSequence::prime_root_subsequence(order.unwrap_or(plant.n()))?
                }
                WiggleConfig::Random { bits } => WiggleSequence::random(*bits, seed)?,
            };
            policy = policy.with_wiggle(seq);
        }
        let domain = match &self.timescale {
            TimescaleConfig::Blocking { continuous_run, block_cap_fraction } => {
                let schedule = BlockingSchedule::new(*continuous_run, *block_cap_fraction)?;
                policy = policy.with_blocking(&schedule);
                TimeDomain::Blocking(schedule)
            }
            TimescaleConfig::Program { segments, origin } => {
                let segs = segments
                    .iter()
                    .map(|s| match *s {
                        SegmentConfig::Dense(d) => Segment::Dense { duration: d },
                        SegmentConfig::Gap(g) => Segment::Gap { duration: g },
                    })
                    .collect();
                TimeDomain::Program(TimeScaleProgram::new(segs, *origin)?)
            }
            TimescaleConfig::Sampled => TimeDomain::Sampled,
            TimescaleConfig::Continuous => TimeDomain::Continuous,
        };
        let eps1 = match variant {
            PolicyVariant::MimoBound { eps1 } => Some(eps1),
            _ => default_eps1(&cb).ok(),
        };
        if !(self.controller.k0 > 0.0 && self.controller.k0.is_finite()) {
            return Err(Error::invalid(format!(
                "controller.k0 must be positive, got {}",
                self.controller.k0
            )));
        }
        let mut check = self.check.clone();
        if let Some(mu) = &overrides.mu {
            check.mu = mu.clone();
        }
        Ok(Scenario {
            plant,
            domain,
            policy,
            eps1,
            k0: self.controller.k0,
            horizon,
            h_int,
            seed,
            trace: self.run.trace.clone(),
            report: self.run.report.clone(),
            tolerances: self.tolerances.clone(),
            check,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"{
        "plant": {"a": [[0, 1], [-1, 1]], "b": [[1], [1]], "c": [[1, 0]], "x0": [1, 0]},
        "timescale": {"kind": "blocking", "continuous_run": 1.0, "block_cap_fraction": 0.9},
        "controller": {"k0": 0.5, "policy": {"kind": "mimo_bound", "eps1": 0.1}},
        "run": {"horizon": 30}
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ScenarioConfig::from_json(FIG1).unwrap();
        let s = cfg.build(&Overrides::default()).unwrap();
        assert_eq!(s.plant.n(), 2);
        assert_eq!(s.h_int, DEFAULT_H_INT);
        assert_eq!(s.policy.mu_bar(1.0), 1.9);
        assert_eq!(s.policy.block_cap_fraction(), 0.9);
        assert_eq!(s.eps1, Some(0.1));
    }

    #[test]
    fn rejects_unknown_and_missing_fields() {
        let unknown = FIG1.replace("\"x0\"", "\"x1\"");
        let err = ScenarioConfig::from_json(&unknown).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(ref m) if m.contains("line")));
        let no_plant = r#"{"timescale": {"kind": "sampled"}}"#;
        assert!(ScenarioConfig::from_json(no_plant).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = ScenarioConfig::from_json(FIG1).unwrap();
        let o = Overrides { horizon: Some(0.0), ..Default::default() };
        assert!(cfg.build(&o).is_err());
        let ragged = FIG1.replace("[[0, 1], [-1, 1]]", "[[0, 1], [-1]]");
        assert!(ScenarioConfig::from_json(&ragged).unwrap().build(&Overrides::default()).is_err());
    }

    #[test]
    fn policy_flag() {
        assert_eq!(parse_policy_flag("fixed:0.25").unwrap(), PolicyConfig::Fixed { mu: 0.25 });
        assert_eq!(
            parse_policy_flag("ilchmann-townley").unwrap(),
            PolicyConfig::IlchmannTownley { mu_init: None }
        );
        assert!(parse_policy_flag("fixed:x").is_err());
        assert!(parse_policy_flag("nope").is_err());
    }
}
