//! Strict TOML run configuration.
//!
//! Unknown keys are hard errors and the schema is versioned, so a config
//! that parses today parses identically tomorrow — reproducing published
//! coefficient tables depends on it.

use std::path::Path;

use eddikit::preprocess::{CrossingOptions, FilterSpec};
use eddikit::sim::{Forcing, SimConfig};
use eddikit::{BasisTerm, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::errors::{with_path, CliError, Result};

/// One candidate or model term, as written in configs and reports.
/// `power`/`clearance` apply per kind; `coefficient` only in model
/// sections, never in candidate libraries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
}

const TERM_KINDS: &str = "disp_power, vel_power, mixed_disp_sq_vel, vel_gate_one_sided, \
                          vel_gate_two_sided, clearance_spring_one_sided, clearance_spring_two_sided";

impl TermSpec {
    pub fn to_basis(&self) -> Result<BasisTerm> {
        let power = || {
            self.power.ok_or_else(|| {
                CliError::config(format!("term kind '{}' requires 'power'", self.kind))
            })
        };
        let clearance = || {
            self.clearance.ok_or_else(|| {
                CliError::config(format!("term kind '{}' requires 'clearance'", self.kind))
            })
        };
        let no_power = |term: BasisTerm| {
            if self.power.is_some() {
                Err(CliError::config(format!("term kind '{}' does not take 'power'", self.kind)))
            } else {
                Ok(term)
            }
        };
        let term = match self.kind.as_str() {
            "disp_power" => BasisTerm::DispPower(power()?),
            "vel_power" => BasisTerm::VelPower(power()?),
            "mixed_disp_sq_vel" => no_power(BasisTerm::MixedDispSqVel)?,
            "vel_gate_one_sided" => no_power(BasisTerm::VelGateOneSided { clearance: clearance()? })?,
            "vel_gate_two_sided" => no_power(BasisTerm::VelGateTwoSided { clearance: clearance()? })?,
            "clearance_spring_one_sided" => {
                no_power(BasisTerm::ClearanceSpringOneSided { clearance: clearance()? })?
            }
            "clearance_spring_two_sided" => {
                no_power(BasisTerm::ClearanceSpringTwoSided { clearance: clearance()? })?
            }
            other => {
                return Err(CliError::config(format!(
                    "unknown term kind '{other}'; expected one of: {TERM_KINDS}"
                )))
            }
        };
        let takes_clearance = matches!(
            term,
            BasisTerm::VelGateOneSided { .. }
                | BasisTerm::VelGateTwoSided { .. }
                | BasisTerm::ClearanceSpringOneSided { .. }
                | BasisTerm::ClearanceSpringTwoSided { .. }
        );
        if self.clearance.is_some() && !takes_clearance {
            return Err(CliError::config(format!(
                "term kind '{}' does not take 'clearance'",
                self.kind
            )));
        }
        term.validate().map_err(CliError::from)?;
        Ok(term)
    }

    pub fn from_term(term: BasisTerm, coefficient: Option<f64>) -> Self {
        let (kind, power, clearance) = match term {
            BasisTerm::DispPower(p) => ("disp_power", Some(p), None),
            BasisTerm::VelPower(p) => ("vel_power", Some(p), None),
            BasisTerm::MixedDispSqVel => ("mixed_disp_sq_vel", None, None),
            BasisTerm::VelGateOneSided { clearance } => ("vel_gate_one_sided", None, Some(clearance)),
            BasisTerm::VelGateTwoSided { clearance } => ("vel_gate_two_sided", None, Some(clearance)),
            BasisTerm::ClearanceSpringOneSided { clearance } => {
                ("clearance_spring_one_sided", None, Some(clearance))
            }
            BasisTerm::ClearanceSpringTwoSided { clearance } => {
                ("clearance_spring_two_sided", None, Some(clearance))
            }
        };
        TermSpec { kind: kind.to_string(), power, clearance, coefficient }
    }
}

fn to_model_terms(specs: &[TermSpec], section: &str) -> Result<Vec<(BasisTerm, f64)>> {
    specs
        .iter()
        .map(|s| {
            let c = s.coefficient.ok_or_else(|| {
                CliError::config(format!("[{section}] terms require 'coefficient'"))
            })?;
            Ok((s.to_basis()?, c))
        })
        .collect()
}

fn to_library(specs: &[TermSpec], section: &str) -> Result<Vec<BasisTerm>> {
    specs
        .iter()
        .map(|s| {
            if s.coefficient.is_some() {
                return Err(CliError::config(format!(
                    "[{section}] candidate terms do not take 'coefficient'"
                )));
            }
            s.to_basis()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub mass: f64,
    #[serde(default)]
    pub damping: Vec<TermSpec>,
    #[serde(default)]
    pub stiffness: Vec<TermSpec>,
}

impl ModelSection {
    pub fn to_model(&self) -> Result<ModelSpec> {
        ModelSpec::new(
            self.mass,
            to_model_terms(&self.damping, "model")?,
            to_model_terms(&self.stiffness, "model")?,
        )
        .map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub amplitude: Option<f64>,
    pub t_center: Option<f64>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub output_rate: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    pub ic: [f64; 2],
    pub forcing: Option<ForcingSection>,
}

fn default_rel_tol() -> f64 {
    1e-12
}

fn default_abs_tol() -> f64 {
    1e-16
}

impl SimSection {
    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::new((self.t_start, self.t_end), self.output_rate, (self.ic[0], self.ic[1]));
        cfg.rel_tol = self.rel_tol;
        cfg.abs_tol = self.abs_tol;
        if let Some(f) = &self.forcing {
            cfg.forcing = match f.kind.as_str() {
                "none" => Forcing::None,
                "impulse" => {
                    let get = |v: Option<f64>, name: &str| {
                        v.ok_or_else(|| {
                            CliError::config(format!("impulse forcing requires '{name}'"))
                        })
                    };
                    Forcing::Impulse {
                        amplitude: get(f.amplitude, "amplitude")?,
                        t_center: get(f.t_center, "t_center")?,
                        width: get(f.width, "width")?,
                    }
                }
                other => {
                    return Err(CliError::config(format!(
                        "unknown forcing type '{other}'; expected 'none' or 'impulse'"
                    )))
                }
            };
        }
        cfg.validate().map_err(CliError::from)?;
        Ok(cfg)
    }
}

/// Which identification methods to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Eddi,
    Sindy,
    Both,
}

impl Method {
    pub fn runs_eddi(self) -> bool {
        matches!(self, Method::Eddi | Method::Both)
    }

    pub fn runs_sindy(self) -> bool {
        matches!(self, Method::Sindy | Method::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifySection {
    pub mass: Option<f64>,
    pub method: Option<String>,
    pub sindy_lambda: Option<f64>,
    #[serde(default)]
    pub damping_library: Vec<TermSpec>,
    #[serde(default)]
    pub stiffness_library: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub filter_order: Option<usize>,
    pub cutoff_hz: Option<f64>,
    pub forcing_threshold: Option<f64>,
    pub energy_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    pub ics: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub plots: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub model: Option<ModelSection>,
    pub sim: Option<SimSection>,
    pub identify: Option<IdentifySection>,
    pub preprocess: Option<PreprocessSection>,
    pub validation: Option<ValidationSection>,
    pub output: Option<OutputSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = with_path(std::fs::read_to_string(path), path)?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if cfg.schema != 1 {
            return Err(CliError::config(format!(
                "unsupported schema version {} (this build reads schema = 1)",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Option<ModelSpec>> {
        self.model.as_ref().map(|m| m.to_model()).transpose()
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        self.sim
            .as_ref()
            .ok_or_else(|| CliError::config("missing [sim] section"))?
            .to_sim_config()
    }

    fn identify_section(&self) -> Result<&IdentifySection> {
        self.identify
            .as_ref()
            .ok_or_else(|| CliError::config("missing [identify] section"))
    }

    /// Mass used for identification: `[identify].mass`, falling back to the
    /// reference model's.
    pub fn identify_mass(&self) -> Result<f64> {
        let sect = self.identify_section()?;
        sect.mass
            .or_else(|| self.model.as_ref().map(|m| m.mass))
            .ok_or_else(|| CliError::config("mass must be set in [identify] or [model]"))
    }

    pub fn method(&self, flag: Option<Method>) -> Result<Method> {
        if let Some(m) = flag {
            return Ok(m);
        }
        match self.identify_section()?.method.as_deref() {
            None | Some("both") => Ok(Method::Both),
            Some("eddi") => Ok(Method::Eddi),
            Some("sindy") => Ok(Method::Sindy),
            Some(other) => Err(CliError::config(format!(
                "unknown method '{other}'; expected 'eddi', 'sindy' or 'both'"
            ))),
        }
    }

    pub fn sindy_lambda(&self) -> Result<f64> {
        let lambda = self.identify_section()?.sindy_lambda.unwrap_or(0.05);
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(CliError::config(format!("sindy_lambda must be >= 0, got {lambda}")));
        }
        Ok(lambda)
    }

    pub fn damping_library(&self) -> Result<Vec<BasisTerm>> {
        to_library(&self.identify_section()?.damping_library, "identify")
    }

    pub fn stiffness_library(&self) -> Result<Vec<BasisTerm>> {
        to_library(&self.identify_section()?.stiffness_library, "identify")
    }

    pub fn filter_spec(&self) -> FilterSpec {
        let mut spec = FilterSpec::default();
        if let Some(p) = &self.preprocess {
            if let Some(o) = p.filter_order {
                spec.order = o;
            }
            if let Some(c) = p.cutoff_hz {
                spec.cutoff_hz = c;
            }
        }
        spec
    }

    pub fn crossing_options(&self) -> CrossingOptions {
        let mut opts = CrossingOptions::default();
        if let Some(p) = &self.preprocess {
            if let Some(t) = p.forcing_threshold {
                opts.forcing_threshold = t;
            }
            if let Some(e) = p.energy_floor {
                opts.energy_floor = e;
            }
        }
        opts
    }

    pub fn validation_ics(&self) -> Vec<(f64, f64)> {
        self.validation
            .as_ref()
            .map(|v| v.ics.iter().map(|ic| (ic[0], ic[1])).collect())
            .unwrap_or_default()
    }

    pub fn plots_enabled(&self) -> bool {
        self.output.as_ref().and_then(|o| o.plots).unwrap_or(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = r#"
schema = 1

[model]
mass = 0.1
damping = [
  { kind = "vel_power", power = 1, coefficient = 0.08 },
  { kind = "mixed_disp_sq_vel", coefficient = 2000.0 },
  { kind = "vel_gate_two_sided", clearance = 0.005, coefficient = 0.2 },
]
stiffness = [
  { kind = "disp_power", power = 1, coefficient = 40.0 },
  { kind = "disp_power", power = 3, coefficient = 5000.0 },
  { kind = "clearance_spring_two_sided", clearance = 0.005, coefficient = 200.0 },
]

[sim]
t_end = 10.0
output_rate = 20000.0
ic = [0.0, 1.0]

[identify]
method = "both"
damping_library = [ { kind = "vel_power", power = 1 } ]
stiffness_library = [ { kind = "disp_power", power = 1 } ]

[validation]
ics = [[0.0, 0.5], [0.0, 2.0]]
"#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        let model = cfg.model().unwrap().unwrap();
        assert_eq!(model.mass(), 0.1);
        assert_eq!(model.damping_terms().len(), 3);
        let sim = cfg.sim_config().unwrap();
        assert_eq!(sim.rel_tol, 1e-12);
        assert_eq!(cfg.method(None).unwrap(), Method::Both);
        assert_eq!(cfg.method(Some(Method::Sindy)).unwrap(), Method::Sindy);
        assert_eq!(cfg.validation_ics(), vec![(0.0, 0.5), (0.0, 2.0)]);
        assert_eq!(cfg.identify_mass().unwrap(), 0.1);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_terms() {
        assert!(toml::from_str::<RunConfig>("schema = 1\nbogus = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("schema = 1\n[sim]\nt_end = 1.0\noutput_rate = 10.0\nic = [0,0]\nnope = 1\n").is_err());

        let cfg: RunConfig = toml::from_str(
            "schema = 1\n[identify]\ndamping_library = [ { kind = \"warp_drive\" } ]\n",
        )
        .unwrap();
        let err = cfg.damping_library().unwrap_err();
        assert!(err.to_string().contains("unknown term kind"));

        let cfg: RunConfig = toml::from_str(
            "schema = 1\n[identify]\ndamping_library = [ { kind = \"vel_power\" } ]\n",
        )
        .unwrap();
        assert!(cfg.damping_library().is_err());

        let cfg: RunConfig = toml::from_str(
            "schema = 1\n[identify]\ndamping_library = [ { kind = \"vel_power\", power = 1, coefficient = 2.0 } ]\n",
        )
        .unwrap();
        assert!(cfg.damping_library().is_err());
    }

    #[test]
    fn term_spec_round_trips() {
        let terms = [
            BasisTerm::DispPower(3),
            BasisTerm::VelPower(1),
            BasisTerm::MixedDispSqVel,
            BasisTerm::VelGateOneSided { clearance: 0.004 },
            BasisTerm::ClearanceSpringTwoSided { clearance: 0.005 },
        ];
        for t in terms {
            let spec = TermSpec::from_term(t, Some(1.5));
            assert_eq!(spec.to_basis().unwrap(), t);
            assert_eq!(spec.coefficient, Some(1.5));
        }
    }

    #[test]
    fn schema_version_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "schema = 2\n").unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }
}
