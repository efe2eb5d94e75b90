//! Identification report: the JSON artifact mirroring the coefficient tables.
//!
//! Reports carry no timestamps and no environment-dependent fields; a rerun
//! with the same config and input is byte-identical (see `Provenance`).

use std::path::Path;

use eddikit::{BasisTerm, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::TermSpec;
use crate::errors::{with_path, CliError, Result};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub term: TermSpec,
    /// Human-oriented rendering of the term, e.g. `x^3` or `v*H(|x|-e)`.
    pub expr: String,
    pub value: f64,
    pub unit: String,
}

impl CoefficientEntry {
    pub fn damping(term: BasisTerm, value: f64) -> Self {
        CoefficientEntry {
            term: TermSpec::from_term(term, None),
            expr: term.to_string(),
            value,
            unit: term.damping_unit(),
        }
    }

    pub fn stiffness(term: BasisTerm, value: f64) -> Self {
        CoefficientEntry {
            term: TermSpec::from_term(term, None),
            expr: term.to_string(),
            value,
            unit: term.stiffness_unit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub condition_estimate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StlsSummary {
    pub lambda: f64,
    pub iterations: usize,
    /// Active-term count after each iteration.
    pub active_history: Vec<usize>,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub condition_estimate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationMetric {
    pub ic: [f64; 2],
    /// RMS(x_identified - x_reference) / RMS(x_reference) over the record.
    pub nrmse_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub config_sha256: String,
    pub input_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationReport {
    pub schema: u32,
    pub method: String,
    pub mass: f64,
    pub damping: Vec<CoefficientEntry>,
    pub stiffness: Vec<CoefficientEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stiffness_fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stls: Option<StlsSummary>,
    pub validation: Vec<ValidationMetric>,
    pub provenance: Provenance,
}

impl IdentificationReport {
    /// Recomposes the identified model; inverse of the coefficient tables.
    pub fn to_model(&self) -> Result<ModelSpec> {
        let terms = |entries: &[CoefficientEntry]| -> Result<Vec<(BasisTerm, f64)>> {
            entries.iter().map(|e| Ok((e.term.to_basis()?, e.value))).collect()
        };
        ModelSpec::new(self.mass, terms(&self.damping)?, terms(&self.stiffness)?)
            .map_err(CliError::from)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Numerical(format!("report serialization failed: {e}")))?;
        text.push('\n');
        with_path(std::fs::write(path, text), path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = with_path(std::fs::read_to_string(path), path)?;
        let report: IdentificationReport = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if report.schema != REPORT_SCHEMA {
            return Err(CliError::config(format!(
                "{}: unsupported report schema {} (this build reads schema = {REPORT_SCHEMA})",
                path.display(),
                report.schema
            )));
        }
        Ok(report)
    }

    /// Plain-text rendering for the `report` verb.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "mass:   {} kg", self.mass);
        let table = |out: &mut String, title: &str, entries: &[CoefficientEntry]| {
            let _ = writeln!(out, "\n{title}");
            if entries.is_empty() {
                let _ = writeln!(out, "  (none)");
            }
            for e in entries {
                let _ = writeln!(out, "  {:<22} {:>18.8e}  {}", e.expr, e.value, e.unit);
            }
        };
        table(&mut out, "damping coefficients", &self.damping);
        table(&mut out, "stiffness coefficients", &self.stiffness);
        if let Some(fit) = &self.damping_fit {
            let _ = writeln!(
                out,
                "\nphase 1: relative residual {:.3e}, condition {:.3e}",
                fit.relative_residual, fit.condition_estimate
            );
        }
        if let Some(fit) = &self.stiffness_fit {
            let _ = writeln!(
                out,
                "phase 2: relative residual {:.3e}, condition {:.3e}",
                fit.relative_residual, fit.condition_estimate
            );
        }
        if let Some(stls) = &self.stls {
            let _ = writeln!(
                out,
                "\nstls: lambda {}, {} iteration(s), active terms {:?}, relative residual {:.3e}",
                stls.lambda, stls.iterations, stls.active_history, stls.relative_residual
            );
        }
        if !self.validation.is_empty() {
            let _ = writeln!(out, "\nvalidation (NRMSE on x)");
            for m in &self.validation {
                let _ = writeln!(out, "  ic ({}, {}): {:.4e}", m.ic[0], m.ic[1], m.nrmse_x);
            }
        }
        for w in self
            .damping_fit
            .iter()
            .chain(self.stiffness_fit.iter())
            .flat_map(|f| f.warnings.iter())
            .chain(self.stls.iter().flat_map(|s| s.warnings.iter()))
        {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = with_path(std::fs::read(path), path)?;
    Ok(hex_digest(&bytes))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn tool_version() -> String {
    format!("eddikit {}", env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> IdentificationReport {
        IdentificationReport {
            schema: REPORT_SCHEMA,
            method: "eddi".to_string(),
            mass: 0.1,
            damping: vec![
                CoefficientEntry::damping(BasisTerm::VelPower(1), 0.08),
                CoefficientEntry::damping(BasisTerm::MixedDispSqVel, 2000.0),
                CoefficientEntry::damping(BasisTerm::VelGateTwoSided { clearance: 0.005 }, 0.2),
            ],
            stiffness: vec![
                CoefficientEntry::stiffness(BasisTerm::DispPower(1), 40.0),
                CoefficientEntry::stiffness(BasisTerm::DispPower(3), 5000.0),
                CoefficientEntry::stiffness(
                    BasisTerm::ClearanceSpringTwoSided { clearance: 0.005 },
                    200.0,
                ),
            ],
            damping_fit: Some(FitSummary {
                residual_norm: 1e-6,
                relative_residual: 1e-4,
                condition_estimate: 50.0,
                warnings: vec![],
            }),
            stiffness_fit: None,
            stls: None,
            validation: vec![ValidationMetric { ic: [0.0, 0.5], nrmse_x: 0.01 }],
            provenance: Provenance {
                tool: tool_version(),
                config_sha256: "ab".repeat(32),
                input_sha256: "cd".repeat(32),
            },
        }
    }

    #[test]
    fn report_round_trips_to_identical_model() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let report = sample_report();
        report.save(&path).unwrap();
        let back = IdentificationReport::load(&path).unwrap();
        assert_eq!(back, report);

        let model = back.to_model().unwrap();
        assert_eq!(model.mass(), 0.1);
        assert_eq!(model.damping_terms()[2], (BasisTerm::VelGateTwoSided { clearance: 0.005 }, 0.2));
        assert_eq!(model.stiffness_terms()[1], (BasisTerm::DispPower(3), 5000.0));
    }

    #[test]
    fn serialization_is_stable_across_runs() {
        let a = serde_json::to_string_pretty(&sample_report()).unwrap();
        let b = serde_json::to_string_pretty(&sample_report()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("time"), "no timestamps in reports");
    }

    #[test]
    fn unit_labels_follow_term_role() {
        let report = sample_report();
        assert_eq!(report.damping[0].unit, "N*s/m");
        assert_eq!(report.damping[1].unit, "N*s/m^3");
        assert_eq!(report.stiffness[1].unit, "N/m^3");
        assert_eq!(report.stiffness[2].expr, "(|x|-e)*sgn(x)*H(|x|-e)");
    }

    #[test]
    fn text_rendering_lists_every_coefficient() {
        let text = sample_report().render_text();
        assert!(text.contains("x^2*v"));
        assert!(text.contains("N/m^3"));
        assert!(text.contains("validation"));
    }

    #[test]
    fn load_rejects_wrong_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let mut report = sample_report();
        report.schema = 9;
        report.save(&path).unwrap();
        let err = IdentificationReport::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
