//! The five CLI verbs.
//!
//! Every command reads config/inputs, computes, then writes all artifacts;
//! nothing is written before its computation finishes. All outputs are
//! deterministic functions of the inputs.

use std::path::Path;

use eddikit::phase1::identify_damping;
use eddikit::phase2::{compose_model, conservative_force, identify_stiffness, WeightedTerms};
use eddikit::preprocess::{find_zero_crossings, reconstruct_states_with, select_crossings};
use eddikit::signal::nrmse;
use eddikit::sim::{simulate, SimConfig};
use eddikit::sindy::{sindy_identify, StlsConfig};
use eddikit::spectra::{cwt_morlet, default_freq_grid, fourier_spectrum, MORLET_DEFAULT_CYCLES};
use eddikit::{BasisTerm, ModelSpec, Result as CoreResult, SampledSignal, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, RunConfig};
use crate::csvio::{self, InputRecord};
use crate::errors::{with_path, CliError, Result};
use crate::report::{
    sha256_file, tool_version, CoefficientEntry, FitSummary, IdentificationReport, Provenance,
    StlsSummary, ValidationMetric, REPORT_SCHEMA,
};
use crate::svg::{self, Series};

fn note(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    with_path(std::fs::create_dir_all(dir), dir)
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path, quiet: bool) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let model = config
        .model()?
        .ok_or_else(|| CliError::config("simulate requires a [model] section"))?;
    let sim_cfg = config.sim_config()?;
    note(quiet, format!("simulating t in [{}, {}] s at {} Hz", sim_cfg.t_span.0, sim_cfg.t_span.1, sim_cfg.output_rate));
    let traj = simulate(&model, &sim_cfg)?;

    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("trajectory.csv");
    csvio::write_trajectory(&csv_path, &traj)?;
    note(quiet, format!("wrote {} ({} samples)", csv_path.display(), traj.len()));

    if config.plots_enabled() {
        let t: Vec<f64> = (0..traj.len()).map(|k| traj.x().time(k)).collect();
        let x: Vec<(f64, f64)> = t.iter().copied().zip(traj.x().values().iter().copied()).collect();
        let v: Vec<(f64, f64)> = t.iter().copied().zip(traj.v().values().iter().copied()).collect();
        svg::line_plot(
            &out_dir.join("trajectory.svg"),
            "free response",
            "t [s]",
            "x [m], v [m/s]",
            &[Series { label: "x", points: &x }, Series { label: "v", points: &v }],
        )?;
    }
    Ok(())
}

/// Reads the input record, reconstructing states first when it is a bare
/// acceleration measurement.
fn load_trajectory(config: &RunConfig, input: &Path, mass: f64, quiet: bool) -> Result<Trajectory> {
    match csvio::read_record(input, mass)? {
        InputRecord::Trajectory(t) => Ok(t),
        InputRecord::Acceleration(a) => {
            let filter = config.filter_spec();
            note(
                quiet,
                format!(
                    "acceleration record: reconstructing states (order-{} high-pass at {} Hz)",
                    filter.order, filter.cutoff_hz
                ),
            );
            reconstruct_states_with(&a, mass, &filter).map_err(CliError::from)
        }
    }
}

/// Simulates reference and identified models from each validation IC and
/// reports NRMSE on displacement. ICs run concurrently. An IC whose
/// simulation fails (an unstable identified model, typically) is reported
/// on stderr and dropped rather than aborting the identification.
fn validation_metrics(
    exact: &ModelSpec,
    identified: &ModelSpec,
    base: &SimConfig,
    ics: &[(f64, f64)],
    quiet: bool,
) -> Vec<ValidationMetric> {
    let runs: Vec<(f64, f64, CoreResult<f64>)> = ics
        .par_iter()
        .map(|&(x0, v0)| {
            let mut cfg = base.clone();
            cfg.ic = (x0, v0);
            let score = simulate(exact, &cfg).and_then(|reference| {
                let candidate = simulate(identified, &cfg)?;
                Ok(nrmse(candidate.x().values(), reference.x().values()))
            });
            (x0, v0, score)
        })
        .collect();
    let mut metrics = Vec::new();
    for (x0, v0, score) in runs {
        match score {
            Ok(nrmse_x) => metrics.push(ValidationMetric { ic: [x0, v0], nrmse_x }),
            Err(e) => note(
                quiet,
                format!("validation ic ({x0}, {v0}) skipped: identified model failed to simulate ({e})"),
            ),
        }
    }
    metrics
}

/// NRMSE table for a report, empty when the config lacks a reference model
/// or validation ICs.
fn report_validation(
    config: &RunConfig,
    identified: &ModelSpec,
    quiet: bool,
) -> Result<Vec<ValidationMetric>> {
    let ics = config.validation_ics();
    let exact = config.model()?;
    let (Some(exact), false) = (exact, ics.is_empty()) else {
        return Ok(Vec::new());
    };
    note(quiet, format!("validating against {} initial condition(s)", ics.len()));
    Ok(validation_metrics(&exact, identified, &config.sim_config()?, &ics, quiet))
}

fn provenance(config_path: &Path, input_path: &Path) -> Result<Provenance> {
    Ok(Provenance {
        tool: tool_version(),
        config_sha256: sha256_file(config_path)?,
        input_sha256: sha256_file(input_path)?,
    })
}

fn split_by_role(coefficients: &[(BasisTerm, f64)]) -> (WeightedTerms, WeightedTerms) {
    coefficients.iter().copied().partition(|(t, _)| t.involves_velocity())
}

pub fn cmd_identify(
    config_path: &Path,
    input: &Path,
    out_dir: &Path,
    method_flag: Option<Method>,
    quiet: bool,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let method = config.method(method_flag)?;
    let mass = config.identify_mass()?;
    let traj = load_trajectory(&config, input, mass, quiet)?;
    let damping_library = config.damping_library()?;
    let stiffness_library = config.stiffness_library()?;
    let prov = provenance(config_path, input)?;
    ensure_dir(out_dir)?;

    if method.runs_eddi() {
        note(quiet, "phase 1: damping from dissipated energy at zero crossings");
        let raw = find_zero_crossings(traj.x(), traj.v(), mass)?;
        let crossings = select_crossings(&raw, traj.f_ext(), &config.crossing_options())?;
        let damping = identify_damping(&traj, &crossings, &damping_library)?;

        note(quiet, "phase 2: stiffness from the conservative force");
        let series = conservative_force(&traj, &damping.coefficients)?
            .trimmed_from(crossings.gammas()[0])?;
        let stiffness = identify_stiffness(&series, &stiffness_library)?;
        let model =
            compose_model(mass, damping.coefficients.clone(), stiffness.coefficients.clone())?;

        let curves = &damping.energy_curves;
        csvio::write_columns(
            &out_dir.join("dissipated_energy.csv"),
            "gamma,dissipated_data,dissipated_model",
            &[&curves.gammas, &curves.dissipated_data, &curves.dissipated_model],
        )?;
        let rf = &stiffness.restoring_force;
        csvio::write_columns(
            &out_dir.join("restoring_force.csv"),
            "x,k_data,k_model",
            &[
                &rf.iter().map(|p| p.x).collect::<Vec<_>>(),
                &rf.iter().map(|p| p.k_data).collect::<Vec<_>>(),
                &rf.iter().map(|p| p.k_model).collect::<Vec<_>>(),
            ],
        )?;

        let report = IdentificationReport {
            schema: REPORT_SCHEMA,
            method: "eddi".to_string(),
            mass,
            damping: damping
                .coefficients
                .iter()
                .map(|&(t, c)| CoefficientEntry::damping(t, c))
                .collect(),
            stiffness: stiffness
                .coefficients
                .iter()
                .map(|&(t, c)| CoefficientEntry::stiffness(t, c))
                .collect(),
            damping_fit: Some(FitSummary {
                residual_norm: damping.residual_norm,
                relative_residual: damping.relative_residual,
                condition_estimate: damping.condition_estimate,
                warnings: damping.warnings.clone(),
            }),
            stiffness_fit: Some(FitSummary {
                residual_norm: stiffness.residual_norm,
                relative_residual: stiffness.relative_residual,
                condition_estimate: stiffness.condition_estimate,
                warnings: stiffness.warnings.clone(),
            }),
            stls: None,
            validation: report_validation(&config, &model, quiet)?,
            provenance: prov.clone(),
        };
        report.save(&out_dir.join("report_eddi.json"))?;
        note(quiet, format!("wrote {}", out_dir.join("report_eddi.json").display()));

        if config.plots_enabled() {
            let data: Vec<(f64, f64)> =
                curves.gammas.iter().copied().zip(curves.dissipated_data.iter().copied()).collect();
            let fit: Vec<(f64, f64)> =
                curves.gammas.iter().copied().zip(curves.dissipated_model.iter().copied()).collect();
            svg::line_plot(
                &out_dir.join("dissipated_energy.svg"),
                "dissipated energy at crossings",
                "gamma [s]",
                "D [J]",
                &[Series { label: "data", points: &data }, Series { label: "model", points: &fit }],
            )?;
            let mut by_x: Vec<&eddikit::phase2::RestoringForcePoint> = rf.iter().collect();
            by_x.sort_by(|a, b| a.x.total_cmp(&b.x));
            let data: Vec<(f64, f64)> = by_x.iter().map(|p| (p.x, p.k_data)).collect();
            let fit: Vec<(f64, f64)> = by_x.iter().map(|p| (p.x, p.k_model)).collect();
            svg::line_plot(
                &out_dir.join("restoring_force.svg"),
                "restoring force",
                "x [m]",
                "K [N]",
                &[Series { label: "data", points: &data }, Series { label: "model", points: &fit }],
            )?;
        }
    }

    if method.runs_sindy() {
        let lambda = config.sindy_lambda()?;
        note(quiet, format!("sindy: sequential thresholded least squares, lambda = {lambda}"));
        let combined: Vec<BasisTerm> =
            damping_library.iter().chain(stiffness_library.iter()).copied().collect();
        let fit = sindy_identify(&traj, &combined, &StlsConfig::new(lambda)?)?;
        let (damping, stiffness) = split_by_role(&fit.coefficients);
        let model = compose_model(mass, damping.clone(), stiffness.clone())?;

        let report = IdentificationReport {
            schema: REPORT_SCHEMA,
            method: "sindy".to_string(),
            mass,
            damping: damping.iter().map(|&(t, c)| CoefficientEntry::damping(t, c)).collect(),
            stiffness: stiffness.iter().map(|&(t, c)| CoefficientEntry::stiffness(t, c)).collect(),
            damping_fit: None,
            stiffness_fit: None,
            stls: Some(StlsSummary {
                lambda,
                iterations: fit.iterations,
                active_history: fit.active_history.clone(),
                residual_norm: fit.residual_norm,
                relative_residual: fit.relative_residual,
                condition_estimate: fit.condition_estimate,
                warnings: fit.warnings.clone(),
            }),
            validation: report_validation(&config, &model, quiet)?,
            provenance: prov,
        };
        report.save(&out_dir.join("report_sindy.json"))?;
        note(quiet, format!("wrote {}", out_dir.join("report_sindy.json").display()));
    }

    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidationOutput {
    pub schema: u32,
    pub report: String,
    pub metrics: Vec<ValidationMetric>,
}

pub fn cmd_validate(config_path: &Path, report_path: &Path, out_dir: &Path, quiet: bool) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let report = IdentificationReport::load(report_path)?;
    let identified = report.to_model()?;
    let exact = config.model()?;
    let ics = config.validation_ics();
    if ics.is_empty() {
        return Err(CliError::config("validate requires [validation] ics"));
    }
    let base = config.sim_config()?;
    ensure_dir(out_dir)?;

    note(quiet, format!("simulating {} validation IC(s)", ics.len()));
    struct IcRun {
        t: Vec<f64>,
        x_id: Vec<f64>,
        x_ref: Option<Vec<f64>>,
        metric: Option<ValidationMetric>,
    }
    let runs: Vec<IcRun> = ics
        .par_iter()
        .map(|&(x0, v0)| {
            let mut cfg = base.clone();
            cfg.ic = (x0, v0);
            let candidate = simulate(&identified, &cfg)?;
            let t: Vec<f64> = (0..candidate.len()).map(|k| candidate.x().time(k)).collect();
            let x_id = candidate.x().values().to_vec();
            let (x_ref, metric) = match &exact {
                Some(exact) => {
                    let reference = simulate(exact, &cfg)?;
                    let metric = ValidationMetric {
                        ic: [x0, v0],
                        nrmse_x: nrmse(&x_id, reference.x().values()),
                    };
                    (Some(reference.x().values().to_vec()), Some(metric))
                }
                None => (None, None),
            };
            Ok(IcRun { t, x_id, x_ref, metric })
        })
        .collect::<Result<_>>()?;

    let mut metrics = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        let csv_path = out_dir.join(format!("validation_ic_{k}.csv"));
        match &run.x_ref {
            Some(x_ref) => {
                csvio::write_columns(&csv_path, "t,x_ref,x_id", &[&run.t, x_ref, &run.x_id])?
            }
            None => csvio::write_columns(&csv_path, "t,x_id", &[&run.t, &run.x_id])?,
        }
        if let Some(m) = &run.metric {
            note(quiet, format!("ic ({}, {}): NRMSE {:.4e}", m.ic[0], m.ic[1], m.nrmse_x));
            metrics.push(m.clone());
        }
        if config.plots_enabled() {
            let id_pts: Vec<(f64, f64)> =
                run.t.iter().copied().zip(run.x_id.iter().copied()).collect();
            let mut series = vec![Series { label: "identified", points: &id_pts }];
            let ref_pts: Vec<(f64, f64)>;
            if let Some(x_ref) = &run.x_ref {
                ref_pts = run.t.iter().copied().zip(x_ref.iter().copied()).collect();
                series.insert(0, Series { label: "reference", points: &ref_pts });
            }
            svg::line_plot(
                &out_dir.join(format!("validation_ic_{k}.svg")),
                &format!("validation IC ({}, {})", ics[k].0, ics[k].1),
                "t [s]",
                "x [m]",
                &series,
            )?;
        }
    }

    let out = ValidationOutput {
        schema: 1,
        report: report_path.display().to_string(),
        metrics,
    };
    let mut text = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::Numerical(format!("validation serialization failed: {e}")))?;
    text.push('\n');
    let json_path = out_dir.join("validation.json");
    with_path(std::fs::write(&json_path, text), &json_path)?;
    note(quiet, format!("wrote {}", json_path.display()));
    Ok(())
}

pub fn cmd_spectra(input: &Path, out_dir: &Path, quiet: bool) -> Result<()> {
    // Mass is irrelevant for spectra; any positive value parses the record.
    let (signal, channel): (SampledSignal, &str) = match csvio::read_record(input, 1.0)? {
        InputRecord::Trajectory(t) => match t.a() {
            Some(a) => (a.clone(), "a"),
            None => (t.x().clone(), "x"),
        },
        InputRecord::Acceleration(a) => (a, "a"),
    };
    note(quiet, format!("analyzing channel '{channel}' ({} samples)", signal.len()));
    ensure_dir(out_dir)?;

    let (freqs, amplitude) = fourier_spectrum(&signal);
    csvio::write_columns(&out_dir.join("spectrum.csv"), "f_hz,amplitude", &[&freqs, &amplitude])?;

    let nyquist = signal.rate() / 2.0;
    let grid: Vec<f64> = default_freq_grid().into_iter().filter(|&f| f < 0.98 * nyquist).collect();
    if grid.len() < default_freq_grid().len() {
        note(quiet, format!("frequency grid clipped below Nyquist ({nyquist} Hz)"));
    }
    let scalogram = cwt_morlet(&signal, &grid, MORLET_DEFAULT_CYCLES)?;
    csvio::write_grid(
        &out_dir.join("scalogram.csv"),
        &scalogram.freqs,
        &scalogram.times,
        &scalogram.magnitude,
    )?;
    let coi: Vec<(f64, f64)> =
        scalogram.times.iter().copied().zip(scalogram.coi.iter().copied()).collect();
    csvio::write_pairs(&out_dir.join("coi.csv"), "t,f_coi_hz", &coi)?;
    note(quiet, format!("wrote spectrum.csv, scalogram.csv, coi.csv to {}", out_dir.display()));

    let spectrum_pts: Vec<(f64, f64)> =
        freqs.iter().copied().zip(amplitude.iter().copied()).collect();
    svg::line_plot(
        &out_dir.join("spectrum.svg"),
        &format!("amplitude spectrum ({channel})"),
        "f [Hz]",
        "amplitude",
        &[Series { label: channel, points: &spectrum_pts }],
    )?;
    svg::heatmap(
        &out_dir.join("scalogram.svg"),
        &format!("Morlet scalogram ({channel})"),
        &scalogram.times,
        &scalogram.freqs,
        &scalogram.magnitude,
    )?;
    Ok(())
}

pub fn cmd_report(report_path: &Path, out_dir: Option<&Path>, _quiet: bool) -> Result<()> {
    let report = IdentificationReport::load(report_path)?;
    let text = report.render_text();
    print!("{text}");
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let path = dir.join("report.txt");
        with_path(std::fs::write(&path, &text), &path)?;
    }
    Ok(())
}
