//! Phase 1 of the energy method: damping identification.
//!
//! Between displacement zero crossings all mechanical energy is kinetic, so
//! the kinetic-energy drops `T(gamma_0) - T(gamma_i)` equal the energy
//! dissipated by the damping terms. Expanding the damping force over a
//! candidate library turns this into the linear system `Q b = R` solved here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lsq::solve_scaled_ls;
use crate::model::{validate_library, BasisTerm, Trajectory};
use crate::preprocess::{cumulative_integral, CrossingSet};
use crate::signal::SampledSignal;

/// Condition estimate above which fits are flagged (reported, not failed).
pub const CONDITION_WARN_THRESHOLD: f64 = 1e10;

/// The assembled dissipated-energy system `Q b = R`.
#[derive(Debug, Clone)]
pub struct Phase1System {
    /// `N x M`: row i, column j holds the integral of `v * B_j` from
    /// `gamma_0` to `gamma_i`.
    pub q: DMatrix<f64>,
    /// `N`: kinetic-energy drops `T(gamma_0) - T(gamma_i)`.
    pub r: DVector<f64>,
    /// The M damping candidates, column order.
    pub library: Vec<BasisTerm>,
    /// 2-norm condition estimate of the column-scaled `Q` that is solved.
    pub condition_estimate: f64,
}

/// Model-vs-data dissipated energy at the crossings (the Fig.-3c-style
/// comparison, starting from `(gamma_0, 0)`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCurves {
    pub gammas: Vec<f64>,
    /// Kinetic-energy drops measured from the data.
    pub dissipated_data: Vec<f64>,
    /// Dissipation predicted by the identified damping model.
    pub dissipated_model: Vec<f64>,
}

/// Identified damping model with fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingFit {
    pub coefficients: Vec<(BasisTerm, f64)>,
    pub residual_norm: f64,
    /// `||Q b - R|| / ||R||`.
    pub relative_residual: f64,
    pub condition_estimate: f64,
    pub warnings: Vec<String>,
    pub energy_curves: EnergyCurves,
}

/// Builds `Q` and `R` from a trajectory and its selected crossings.
///
/// Candidate integrals are evaluated as cumulative trapezoids over the full
/// record and read off at each `gamma_i` by linear interpolation (partial
/// end cells).
pub fn assemble_phase1(
    traj: &Trajectory,
    crossings: &CrossingSet,
    library: &[BasisTerm],
) -> Result<Phase1System> {
    validate_library(library, BasisTerm::involves_velocity, "damping")?;
    if crossings.len() < 2 {
        return Err(Error::InsufficientCrossings { found: crossings.len(), needed: 2 });
    }
    let span = (traj.t0(), traj.x().t_end());
    if crossings.gammas()[0] < span.0 - 1e-9 || *crossings.gammas().last().unwrap() > span.1 + 1e-9 {
        return Err(Error::InvalidSignal("crossings lie outside the trajectory".to_string()));
    }

    let xs = traj.x().values();
    let vs = traj.v().values();
    let n_rows = crossings.len() - 1;
    let mut q = DMatrix::zeros(n_rows, library.len());
    for (j, term) in library.iter().enumerate() {
        let integrand: Vec<f64> =
            (0..traj.len()).map(|k| vs[k] * term.eval(xs[k], vs[k])).collect();
        let cumulative =
            cumulative_integral(&SampledSignal::new(traj.t0(), traj.dt(), integrand)?);
        let at_gamma0 = cumulative.sample_linear(crossings.gammas()[0]);
        for i in 0..n_rows {
            q[(i, j)] = cumulative.sample_linear(crossings.gammas()[i + 1]) - at_gamma0;
        }
    }
    let t0 = crossings.t_at_gamma()[0];
    let r = DVector::from_iterator(n_rows, (1..crossings.len()).map(|i| t0 - crossings.t_at_gamma()[i]));

    let condition_estimate = crate::lsq::scaled_condition(&q);
    Ok(Phase1System { q, r, library: library.to_vec(), condition_estimate })
}

/// Assembles and solves Phase 1, returning the damping coefficients and the
/// dissipated-energy comparison curves.
pub fn identify_damping(
    traj: &Trajectory,
    crossings: &CrossingSet,
    library: &[BasisTerm],
) -> Result<DampingFit> {
    let system = assemble_phase1(traj, crossings, library)?;
    let mut warnings = Vec::new();
    if system.q.nrows() < system.q.ncols() {
        warnings.push(format!(
            "underdetermined system: {} crossings for {} candidates (minimum-norm solution)",
            crossings.len(),
            library.len()
        ));
    }
    if system.condition_estimate > CONDITION_WARN_THRESHOLD {
        warnings.push(format!("ill-conditioned system: condition estimate {:.3e}", system.condition_estimate));
    }
    let sol = solve_scaled_ls(&system.q, &system.r)?;
    let coefficients: Vec<(BasisTerm, f64)> =
        library.iter().copied().zip(sol.coefficients.iter().copied()).collect();

    let b = DVector::from_vec(sol.coefficients.clone());
    let model_d = &system.q * &b;
    let mut gammas = vec![crossings.gammas()[0]];
    let mut dissipated_data = vec![0.0];
    let mut dissipated_model = vec![0.0];
    for i in 0..system.q.nrows() {
        gammas.push(crossings.gammas()[i + 1]);
        dissipated_data.push(system.r[i]);
        dissipated_model.push(model_d[i]);
    }
    let r_norm = system.r.norm();
    Ok(DampingFit {
        coefficients,
        residual_norm: sol.residual_norm,
        relative_residual: if r_norm > 0.0 { sol.residual_norm / r_norm } else { sol.residual_norm },
        condition_estimate: system.condition_estimate,
        warnings,
        energy_curves: EnergyCurves { gammas, dissipated_data, dissipated_model },
    })
}

/// Residual `||Q b - R|| / ||R||` of a coefficient vector against an
/// assembled system (energy-balance audit, Eq.-4 style).
pub fn system_residual(system: &Phase1System, coefficients: &[f64]) -> f64 {
    let b = DVector::from_vec(coefficients.to_vec());
    (&system.q * b - &system.r).norm() / system.r.norm()
}

/// Convenience composition used by the pipeline and tests: crossings from
/// the trajectory itself with default trimming.
pub fn crossings_for(traj: &Trajectory) -> Result<CrossingSet> {
    let cs = crate::preprocess::find_zero_crossings(traj.x(), traj.v(), traj.mass())?;
    crate::preprocess::select_crossings(&cs, traj.f_ext(), &crate::preprocess::CrossingOptions::default())
}

/// Looks up a coefficient by term in a fit result.
pub fn coefficient_of(coefficients: &[(BasisTerm, f64)], term: &BasisTerm) -> Option<f64> {
    coefficients.iter().find(|(t, _)| t == term).map(|(_, c)| *c)
}
