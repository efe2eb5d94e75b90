//! Sequential thresholded least-squares (STLS) baseline.
//!
//! Identifies the whole equation of motion in one regression: the force
//! target `y(t) = f_ext(t) − m·a(t)` is fit over the combined
//! damping+stiffness library, then coefficients below the threshold are
//! zeroed and the reduced system re-solved until the active set is stable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lsq::{scaled_condition, solve_scaled_ls};
use crate::model::{validate_library, BasisTerm, Trajectory};
use crate::phase1::CONDITION_WARN_THRESHOLD;

/// STLS settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlsConfig {
    /// Absolute threshold on raw physical-unit coefficients: after each
    /// solve, coefficients with `|c| < lambda` are eliminated.
    pub lambda: f64,
    /// Iteration cap; the loop normally stops earlier, when an iteration
    /// eliminates nothing.
    pub max_iters: usize,
}

impl StlsConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda, max_iters: 20 })
    }
}

impl Default for StlsConfig {
    fn default() -> Self {
        Self { lambda: 0.05, max_iters: 20 }
    }
}

/// STLS result over the full library (eliminated terms have coefficient 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SindyFit {
    pub coefficients: Vec<(BasisTerm, f64)>,
    pub residual_norm: f64,
    /// `||Θ c − y|| / ||y||`.
    pub relative_residual: f64,
    /// Condition estimate of the column-scaled full library matrix.
    pub condition_estimate: f64,
    /// Number of least-squares solves performed.
    pub iterations: usize,
    /// Active-set size after each solve (non-increasing).
    pub active_history: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Runs STLS on the trajectory: regresses `f_ext − m·a` on the combined
/// library evaluated at each sample's `(x, v)`.
pub fn sindy_identify(
    traj: &Trajectory,
    library: &[BasisTerm],
    cfg: &StlsConfig,
) -> Result<SindyFit> {
    validate_library(library, |_| true, "candidate")?;
    if !cfg.lambda.is_finite() || cfg.lambda < 0.0 {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", cfg.lambda)));
    }
    if cfg.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be positive".to_string()));
    }
    let a = traj.a().ok_or(Error::MissingAcceleration)?;

    let xs = traj.x().values();
    let vs = traj.v().values();
    let m = library.len();
    let theta = DMatrix::from_fn(traj.len(), m, |t, j| library[j].eval(xs[t], vs[t]));
    let y = DVector::from_iterator(
        traj.len(),
        (0..traj.len()).map(|t| traj.f_ext().values()[t] - traj.mass() * a.values()[t]),
    );
    let condition_estimate = scaled_condition(&theta);

    let mut active: Vec<bool> = vec![true; m];
    let mut coeffs = vec![0.0; m];
    let mut residual_norm = 0.0;
    let mut iterations = 0;
    let mut active_history = Vec::new();
    for _ in 0..cfg.max_iters {
        let cols: Vec<usize> = (0..m).filter(|&j| active[j]).collect();
        if cols.is_empty() {
            return Err(Error::AllTermsEliminated);
        }
        let sub = theta.select_columns(cols.iter());
        let sol = solve_scaled_ls(&sub, &y)?;
        iterations += 1;
        active_history.push(cols.len());

        coeffs = vec![0.0; m];
        let mut eliminated = false;
        for (slot, &j) in cols.iter().enumerate() {
            if sol.coefficients[slot].abs() < cfg.lambda {
                active[j] = false;
                eliminated = true;
            } else {
                coeffs[j] = sol.coefficients[slot];
            }
        }
        residual_norm = sol.residual_norm;
        if !eliminated {
            break;
        }
        if active.iter().all(|&a| !a) {
            return Err(Error::AllTermsEliminated);
        }
    }

    let mut warnings = Vec::new();
    if condition_estimate > CONDITION_WARN_THRESHOLD {
        warnings.push(format!(
            "ill-conditioned library matrix: condition estimate {condition_estimate:.3e}"
        ));
    }
    let y_norm = y.norm();
    Ok(SindyFit {
        coefficients: library.iter().copied().zip(coeffs).collect(),
        residual_norm,
        relative_residual: if y_norm > 0.0 { residual_norm / y_norm } else { residual_norm },
        condition_estimate,
        iterations,
        active_history,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsq::solve_linear_ls;
    use crate::model::ModelSpec;
    use crate::phase1::coefficient_of;
    use crate::sim::{simulate, SimConfig};
    use crate::testutil::*;
    use approx::assert_relative_eq;

    fn combined_library() -> Vec<BasisTerm> {
        let mut lib = benchmark_damping_library().to_vec();
        lib.extend_from_slice(&benchmark_stiffness_library());
        lib
    }

    fn benchmark_sindy_fit() -> &'static SindyFit {
        static FIT: std::sync::OnceLock<SindyFit> = std::sync::OnceLock::new();
        FIT.get_or_init(|| {
            sindy_identify(benchmark_trajectory(), &combined_library(), &StlsConfig::default())
                .unwrap()
        })
    }

    #[test]
    fn lambda_zero_is_plain_least_squares() {
        let spec = ModelSpec::new(
            1.0,
            vec![(BasisTerm::VelPower(1), 0.3)],
            vec![(BasisTerm::DispPower(1), 10.0), (BasisTerm::DispPower(3), 2.0)],
        )
        .unwrap();
        let traj = simulate(&spec, &SimConfig::new((0.0, 10.0), 2000.0, (0.0, 1.2))).unwrap();
        let library =
            [BasisTerm::VelPower(1), BasisTerm::VelPower(3), BasisTerm::DispPower(1), BasisTerm::DispPower(3)];
        let fit = sindy_identify(&traj, &library, &StlsConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(fit.iterations, 1);

        let xs = traj.x().values();
        let vs = traj.v().values();
        let theta = DMatrix::from_fn(traj.len(), 4, |t, j| library[j].eval(xs[t], vs[t]));
        let y = DVector::from_iterator(
            traj.len(),
            (0..traj.len())
                .map(|t| traj.f_ext().values()[t] - traj.mass() * traj.a().unwrap().values()[t]),
        );
        let plain = solve_linear_ls(&theta, &y).unwrap();
        for (j, (_, c)) in fit.coefficients.iter().enumerate() {
            assert_relative_eq!(*c, plain.coefficients[j], max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn huge_lambda_eliminates_everything() {
        let traj = benchmark_trajectory();
        let cfg = StlsConfig { lambda: 1e12, max_iters: 20 };
        assert!(matches!(
            sindy_identify(traj, &combined_library(), &cfg),
            Err(Error::AllTermsEliminated)
        ));
    }

    #[test]
    fn reproduces_benchmark_tables() {
        let fit = benchmark_sindy_fit();
        let c = |t: &BasisTerm| coefficient_of(&fit.coefficients, t).unwrap();
        // damping side
        assert_relative_eq!(c(&BasisTerm::VelPower(1)), 0.08, max_relative = 0.02);
        assert_relative_eq!(c(&BasisTerm::MixedDispSqVel), 2000.0, max_relative = 0.02);
        assert_relative_eq!(
            c(&BasisTerm::VelGateTwoSided { clearance: 0.005 }),
            0.2,
            max_relative = 0.02
        );
        assert_eq!(c(&BasisTerm::VelPower(2)), 0.0);
        assert_eq!(c(&BasisTerm::VelPower(3)), 0.0);
        assert_eq!(c(&BasisTerm::VelGateOneSided { clearance: 0.005 }), 0.0);
        // stiffness side
        assert_relative_eq!(c(&BasisTerm::DispPower(1)), 40.0, max_relative = 0.02);
        assert_relative_eq!(c(&BasisTerm::DispPower(3)), 5000.0, max_relative = 0.02);
        assert_relative_eq!(
            c(&BasisTerm::ClearanceSpringTwoSided { clearance: 0.005 }),
            200.0,
            max_relative = 0.02
        );
        assert_eq!(c(&BasisTerm::ClearanceSpringOneSided { clearance: 0.005 }), 0.0);
        assert!(fit.iterations >= 1 && fit.iterations <= 20);
    }

    #[test]
    fn active_set_shrinks_monotonically() {
        let fit = benchmark_sindy_fit();
        for pair in fit.active_history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        assert_eq!(fit.active_history.len(), fit.iterations);
    }

    #[test]
    fn surviving_set_is_a_fixed_point() {
        let fit = benchmark_sindy_fit();
        let survivors: Vec<BasisTerm> = fit
            .coefficients
            .iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(t, _)| *t)
            .collect();
        let refit =
            sindy_identify(benchmark_trajectory(), &survivors, &StlsConfig::default()).unwrap();
        assert_eq!(refit.iterations, 1);
        for (term, c) in &refit.coefficients {
            let orig = coefficient_of(&fit.coefficients, term).unwrap();
            assert_relative_eq!(*c, orig, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let traj = benchmark_trajectory();
        assert!(matches!(
            sindy_identify(traj, &[], &StlsConfig::default()),
            Err(Error::EmptyLibrary)
        ));
        assert!(StlsConfig::new(-0.1).is_err());
        assert!(StlsConfig::new(f64::NAN).is_err());
        let stripped = Trajectory::new(
            traj.x().clone(),
            traj.v().clone(),
            None,
            traj.f_ext().clone(),
            traj.mass(),
        )
        .unwrap();
        assert!(matches!(
            sindy_identify(&stripped, &combined_library(), &StlsConfig::default()),
            Err(Error::MissingAcceleration)
        ));
    }
}
