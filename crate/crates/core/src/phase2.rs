//! Phase 2 of the energy method: stiffness identification.
//!
//! With the damping model in hand, the conservative force is whatever is
//! left of the force balance: `K(t) = f_ext(t) − B(x, ẋ) − m·a(t)`. Fitting
//! the stiffness library to `K` sample-wise closes the equation of motion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lsq::{scaled_condition, solve_scaled_ls};
use crate::model::{validate_library, BasisTerm, ModelSpec, Trajectory};
use crate::phase1::CONDITION_WARN_THRESHOLD;
use crate::signal::SampledSignal;

/// The leftover conservative force `K(t)` with its aligned displacement.
#[derive(Debug, Clone)]
pub struct ConservativeForceSeries {
    k: SampledSignal,
    x: SampledSignal,
}

impl ConservativeForceSeries {
    pub fn new(k: SampledSignal, x: SampledSignal) -> Result<Self> {
        if k.len() != x.len() || (k.t0() - x.t0()).abs() > 1e-12 || (k.dt() - x.dt()).abs() > 1e-15 {
            return Err(Error::InvalidSignal(
                "conservative force and displacement must share the time axis".to_string(),
            ));
        }
        Ok(Self { k, x })
    }

    pub fn k(&self) -> &SampledSignal {
        &self.k
    }

    pub fn x(&self) -> &SampledSignal {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires len >= 2
    }

    pub fn max_abs_force(&self) -> f64 {
        self.k.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Drops all samples before `t_start` (used to exclude the excitation
    /// window that Phase 1's crossing selection trimmed).
    pub fn trimmed_from(&self, t_start: f64) -> Result<Self> {
        let first = ((t_start - self.k.t0()) / self.k.dt()).ceil().max(0.0) as usize;
        if first + 2 > self.len() {
            return Err(Error::SignalTooShort { len: self.len(), needed: first + 2 });
        }
        let t0 = self.k.time(first);
        Ok(Self {
            k: SampledSignal::new(t0, self.k.dt(), self.k.values()[first..].to_vec())?,
            x: SampledSignal::new(t0, self.x.dt(), self.x.values()[first..].to_vec())?,
        })
    }
}

/// Computes `K(t) = f_ext(t) − B(x(t), ẋ(t)) − mass·a(t)` pointwise.
///
/// `damping` is the identified damping model (may be empty for an undamped
/// system). Requires the acceleration channel.
pub fn conservative_force(
    traj: &Trajectory,
    damping: &[(BasisTerm, f64)],
) -> Result<ConservativeForceSeries> {
    let a = traj.a().ok_or(Error::MissingAcceleration)?;
    for (term, c) in damping {
        term.validate()?;
        if !c.is_finite() {
            return Err(Error::InvalidModel(format!("non-finite coefficient for {term}")));
        }
    }
    let xs = traj.x().values();
    let vs = traj.v().values();
    let fs = traj.f_ext().values();
    let m = traj.mass();
    let k: Vec<f64> = (0..traj.len())
        .map(|i| {
            let b: f64 = damping.iter().map(|(t, c)| c * t.eval(xs[i], vs[i])).sum();
            fs[i] - b - m * a.values()[i]
        })
        .collect();
    ConservativeForceSeries::new(
        SampledSignal::new(traj.t0(), traj.dt(), k)?,
        traj.x().clone(),
    )
}

/// The assembled stiffness regression `Θ k = K`.
#[derive(Debug, Clone)]
pub struct Phase2System {
    /// `T x P`: row t, column j holds `θ_j(x_t)`.
    pub theta: DMatrix<f64>,
    /// `T`: conservative-force samples.
    pub target: DVector<f64>,
    /// The P stiffness candidates, column order.
    pub library: Vec<BasisTerm>,
    /// 2-norm condition estimate of the column-scaled `Θ`.
    pub condition_estimate: f64,
}

/// Builds the sample-wise stiffness regression from a conservative-force
/// series (every sample is a row).
pub fn assemble_phase2(
    series: &ConservativeForceSeries,
    library: &[BasisTerm],
) -> Result<Phase2System> {
    validate_library(library, BasisTerm::is_displacement_only, "stiffness")?;
    let xs = series.x.values();
    let theta = DMatrix::from_fn(series.len(), library.len(), |t, j| library[j].eval(xs[t], 0.0));
    let target = DVector::from_column_slice(series.k.values());
    let condition_estimate = scaled_condition(&theta);
    Ok(Phase2System { theta, target, library: library.to_vec(), condition_estimate })
}

/// One restoring-force sample for plotting `K` against `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestoringForcePoint {
    pub x: f64,
    pub k_data: f64,
    pub k_model: f64,
}

/// Identified stiffness model with fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessFit {
    pub coefficients: Vec<(BasisTerm, f64)>,
    pub residual_norm: f64,
    /// `||Θ k − K|| / ||K||`.
    pub relative_residual: f64,
    pub condition_estimate: f64,
    pub warnings: Vec<String>,
    /// Thinned `(x, K_data, K_model)` triples for restoring-force plots.
    pub restoring_force: Vec<RestoringForcePoint>,
}

/// Maximum number of restoring-force triples kept in a fit report.
const RESTORING_FORCE_POINTS: usize = 2000;

/// Solves the Phase-2 regression over all samples of the series.
pub fn identify_stiffness(
    series: &ConservativeForceSeries,
    library: &[BasisTerm],
) -> Result<StiffnessFit> {
    let system = assemble_phase2(series, library)?;
    let mut warnings = Vec::new();
    if system.theta.nrows() < system.theta.ncols() {
        warnings.push(format!(
            "underdetermined system: {} samples for {} candidates (minimum-norm solution)",
            system.theta.nrows(),
            library.len()
        ));
    }
    if system.condition_estimate > CONDITION_WARN_THRESHOLD {
        warnings.push(format!(
            "ill-conditioned system: condition estimate {:.3e}",
            system.condition_estimate
        ));
    }
    let sol = solve_scaled_ls(&system.theta, &system.target)?;
    let coefficients: Vec<(BasisTerm, f64)> =
        library.iter().copied().zip(sol.coefficients.iter().copied()).collect();

    let k_vec = DVector::from_vec(sol.coefficients.clone());
    let model = &system.theta * &k_vec;
    let stride = series.len().div_ceil(RESTORING_FORCE_POINTS).max(1);
    let restoring_force: Vec<RestoringForcePoint> = (0..series.len())
        .step_by(stride)
        .map(|t| RestoringForcePoint {
            x: series.x.values()[t],
            k_data: system.target[t],
            k_model: model[t],
        })
        .collect();
    let t_norm = system.target.norm();
    Ok(StiffnessFit {
        coefficients,
        residual_norm: sol.residual_norm,
        relative_residual: if t_norm > 0.0 { sol.residual_norm / t_norm } else { sol.residual_norm },
        condition_estimate: system.condition_estimate,
        warnings,
        restoring_force,
    })
}

/// Assembles the identified EOM from its parts.
pub fn compose_model(
    mass: f64,
    damping: Vec<(BasisTerm, f64)>,
    stiffness: Vec<(BasisTerm, f64)>,
) -> Result<ModelSpec> {
    ModelSpec::new(mass, damping, stiffness)
}

/// Weighted basis terms as `(term, coefficient)` pairs.
pub type WeightedTerms = Vec<(BasisTerm, f64)>;

/// Inverse of `compose_model`.
pub fn decompose_model(spec: &ModelSpec) -> (f64, WeightedTerms, WeightedTerms) {
    (spec.mass(), spec.damping_terms().to_vec(), spec.stiffness_terms().to_vec())
}

/// Grid search over the clearance parameter: fits `build(e)` for each
/// candidate `e` and returns the clearance minimizing the fit residual.
/// Off the default path — the clearance is normally known by design.
pub fn search_clearance(
    series: &ConservativeForceSeries,
    grid: &[f64],
    build: impl Fn(f64) -> Vec<BasisTerm>,
) -> Result<(f64, StiffnessFit)> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("clearance grid is empty".to_string()));
    }
    let mut best: Option<(f64, StiffnessFit)> = None;
    for &e in grid {
        let fit = identify_stiffness(series, &build(e))?;
        if best.as_ref().is_none_or(|(_, b)| fit.residual_norm < b.residual_norm) {
            best = Some((e, fit));
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase1::{coefficient_of, crossings_for, identify_damping};
    use crate::sim::{simulate, SimConfig};
    use crate::signal::rms;
    use crate::testutil::*;
    use approx::assert_relative_eq;

    /// Full mEDDI chain on the benchmark: Phase-1 damping, then the
    /// conservative force trimmed from gamma_0.
    fn benchmark_meddi_fit() -> &'static StiffnessFit {
        static FIT: std::sync::OnceLock<StiffnessFit> = std::sync::OnceLock::new();
        FIT.get_or_init(|| {
            let traj = benchmark_trajectory();
            let crossings = crossings_for(traj).unwrap();
            let damping =
                identify_damping(traj, &crossings, &benchmark_damping_library()).unwrap();
            let series = conservative_force(traj, &damping.coefficients)
                .unwrap()
                .trimmed_from(crossings.gammas()[0])
                .unwrap();
            identify_stiffness(&series, &benchmark_stiffness_library()).unwrap()
        })
    }

    #[test]
    fn undamped_linear_force_balance() {
        let spec = ModelSpec::new(1.0, vec![], vec![(BasisTerm::DispPower(1), 10.0)]).unwrap();
        let traj = simulate(&spec, &SimConfig::new((0.0, 5.0), 2000.0, (1.0, 0.0))).unwrap();
        let series = conservative_force(&traj, &[]).unwrap();
        let max_k = series.max_abs_force();
        for (k, x) in series.k().values().iter().zip(series.x().values()) {
            assert!((k - 10.0 * x).abs() < 1e-10 * max_k);
        }
    }

    #[test]
    fn conservative_force_vanishes_at_crossings() {
        let traj = benchmark_trajectory();
        let crossings = crossings_for(traj).unwrap();
        let series = conservative_force(traj, benchmark_model().damping_terms()).unwrap();
        let max_k = series.max_abs_force();
        for &g in crossings.gammas() {
            assert!(series.k().sample_linear(g).abs() < 1e-3 * max_k);
        }
    }

    #[test]
    fn force_balance_closure_with_true_damping() {
        let traj = benchmark_trajectory();
        let series = conservative_force(traj, benchmark_model().damping_terms()).unwrap();
        let xs = traj.x().values();
        let err: Vec<f64> = series
            .k()
            .values()
            .iter()
            .zip(xs)
            .map(|(k, &x)| k - benchmark_model().stiffness_force(x))
            .collect();
        let k_true: Vec<f64> =
            xs.iter().map(|&x| benchmark_model().stiffness_force(x)).collect();
        assert!(rms(&err) / rms(&k_true) < 1e-3);
    }

    #[test]
    fn restoring_force_shows_clearance_slope_change() {
        let fit = benchmark_meddi_fit();
        // least-squares slope of K vs x inside and outside the clearance band
        let slope = |pts: &[(f64, f64)]| {
            let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
            let sxy: f64 = pts.iter().map(|(x, k)| x * k).sum();
            sxy / sxx
        };
        let inner: Vec<(f64, f64)> = fit
            .restoring_force
            .iter()
            .filter(|p| p.x.abs() < 0.8 * 0.005)
            .map(|p| (p.x, p.k_data))
            .collect();
        let outer: Vec<(f64, f64)> = fit
            .restoring_force
            .iter()
            .filter(|p| p.x.abs() > 1.2 * 0.005)
            .map(|p| (p.x, p.k_data))
            .collect();
        assert!(inner.len() > 20 && outer.len() > 20);
        let (si, so) = (slope(&inner), slope(&outer));
        // inside the band the secant slope is the linear stiffness; outside
        // it is diluted toward k1 + k7 by the (1 - e/|x|) clearance factor
        assert!((35.0..45.0).contains(&si), "inner slope {si}");
        assert!(so > si + 80.0, "inner slope {si}, outer slope {so}");
    }

    #[test]
    fn reproduces_benchmark_stiffness_table() {
        let fit = benchmark_meddi_fit();
        let c = |t: &BasisTerm| coefficient_of(&fit.coefficients, t).unwrap();
        let k1 = c(&BasisTerm::DispPower(1));
        let k3 = c(&BasisTerm::DispPower(3));
        let k7 = c(&BasisTerm::ClearanceSpringTwoSided { clearance: 0.005 });
        assert_relative_eq!(k1, 40.0, max_relative = 0.005);
        assert_relative_eq!(k3, 5000.0, max_relative = 0.02);
        assert_relative_eq!(k7, 200.0, max_relative = 0.005);

        // extraneous terms may be nonzero but must stay dynamically
        // negligible over the observed displacement range
        let extraneous = [
            BasisTerm::DispPower(2),
            BasisTerm::DispPower(4),
            BasisTerm::DispPower(5),
            BasisTerm::ClearanceSpringOneSided { clearance: 0.005 },
        ];
        let max_k: f64 = (0..=400)
            .map(|i| -0.02 + i as f64 * 1e-4)
            .map(|x| benchmark_model().stiffness_force(x).abs())
            .fold(0.0, f64::max);
        let junk_max: f64 = (0..=400)
            .map(|i| -0.02 + i as f64 * 1e-4)
            .map(|x| {
                extraneous
                    .iter()
                    .map(|t| c(t) * t.eval(x, 0.0))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        assert!(junk_max < 0.02 * max_k, "junk {junk_max:.4e} vs max|K| {max_k:.4e}");

        // the generating system is odd: even powers specifically stay
        // below 1% of max |K|
        let even_max: f64 = (0..=400)
            .map(|i| -0.02 + i as f64 * 1e-4)
            .map(|x| {
                (c(&BasisTerm::DispPower(2)) * x.powi(2)
                    + c(&BasisTerm::DispPower(4)) * x.powi(4))
                .abs()
            })
            .fold(0.0, f64::max);
        assert!(even_max < 0.01 * max_k);
        assert!(fit.warnings.is_empty(), "{:?}", fit.warnings);
    }

    #[test]
    fn exact_linear_target_recovers_k1_only() {
        let n = 4000;
        let dt = 1e-3;
        let xs: Vec<f64> =
            (0..n).map(|i| 0.5 * (-0.3 * i as f64 * dt).exp() * (7.0 * i as f64 * dt).sin()).collect();
        let ks: Vec<f64> = xs.iter().map(|x| 40.0 * x).collect();
        let series = ConservativeForceSeries::new(
            SampledSignal::new(0.0, dt, ks).unwrap(),
            SampledSignal::new(0.0, dt, xs).unwrap(),
        )
        .unwrap();
        let library = [
            BasisTerm::DispPower(1),
            BasisTerm::DispPower(2),
            BasisTerm::DispPower(3),
            BasisTerm::DispPower(4),
            BasisTerm::DispPower(5),
            BasisTerm::ClearanceSpringOneSided { clearance: 0.05 },
            BasisTerm::ClearanceSpringTwoSided { clearance: 0.05 },
        ];
        let fit = identify_stiffness(&series, &library).unwrap();
        for (term, c) in &fit.coefficients {
            match term {
                BasisTerm::DispPower(1) => assert_relative_eq!(*c, 40.0, max_relative = 1e-10),
                _ => assert!(c.abs() < 1e-8, "{term} = {c:e}"),
            }
        }
        assert!(fit.relative_residual < 1e-12);
    }

    #[test]
    fn recovers_experimental_style_stiffness() {
        // synthetic mirror of the experimental rig's identified EOM
        let e = 0.00535;
        let spec = ModelSpec::new(
            0.088,
            vec![
                (BasisTerm::VelPower(1), 0.056),
                (BasisTerm::VelGateTwoSided { clearance: e }, 0.146),
            ],
            vec![
                (BasisTerm::DispPower(1), 33.7),
                (BasisTerm::DispPower(2), 145.5),
                (BasisTerm::DispPower(3), 1.83e5),
                (BasisTerm::ClearanceSpringTwoSided { clearance: e }, 195.8),
            ],
        )
        .unwrap();
        let traj = simulate(&spec, &SimConfig::new((0.0, 10.0), 19_200.0, (0.0, 0.5))).unwrap();
        let series = conservative_force(&traj, spec.damping_terms()).unwrap();
        let library = [
            BasisTerm::DispPower(1),
            BasisTerm::DispPower(2),
            BasisTerm::DispPower(3),
            BasisTerm::ClearanceSpringTwoSided { clearance: e },
        ];
        let fit = identify_stiffness(&series, &library).unwrap();
        let c = |t: &BasisTerm| coefficient_of(&fit.coefficients, t).unwrap();
        assert_relative_eq!(c(&BasisTerm::DispPower(1)), 33.7, max_relative = 0.03);
        assert_relative_eq!(c(&BasisTerm::DispPower(2)), 145.5, max_relative = 0.03);
        assert_relative_eq!(c(&BasisTerm::DispPower(3)), 1.83e5, max_relative = 0.03);
        assert_relative_eq!(
            c(&BasisTerm::ClearanceSpringTwoSided { clearance: e }),
            195.8,
            max_relative = 0.03
        );
    }

    #[test]
    fn compose_round_trip() {
        let spec = benchmark_model();
        let (m, d, k) = decompose_model(&spec);
        let composed = compose_model(m, d, k).unwrap();
        assert_eq!(composed.mass(), spec.mass());
        assert_eq!(composed.damping_terms(), spec.damping_terms());
        assert_eq!(composed.stiffness_terms(), spec.stiffness_terms());
    }

    #[test]
    fn compose_empty_lists_is_free_mass() {
        let spec = compose_model(2.0, vec![], vec![]).unwrap();
        assert_eq!(spec.damping_force(0.1, 0.2), 0.0);
        assert_eq!(spec.stiffness_force(0.1), 0.0);
    }

    #[test]
    fn clearance_search_finds_true_clearance() {
        let traj = benchmark_trajectory();
        let series = conservative_force(traj, benchmark_model().damping_terms()).unwrap();
        let grid = [0.003, 0.004, 0.005, 0.006, 0.007];
        let (e_best, _) = search_clearance(&series, &grid, |e| {
            vec![
                BasisTerm::DispPower(1),
                BasisTerm::DispPower(3),
                BasisTerm::ClearanceSpringTwoSided { clearance: e },
            ]
        })
        .unwrap();
        assert_eq!(e_best, 0.005);
    }

    #[test]
    fn missing_acceleration_is_rejected() {
        let traj = benchmark_trajectory();
        let stripped = Trajectory::new(
            traj.x().clone(),
            traj.v().clone(),
            None,
            traj.f_ext().clone(),
            traj.mass(),
        )
        .unwrap();
        assert!(matches!(
            conservative_force(&stripped, &[]),
            Err(Error::MissingAcceleration)
        ));
    }

    #[test]
    fn trimming_drops_leading_samples() {
        let k = SampledSignal::new(0.0, 0.1, (0..50).map(|i| i as f64).collect()).unwrap();
        let x = SampledSignal::new(0.0, 0.1, vec![0.01; 50]).unwrap();
        let series = ConservativeForceSeries::new(k, x).unwrap();
        let trimmed = series.trimmed_from(1.0).unwrap();
        assert_eq!(trimmed.len(), 40);
        assert_relative_eq!(trimmed.k().t0(), 1.0, max_relative = 1e-12);
        assert_eq!(trimmed.k().values()[0], 10.0);
        assert!(series.trimmed_from(4.95).is_err());
    }

    #[test]
    fn rejects_velocity_terms_in_stiffness_library() {
        let traj = benchmark_trajectory();
        let series = conservative_force(traj, benchmark_model().damping_terms()).unwrap();
        assert!(identify_stiffness(&series, &[BasisTerm::VelPower(1)]).is_err());
        assert!(matches!(
            identify_stiffness(&series, &[]),
            Err(Error::EmptyLibrary)
        ));
    }
}
