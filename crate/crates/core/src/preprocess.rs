//! Signal preprocessing: zero-crossing detection, cumulative integration,
//! zero-phase Butterworth high-pass filtering, state reconstruction from
//! acceleration, and energy bookkeeping.
//!
//! The energy method hinges on the displacement zero crossings gamma_i, where
//! potential energy vanishes and mechanical energy equals kinetic energy.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BasisTerm, ModelSpec, Trajectory};
use crate::signal::SampledSignal;

/// Interpolated displacement zero crossings with kinetic energies.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingSet {
    gammas: Vec<f64>,
    v_at_gamma: Vec<f64>,
    t_at_gamma: Vec<f64>,
    mass: f64,
}

impl CrossingSet {
    /// Crossing instants, strictly increasing.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Interpolated velocity at each crossing.
    pub fn v_at_gamma(&self) -> &[f64] {
        &self.v_at_gamma
    }

    /// Kinetic energy `T(gamma_i) = m v(gamma_i)^2 / 2`.
    pub fn t_at_gamma(&self) -> &[f64] {
        &self.t_at_gamma
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Trimming rules applied before identification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingOptions {
    /// Crossings are kept only after `|f_ext|` last exceeds this fraction of
    /// `max|f_ext|` (restricts Phase 1 to the free-decay regime).
    pub forcing_threshold: f64,
    /// Crossings with `T(gamma_i) < energy_floor * T(gamma_0)` and everything
    /// after them are dropped (noise-dominated rows).
    pub energy_floor: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self { forcing_threshold: 1e-3, energy_floor: 1e-6 }
    }
}

/// Locates displacement zero crossings by linear interpolation between
/// samples of opposite sign. An exact zero at an interior sample counts as a
/// crossing iff its neighbors have opposite signs; an exact zero at a record
/// boundary counts iff its single neighbor is nonzero (a record that starts
/// at `x = 0` with nonzero velocity starts at a crossing). Touching zero
/// without a sign change is excluded.
pub fn find_zero_crossings(
    x: &SampledSignal,
    v: &SampledSignal,
    mass: f64,
) -> Result<CrossingSet> {
    if x.len() != v.len() || (x.t0() - v.t0()).abs() > 1e-12 || (x.dt() - v.dt()).abs() > 1e-12 * x.dt() {
        return Err(Error::InvalidSignal("x and v are not aligned".to_string()));
    }
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidModel(format!("mass must be positive, got {mass}")));
    }
    let xs = x.values();
    let n = xs.len();
    let mut gammas = Vec::new();
    let mut v_at = Vec::new();
    for i in 0..n {
        if xs[i] == 0.0 {
            let crossing = if i == 0 {
                xs[1] != 0.0
            } else if i == n - 1 {
                xs[n - 2] != 0.0
            } else {
                xs[i - 1] * xs[i + 1] < 0.0
            };
            if crossing {
                gammas.push(x.time(i));
                v_at.push(v.values()[i]);
            }
        } else if i + 1 < n && xs[i] * xs[i + 1] < 0.0 {
            let frac = xs[i] / (xs[i] - xs[i + 1]);
            gammas.push(x.time(i) + frac * x.dt());
            v_at.push(v.values()[i] + frac * (v.values()[i + 1] - v.values()[i]));
        }
    }
    if gammas.len() < 2 {
        return Err(Error::NoCrossings);
    }
    let t_at = v_at.iter().map(|&vi| 0.5 * mass * vi * vi).collect();
    Ok(CrossingSet { gammas, v_at_gamma: v_at, t_at_gamma: t_at, mass })
}

/// Applies the forcing-window and energy-floor trims of [`CrossingOptions`].
pub fn select_crossings(
    crossings: &CrossingSet,
    f_ext: &SampledSignal,
    opts: &CrossingOptions,
) -> Result<CrossingSet> {
    let f_max = f_ext.values().iter().fold(0.0f64, |m, &f| m.max(f.abs()));
    let mut start_time = f64::NEG_INFINITY;
    if f_max > 0.0 {
        let thr = opts.forcing_threshold * f_max;
        for (i, &f) in f_ext.values().iter().enumerate() {
            if f.abs() >= thr {
                start_time = f_ext.time(i);
            }
        }
    }
    let mut gammas = Vec::new();
    let mut v_at = Vec::new();
    for (i, &g) in crossings.gammas.iter().enumerate() {
        if g > start_time {
            gammas.push(g);
            v_at.push(crossings.v_at_gamma[i]);
        }
    }
    if gammas.len() < 2 {
        return Err(Error::NoCrossings);
    }
    let t0 = 0.5 * crossings.mass * v_at[0] * v_at[0];
    let floor = opts.energy_floor * t0;
    let mut keep = gammas.len();
    for (i, &vi) in v_at.iter().enumerate() {
        if 0.5 * crossings.mass * vi * vi < floor {
            keep = i;
            break;
        }
    }
    gammas.truncate(keep);
    v_at.truncate(keep);
    if gammas.len() < 2 {
        return Err(Error::NoCrossings);
    }
    let t_at = v_at.iter().map(|&vi| 0.5 * crossings.mass * vi * vi).collect();
    Ok(CrossingSet { gammas, v_at_gamma: v_at, t_at_gamma: t_at, mass: crossings.mass })
}

/// Cumulative trapezoidal integral; same grid, first value 0.
pub fn cumulative_integral(y: &SampledSignal) -> SampledSignal {
    let vals = y.values();
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in vals.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * y.dt();
        out.push(acc);
    }
    SampledSignal::new(y.t0(), y.dt(), out).expect("grid unchanged")
}

/// High-pass filter settings of the preprocessing recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub order: usize,
    pub cutoff_hz: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self { order: 3, cutoff_hz: 1.5 }
    }
}

/// Digital Butterworth high-pass coefficients `(b, a)` in `z^-1` powers,
/// via the analog prototype, LP->HP transform, and bilinear transform with
/// frequency prewarping.
fn butter_highpass_coeffs(order: usize, cutoff_hz: f64, fs: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > 8 {
        return Err(Error::InvalidConfig(format!("filter order must be in 1..=8, got {order}")));
    }
    let nyquist = 0.5 * fs;
    if !cutoff_hz.is_finite() || cutoff_hz <= 0.0 || cutoff_hz >= nyquist {
        return Err(Error::CutoffOutOfRange { cutoff_hz, nyquist_hz: nyquist });
    }
    // analog Butterworth prototype poles on the unit circle, left half-plane
    let n = order as i32;
    let wc = 2.0 * fs * (PI * cutoff_hz / fs).tan();
    let analog_poles: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = PI * (2 * k as i32 + n + 1) as f64 / (2 * n) as f64;
            // LP(1 rad/s) -> HP(wc): p -> wc / p
            Complex64::new(wc, 0.0) / Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    // bilinear transform; the n analog zeros at s = 0 map to z = 1
    let fs2 = Complex64::new(2.0 * fs, 0.0);
    let digital_poles: Vec<Complex64> =
        analog_poles.iter().map(|&p| (fs2 + p) / (fs2 - p)).collect();
    let mut gain = Complex64::new(1.0, 0.0);
    for &p in &analog_poles {
        gain *= fs2 / (fs2 - p);
    }
    let b: Vec<f64> = poly_from_roots(&vec![Complex64::new(1.0, 0.0); order])
        .into_iter()
        .map(|c| c * gain.re)
        .collect();
    let a = poly_from_roots(&digital_poles);
    Ok((b, a))
}

/// Real coefficients of `prod (z - r_i)`, highest power first, leading 1.
fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        c.push(Complex64::new(0.0, 0.0));
        for i in (1..c.len()).rev() {
            let lower = c[i - 1];
            c[i] -= r * lower;
        }
    }
    c.into_iter().map(|z| z.re).collect()
}

/// Largest digital pole radius, for settling-length estimates.
fn max_pole_radius(a: &[f64]) -> f64 {
    // roots of the denominator via the companion-matrix eigenvalues
    let n = a.len() - 1;
    let mut comp = DMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -a[j + 1];
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Direct form II transposed IIR filter with initial state `zi * x[0]`.
fn lfilter(b: &[f64], a: &[f64], x: &[f64], zi: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut z: Vec<f64> = zi.iter().map(|&s| s * x[0]).collect();
    let mut out = Vec::with_capacity(x.len());
    for &xi in x {
        let yi = b[0] * xi + z[0];
        for j in 0..n - 2 {
            z[j] = b[j + 1] * xi + z[j + 1] - a[j + 1] * yi;
        }
        z[n - 2] = b[n - 1] * xi - a[n - 1] * yi;
        out.push(yi);
    }
    out
}

/// Steady-state filter state per unit step input, so a constant input
/// produces its steady-state output from the first sample (no startup
/// transient on the padding).
fn lfilter_zi(b: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    let n = a.len() - 1;
    let mut m = DMatrix::identity(n, n);
    for j in 0..n {
        m[(j, 0)] += a[j + 1];
    }
    for i in 1..n {
        m[(i - 1, i)] -= 1.0;
    }
    let rhs = DVector::from_iterator(n, (0..n).map(|j| b[j + 1] - a[j + 1] * b[0]));
    let zi = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidConfig("degenerate filter state equations".to_string()))?;
    Ok(zi.iter().copied().collect())
}

/// Zero-phase (forward-backward) digital Butterworth high-pass.
///
/// The record is extended on both ends by odd reflection over three times the
/// filter's 1%-settling length before the two passes; the extension is
/// discarded afterward. Passband gain is ~1 (squared magnitude response),
/// phase distortion cancels exactly.
pub fn butterworth_highpass(
    y: &SampledSignal,
    order: usize,
    cutoff_hz: f64,
) -> Result<SampledSignal> {
    let (b, a) = butter_highpass_coeffs(order, cutoff_hz, y.rate())?;
    let r = max_pole_radius(&a);
    if r >= 1.0 {
        return Err(Error::InvalidConfig(format!("unstable filter design (pole radius {r})")));
    }
    let settle = (0.01f64.ln() / r.ln()).ceil() as usize;
    let padlen = (3 * settle).max(3 * (order + 1));
    if y.len() <= padlen {
        return Err(Error::SignalTooShort { len: y.len(), needed: padlen + 1 });
    }
    let x = y.values();
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * padlen);
    for j in (1..=padlen).rev() {
        ext.push(2.0 * x[0] - x[j]);
    }
    ext.extend_from_slice(x);
    for j in 1..=padlen {
        ext.push(2.0 * x[n - 1] - x[n - 1 - j]);
    }

    let zi = lfilter_zi(&b, &a)?;
    let mut fwd = lfilter(&b, &a, &ext, &zi);
    fwd.reverse();
    let mut back = lfilter(&b, &a, &fwd, &zi);
    back.reverse();
    let out = back[padlen..padlen + n].to_vec();
    SampledSignal::new(y.t0(), y.dt(), out)
}

/// Reconstructs displacement and velocity from a measured acceleration
/// channel: `v = highpass(integral(a))` then `x = highpass(integral(v))`,
/// in that order. The returned trajectory carries the input acceleration and
/// a zero external-force channel (free decay).
///
/// Each integral is demeaned before filtering. The unknown integration
/// constant (`-v(t0)`, then `-x(t0)`) is pure DC — stopband content either
/// way — but the odd-reflection padding mirrors it with opposite sign, and
/// the filter's response to that step at the pad junction rings a settle
/// length into the record. Removing the mean first removes the step.
pub fn reconstruct_states(a: &SampledSignal, mass: f64) -> Result<Trajectory> {
    reconstruct_states_with(a, mass, &FilterSpec::default())
}

fn demeaned(y: SampledSignal) -> SampledSignal {
    let mean = y.values().iter().sum::<f64>() / y.len() as f64;
    let vals = y.values().iter().map(|&v| v - mean).collect();
    SampledSignal::new(y.t0(), y.dt(), vals).expect("grid unchanged")
}

pub fn reconstruct_states_with(
    a: &SampledSignal,
    mass: f64,
    filter: &FilterSpec,
) -> Result<Trajectory> {
    let v = butterworth_highpass(&demeaned(cumulative_integral(a)), filter.order, filter.cutoff_hz)?;
    let x = butterworth_highpass(&demeaned(cumulative_integral(&v)), filter.order, filter.cutoff_hz)?;
    let f_ext = SampledSignal::new(a.t0(), a.dt(), vec![0.0; a.len()])?;
    Trajectory::new(x, v, Some(a.clone()), f_ext, mass)
}

/// Kinetic, dissipated, and mechanical energy series of a trajectory under a
/// damping model.
///
/// `D(t)` is the cumulative integral of `v * B(x, v)` from the record start;
/// `E(t) = T(gamma0) + D(gamma0) - D(t)`, so `E(gamma0) = T(gamma0)` (at a
/// crossing all mechanical energy is kinetic).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub kinetic: SampledSignal,
    pub dissipated: SampledSignal,
    pub mechanical: SampledSignal,
}

pub fn dissipated_energy_of_model(
    traj: &Trajectory,
    damping: &[(BasisTerm, f64)],
    gamma0: f64,
) -> Result<EnergyTrace> {
    if gamma0 < traj.t0() - 1e-12 || gamma0 > traj.x().t_end() + 1e-12 {
        return Err(Error::InvalidSignal(format!("gamma0 = {gamma0} outside the record")));
    }
    let spec = ModelSpec::new(traj.mass(), damping.to_vec(), vec![])?;
    let xs = traj.x().values();
    let vs = traj.v().values();
    let power: Vec<f64> = (0..traj.len()).map(|i| vs[i] * spec.damping_force(xs[i], vs[i])).collect();
    let power = SampledSignal::new(traj.t0(), traj.dt(), power)?;
    let dissipated = cumulative_integral(&power);

    let kinetic_vals: Vec<f64> = vs.iter().map(|&v| 0.5 * traj.mass() * v * v).collect();
    let kinetic = SampledSignal::new(traj.t0(), traj.dt(), kinetic_vals)?;
    let t_g0 = kinetic.sample_linear(gamma0);
    let d_g0 = dissipated.sample_linear(gamma0);
    let mech_vals: Vec<f64> =
        dissipated.values().iter().map(|&d| t_g0 + d_g0 - d).collect();
    let mechanical = SampledSignal::new(traj.t0(), traj.dt(), mech_vals)?;
    Ok(EnergyTrace { kinetic, dissipated, mechanical })
}
