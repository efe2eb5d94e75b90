//! Oscillator models and candidate basis terms.
//!
//! A single-degree-of-freedom oscillator is written as
//!
//! ```text
//! m*a + B(x, v, e) + K(x, e) = f_ext(t)
//! ```
//!
//! where `B` collects the non-conservative (damping) force terms and `K` the
//! conservative (stiffness) terms. Both are linear combinations of candidate
//! basis terms so that identification reduces to linear regression.

use std::fmt;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// A candidate force-shape function of the state `(x, v)`.
///
/// Clearance-gated kinds use the Heaviside step with the convention `H(0) = 0`,
/// so every gated term is exactly zero on the closed band where its gate
/// argument is non-positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisTerm {
    /// `x^i`, `i >= 1`.
    DispPower(u32),
    /// `v^j`, `j >= 1`.
    VelPower(u32),
    /// `x^2 * v`, the transverse-damper coupling term.
    MixedDispSqVel,
    /// `v * H(x - e)`: damping active only past the positive-side gap.
    VelGateOneSided { clearance: f64 },
    /// `v * H(|x| - e)`: damping active outside the symmetric gap.
    VelGateTwoSided { clearance: f64 },
    /// `(x - e) * H(x - e)`: one-sided contact spring, continuous at `x = e`.
    ClearanceSpringOneSided { clearance: f64 },
    /// `(|x| - e) * sgn(x) * H(|x| - e)`: symmetric contact spring.
    ClearanceSpringTwoSided { clearance: f64 },
}

/// Heaviside step with `H(arg <= 0) = 0`.
#[inline]
fn gate(arg: f64) -> f64 {
    if arg > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl BasisTerm {
    /// Checks the kind-specific invariants (power >= 1, clearance > 0).
    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisTerm::DispPower(i) | BasisTerm::VelPower(i) => {
                if i == 0 {
                    return Err(Error::InvalidModel("power must be >= 1".to_string()));
                }
            }
            BasisTerm::MixedDispSqVel => {}
            BasisTerm::VelGateOneSided { clearance }
            | BasisTerm::VelGateTwoSided { clearance }
            | BasisTerm::ClearanceSpringOneSided { clearance }
            | BasisTerm::ClearanceSpringTwoSided { clearance } => {
                if !clearance.is_finite() || clearance <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "clearance must be positive and finite, got {clearance}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the term shape at a state. Pure, total on finite inputs.
    #[inline]
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        match *self {
            BasisTerm::DispPower(i) => x.powi(i as i32),
            BasisTerm::VelPower(j) => v.powi(j as i32),
            BasisTerm::MixedDispSqVel => x * x * v,
            BasisTerm::VelGateOneSided { clearance } => v * gate(x - clearance),
            BasisTerm::VelGateTwoSided { clearance } => v * gate(x.abs() - clearance),
            BasisTerm::ClearanceSpringOneSided { clearance } => {
                (x - clearance) * gate(x - clearance)
            }
            BasisTerm::ClearanceSpringTwoSided { clearance } => {
                (x.abs() - clearance) * x.signum() * gate(x.abs() - clearance)
            }
        }
    }

    /// Whether the term depends on velocity (and is therefore a damping candidate).
    pub fn involves_velocity(&self) -> bool {
        matches!(
            self,
            BasisTerm::VelPower(_)
                | BasisTerm::MixedDispSqVel
                | BasisTerm::VelGateOneSided { .. }
                | BasisTerm::VelGateTwoSided { .. }
        )
    }

    /// Whether the term is a pure function of displacement (a stiffness candidate).
    pub fn is_displacement_only(&self) -> bool {
        !self.involves_velocity()
    }

    /// Antiderivative of a stiffness term: the potential energy stored at
    /// displacement `x`, with the zero of potential at `x = 0`.
    ///
    /// Returns `None` for velocity-dependent kinds.
    pub fn potential(&self, x: f64) -> Option<f64> {
        match *self {
            BasisTerm::DispPower(i) => Some(x.powi(i as i32 + 1) / (i as f64 + 1.0)),
            BasisTerm::ClearanceSpringOneSided { clearance } => {
                let d = x - clearance;
                Some(0.5 * d * d * gate(d))
            }
            BasisTerm::ClearanceSpringTwoSided { clearance } => {
                let d = x.abs() - clearance;
                Some(0.5 * d * d * gate(d))
            }
            _ => None,
        }
    }

    /// Coefficient unit for this term used as a damping candidate, SI.
    pub fn damping_unit(&self) -> String {
        match *self {
            BasisTerm::VelPower(1) => "N*s/m".to_string(),
            BasisTerm::VelPower(j) => format!("N*s^{j}/m^{j}"),
            BasisTerm::MixedDispSqVel => "N*s/m^3".to_string(),
            _ => "N*s/m".to_string(),
        }
    }

    /// Coefficient unit for this term used as a stiffness candidate, SI.
    pub fn stiffness_unit(&self) -> String {
        match *self {
            BasisTerm::DispPower(1) => "N/m".to_string(),
            BasisTerm::DispPower(i) => format!("N/m^{i}"),
            _ => "N/m".to_string(),
        }
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisTerm::DispPower(1) => write!(f, "x"),
            BasisTerm::DispPower(i) => write!(f, "x^{i}"),
            BasisTerm::VelPower(1) => write!(f, "v"),
            BasisTerm::VelPower(j) => write!(f, "v^{j}"),
            BasisTerm::MixedDispSqVel => write!(f, "x^2*v"),
            BasisTerm::VelGateOneSided { .. } => write!(f, "v*H(x-e)"),
            BasisTerm::VelGateTwoSided { .. } => write!(f, "v*H(|x|-e)"),
            BasisTerm::ClearanceSpringOneSided { .. } => write!(f, "(x-e)*H(x-e)"),
            BasisTerm::ClearanceSpringTwoSided { .. } => write!(f, "(|x|-e)*sgn(x)*H(|x|-e)"),
        }
    }
}

/// Validates a candidate library: non-empty, valid terms, no duplicates, and
/// every term passing the `accept` predicate.
pub(crate) fn validate_library(
    terms: &[BasisTerm],
    accept: impl Fn(&BasisTerm) -> bool,
    role: &str,
) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    for (i, term) in terms.iter().enumerate() {
        term.validate()?;
        if !accept(term) {
            return Err(Error::InvalidModel(format!("{term} is not a valid {role} term")));
        }
        if terms[..i].contains(term) {
            return Err(Error::InvalidModel(format!("duplicate {role} term {term}")));
        }
    }
    Ok(())
}

/// A full oscillator model: mass plus damping and stiffness term-coefficient pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    mass: f64,
    damping_terms: Vec<(BasisTerm, f64)>,
    stiffness_terms: Vec<(BasisTerm, f64)>,
}

impl ModelSpec {
    /// Builds and validates a model. Damping terms must involve velocity,
    /// stiffness terms must be velocity-free, and duplicate terms (same kind
    /// and clearance) are rejected.
    pub fn new(
        mass: f64,
        damping_terms: Vec<(BasisTerm, f64)>,
        stiffness_terms: Vec<(BasisTerm, f64)>,
    ) -> Result<Self> {
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidModel(format!("mass must be positive, got {mass}")));
        }
        let check = |terms: &[(BasisTerm, f64)], want_velocity: bool, role: &str| -> Result<()> {
            for (i, (term, coeff)) in terms.iter().enumerate() {
                term.validate()?;
                if term.involves_velocity() != want_velocity {
                    return Err(Error::InvalidModel(format!("{term} is not a valid {role} term")));
                }
                if !coeff.is_finite() {
                    return Err(Error::InvalidModel(format!("non-finite coefficient for {term}")));
                }
                if terms[..i].iter().any(|(t, _)| t == term) {
                    return Err(Error::InvalidModel(format!("duplicate {role} term {term}")));
                }
            }
            Ok(())
        };
        check(&damping_terms, true, "damping")?;
        check(&stiffness_terms, false, "stiffness")?;
        Ok(Self { mass, damping_terms, stiffness_terms })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn damping_terms(&self) -> &[(BasisTerm, f64)] {
        &self.damping_terms
    }

    pub fn stiffness_terms(&self) -> &[(BasisTerm, f64)] {
        &self.stiffness_terms
    }

    /// Non-conservative force `B(x, v, e)` at a state.
    #[inline]
    pub fn damping_force(&self, x: f64, v: f64) -> f64 {
        self.damping_terms.iter().map(|(t, c)| c * t.eval(x, v)).sum()
    }

    /// Conservative force `K(x, e)` at a displacement.
    #[inline]
    pub fn stiffness_force(&self, x: f64) -> f64 {
        self.stiffness_terms.iter().map(|(t, c)| c * t.eval(x, 0.0)).sum()
    }

    /// Potential energy stored by the stiffness terms at displacement `x`.
    pub fn potential_energy(&self, x: f64) -> f64 {
        self.stiffness_terms
            .iter()
            .map(|(t, c)| c * t.potential(x).expect("stiffness terms are displacement-only"))
            .sum()
    }

    /// Mechanical energy `T + U` at a state.
    pub fn mechanical_energy(&self, x: f64, v: f64) -> f64 {
        0.5 * self.mass * v * v + self.potential_energy(x)
    }
}

/// Aligned state and force channels of one oscillator record.
///
/// All channels share the time base; the acceleration channel is optional
/// because a measured record may carry only what the sensors provided.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    x: SampledSignal,
    v: SampledSignal,
    a: Option<SampledSignal>,
    f_ext: SampledSignal,
    mass: f64,
}

impl Trajectory {
    pub fn new(
        x: SampledSignal,
        v: SampledSignal,
        a: Option<SampledSignal>,
        f_ext: SampledSignal,
        mass: f64,
    ) -> Result<Self> {
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidModel(format!("mass must be positive, got {mass}")));
        }
        let aligned = |s: &SampledSignal| {
            s.len() == x.len()
                && (s.t0() - x.t0()).abs() <= 1e-12 * x.dt().max(1.0)
                && (s.dt() - x.dt()).abs() <= 1e-12 * x.dt()
        };
        if !aligned(&v) || !aligned(&f_ext) || a.as_ref().is_some_and(|a| !aligned(a)) {
            return Err(Error::InvalidSignal("trajectory channels are not aligned".to_string()));
        }
        Ok(Self { x, v, a, f_ext, mass })
    }

    pub fn x(&self) -> &SampledSignal {
        &self.x
    }

    pub fn v(&self) -> &SampledSignal {
        &self.v
    }

    /// Acceleration channel, if present.
    pub fn a(&self) -> Option<&SampledSignal> {
        self.a.as_ref()
    }

    pub fn f_ext(&self) -> &SampledSignal {
        &self.f_ext
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.x.t0()
    }

    pub fn dt(&self) -> f64 {
        self.x.dt()
    }

    /// Momentum rate `m * a` at sample `k`; requires the acceleration channel.
    pub fn momentum_rate(&self, k: usize) -> Result<f64> {
        let a = self.a.as_ref().ok_or(Error::MissingAcceleration)?;
        Ok(self.mass * a.values()[k])
    }
}
