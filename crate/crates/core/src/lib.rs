//! eddikit: identification of equations of motion for nonlinear oscillators
//! with clearance nonlinearities from transient free-response data.
//!
//! The library covers the full pipeline:
//!
//! * [`sim`] generates high-accuracy transient responses of non-smooth
//!   oscillators (adaptive Dormand-Prince 5(4) with event-safe step caps).
//! * [`preprocess`] turns measured acceleration into displacement and
//!   velocity (integration plus zero-phase high-pass filtering) and locates
//!   the displacement zero crossings that anchor the energy method.
//! * [`phase1`] identifies damping coefficients from dissipated energy
//!   between zero crossings; [`phase2`] identifies stiffness coefficients
//!   from the force balance once damping is known.
//! * [`sindy`] is a sparse-regression baseline over the same term library.
//! * [`spectra`] provides Fourier and Morlet-wavelet views of a signal for
//!   picking clearance bands and checking identified models.

pub mod error;
pub mod lsq;
pub mod model;
pub mod phase1;
pub mod phase2;
pub mod preprocess;
pub mod signal;
pub mod sim;
pub mod sindy;
pub mod spectra;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{BasisTerm, ModelSpec, Trajectory};
pub use signal::SampledSignal;
