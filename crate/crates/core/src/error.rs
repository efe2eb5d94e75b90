use thiserror::Error;

/// Errors produced by the identification pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A domain type was constructed with arguments violating its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A sampled signal violates its invariants (dt > 0, length >= 2, finite values).
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    /// A simulator configuration violates its invariants.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// The adaptive integrator shrank its step below the representable minimum,
    /// which signals a singularity or pathological stiffness in the model.
    #[error("integrator step underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// NaN or infinity appeared in the integrator state.
    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    /// Fewer than two displacement zero crossings were found; the dissipated-energy
    /// system needs at least one crossing pair.
    #[error("fewer than two displacement zero crossings found; identification impossible")]
    NoCrossings,

    /// Filter cutoff at or above the Nyquist frequency.
    #[error("filter cutoff {cutoff_hz} Hz out of range (Nyquist {nyquist_hz} Hz)")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },

    /// Signal shorter than the filter edge-transient requirement.
    #[error("signal too short for zero-phase filtering: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },

    /// A candidate library with no terms was supplied.
    #[error("candidate library is empty")]
    EmptyLibrary,

    /// Not enough crossings to form the requested system.
    #[error("insufficient crossings: found {found}, need at least {needed}")]
    InsufficientCrossings { found: usize, needed: usize },

    /// Non-finite entries in a least-squares system.
    #[error("non-finite entries in least-squares input")]
    NonFiniteInput,

    /// The trajectory carries no acceleration channel.
    #[error("trajectory has no acceleration channel")]
    MissingAcceleration,

    /// Sequential thresholding removed every candidate term.
    #[error("thresholding eliminated every candidate term (lambda too large)")]
    AllTermsEliminated,

    /// A requested analysis frequency lies outside (0, Nyquist).
    #[error("frequency {freq_hz} Hz out of range (0, {nyquist_hz}) Hz")]
    FrequencyOutOfRange { freq_hz: f64, nyquist_hz: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
