//! Uniformly sampled scalar time series.

use crate::error::{Error, Result};

/// A uniformly sampled real-valued signal with its time base.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SampledSignal {
    /// Builds a signal from a start time, sample spacing, and samples.
    ///
    /// Requires `dt > 0`, at least two samples, and finite values.
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidSignal(format!("dt must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidSignal(format!("t0 must be finite, got {t0}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidSignal(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite value at index {bad}")));
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` on a uniform grid covering `[t_start, t_end]` at `rate` Hz.
    pub fn from_fn(t_start: f64, t_end: f64, rate: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start || !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidSignal(
                "from_fn requires t_end > t_start and rate > 0".to_string(),
            ));
        }
        let dt = 1.0 / rate;
        let n = ((t_end - t_start) * rate + 1e-9).floor() as usize + 1;
        let values = (0..n).map(|k| f(t_start + k as f64 * dt)).collect();
        Self::new(t_start, dt, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Sampling rate in Hz.
    pub fn rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Linear interpolation at time `t`; clamps to the end samples outside the span.
    pub fn sample_linear(&self, t: f64) -> f64 {
        let pos = (t - self.t0) / self.dt;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    /// Replaces the sample values, keeping the time base. Lengths must match.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidSignal(format!(
                "replacement length {} does not match {}",
                values.len(),
                self.values.len()
            )));
        }
        Self::new(self.t0, self.dt, values)
    }

    /// Keeps every `stride`-th sample (stride >= 1).
    pub fn decimate(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let values: Vec<f64> = self.values.iter().copied().step_by(stride).collect();
        Self::new(self.t0, self.dt * stride as f64, values)
    }
}

/// Root-mean-square of a slice.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// RMS error of `predicted` against `reference`, normalized by the RMS of `reference`.
pub fn nrmse(predicted: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(predicted.len(), reference.len(), "nrmse requires aligned inputs");
    let denom = rms(reference);
    if denom == 0.0 {
        return if rms(predicted) == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let err: Vec<f64> = predicted.iter().zip(reference).map(|(p, r)| p - r).collect();
    rms(&err) / denom
}
