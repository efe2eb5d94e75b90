//! Fourier and Morlet-wavelet views of transient responses.
//!
//! Used to pick out clearance-driven frequency bands (the ~6 Hz ridge of
//! the benchmark system) and to compare identified models against data in
//! the time-frequency plane.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Default Morlet center frequency (cycles): the standard trade-off between
/// time and frequency localization.
pub const MORLET_DEFAULT_CYCLES: f64 = 6.0;

/// Upper bound on emitted scalogram time columns; longer records are
/// thinned by an integer stride.
const MAX_TIME_COLUMNS: usize = 2000;

/// Single-sided amplitude spectrum of the mean-removed signal.
///
/// Bin `k` sits at `k/(n*dt)` Hz; interior bins carry `2|Y_k|/n` so a unit
/// sinusoid shows amplitude ~1 at its bin.
pub fn fourier_spectrum(y: &SampledSignal) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mean = y.values().iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> =
        y.values().iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let df = 1.0 / (n as f64 * y.dt());
    let freqs: Vec<f64> = (0..bins).map(|k| k as f64 * df).collect();
    let magnitude: Vec<f64> = (0..bins)
        .map(|k| {
            let scale = if k == 0 || (n.is_multiple_of(2) && k == n / 2) { 1.0 } else { 2.0 };
            scale * buf[k].norm() / n as f64
        })
        .collect();
    (freqs, magnitude)
}

/// Logarithmic frequency grid, 1–100 Hz, 200 points (the default analysis
/// band for the oscillators this crate targets).
pub fn default_freq_grid() -> Vec<f64> {
    log_freq_grid(1.0, 100.0, 200)
}

/// Logarithmically spaced frequency grid.
pub fn log_freq_grid(f_lo: f64, f_hi: f64, points: usize) -> Vec<f64> {
    assert!(f_lo > 0.0 && f_hi > f_lo && points >= 2);
    let ratio = (f_hi / f_lo).ln();
    (0..points)
        .map(|i| f_lo * (ratio * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Morlet scalogram over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    /// Analysis frequencies (Hz), one per row, as passed in.
    pub freqs: Vec<f64>,
    /// Time of each emitted column (s).
    pub times: Vec<f64>,
    /// `magnitude[row][col]`, normalized so the global max is exactly 1
    /// (left untouched for an all-zero signal).
    pub magnitude: Vec<Vec<f64>>,
    /// Cone of influence: below `coi[col]` Hz the wavelet at this column
    /// overlaps a record edge (infinite at the edges themselves). Emitted,
    /// not masked.
    pub coi: Vec<f64>,
}

impl Scalogram {
    /// Ridge: the argmax frequency of each time column.
    pub fn ridge(&self) -> Vec<(f64, f64)> {
        (0..self.times.len())
            .map(|c| {
                let best = (0..self.freqs.len())
                    .max_by(|&a, &b| {
                        self.magnitude[a][c].partial_cmp(&self.magnitude[b][c]).unwrap()
                    })
                    .unwrap();
                (self.times[c], self.freqs[best])
            })
            .collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().flatten().fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Continuous wavelet transform with the analytic Morlet wavelet, by
/// frequency-domain convolution on a zero-padded FFT.
///
/// `center_freq_cycles` is the Morlet parameter `w0`; analysis scale for
/// frequency `f` is `s = w0/(2*pi*f)`, so a pure tone at a grid frequency
/// peaks exactly on its row. Amplitude-preserving normalization: a unit
/// real tone yields magnitude ~1 on its row before the global max-1
/// rescale.
pub fn cwt_morlet(
    y: &SampledSignal,
    freqs: &[f64],
    center_freq_cycles: f64,
) -> Result<Scalogram> {
    let nyquist = y.rate() / 2.0;
    if freqs.is_empty() {
        return Err(Error::InvalidConfig("frequency grid is empty".to_string()));
    }
    for &f in freqs {
        if !f.is_finite() || f <= 0.0 || f >= nyquist {
            return Err(Error::FrequencyOutOfRange { freq_hz: f, nyquist_hz: nyquist });
        }
    }
    if !center_freq_cycles.is_finite() || center_freq_cycles <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "Morlet center frequency must be positive, got {center_freq_cycles}"
        )));
    }

    let n = y.len();
    let w0 = center_freq_cycles;
    let f_min = freqs.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = w0 / (std::f64::consts::TAU * f_min);
    // pad past the slowest wavelet's reach so circular convolution cannot
    // wrap record ends into each other
    let pad = (n + (8.0 * s_max * y.rate()).ceil() as usize).next_power_of_two();

    let mut planner = FftPlanner::new();
    let fft_fwd = planner.plan_fft_forward(pad);
    let fft_inv = planner.plan_fft_inverse(pad);
    let mut base: Vec<Complex<f64>> = Vec::with_capacity(pad);
    base.extend(y.values().iter().map(|&v| Complex::new(v, 0.0)));
    base.resize(pad, Complex::new(0.0, 0.0));
    fft_fwd.process(&mut base);

    let d_omega = std::f64::consts::TAU * y.rate() / pad as f64;
    let stride = n.div_ceil(MAX_TIME_COLUMNS).max(1);
    let cols: Vec<usize> = (0..n).step_by(stride).collect();

    let mut magnitude: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|&f| {
            let s = w0 / (std::f64::consts::TAU * f);
            let mut row = vec![Complex::new(0.0, 0.0); pad];
            // analytic wavelet: positive-frequency bins only, doubled
            for k in 1..pad / 2 {
                let arg = s * (k as f64 * d_omega) - w0;
                row[k] = base[k] * (2.0 * (-0.5 * arg * arg).exp());
            }
            fft_inv.process(&mut row);
            cols.iter().map(|&t| row[t].norm() / pad as f64).collect::<Vec<f64>>()
        })
        .collect();

    let max = magnitude.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    if max > 0.0 {
        for row in &mut magnitude {
            for v in row {
                *v /= max;
            }
        }
    }

    let t_end = y.t_end();
    let times: Vec<f64> = cols.iter().map(|&t| y.time(t)).collect();
    let coi: Vec<f64> = times
        .iter()
        .map(|&t| {
            let d = (t - y.t0()).min(t_end - t);
            if d > 0.0 {
                std::f64::consts::SQRT_2 * w0 / (std::f64::consts::TAU * d)
            } else {
                f64::INFINITY
            }
        })
        .collect();

    Ok(Scalogram { freqs: freqs.to_vec(), times, magnitude, coi })
}
