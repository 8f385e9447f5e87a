use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use crate::{dsp, JrcError, Result, C64};

/// Discrete narrowband ambiguity magnitude. Rows follow `dopplers`, columns
/// follow `delays`; values are scaled so the origin of a matched waveform is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AfSurface {
    /// Delay axis, s.
    pub delays: Vec<f64>,
    /// Doppler axis, Hz.
    pub dopplers: Vec<f64>,
    pub magnitude: Array2<f64>,
}

impl AfSurface {
    /// Delay cut at the Doppler row nearest to `doppler`.
    pub fn delay_cut(&self, doppler: f64) -> Vec<f64> {
        self.magnitude.row(nearest(&self.dopplers, doppler)).to_vec()
    }

    /// Doppler cut at the delay column nearest to `delay`.
    pub fn doppler_cut(&self, delay: f64) -> Vec<f64> {
        self.magnitude.column(nearest(&self.delays, delay)).to_vec()
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    (0..axis.len())
        .min_by(|&a, &b| (axis[a] - x).abs().total_cmp(&(axis[b] - x).abs()))
        .unwrap_or(0)
}

/// `|χ(k, ν)| = |Σ_n x[n] x*[n-k] e^{j2πν n t_s}| / Σ|x|²` for lags
/// `-max_lag..=max_lag` and the given Dopplers. Rows are evaluated in parallel.
pub fn ambiguity_function(
    samples: &[C64],
    sample_period: f64,
    max_lag: usize,
    dopplers: &[f64],
) -> Result<AfSurface> {
    if samples.is_empty() {
        return Err(JrcError::invalid("empty waveform"));
    }
    let energy: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
    if !(energy > 0.0) {
        return Err(JrcError::invalid("waveform has zero energy"));
    }
    if !(sample_period > 0.0) {
        return Err(JrcError::invalid("sample period must be positive"));
    }
    let n = samples.len();
    let size = (n + max_lag + 1).next_power_of_two().max(2 * n);
    let mut reference = dsp::zero_pad(samples, size);
    dsp::fft(&mut reference);

    let rows: Vec<Vec<f64>> = dopplers
        .par_iter()
        .map(|&nu| {
            let mut z: Vec<C64> = samples
                .iter()
                .enumerate()
                .map(|(i, x)| x * C64::from_polar(1.0, 2.0 * PI * nu * i as f64 * sample_period))
                .collect();
            z.resize(size, C64::new(0.0, 0.0));
            dsp::fft(&mut z);
            z.iter_mut().zip(&reference).for_each(|(a, b)| *a *= b.conj());
            dsp::ifft(&mut z);
            // z[k mod size] = Σ_n x_ν[n] x*[n - k] * size
            let scale = 1.0 / (size as f64 * energy);
            (-(max_lag as i64)..=max_lag as i64)
                .map(|k| {
                    if k.unsigned_abs() as usize >= n {
                        0.0
                    } else {
                        z[k.rem_euclid(size as i64) as usize].norm() * scale
                    }
                })
                .collect()
        })
        .collect();

    let cols = 2 * max_lag + 1;
    let magnitude = Array2::from_shape_vec(
        (dopplers.len(), cols),
        rows.into_iter().flatten().collect(),
    )
    .map_err(|e| JrcError::invalid(e.to_string()))?;
    Ok(AfSurface {
        delays: (-(max_lag as i64)..=max_lag as i64)
            .map(|k| k as f64 * sample_period)
            .collect(),
        dopplers: dopplers.to_vec(),
        magnitude,
    })
}

/// Largest sidelobe relative to the peak of a magnitude cut, dB. The mainlobe
/// extends from the peak for as long as the cut keeps falling; sidelobes are
/// the local maxima beyond it. Returns `-inf` when no sidelobe energy remains.
pub fn peak_sidelobe_ratio(cut: &[f64]) -> Result<f64> {
    if cut.is_empty() {
        return Err(JrcError::invalid("empty cut"));
    }
    if cut.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(JrcError::invalid("cut must hold finite magnitudes"));
    }
    let peak = (0..cut.len()).fold(0, |best, i| if cut[i] > cut[best] { i } else { best });
    let top = cut[peak];
    if cut.iter().all(|&v| v == top) {
        return Err(JrcError::UndefinedPsl("flat cut".into()));
    }
    if cut.iter().filter(|&&v| v == top).count() > 1 {
        return Err(JrcError::UndefinedPsl("global peak is not unique".into()));
    }
    let mut lo = peak;
    while lo > 0 && cut[lo - 1] < cut[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < cut.len() && cut[hi + 1] < cut[hi] {
        hi += 1;
    }
    let is_local_max = |i: usize| {
        (i == 0 || cut[i] >= cut[i - 1]) && (i + 1 == cut.len() || cut[i] >= cut[i + 1])
    };
    let sidelobe = (0..lo)
        .chain(hi + 1..cut.len())
        .filter(|&i| is_local_max(i))
        .map(|i| cut[i])
        .fold(0.0, f64::max);
    Ok(20.0 * (sidelobe / top).log10())
}
