//! Receive processing: periodogram detection of range, Doppler and angle,
//! DPSK symbol recovery from the joint frames or subcarriers, refinement on
//! the residual, and Golay-preamble ranging.
//!
//! Parameters come from zero-padded FFT periodograms with quadratic peak
//! interpolation, not from a super-resolution solver. Maps are ordered
//! `(range, Doppler, angle)` for both waveforms.

mod golay;
mod ofdma;
pub(crate) mod peaks;
mod pmcw;

use std::f64::consts::PI;

use ndarray::{Array3, Axis};

use crate::linalg::least_squares;
use crate::{dsp, JrcError, Result, C64, SPEED_OF_LIGHT};

pub use golay::{golay_range_estimate, GolayProfile};
pub use ofdma::{
    decode_ofdma_symbols, ofdma_range_doppler_angle, ofdma_residual_refine, OfdmaDecoded,
};
pub use pmcw::{decode_pmcw_symbols, pmcw_range_doppler, pmcw_residual_refine, PmcwDecoded};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Zero-padding factors for the range, Doppler and angle transforms.
    pub padding: [usize; 3],
    /// Residual refinement searches a grid this many times finer than the
    /// coarse one.
    pub refine_factor: usize,
    /// Detection threshold relative to the strongest cell, dB (negative).
    pub threshold_db: f64,
    /// Cells must also exceed this multiple of the map median.
    pub floor_factor: f64,
    pub max_targets: usize,
    /// Sub-bin peak positions: quadratic interpolation when detecting,
    /// continuous periodogram maximization when refining.
    pub interpolate: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            padding: [4, 4, 4],
            refine_factor: 4,
            threshold_db: -13.0,
            floor_factor: 4.0,
            max_targets: 4,
            interpolate: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.padding.contains(&0) || self.refine_factor == 0 {
            return Err(JrcError::invalid("padding factors must be at least 1"));
        }
        if !(self.threshold_db < 0.0) {
            return Err(JrcError::invalid("detection threshold must be below 0 dB"));
        }
        if !(self.floor_factor >= 0.0) {
            return Err(JrcError::invalid("floor factor must be non-negative"));
        }
        Ok(())
    }

    pub(crate) fn refined(&self) -> Self {
        Self {
            padding: self.padding.map(|p| p * self.refine_factor),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEstimate {
    /// Round-trip delay, s.
    pub delay: f64,
    /// Mono-static equivalent range `c τ / 2`, m.
    pub range: f64,
    pub doppler: f64,
    /// Arrival angle, rad.
    pub angle: f64,
    /// Least-squares complex amplitude.
    pub amplitude: C64,
}

impl TargetEstimate {
    pub(crate) fn new(delay: f64, doppler: f64, angle: f64) -> Self {
        Self {
            delay,
            range: SPEED_OF_LIGHT * delay / 2.0,
            doppler,
            angle,
            amplitude: C64::new(0.0, 0.0),
        }
    }
}

/// Periodogram (power, axes `(range, Doppler, angle)`) and the targets read off it.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub map: Array3<f64>,
    pub estimates: Vec<TargetEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Transform {
    Keep,
    Forward,
    Inverse,
}

pub(crate) struct AxisPlan {
    pub size: usize,
    pub transform: Transform,
    /// Only bins below this index are searched.
    pub limit: usize,
    pub interpolate: bool,
}

/// Zero-pads `data` to the planned sizes and transforms the flagged axes.
pub(crate) fn spectrum(data: &Array3<C64>, plan: &[AxisPlan; 3]) -> Array3<C64> {
    let (a, b, c) = data.dim();
    let mut out = Array3::<C64>::zeros((plan[0].size, plan[1].size, plan[2].size));
    out.slice_mut(ndarray::s![..a, ..b, ..c]).assign(data);
    for (axis, p) in plan.iter().enumerate() {
        if p.transform == Transform::Keep || p.size <= 1 {
            continue;
        }
        let mut buf = vec![C64::new(0.0, 0.0); p.size];
        for mut lane in out.lanes_mut(Axis(axis)) {
            buf.iter_mut().zip(lane.iter()).for_each(|(d, s)| *d = *s);
            match p.transform {
                Transform::Forward => dsp::fft(&mut buf),
                _ => dsp::ifft(&mut buf),
            }
            lane.iter_mut().zip(&buf).for_each(|(d, s)| *d = *s);
        }
    }
    out
}

/// Value of `spectrum(data, plan)` at a possibly fractional bin. Axes that
/// are kept untransformed use the nearest index.
fn spectrum_at(data: &Array3<C64>, plan: &[AxisPlan; 3], bins: [f64; 3]) -> C64 {
    spectrum_at_with_slope(data, plan, bins, None).0
}

/// `spectrum_at` together with its derivative with respect to the bin on
/// `axis` (zero when `axis` is `None`).
fn spectrum_at_with_slope(
    data: &Array3<C64>,
    plan: &[AxisPlan; 3],
    bins: [f64; 3],
    axis: Option<usize>,
) -> (C64, C64) {
    let dims = data.dim();
    let dims = [dims.0, dims.1, dims.2];
    let zero = C64::new(0.0, 0.0);
    let weights: [Vec<C64>; 3] = std::array::from_fn(|a| {
        let (n, k, p) = (dims[a], bins[a], &plan[a]);
        let sign = match p.transform {
            Transform::Keep => {
                let keep = k.round().rem_euclid(p.size.max(1) as f64) as usize;
                return (0..n).map(|i| C64::new(if i == keep { 1.0 } else { 0.0 }, 0.0)).collect();
            }
            _ if p.size <= 1 => return vec![C64::new(1.0, 0.0); n],
            Transform::Forward => -1.0,
            Transform::Inverse => 1.0,
        };
        let size = p.size as f64;
        (0..n)
            .map(|i| C64::from_polar(1.0, sign * 2.0 * PI * (k * i as f64).rem_euclid(size) / size))
            .collect()
    });
    // d/dk of e^{±j2πki/P} is ±j2πi/P times itself
    let slope: Vec<C64> = match axis {
        Some(a) => {
            let sign = if plan[a].transform == Transform::Inverse { 1.0 } else { -1.0 };
            (0..dims[a])
                .map(|i| C64::new(0.0, sign * 2.0 * PI * i as f64 / plan[a].size as f64))
                .collect()
        }
        None => Vec::new(),
    };
    let (n1, n2) = (dims[1], dims[2]);
    let flat = data.as_slice().expect("standard layout");
    let mut value = zero;
    let mut derivative = zero;
    for i in 0..dims[0] {
        let (mut row_v, mut row_d) = (zero, zero);
        for j in 0..n1 {
            let lane = &flat[(i * n1 + j) * n2..(i * n1 + j + 1) * n2];
            let (mut inner, mut inner_d) = (zero, zero);
            for (k, v) in lane.iter().enumerate() {
                let t = v * weights[2][k];
                inner += t;
                if axis == Some(2) {
                    inner_d += t * slope[k];
                }
            }
            let w = weights[1][j];
            row_v += inner * w;
            row_d += match axis {
                Some(2) => inner_d * w,
                Some(1) => inner * w * slope[j],
                _ => zero,
            };
        }
        let w = weights[0][i];
        value += row_v * w;
        derivative += match axis {
            Some(0) => row_v * w * slope[i],
            Some(_) => row_d * w,
            None => zero,
        };
    }
    (value, derivative)
}

/// Periodogram detection with sidelobe rejection.
///
/// Candidates are the local maxima of the map of `prepare(observed)`. The
/// strongest is always kept; each further candidate must still clear the
/// threshold in the residual left after least-squares removal of the targets
/// kept so far, which discards sidelobes of stronger returns. `model` gives
/// the unit-amplitude response of a target in the observed domain.
pub(crate) fn detect_targets<P, E, M>(
    observed: &Array3<C64>,
    prepare: P,
    plan: &[AxisPlan; 3],
    cfg: &EstimatorConfig,
    max_targets: usize,
    to_estimate: E,
    model: M,
) -> Result<Detection>
where
    P: Fn(&Array3<C64>) -> Array3<C64>,
    E: Fn([f64; 3]) -> TargetEstimate,
    M: Fn(&TargetEstimate) -> Array3<C64>,
{
    let observed_spec = spectrum(&prepare(observed), plan);
    let map = observed_spec.mapv(|z| z.norm_sqr());
    let rel = 10f64.powf(cfg.threshold_db / 10.0);
    let candidates = peaks::find_peaks(
        &map,
        [plan[0].limit, plan[1].limit, plan[2].limit],
        rel,
        cfg.floor_factor,
        max_targets.saturating_mul(4),
    );
    let interp = plan.each_ref().map(|p| cfg.interpolate && p.interpolate);
    let observed_flat: Vec<C64> = observed.iter().copied().collect();

    let mut estimates: Vec<TargetEstimate> = Vec::new();
    let mut columns: Vec<Vec<C64>> = Vec::new();
    let mut prepared: Vec<Array3<C64>> = Vec::new();
    let mut amplitudes: Vec<C64> = Vec::new();
    for c in &candidates {
        if estimates.len() >= max_targets {
            break;
        }
        if !estimates.is_empty() {
            let fitted: C64 = prepared
                .iter()
                .zip(&amplitudes)
                .map(|(m, a)| a * spectrum_at(m, plan, c.bin.map(|b| b as f64)))
                .sum();
            if (observed_spec[c.bin] - fitted).norm_sqr() < rel * candidates[0].power {
                continue;
            }
        }
        let est = to_estimate(peaks::refine_peak(&map, c.bin, interp));
        let response = model(&est);
        columns.push(response.iter().copied().collect());
        match least_squares(&columns, &observed_flat) {
            Ok(a) => amplitudes = a,
            Err(JrcError::Singularity(_)) => {
                columns.pop();
                continue;
            }
            Err(e) => return Err(e),
        }
        prepared.push(prepare(&response));
        estimates.push(est);
    }
    for (e, a) in estimates.iter_mut().zip(amplitudes) {
        e.amplitude = a;
    }
    Ok(Detection { map, estimates })
}

/// Residual refinement around known targets.
///
/// Each target in turn is re-located against the residual left by the
/// others: first on the fine grid of `plan` within one coarse cell
/// (`refine_factor` fine bins) of its current position, then, with
/// interpolation on, by a root search on the analytic slope of the periodogram
/// along every transformed axis. Two passes are made and amplitudes are refit
/// by least squares after each.
#[allow(clippy::too_many_arguments)]
pub(crate) fn refine_targets<P, E, B, M>(
    observed: &Array3<C64>,
    prepare: P,
    plan: &[AxisPlan; 3],
    cfg: &EstimatorConfig,
    coarse: &[TargetEstimate],
    to_estimate: E,
    to_bins: B,
    model: M,
) -> Result<Vec<TargetEstimate>>
where
    P: Fn(&Array3<C64>) -> Array3<C64>,
    E: Fn([f64; 3]) -> TargetEstimate,
    B: Fn(&TargetEstimate) -> [f64; 3],
    M: Fn(&TargetEstimate) -> Array3<C64>,
{
    let prepared_obs = prepare(observed);
    let observed_flat: Vec<C64> = observed.iter().copied().collect();
    let reach = cfg.refine_factor as isize;

    let mut estimates = coarse.to_vec();
    let mut amplitudes: Vec<C64> = coarse.iter().map(|e| e.amplitude).collect();
    let mut prepared: Vec<Array3<C64>> = estimates.iter().map(|e| prepare(&model(e))).collect();
    for _pass in 0..2 {
        for q in 0..estimates.len() {
            let mut residual = prepared_obs.clone();
            for (j, (m, a)) in prepared.iter().zip(&amplitudes).enumerate() {
                if j != q {
                    residual.scaled_add(-*a, m);
                }
            }
            let power = |b: [f64; 3]| spectrum_at(&residual, plan, b).norm_sqr();

            // coordinate search on the fine grid
            let mut bins = to_bins(&estimates[q]).map(f64::round);
            for _sweep in 0..2 {
                for axis in 0..3 {
                    let offsets: Vec<isize> = match plan[axis].transform {
                        _ if plan[axis].size <= 1 => continue,
                        Transform::Keep => vec![-1, 0, 1],
                        _ => (-reach..=reach).collect(),
                    };
                    let centre = bins[axis];
                    let mut best = (f64::NEG_INFINITY, centre);
                    for d in offsets {
                        let mut b = bins;
                        b[axis] = centre + d as f64;
                        let v = power(b);
                        if v > best.0 {
                            best = (v, b[axis]);
                        }
                    }
                    bins[axis] = best.1;
                }
            }
            if cfg.interpolate {
                for _sweep in 0..2 {
                    for axis in 0..3 {
                        let p = &plan[axis];
                        if !p.interpolate || p.transform == Transform::Keep || p.size <= 1 {
                            continue;
                        }
                        // sign of d|S|²/dk = 2 Re(conj(S) S')
                        let slope = |x: f64| {
                            let mut b = bins;
                            b[axis] = x;
                            let (v, d) = spectrum_at_with_slope(&residual, plan, b, Some(axis));
                            (v.conj() * d).re
                        };
                        bins[axis] = climb(slope, bins[axis] - 1.0, bins[axis] + 1.0, |x| {
                            let mut b = bins;
                            b[axis] = x;
                            power(b)
                        });
                    }
                }
            }
            let wrapped = std::array::from_fn(|axis| bins[axis].rem_euclid(plan[axis].size.max(1) as f64));
            estimates[q] = to_estimate(wrapped);
            prepared[q] = prepare(&model(&estimates[q]));
        }
        let columns: Vec<Vec<C64>> = estimates.iter().map(|e| model(e).iter().copied().collect()).collect();
        match least_squares(&columns, &observed_flat) {
            Ok(a) => amplitudes = a,
            Err(JrcError::Singularity(_)) => {}
            Err(e) => return Err(e),
        }
    }
    for (e, a) in estimates.iter_mut().zip(amplitudes) {
        e.amplitude = a;
    }
    Ok(estimates)
}

/// Local maximizer on `[lo, hi]` from the slope: a root of the slope by the
/// Illinois variant of regula falsi when it falls from positive to negative
/// across the interval, else the better endpoint.
fn climb(slope: impl Fn(f64) -> f64, lo: f64, hi: f64, value: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (slope(a), slope(b));
    if !(fa > 0.0 && fb < 0.0) {
        return if value(lo) >= value(hi) { lo } else { hi };
    }
    for _ in 0..100 {
        let c = b - fb * (b - a) / (fb - fa);
        let fc = slope(c);
        if fc == 0.0 || (c - b).abs() < 1e-13 {
            return c;
        }
        if (fc > 0.0) != (fb > 0.0) {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
    }
    b
}

/// Fractional bin wrapped into `[-size/2, size/2)`.
pub(crate) fn signed_bin(bin: f64, size: usize) -> f64 {
    let n = size as f64;
    (bin + n / 2.0).rem_euclid(n) - n / 2.0
}

/// Matched-filter symbol estimate `<y, h> / <h, h>`.
pub(crate) fn matched_symbol<'a>(
    y: impl Iterator<Item = &'a C64>,
    h: impl Iterator<Item = &'a C64>,
) -> C64 {
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (y, h) in y.zip(h) {
        num += y * h.conj();
        den += h.norm_sqr();
    }
    if den > 0.0 {
        num / den
    } else {
        C64::new(0.0, 0.0)
    }
}
