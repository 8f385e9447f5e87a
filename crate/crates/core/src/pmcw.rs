//! PMCW-JRC waveform synthesis, radar/JRC frame multiplexing and receive
//! data-cube generation.
//!
//! The receive cube follows the slow-time × fast-time matrix model
//!
//! ```text
//! Y_p[m, l] = Σ_q c_q^p d_q a_m e_q[m] b_q[l] s[(l - k_q) mod L] + N_p[m, l]
//! ```
//!
//! with `e_q[m] = e^{-j2π f_D m L t_c}`, `b_q[l] = e^{-j2π f_D l t_c}` (the
//! negative-exponent baseband Doppler convention), `c_q = e^{-jkd sin ψ_q}` and
//! `s` the code chips delayed cyclically by the integer chip shift `k_q`.
//! Antenna and frame indices are zero based.

use std::f64::consts::PI;

use ndarray::{Array3, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{Scene, Target};
use crate::sigcore::{
    cyclic_shift, dpsk_encode, steering_vector, ArrayGeometry, CodeSequence, DpskOrder,
    DpskStream, SteeringConvention,
};
use crate::{JrcError, Result, C64};

/// How scatterer delays that are not whole chips are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayPolicy {
    #[default]
    Reject,
    /// Round to the nearest chip and record the residual.
    Round,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmcwConfig {
    pub code_length: usize,
    pub frames: usize,
    pub chip_duration: f64,
    pub carrier_hz: f64,
    /// Share of radar-only frames, percent.
    pub mux_percent: f64,
    pub geometry: ArrayGeometry,
    /// Keep the Doppler progression inside each block (`b_q`); when false only
    /// the per-frame term `e_q` is applied.
    pub intra_block_doppler: bool,
    pub delay_policy: DelayPolicy,
}

impl PmcwConfig {
    /// Block (slow-time) duration `t_b = L t_c`.
    pub fn block_time(&self) -> f64 {
        self.code_length as f64 * self.chip_duration
    }

    pub fn validate(&self) -> Result<()> {
        if self.code_length == 0 || self.frames == 0 {
            return Err(JrcError::invalid("code length and frame count must be at least 1"));
        }
        if !(self.chip_duration > 0.0 && self.chip_duration.is_finite()) {
            return Err(JrcError::invalid("chip duration must be positive"));
        }
        if !(0.0..=100.0).contains(&self.mux_percent) {
            return Err(JrcError::invalid(format!(
                "mux_percent must be within [0, 100], got {}",
                self.mux_percent
            )));
        }
        self.geometry.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Radar-only frame `X_r` with a known symbol.
    Radar,
    /// Joint radar-communications frame `X_rc` carrying data.
    RadarComm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSchedule {
    pub labels: Vec<FrameKind>,
    /// Set when no radar-only frame exists; Doppler and data are then coupled.
    pub non_identifiable: bool,
}

impl FrameSchedule {
    pub fn radar_frames(&self) -> usize {
        self.labels.iter().filter(|&&k| k == FrameKind::Radar).count()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Time-division split: the first `round(μ M / 100)` frames are radar-only.
pub fn pmcw_schedule(config: &PmcwConfig) -> FrameSchedule {
    let m = config.frames;
    let radar = ((config.mux_percent.clamp(0.0, 100.0) * m as f64 / 100.0).round() as usize).min(m);
    let labels = (0..m)
        .map(|i| if i < radar { FrameKind::Radar } else { FrameKind::RadarComm })
        .collect();
    FrameSchedule {
        labels,
        non_identifiable: radar == 0,
    }
}

/// Per-frame symbols of one CPI together with the encoded payload.
#[derive(Debug, Clone, PartialEq)]
pub struct PmcwPayload {
    /// `a_m` for every frame.
    pub symbols: Vec<C64>,
    pub stream: DpskStream,
    /// Index of the frame holding the DPSK reference symbol.
    pub reference_frame: usize,
}

/// Number of payload bits one CPI carries. The last radar frame (or frame 0
/// when there is none) is the DPSK reference.
pub fn pmcw_payload_capacity(schedule: &FrameSchedule, order: DpskOrder) -> usize {
    let reference = schedule.radar_frames().max(1);
    schedule.len().saturating_sub(reference) * order.bits_per_symbol()
}

/// Radar frames carry `a_m = 1`; data frames continue the DPSK stream whose
/// reference is the last radar frame.
pub fn pmcw_frame_symbols(
    schedule: &FrameSchedule,
    bits: &[u8],
    order: DpskOrder,
) -> Result<PmcwPayload> {
    let capacity = pmcw_payload_capacity(schedule, order);
    if bits.len() != capacity {
        return Err(JrcError::invalid(format!(
            "payload must be {capacity} bits for this schedule, got {}",
            bits.len()
        )));
    }
    let reference_frame = schedule.radar_frames().max(1) - 1;
    let stream = dpsk_encode(bits, order)?;
    let mut symbols = vec![C64::new(1.0, 0.0); reference_frame];
    symbols.extend_from_slice(&stream.symbols);
    debug_assert_eq!(symbols.len(), schedule.len());
    Ok(PmcwPayload {
        symbols,
        stream,
        reference_frame,
    })
}

/// Baseband transmit chips, shape `(N_t, M, L)`:
/// `x[i, m, l] = a_m e^{jζ_l} e^{j i k d sin β}`.
pub fn pmcw_transmit(
    config: &PmcwConfig,
    code: &CodeSequence,
    symbols: &[C64],
    beam: f64,
) -> Result<Array3<C64>> {
    config.validate()?;
    check_lengths(config, code, symbols)?;
    let chips = code.chips();
    let weights = steering_vector(
        &config.geometry,
        beam,
        config.geometry.n_tx,
        SteeringConvention::Transmit,
    );
    Ok(Array3::from_shape_fn(
        (config.geometry.n_tx, config.frames, config.code_length),
        |(i, m, l)| symbols[m] * chips[l] * weights[i],
    ))
}

/// One transmit antenna's chips flattened to a time series of `M L` samples.
pub fn pmcw_waveform(config: &PmcwConfig, code: &CodeSequence, symbols: &[C64]) -> Result<Vec<C64>> {
    check_lengths(config, code, symbols)?;
    let chips = code.chips();
    Ok(symbols
        .iter()
        .flat_map(|&a| chips.iter().map(move |&c| a * c))
        .collect())
}

fn check_lengths(config: &PmcwConfig, code: &CodeSequence, symbols: &[C64]) -> Result<()> {
    if code.len() != config.code_length {
        return Err(JrcError::invalid(format!(
            "code has {} chips, config expects {}",
            code.len(),
            config.code_length
        )));
    }
    if symbols.len() != config.frames {
        return Err(JrcError::invalid(format!(
            "{} symbols supplied for {} frames",
            symbols.len(),
            config.frames
        )));
    }
    Ok(())
}

/// Receive data cube, shape `(M, L, N_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmcwCube {
    pub data: Array3<C64>,
    pub schedule: FrameSchedule,
    /// Per-scatterer integer chip shift `k_q`.
    pub chip_shifts: Vec<usize>,
    /// Per-scatterer rounding residual in chips (zero unless rounding was allowed).
    pub delay_residuals: Vec<f64>,
}

impl PmcwCube {
    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn code_length(&self) -> usize {
        self.data.dim().1
    }

    pub fn antennas(&self) -> usize {
        self.data.dim().2
    }

    /// `Y_p`, the `M × L` slow/fast-time matrix of antenna `p`.
    pub fn antenna(&self, p: usize) -> ArrayView2<'_, C64> {
        self.data.index_axis(Axis(2), p)
    }
}

/// Integer chip shift of a delay, following the configured policy.
pub fn chip_shift(config: &PmcwConfig, index: usize, delay: f64) -> Result<(usize, f64)> {
    let chips = delay / config.chip_duration;
    let rounded = chips.round();
    let residual = chips - rounded;
    if residual.abs() > 1e-6 && config.delay_policy == DelayPolicy::Reject {
        return Err(JrcError::FractionalDelay { index, chips });
    }
    let shift = rounded as usize;
    if shift >= config.code_length {
        return Err(JrcError::RangeAmbiguity {
            index,
            shift,
            code_length: config.code_length,
        });
    }
    Ok((shift, residual))
}

/// Synthesizes the receive cube of CPI `cpi` of `scene`, noise drawn from `rng`.
pub fn pmcw_receive_cube<R: Rng + ?Sized>(
    scene: &Scene,
    cpi: usize,
    config: &PmcwConfig,
    code: &CodeSequence,
    symbols: &[C64],
    rng: &mut R,
) -> Result<PmcwCube> {
    let targets = scene.realize(cpi)?;
    synthesize_cube(&targets, scene.noise_variance, config, code, symbols, rng)
}

/// Matrix-model synthesis for already realized targets.
pub fn synthesize_cube<R: Rng + ?Sized>(
    targets: &[Target],
    noise_variance: f64,
    config: &PmcwConfig,
    code: &CodeSequence,
    symbols: &[C64],
    rng: &mut R,
) -> Result<PmcwCube> {
    config.validate()?;
    check_lengths(config, code, symbols)?;
    if noise_variance.is_nan() || noise_variance < 0.0 {
        return Err(JrcError::invalid("noise variance must be non-negative"));
    }
    let (m_len, l_len, n_rx) = (config.frames, config.code_length, config.geometry.n_rx);
    let chips = code.chips();
    let tc = config.chip_duration;
    let mut data = Array3::<C64>::zeros((m_len, l_len, n_rx));
    let mut shifts = Vec::with_capacity(targets.len());
    let mut residuals = Vec::with_capacity(targets.len());

    for (q, t) in targets.iter().enumerate() {
        let (k, residual) = chip_shift(config, q, t.delay)?;
        shifts.push(k);
        residuals.push(residual);
        let shifted = cyclic_shift(&chips, k)?;
        let fast: Vec<C64> = (0..l_len)
            .map(|l| {
                let b = if config.intra_block_doppler {
                    C64::from_polar(1.0, -2.0 * PI * t.doppler * l as f64 * tc)
                } else {
                    C64::new(1.0, 0.0)
                };
                b * shifted[l]
            })
            .collect();
        let slow: Vec<C64> = (0..m_len)
            .map(|m| {
                symbols[m] * C64::from_polar(1.0, -2.0 * PI * t.doppler * (m * l_len) as f64 * tc)
            })
            .collect();
        let steer = steering_vector(&config.geometry, t.arrival_angle, n_rx, SteeringConvention::Receive);
        for ((m, l, p), y) in data.indexed_iter_mut() {
            *y += steer[p] * t.gain * slow[m] * fast[l];
        }
    }

    if noise_variance > 0.0 {
        add_noise(data.iter_mut(), noise_variance, rng);
    }

    Ok(PmcwCube {
        data,
        schedule: pmcw_schedule(config),
        chip_shifts: shifts,
        delay_residuals: residuals,
    })
}

pub(crate) fn add_noise<'a, R: Rng + ?Sized>(
    samples: impl Iterator<Item = &'a mut C64>,
    variance: f64,
    rng: &mut R,
) {
    let s = (variance / 2.0).sqrt();
    for y in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *y += C64::new(re * s, im * s);
    }
}

/// Symbol timing used by the time-domain synthesizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolTiming {
    /// `a_m` spans receive frame `m` for every path, the assumption behind the
    /// cyclic matrix model.
    ReceiveAligned,
    /// `a_m` rides on transmitted block `m`; blocks before the CPI repeat frame 0.
    /// Delayed paths then carry `a_{m-1}` in the first `k_q` chips of frame `m`.
    Transmit,
}

/// Noiseless receive samples obtained by sampling the continuous-time
/// superposition of delayed, Doppler-shifted chip trains at the chip rate.
/// Shape `(M, L, N_r)`, same layout as [`PmcwCube::data`].
pub fn pmcw_receive_time_domain(
    targets: &[Target],
    config: &PmcwConfig,
    code: &CodeSequence,
    symbols: &[C64],
    timing: SymbolTiming,
) -> Result<Array3<C64>> {
    config.validate()?;
    check_lengths(config, code, symbols)?;
    let (m_len, l_len, n_rx) = (config.frames, config.code_length, config.geometry.n_rx);
    let tc = config.chip_duration;
    let tb = config.block_time();
    let kd = config.geometry.wavenumber() * config.geometry.spacing();
    let phases = code.phases();
    // rectangular chip pulse on [0, t_c)
    let pulse = |x: f64| -> f64 {
        if x >= -1e-9 * tc && x < tc * (1.0 - 1e-9) {
            1.0
        } else {
            0.0
        }
    };
    let mut out = Array3::<C64>::zeros((m_len, l_len, n_rx));
    for n in 0..m_len * l_len {
        let t = n as f64 * tc;
        let rx_frame = n / l_len;
        for (q, tgt) in targets.iter().enumerate() {
            if tgt.delay / tc >= l_len as f64 - 0.5 {
                return Err(JrcError::RangeAmbiguity {
                    index: q,
                    shift: (tgt.delay / tc).round() as usize,
                    code_length: l_len,
                });
            }
            // chips whose support can contain t - τ
            let centre = ((t - tgt.delay) / tc).floor() as i64;
            let mut sample = C64::new(0.0, 0.0);
            for j in centre - 1..=centre + 1 {
                let start = j as f64 * tc;
                let s = pulse(t - tgt.delay - start);
                if s == 0.0 {
                    continue;
                }
                let chip = phases[j.rem_euclid(l_len as i64) as usize];
                let tx_frame = j.div_euclid(l_len as i64).max(0) as usize;
                let a = match timing {
                    SymbolTiming::ReceiveAligned => symbols[rx_frame],
                    SymbolTiming::Transmit => symbols[tx_frame.min(m_len - 1)],
                };
                sample += a * C64::from_polar(s, chip);
            }
            let doppler_time = if config.intra_block_doppler {
                t
            } else {
                rx_frame as f64 * tb
            };
            let common = tgt.gain * sample * C64::from_polar(1.0, -2.0 * PI * tgt.doppler * doppler_time);
            for p in 0..n_rx {
                let c = C64::from_polar(1.0, -kd * tgt.arrival_angle.sin() * p as f64);
                out[[rx_frame, n % l_len, p]] += common * c;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(l: usize, m: usize, mux: f64) -> PmcwConfig {
        PmcwConfig {
            code_length: l,
            frames: m,
            chip_duration: 1e-9,
            carrier_hz: 60e9,
            mux_percent: mux,
            geometry: ArrayGeometry::half_wavelength(2, 3, 5e-3).unwrap(),
            intra_block_doppler: true,
            delay_policy: DelayPolicy::Reject,
        }
    }

    #[test]
    fn schedule_splits() {
        let s = pmcw_schedule(&config(4, 10, 100.0));
        assert!(s.labels.iter().all(|&k| k == FrameKind::Radar));
        let s = pmcw_schedule(&config(4, 10, 50.0));
        assert_eq!(s.radar_frames(), 5);
        assert_eq!(s.labels[4], FrameKind::Radar);
        assert_eq!(s.labels[5], FrameKind::RadarComm);
        assert!(!s.non_identifiable);
        let s = pmcw_schedule(&config(4, 10, 0.0));
        assert_eq!(s.radar_frames(), 0);
        assert!(s.non_identifiable);
    }

    #[test]
    fn single_chip_transmit() {
        let mut cfg = config(1, 1, 100.0);
        cfg.geometry.n_tx = 3;
        let code = CodeSequence::from_phases(vec![0.0], 1e-9).unwrap();
        let x = pmcw_transmit(&cfg, &code, &[C64::new(1.0, 0.0)], 0.0).unwrap();
        assert_eq!(x.dim(), (3, 1, 1));
        assert!(x.iter().all(|c| (c - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn binary_code_chip_amplitudes() {
        let cfg = config(2, 1, 100.0);
        let code = CodeSequence::from_phases(vec![0.0, PI], 1e-9).unwrap();
        let x = pmcw_transmit(&cfg, &code, &[C64::new(1.0, 0.0)], 0.0).unwrap();
        assert!((x[[0, 0, 0]] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((x[[0, 0, 1]] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        // broadside beam: every antenna identical
        assert_eq!(x.index_axis(Axis(0), 0), x.index_axis(Axis(0), 1));
    }

    #[test]
    fn transmit_length_mismatch() {
        let cfg = config(4, 2, 100.0);
        let code = CodeSequence::from_signs(&[1, -1, 1], 1e-9).unwrap();
        let ones = vec![C64::new(1.0, 0.0); 2];
        assert!(pmcw_transmit(&cfg, &code, &ones, 0.0).is_err());
        let code = CodeSequence::from_signs(&[1, -1, 1, 1], 1e-9).unwrap();
        assert!(pmcw_transmit(&cfg, &code, &ones[..1], 0.0).is_err());
    }

    #[test]
    fn payload_layout_uses_last_radar_frame_as_reference() {
        let s = pmcw_schedule(&config(4, 6, 50.0));
        assert_eq!(pmcw_payload_capacity(&s, DpskOrder::Quaternary), 6);
        let p = pmcw_frame_symbols(&s, &[1, 1, 0, 1, 1, 0], DpskOrder::Quaternary).unwrap();
        assert_eq!(p.reference_frame, 2);
        assert_eq!(p.symbols.len(), 6);
        assert!(p.symbols[..3].iter().all(|c| *c == C64::new(1.0, 0.0)));
        assert!(pmcw_frame_symbols(&s, &[1, 1], DpskOrder::Quaternary).is_err());
    }

    #[test]
    fn delays_must_fit_one_block() {
        let cfg = config(8, 2, 100.0);
        let code = CodeSequence::m_sequence(3, 1e-9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ones = vec![C64::new(1.0, 0.0); 2];
        let far = Target {
            delay: 7e-9,
            doppler: 0.0,
            arrival_angle: 0.0,
            gain: C64::new(1.0, 0.0),
        };
        let cfg7 = config(7, 2, 100.0);
        let err = synthesize_cube(&[far], 0.0, &cfg7, &code, &ones, &mut rng).unwrap_err();
        assert!(matches!(err, JrcError::RangeAmbiguity { shift: 7, .. }));
        let frac = Target { delay: 2.5e-9, ..far };
        let code8 = CodeSequence::from_signs(&[1, 1, 1, -1, 1, -1, -1, 1], 1e-9).unwrap();
        let err = synthesize_cube(&[frac], 0.0, &cfg, &code8, &ones, &mut rng).unwrap_err();
        assert!(matches!(err, JrcError::FractionalDelay { .. }));
        let mut rounding = cfg.clone();
        rounding.delay_policy = DelayPolicy::Round;
        let frac = Target { delay: 2.4e-9, ..far };
        let cube = synthesize_cube(&[frac], 0.0, &rounding, &code8, &ones, &mut rng).unwrap();
        assert_eq!(cube.chip_shifts, vec![2]);
        assert!((cube.delay_residuals[0] - 0.4).abs() < 1e-9);
    }
}
