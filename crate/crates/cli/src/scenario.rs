//! Monte-Carlo trial pipeline: synthesize, estimate, decode, refine, score.
//!
//! Trial `t` draws everything from two ChaCha8 streams of the master seed,
//! `2t` for scene parameters and payload and `2t + 1` for noise. Noise is
//! drawn as unit Gaussians scaled by the SNR, so every sweep point sees the
//! same underlying draws.

use jrc_core::channel::{draw_small_scale, Target};
use jrc_core::estim::{
    decode_ofdma_symbols, decode_pmcw_symbols, golay_range_estimate, ofdma_range_doppler_angle,
    ofdma_residual_refine, pmcw_range_doppler, pmcw_residual_refine, EstimatorConfig,
    TargetEstimate,
};
use jrc_core::ofdma::{self, ofdma_payload_capacity, ofdma_pilot_mask, ofdma_symbol_grid, OfdmaConfig};
use jrc_core::pmcw::{self, pmcw_frame_symbols, pmcw_payload_capacity, pmcw_schedule, PmcwConfig};
use jrc_core::sigcore::{golay_pair, CodeSequence, DpskOrder};
use jrc_core::{C64, SPEED_OF_LIGHT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{ScenarioConfig, Waveform};

/// Errors of one true target against its nearest estimate. `NaN` marks a
/// parameter the waveform does not estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamErrors {
    pub range: f64,
    pub doppler: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub estimates: Vec<TargetEstimate>,
    /// One entry per true target.
    pub errors: Vec<ParamErrors>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub truth: Vec<Target>,
    /// Pilot-only (radar-only) estimates.
    pub coarse: Option<StageResult>,
    /// Refined with the decoded symbols.
    pub refined: Option<StageResult>,
    /// Refined with the transmitted symbols.
    pub genie: Option<StageResult>,
    pub bits: usize,
    pub bit_errors: usize,
    pub failure: Option<String>,
}

/// Parameters of one sweep point shared by all its trials.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub mux_percent: f64,
    pub snr_db: f64,
}

impl SweepPoint {
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

pub fn trial_rngs(seed: u64, trial: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut params = ChaCha8Rng::seed_from_u64(seed);
    params.set_stream(2 * trial as u64);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(2 * trial as u64 + 1);
    (params, noise)
}

/// PMCW code shared by every trial of a run.
pub fn pmcw_code(cfg: &ScenarioConfig) -> jrc_core::Result<CodeSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    CodeSequence::default_for_length(cfg.pmcw.code_length, cfg.pmcw.chip_duration_s, &mut rng)
}

/// Scales per-axis differences to resolution cells for estimate matching.
struct Resolution {
    delay: f64,
    doppler: f64,
    sine: f64,
}

impl Resolution {
    fn distance(&self, t: &Target, e: &TargetEstimate) -> f64 {
        (e.delay - t.delay).abs() / self.delay
            + (e.doppler - t.doppler).abs() / self.doppler
            + (e.angle.sin() - t.arrival_angle.sin()).abs() / self.sine
    }
}

fn resolution(cfg: &ScenarioConfig) -> Resolution {
    match cfg.waveform {
        Waveform::Pmcw => {
            let p = &cfg.pmcw;
            let tb = p.code_length as f64 * p.chip_duration_s;
            Resolution {
                delay: p.chip_duration_s,
                doppler: 1.0 / (p.frames as f64 * tb),
                sine: 1.0 / (p.n_rx as f64 * p.spacing_over_lambda),
            }
        }
        Waveform::Ofdma => {
            let o = &cfg.ofdma;
            Resolution {
                delay: 1.0 / (o.subcarriers as f64 * o.spacing_hz),
                doppler: o.spacing_hz / o.symbols as f64,
                sine: 2.0 / o.n_rx as f64,
            }
        }
        Waveform::Golay => Resolution {
            delay: 1.0 / cfg.golay.sample_rate_hz,
            doppler: f64::INFINITY,
            sine: f64::INFINITY,
        },
    }
}

fn score(cfg: &ScenarioConfig, truth: &[Target], estimates: Vec<TargetEstimate>) -> Result<StageResult, String> {
    if estimates.is_empty() {
        return Err("no target detected".into());
    }
    let res = resolution(cfg);
    let golay = cfg.waveform == Waveform::Golay;
    let errors = truth
        .iter()
        .map(|t| {
            let best = estimates
                .iter()
                .min_by(|a, b| res.distance(t, a).total_cmp(&res.distance(t, b)))
                .expect("non-empty");
            ParamErrors {
                range: SPEED_OF_LIGHT * (best.delay - t.delay) / 2.0,
                doppler: if golay { f64::NAN } else { best.doppler - t.doppler },
                angle: if golay { f64::NAN } else { best.angle - t.arrival_angle },
            }
        })
        .collect();
    Ok(StageResult { estimates, errors })
}

/// Targets of one trial: configured values, optionally jittered within one
/// resolution cell, times a fading draw.
pub fn realize_targets(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> jrc_core::Result<Vec<Target>> {
    let res = resolution(cfg);
    cfg.scatterers()
        .into_iter()
        .map(|s| {
            // always draw, so the stream layout does not depend on the flags
            let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let beta = draw_small_scale(s.fading, 1.0, rng)?;
            let mut t = Target {
                delay: s.delay,
                doppler: s.doppler,
                arrival_angle: s.arrival_angle,
                gain: s.gain * beta,
            };
            if cfg.scene.jitter {
                if cfg.waveform == Waveform::Ofdma {
                    t.delay = (t.delay + (u[0] - 0.5) * res.delay).max(0.0);
                }
                if cfg.waveform != Waveform::Golay {
                    t.doppler += (u[1] - 0.5) * res.doppler;
                    let sine = (t.arrival_angle.sin() + (u[2] - 0.5) * res.sine).clamp(-0.99, 0.99);
                    t.arrival_angle = sine.asin();
                }
            }
            Ok(t)
        })
        .collect()
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn count_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Runs one trial; failures are reported in the outcome, never raised.
pub fn run_trial(cfg: &ScenarioConfig, point: &SweepPoint, code: Option<&CodeSequence>, trial: usize) -> TrialOutcome {
    let (mut params, mut noise) = trial_rngs(cfg.seed, trial);
    let mut outcome = TrialOutcome {
        trial,
        truth: Vec::new(),
        coarse: None,
        refined: None,
        genie: None,
        bits: 0,
        bit_errors: 0,
        failure: None,
    };
    let truth = match realize_targets(cfg, &mut params) {
        Ok(t) => t,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    outcome.truth = truth.clone();
    let est = cfg.estimator_config();
    let result = match cfg.waveform {
        Waveform::Pmcw => pmcw_trial(cfg, point, code.expect("PMCW code"), &truth, &est, &mut params, &mut noise, &mut outcome),
        Waveform::Ofdma => ofdma_trial(cfg, point, &truth, &est, &mut params, &mut noise, &mut outcome),
        Waveform::Golay => golay_trial(cfg, point, &truth, &est, &mut noise, &mut outcome),
    };
    if let Err(e) = result {
        outcome.failure = Some(e);
    }
    outcome
}

#[allow(clippy::too_many_arguments)]
fn pmcw_trial(
    cfg: &ScenarioConfig,
    point: &SweepPoint,
    code: &CodeSequence,
    truth: &[Target],
    est: &EstimatorConfig,
    params: &mut ChaCha8Rng,
    noise: &mut ChaCha8Rng,
    out: &mut TrialOutcome,
) -> Result<(), String> {
    let s = |e: jrc_core::JrcError| e.to_string();
    let pc: PmcwConfig = cfg.pmcw_config(point.mux_percent).map_err(s)?;
    let order: DpskOrder = cfg.order();
    let schedule = pmcw_schedule(&pc);
    let bits = random_bits(pmcw_payload_capacity(&schedule, order), params);
    let payload = pmcw_frame_symbols(&schedule, &bits, order).map_err(s)?;
    let cube = pmcw::synthesize_cube(truth, point.noise_variance(), &pc, code, &payload.symbols, noise).map_err(s)?;

    let coarse = pmcw_range_doppler(&cube, &pc, code, est).map_err(s)?;
    out.coarse = Some(score(cfg, truth, coarse.estimates.clone())?);
    let decoded = decode_pmcw_symbols(&cube, &pc, code, &coarse.estimates, order).map_err(s)?;
    out.bits = bits.len();
    out.bit_errors = count_errors(&bits, &decoded.bits);
    let refined = pmcw_residual_refine(&cube, &pc, code, &decoded.symbols, &coarse.estimates, est).map_err(s)?;
    out.refined = Some(score(cfg, truth, refined)?);
    let genie = pmcw_residual_refine(&cube, &pc, code, &payload.symbols, &coarse.estimates, est).map_err(s)?;
    out.genie = Some(score(cfg, truth, genie)?);
    Ok(())
}

fn ofdma_trial(
    cfg: &ScenarioConfig,
    point: &SweepPoint,
    truth: &[Target],
    est: &EstimatorConfig,
    params: &mut ChaCha8Rng,
    noise: &mut ChaCha8Rng,
    out: &mut TrialOutcome,
) -> Result<(), String> {
    let s = |e: jrc_core::JrcError| e.to_string();
    let oc: OfdmaConfig = cfg.ofdma_config(point.mux_percent).map_err(s)?;
    let order = cfg.order();
    let bits = random_bits(ofdma_payload_capacity(&ofdma_pilot_mask(&oc), oc.symbols, order), params);
    let payload = ofdma_symbol_grid(&oc, &bits, order).map_err(s)?;
    let cube = ofdma::synthesize_cube(truth, point.noise_variance(), &oc, &payload.grid, noise).map_err(s)?;

    let coarse = ofdma_range_doppler_angle(&cube, &oc, &payload.grid, est).map_err(s)?;
    out.coarse = Some(score(cfg, truth, coarse.estimates.clone())?);
    let decoded = decode_ofdma_symbols(&cube, &oc, &payload.grid, &coarse.estimates, order).map_err(s)?;
    out.bits = bits.len();
    out.bit_errors = count_errors(&bits, &decoded.bits);
    let refined = ofdma_residual_refine(&cube, &oc, &decoded.grid, &coarse.estimates, est).map_err(s)?;
    out.refined = Some(score(cfg, truth, refined)?);
    let genie = ofdma_residual_refine(&cube, &oc, &payload.grid, &coarse.estimates, est).map_err(s)?;
    out.genie = Some(score(cfg, truth, genie)?);
    Ok(())
}

/// Golay preamble through the tapped-delay channel; Doppler and angle are
/// not observed by this waveform.
fn golay_trial(
    cfg: &ScenarioConfig,
    point: &SweepPoint,
    truth: &[Target],
    est: &EstimatorConfig,
    noise: &mut ChaCha8Rng,
    out: &mut TrialOutcome,
) -> Result<(), String> {
    let g = &cfg.golay;
    let pair = golay_pair(g.log2_length).map_err(|e| e.to_string())?;
    let preamble = pair.preamble(g.guard);
    let mut rx = vec![C64::new(0.0, 0.0); preamble.len()];
    for t in truth {
        let lag = (t.delay * g.sample_rate_hz).round() as usize;
        if lag > g.guard {
            return Err(format!("path delay of {lag} samples exceeds the guard of {}", g.guard));
        }
        for (i, x) in preamble.iter().enumerate() {
            if i + lag < rx.len() {
                rx[i + lag] += t.gain * x;
            }
        }
    }
    let sd = (point.noise_variance() / 2.0).sqrt();
    for y in rx.iter_mut() {
        let re: f64 = noise.sample(StandardNormal);
        let im: f64 = noise.sample(StandardNormal);
        *y += C64::new(re * sd, im * sd);
    }
    let profile = golay_range_estimate(&rx, &pair, g.guard, est.threshold_db).map_err(|e| e.to_string())?;
    let mut peaks = profile.peaks.clone();
    peaks.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.0.cmp(&b.0)));
    peaks.truncate(est.max_targets.max(1));
    let two_n = 2.0 * pair.len() as f64;
    let estimates: Vec<TargetEstimate> = peaks
        .iter()
        .map(|&(lag, v)| {
            let delay = lag as f64 / g.sample_rate_hz;
            TargetEstimate {
                delay,
                range: SPEED_OF_LIGHT * delay / 2.0,
                doppler: 0.0,
                angle: 0.0,
                amplitude: v / two_n,
            }
        })
        .collect();
    let stage = score(cfg, truth, estimates)?;
    out.refined = Some(stage.clone());
    out.genie = Some(stage.clone());
    out.coarse = Some(stage);
    Ok(())
}

/// Transmit samples and sample period of the configured waveform, payload
/// drawn from trial 0 of the master seed.
pub fn transmit_waveform(cfg: &ScenarioConfig, mux_percent: f64) -> jrc_core::Result<(Vec<C64>, f64, usize)> {
    let (mut params, _) = trial_rngs(cfg.seed, 0);
    let order = cfg.order();
    match cfg.waveform {
        Waveform::Pmcw => {
            let pc = cfg.pmcw_config(mux_percent)?;
            let code = pmcw_code(cfg)?;
            let schedule = pmcw_schedule(&pc);
            let bits = random_bits(pmcw_payload_capacity(&schedule, order), &mut params);
            let payload = pmcw_frame_symbols(&schedule, &bits, order)?;
            let x = pmcw::pmcw_waveform(&pc, &code, &payload.symbols)?;
            Ok((x, pc.chip_duration, pc.code_length))
        }
        Waveform::Ofdma => {
            let oc = cfg.ofdma_config(mux_percent)?;
            let bits = random_bits(ofdma_payload_capacity(&ofdma_pilot_mask(&oc), oc.symbols, order), &mut params);
            let grid = ofdma_symbol_grid(&oc, &bits, order)?.grid;
            let x = ofdma::ofdma_transmit(&oc, &grid)?;
            Ok((x, oc.sample_period(), oc.subcarriers))
        }
        Waveform::Golay => {
            let pair = golay_pair(cfg.golay.log2_length)?;
            Ok((pair.preamble(cfg.golay.guard), 1.0 / cfg.golay.sample_rate_hz, pair.len()))
        }
    }
}

/// Samples entering the coarse estimate per target, for the integrated SNR.
pub fn coarse_samples(cfg: &ScenarioConfig, mux_percent: f64) -> jrc_core::Result<f64> {
    Ok(match cfg.waveform {
        Waveform::Pmcw => {
            let pc = cfg.pmcw_config(mux_percent)?;
            (pmcw_schedule(&pc).radar_frames() * pc.code_length * pc.geometry.n_rx) as f64
        }
        Waveform::Ofdma => {
            let oc = cfg.ofdma_config(mux_percent)?;
            (ofdma_pilot_mask(&oc).pilot_count() * oc.symbols * oc.geometry.n_rx) as f64
        }
        Waveform::Golay => (2usize << cfg.golay.log2_length) as f64,
    })
}

/// Odd-length Doppler grid symmetric about an exact zero.
pub(crate) fn doppler_grid(bins: usize, max: f64) -> Vec<f64> {
    if bins <= 1 {
        return vec![0.0];
    }
    let half = (bins - 1) / 2;
    (0..bins)
        .map(|i| (i as f64 - half as f64) / half as f64 * max)
        .collect()
}
