use std::f64::consts::PI;

use ndarray::{s, Array3};

use super::{
    detect_targets, matched_symbol, refine_targets, signed_bin, AxisPlan, Detection, EstimatorConfig,
    TargetEstimate, Transform,
};
use crate::pmcw::{PmcwConfig, PmcwCube};
use crate::sigcore::{dpsk_decode, psk_decision, CodeSequence, DpskOrder};
use crate::{dsp, JrcError, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct PmcwDecoded {
    pub bits: Vec<u8>,
    /// Per-frame hard decisions `a_m`; radar frames and the reference are 1.
    pub symbols: Vec<C64>,
    /// Matched-filter outputs before the decision.
    pub soft: Vec<C64>,
}

/// Coarse estimates from the radar-only frames, whose symbols are known to be 1.
pub fn pmcw_range_doppler(
    cube: &PmcwCube,
    config: &PmcwConfig,
    code: &CodeSequence,
    cfg: &EstimatorConfig,
) -> Result<Detection> {
    cfg.validate()?;
    let radar = cube.schedule.radar_frames();
    if radar == 0 {
        return Err(JrcError::NonIdentifiable(
            "no radar-only frames: Doppler and symbols are coupled".into(),
        ));
    }
    let known = vec![C64::new(1.0, 0.0); radar];
    match estimate(cube, config, code, &known, cfg, Stage::Detect)? {
        Output::Detection(d) => Ok(d),
        Output::Refined(_) => unreachable!("detection stage"),
    }
}

/// Re-estimates around `coarse` with every frame after stripping the decoded
/// symbols, on a Doppler and angle grid `refine_factor` times finer. Delays
/// stay on whole chips.
pub fn pmcw_residual_refine(
    cube: &PmcwCube,
    config: &PmcwConfig,
    code: &CodeSequence,
    symbols: &[C64],
    coarse: &[TargetEstimate],
    cfg: &EstimatorConfig,
) -> Result<Vec<TargetEstimate>> {
    cfg.validate()?;
    if coarse.is_empty() {
        return Err(JrcError::DecodingImpossible("no coarse targets to refine".into()));
    }
    if symbols.len() != cube.frames() {
        return Err(JrcError::invalid(format!(
            "{} symbols for {} frames",
            symbols.len(),
            cube.frames()
        )));
    }
    match estimate(cube, config, code, symbols, &cfg.refined(), Stage::Refine(coarse))? {
        Output::Refined(e) => Ok(e),
        Output::Detection(_) => unreachable!("refinement stage"),
    }
}

/// Rebuilds the channel from `estimates`, matched-filters every frame and
/// differentially decodes from the reference frame on. Symbols for
/// refinement are per-frame decisions, so a bit error does not propagate.
pub fn decode_pmcw_symbols(
    cube: &PmcwCube,
    config: &PmcwConfig,
    code: &CodeSequence,
    estimates: &[TargetEstimate],
    order: DpskOrder,
) -> Result<PmcwDecoded> {
    if estimates.is_empty() {
        return Err(JrcError::DecodingImpossible("no targets detected".into()));
    }
    let chips = code.chips();
    let mut h = Array3::<C64>::zeros(cube.data.dim());
    for e in estimates {
        h.scaled_add(e.amplitude, &atom(config, &chips, e));
    }
    let soft: Vec<C64> = (0..cube.frames())
        .map(|m| {
            matched_symbol(
                cube.data.slice(s![m, .., ..]).iter(),
                h.slice(s![m, .., ..]).iter(),
            )
        })
        .collect();
    let radar = cube.schedule.radar_frames();
    let reference = radar.max(1) - 1;
    let bits = dpsk_decode(&soft[reference..], order);
    let symbols = soft
        .iter()
        .enumerate()
        .map(|(m, z)| if m <= reference || m < radar { C64::new(1.0, 0.0) } else { psk_decision(*z, order) })
        .collect();
    Ok(PmcwDecoded { bits, symbols, soft })
}

/// Unit-amplitude response of one target over the whole cube, `a_m = 1`.
fn atom(config: &PmcwConfig, chips: &[C64], e: &TargetEstimate) -> Array3<C64> {
    let (m_len, l_len, n_rx) = (config.frames, config.code_length, config.geometry.n_rx);
    let tc = config.chip_duration;
    let k = ((e.delay / tc).round() as i64).rem_euclid(l_len as i64) as usize;
    let kd = config.geometry.wavenumber() * config.geometry.spacing();
    Array3::from_shape_fn((m_len, l_len, n_rx), |(m, l, p)| {
        let t = if config.intra_block_doppler {
            (m * l_len + l) as f64
        } else {
            (m * l_len) as f64
        };
        chips[(l + l_len - k) % l_len]
            * C64::from_polar(1.0, -2.0 * PI * e.doppler * t * tc - kd * e.angle.sin() * p as f64)
    })
}

enum Stage<'a> {
    Detect,
    Refine(&'a [TargetEstimate]),
}

enum Output {
    Detection(Detection),
    Refined(Vec<TargetEstimate>),
}

fn estimate(
    cube: &PmcwCube,
    config: &PmcwConfig,
    code: &CodeSequence,
    known: &[C64],
    cfg: &EstimatorConfig,
    stage: Stage<'_>,
) -> Result<Output> {
    let (l_len, n_rx) = (cube.code_length(), cube.antennas());
    if code.len() != l_len || config.code_length != l_len || config.frames != cube.frames() {
        return Err(JrcError::invalid("cube, code and config dimensions disagree"));
    }
    let frames = known.len();
    let chips = code.chips();

    // fast-time correlation, laid out (range, frame, antenna)
    let prepare = |y: &Array3<C64>| {
        let mut corr = Array3::<C64>::zeros((l_len, frames, n_rx));
        for (m, a) in known.iter().enumerate() {
            let strip = a.conj() / a.norm_sqr().max(f64::MIN_POSITIVE);
            for p in 0..n_rx {
                let y: Vec<C64> = y.slice(s![m, .., p]).iter().map(|v| v * strip).collect();
                for (k, r) in dsp::circular_xcorr(&y, &chips).into_iter().enumerate() {
                    corr[[k, m, p]] = r;
                }
            }
        }
        corr
    };

    let angle_size = if n_rx > 1 { n_rx * cfg.padding[2] } else { 1 };
    let doppler_size = frames * cfg.padding[1];
    let plan = [
        AxisPlan { size: l_len, transform: Transform::Keep, limit: l_len, interpolate: false },
        AxisPlan { size: doppler_size, transform: Transform::Forward, limit: doppler_size, interpolate: true },
        AxisPlan { size: angle_size, transform: Transform::Forward, limit: angle_size, interpolate: true },
    ];
    let tb = config.block_time();
    let dl = config.geometry.spacing_over_lambda;
    let to_estimate = |b: [f64; 3]| {
        let doppler = -signed_bin(b[1], doppler_size) / (doppler_size as f64 * tb);
        let sin = if angle_size > 1 {
            (-signed_bin(b[2], angle_size) / (angle_size as f64 * dl)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        TargetEstimate::new(b[0].round() * config.chip_duration, doppler, sin.asin())
    };
    let to_bins = |e: &TargetEstimate| {
        [
            e.delay / config.chip_duration,
            -e.doppler * doppler_size as f64 * tb,
            -e.angle.sin() * angle_size as f64 * dl,
        ]
    };
    let model = |e: &TargetEstimate| {
        let mut a = atom(config, &chips, e).slice(s![..frames, .., ..]).to_owned();
        for (m, mut frame) in a.outer_iter_mut().enumerate() {
            frame *= known[m];
        }
        a
    };
    let observed = cube.data.slice(s![..frames, .., ..]).to_owned();
    Ok(match stage {
        Stage::Detect => Output::Detection(detect_targets(
            &observed,
            prepare,
            &plan,
            cfg,
            cfg.max_targets,
            to_estimate,
            model,
        )?),
        Stage::Refine(coarse) => Output::Refined(refine_targets(
            &observed,
            prepare,
            &plan,
            cfg,
            coarse,
            to_estimate,
            to_bins,
            model,
        )?),
    })
}
