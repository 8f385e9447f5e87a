use std::f64::consts::PI;

use ndarray::{s, Array2, Array3};

use super::{
    detect_targets, matched_symbol, refine_targets, signed_bin, AxisPlan, Detection, EstimatorConfig,
    TargetEstimate, Transform,
};
use crate::ofdma::{OfdmaConfig, OfdmaCube, SymbolGrid};
use crate::sigcore::{dpsk_decode, psk_decision, DpskOrder};
use crate::{JrcError, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmaDecoded {
    pub bits: Vec<u8>,
    /// Per-entry hard decisions; pilots and each row's reference stay 1.
    pub grid: SymbolGrid,
    /// Matched-filter outputs `Â[n, m]` (pilot rows left at zero).
    pub soft: Array2<C64>,
}

/// Coarse estimates from the pilot subcarriers. The range search stops at the
/// alias-free span `1 / (gap Δf)` set by the widest pilot gap.
pub fn ofdma_range_doppler_angle(
    cube: &OfdmaCube,
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    cfg: &EstimatorConfig,
) -> Result<Detection> {
    cfg.validate()?;
    let gap = grid.mask.max_gap().ok_or_else(|| {
        JrcError::NonIdentifiable("no radar subcarriers: range and symbols are coupled".into())
    })?;
    let rows: Vec<bool> = grid.mask.radar.clone();
    match estimate(cube, config, grid, &rows, gap, cfg, Stage::Detect)? {
        Output::Detection(d) => Ok(d),
        Output::Refined(_) => unreachable!("detection stage"),
    }
}

/// Re-estimates around `coarse` with every subcarrier, treating `decoded` as
/// known, on a grid `refine_factor` times finer.
pub fn ofdma_residual_refine(
    cube: &OfdmaCube,
    config: &OfdmaConfig,
    decoded: &SymbolGrid,
    coarse: &[TargetEstimate],
    cfg: &EstimatorConfig,
) -> Result<Vec<TargetEstimate>> {
    cfg.validate()?;
    if coarse.is_empty() {
        return Err(JrcError::DecodingImpossible("no coarse targets to refine".into()));
    }
    let rows = vec![true; config.subcarriers];
    match estimate(cube, config, decoded, &rows, 1, &cfg.refined(), Stage::Refine(coarse))? {
        Output::Refined(e) => Ok(e),
        Output::Detection(_) => unreachable!("refinement stage"),
    }
}

/// Matched-filters every data subcarrier against the channel rebuilt from
/// `estimates` and decodes each row differentially along slow time.
pub fn decode_ofdma_symbols(
    cube: &OfdmaCube,
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    estimates: &[TargetEstimate],
    order: DpskOrder,
) -> Result<OfdmaDecoded> {
    if estimates.is_empty() {
        return Err(JrcError::DecodingImpossible("no targets detected".into()));
    }
    check(cube, config)?;
    let mut h = Array3::<C64>::zeros(cube.data.dim());
    for e in estimates {
        h.scaled_add(e.amplitude, &atom(config, e));
    }
    let mut soft = Array2::<C64>::zeros((config.subcarriers, config.symbols));
    let mut bits = Vec::new();
    for n in grid.mask.data_indices() {
        for m in 0..config.symbols {
            soft[[n, m]] = matched_symbol(
                cube.data.slice(s![n, m, ..]).iter(),
                h.slice(s![n, m, ..]).iter(),
            );
        }
        bits.extend(dpsk_decode(&soft.row(n).to_vec(), order));
    }
    let mut a = Array2::from_elem((config.subcarriers, config.symbols), C64::new(1.0, 0.0));
    for n in grid.mask.data_indices() {
        for m in 1..config.symbols {
            a[[n, m]] = psk_decision(soft[[n, m]], order);
        }
    }
    let grid = SymbolGrid { a, mask: grid.mask.clone() };
    Ok(OfdmaDecoded { bits, grid, soft })
}

fn check(cube: &OfdmaCube, config: &OfdmaConfig) -> Result<()> {
    if cube.data.dim() != (config.subcarriers, config.symbols, config.geometry.n_rx) {
        return Err(JrcError::invalid("cube and config dimensions disagree"));
    }
    Ok(())
}

/// Unit-amplitude response of one target, symbols all 1.
fn atom(config: &OfdmaConfig, e: &TargetEstimate) -> Array3<C64> {
    let df = config.spacing_hz;
    let tsym = config.symbol_time();
    let u = e.angle.sin();
    Array3::from_shape_fn(
        (config.subcarriers, config.symbols, config.geometry.n_rx),
        |(n, m, p)| {
            C64::from_polar(
                1.0,
                2.0 * PI * (m as f64 * tsym * e.doppler - n as f64 * df * e.delay) + PI * u * p as f64,
            )
        },
    )
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
    cube: &OfdmaCube,
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    rows: &[bool],
    gap: usize,
    cfg: &EstimatorConfig,
    stage: Stage<'_>,
) -> Result<Output> {
    check(cube, config)?;
    let (nc, ns, nr) = cube.data.dim();
    if grid.a.dim() != (nc, ns) {
        return Err(JrcError::invalid("symbol grid does not match the cube"));
    }
    let prepare = |y: &Array3<C64>| {
        Array3::from_shape_fn((nc, ns, nr), |(n, m, p)| {
            let a = grid.a[[n, m]];
            if rows[n] && a.norm_sqr() > 0.0 {
                y[[n, m, p]] / a
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };

    let range_size = nc * cfg.padding[0];
    let doppler_size = ns * cfg.padding[1];
    let angle_size = if nr > 1 { nr * cfg.padding[2] } else { 1 };
    let plan = [
        AxisPlan { size: range_size, transform: Transform::Inverse, limit: range_size.div_ceil(gap), interpolate: true },
        AxisPlan { size: doppler_size, transform: Transform::Forward, limit: doppler_size, interpolate: true },
        AxisPlan { size: angle_size, transform: Transform::Forward, limit: angle_size, interpolate: true },
    ];
    let to_estimate = |b: [f64; 3]| {
        let delay = b[0] / (range_size as f64 * config.spacing_hz);
        let doppler = signed_bin(b[1], doppler_size) / (doppler_size as f64 * config.symbol_time());
        let sin = if angle_size > 1 {
            (2.0 * signed_bin(b[2], angle_size) / angle_size as f64).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        TargetEstimate::new(delay, doppler, sin.asin())
    };
    let to_bins = |e: &TargetEstimate| {
        [
            e.delay * range_size as f64 * config.spacing_hz,
            e.doppler * doppler_size as f64 * config.symbol_time(),
            e.angle.sin() * angle_size as f64 / 2.0,
        ]
    };
    let model = |e: &TargetEstimate| {
        let mut a = atom(config, e);
        for ((n, m, _), v) in a.indexed_iter_mut() {
            *v = if rows[n] { *v * grid.a[[n, m]] } else { C64::new(0.0, 0.0) };
        }
        a
    };
    let observed = Array3::from_shape_fn((nc, ns, nr), |(n, m, p)| {
        if rows[n] {
            cube.data[[n, m, p]]
        } else {
            C64::new(0.0, 0.0)
        }
    });
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
