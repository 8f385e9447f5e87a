//! Sweep orchestration and file outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use jrc_core::alloc::detection_probability;
use jrc_core::channel::Target;
use jrc_core::perf::{
    ambiguity_function, jrc_objective, mmse_from_rate, ofdma_crlb_proxy, peak_sidelobe_ratio,
    pmcw_crlb_proxy, rmse, TradeoffSpec,
};
use jrc_core::pmcw::{pmcw_frame_symbols, pmcw_payload_capacity, pmcw_schedule};
use jrc_core::ofdma::{ofdma_payload_capacity, ofdma_pilot_mask, ofdma_symbol_grid};
use jrc_core::C64;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, Waveform};
use crate::scenario::{
    coarse_samples, doppler_grid, pmcw_code, run_trial, transmit_waveform, ParamErrors, StageResult,
    SweepPoint, TrialOutcome,
};

/// Overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(d) = &self.out_dir {
            cfg.output_dir = d.display().to_string();
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRmse {
    pub range_m: f64,
    pub doppler_hz: f64,
    pub angle_rad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub mux_percent: f64,
    pub snr_db: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub coarse: StageRmse,
    pub refined: StageRmse,
    pub genie: StageRmse,
    pub bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub psl_db: f64,
    pub detection_probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config_version: u32,
    pub config_hash: String,
    pub waveform: Waveform,
    pub seed: u64,
    pub trials: usize,
    pub points: Vec<PointReport>,
    pub wall_clock_s: f64,
}

fn stage_rmse(outcomes: &[TrialOutcome], pick: impl Fn(&TrialOutcome) -> Option<&StageResult>) -> StageRmse {
    let collect = |f: &dyn Fn(&ParamErrors) -> f64| -> f64 {
        let errs: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.failure.is_none())
            .filter_map(&pick)
            .flat_map(|s| s.errors.iter().map(f))
            .filter(|e| e.is_finite())
            .collect();
        let zeros = vec![0.0; errs.len()];
        rmse(&errs, &zeros).unwrap_or(f64::NAN)
    };
    StageRmse {
        range_m: collect(&|e| e.range),
        doppler_hz: collect(&|e| e.doppler),
        angle_rad: collect(&|e| e.angle),
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build().context("building worker pool")
}

/// Outcomes of every trial of one sweep point, in trial order.
pub fn run_point(cfg: &ScenarioConfig, point: &SweepPoint, workers: Option<usize>) -> Result<Vec<TrialOutcome>> {
    let code = match cfg.waveform {
        Waveform::Pmcw => Some(pmcw_code(cfg)?),
        _ => None,
    };
    let pool = pool(workers)?;
    Ok(pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, point, code.as_ref(), t))
            .collect()
    }))
}

fn delay_cut_psl(cfg: &ScenarioConfig, mux: f64) -> f64 {
    let Ok((x, ts, n)) = transmit_waveform(cfg, mux) else {
        return f64::NAN;
    };
    let max_lag = if cfg.af.max_lag > 0 { cfg.af.max_lag } else { n };
    ambiguity_function(&x, ts, max_lag, &[0.0])
        .ok()
        .and_then(|af| peak_sidelobe_ratio(&af.delay_cut(0.0)).ok())
        .unwrap_or(f64::NAN)
}

/// Runs every sweep point and writes the result files into the output directory.
pub fn run_scenario(cfg: &ScenarioConfig, options: &RunOptions) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    options.apply(&mut cfg);
    cfg.validate()?;
    let started = Instant::now();
    let out = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut rmse_rows = Vec::new();
    let mut ber_rows = Vec::new();
    let mut estimate_rows = Vec::new();
    let mut objective_rows = Vec::new();
    let mut points = Vec::new();

    for &mux in &cfg.sweep.mux_percent {
        let psl = delay_cut_psl(&cfg, mux);
        let samples = coarse_samples(&cfg, mux)?;
        for &snr_db in &cfg.sweep.snr_db {
            let point = SweepPoint { mux_percent: mux, snr_db };
            let outcomes = run_point(&cfg, &point, options.workers)?;
            let failures = outcomes.iter().filter(|o| o.failure.is_some()).count();
            let coarse = stage_rmse(&outcomes, |o| o.coarse.as_ref());
            let refined = stage_rmse(&outcomes, |o| o.refined.as_ref());
            let genie = stage_rmse(&outcomes, |o| o.genie.as_ref());
            let bits: usize = outcomes.iter().filter(|o| o.failure.is_none()).map(|o| o.bits).sum();
            let bit_errors: usize = outcomes.iter().filter(|o| o.failure.is_none()).map(|o| o.bit_errors).sum();
            let ber = if bits > 0 { bit_errors as f64 / bits as f64 } else { f64::NAN };
            let power: f64 = cfg.scatterers().iter().map(|s| s.gain.norm_sqr()).sum();
            let p_d = detection_probability(power * samples / point.noise_variance(), cfg.alpha)?;

            rmse_rows.push(vec![
                fmt(mux),
                fmt(snr_db),
                cfg.trials.to_string(),
                failures.to_string(),
                fmt(coarse.range_m),
                fmt(refined.range_m),
                fmt(genie.range_m),
                fmt(coarse.doppler_hz),
                fmt(refined.doppler_hz),
                fmt(genie.doppler_hz),
                fmt(coarse.angle_rad),
                fmt(refined.angle_rad),
                fmt(genie.angle_rad),
            ]);
            ber_rows.push(vec![fmt(mux), fmt(snr_db), bits.to_string(), bit_errors.to_string(), fmt(ber)]);
            for o in &outcomes {
                estimate_rows.extend(estimate_lines(mux, snr_db, o));
            }
            for &w in &cfg.sweep.weights {
                let (comm, radar, obj) = objective(&cfg, &point, w);
                objective_rows.push(vec![fmt(mux), fmt(snr_db), fmt(w), fmt(comm), fmt(radar), fmt(obj)]);
            }
            points.push(PointReport {
                mux_percent: mux,
                snr_db,
                trials: cfg.trials,
                failures,
                failure_rate: failures as f64 / cfg.trials as f64,
                coarse,
                refined,
                genie,
                bits,
                bit_errors,
                ber,
                psl_db: psl,
                detection_probability: p_d,
            });
        }
    }

    write_csv(
        &out.join("rmse_vs_snr.csv"),
        &[
            "mux_percent", "snr_db", "trials", "failures",
            "rmse_range_coarse_m", "rmse_range_refined_m", "rmse_range_genie_m",
            "rmse_doppler_coarse_hz", "rmse_doppler_refined_hz", "rmse_doppler_genie_hz",
            "rmse_angle_coarse_rad", "rmse_angle_refined_rad", "rmse_angle_genie_rad",
        ],
        &rmse_rows,
    )?;
    write_csv(
        &out.join("ber_vs_snr.csv"),
        &["mux_percent", "snr_db", "bits", "bit_errors", "ber"],
        &ber_rows,
    )?;
    write_csv(
        &out.join("estimates.csv"),
        &[
            "mux_percent", "snr_db", "trial", "target",
            "true_delay_s", "est_delay_s", "refined_delay_s",
            "true_doppler_hz", "est_doppler_hz", "refined_doppler_hz",
            "true_angle_rad", "est_angle_rad", "refined_angle_rad",
            "ber", "failure",
        ],
        &estimate_rows,
    )?;
    write_csv(
        &out.join("objective.csv"),
        &["mux_percent", "snr_db", "weight", "comm_term_log2", "radar_term_log2", "objective_log2"],
        &objective_rows,
    )?;
    export_af_to(&cfg, &out)?;

    let report = RunReport {
        config_version: cfg.version,
        config_hash: cfg.hash(),
        waveform: cfg.waveform,
        seed: cfg.seed,
        trials: cfg.trials,
        points,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out.join("report.json"), json).with_context(|| format!("writing {}", out.join("report.json").display()))?;
    Ok(report)
}

fn estimate_lines(mux: f64, snr_db: f64, o: &TrialOutcome) -> Vec<Vec<String>> {
    let ber = if o.bits > 0 { o.bit_errors as f64 / o.bits as f64 } else { f64::NAN };
    let failure = o.failure.clone().unwrap_or_default().replace([',', '\n'], ";");
    o.truth
        .iter()
        .enumerate()
        .map(|(q, t)| {
            let pick = |s: &Option<StageResult>, f: &dyn Fn(&jrc_core::estim::TargetEstimate) -> f64| {
                s.as_ref()
                    .and_then(|s| nearest(t, &s.estimates))
                    .map(f)
                    .unwrap_or(f64::NAN)
            };
            vec![
                fmt(mux),
                fmt(snr_db),
                o.trial.to_string(),
                q.to_string(),
                fmt(t.delay),
                fmt(pick(&o.coarse, &|e| e.delay)),
                fmt(pick(&o.refined, &|e| e.delay)),
                fmt(t.doppler),
                fmt(pick(&o.coarse, &|e| e.doppler)),
                fmt(pick(&o.refined, &|e| e.doppler)),
                fmt(t.arrival_angle),
                fmt(pick(&o.coarse, &|e| e.angle)),
                fmt(pick(&o.refined, &|e| e.angle)),
                fmt(ber),
                failure.clone(),
            ]
        })
        .collect()
}

fn nearest<'a>(t: &Target, est: &'a [jrc_core::estim::TargetEstimate]) -> Option<&'a jrc_core::estim::TargetEstimate> {
    est.iter()
        .min_by(|a, b| (a.delay - t.delay).abs().total_cmp(&(b.delay - t.delay).abs()))
}

/// Communications term, radar term and weighted objective at one sweep point.
/// The rate is `log2(1 + SNR)`, `δ = 1 - μ`, and the radar term uses the CRLB
/// proxy of the first configured target.
fn objective(cfg: &ScenarioConfig, point: &SweepPoint, weight: f64) -> (f64, f64, f64) {
    let snr = 1.0 / point.noise_variance();
    let rate = (1.0 + snr).log2();
    let delta = 1.0 - point.mux_percent / 100.0;
    let Some(first) = cfg.scatterers().first().map(|s| Target {
        delay: s.delay,
        doppler: s.doppler,
        arrival_angle: s.arrival_angle,
        gain: s.gain,
    }) else {
        return (f64::NAN, f64::NAN, f64::NAN);
    };
    let (n, crlb) = match crlb_for(cfg, point, &first) {
        Some(v) => v,
        None => return (f64::NAN, f64::NAN, f64::NAN),
    };
    let spec = |w: f64| TradeoffSpec {
        rate,
        delta,
        code_length: n,
        mmse: mmse_from_rate(rate, n).ok(),
        crlb: crlb.clone(),
        targets: 1,
        weight: w,
        bandwidth: 0.0,
    };
    let comm = jrc_objective(&spec(1.0)).unwrap_or(f64::NAN);
    let radar = jrc_objective(&TradeoffSpec { delta: 1.0, ..spec(0.0) }).unwrap_or(f64::NAN);
    let obj = jrc_objective(&spec(weight)).unwrap_or(f64::NAN);
    (comm, radar, obj)
}

fn crlb_for(cfg: &ScenarioConfig, point: &SweepPoint, target: &Target) -> Option<(usize, DMatrix<f64>)> {
    let (mut params, _) = crate::scenario::trial_rngs(cfg.seed, 0);
    let order = cfg.order();
    let bits = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u8> {
        use rand::Rng;
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    };
    match cfg.waveform {
        Waveform::Pmcw => {
            let pc = cfg.pmcw_config(point.mux_percent).ok()?;
            let code = pmcw_code(cfg).ok()?;
            let schedule = pmcw_schedule(&pc);
            let b = bits(pmcw_payload_capacity(&schedule, order), &mut params);
            let symbols = pmcw_frame_symbols(&schedule, &b, order).ok()?.symbols;
            let t = Target { delay: (target.delay / pc.chip_duration).round() * pc.chip_duration, ..*target };
            let crlb = pmcw_crlb_proxy(&pc, &code, &symbols, &t, point.noise_variance()).ok()?;
            Some((pc.code_length, crlb))
        }
        Waveform::Ofdma => {
            let oc = cfg.ofdma_config(point.mux_percent).ok()?;
            let b = bits(ofdma_payload_capacity(&ofdma_pilot_mask(&oc), oc.symbols, order), &mut params);
            let grid = ofdma_symbol_grid(&oc, &b, order).ok()?.grid;
            let crlb = ofdma_crlb_proxy(&oc, &grid, target, point.noise_variance()).ok()?;
            Some((oc.subcarriers, crlb))
        }
        Waveform::Golay => None,
    }
}

/// Writes the ambiguity surface of the configured waveform and its two cuts.
pub fn export_af(cfg: &ScenarioConfig, options: &RunOptions) -> Result<PathBuf> {
    let mut cfg = cfg.clone();
    options.apply(&mut cfg);
    let out = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    export_af_to(&cfg, &out)?;
    Ok(out)
}

fn export_af_to(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let (x, ts, n) = transmit_waveform(cfg, cfg.af.mux_percent)?;
    let max_lag = if cfg.af.max_lag > 0 { cfg.af.max_lag } else { n };
    let block = match cfg.waveform {
        Waveform::Pmcw => cfg.pmcw.code_length as f64 * ts,
        Waveform::Ofdma => (cfg.ofdma.subcarriers + cfg.ofdma.cp_len) as f64 * ts,
        Waveform::Golay => n as f64 * ts,
    };
    let dopplers = doppler_grid(cfg.af.doppler_bins, 0.5 / block);
    let af = ambiguity_function(&x, ts, max_lag, &dopplers)?;

    let mut rows = Vec::with_capacity(af.magnitude.len());
    for (r, nu) in af.dopplers.iter().enumerate() {
        for (c, tau) in af.delays.iter().enumerate() {
            rows.push(vec![fmt(*tau), fmt(*nu), fmt(af.magnitude[[r, c]])]);
        }
    }
    write_csv(&out.join("af_surface.csv"), &["delay_s", "doppler_hz", "magnitude"], &rows)?;
    let cube = ndarray::Array3::from_shape_fn((1, af.dopplers.len(), af.delays.len()), |(_, r, c)| {
        C64::new(af.magnitude[[r, c]], 0.0)
    });
    jrc_core::io::write_tensor(&out.join("af_surface.jrct"), &cube)?;
    let delay_cut: Vec<Vec<String>> = af
        .delays
        .iter()
        .zip(af.delay_cut(0.0))
        .map(|(t, m)| vec![fmt(*t), fmt(m)])
        .collect();
    write_csv(&out.join("af_delay_cut.csv"), &["delay_s", "magnitude"], &delay_cut)?;
    let doppler_cut: Vec<Vec<String>> = af
        .dopplers
        .iter()
        .zip(af.doppler_cut(0.0))
        .map(|(f, m)| vec![fmt(*f), fmt(m)])
        .collect();
    write_csv(&out.join("af_doppler_cut.csv"), &["doppler_hz", "magnitude"], &doppler_cut)?;
    Ok(())
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
