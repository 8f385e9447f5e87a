//! OFDMA-JRC symbol grids, radar-pilot multiplexing, transmit synthesis and
//! the receive data cube with its slow-time and subcarrier slices.
//!
//! The cube is kept in the subcarrier domain (after CP removal and the
//! receiver FFT):
//!
//! ```text
//! Y[n, m, p] = Σ_q d_q A[n, m] e^{-j2π n Δf τ_q} e^{j2π m T_sym f_Dq} e^{jπ sin(ψ_q) p} + N
//! ```
//!
//! with zero-based subcarrier `n`, symbol `m` and antenna `p`. The
//! time-domain view of a slow-time slice applies the `N_c`-point inverse DFT
//! `F[l, n] = e^{j2π n l / N_c}`.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};
use rand::Rng;

use crate::channel::{Scene, Target};
use crate::dsp;
use crate::pmcw::add_noise;
use crate::sigcore::{dpsk_encode, ArrayGeometry, DpskOrder};
use crate::{JrcError, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmaConfig {
    pub subcarriers: usize,
    pub symbols: usize,
    pub spacing_hz: f64,
    /// Cyclic prefix length in samples of `1 / (N_c Δf)`.
    pub cp_len: usize,
    /// Share of radar pilot subcarriers, percent.
    pub mux_percent: f64,
    pub carrier_hz: f64,
    /// Receive spacing must be half a wavelength.
    pub geometry: ArrayGeometry,
}

impl OfdmaConfig {
    /// `T_sym = 1/Δf`.
    pub fn symbol_time(&self) -> f64 {
        1.0 / self.spacing_hz
    }

    /// `W = N_c Δf`.
    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.spacing_hz
    }

    /// Fast-time sample period `t_s = 1/(N_c Δf)`.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    pub fn validate(&self) -> Result<()> {
        if self.subcarriers == 0 || self.symbols == 0 {
            return Err(JrcError::invalid("subcarrier and symbol counts must be at least 1"));
        }
        if !(self.spacing_hz > 0.0 && self.spacing_hz.is_finite()) {
            return Err(JrcError::invalid("subcarrier spacing must be positive"));
        }
        if !(0.0..=100.0).contains(&self.mux_percent) {
            return Err(JrcError::invalid(format!(
                "mux_percent must be within [0, 100], got {}",
                self.mux_percent
            )));
        }
        self.geometry.validate()?;
        if (self.geometry.spacing_over_lambda - 0.5).abs() > 1e-12 {
            return Err(JrcError::invalid("OFDMA receive array must use λ/2 spacing"));
        }
        Ok(())
    }

    /// True when a delay exceeds the cyclic prefix.
    pub fn exceeds_cp(&self, delay: f64) -> bool {
        delay / self.sample_period() > self.cp_len as f64 + 1e-9
    }
}

/// Radar pilot subcarriers (`true`) versus data subcarriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotMask {
    pub radar: Vec<bool>,
}

impl PilotMask {
    pub fn pilot_indices(&self) -> Vec<usize> {
        (0..self.radar.len()).filter(|&n| self.radar[n]).collect()
    }

    pub fn data_indices(&self) -> Vec<usize> {
        (0..self.radar.len()).filter(|&n| !self.radar[n]).collect()
    }

    pub fn pilot_count(&self) -> usize {
        self.radar.iter().filter(|&&r| r).count()
    }

    /// Largest cyclic distance between consecutive pilots; `None` without pilots.
    pub fn max_gap(&self) -> Option<usize> {
        let idx = self.pilot_indices();
        let n = self.radar.len();
        match idx.len() {
            0 => None,
            1 => Some(n),
            _ => {
                let inner = idx.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
                Some(inner.max(idx[0] + n - idx[idx.len() - 1]))
            }
        }
    }
}

/// `round(μ N_c / 100)` pilots at subcarriers `floor(i N_c / count)`.
pub fn ofdma_pilot_mask(config: &OfdmaConfig) -> PilotMask {
    let nc = config.subcarriers;
    let count = ((config.mux_percent.clamp(0.0, 100.0) * nc as f64 / 100.0).round() as usize).min(nc);
    let mut radar = vec![false; nc];
    for i in 0..count {
        radar[i * nc / count] = true;
    }
    PilotMask { radar }
}

/// Symbol matrix `A` (`N_c × N_s`) plus its pilot mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub a: Array2<C64>,
    pub mask: PilotMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmaPayload {
    pub grid: SymbolGrid,
    pub bits: Vec<u8>,
    pub order: DpskOrder,
}

/// Bits carried per CPI: every data subcarrier runs a DPSK stream over slow
/// time with symbol 0 as its reference.
pub fn ofdma_payload_capacity(mask: &PilotMask, n_symbols: usize, order: DpskOrder) -> usize {
    (mask.radar.len() - mask.pilot_count()) * n_symbols.saturating_sub(1) * order.bits_per_symbol()
}

/// Pilot rows carry the known symbol 1; data rows are DPSK streams along
/// slow time, filled row by row from `bits`.
pub fn ofdma_symbol_grid(config: &OfdmaConfig, bits: &[u8], order: DpskOrder) -> Result<OfdmaPayload> {
    config.validate()?;
    let mask = ofdma_pilot_mask(config);
    let capacity = ofdma_payload_capacity(&mask, config.symbols, order);
    if bits.len() != capacity {
        return Err(JrcError::invalid(format!(
            "payload must be {capacity} bits for this grid, got {}",
            bits.len()
        )));
    }
    let mut a = Array2::from_elem((config.subcarriers, config.symbols), C64::new(1.0, 0.0));
    let per_row = (config.symbols - 1) * order.bits_per_symbol();
    for (row, n) in mask.data_indices().into_iter().enumerate() {
        let stream = dpsk_encode(&bits[row * per_row..(row + 1) * per_row], order)?;
        for (m, s) in stream.symbols.into_iter().enumerate() {
            a[[n, m]] = s;
        }
    }
    Ok(OfdmaPayload {
        grid: SymbolGrid { a, mask },
        bits: bits.to_vec(),
        order,
    })
}

fn check_grid(config: &OfdmaConfig, grid: &SymbolGrid) -> Result<()> {
    if grid.a.dim() != (config.subcarriers, config.symbols) {
        return Err(JrcError::invalid(format!(
            "grid is {:?}, config expects ({}, {})",
            grid.a.dim(),
            config.subcarriers,
            config.symbols
        )));
    }
    Ok(())
}

/// Baseband transmit samples of one antenna: per symbol the inverse DFT
/// `x_m[l] = Σ_n A[n, m] e^{j2π n l / N_c}`, preceded by the cyclic prefix.
pub fn ofdma_transmit(config: &OfdmaConfig, grid: &SymbolGrid) -> Result<Vec<C64>> {
    config.validate()?;
    check_grid(config, grid)?;
    let nc = config.subcarriers;
    let cp = config.cp_len.min(nc);
    let mut out = Vec::with_capacity(config.symbols * (nc + cp));
    for column in grid.a.axis_iter(Axis(1)) {
        let mut sym = column.to_vec();
        dsp::ifft(&mut sym);
        out.extend_from_slice(&sym[nc - cp..]);
        out.extend_from_slice(&sym);
    }
    Ok(out)
}

/// Transmit samples of every antenna with beam steering `e^{jπ sin(β) i}`,
/// shape `(N_t, samples)`.
pub fn ofdma_transmit_array(config: &OfdmaConfig, grid: &SymbolGrid, beam: f64) -> Result<Array2<C64>> {
    let x = ofdma_transmit(config, grid)?;
    let n_tx = config.geometry.n_tx;
    Ok(Array2::from_shape_fn((n_tx, x.len()), |(i, t)| {
        x[t] * C64::from_polar(1.0, PI * beam.sin() * i as f64)
    }))
}

/// Receive cube, shape `(N_c, N_s, N_r)`, in the subcarrier domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmaCube {
    pub data: Array3<C64>,
    /// Set when some delay exceeds the cyclic prefix (the model is still
    /// evaluated as if it did not).
    pub isi_warning: bool,
}

impl OfdmaCube {
    pub fn subcarriers(&self) -> usize {
        self.data.dim().0
    }

    pub fn symbols(&self) -> usize {
        self.data.dim().1
    }

    pub fn antennas(&self) -> usize {
        self.data.dim().2
    }
}

pub fn ofdma_receive_cube<R: Rng + ?Sized>(
    scene: &Scene,
    cpi: usize,
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    rng: &mut R,
) -> Result<OfdmaCube> {
    let targets = scene.realize(cpi)?;
    synthesize_cube(&targets, scene.noise_variance, config, grid, rng)
}

/// Tensor synthesis for realized targets; noise is per cube entry.
pub fn synthesize_cube<R: Rng + ?Sized>(
    targets: &[Target],
    noise_variance: f64,
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    rng: &mut R,
) -> Result<OfdmaCube> {
    config.validate()?;
    check_grid(config, grid)?;
    if noise_variance.is_nan() || noise_variance < 0.0 {
        return Err(JrcError::invalid("noise variance must be non-negative"));
    }
    let (nc, ns, nr) = (config.subcarriers, config.symbols, config.geometry.n_rx);
    let df = config.spacing_hz;
    let tsym = config.symbol_time();
    let mut data = Array3::<C64>::zeros((nc, ns, nr));
    for t in targets {
        let range: Vec<C64> = (0..nc)
            .map(|n| C64::from_polar(1.0, -2.0 * PI * n as f64 * df * t.delay))
            .collect();
        let doppler: Vec<C64> = (0..ns)
            .map(|m| C64::from_polar(1.0, 2.0 * PI * m as f64 * tsym * t.doppler))
            .collect();
        let angle: Vec<C64> = (0..nr)
            .map(|p| C64::from_polar(1.0, PI * t.arrival_angle.sin() * p as f64))
            .collect();
        for ((n, m, p), y) in data.indexed_iter_mut() {
            *y += t.gain * grid.a[[n, m]] * range[n] * doppler[m] * angle[p];
        }
    }
    if noise_variance > 0.0 {
        add_noise(data.iter_mut(), noise_variance, rng);
    }
    let isi_warning = targets.iter().any(|t| config.exceeds_cp(t.delay));
    Ok(OfdmaCube { data, isi_warning })
}

/// Domain of a slow-time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceDomain {
    Subcarrier,
    /// After the `N_c`-point inverse DFT.
    Time,
}

/// `Y_m`, the `N_c × N_r` slice at OFDM symbol `m`.
pub fn slow_time_slice(cube: &OfdmaCube, m: usize, domain: SliceDomain) -> Result<Array2<C64>> {
    if m >= cube.symbols() {
        return Err(JrcError::invalid(format!(
            "symbol index {m} out of range (N_s = {})",
            cube.symbols()
        )));
    }
    let mut slice = cube.data.index_axis(Axis(1), m).to_owned();
    if domain == SliceDomain::Time {
        for mut col in slice.axis_iter_mut(Axis(1)) {
            let mut v = col.to_vec();
            dsp::ifft(&mut v);
            col.iter_mut().zip(v).for_each(|(d, s)| *d = s);
        }
    }
    Ok(slice)
}

/// `Z_n`, the `N_s × N_r` slice at subcarrier `n`.
pub fn subcarrier_slice(cube: &OfdmaCube, n: usize) -> Result<Array2<C64>> {
    if n >= cube.subcarriers() {
        return Err(JrcError::invalid(format!(
            "subcarrier index {n} out of range (N_c = {})",
            cube.subcarriers()
        )));
    }
    Ok(cube.data.index_axis(Axis(0), n).to_owned())
}

fn steering_matrix(targets: &[Target], nr: usize) -> Array2<C64> {
    Array2::from_shape_fn((targets.len(), nr), |(q, p)| {
        C64::from_polar(1.0, PI * targets[q].arrival_angle.sin() * p as f64)
    })
}

fn diag(v: impl IntoIterator<Item = C64>) -> Array2<C64> {
    let v: Vec<C64> = v.into_iter().collect();
    let mut d = Array2::zeros((v.len(), v.len()));
    for (i, x) in v.into_iter().enumerate() {
        d[[i, i]] = x;
    }
    d
}

/// Factored slow-time slice `Diag(a_m) Ξ(-Δf τ) Diag(d) C` (subcarrier domain),
/// left-multiplied by the inverse DFT matrix for the time-domain view.
pub fn factored_slow_time_slice(
    targets: &[Target],
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    m: usize,
    domain: SliceDomain,
) -> Result<Array2<C64>> {
    check_grid(config, grid)?;
    let nc = config.subcarriers;
    if m >= config.symbols {
        return Err(JrcError::invalid(format!("symbol index {m} out of range")));
    }
    let xi = Array2::from_shape_fn((nc, targets.len()), |(n, q)| {
        C64::from_polar(1.0, -2.0 * PI * n as f64 * config.spacing_hz * targets[q].delay)
    });
    // d_q absorbs the Doppler phase of symbol m
    let d = targets.iter().map(|t| {
        t.gain * C64::from_polar(1.0, 2.0 * PI * m as f64 * config.symbol_time() * t.doppler)
    });
    let c = steering_matrix(targets, config.geometry.n_rx);
    let sub = diag(grid.a.column(m).iter().copied()).dot(&xi).dot(&diag(d)).dot(&c);
    Ok(match domain {
        SliceDomain::Subcarrier => sub,
        SliceDomain::Time => {
            let f = Array2::from_shape_fn((nc, nc), |(l, n)| {
                C64::from_polar(1.0, 2.0 * PI * (n * l) as f64 / nc as f64)
            });
            f.dot(&sub)
        }
    })
}

/// Factored subcarrier slice `Diag(a_n) Ξ(f_D T_sym) Diag(d) C`.
pub fn factored_subcarrier_slice(
    targets: &[Target],
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    n: usize,
) -> Result<Array2<C64>> {
    check_grid(config, grid)?;
    if n >= config.subcarriers {
        return Err(JrcError::invalid(format!("subcarrier index {n} out of range")));
    }
    let ns = config.symbols;
    let xi = Array2::from_shape_fn((ns, targets.len()), |(m, q)| {
        C64::from_polar(1.0, 2.0 * PI * m as f64 * config.symbol_time() * targets[q].doppler)
    });
    // d_q absorbs the range phase of subcarrier n
    let d = targets.iter().map(|t| {
        t.gain * C64::from_polar(1.0, -2.0 * PI * n as f64 * config.spacing_hz * t.delay)
    });
    let c = steering_matrix(targets, config.geometry.n_rx);
    Ok(diag(grid.a.row(n).iter().copied()).dot(&xi).dot(&diag(d)).dot(&c))
}
