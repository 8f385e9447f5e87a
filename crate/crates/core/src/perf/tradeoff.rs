use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::Target;
use crate::ofdma::{self, OfdmaConfig, SymbolGrid};
use crate::pmcw::{self, PmcwConfig};
use crate::sigcore::CodeSequence;
use crate::{JrcError, Result, C64};

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(JrcError::Domain(format!("effective fraction δ must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn symmetric_eigen(m: &DMatrix<f64>) -> Result<nalgebra::SymmetricEigen<f64, nalgebra::Dyn>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(JrcError::invalid("matrix must be square and non-empty"));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * m.abs().max().max(1.0) {
        return Err(JrcError::invalid("matrix must be symmetric"));
    }
    Ok(m.clone().symmetric_eigen())
}

/// `Tr log2 M` of a symmetric positive-definite matrix.
pub fn tr_log2(m: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_eigen(m)?;
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(JrcError::Domain("matrix is not positive definite".into()));
    }
    Ok(eig.eigenvalues.iter().map(|l| l.log2()).sum())
}

/// `MMSE^δ` for a scalar MMSE in `(0, 1]`.
pub fn dmse_eff_scalar(mmse: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(mmse > 0.0 && mmse <= 1.0) {
        return Err(JrcError::Domain(format!("MMSE must lie in (0, 1], got {mmse}")));
    }
    Ok(mmse.powf(delta))
}

/// Matrix power `MMSE^δ` through the eigendecomposition.
pub fn dmse_eff(mmse: &DMatrix<f64>, delta: f64) -> Result<DMatrix<f64>> {
    check_delta(delta)?;
    let eig = symmetric_eigen(mmse)?;
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0 && l <= 1.0 + 1e-12)) {
        return Err(JrcError::Domain("MMSE eigenvalues must lie in (0, 1]".into()));
    }
    if delta == 1.0 {
        return Ok(mmse.clone());
    }
    let powered = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.powf(delta)));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&powered) * v.transpose())
}

/// `2^{-r} I_N`, the isotropic MMSE consistent with spectral efficiency `r`.
pub fn mmse_from_rate(rate: f64, n: usize) -> Result<DMatrix<f64>> {
    if !(rate >= 0.0 && rate.is_finite()) || n == 0 {
        return Err(JrcError::Domain("rate must be finite and non-negative, N ≥ 1".into()));
    }
    Ok(DMatrix::identity(n, n) * 2f64.powf(-rate))
}

/// Residual `(1/N) Tr log2 MMSE + r`.
pub fn check_rate_identity(mmse: &DMatrix<f64>, rate: f64, n: usize) -> Result<f64> {
    if mmse.nrows() != n {
        return Err(JrcError::invalid(format!("MMSE is {}×{}, N = {n}", mmse.nrows(), mmse.ncols())));
    }
    Ok(tr_log2(mmse)? / n as f64 + rate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffSpec {
    /// Achievable spectral efficiency, bits/s/Hz.
    pub rate: f64,
    /// Fraction of the CPI carrying data, `r_eff = δ r`.
    pub delta: f64,
    pub code_length: usize,
    /// Communications MMSE; `None` derives `2^{-r} I_N`.
    pub mmse: Option<DMatrix<f64>>,
    /// Radar CRLB (or proxy), parameters ordered (delay, Doppler, angle) per target.
    pub crlb: DMatrix<f64>,
    pub targets: usize,
    pub weight: f64,
    pub bandwidth: f64,
}

/// `w (1/N) Tr log2 DMSE_eff + (1 - w) (1/Q) Tr log2 CRLB`.
pub fn jrc_objective(spec: &TradeoffSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&spec.weight) {
        return Err(JrcError::invalid("weight must lie in [0, 1]"));
    }
    let mmse = match &spec.mmse {
        Some(m) => m.clone(),
        None => mmse_from_rate(spec.rate, spec.code_length)?,
    };
    if mmse.nrows() != spec.code_length {
        return Err(JrcError::invalid("MMSE dimension must equal the code length"));
    }
    let comm = tr_log2(&dmse_eff(&mmse, spec.delta)?)? / spec.code_length as f64;
    if spec.weight == 1.0 {
        return Ok(comm);
    }
    if spec.targets == 0 {
        return Err(JrcError::invalid("radar term needs at least one detected target"));
    }
    let radar = tr_log2(&spec.crlb)? / spec.targets as f64;
    Ok(spec.weight * comm + (1.0 - spec.weight) * radar)
}

/// Inverse Fisher information of a real parameter vector under complex white
/// Gaussian noise, `J = (2/σ²) Re(Dᴴ D)`, with the mean's Jacobian `D` taken by
/// central differences of size `steps`.
pub fn crlb_proxy<F>(mean: F, theta: &[f64], steps: &[f64], noise_variance: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<C64>>,
{
    if theta.len() != steps.len() || theta.is_empty() {
        return Err(JrcError::invalid("one step per parameter required"));
    }
    if !(noise_variance > 0.0) {
        return Err(JrcError::invalid("noise variance must be positive"));
    }
    let mut jac: Vec<Vec<C64>> = Vec::with_capacity(theta.len());
    for (i, &h) in steps.iter().enumerate() {
        let mut up = theta.to_vec();
        let mut down = theta.to_vec();
        up[i] += h;
        down[i] -= h;
        let (a, b) = (mean(&up)?, mean(&down)?);
        jac.push(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let k = theta.len();
    let fisher = DMatrix::from_fn(k, k, |i, j| {
        let s: C64 = jac[i].iter().zip(&jac[j]).map(|(a, b)| a.conj() * b).sum();
        2.0 * s.re / noise_variance
    });
    fisher
        .try_inverse()
        .ok_or_else(|| JrcError::Singularity("Fisher information is singular".into()))
}

/// CRLB proxy for one OFDMA target over (delay, Doppler, angle).
pub fn ofdma_crlb_proxy(
    config: &OfdmaConfig,
    grid: &SymbolGrid,
    target: &Target,
    noise_variance: f64,
) -> Result<DMatrix<f64>> {
    let mean = |th: &[f64]| -> Result<Vec<C64>> {
        let t = Target { delay: th[0], doppler: th[1], arrival_angle: th[2], ..*target };
        let cube = ofdma::synthesize_cube(&[t], 0.0, config, grid, &mut ChaCha8Rng::seed_from_u64(0))?;
        Ok(cube.data.iter().copied().collect())
    };
    let steps = [
        1e-4 / config.bandwidth(),
        1e-4 / (config.symbols as f64 * config.symbol_time()),
        1e-6,
    ];
    crlb_proxy(mean, &[target.delay, target.doppler, target.arrival_angle], &steps, noise_variance)
}

/// CRLB proxy for one PMCW target over (Doppler, angle); the matrix model
/// only admits whole-chip delays, so delay is held fixed.
pub fn pmcw_crlb_proxy(
    config: &PmcwConfig,
    code: &CodeSequence,
    symbols: &[C64],
    target: &Target,
    noise_variance: f64,
) -> Result<DMatrix<f64>> {
    let mean = |th: &[f64]| -> Result<Vec<C64>> {
        let t = Target { doppler: th[0], arrival_angle: th[1], ..*target };
        let cube = pmcw::synthesize_cube(&[t], 0.0, config, code, symbols, &mut ChaCha8Rng::seed_from_u64(0))?;
        Ok(cube.data.iter().copied().collect())
    };
    let steps = [1e-4 / (config.frames as f64 * config.block_time()), 1e-6];
    crlb_proxy(mean, &[target.doppler, target.arrival_angle], &steps, noise_variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn scalar_dmse() {
        assert!((dmse_eff_scalar(2f64.powi(-4), 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(dmse_eff_scalar(0.3, 1.0).unwrap(), 0.3);
        assert!(dmse_eff_scalar(0.0, 0.5).is_err());
        assert!(dmse_eff_scalar(0.5, 0.0).is_err());
    }

    #[test]
    fn matrix_dmse_identity() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25, 0.125]));
        assert_eq!(dmse_eff(&m, 1.0).unwrap(), m);
        let rate = 2.0;
        let d = dmse_eff(&m, 0.5).unwrap();
        assert!((check_rate_identity(&m, rate, 3).unwrap()).abs() < 1e-12);
        assert!((tr_log2(&d).unwrap() / 3.0 + 0.5 * rate).abs() < 1e-12);
    }

    #[test]
    fn non_positive_mmse_is_domain_error() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -0.1]));
        assert!(matches!(dmse_eff(&m, 0.5), Err(JrcError::Domain(_))));
    }

    fn spec(w: f64) -> TradeoffSpec {
        TradeoffSpec {
            rate: 3.0,
            delta: 0.5,
            code_length: 4,
            mmse: None,
            crlb: DMatrix::from_diagonal(&DVector::from_vec(vec![1e-3, 2e-2, 5e-4])),
            targets: 1,
            weight: w,
            bandwidth: 1e9,
        }
    }

    #[test]
    fn objective_endpoints() {
        assert!((jrc_objective(&spec(1.0)).unwrap() + 1.5).abs() < 1e-12);
        let radar = (1e-3f64 * 2e-2 * 5e-4).log2();
        assert!((jrc_objective(&spec(0.0)).unwrap() - radar).abs() < 1e-12);
        let mid = jrc_objective(&spec(0.5)).unwrap();
        assert!((mid - 0.5 * (radar - 1.5)).abs() < 1e-12);
        let no_targets = TradeoffSpec { targets: 0, ..spec(0.5) };
        assert!(jrc_objective(&no_targets).is_err());
        assert!(jrc_objective(&TradeoffSpec { targets: 0, ..spec(1.0) }).is_ok());
    }

    #[test]
    fn fisher_of_a_tone() {
        // μ_n = e^{j2π f n}: J = (2/σ²) Σ (2π n)²
        let n = 16;
        let mean = |th: &[f64]| -> Result<Vec<C64>> {
            Ok((0..n).map(|i| C64::from_polar(1.0, 2.0 * PI * th[0] * i as f64)).collect())
        };
        let crlb = crlb_proxy(mean, &[0.1], &[1e-6], 0.5).unwrap();
        let j: f64 = (0..n).map(|i| (2.0 * PI * i as f64).powi(2)).sum::<f64>() * 2.0 / 0.5;
        assert!((crlb[(0, 0)] * j - 1.0).abs() < 1e-6);
    }
}
