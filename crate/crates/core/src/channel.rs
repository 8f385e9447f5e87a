//! Large-scale path loss, small-scale fading and the time-frequency responses
//! of the communications link and the bi-static radar target channel.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::sigcore::ArrayGeometry;
use crate::{JrcError, Result, C64, SPEED_OF_LIGHT};

/// Free-space link parameters of the communications path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub carrier_hz: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub range_m: f64,
    pub path_loss_exponent: f64,
}

impl LinkBudget {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

/// `G_c = G_TX G_RX λ² / ((4π)² ρ^γ)`.
pub fn comm_large_scale_gain(budget: &LinkBudget) -> Result<f64> {
    if budget.range_m <= 0.0 {
        return Err(JrcError::Singularity(format!(
            "link range must be positive, got {}",
            budget.range_m
        )));
    }
    if budget.path_loss_exponent <= 0.0 {
        return Err(JrcError::invalid("path-loss exponent must be positive"));
    }
    if budget.carrier_hz <= 0.0 {
        return Err(JrcError::invalid("carrier frequency must be positive"));
    }
    let lambda = budget.wavelength();
    Ok(budget.tx_gain * budget.rx_gain * lambda * lambda
        / ((4.0 * PI).powi(2) * budget.range_m.powf(budget.path_loss_exponent)))
}

/// Mono-static radar gain `λ² σ / (64 π³ ρ⁴)`.
pub fn radar_large_scale_gain(wavelength: f64, rcs: f64, range: f64) -> Result<f64> {
    if range <= 0.0 {
        return Err(JrcError::Singularity(format!(
            "target range must be positive, got {range}"
        )));
    }
    if rcs < 0.0 {
        return Err(JrcError::invalid("radar cross section must be non-negative"));
    }
    Ok(wavelength * wavelength * rcs / (64.0 * PI.powi(3) * range.powi(4)))
}

/// Doppler shift `2v/λ` of a mono-static reflection.
pub fn doppler_from_velocity(velocity: f64, wavelength: f64) -> f64 {
    2.0 * velocity / wavelength
}

/// Anything with a time-varying frequency response `h(t, f)`.
pub trait ChannelResponse {
    fn response(&self, t: f64, f: f64) -> C64;
}

/// One tap of the multipath communications channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommTap {
    pub gain: C64,
    pub delay: f64,
    pub doppler: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel {
    pub large_scale_gain: f64,
    pub taps: Vec<CommTap>,
}

impl ChannelResponse for CommChannel {
    /// `G_c Σ α_ℓ e^{-j2πτ_ℓ f} e^{j2πν_ℓ t}`.
    fn response(&self, t: f64, f: f64) -> C64 {
        self.taps
            .iter()
            .map(|tap| {
                tap.gain * C64::from_polar(1.0, 2.0 * PI * (tap.doppler * t - tap.delay * f))
            })
            .sum::<C64>()
            * self.large_scale_gain
    }
}

/// One virtual scattering centre of the radar channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarPath {
    pub large_scale_gain: f64,
    pub fading: C64,
    pub delay: f64,
    pub doppler: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadarChannel {
    pub paths: Vec<RadarPath>,
}

impl ChannelResponse for RadarChannel {
    /// `Σ G β e^{-j2πτ f} e^{-j2πν t}`.
    fn response(&self, t: f64, f: f64) -> C64 {
        self.paths
            .iter()
            .map(|p| {
                p.fading
                    * p.large_scale_gain
                    * C64::from_polar(1.0, -2.0 * PI * (p.delay * f + p.doppler * t))
            })
            .sum()
    }
}

/// Target fluctuation / small-scale fading model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// Constant RCS.
    Swerling0,
    /// Complex Gaussian gain, Rayleigh envelope.
    SwerlingI2,
    /// Envelope of a 4-degree-of-freedom chi distribution.
    SwerlingIII4,
    /// Fixed LOS plus complex Gaussian scatter, `k_factor` = LOS / scatter power (linear).
    Rician { k_factor: f64 },
}

impl FadingModel {
    /// Rician model with the K-factor given in dB.
    pub fn rician_db(k_db: f64) -> Self {
        FadingModel::Rician {
            k_factor: 10f64.powf(k_db / 10.0),
        }
    }
}

/// Default Rician K-factor, 10 dB.
pub const DEFAULT_RICIAN_K_DB: f64 = 10.0;

// K-factors above this are treated as a pure LOS component.
const RICIAN_K_CAP: f64 = 1e12;

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// One block-fading draw with `E|β|² = mean_power`.
pub fn draw_small_scale<R: Rng + ?Sized>(
    model: FadingModel,
    mean_power: f64,
    rng: &mut R,
) -> Result<C64> {
    if !(mean_power > 0.0 && mean_power.is_finite()) {
        return Err(JrcError::invalid(format!(
            "mean fading power must be positive, got {mean_power}"
        )));
    }
    match model {
        FadingModel::Swerling0 => Ok(C64::new(mean_power.sqrt(), 0.0)),
        FadingModel::SwerlingI2 => Ok(complex_gaussian(rng, mean_power)),
        FadingModel::SwerlingIII4 => {
            // chi-square with 4 degrees of freedom scaled to mean P: Gamma(2, P/2)
            let gamma = Gamma::new(2.0, mean_power / 2.0)
                .map_err(|e| JrcError::invalid(format!("gamma parameters: {e}")))?;
            let power: f64 = gamma.sample(rng);
            let phase = rng.random::<f64>() * 2.0 * PI;
            Ok(C64::from_polar(power.sqrt(), phase))
        }
        FadingModel::Rician { k_factor } => {
            if k_factor.is_nan() || k_factor < 0.0 {
                return Err(JrcError::invalid(format!(
                    "Rician K-factor must be non-negative, got {k_factor}"
                )));
            }
            if k_factor >= RICIAN_K_CAP {
                return Ok(C64::new(mean_power.sqrt(), 0.0));
            }
            let los = (k_factor / (k_factor + 1.0) * mean_power).sqrt();
            Ok(C64::new(los, 0.0) + complex_gaussian(rng, mean_power / (k_factor + 1.0)))
        }
    }
}

/// Static phase `η = -2π (f_c (τ1 + τ2) + f_D1 τ2)` of a bi-static reflection.
pub fn static_phase(carrier_hz: f64, tau1: f64, tau2: f64, doppler1: f64) -> f64 {
    -2.0 * PI * (carrier_hz * (tau1 + tau2) + doppler1 * tau2)
}

/// Normalized transmit array factor toward `departure` when the beam is
/// steered to `beam`; equals 1 when they coincide.
pub fn transmit_array_factor(geometry: &ArrayGeometry, beam: f64, departure: f64) -> C64 {
    let step = geometry.wavenumber() * geometry.spacing() * (beam.sin() - departure.sin());
    (0..geometry.n_tx)
        .map(|i| C64::from_polar(1.0, step * i as f64))
        .sum::<C64>()
        / geometry.n_tx as f64
}

/// Amplitudes of the transmitter-target and target-receiver legs whose product
/// squared is the bi-static radar equation `λ² σ / ((4π)³ ρ1² ρ2²)`.
pub fn leg_amplitudes(wavelength: f64, rcs: f64, range1: f64, range2: f64) -> Result<(f64, f64)> {
    if range1 <= 0.0 || range2 <= 0.0 {
        return Err(JrcError::Singularity("leg ranges must be positive".into()));
    }
    if rcs < 0.0 {
        return Err(JrcError::invalid("radar cross section must be non-negative"));
    }
    let leg1 = 1.0 / ((4.0 * PI).sqrt() * range1);
    let leg2 = wavelength * rcs.sqrt() / (4.0 * PI * range2);
    Ok((leg1, leg2))
}

/// Composite bi-static gain `d_q = N_t · leg1 · leg2 · β · e^{jη} · AF`.
pub fn bistatic_composite_gain(
    n_tx: usize,
    legs: (f64, f64),
    fading: C64,
    static_phase: f64,
    array_factor: C64,
) -> C64 {
    n_tx as f64 * legs.0 * legs.1 * fading * C64::from_polar(1.0, static_phase) * array_factor
}

/// Point scatterer as seen by the bi-static receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    /// Total flight time `τ = τ1 + τ2`, s.
    pub delay: f64,
    /// Bi-static Doppler `f_D = f_D1 + f_D2`, Hz.
    pub doppler: f64,
    /// Angle of arrival at the receive array, rad.
    pub arrival_angle: f64,
    /// Angle of departure from the transmit array, rad.
    pub departure_angle: f64,
    /// Radar cross section, m².
    pub rcs: f64,
    /// Composite gain `d_q` before fading.
    pub gain: C64,
    pub fading: FadingModel,
}

/// Leg-by-leg description used to derive a [`Scatterer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticGeometry {
    pub tx_range: f64,
    pub rx_range: f64,
    pub tx_radial_velocity: f64,
    pub rx_radial_velocity: f64,
    pub arrival_angle: f64,
    pub departure_angle: f64,
    pub rcs: f64,
}

impl Scatterer {
    /// Constant-RCS point target with the given composite gain.
    pub fn point(delay: f64, doppler: f64, arrival_angle: f64, gain: C64) -> Self {
        Self {
            delay,
            doppler,
            arrival_angle,
            departure_angle: 0.0,
            rcs: 1.0,
            gain,
            fading: FadingModel::Swerling0,
        }
    }

    /// Derives delay, Doppler and composite gain from the two legs.
    pub fn bistatic(
        geometry: &BistaticGeometry,
        array: &ArrayGeometry,
        carrier_hz: f64,
        beam: f64,
        fading: FadingModel,
    ) -> Result<Self> {
        let lambda = SPEED_OF_LIGHT / carrier_hz;
        let tau1 = geometry.tx_range / SPEED_OF_LIGHT;
        let tau2 = geometry.rx_range / SPEED_OF_LIGHT;
        let fd1 = geometry.tx_radial_velocity / lambda;
        let fd2 = geometry.rx_radial_velocity / lambda;
        let legs = leg_amplitudes(lambda, geometry.rcs, geometry.tx_range, geometry.rx_range)?;
        let eta = static_phase(carrier_hz, tau1, tau2, fd1);
        let af = transmit_array_factor(array, beam, geometry.departure_angle);
        let s = Self {
            delay: tau1 + tau2,
            doppler: fd1 + fd2,
            arrival_angle: geometry.arrival_angle,
            departure_angle: geometry.departure_angle,
            rcs: geometry.rcs,
            gain: bistatic_composite_gain(array.n_tx, legs, C64::new(1.0, 0.0), eta, af),
            fading,
        };
        s.validate(0)?;
        Ok(s)
    }

    /// Bi-static range `R = c τ`.
    pub fn bistatic_range(&self) -> f64 {
        SPEED_OF_LIGHT * self.delay
    }

    /// Mono-static equivalent range `c τ / 2`.
    pub fn range(&self) -> f64 {
        SPEED_OF_LIGHT * self.delay / 2.0
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |what: &str| JrcError::invalid(format!("scatterer {index}: {what}"));
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(bad("delay must be finite and non-negative"));
        }
        if !self.doppler.is_finite() {
            return Err(bad("Doppler must be finite"));
        }
        if self.rcs.is_nan() || self.rcs < 0.0 {
            return Err(bad("RCS must be non-negative"));
        }
        if !(self.arrival_angle.abs() <= PI / 2.0) {
            return Err(bad("arrival angle must lie in [-π/2, π/2]"));
        }
        if !(self.gain.re.is_finite() && self.gain.im.is_finite()) {
            return Err(bad("gain must be finite"));
        }
        Ok(())
    }
}

/// Scatterer with its fading realized for one CPI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub delay: f64,
    pub doppler: f64,
    pub arrival_angle: f64,
    pub gain: C64,
}

/// Target scene plus noise level; fading draws are reproducible from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    pub noise_variance: f64,
    pub n_cpi: usize,
    pub seed: u64,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>, noise_variance: f64, seed: u64) -> Result<Self> {
        let scene = Self {
            scatterers,
            noise_variance,
            n_cpi: 1,
            seed,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(JrcError::invalid(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        if self.n_cpi == 0 {
            return Err(JrcError::invalid("scene needs at least one CPI"));
        }
        self.scatterers
            .iter()
            .enumerate()
            .try_for_each(|(i, s)| s.validate(i))
    }

    /// Block-fading realization for CPI `cpi`. The same `(seed, cpi)` always
    /// yields the same gains.
    pub fn realize(&self, cpi: usize) -> Result<Vec<Target>> {
        if cpi >= self.n_cpi {
            return Err(JrcError::invalid(format!(
                "CPI {cpi} out of range for a {}-CPI dwell",
                self.n_cpi
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(cpi as u64);
        self.scatterers
            .iter()
            .map(|s| {
                let beta = draw_small_scale(s.fading, 1.0, &mut rng)?;
                Ok(Target {
                    delay: s.delay,
                    doppler: s.doppler,
                    arrival_angle: s.arrival_angle,
                    gain: s.gain * beta,
                })
            })
            .collect()
    }

    /// Radar channel `h_r(t, f)` of CPI `cpi`.
    pub fn radar_channel(&self, cpi: usize) -> Result<RadarChannel> {
        Ok(RadarChannel {
            paths: self
                .realize(cpi)?
                .into_iter()
                .map(|t| RadarPath {
                    large_scale_gain: 1.0,
                    fading: t.gain,
                    delay: t.delay,
                    doppler: t.doppler,
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_comm_gain() {
        let b = LinkBudget {
            carrier_hz: SPEED_OF_LIGHT,
            tx_gain: 1.0,
            rx_gain: 1.0,
            range_m: 1.0,
            path_loss_exponent: 2.0,
        };
        let g = comm_large_scale_gain(&b).unwrap();
        assert!((g - 1.0 / (16.0 * PI * PI)).abs() < 1e-15);
        assert!((g - 6.3326e-3).abs() < 1e-7);
    }

    #[test]
    fn zero_range_is_singular() {
        let b = LinkBudget {
            carrier_hz: 60e9,
            tx_gain: 1.0,
            rx_gain: 1.0,
            range_m: 0.0,
            path_loss_exponent: 2.0,
        };
        assert!(matches!(comm_large_scale_gain(&b), Err(JrcError::Singularity(_))));
        assert!(matches!(radar_large_scale_gain(1.0, 1.0, 0.0), Err(JrcError::Singularity(_))));
    }

    #[test]
    fn swerling0_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let b = draw_small_scale(FadingModel::Swerling0, 1.0, &mut rng).unwrap();
            assert_eq!(b, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn negative_k_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(draw_small_scale(FadingModel::Rician { k_factor: -1.0 }, 1.0, &mut rng).is_err());
        assert!(draw_small_scale(FadingModel::Swerling0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn huge_k_is_pure_los() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = draw_small_scale(FadingModel::Rician { k_factor: 1e15 }, 4.0, &mut rng).unwrap();
        assert_eq!(b, C64::new(2.0, 0.0));
        let near = draw_small_scale(FadingModel::Rician { k_factor: 1e8 }, 4.0, &mut rng).unwrap();
        assert!((near.norm() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn monostatic_bistatic_doppler_is_two_v_over_lambda() {
        let array = ArrayGeometry::half_wavelength(4, 4, 5e-3).unwrap();
        let geom = BistaticGeometry {
            tx_range: 10.0,
            rx_range: 10.0,
            tx_radial_velocity: 30.0,
            rx_radial_velocity: 30.0,
            arrival_angle: 0.1,
            departure_angle: 0.1,
            rcs: 1.0,
        };
        let s = Scatterer::bistatic(&geom, &array, 60e9, 0.1, FadingModel::Swerling0).unwrap();
        assert!((s.doppler - doppler_from_velocity(30.0, 5e-3)).abs() < 1e-6);
        assert!((s.range() - 10.0).abs() < 1e-12);
        // matched beam: |d|² = N_t² · λ²σ/(64π³ρ⁴)
        let expected = 16.0 * radar_large_scale_gain(5e-3, 1.0, 10.0).unwrap();
        assert!((s.gain.norm_sqr() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn invalid_scatterers_are_rejected() {
        let mut s = Scatterer::point(-1.0, 0.0, 0.0, C64::new(1.0, 0.0));
        assert!(Scene::new(vec![s], 0.0, 0).is_err());
        s.delay = 0.0;
        s.arrival_angle = 2.0;
        assert!(Scene::new(vec![s], 0.0, 0).is_err());
        s.arrival_angle = 0.0;
        assert!(Scene::new(vec![s], -1.0, 0).is_err());
        assert!(Scene::new(vec![s], 0.0, 0).is_ok());
    }

    #[test]
    fn realize_checks_cpi_index() {
        let scene = Scene::new(vec![], 0.0, 0).unwrap();
        assert!(scene.realize(0).unwrap().is_empty());
        assert!(scene.realize(1).is_err());
    }
}
