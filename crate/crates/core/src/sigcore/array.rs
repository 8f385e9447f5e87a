use std::f64::consts::PI;

use crate::{JrcError, Result, C64};

/// Uniform linear array pair: `n_tx` transmit and `n_rx` receive elements
/// with spacing `d/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing_over_lambda: f64,
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(n_tx: usize, n_rx: usize, spacing_over_lambda: f64, wavelength: f64) -> Result<Self> {
        let g = Self {
            n_tx,
            n_rx,
            spacing_over_lambda,
            wavelength,
        };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength array.
    pub fn half_wavelength(n_tx: usize, n_rx: usize, wavelength: f64) -> Result<Self> {
        Self::new(n_tx, n_rx, 0.5, wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(JrcError::invalid("arrays need at least one element"));
        }
        if !(self.spacing_over_lambda > 0.0 && self.spacing_over_lambda <= 0.5) {
            return Err(JrcError::invalid(format!(
                "element spacing d/λ must be in (0, 0.5], got {}",
                self.spacing_over_lambda
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(JrcError::invalid("wavelength must be positive"));
        }
        Ok(())
    }

    /// Wavenumber `k = 2π/λ`, rad/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_over_lambda * self.wavelength
    }
}

/// Sign convention of the inter-element phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringConvention {
    /// `e^{+j i k d sin(angle)}`, used for transmit beam steering.
    Transmit,
    /// `e^{-j i k d sin(angle)}`, used for the receive array response.
    Receive,
}

/// Steering vector over `n_elements` elements, element `i` (zero based) having
/// phase `±i·k·d·sin(angle)`.
pub fn steering_vector(
    geometry: &ArrayGeometry,
    angle: f64,
    n_elements: usize,
    convention: SteeringConvention,
) -> Vec<C64> {
    let sign = match convention {
        SteeringConvention::Transmit => 1.0,
        SteeringConvention::Receive => -1.0,
    };
    let step = sign * geometry.wavenumber() * geometry.spacing() * angle.sin();
    (0..n_elements)
        .map(|i| C64::from_polar(1.0, step * i as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::half_wavelength(4, 4, 5e-3).unwrap();
        for conv in [SteeringConvention::Transmit, SteeringConvention::Receive] {
            let v = steering_vector(&g, 0.0, 4, conv);
            assert!(v.iter().all(|c| (c - C64::new(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn endfire_two_element_receive() {
        let g = ArrayGeometry::half_wavelength(1, 2, 5e-3).unwrap();
        let v = steering_vector(&g, PI / 2.0, 2, SteeringConvention::Receive);
        // e^{-jπ} = -1
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((v[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::new(0, 1, 0.5, 1.0).is_err());
        assert!(ArrayGeometry::new(1, 1, 0.6, 1.0).is_err());
        assert!(ArrayGeometry::new(1, 1, 0.5, 0.0).is_err());
    }
}
