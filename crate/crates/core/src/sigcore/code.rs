use std::f64::consts::PI;

use rand::Rng;

use crate::{JrcError, Result, C64};

/// Binary phase code for one PMCW block.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSequence {
    phases: Vec<f64>,
    chip_duration: f64,
}

// Fibonacci LFSR feedback taps (1-based stage numbers) of primitive polynomials.
const MSEQ_TAPS: [&[usize]; 15] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 11, 10, 4],
    &[13, 12, 11, 8],
    &[14, 13, 12, 2],
    &[15, 14],
    &[16, 15, 13, 4],
];

impl CodeSequence {
    /// Builds a code from arbitrary chip phases in radians.
    pub fn from_phases(phases: Vec<f64>, chip_duration: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(JrcError::invalid("code must have at least one chip"));
        }
        if !(chip_duration > 0.0 && chip_duration.is_finite()) {
            return Err(JrcError::invalid(format!(
                "chip duration must be positive, got {chip_duration}"
            )));
        }
        Ok(Self {
            phases,
            chip_duration,
        })
    }

    /// Builds a binary code from ±1 chips (`+1 -> 0`, `-1 -> π`).
    pub fn from_signs(signs: &[i8], chip_duration: f64) -> Result<Self> {
        let phases = signs
            .iter()
            .map(|&s| match s {
                1 => Ok(0.0),
                -1 => Ok(PI),
                other => Err(JrcError::invalid(format!("chip sign must be ±1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_phases(phases, chip_duration)
    }

    /// Maximal-length sequence of `2^degree - 1` chips, `degree` in `2..=16`.
    pub fn m_sequence(degree: u32, chip_duration: f64) -> Result<Self> {
        if !(2..=16).contains(&degree) {
            return Err(JrcError::invalid(format!(
                "m-sequence degree must be in 2..=16, got {degree}"
            )));
        }
        let taps = MSEQ_TAPS[degree as usize - 2];
        let n = degree as usize;
        let mut state = vec![1u8; n];
        let len = (1usize << n) - 1;
        let mut signs = Vec::with_capacity(len);
        for _ in 0..len {
            signs.push(if state[n - 1] == 1 { -1 } else { 1 });
            let fb = taps.iter().fold(0u8, |acc, &t| acc ^ state[t - 1]);
            state.rotate_right(1);
            state[0] = fb;
        }
        Self::from_signs(&signs, chip_duration)
    }

    /// Pseudorandom binary code drawn from `rng`.
    pub fn random_binary<R: Rng + ?Sized>(
        length: usize,
        chip_duration: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let signs: Vec<i8> = (0..length)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::from_signs(&signs, chip_duration)
    }

    /// Default PMCW code for a given length: an m-sequence when the length is
    /// `2^n - 1`, otherwise a seeded pseudorandom binary code.
    pub fn default_for_length<R: Rng + ?Sized>(
        length: usize,
        chip_duration: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let next = length + 1;
        if next.is_power_of_two() && (4..=1 << 16).contains(&next) {
            Self::m_sequence(next.trailing_zeros(), chip_duration)
        } else {
            Self::random_binary(length, chip_duration, rng)
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn chip_duration(&self) -> f64 {
        self.chip_duration
    }

    /// Unit-modulus chips `e^{jζ_l}`.
    pub fn chips(&self) -> Vec<C64> {
        self.phases.iter().map(|&p| C64::from_polar(1.0, p)).collect()
    }

    /// True when every phase is 0 or π.
    pub fn is_binary(&self) -> bool {
        self.phases
            .iter()
            .all(|&p| p.abs() < 1e-12 || (p - PI).abs() < 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_autocorr(signs: &[f64]) -> Vec<f64> {
        let n = signs.len();
        (0..n)
            .map(|k| (0..n).map(|i| signs[i] * signs[(i + k) % n]).sum())
            .collect()
    }

    #[test]
    fn m_sequences_have_two_valued_periodic_autocorrelation() {
        for degree in 2..=12 {
            let code = CodeSequence::m_sequence(degree, 1.0).unwrap();
            let n = code.len();
            assert_eq!(n, (1 << degree) - 1);
            let signs: Vec<f64> = code.chips().iter().map(|c| c.re).collect();
            let r = periodic_autocorr(&signs);
            assert_eq!(r[0], n as f64);
            assert!(r[1..].iter().all(|&v| v == -1.0), "degree {degree}");
        }
    }

    #[test]
    fn chips_are_unit_modulus_and_binary() {
        let code = CodeSequence::from_signs(&[1, -1, -1, 1], 1e-9).unwrap();
        assert!(code.is_binary());
        let chips = code.chips();
        assert!((chips[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(chips.iter().all(|c| (c.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CodeSequence::from_phases(vec![], 1.0).is_err());
        assert!(CodeSequence::from_phases(vec![0.0], 0.0).is_err());
        assert!(CodeSequence::from_signs(&[1, 0], 1.0).is_err());
        assert!(CodeSequence::m_sequence(1, 1.0).is_err());
        assert!(CodeSequence::m_sequence(17, 1.0).is_err());
    }
}
