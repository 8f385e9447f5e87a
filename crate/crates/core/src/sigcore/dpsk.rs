use std::f64::consts::PI;

use crate::{JrcError, Result, C64};

/// DPSK constellation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpskOrder {
    Binary,
    Quaternary,
}

impl DpskOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(DpskOrder::Binary),
            4 => Ok(DpskOrder::Quaternary),
            other => Err(JrcError::invalid(format!("DPSK order must be 2 or 4, got {other}"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            DpskOrder::Binary => 2,
            DpskOrder::Quaternary => 4,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            DpskOrder::Binary => 1,
            DpskOrder::Quaternary => 2,
        }
    }

    fn step(self) -> f64 {
        2.0 * PI / self.order() as f64
    }

    // Gray-coded increment index for one symbol's worth of bits.
    fn index_of(self, bits: &[u8]) -> usize {
        match self {
            DpskOrder::Binary => bits[0] as usize,
            DpskOrder::Quaternary => match (bits[0], bits[1]) {
                (0, 0) => 0,
                (0, 1) => 1,
                (1, 1) => 2,
                _ => 3,
            },
        }
    }

    fn bits_of(self, index: usize, out: &mut Vec<u8>) {
        match self {
            DpskOrder::Binary => out.push(index as u8),
            DpskOrder::Quaternary => out.extend_from_slice(match index {
                0 => &[0, 0],
                1 => &[0, 1],
                2 => &[1, 1],
                _ => &[1, 0],
            }),
        }
    }
}

/// Differentially encoded symbol stream. `symbols[0]` is the phase-0 reference;
/// `symbols[m]` for `m >= 1` carries one group of bits as the phase increment
/// from `symbols[m-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpskStream {
    pub bits: Vec<u8>,
    pub order: DpskOrder,
    pub symbols: Vec<C64>,
}

pub fn dpsk_encode(bits: &[u8], order: DpskOrder) -> Result<DpskStream> {
    let k = order.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(JrcError::invalid(format!(
            "{} bits do not divide into {k}-bit symbols",
            bits.len()
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(JrcError::invalid(format!("bit values must be 0 or 1, got {b}")));
    }
    let mut phase = 0.0f64;
    let mut symbols = Vec::with_capacity(bits.len() / k + 1);
    symbols.push(C64::new(1.0, 0.0));
    for group in bits.chunks(k) {
        phase = (phase + order.index_of(group) as f64 * order.step()).rem_euclid(2.0 * PI);
        symbols.push(C64::from_polar(1.0, phase));
    }
    Ok(DpskStream {
        bits: bits.to_vec(),
        order,
        symbols,
    })
}

/// Decodes the phase increments between consecutive symbols. Amplitudes are
/// ignored, so any constant phase rotation of the stream decodes identically.
pub fn dpsk_decode(symbols: &[C64], order: DpskOrder) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len().saturating_sub(1) * order.bits_per_symbol());
    let n = order.order() as usize;
    for pair in symbols.windows(2) {
        let inc = (pair[1] * pair[0].conj()).arg();
        let index = ((inc / order.step()).round() as i64).rem_euclid(n as i64) as usize;
        order.bits_of(index, &mut bits);
    }
    bits
}

/// Nearest point of the absolute constellation `e^{j2πi/M}` the encoder
/// walks on.
pub fn psk_decision(z: C64, order: DpskOrder) -> C64 {
    let n = order.order() as i64;
    let index = ((z.arg() / order.step()).round() as i64).rem_euclid(n);
    C64::from_polar(1.0, index as f64 * order.step())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decisions_snap_to_the_constellation() {
        let q = DpskOrder::Quaternary;
        assert!((psk_decision(C64::new(0.1, 0.9), q) - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((psk_decision(C64::new(-2.0, 0.3), q) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((psk_decision(C64::new(0.2, -0.1), DpskOrder::Binary) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_bits_give_constant_phase() {
        let s = dpsk_encode(&[0; 8], DpskOrder::Binary).unwrap();
        assert_eq!(s.symbols.len(), 9);
        assert!(s.symbols.iter().all(|c| (c - C64::new(1.0, 0.0)).norm() < 1e-15));
        assert_eq!(dpsk_decode(&s.symbols, DpskOrder::Binary), vec![0; 8]);
    }

    #[test]
    fn rejects_misaligned_bits() {
        assert!(dpsk_encode(&[1, 0, 1], DpskOrder::Quaternary).is_err());
        assert!(dpsk_encode(&[2], DpskOrder::Binary).is_err());
        assert!(DpskOrder::from_order(8).is_err());
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let order = DpskOrder::Quaternary;
        for i in 0..4 {
            let mut a = Vec::new();
            let mut b = Vec::new();
            order.bits_of(i, &mut a);
            order.bits_of((i + 1) % 4, &mut b);
            let diff = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            assert_eq!(diff, 1);
        }
    }

    #[test]
    fn amplitude_does_not_matter() {
        let s = dpsk_encode(&[1, 0, 0, 1, 1, 1], DpskOrder::Quaternary).unwrap();
        let scaled: Vec<C64> = s.symbols.iter().enumerate().map(|(i, c)| c * (0.1 + i as f64)).collect();
        assert_eq!(dpsk_decode(&scaled, DpskOrder::Quaternary), s.bits);
    }
}
