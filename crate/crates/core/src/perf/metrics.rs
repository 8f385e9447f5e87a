use crate::{JrcError, Result};

/// Root-mean-square error between paired estimates and truths.
pub fn rmse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(JrcError::invalid(format!(
            "rmse needs equal non-empty inputs, got {} and {}",
            estimates.len(),
            truths.len()
        )));
    }
    let sum: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok((sum / estimates.len() as f64).sqrt())
}

/// Fraction of differing bits.
pub fn ber(bits: &[u8], decoded: &[u8]) -> Result<f64> {
    if bits.is_empty() || bits.len() != decoded.len() {
        return Err(JrcError::invalid(format!(
            "ber needs equal non-empty inputs, got {} and {}",
            bits.len(),
            decoded.len()
        )));
    }
    let errors = bits.iter().zip(decoded).filter(|(a, b)| (*a & 1) != (*b & 1)).count();
    Ok(errors as f64 / bits.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[2.0, 3.0, -1.0], &[1.0, 2.0, -2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ber(&[0, 1, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(ber(&[0, 1, 1], &[1, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(ber(&[], &[]).is_err());
    }
}
