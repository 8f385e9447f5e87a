use crate::sigcore::corr::aperiodic_autocorr_exact;
use crate::{JrcError, Result, C64};

/// Golay complementary pair of ±1 sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GolayPair {
    a: Vec<i64>,
    b: Vec<i64>,
}

/// Generates the length-`2^log2_length` pair by recursive concatenation,
/// `a' = [a | b]`, `b' = [a | -b]`, starting from `([+1], [+1])`.
pub fn golay_pair(log2_length: u32) -> Result<GolayPair> {
    if !(1..=16).contains(&log2_length) {
        return Err(JrcError::invalid(format!(
            "Golay log2 length must be in 1..=16, got {log2_length}"
        )));
    }
    let mut a = vec![1i64];
    let mut b = vec![1i64];
    for _ in 0..log2_length {
        let mut next_a = a.clone();
        next_a.extend_from_slice(&b);
        let mut next_b = a;
        next_b.extend(b.iter().map(|v| -v));
        a = next_a;
        b = next_b;
    }
    Ok(GolayPair { a, b })
}

impl GolayPair {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self) -> &[i64] {
        &self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    /// `Ga ⋆ Ga + Gb ⋆ Gb` over lags `-(N-1)..=N-1`, in exact integer arithmetic.
    pub fn autocorr_sum(&self) -> Vec<i64> {
        aperiodic_autocorr_exact(&[&self.a, &self.b])
            .expect("±1 sequences of length <= 2^16 fit the exact transform")
    }

    /// True when the autocorrelation sum equals `2N δ[n]`.
    pub fn is_complementary(&self) -> bool {
        let n = self.len();
        self.autocorr_sum()
            .iter()
            .enumerate()
            .all(|(i, &v)| if i == n - 1 { v == 2 * n as i64 } else { v == 0 })
    }

    /// Channel-estimation preamble `[Ga | 0_guard | Gb | 0_guard]` as complex samples.
    pub fn preamble(&self, guard: usize) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        let to_c = |v: &i64| C64::new(*v as f64, 0.0);
        let mut out = Vec::with_capacity(2 * (self.len() + guard));
        out.extend(self.a.iter().map(to_c));
        out.extend(std::iter::repeat_n(zero, guard));
        out.extend(self.b.iter().map(to_c));
        out.extend(std::iter::repeat_n(zero, guard));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_pair() {
        let p = golay_pair(1).unwrap();
        assert_eq!(p.a(), &[1, 1]);
        assert_eq!(p.b(), &[1, -1]);
        assert_eq!(p.autocorr_sum(), vec![0, 4, 0]);
    }

    #[test]
    fn out_of_range_lengths() {
        assert!(golay_pair(0).is_err());
        assert!(golay_pair(17).is_err());
    }

    #[test]
    fn preamble_layout() {
        let p = golay_pair(2).unwrap();
        let pre = p.preamble(3);
        assert_eq!(pre.len(), 14);
        assert_eq!(pre[4].re, 0.0);
        assert_eq!(pre[7].re, p.b()[0] as f64);
    }
}
