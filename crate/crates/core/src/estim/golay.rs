use crate::sigcore::GolayPair;
use crate::{JrcError, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct GolayProfile {
    /// Summed correlator output for lags `0..=guard`.
    pub profile: Vec<C64>,
    /// `(lag, value)` of every lag within `threshold_db` of the strongest, by lag.
    pub peaks: Vec<(usize, C64)>,
}

/// Correlates the two halves of a received `[Ga | 0 | Gb | 0]` preamble
/// against `Ga` and `Gb` and sums them. Paths delayed by at most `guard`
/// samples produce `2N h[d]` with no pair-induced sidelobes.
pub fn golay_range_estimate(
    received: &[C64],
    pair: &GolayPair,
    guard: usize,
    threshold_db: f64,
) -> Result<GolayProfile> {
    let n = pair.len();
    if received.len() < 2 * (n + guard) {
        return Err(JrcError::invalid(format!(
            "need {} received samples, got {}",
            2 * (n + guard),
            received.len()
        )));
    }
    let profile: Vec<C64> = (0..=guard)
        .map(|d| {
            let a: C64 = pair.a().iter().enumerate().map(|(i, &g)| received[d + i] * g as f64).sum();
            let b: C64 = pair
                .b()
                .iter()
                .enumerate()
                .map(|(i, &g)| received[n + guard + d + i] * g as f64)
                .sum();
            a + b
        })
        .collect();
    let max = profile.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = max * 10f64.powf(threshold_db / 20.0);
    let peaks = if max > 0.0 {
        profile
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() >= floor)
            .map(|(d, z)| (d, *z))
            .collect()
    } else {
        Vec::new()
    };
    Ok(GolayProfile { profile, peaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::golay_pair;

    fn through_channel(x: &[C64], taps: &[(usize, f64)], extra: usize) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len() + extra];
        for &(d, g) in taps {
            for (i, v) in x.iter().enumerate() {
                if i + d < y.len() {
                    y[i + d] += v * g;
                }
            }
        }
        y
    }

    #[test]
    fn single_path_at_origin() {
        let pair = golay_pair(8).unwrap();
        let rx = pair.preamble(32);
        let p = golay_range_estimate(&rx, &pair, 32, -13.0).unwrap();
        assert_eq!(p.profile[0], C64::new(512.0, 0.0));
        assert!(p.profile[1..].iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert_eq!(p.peaks, vec![(0, C64::new(512.0, 0.0))]);
    }

    #[test]
    fn two_paths_exact() {
        let pair = golay_pair(8).unwrap();
        let rx = through_channel(&pair.preamble(32), &[(0, 1.0), (25, 0.5)], 0);
        let p = golay_range_estimate(&rx, &pair, 32, -13.0).unwrap();
        assert_eq!(p.peaks, vec![(0, C64::new(512.0, 0.0)), (25, C64::new(256.0, 0.0))]);
        assert_eq!(p.profile.iter().filter(|z| z.norm() > 0.0).count(), 2);
    }

    #[test]
    fn short_input_rejected() {
        let pair = golay_pair(3).unwrap();
        assert!(golay_range_estimate(&pair.preamble(2)[..10], &pair, 2, -13.0).is_err());
    }
}
