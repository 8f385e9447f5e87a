//! Subcarrier power allocation: mutual-information water-filling and a
//! Neyman-Pearson allocation that first honours per-user rate floors.
//!
//! Detection follows a Gaussian mean-shift model,
//! `p_D = Q(Q⁻¹(α) - √(2 SNR))`, so the radar objective is monotone in the
//! total radar SNR `Σ P_k g_k / n_k` and the program splits into floor
//! reservation followed by a greedy assignment of the remainder.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::{JrcError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    /// Radar channel gains `g_k`, linear power.
    pub radar_gains: Vec<f64>,
    /// Communications gains `h_k`, linear power.
    pub comm_gains: Vec<f64>,
    /// Noise powers `n_k`, W.
    pub noise: Vec<f64>,
    /// Rate floors `t_k`, bits/s/Hz.
    pub rate_floors: Vec<f64>,
    /// Total budget `P_T`, W.
    pub budget: f64,
    /// False-alarm cap.
    pub alpha: f64,
}

impl AllocationProblem {
    pub fn len(&self) -> usize {
        self.radar_gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radar_gains.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.len();
        if k == 0 {
            return Err(JrcError::invalid("empty subcarrier set"));
        }
        if self.comm_gains.len() != k || self.noise.len() != k || self.rate_floors.len() != k {
            return Err(JrcError::invalid("all per-subcarrier vectors must have the same length"));
        }
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !positive(&self.radar_gains) || !positive(&self.comm_gains) || !positive(&self.noise) {
            return Err(JrcError::invalid("gains and noise powers must be positive"));
        }
        if self.rate_floors.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(JrcError::invalid("rate floors must be non-negative"));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(JrcError::invalid("budget must be positive"));
        }
        check_alpha(self.alpha)
    }

    /// `(2^{t_k} - 1) n_k / h_k`.
    pub fn floor_powers(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| (2f64.powf(self.rate_floors[k]) - 1.0) * self.noise[k] / self.comm_gains[k])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub powers: Vec<f64>,
    /// Water level, water-filling only.
    pub water_level: Option<f64>,
    /// Achieved detection probability, Neyman-Pearson allocation only.
    pub detection_probability: Option<f64>,
    /// Per-subcarrier rate `log2(1 + SINR_k)`, bits/s/Hz.
    pub rates: Vec<f64>,
    pub feasible: bool,
    /// Budget shortfall `Σ P_min - P_T` when infeasible, else 0.
    pub deficit: f64,
    /// Largest violation of stationarity, complementary slackness or the budget.
    pub kkt_residual: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(JrcError::invalid(format!("false-alarm cap must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `P_k = max(0, μ_w - l_k)` with `Σ P_k = P_T`, levels `l_k = n_k / g_k`.
pub fn waterfill(levels: &[f64], budget: f64) -> Result<AllocationResult> {
    if levels.is_empty() {
        return Err(JrcError::invalid("empty subcarrier set"));
    }
    if levels.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(JrcError::invalid("levels must be positive"));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(JrcError::invalid("budget must be positive"));
    }
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]).then(a.cmp(&b)));

    // largest active prefix whose level stays below the water
    let mut prefix = 0.0;
    let mut water = 0.0;
    let mut active = 0;
    for (i, &k) in order.iter().enumerate() {
        prefix += levels[k];
        let mu = (budget + prefix) / (i + 1) as f64;
        if mu > levels[k] {
            water = mu;
            active = i + 1;
        } else {
            break;
        }
    }

    let mut powers = vec![0.0; levels.len()];
    for &k in &order[..active] {
        powers[k] = (water - levels[k]).max(0.0);
    }
    // put the rounding remainder on the best channel so the budget is exact
    let others: f64 = order[1..active].iter().map(|&k| powers[k]).sum();
    powers[order[0]] = budget - others;

    let spent: f64 = powers.iter().sum();
    let mut residual = (spent - budget).abs();
    for k in 0..levels.len() {
        let gap = water - levels[k] - powers[k];
        residual = residual.max(if powers[k] > 0.0 { gap.abs() } else { gap.max(0.0) });
    }
    let rates = powers
        .iter()
        .zip(levels)
        .map(|(p, l)| (1.0 + p / l).log2())
        .collect();
    Ok(AllocationResult {
        powers,
        water_level: Some(water),
        detection_probability: None,
        rates,
        feasible: true,
        deficit: 0.0,
        kkt_residual: residual,
    })
}

/// `Q(Q⁻¹(α) - √(2 SNR))`.
pub fn detection_probability(snr: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(snr >= 0.0) {
        return Err(JrcError::invalid(format!("SNR must be non-negative, got {snr}")));
    }
    let normal = Normal::standard();
    Ok(normal.cdf((2.0 * snr).sqrt() + normal_quantile(&normal, alpha)))
}

/// `Φ⁻¹(p)` polished with Newton steps to full double precision.
fn normal_quantile(normal: &Normal, p: f64) -> f64 {
    let mut x = normal.inverse_cdf(p);
    for _ in 0..2 {
        let density = normal.pdf(x);
        if density > 0.0 {
            x -= (normal.cdf(x) - p) / density;
        }
    }
    x
}

/// Reserves the rate-floor powers and gives the remaining budget to the
/// subcarrier with the largest `g_k / n_k` (lowest index on ties).
pub fn np_allocate(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.validate()?;
    let floors = problem.floor_powers();
    let reserved: f64 = floors.iter().sum();
    let slack = 1e-12 * problem.budget;
    let rates_for = |powers: &[f64]| -> Vec<f64> {
        (0..problem.len())
            .map(|k| (1.0 + powers[k] * problem.comm_gains[k] / problem.noise[k]).log2())
            .collect()
    };
    if reserved > problem.budget + slack {
        return Ok(AllocationResult {
            rates: rates_for(&floors),
            powers: floors,
            water_level: None,
            detection_probability: None,
            feasible: false,
            deficit: reserved - problem.budget,
            kkt_residual: 0.0,
        });
    }
    let quality = |k: usize| problem.radar_gains[k] / problem.noise[k];
    let best = (0..problem.len())
        .fold(0, |b, k| if quality(k) > quality(b) { k } else { b });
    let mut powers = floors;
    powers[best] += (problem.budget - reserved).max(0.0);
    let snr: f64 = (0..problem.len()).map(|k| powers[k] * quality(k)).sum();
    let spent: f64 = powers.iter().sum();
    Ok(AllocationResult {
        rates: rates_for(&powers),
        detection_probability: Some(detection_probability(snr, problem.alpha)?),
        powers,
        water_level: None,
        feasible: true,
        deficit: 0.0,
        kkt_residual: (spent - problem.budget).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_channel_water_level() {
        let r = waterfill(&[1.0, 3.0], 4.0).unwrap();
        assert_eq!(r.powers, vec![3.0, 1.0]);
        assert_eq!(r.water_level, Some(4.0));
        assert!(r.kkt_residual < 1e-12);
    }

    #[test]
    fn equal_levels_split_evenly() {
        let r = waterfill(&[2.0; 5], 1.0).unwrap();
        assert!(r.powers.iter().all(|p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn deep_fade_gets_nothing() {
        let r = waterfill(&[1.0, 1e9], 1.0).unwrap();
        assert_eq!(r.powers, vec![1.0, 0.0]);
        assert!(waterfill(&[], 1.0).is_err());
    }

    #[test]
    fn detector_model() {
        assert!((detection_probability(0.0, 0.05).unwrap() - 0.05).abs() < 1e-12);
        let n = Normal::standard();
        assert!((detection_probability(2.0, 0.5).unwrap() - n.cdf(2.0)).abs() < 1e-12);
        assert!(detection_probability(4.0, 0.01).unwrap() > detection_probability(1.0, 0.01).unwrap());
        assert!(detection_probability(1.0, 1.0).is_err());
    }

    fn problem(floors: Vec<f64>, budget: f64) -> AllocationProblem {
        AllocationProblem {
            radar_gains: vec![0.5, 2.0, 1.0],
            comm_gains: vec![1.0, 0.5, 2.0],
            noise: vec![1.0, 1.0, 0.5],
            rate_floors: floors,
            budget,
            alpha: 0.01,
        }
    }

    #[test]
    fn unconstrained_goes_to_best_radar_channel() {
        let r = np_allocate(&problem(vec![0.0; 3], 3.0)).unwrap();
        // g/n = [0.5, 2, 2]: tie broken towards index 1
        assert_eq!(r.powers, vec![0.0, 3.0, 0.0]);
        assert!(r.feasible);
    }

    #[test]
    fn floors_and_infeasibility() {
        let p = problem(vec![1.0, 1.0, 2.0], 1.0);
        let floors = p.floor_powers();
        assert_eq!(floors, vec![1.0, 2.0, 0.75]);
        let r = np_allocate(&p).unwrap();
        assert!(!r.feasible);
        assert!((r.deficit - 2.75).abs() < 1e-12);
        let exact = np_allocate(&AllocationProblem { budget: 3.75, ..p }).unwrap();
        assert!(exact.feasible);
        assert_eq!(exact.powers, floors);
        for (rate, t) in exact.rates.iter().zip([1.0, 1.0, 2.0]) {
            assert!(rate + 1e-12 >= t);
        }
    }
}
