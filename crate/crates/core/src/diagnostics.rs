//! Numeric checks on the learning-rate weights and on the optimism of the
//! warm-started learner.

use crate::learner::{alpha_weights, Learner, LearnerError};

/// Closed form of `n` updates at one entry that started at `initial`:
/// `alpha_n^0 * initial + sum_i alpha_n^i * (targets[i] + bonuses[i])`,
/// where `targets[i]` is `r + V_{h+1}(x')` of the i-th visit.
pub fn unrolled_q(horizon: usize, initial: f64, targets: &[f64], bonuses: &[f64]) -> f64 {
    assert_eq!(targets.len(), bonuses.len());
    let weights = alpha_weights(targets.len() as u64, horizon);
    weights[0] * initial
        + weights[1..]
            .iter()
            .zip(targets.iter().zip(bonuses))
            .map(|(w, (y, b))| w * (y + b))
            .sum::<f64>()
}

/// `sum_{i=1..t} alpha_t^i / sqrt(i)`.
pub fn weighted_inv_sqrt(t: u64, horizon: usize) -> f64 {
    alpha_weights(t, horizon)
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, w)| w / (i as f64).sqrt())
        .sum()
}

/// `(max_i alpha_t^i, sum_i (alpha_t^i)^2)` for `t >= 1`.
pub fn weight_peak_and_energy(t: u64, horizon: usize) -> (f64, f64) {
    let w = alpha_weights(t, horizon);
    let peak = w[1..].iter().copied().fold(0.0, f64::max);
    let energy = w[1..].iter().map(|x| x * x).sum();
    (peak, energy)
}

/// `sum_{t=i..t_max} alpha_t^i`, accumulated with a running product so the
/// cost is linear in `t_max`.
pub fn column_sum(i: u64, horizon: usize, t_max: u64) -> f64 {
    assert!(i >= 1);
    let h = horizon as f64;
    let mut term = (h + 1.0) / (h + i as f64);
    let mut sum = 0.0;
    for t in i..=t_max {
        if t > i {
            // 1 - alpha_t = (t - 1) / (H + t)
            term *= (t as f64 - 1.0) / (h + t as f64);
        }
        sum += term;
    }
    sum
}

/// Precomputed upper envelope `alpha_t^0 H + beta_t` for `t = 0..=t_max`,
/// with `beta_0 = 0`.
pub struct OptimismBand {
    upper: Vec<f64>,
}

impl OptimismBand {
    pub fn new(learner: &Learner, t_max: u64) -> Result<Self, LearnerError> {
        let horizon = learner.dims().horizon;
        let mut upper = Vec::with_capacity(t_max as usize + 1);
        upper.push(horizon as f64);
        for t in 1..=t_max {
            upper.push(learner.beta(t)?);
        }
        Ok(Self { upper })
    }

    /// Whether `0 <= gap <= alpha_t^0 H + beta_t`, with `gap = Q - Q*` at
    /// the special entry after `t` visits.
    pub fn contains(&self, t: u64, gap: f64) -> bool {
        gap >= 0.0 && gap <= self.upper[t as usize]
    }

    pub fn upper(&self, t: u64) -> f64 {
        self.upper[t as usize]
    }
}
