//! Rank-based fitness shaping. Every optimizer in this crate consumes the
//! normalized weights produced here, so the update depends on the ordering of
//! objective values only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// `max(0, ln(μ + ½) − ln k)` on the best μ, zero elsewhere.
    #[default]
    CmaLogRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeightScheme {
    pub kind: WeightKind,
    /// Number of positively weighted samples. `None` means `⌊N/2⌋` (at least 1).
    pub mu: Option<usize>,
}

impl WeightScheme {
    pub fn with_mu(mu: usize) -> Self {
        Self {
            kind: WeightKind::CmaLogRank,
            mu: Some(mu),
        }
    }

    pub fn mu_for(&self, population: usize) -> usize {
        self.mu.unwrap_or((population / 2).max(1))
    }
}

/// Indices sorted by ascending value; ties keep their original order.
pub fn rank_ascending(values: &[f64]) -> Result<Vec<usize>> {
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable sort, so equal values stay in index order
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(order)
}

/// Weights by rank position (best first), summing to one.
pub fn compute_weights(scheme: &WeightScheme, population: usize) -> Vec<f64> {
    let mu = scheme.mu_for(population).min(population);
    let head = (mu as f64 + 0.5).ln();
    let mut w: Vec<f64> = (1..=population)
        .map(|k| {
            if k <= mu {
                (head - (k as f64).ln()).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Normalized weight of every sample, aligned with `values`.
pub fn assign(values: &[f64], scheme: &WeightScheme) -> Result<Vec<f64>> {
    let order = rank_ascending(values)?;
    let by_rank = compute_weights(scheme, values.len());
    let mut out = vec![0.0; values.len()];
    for (pos, &idx) in order.iter().enumerate() {
        out[idx] = by_rank[pos];
    }
    Ok(out)
}

/// Variance-effective selection mass `1 / Σ w²`.
pub fn mu_eff(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    s * s / s2
}
