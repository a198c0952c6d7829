//! Hitting times and order statistics over trial traces.

use serde::Serialize;

use super::TrialTrace;

/// Evaluation count of the first trace point with `best_value < threshold`.
pub fn first_hitting_time(trace: &TrialTrace, threshold: f64) -> Option<usize> {
    trace
        .points
        .iter()
        .find(|p| p.best_value < threshold)
        .map(|p| p.evaluations)
}

/// Linearly interpolated quantile of ascending `sorted` (`+∞` entries allowed).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[hi]);
    if b.is_infinite() {
        return b;
    }
    a + (b - a) * frac
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub evaluations: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub final_best: Vec<f64>,
    pub median_best: f64,
    pub q25: f64,
    pub q75: f64,
    pub hit_evals: Vec<Option<usize>>,
    /// `None` when the median trial never hits the threshold.
    pub median_hit_evals: Option<f64>,
    pub bands: Vec<Band>,
}

/// Per-trial hits and final values, with per-generation quantile bands.
///
/// Traces cut short by a failure carry their last best value forward.
pub fn summarize(traces: &[TrialTrace], threshold: f64) -> SummaryStats {
    assert!(!traces.is_empty(), "summarize needs at least one trace");
    let longest = traces
        .iter()
        .max_by_key(|t| t.points.len())
        .expect("non-empty");
    let value_at = |t: &TrialTrace, k: usize| {
        t.points
            .get(k)
            .or(t.points.last())
            .map_or(f64::INFINITY, |p| p.best_value)
    };
    let bands: Vec<Band> = longest
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let col = sorted(traces.iter().map(|t| value_at(t, k)).collect());
            Band {
                evaluations: p.evaluations,
                median: quantile(&col, 0.5),
                q25: quantile(&col, 0.25),
                q75: quantile(&col, 0.75),
            }
        })
        .collect();

    let final_best: Vec<f64> = traces
        .iter()
        .map(|t| t.points.last().map_or(f64::INFINITY, |p| p.best_value))
        .collect();
    let finals = sorted(final_best.clone());
    let hit_evals: Vec<Option<usize>> = traces
        .iter()
        .map(|t| first_hitting_time(t, threshold))
        .collect();
    let hits = sorted(
        hit_evals
            .iter()
            .map(|h| h.map_or(f64::INFINITY, |e| e as f64))
            .collect(),
    );
    let median_hit = quantile(&hits, 0.5);

    SummaryStats {
        median_best: quantile(&finals, 0.5),
        q25: quantile(&finals, 0.25),
        q75: quantile(&finals, 0.75),
        final_best,
        hit_evals,
        median_hit_evals: median_hit.is_finite().then_some(median_hit),
        bands,
    }
}
