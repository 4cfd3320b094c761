//! Fixed-cutoff tradeoff curves, interpolation, and gain reports.
//!
//! The tradeoff horizon is the (cutoff, mean MED) curve produced by applying
//! one fixed cutoff to every query. A method that predicts cutoffs per query
//! is compared against the horizon by piecewise-linear interpolation in both
//! directions: the fixed cutoff that would reach the method's mean MED, and
//! the fixed mean MED at the method's mean cutoff. Out-of-hull lookups clamp
//! to the nearest endpoint and are flagged, never extrapolated.

use crate::error::{Error, Result};
use crate::labeling::{assign_labels, CostMatrix, MedTable};
use std::collections::BTreeMap;

/// Points `(cutoff, mean MED)`, ascending in cutoff, means taken over one
/// fixed topic set.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    pub points: Vec<(f64, f64)>,
}

/// Mean MED per grid cutoff over every topic in the table.
pub fn fixed_curve(table: &MedTable) -> Result<TradeoffCurve> {
    if table.is_empty() {
        return Err(Error::InvalidParameter("empty MED table".into()));
    }
    let n = table.len() as f64;
    let width = table.grid.values().len();
    let mut sums = vec![0.0f64; width];
    for (_, row) in table.rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let points = table
        .grid
        .values()
        .iter()
        .zip(sums)
        .map(|(&cutoff, sum)| (cutoff as f64, sum / n))
        .collect();
    Ok(TradeoffCurve { points })
}

/// An interpolated value, flagged when the query fell outside the curve and
/// was clamped to an endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub value: f64,
    pub clamped: bool,
}

fn lerp(x: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if x1 == x0 {
        return y0;
    }
    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
}

/// Fixed cutoff whose mean MED equals `target`, reading the curve from the
/// smallest cutoff so the first crossing wins.
pub fn cutoff_at_med(curve: &TradeoffCurve, target: f64) -> Interpolated {
    for w in curve.points.windows(2) {
        let ((k0, m0), (k1, m1)) = (w[0], w[1]);
        if (m0 >= target && target >= m1) || (m0 <= target && target <= m1) {
            return Interpolated {
                value: lerp(target, m0, m1, k0, k1),
                clamped: false,
            };
        }
    }
    // outside the hull: clamp to whichever endpoint is nearer in MED
    let (k_first, m_first) = curve.points[0];
    let (k_last, m_last) = *curve.points.last().unwrap();
    let value = if (target - m_first).abs() <= (target - m_last).abs() {
        k_first
    } else {
        k_last
    };
    log::warn!("mean MED {target} outside the fixed curve; clamped to cutoff {value}");
    Interpolated {
        value,
        clamped: true,
    }
}

/// Fixed mean MED at cutoff `target` on the curve.
pub fn med_at_cutoff(curve: &TradeoffCurve, target: f64) -> Interpolated {
    let (k_first, m_first) = curve.points[0];
    let (k_last, m_last) = *curve.points.last().unwrap();
    if target < k_first {
        log::warn!("cutoff {target} below the fixed curve; clamped");
        return Interpolated {
            value: m_first,
            clamped: true,
        };
    }
    if target > k_last {
        log::warn!("cutoff {target} above the fixed curve; clamped");
        return Interpolated {
            value: m_last,
            clamped: true,
        };
    }
    for w in curve.points.windows(2) {
        let ((k0, m0), (k1, m1)) = (w[0], w[1]);
        if k0 <= target && target <= k1 {
            return Interpolated {
                value: lerp(target, k0, k1, m0, m1),
                clamped: false,
            };
        }
    }
    Interpolated {
        value: m_last,
        clamped: false,
    }
}

/// Relative difference of a fixed-cutoff baseline against a prediction:
/// `(fixed - predicted) / predicted * 100`.
pub fn gain_pct(fixed: f64, predicted: f64) -> f64 {
    (fixed - predicted) / predicted * 100.0
}

/// One method's tradeoff summary against the fixed-cutoff horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub method: String,
    pub predicted_med: f64,
    pub predicted_cutoff: f64,
    pub fixed_cutoff_at_equal_med: f64,
    /// Positive when the method needs a smaller mean cutoff than the fixed
    /// baseline at equal effectiveness.
    pub cutoff_diff_pct: f64,
    pub fixed_med_at_equal_cutoff: f64,
    pub med_diff_pct: f64,
    /// Mean misclassification penalty under the cost matrix.
    pub mean_cost: f64,
    pub clamped: bool,
}

/// Summarize per-topic class predictions against the fixed curve.
///
/// `predictions` must cover exactly the table's topics; the achieved MED of
/// a topic is its table cell at the predicted class.
pub fn gain_report(
    method: impl Into<String>,
    table: &MedTable,
    curve: &TradeoffCurve,
    predictions: &BTreeMap<String, u32>,
    true_labels: &BTreeMap<String, u32>,
    cost: &CostMatrix,
) -> Result<GainReport> {
    let mut sum_med = 0.0;
    let mut sum_cutoff = 0.0;
    let mut sum_cost = 0.0;
    let mut n = 0usize;
    for (topic, row) in table.rows() {
        let &predicted = predictions
            .get(topic)
            .ok_or_else(|| Error::Config(format!("no prediction for topic {topic}")))?;
        let &actual = true_labels
            .get(topic)
            .ok_or_else(|| Error::Config(format!("no label for topic {topic}")))?;
        sum_med += row[(predicted - 1) as usize];
        sum_cutoff += table.grid.cutoff_of_class(predicted) as f64;
        sum_cost += cost.cost(actual, predicted);
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty MED table".into()));
    }
    let predicted_med = sum_med / n as f64;
    let predicted_cutoff = sum_cutoff / n as f64;
    let fixed_cutoff = cutoff_at_med(curve, predicted_med);
    let fixed_med = med_at_cutoff(curve, predicted_cutoff);
    Ok(GainReport {
        method: method.into(),
        predicted_med,
        predicted_cutoff,
        fixed_cutoff_at_equal_med: fixed_cutoff.value,
        cutoff_diff_pct: gain_pct(fixed_cutoff.value, predicted_cutoff),
        fixed_med_at_equal_cutoff: fixed_med.value,
        med_diff_pct: gain_pct(fixed_med.value, predicted_med),
        mean_cost: sum_cost / n as f64,
        clamped: fixed_cutoff.clamped || fixed_med.clamped,
    })
}

/// The best possible report: every topic predicted at its true minimal
/// class.
pub fn oracle_report(
    table: &MedTable,
    eps: f64,
    curve: &TradeoffCurve,
    cost: &CostMatrix,
) -> Result<GainReport> {
    let labels = assign_labels(table, eps)?;
    gain_report("oracle", table, curve, &labels, &labels, cost)
}
