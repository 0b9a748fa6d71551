//! Empirical convergence orders from error or step sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries at or below this are rounding noise and are dropped.
pub const ERROR_FLOOR: f64 = 1e-14;
/// Spread allowed among the last three per-step estimates for `stable`.
pub const STABILITY_SPREAD: f64 = 0.1;
const R_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderNotion {
    Q,
    R,
    AQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub notion: OrderNotion,
    pub order: f64,
    pub per_step: Vec<f64>,
    pub stable: bool,
}

/// Longest strictly decreasing tail of entries above [`ERROR_FLOOR`].
fn usable_window(errors: &[f64]) -> Result<&[f64]> {
    if errors.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::InsufficientData("errors must be finite and nonnegative".into()));
    }
    let end = errors.iter().rposition(|&e| e > ERROR_FLOOR).map_or(0, |i| i + 1);
    let kept = &errors[..end];
    let mut start = end;
    while start > 0 && (start == end || kept[start - 1] > kept[start]) {
        start -= 1;
    }
    let w = &kept[start..];
    if w.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need 4 strictly decreasing entries above {ERROR_FLOOR:e}, have {}",
            w.len()
        )));
    }
    Ok(w)
}

fn median_of_last_three(v: &[f64]) -> f64 {
    let mut t: Vec<f64> = v[v.len().saturating_sub(3)..].to_vec();
    t.sort_by(f64::total_cmp);
    match t.len() {
        3 => t[1],
        2 => 0.5 * (t[0] + t[1]),
        _ => t[0],
    }
}

fn is_stable(v: &[f64]) -> bool {
    if v.len() < 3 {
        return false;
    }
    let t = &v[v.len() - 3..];
    let hi = t.iter().copied().fold(f64::MIN, f64::max);
    let lo = t.iter().copied().fold(f64::MAX, f64::min);
    hi - lo <= STABILITY_SPREAD
}

fn estimate(notion: OrderNotion, per_step: Vec<f64>) -> Result<OrderEstimate> {
    let order = median_of_last_three(&per_step);
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::InsufficientData(format!("order estimate {order} is not positive")));
    }
    Ok(OrderEstimate { notion, order, stable: is_stable(&per_step), per_step })
}

/// `pₙ = log(eₙ₊₁/eₙ) / log(eₙ/eₙ₋₁)`; headline is the median of the last three.
pub fn q_order(errors: &[f64]) -> Result<OrderEstimate> {
    let w = usable_window(errors)?;
    let per_step = w.windows(3).map(|t| (t[2] / t[1]).ln() / (t[1] / t[0]).ln()).collect();
    estimate(OrderNotion::Q, per_step)
}

/// R-order from the growth of `Lₙ = −log eₙ`.
///
/// For `eₙ₊₁ ≈ K eₙ^p` the increments `Dₙ = Lₙ₊₁ − Lₙ` satisfy `Dₙ₊₁ = p Dₙ`
/// whatever `K` is, so `p` is `exp` of the least-squares slope of `log Dₙ`
/// against `n` over the last four increments. Per-step values are `Dₙ₊₁/Dₙ`.
pub fn r_order(errors: &[f64]) -> Result<OrderEstimate> {
    let w = usable_window(errors)?;
    let inc: Vec<f64> = w.windows(2).map(|t| t[0].ln() - t[1].ln()).collect();
    let per_step: Vec<f64> = inc.windows(2).map(|d| d[1] / d[0]).collect();
    let tail = &inc[inc.len().saturating_sub(R_WINDOW)..];
    let n = tail.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let logs: Vec<f64> = tail.iter().map(|d| d.ln()).collect();
    let mean_y = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    let order = (sxy / sxx).exp();
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::InsufficientData(format!("order estimate {order} is not positive")));
    }
    Ok(OrderEstimate { notion: OrderNotion::R, order, stable: is_stable(&per_step), per_step })
}

/// Q-order of the adimensional steps `dₙ = ‖Δₙ‖/η`.
pub fn aq_order(step_norms: &[f64], eta: f64) -> Result<OrderEstimate> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must be positive")));
    }
    let d: Vec<f64> = step_norms.iter().map(|s| s / eta).collect();
    let mut est = q_order(&d)?;
    est.notion = OrderNotion::AQ;
    Ok(est)
}
