//! Power-law exponents from error-versus-time sweeps.

use crate::error::{invalid, Result};

pub const DEFAULT_FLOOR: f64 = 1e-12;
pub const DEFAULT_CEILING: f64 = 1e-1;
/// Fits with fewer surviving points are flagged invalid.
pub const MIN_FIT_POINTS: usize = 4;
pub const MIN_INPUT_PAIRS: usize = 6;
/// Below this coefficient of determination a fit is reported as low confidence.
pub const LOW_CONFIDENCE_R2: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Smallest and largest `T` among the points used; NaN when none survive.
    pub window: (f64, f64),
    pub valid: bool,
}

impl OrderFitResult {
    pub fn low_confidence(&self) -> bool {
        !self.valid || self.r_squared < LOW_CONFIDENCE_R2
    }

    pub fn csv_header() -> &'static str {
        "slope,intercept,r_squared,points_used,window_lo,window_hi"
    }

    pub fn csv_row(&self) -> String {
        use crate::format::sig17;
        format!(
            "{},{},{},{},{},{}",
            sig17(self.slope),
            sig17(self.intercept),
            sig17(self.r_squared),
            self.points_used,
            sig17(self.window.0),
            sig17(self.window.1)
        )
    }
}

/// Least-squares line through `(ln T, ln err)` for the pairs with `floor < err < ceiling`.
pub fn fit_order(pairs: &[(f64, f64)], floor: f64, ceiling: f64) -> Result<OrderFitResult> {
    if pairs.len() < MIN_INPUT_PAIRS {
        return Err(invalid(format!(
            "order fit needs at least {MIN_INPUT_PAIRS} (T, error) pairs, got {}",
            pairs.len()
        )));
    }
    if !(floor >= 0.0 && ceiling > floor) {
        return Err(invalid(format!("invalid fit window ({floor}, {ceiling})")));
    }
    for (i, &(t, e)) in pairs.iter().enumerate() {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid(format!("T[{i}] = {t} must be positive and finite")));
        }
        if !(e >= 0.0) || e.is_infinite() {
            return Err(invalid(format!(
                "error[{i}] = {e} must be finite and non-negative"
            )));
        }
        if i > 0 && t <= pairs[i - 1].0 {
            return Err(invalid("T values must be strictly increasing"));
        }
    }
    let used: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(_, e)| e > floor && e < ceiling)
        .map(|&(t, e)| (t.ln(), e.ln()))
        .collect();
    let inside = |p: &&(f64, f64)| p.1 > floor && p.1 < ceiling;
    let window = (
        pairs.iter().find(inside).map_or(f64::NAN, |p| p.0),
        pairs.iter().rev().find(inside).map_or(f64::NAN, |p| p.0),
    );
    if used.len() < MIN_FIT_POINTS {
        return Ok(OrderFitResult {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: 0.0,
            points_used: used.len(),
            window,
            valid: false,
        });
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(OrderFitResult {
        slope,
        intercept,
        r_squared,
        points_used: used.len(),
        window,
        valid: true,
    })
}

/// `points` values of a geometric grid with step `ratio` ending at `t_max`, ascending.
pub fn make_time_grid(t_max: f64, points: usize, ratio: f64) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(invalid(format!("T_max must be positive and finite, got {t_max}")));
    }
    if points == 0 {
        return Err(invalid("time grid needs at least one point"));
    }
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(invalid(format!("grid ratio must exceed 1, got {ratio}")));
    }
    let last = points - 1;
    Ok((0..points)
        .map(|k| t_max * ratio.powi(-((last - k) as i32)))
        .collect())
}
