use thiserror::Error;

/// Minimum number of samples inside the fitting window.
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlopeError {
    #[error("window [{t_min}, {t_max}] holds {got} points, need at least {MIN_POINTS}")]
    TooFewPoints { t_min: f64, t_max: f64, got: usize },
    #[error("nonpositive value {value} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("invalid window [{0}, {1}]")]
    BadWindow(f64, f64),
}

/// Least-squares slope of `log err` against `log t` over `t ∈ [t_min, t_max]`.
pub fn fit_loglog_slope(series: &[(f64, f64)], t_min: f64, t_max: f64) -> Result<f64, SlopeError> {
    if !(t_min > 0.0 && t_min < t_max) {
        return Err(SlopeError::BadWindow(t_min, t_max));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series.iter().filter(|(t, _)| *t >= t_min && *t <= t_max) {
        if !(v > 0.0) {
            return Err(SlopeError::NonPositive { t, value: v });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < MIN_POINTS {
        return Err(SlopeError::TooFewPoints {
            t_min,
            t_max,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
