use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `(log ε, log e)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// The `ε` values that entered the fit.
    pub points_used: Vec<f64>,
}

impl RateFit {
    /// `e ≈ C·ε^slope` with `C = exp(intercept)`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    if let Some(&(eps, e)) = points.iter().find(|(eps, e)| !(*eps > 0.0 && *e > 0.0)) {
        return Err(Error::Config(format!("rate fit needs positive data, got ({eps}, {e})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit needs distinct epsilons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // a constant series is fitted exactly by the flat line
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points_used: points.iter().map(|p| p.0).collect(),
    })
}
