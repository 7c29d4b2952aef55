//! Closed-form catalog gauges.

use nalgebra::DMatrix;

use super::{Family, Gauge};
use crate::error::{param, Result};
use crate::stats::{norm_cdf, norm_sf};

pub(crate) fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        return Err(param(format!("dimension must be at least {min}, got {dim}")));
    }
    Ok(())
}

pub(crate) fn check_unit_open_closed(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(param(format!("{name} must lie in (0,1], got {v}")));
    }
    Ok(())
}

/// Validates a correlation matrix for the Gaussian gauge and returns it with
/// its inverse, both row-major.
pub(crate) fn correlation_and_precision(
    corr: &[Vec<f64>],
    allow_negative: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = corr.len();
    check_dim(d, 1)?;
    if corr.iter().any(|row| row.len() != d) {
        return Err(param("correlation matrix must be square"));
    }
    for i in 0..d {
        if (corr[i][i] - 1.0).abs() > 1e-12 {
            return Err(param("correlation matrix must have unit diagonal"));
        }
        for j in 0..d {
            let v = corr[i][j];
            if !v.is_finite() || (v - corr[j][i]).abs() > 1e-12 {
                return Err(param("correlation matrix must be symmetric and finite"));
            }
            if !allow_negative && v < 0.0 {
                return Err(param(format!(
                    "gauge requires nonnegative correlations, got {v} at ({i},{j})"
                )));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| corr[i][j]);
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| param("correlation matrix is not positive definite"))?;
    let inv = chol.inverse();
    let flat_corr = (0..d * d).map(|k| m[(k / d, k % d)]).collect();
    let flat_inv = (0..d * d).map(|k| inv[(k / d, k % d)]).collect();
    Ok((flat_corr, flat_inv))
}

pub(crate) fn build_gaussian(corr: &[Vec<f64>]) -> Result<Gauge> {
    let (corr_flat, precision) = correlation_and_precision(corr, false)?;
    Ok(Gauge::from_family(
        corr.len(),
        Family::Gaussian {
            corr: corr_flat,
            precision,
        },
    ))
}

pub(crate) fn gaussian(corr: &[f64], precision: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    if d == 2 {
        // closed form keeps the bivariate case exact to rounding
        let rho = corr[1];
        return ((x[0] + x[1] - 2.0 * rho * (x[0] * x[1]).sqrt()) / (1.0 - rho * rho)).max(0.0);
    }
    let s: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    let mut q = 0.0;
    for i in 0..d {
        let row = &precision[i * d..(i + 1) * d];
        let mut acc = 0.0;
        for j in 0..d {
            acc += row[j] * s[j];
        }
        q += s[i] * acc;
    }
    q.max(0.0)
}

/// `(sqrt(lo) - rho sqrt(hi))^2 / (1 - rho^2)`.
pub(crate) fn gaussian_excess(rho: f64, x: &[f64]) -> f64 {
    let (hi, lo) = max_min(x);
    let r = lo.sqrt() - rho * hi.sqrt();
    r * r / (1.0 - rho * rho)
}

pub(crate) fn logistic_gp_excess(theta: f64, x: &[f64]) -> f64 {
    let (hi, lo) = max_min(x);
    (1.0 / theta - 1.0) * (hi - lo)
}

pub(crate) fn inverted_logistic_excess(theta: f64, x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let top = x.iter().position(|&v| v == m).unwrap_or(0);
    let p = 1.0 / theta;
    let s: f64 = x
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, v)| (v / m).powf(p))
        .sum();
    m * (theta * s.ln_1p()).exp_m1()
}

/// `lo Phi(l/2 + log(lo/hi)/l) - hi (1 - Phi(l/2 + log(hi/lo)/l))`.
pub(crate) fn inverted_hr_excess(lambda: f64, x: &[f64]) -> f64 {
    let (hi, lo) = max_min(x);
    if lo == 0.0 {
        return 0.0;
    }
    let r = (hi / lo).ln() / lambda;
    (lo * norm_cdf(lambda / 2.0 - r) - hi * norm_sf(lambda / 2.0 + r)).max(0.0)
}

fn max_min(x: &[f64]) -> (f64, f64) {
    (x[0].max(x[1]), x[0].min(x[1]))
}

pub(crate) fn logistic_gp(theta: f64, x: &[f64]) -> f64 {
    let (hi, lo) = max_min(x);
    hi / theta + (1.0 - 1.0 / theta) * lo
}

pub(crate) fn inverted_logistic(theta: f64, x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let p = 1.0 / theta;
    let s: f64 = x.iter().map(|v| (v / m).powf(p)).sum();
    m * s.powf(theta)
}

pub(crate) fn inverted_hr(lambda: f64, x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    if a == 0.0 || b == 0.0 {
        return a + b;
    }
    let r = (a / b).ln() / lambda;
    a * norm_cdf(lambda / 2.0 + r) + b * norm_cdf(lambda / 2.0 - r)
}

pub(crate) fn diagonal(x: &[f64]) -> f64 {
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo <= 1e-12 * hi.abs() {
        hi
    } else {
        f64::INFINITY
    }
}

pub(crate) fn triangle(theta: f64, mu: Option<f64>, x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let side = (a - b).abs() / theta;
    let third = match mu {
        None => (a + b) / (2.0 - theta),
        Some(mu) => (a - mu * b).min(b - mu * a) / (1.0 - theta - mu),
    };
    side.max(third)
}

pub(crate) fn vine3(beta: f64, gamma: f64, x: &[f64]) -> f64 {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    let m23 = x2.max(x3);
    let excess = (beta + 1.0) * (m23 - x2);
    (1.0 + beta) * m23 - beta * x2.min(x3) - gamma * x1 - (gamma + 1.0) * excess
        + (2.0 * gamma + 1.0) * x1.max(excess)
}
