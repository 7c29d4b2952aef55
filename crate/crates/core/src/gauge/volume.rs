//! Volume of the limit set `G = {g <= 1}`.
//!
//! Writing `x = r w` with `r = sum(x)` and `w` on the unit simplex gives
//! `|G| = (1/d) * integral over the simplex of g(w)^(-d)`, integrated here by
//! nested adaptive Simpson quadrature.

use super::Gauge;
use crate::error::{Error, Result};

pub fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    // start from a few panels so narrow features are not stepped over
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (flo, fhi, fmid) = (f(lo), f(hi), f(mid));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(f, lo, flo, hi, fhi, mid, fmid, whole, tol / panels as f64, depth);
    }
    total
}

fn simplex_integral(g: &Gauge, prefix: &mut Vec<f64>, remaining: f64, tol: f64) -> f64 {
    let d = g.dim();
    let level = prefix.len();
    if level == d - 1 {
        let mut w = prefix.clone();
        w.push(remaining.max(0.0));
        let v = g.value(&w);
        return if v.is_finite() && v > 0.0 {
            v.powi(-(d as i32))
        } else {
            0.0
        };
    }
    let depth = if level + 1 == d - 1 { 40 } else { 24 };
    let mut inner = |t: f64| {
        prefix.push(t);
        let v = simplex_integral(g, prefix, remaining - t, tol);
        prefix.pop();
        v
    };
    adaptive_simpson(&mut inner, 0.0, remaining, tol, depth)
}

/// `|G|` for a finite-valued gauge.
pub fn limit_set_volume(g: &Gauge) -> Result<f64> {
    if g.is_extended_valued() {
        return Err(Error::Unsupported(format!(
            "{} is extended-valued; its limit set has zero volume",
            g.family_name()
        )));
    }
    let d = g.dim();
    if d == 1 {
        return Ok(1.0 / g.value(&[1.0]));
    }
    let tol = if d == 2 { 1e-12 } else { 1e-9 };
    let integral = simplex_integral(g, &mut Vec::with_capacity(d), 1.0, tol);
    let vol = integral / d as f64;
    if !(vol.is_finite() && vol > 0.0) {
        return Err(Error::Degenerate(format!("limit set volume evaluated to {vol}")));
    }
    Ok(vol)
}
