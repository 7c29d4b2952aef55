//! Derivative-free minimizers for piecewise-smooth functions on boxes.
//!
//! Gauge functions built from `max`/`min` have kinks exactly where the
//! minima sit, so everything here is comparison based: grid scans seed
//! golden-section searches (one dimension) or Nelder–Mead with restarts and
//! a compass polish (several dimensions).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[inline]
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Golden-section search on `[a, b]`. The endpoints are always evaluated, so
/// minima on the boundary are returned exactly.
pub fn golden(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut best_x, mut best_f) = (a, sanitize(f(a)));
    let fb = sanitize(f(b));
    if fb < best_f {
        best_x = b;
        best_f = fb;
    }
    if b <= a {
        return (best_x, best_f);
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = sanitize(f(x1));
    let mut f2 = sanitize(f(x2));
    let scale = a.abs().max(b.abs()).max(1.0);
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = sanitize(f(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = sanitize(f(x2));
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best_f {
            best_x = x;
            best_f = v;
        }
    }
    (best_x, best_f)
}

/// Grid scan on `[lo, hi]` followed by golden-section refinement in the
/// bracket around every grid local minimum.
pub fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, sanitize(f(lo)));
    }
    let m = grid.max(3);
    let h = (hi - lo) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m)
        .map(|i| if i == m - 1 { hi } else { lo + h * i as f64 })
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| sanitize(f(x))).collect();
    let (mut best_x, mut best_f) = (xs[0], vs[0]);
    for i in 0..m {
        if vs[i] < best_f {
            best_x = xs[i];
            best_f = vs[i];
        }
    }
    for i in 0..m {
        let left = if i > 0 { vs[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < m { vs[i + 1] } else { f64::INFINITY };
        let local = vs[i] <= left && vs[i] <= right;
        // finite/infinite transitions may hide a minimum next to the edge
        let edge = vs[i].is_finite() && (left.is_infinite() || right.is_infinite());
        if !(local || edge) || (vs[i].is_infinite()) {
            continue;
        }
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(m - 1)];
        let (x, v) = golden(f, a, b);
        if v < best_f {
            best_x = x;
            best_f = v;
        }
    }
    (best_x, best_f)
}

fn clamp_into(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

/// Nelder–Mead with coordinates clamped into the box.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    bounds: &[(f64, f64)],
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let eval = |x: &[f64]| sanitize(f(x));
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp_into(&mut start, bounds);
    simplex.push(start.clone());
    for i in 0..n {
        let mut p = start.clone();
        let (lo, hi) = bounds[i];
        p[i] = if p[i] + step[i] <= hi { p[i] + step[i] } else { p[i] - step[i] };
        p[i] = p[i].clamp(lo, hi);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= 1e-15 * (1.0 + values[0].abs()) && diameter <= 1e-10)
            || diameter <= 1e-14
        {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect();
            clamp_into(&mut p, bounds);
            p
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let p = along(-0.5);
                let v = eval(&p);
                (p, v)
            } else {
                let p = along(0.5);
                let v = eval(&p);
                (p, v)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    let mut p: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&best)
                        .map(|(a, b)| b + 0.5 * (a - b))
                        .collect();
                    clamp_into(&mut p, bounds);
                    values[i] = eval(&p);
                    simplex[i] = p;
                }
                evals += n;
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Pattern search over axis and pairwise-diagonal directions with a halving
/// step. Escapes the ridges where Nelder–Mead stalls on kinked functions.
pub fn compass_polish(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    bounds: &[(f64, f64)],
    initial_step: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
        for j in (i + 1)..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; n];
                d[i] = si;
                d[j] = sj;
                dirs.push(d);
            }
        }
    }
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut h = initial_step;
    let scale = bounds
        .iter()
        .map(|(lo, hi)| hi.abs().max(lo.abs()))
        .fold(1.0, f64::max);
    let mut iterations = 0;
    while h > 1e-15 * scale && iterations < 20_000 {
        iterations += 1;
        let mut improved = false;
        for d in &dirs {
            let mut p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + h * b).collect();
            clamp_into(&mut p, bounds);
            let fp = sanitize(f(&p));
            if fp < fx {
                x = p;
                fx = fp;
                improved = true;
                break;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

/// Tunables for [`minimize_box`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchOptions {
    /// Grid points per free coordinate for the seeding scan.
    pub grid_points: usize,
    /// Number of multistart seeds for dimensions above one.
    pub starts: usize,
    /// Seed for random starts (used when the grid scan is disabled).
    pub seed: u64,
    /// Largest number of free coordinates for which the full grid is scanned.
    pub max_grid_dim: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: 33,
            starts: 8,
            seed: 0x5EED,
            max_grid_dim: 3,
        }
    }
}

/// Minimizes `f` over the box `bounds`.
pub fn minimize_box(
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    opts: &SearchOptions,
) -> (Vec<f64>, f64) {
    let n = bounds.len();
    match n {
        0 => (Vec::new(), sanitize(f(&[]))),
        1 => {
            let g = |t: f64| f(&[t]);
            let (x, v) = minimize_1d(&g, bounds[0].0, bounds[0].1, opts.grid_points);
            (vec![x], v)
        }
        _ => minimize_nd(f, bounds, opts),
    }
}

fn minimize_nd(
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    opts: &SearchOptions,
) -> (Vec<f64>, f64) {
    let n = bounds.len();
    let m = opts.grid_points.max(3);
    let widths: Vec<f64> = bounds.iter().map(|(lo, hi)| (hi - lo).max(0.0)).collect();
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    if n <= opts.max_grid_dim {
        let total = m.pow(n as u32);
        let mut idx = vec![0usize; n];
        let mut values = Vec::with_capacity(total);
        let mut points = Vec::with_capacity(total);
        for _ in 0..total {
            let p: Vec<f64> = idx
                .iter()
                .zip(bounds)
                .map(|(&i, &(lo, hi))| {
                    if i == m - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (m - 1) as f64
                    }
                })
                .collect();
            values.push(sanitize(f(&p)));
            points.push(p);
            for k in 0..n {
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
            }
        }
        // grid local minima (non-strict, axis neighbours)
        let stride: Vec<usize> = (0..n).map(|k| m.pow(k as u32)).collect();
        for flat in 0..total {
            let v = values[flat];
            if !v.is_finite() {
                continue;
            }
            let mut local = true;
            for k in 0..n {
                let ik = (flat / stride[k]) % m;
                if ik > 0 && values[flat - stride[k]] < v {
                    local = false;
                    break;
                }
                if ik + 1 < m && values[flat + stride[k]] < v {
                    local = false;
                    break;
                }
            }
            if local {
                candidates.push((v, points[flat].clone()));
            }
        }
        if candidates.len() < opts.starts {
            let mut order: Vec<usize> = (0..total).filter(|&i| values[i].is_finite()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            for &i in order.iter().take(opts.starts) {
                candidates.push((values[i], points[i].clone()));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..(512 * n) {
            let p: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                .collect();
            let v = sanitize(f(&p));
            if v.is_finite() {
                candidates.push((v, p));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.dedup_by(|a, b| a.1 == b.1);
    if candidates.is_empty() {
        let p: Vec<f64> = bounds.iter().map(|&(lo, _)| lo).collect();
        return (p, f64::INFINITY);
    }

    let spacing: Vec<f64> = widths
        .iter()
        .map(|w| if *w > 0.0 { w / (m - 1) as f64 } else { 0.0 })
        .collect();
    let mut best: (Vec<f64>, f64) = (candidates[0].1.clone(), candidates[0].0);
    for (v0, p0) in candidates.into_iter().take(opts.starts.max(1)) {
        let (mut x, mut fx) = (p0, v0);
        let mut step: Vec<f64> = spacing.iter().map(|s| s.max(1e-9)).collect();
        for _ in 0..6 {
            let (x1, f1) = nelder_mead(f, &x, &step, bounds, 400 * n);
            let gain = fx - f1;
            if f1 <= fx {
                x = x1;
                fx = f1;
            }
            if gain <= 1e-15 * (1.0 + fx.abs()) {
                break;
            }
            step.iter_mut().for_each(|s| *s *= 0.25);
        }
        // one golden pass per coordinate inside the seeding cell
        for k in 0..n {
            let lo = (x[k] - spacing[k]).max(bounds[k].0);
            let hi = (x[k] + spacing[k]).min(bounds[k].1);
            let g = |t: f64| {
                let mut probe = x.clone();
                probe[k] = t;
                f(&probe)
            };
            let (t, v) = golden(&g, lo, hi);
            if v < fx {
                x[k] = t;
                fx = v;
            }
        }
        let h0 = spacing.iter().cloned().fold(0.0, f64::max).max(1e-6);
        let (xp, fp) = compass_polish(f, &x, fx, bounds, h0);
        if fp < best.1 {
            best = (xp, fp);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_kink_and_boundary() {
        let (x, v) = golden(&|t: f64| (t - 0.3).abs(), 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-14 && v < 1e-14);
        let (x, v) = golden(&|t: f64| t + 2.0, 0.5, 1.0);
        assert_eq!((x, v), (0.5, 2.5));
    }

    #[test]
    fn one_dimensional_multimodal() {
        // two basins; the deeper one is at 0.8
        let f = |t: f64| ((t - 0.2).abs() + 0.1).min((t - 0.8).abs() * 2.0);
        let (x, v) = minimize_1d(&f, 0.0, 1.0, 33);
        assert!((x - 0.8).abs() < 1e-12, "{x}");
        assert!(v < 1e-12);
    }

    #[test]
    fn two_dimensional_kinked_minimum() {
        let f = |p: &[f64]| (p[0] - 0.37).abs().max((p[1] - 0.61).abs()) + 0.5 * (p[0] + p[1] - 0.98).abs();
        let (x, v) = minimize_box(&f, &[(0.0, 1.0), (0.0, 1.0)], &SearchOptions::default());
        assert!(v < 1e-9, "{v} at {x:?}");
    }

    #[test]
    fn infinite_regions_are_skipped() {
        let f = |t: f64| if t < 0.5 { f64::INFINITY } else { t };
        let (x, v) = minimize_1d(&f, 0.0, 1.0, 33);
        assert!((x - 0.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);
    }
}
