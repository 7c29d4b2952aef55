//! Composite gauges: block sums, linear images, additive mixtures and
//! marginals.

use nalgebra::DMatrix;

use super::{catalog, Family, Gauge};
use crate::error::{param, Error, Result};
use crate::geometry::search::{minimize_1d, minimize_box, SearchOptions};
use crate::geometry::Reduction;

pub(crate) fn additive(blocks: Vec<Gauge>) -> Result<Gauge> {
    if blocks.is_empty() {
        return Err(param("additive gauge needs at least one block"));
    }
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut dim = 0;
    for b in &blocks {
        offsets.push(dim);
        dim += b.dim();
    }
    Ok(Gauge::from_family(dim, Family::Additive { blocks, offsets }))
}

pub(crate) fn linear_image(inner: &Gauge, matrix: &[Vec<f64>]) -> Result<Gauge> {
    let d = inner.dim();
    if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: matrix.len(),
        });
    }
    let a = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let det = a.clone().lu().determinant();
    if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(d as i32) {
        return Err(param("linear map is singular"));
    }
    let inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| param("linear map is singular"))?;
    let flat = |m: &DMatrix<f64>| (0..d * d).map(|k| m[(k / d, k % d)]).collect::<Vec<_>>();
    Ok(Gauge::from_family(
        d,
        Family::LinearImage {
            inner: inner.clone(),
            matrix: flat(&a),
            inverse: flat(&inv),
        },
    ))
}

pub(crate) fn linear_image_value(inner: &Gauge, inverse: &[f64], z: &[f64]) -> f64 {
    let d = z.len();
    let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * zmax.max(f64::MIN_POSITIVE);
    let mut y = vec![0.0; d];
    for i in 0..d {
        let row = &inverse[i * d..(i + 1) * d];
        let v: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
        if v < -tol {
            return f64::INFINITY;
        }
        y[i] = v.max(0.0);
    }
    inner.value(&y)
}

/// Equality constraints carried through a linear image: an inner group
/// survives when each of its source coordinates is a copy of one output
/// coordinate (a unit row of the inverse).
pub(crate) fn linear_image_groups(inner: &Gauge, inverse: &[f64], d: usize) -> Vec<Vec<usize>> {
    let copies: Vec<Option<usize>> = (0..d)
        .map(|i| {
            let row = &inverse[i * d..(i + 1) * d];
            let nz: Vec<usize> = (0..d).filter(|&j| row[j] != 0.0).collect();
            (nz.len() == 1 && row[nz[0]] == 1.0).then(|| nz[0])
        })
        .collect();
    let mut out = Vec::new();
    for grp in inner.equality_groups() {
        let mapped: Option<Vec<usize>> = grp.iter().map(|&k| copies[k]).collect();
        if let Some(mut m) = mapped {
            m.sort_unstable();
            m.dedup();
            if m.len() >= 2 {
                out.push(m);
            }
        }
    }
    out
}

/// Scale `m = max(x)`, the minimizing `s` for `x / m`, and the minimum.
fn common_mix_search(inner: &Gauge, gamma: f64, x: &[f64]) -> (f64, Vec<f64>, f64, f64) {
    let m = x.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return (0.0, x.to_vec(), 0.0, 0.0);
    }
    let y: Vec<f64> = x.iter().map(|v| v / m).collect();
    let s_max = y.iter().cloned().fold(f64::INFINITY, f64::min) / gamma;
    if s_max <= 0.0 {
        let v = inner.value(&y);
        return (m, y, 0.0, v);
    }
    let f = |s: f64| {
        let shifted: Vec<f64> = y.iter().map(|v| (v - gamma * s).max(0.0)).collect();
        s + inner.value(&shifted)
    };
    let (s, v) = minimize_1d(&f, 0.0, s_max, 33);
    (m, y, s, v)
}

pub(crate) fn common_mix_value(inner: &Gauge, gamma: f64, x: &[f64]) -> f64 {
    let (m, _, _, v) = common_mix_search(inner, gamma, x);
    m * v
}

/// Exact inner excess whenever the minimum sits at `s = 0`.
pub(crate) fn common_mix_excess(inner: &Gauge, gamma: f64, x: &[f64]) -> f64 {
    let (m, y, s, v) = common_mix_search(inner, gamma, x);
    if m == 0.0 {
        return 0.0;
    }
    if s == 0.0 {
        m * inner.excess(&y)
    } else {
        m * (v - 1.0)
    }
}

/// Minimizing `s` in `g_X(x) = min over s of s + inner(x - gamma s)`.
pub(crate) fn common_mix_argmin(inner: &Gauge, gamma: f64, x: &[f64]) -> f64 {
    let (m, _, s, _) = common_mix_search(inner, gamma, x);
    m * s
}

pub(crate) fn marginal(g: &Gauge, keep: &[usize], shortcuts: bool) -> Result<Gauge> {
    let d = g.dim();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(param("marginal needs at least one kept coordinate"));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= d) {
        return Err(param(format!("coordinate {bad} out of range for dimension {d}")));
    }
    if keep.len() == d {
        return Err(param(
            "keep is the full index set; the marginal is the gauge itself",
        ));
    }
    let k = keep.len();
    if shortcuts {
        match g.family() {
            Family::Gaussian { corr, .. } => {
                let sub: Vec<Vec<f64>> = keep
                    .iter()
                    .map(|&i| keep.iter().map(|&j| corr[i * d + j]).collect())
                    .collect();
                return catalog::build_gaussian(&sub);
            }
            Family::InvertedLogistic { theta } => {
                return Gauge::inverted_logistic(k, *theta);
            }
            Family::Independence => return Gauge::independence(k),
            Family::MaxOnly => return Gauge::max_only(k),
            Family::HuslerReissGp | Family::PerfectDependence => {
                return Gauge::perfect_dependence(k);
            }
            Family::Vine3 { .. } if keep == [0, 1] => return Gauge::independence(2),
            Family::Additive { blocks, offsets } => {
                let mut parts = Vec::new();
                for (b, &o) in blocks.iter().zip(offsets) {
                    let local: Vec<usize> = keep
                        .iter()
                        .filter(|&&i| i >= o && i < o + b.dim())
                        .map(|&i| i - o)
                        .collect();
                    if local.len() == b.dim() {
                        parts.push(b.clone());
                    } else if !local.is_empty() {
                        parts.push(marginal(b, &local, true)?);
                    }
                }
                return if parts.len() == 1 {
                    Ok(parts.pop().unwrap())
                } else {
                    additive(parts)
                };
            }
            Family::LogisticGp { .. }
            | Family::InvertedHuslerReiss { .. }
            | Family::MixtureVi { .. }
            | Family::Triangle { .. }
            | Family::Vine3 { .. }
                if k == 1 =>
            {
                // unit-face contact makes every univariate margin the identity
                return Gauge::independence(1);
            }
            _ => {}
        }
    }
    if let Family::Marginal {
        inner,
        keep: inner_keep,
        ..
    } = g.family()
    {
        let mapped: Vec<usize> = keep.iter().map(|&i| inner_keep[i]).collect();
        return marginal(inner, &mapped, false);
    }
    let groups = g.equality_groups();
    Ok(Gauge::from_family(
        k,
        Family::Marginal {
            inner: g.clone(),
            keep,
            groups,
        },
    ))
}

pub(crate) fn marginal_value(inner: &Gauge, keep: &[usize], groups: &[Vec<usize>], y: &[f64]) -> f64 {
    let m = y.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let d = inner.dim();
    let mut fixed = vec![None; d];
    for (&i, &v) in keep.iter().zip(y) {
        fixed[i] = Some(v / m);
    }
    let open = vec![(0.0, f64::INFINITY); d];
    let Some(mut red) = Reduction::new(&fixed, &open, groups) else {
        return f64::INFINITY;
    };
    if red.n_params() == 0 {
        return m * inner.value(&red.expand(&[]));
    }
    // the kept coordinates with zeros elsewhere bound the minimum, and by
    // dominance no minimizer has a coordinate above that bound
    let lower: Vec<f64> = red.bounds().iter().map(|b| b.0).collect();
    let vertex = inner.value(&red.expand(&lower));
    let upper = if vertex.is_finite() { vertex + 1.0 } else { 4.0 };
    red.cap_upper(upper);
    if red.is_empty() {
        return f64::INFINITY;
    }
    let f = |p: &[f64]| inner.value(&red.expand(p));
    let (_, v) = minimize_box(&f, red.bounds(), &SearchOptions::default());
    m * v
}
