//! Hausdorff distance between a scaled cloud and the limit set `{g <= 1}`.
//!
//! The set is star-shaped, so its part of the distance splits in two:
//! outward excursions of cloud points with `g > 1`, measured to the boundary
//! discretization, and coverage, the largest gap between the set and the
//! cloud. Coverage is probed at the boundary and at shrunken copies of it.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::exec::Exec;
use crate::gauge::Gauge;
use crate::geometry::levelset::{level_set, LevelSet};
use crate::sampling::ScaledCloud;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffOptions {
    /// Angular samples for `d = 2`, lattice subdivisions per edge for `d = 3`.
    pub boundary_points: Option<usize>,
    /// Multiples of the boundary used as coverage probes.
    pub coverage_levels: Vec<f64>,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for HausdorffOptions {
    fn default() -> Self {
        HausdorffOptions {
            boundary_points: None,
            coverage_levels: vec![0.25, 0.5, 0.75, 1.0],
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffResult {
    pub distance: f64,
    /// Largest distance from a cloud point to the set.
    pub outward: f64,
    /// Largest distance from a probe of the set to the cloud.
    pub coverage: f64,
}

pub fn hausdorff(scaled: &ScaledCloud, g: &Gauge) -> Result<f64> {
    Ok(hausdorff_detail(scaled, g, &HausdorffOptions::default())?.distance)
}

pub fn hausdorff_detail(scaled: &ScaledCloud, g: &Gauge, opts: &HausdorffOptions) -> Result<HausdorffResult> {
    if scaled.dim != g.dim() {
        return Err(crate::error::Error::DimensionMismatch {
            expected: g.dim(),
            got: scaled.dim,
        });
    }
    if scaled.points.is_empty() {
        return Err(param("empty cloud"));
    }
    let points = opts
        .boundary_points
        .unwrap_or(if g.dim() == 2 { 400 } else { 50 });
    let ls = level_set(g, points)?;
    if ls.vertices.is_empty() || ls.cells.is_empty() {
        return Err(param("level set has no finite boundary"));
    }
    let outward = outward(scaled, g, &ls, opts.exec);
    let coverage = match scaled.dim {
        2 => coverage::<2>(scaled, &ls, &opts.coverage_levels, opts.exec),
        _ => coverage::<3>(scaled, &ls, &opts.coverage_levels, opts.exec),
    };
    Ok(HausdorffResult {
        distance: outward.max(coverage),
        outward,
        coverage,
    })
}

fn outward(scaled: &ScaledCloud, g: &Gauge, ls: &LevelSet, exec: Exec) -> f64 {
    let outside: Vec<&[f64]> = scaled.rows().filter(|p| g.value(p) > 1.0).collect();
    let d = exec.map(&outside, |p| {
        ls.cells
            .iter()
            .map(|c| {
                if c.len() == 2 {
                    point_segment(p, &ls.vertices[c[0]], &ls.vertices[c[1]])
                } else {
                    point_triangle(p, &ls.vertices[c[0]], &ls.vertices[c[1]], &ls.vertices[c[2]])
                }
            })
            .fold(f64::INFINITY, f64::min)
    });
    d.into_iter().fold(0.0, f64::max)
}

fn coverage<const K: usize>(scaled: &ScaledCloud, ls: &LevelSet, levels: &[f64], exec: Exec) -> f64 {
    let cloud: Vec<[f64; K]> = scaled
        .rows()
        .map(|r| std::array::from_fn(|j| r[j]))
        .collect();
    let tree: ImmutableKdTree<f64, K> = ImmutableKdTree::new_from_slice(&cloud);
    let probes: Vec<[f64; K]> = levels
        .iter()
        .flat_map(|&t| ls.vertices.iter().map(move |v| std::array::from_fn(|j| v[j] * t)))
        .collect();
    exec.map(&probes, |q| tree.nearest_one::<SquaredEuclidean>(q).distance.sqrt())
        .into_iter()
        .fold(0.0, f64::max)
}

fn sub(a: &[f64], b: &[f64]) -> [f64; 3] {
    let mut r = [0.0; 3];
    for (j, v) in r.iter_mut().enumerate().take(a.len()) {
        *v = a[j] - b[j];
    }
    r
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 { (dot(&ap, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let r = [ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]];
    norm(&r)
}

/// Closest-point test by Voronoi regions of the triangle.
fn point_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return norm(&ap);
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return norm(&bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return point_segment(p, a, b);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return norm(&cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return point_segment(p, a, c);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return point_segment(p, b, c);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let q = [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ];
    norm(&sub(p, &q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample, scale_cloud, ModelSpec};

    fn cloud_of(dim: usize, rows: &[Vec<f64>]) -> ScaledCloud {
        ScaledCloud {
            dim,
            points: rows.iter().flatten().copied().collect(),
            r_n: 1.0,
            log_transformed: false,
        }
    }

    #[test]
    fn discretized_set_is_at_distance_zero() {
        let opts = HausdorffOptions::default();
        for g in [Gauge::gaussian2(0.5).unwrap(), Gauge::logistic_gp(0.4).unwrap()] {
            let ls = level_set(&g, 400).unwrap();
            let rows: Vec<Vec<f64>> = opts.coverage_levels.iter().flat_map(|&t| ls.scaled(t)).collect();
            let r = hausdorff_detail(&cloud_of(2, &rows), &g, &opts).unwrap();
            assert!(r.distance < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn triangle_distance_matches_brute_force() {
        let (a, b, c) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        for p in [[1.0, 1.0, 1.0], [2.0, -1.0, 0.0], [0.0, 0.0, 3.0], [0.5, 0.5, -1.0]] {
            let mut best = f64::INFINITY;
            let m = 400;
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let (u, v) = (i as f64 / m as f64, j as f64 / m as f64);
                    let w = 1.0 - u - v;
                    let q: Vec<f64> = (0..3).map(|k| u * a[k] + v * b[k] + w * c[k]).collect();
                    best = best.min(norm(&sub(&p, &q)));
                }
            }
            let got = point_triangle(&p, &a, &b, &c);
            assert!(got <= best + 1e-12 && best - got < 5e-3, "{p:?}: {got} vs {best}");
        }
    }

    #[test]
    fn double_scaling_stays_away() {
        let m = ModelSpec::meta_gaussian2(0.5);
        let cloud = sample(&m, 10_000, 5, Exec::Sequential).unwrap();
        let mut scaled = scale_cloud(&cloud).unwrap();
        let right = hausdorff(&scaled, &m.gauge().unwrap()).unwrap();
        for v in scaled.points.iter_mut() {
            *v /= 2.0;
        }
        let wrong = hausdorff(&scaled, &m.gauge().unwrap()).unwrap();
        assert!(wrong >= 0.4, "{wrong}");
        assert!(right < wrong, "{right} vs {wrong}");
    }

    #[test]
    fn mesh_cloud_in_three_dimensions() {
        let g = Gauge::inverted_logistic(3, 0.6).unwrap();
        let opts = HausdorffOptions::default();
        let ls = level_set(&g, 50).unwrap();
        let rows: Vec<Vec<f64>> = opts.coverage_levels.iter().flat_map(|&t| ls.scaled(t)).collect();
        let r = hausdorff_detail(&cloud_of(3, &rows), &g, &opts).unwrap();
        assert!(r.distance < 1e-9, "{r:?}");
    }
}
