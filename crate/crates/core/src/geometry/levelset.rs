//! Discretizations of the unit level set `{g = 1}`.
//!
//! Boundary points are found radially: for a direction `w` on the simplex the
//! boundary point is `w / g(w)`. Two dimensions give a polyline ordered by
//! angle, three give a triangle mesh over a barycentric lattice.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::gauge::Gauge;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    /// Consecutive vertex pairs for a polyline, vertex triples for a mesh.
    pub cells: Vec<Vec<usize>>,
}

impl LevelSet {
    /// The vertices scaled by `t`, which lie on `{g = t}`.
    pub fn scaled(&self, t: f64) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(|c| c * t).collect())
            .collect()
    }
}

fn radial(g: &Gauge, w: &[f64]) -> Option<Vec<f64>> {
    let v = g.value(w);
    (v.is_finite() && v > 0.0).then(|| w.iter().map(|c| c / v).collect())
}

/// Polyline with `points` angular samples for `d = 2`, or a triangle mesh
/// over a lattice of `points` subdivisions per edge for `d = 3`.
pub fn level_set(g: &Gauge, points: usize) -> Result<LevelSet> {
    match g.dim() {
        2 => Ok(polyline(g, points.max(2))),
        3 => Ok(mesh(g, points.max(1))),
        d => Err(param(format!("level sets are available for d = 2 or 3, got {d}"))),
    }
}

fn polyline(g: &Gauge, points: usize) -> LevelSet {
    let mut dirs: Vec<(f64, [f64; 2])> = (0..points)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_2 * k as f64 / (points - 1) as f64;
            let (s, c) = t.sin_cos();
            // exact axes at the ends
            let (c, s) = if k == 0 {
                (1.0, 0.0)
            } else if k == points - 1 {
                (0.0, 1.0)
            } else {
                (c, s)
            };
            (t, [c, s])
        })
        .collect();
    // the diagonal carries the whole set for gauges finite only there
    dirs.push((std::f64::consts::FRAC_PI_4, [1.0, 1.0]));
    dirs.sort_by(|a, b| a.0.total_cmp(&b.0));
    dirs.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15);
    let vertices: Vec<Vec<f64>> = dirs.iter().filter_map(|(_, w)| radial(g, w)).collect();
    let cells = (1..vertices.len()).map(|i| vec![i - 1, i]).collect();
    LevelSet {
        dim: 2,
        vertices,
        cells,
    }
}

fn mesh(g: &Gauge, m: usize) -> LevelSet {
    let mut index = vec![vec![usize::MAX; m + 1]; m + 1];
    let mut vertices = Vec::new();
    for i in 0..=m {
        for j in 0..=(m - i) {
            let k = m - i - j;
            let w = [i as f64 / m as f64, j as f64 / m as f64, k as f64 / m as f64];
            if let Some(p) = radial(g, &w) {
                index[i][j] = vertices.len();
                vertices.push(p);
            }
        }
    }
    let mut cells = Vec::new();
    let mut push = |a: usize, b: usize, c: usize| {
        if a != usize::MAX && b != usize::MAX && c != usize::MAX {
            cells.push(vec![a, b, c]);
        }
    };
    for i in 0..m {
        for j in 0..(m - i) {
            push(index[i][j], index[i + 1][j], index[i][j + 1]);
            if j + 1 < m - i {
                push(index[i + 1][j], index[i + 1][j + 1], index[i][j + 1]);
            }
        }
    }
    LevelSet {
        dim: 3,
        vertices,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_vertices_on_unit_level() {
        let g = Gauge::logistic_gp(0.4).unwrap();
        let ls = level_set(&g, 400).unwrap();
        assert!(ls.vertices.len() >= 400);
        for v in &ls.vertices {
            assert!((g.value(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_has_full_triangulation() {
        let g = Gauge::independence(3).unwrap();
        let ls = level_set(&g, 50).unwrap();
        assert_eq!(ls.vertices.len(), 51 * 52 / 2);
        assert_eq!(ls.cells.len(), 2500);
    }

    #[test]
    fn diagonal_only_gauge() {
        let ls = level_set(&Gauge::husler_reiss_gp(), 400).unwrap();
        assert_eq!(ls.vertices, vec![vec![1.0, 1.0]]);
    }
}
