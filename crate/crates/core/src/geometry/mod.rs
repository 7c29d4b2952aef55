//! Boundary regions and the minimization of gauges over them.
//!
//! Every dependence summary reduces to a minimum of `g` over a finite union
//! of axis-aligned faces: one coordinate pinned, the others in intervals.
//! Unbounded intervals are truncated at `U`; since `g >= max(x)`, no
//! minimizer has a coordinate above the value of `g` at the region's vertex.

pub mod levelset;
pub mod search;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::gauge::Gauge;
pub use search::SearchOptions;

/// One face: coordinate `pinned` fixed at `value`, the others in `bounds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub pinned: usize,
    pub value: f64,
    /// Interval per coordinate; the pinned coordinate has `(value, value)`.
    pub bounds: Vec<(f64, f64)>,
}

impl Face {
    fn new(pinned: usize, value: f64, mut bounds: Vec<(f64, f64)>) -> Face {
        bounds[pinned] = (value, value);
        Face {
            pinned,
            value,
            bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// True if `x` lies on the face up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionLabel {
    BOmega { omega: Vec<f64> },
    B1CDelta { subset: Vec<usize>, delta: f64 },
    MinFace,
    UnitFace { coordinate: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRegion {
    pub label: RegionLabel,
    pub faces: Vec<Face>,
    pub upper: f64,
}

fn check_upper(upper: f64) -> Result<()> {
    if !(upper >= 1.0) || upper.is_nan() {
        return Err(param(format!("truncation bound must be at least 1, got {upper}")));
    }
    Ok(())
}

fn check_simplex(omega: &[f64]) -> Result<()> {
    if omega.is_empty() {
        return Err(param("empty weight vector"));
    }
    if omega.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(param(format!("weights must be nonnegative, got {omega:?}")));
    }
    let s: f64 = omega.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(param(format!("weights must sum to one, got {s}")));
    }
    Ok(())
}

fn check_subset(dim: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let mut c = subset.to_vec();
    c.sort_unstable();
    c.dedup();
    if c.is_empty() {
        return Err(param("coordinate subset must be nonempty"));
    }
    if let Some(&bad) = c.iter().find(|&&i| i >= dim) {
        return Err(param(format!("coordinate {bad} out of range for dimension {dim}")));
    }
    Ok(c)
}

impl BoundaryRegion {
    /// Faces pinning `x_i = omega_i / max(omega)` with the others in
    /// `[omega_j / max(omega), upper]`.
    pub fn b_omega(omega: &[f64], upper: f64) -> Result<BoundaryRegion> {
        check_simplex(omega)?;
        check_upper(upper)?;
        let m = omega.iter().cloned().fold(0.0, f64::max);
        let scaled: Vec<f64> = omega.iter().map(|w| w / m).collect();
        let faces = (0..omega.len())
            .map(|i| {
                let bounds = scaled.iter().map(|&s| (s, upper.max(s))).collect();
                Face::new(i, scaled[i], bounds)
            })
            .collect();
        Ok(BoundaryRegion {
            label: RegionLabel::BOmega {
                omega: omega.to_vec(),
            },
            faces,
            upper,
        })
    }

    /// Faces pinning `x_i = 1` for `i` in `subset`, the rest of `subset` in
    /// `[1, upper]` and the complement in `[0, delta]`. `subset` is zero-based.
    pub fn b1_c_delta(dim: usize, subset: &[usize], delta: f64, upper: f64) -> Result<BoundaryRegion> {
        let c = check_subset(dim, subset)?;
        if !(0.0..=1.0).contains(&delta) {
            return Err(param(format!("delta must lie in [0,1], got {delta}")));
        }
        check_upper(upper)?;
        let in_c: Vec<bool> = (0..dim).map(|i| c.contains(&i)).collect();
        let faces = c
            .iter()
            .map(|&i| {
                let bounds = (0..dim)
                    .map(|j| if in_c[j] { (1.0, upper) } else { (0.0, delta) })
                    .collect();
                Face::new(i, 1.0, bounds)
            })
            .collect();
        Ok(BoundaryRegion {
            label: RegionLabel::B1CDelta { subset: c, delta },
            faces,
            upper,
        })
    }

    /// `{min(x) = 1}` truncated at `upper`.
    pub fn min_face(dim: usize, upper: f64) -> Result<BoundaryRegion> {
        let all: Vec<usize> = (0..dim).collect();
        let mut r = BoundaryRegion::b1_c_delta(dim, &all, 0.0, upper)?;
        r.label = RegionLabel::MinFace;
        Ok(r)
    }

    /// The single face `{x_j = 1}` with the other coordinates in `[0, upper]`.
    pub fn unit_face(dim: usize, coordinate: usize, upper: f64) -> Result<BoundaryRegion> {
        check_subset(dim, &[coordinate])?;
        check_upper(upper)?;
        let face = Face::new(coordinate, 1.0, vec![(0.0, upper); dim]);
        Ok(BoundaryRegion {
            label: RegionLabel::UnitFace { coordinate },
            faces: vec![face],
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.faces.first().map_or(0, Face::dim)
    }

    /// The corner shared by all faces: every coordinate at its lower bound.
    pub fn vertex(&self) -> Vec<f64> {
        self.faces
            .first()
            .map(|f| f.bounds.iter().map(|b| b.0).collect())
            .unwrap_or_default()
    }
}

/// Truncation bound `g(vertex) + 1`, falling back to 4 when `g` is infinite
/// at the vertex.
pub fn auto_upper(g: &Gauge, vertex: &[f64]) -> f64 {
    let v = g.value(vertex);
    if v.is_finite() {
        (v + 1.0).max(1.0)
    } else {
        4.0
    }
}

/// Result of [`minimize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub face_index: usize,
    pub certified_tol: f64,
    /// Faces whose minimum ties with the reported one.
    pub tied_faces: Vec<usize>,
}

impl MinResult {
    /// True when more than one face attains the minimum.
    pub fn non_unique(&self) -> bool {
        self.tied_faces.len() > 1
    }
}

/// Minimizes `g` over every face of `region` and returns the smallest value.
/// Ties within `1e-9` relative go to the lowest face index.
pub fn minimize(g: &Gauge, region: &BoundaryRegion, opts: &SearchOptions) -> Result<MinResult> {
    if region.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: region.dim(),
        });
    }
    let groups = g.equality_groups();
    let per_face: Vec<(f64, Vec<f64>)> = region
        .faces
        .iter()
        .map(|face| minimize_face(g, face, &groups, opts))
        .collect();
    let best = per_face
        .iter()
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Degenerate(format!(
            "{} is infinite on every face of the region",
            g.family_name()
        )));
    }
    let tol = 1e-9 * best.abs().max(1e-300);
    let tied: Vec<usize> = (0..per_face.len())
        .filter(|&i| per_face[i].0 <= best + tol)
        .collect();
    let face_index = tied[0];
    let free = g.dim().saturating_sub(1);
    let certified_tol = if free <= opts.max_grid_dim { 1e-6 } else { 1e-4 };
    Ok(MinResult {
        value: per_face[face_index].0,
        argmin: per_face[face_index].1.clone(),
        face_index,
        certified_tol,
        tied_faces: tied,
    })
}

fn minimize_face(
    g: &Gauge,
    face: &Face,
    groups: &[Vec<usize>],
    opts: &SearchOptions,
) -> (f64, Vec<f64>) {
    let fixed: Vec<Option<f64>> = face
        .bounds
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| (i == face.pinned || lo == hi).then_some(lo))
        .collect();
    let Some(red) = Reduction::new(&fixed, &face.bounds, groups) else {
        return (f64::INFINITY, face.bounds.iter().map(|b| b.0).collect());
    };
    let f = |p: &[f64]| g.value(&red.expand(p));
    let (p, v) = search::minimize_box(&f, red.bounds(), opts);
    (v, red.expand(&p))
}

/// Maps free parameters to full coordinate vectors, tying together the
/// coordinates an extended-valued gauge requires to be equal.
#[derive(Clone, Debug)]
pub(crate) struct Reduction {
    template: Vec<f64>,
    members: Vec<Vec<usize>>,
    bounds: Vec<(f64, f64)>,
}

impl Reduction {
    /// `None` if the constraints cannot be met (a finite value is impossible).
    pub(crate) fn new(
        fixed: &[Option<f64>],
        bounds: &[(f64, f64)],
        groups: &[Vec<usize>],
    ) -> Option<Reduction> {
        let d = fixed.len();
        let mut group_of: Vec<Option<usize>> = vec![None; d];
        for (gi, grp) in groups.iter().enumerate() {
            for &i in grp {
                if i < d {
                    group_of[i] = Some(gi);
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| g.iter().cloned().filter(|&i| i < d).collect())
            .collect();
        for i in 0..d {
            if group_of[i].is_none() {
                classes.push(vec![i]);
            }
        }
        let mut template = vec![0.0; d];
        let mut members = Vec::new();
        let mut pbounds = Vec::new();
        for class in classes.into_iter().filter(|c| !c.is_empty()) {
            let pinned: Vec<f64> = class.iter().filter_map(|&i| fixed[i]).collect();
            if let Some(&v) = pinned.first() {
                let tol = 1e-12 * v.abs().max(1.0);
                if pinned.iter().any(|p| (p - v).abs() > tol) {
                    return None;
                }
                for &i in &class {
                    if fixed[i].is_none() && (v < bounds[i].0 - tol || v > bounds[i].1 + tol) {
                        return None;
                    }
                    template[i] = v;
                }
            } else {
                let lo = class.iter().map(|&i| bounds[i].0).fold(f64::NEG_INFINITY, f64::max);
                let hi = class.iter().map(|&i| bounds[i].1).fold(f64::INFINITY, f64::min);
                if lo > hi + 1e-12 * lo.abs().max(1.0) {
                    return None;
                }
                for &i in &class {
                    template[i] = lo;
                }
                pbounds.push((lo, hi.max(lo)));
                members.push(class);
            }
        }
        Some(Reduction {
            template,
            members,
            bounds: pbounds,
        })
    }

    pub(crate) fn n_params(&self) -> usize {
        self.members.len()
    }

    pub(crate) fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub(crate) fn cap_upper(&mut self, upper: f64) {
        for b in &mut self.bounds {
            b.1 = b.1.min(upper);
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.bounds.iter().any(|(lo, hi)| lo > hi)
    }

    pub(crate) fn expand(&self, p: &[f64]) -> Vec<f64> {
        let mut x = self.template.clone();
        for (grp, &v) in self.members.iter().zip(p) {
            for &i in grp {
                x[i] = v;
            }
        }
        x
    }
}
