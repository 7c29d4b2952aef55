//! Checks of the defining properties of a gauge: homogeneity, the lower
//! bound `g >= max(x)`, and contact with every unit face `{x_j = 1}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Gauge;
use crate::error::Result;
use crate::geometry::{auto_upper, minimize, BoundaryRegion, SearchOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub homogeneity_pairs: usize,
    pub dominance_points: usize,
    pub unit_faces: bool,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            homogeneity_pairs: 1000,
            dominance_points: 10_000,
            unit_faces: true,
            seed: 17,
        }
    }
}

impl CheckOptions {
    /// Lighter settings used when registering custom gauges.
    pub fn quick() -> Self {
        CheckOptions {
            homogeneity_pairs: 200,
            dominance_points: 2000,
            ..CheckOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Largest `|g(tx) - t g(x)| / max(1, t g(x))`.
    pub homogeneity_error: f64,
    /// Smallest `g(x) - max(x)` seen.
    pub dominance_slack: f64,
    /// Minimum of `g` over each unit face.
    pub unit_face_minima: Vec<f64>,
}

pub const HOMOGENEITY_TOL: f64 = 1e-12;
pub const DOMINANCE_TOL: f64 = 1e-12;
pub const UNIT_FACE_TOL: f64 = 1e-6;

impl InvariantReport {
    pub fn first_failure(&self) -> Option<String> {
        if !(self.homogeneity_error <= HOMOGENEITY_TOL) {
            return Some(format!("homogeneity error {}", self.homogeneity_error));
        }
        if !(self.dominance_slack >= -DOMINANCE_TOL) {
            return Some(format!("g falls below max(x) by {}", -self.dominance_slack));
        }
        for (j, m) in self.unit_face_minima.iter().enumerate() {
            if !((m - 1.0).abs() <= UNIT_FACE_TOL) {
                return Some(format!("minimum over the unit face of coordinate {j} is {m}"));
            }
        }
        None
    }

    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            // a share of exact zeros exercises the orthant boundary
            if rng.random_bool(0.1) {
                0.0
            } else {
                scale * rng.random::<f64>()
            }
        })
        .collect()
}

/// Runs the invariant checks; extended-valued gauges are probed for
/// homogeneity along their equality constraints.
pub fn check(g: &Gauge, opts: &CheckOptions) -> Result<InvariantReport> {
    let d = g.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let groups = g.equality_groups();
    let tie = |x: &mut Vec<f64>| {
        for grp in &groups {
            let v = x[grp[0]];
            for &i in grp {
                x[i] = v;
            }
        }
    };

    let mut homogeneity_error: f64 = 0.0;
    for _ in 0..opts.homogeneity_pairs {
        let mut x = random_point(&mut rng, d, 2.0);
        tie(&mut x);
        let t = 10f64.powf(rng.random_range(-2.0..2.0));
        let gx = g.value(&x);
        let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
        let gtx = g.value(&tx);
        let err = if gx.is_infinite() && gtx.is_infinite() {
            0.0
        } else {
            (gtx - t * gx).abs() / (t * gx).max(1.0)
        };
        homogeneity_error = homogeneity_error.max(if err.is_nan() { f64::INFINITY } else { err });
    }

    let mut dominance_slack = f64::INFINITY;
    for _ in 0..opts.dominance_points {
        let x = random_point(&mut rng, d, 3.0);
        let m = x.iter().cloned().fold(0.0, f64::max);
        let gx = g.value(&x);
        let slack = if gx.is_nan() { f64::NEG_INFINITY } else { gx - m };
        dominance_slack = dominance_slack.min(slack);
    }

    let mut unit_face_minima = Vec::new();
    if opts.unit_faces {
        let search = SearchOptions::default();
        let ones = vec![1.0; d];
        let upper = auto_upper(g, &ones);
        for j in 0..d {
            let region = BoundaryRegion::unit_face(d, j, upper)?;
            let v = minimize(g, &region, &search).map_or(f64::INFINITY, |m| m.value);
            unit_face_minima.push(v);
        }
    }

    Ok(InvariantReport {
        homogeneity_error,
        dominance_slack,
        unit_face_minima,
    })
}
