//! JSON descriptors `{ "family": ..., "dim": ..., "params": {...} }`.

use serde::{Deserialize, Serialize};

use super::{Family, Gauge};
use crate::error::{Error, Result};

/// Serializable description of a gauge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub family: FamilySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Correlation matrix given as rows.
    Gaussian { corr: Vec<Vec<f64>> },
    LogisticGp { theta: f64 },
    InvertedLogistic { theta: f64 },
    InvertedHuslerReiss { lambda: f64 },
    HuslerReissGp,
    PerfectDependence,
    MixtureVi { theta1: f64, theta2: f64 },
    /// Without `mu`: sides `|x - y| / theta` and top `(x + y)/(2 - theta)`.
    /// With `mu`: the top is `min(x - mu y, y - mu x)/(1 - theta - mu)`.
    Triangle {
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
    },
    Vine3 { beta: f64, gamma: f64 },
    Independence,
    MaxOnly,
    /// Named user gauge; records provenance only and cannot be rebuilt.
    Custom { name: String },
    Additive { blocks: Vec<GaugeSpec> },
    LinearImage { inner: Box<GaugeSpec>, matrix: Vec<Vec<f64>> },
    CommonMix { inner: Box<GaugeSpec>, gamma: f64 },
    Marginal { inner: Box<GaugeSpec>, keep: Vec<usize> },
}

impl GaugeSpec {
    pub fn new(dim: usize, family: FamilySpec) -> GaugeSpec {
        GaugeSpec { dim, family }
    }

    pub fn build(&self) -> Result<Gauge> {
        from_spec(self)
    }

    pub fn from_json(text: &str) -> Result<GaugeSpec> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }
}

fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(|r| r.to_vec()).collect()
}

pub(crate) fn to_spec(g: &Gauge) -> GaugeSpec {
    let d = g.dim();
    let family = match g.family() {
        Family::Gaussian { corr, .. } => FamilySpec::Gaussian { corr: rows(corr, d) },
        Family::LogisticGp { theta } => FamilySpec::LogisticGp { theta: *theta },
        Family::InvertedLogistic { theta } => FamilySpec::InvertedLogistic { theta: *theta },
        Family::InvertedHuslerReiss { lambda } => {
            FamilySpec::InvertedHuslerReiss { lambda: *lambda }
        }
        Family::HuslerReissGp => FamilySpec::HuslerReissGp,
        Family::PerfectDependence => FamilySpec::PerfectDependence,
        Family::MixtureVi { theta1, theta2 } => FamilySpec::MixtureVi {
            theta1: *theta1,
            theta2: *theta2,
        },
        Family::Triangle { theta, mu } => FamilySpec::Triangle {
            theta: *theta,
            mu: *mu,
        },
        Family::Vine3 { beta, gamma } => FamilySpec::Vine3 {
            beta: *beta,
            gamma: *gamma,
        },
        Family::Independence => FamilySpec::Independence,
        Family::MaxOnly => FamilySpec::MaxOnly,
        Family::Custom { name, .. } => FamilySpec::Custom { name: name.clone() },
        Family::Additive { blocks, .. } => FamilySpec::Additive {
            blocks: blocks.iter().map(to_spec).collect(),
        },
        Family::LinearImage { inner, matrix, .. } => FamilySpec::LinearImage {
            inner: Box::new(to_spec(inner)),
            matrix: rows(matrix, d),
        },
        Family::CommonMix { inner, gamma } => FamilySpec::CommonMix {
            inner: Box::new(to_spec(inner)),
            gamma: *gamma,
        },
        Family::Marginal { inner, keep, .. } => FamilySpec::Marginal {
            inner: Box::new(to_spec(inner)),
            keep: keep.clone(),
        },
    };
    GaugeSpec { dim: d, family }
}

fn expect_dim(spec: &GaugeSpec, g: Gauge) -> Result<Gauge> {
    if g.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: g.dim(),
        });
    }
    Ok(g)
}

pub(crate) fn from_spec(spec: &GaugeSpec) -> Result<Gauge> {
    let d = spec.dim;
    let g = match &spec.family {
        FamilySpec::Gaussian { corr } => Gauge::gaussian(corr)?,
        FamilySpec::LogisticGp { theta } => Gauge::logistic_gp(*theta)?,
        FamilySpec::InvertedLogistic { theta } => Gauge::inverted_logistic(d, *theta)?,
        FamilySpec::InvertedHuslerReiss { lambda } => Gauge::inverted_husler_reiss(*lambda)?,
        FamilySpec::HuslerReissGp => Gauge::husler_reiss_gp(),
        FamilySpec::PerfectDependence => Gauge::perfect_dependence(d)?,
        FamilySpec::MixtureVi { theta1, theta2 } => Gauge::mixture_vi(*theta1, *theta2)?,
        FamilySpec::Triangle { theta, mu: None } => Gauge::triangle(*theta)?,
        FamilySpec::Triangle { theta, mu: Some(mu) } => Gauge::triangle_mu(*theta, *mu)?,
        FamilySpec::Vine3 { beta, gamma } => Gauge::vine3(*beta, *gamma)?,
        FamilySpec::Independence => Gauge::independence(d)?,
        FamilySpec::MaxOnly => Gauge::max_only(d)?,
        FamilySpec::Custom { name } => {
            return Err(Error::Unsupported(format!(
                "custom gauge {name:?} has no serialized form; register it in code"
            )))
        }
        FamilySpec::Additive { blocks } => {
            Gauge::additive(blocks.iter().map(from_spec).collect::<Result<_>>()?)?
        }
        FamilySpec::LinearImage { inner, matrix } => {
            Gauge::linear_image(&from_spec(inner)?, matrix)?
        }
        FamilySpec::CommonMix { inner, gamma } => Gauge::common_mix(&from_spec(inner)?, *gamma)?,
        FamilySpec::Marginal { inner, keep } => from_spec(inner)?.marginal(keep)?,
    };
    expect_dim(spec, g)
}
