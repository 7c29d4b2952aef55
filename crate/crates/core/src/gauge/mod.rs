//! Gauge functions: 1-homogeneous functions on the nonnegative orthant whose
//! unit sublevel set `{g <= 1}` is the limit set of a scaled sample cloud.
//!
//! A [`Gauge`] is an immutable, cheaply clonable evaluator. Catalog members
//! use closed-form expressions; composites (sums over blocks, linear images,
//! additive mixtures, marginals) evaluate their parts, possibly with an inner
//! numerical minimization.

pub(crate) mod catalog;
mod composite;
pub mod invariants;
mod spec;
pub mod volume;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spec::{FamilySpec, GaugeSpec};

/// A gauge value, which is `+inf` off the domain of extended-valued gauges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedValue {
    Finite(f64),
    Infinite,
}

impl ExtendedValue {
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            ExtendedValue::Finite(v)
        } else {
            ExtendedValue::Infinite
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::Infinite => None,
        }
    }

    /// The value as an `f64`, with `+inf` for [`ExtendedValue::Infinite`].
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::Infinite => write!(f, "inf"),
        }
    }
}

pub(crate) type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub(crate) enum Family {
    Gaussian {
        corr: Vec<f64>,
        precision: Vec<f64>,
    },
    LogisticGp {
        theta: f64,
    },
    InvertedLogistic {
        theta: f64,
    },
    InvertedHuslerReiss {
        lambda: f64,
    },
    HuslerReissGp,
    PerfectDependence,
    MixtureVi {
        theta1: f64,
        theta2: f64,
    },
    Triangle {
        theta: f64,
        mu: Option<f64>,
    },
    Vine3 {
        beta: f64,
        gamma: f64,
    },
    Independence,
    MaxOnly,
    Custom {
        name: String,
        f: CustomFn,
    },
    Additive {
        blocks: Vec<Gauge>,
        offsets: Vec<usize>,
    },
    LinearImage {
        inner: Gauge,
        matrix: Vec<f64>,
        inverse: Vec<f64>,
    },
    CommonMix {
        inner: Gauge,
        gamma: f64,
    },
    Marginal {
        inner: Gauge,
        keep: Vec<usize>,
        groups: Vec<Vec<usize>>,
    },
}

/// An immutable gauge function of fixed dimension.
#[derive(Clone)]
pub struct Gauge {
    dim: usize,
    family: Arc<Family>,
    volume: Arc<OnceLock<f64>>,
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gauge")
            .field("dim", &self.dim)
            .field("family", &self.family_name())
            .finish()
    }
}

impl Gauge {
    pub(crate) fn from_family(dim: usize, family: Family) -> Gauge {
        Gauge {
            dim,
            family: Arc::new(family),
            volume: Arc::new(OnceLock::new()),
        }
    }

    pub(crate) fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Short family name, as used in descriptors.
    pub fn family_name(&self) -> &str {
        match &*self.family {
            Family::Gaussian { .. } => "gaussian",
            Family::LogisticGp { .. } => "logistic_gp",
            Family::InvertedLogistic { .. } => "inverted_logistic",
            Family::InvertedHuslerReiss { .. } => "inverted_husler_reiss",
            Family::HuslerReissGp => "husler_reiss_gp",
            Family::PerfectDependence => "perfect_dependence",
            Family::MixtureVi { .. } => "mixture_vi",
            Family::Triangle { .. } => "triangle",
            Family::Vine3 { .. } => "vine3",
            Family::Independence => "independence",
            Family::MaxOnly => "max_only",
            Family::Custom { name, .. } => name,
            Family::Additive { .. } => "additive",
            Family::LinearImage { .. } => "linear_image",
            Family::CommonMix { .. } => "common_mix",
            Family::Marginal { .. } => "marginal",
        }
    }

    /// True for user-supplied gauges, which are not catalog-verified.
    pub fn is_unverified(&self) -> bool {
        match &*self.family {
            Family::Custom { .. } => true,
            Family::Additive { blocks, .. } => blocks.iter().any(Gauge::is_unverified),
            Family::LinearImage { inner, .. }
            | Family::CommonMix { inner, .. }
            | Family::Marginal { inner, .. } => inner.is_unverified(),
            _ => false,
        }
    }

    /// True if the gauge is `+inf` on part of the orthant.
    pub fn is_extended_valued(&self) -> bool {
        match &*self.family {
            Family::HuslerReissGp | Family::PerfectDependence => self.dim > 1,
            Family::Additive { blocks, .. } => blocks.iter().any(Gauge::is_extended_valued),
            Family::LinearImage { .. } => true,
            Family::CommonMix { inner, .. } => !inner.equality_groups().is_empty(),
            Family::Marginal { .. } => !self.equality_groups().is_empty(),
            _ => false,
        }
    }

    /// Evaluates `g(x)`, validating the dimension and the orthant.
    pub fn eval(&self, x: &[f64]) -> Result<ExtendedValue> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::OutsideOrthant(x.to_vec()));
        }
        Ok(ExtendedValue::from_f64(self.value(x)))
    }

    /// Evaluates `g(x)` without validation, returning `f64::INFINITY` off the
    /// domain. `x` must have length [`Gauge::dim`] and be nonnegative.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &*self.family {
            Family::Gaussian { corr, precision } => catalog::gaussian(corr, precision, x),
            Family::LogisticGp { theta } => catalog::logistic_gp(*theta, x),
            Family::InvertedLogistic { theta } => catalog::inverted_logistic(*theta, x),
            Family::InvertedHuslerReiss { lambda } => catalog::inverted_hr(*lambda, x),
            Family::HuslerReissGp | Family::PerfectDependence => catalog::diagonal(x),
            Family::MixtureVi { theta1, theta2 } => catalog::logistic_gp(*theta1, x)
                .min(catalog::inverted_logistic(*theta2, x)),
            Family::Triangle { theta, mu } => catalog::triangle(*theta, *mu, x),
            Family::Vine3 { beta, gamma } => catalog::vine3(*beta, *gamma, x),
            Family::Independence => x.iter().sum(),
            Family::MaxOnly => x.iter().cloned().fold(0.0, f64::max),
            Family::Custom { f, .. } => {
                let v = f(x);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
            Family::Additive { blocks, offsets } => blocks
                .iter()
                .zip(offsets)
                .map(|(b, &o)| b.value(&x[o..o + b.dim]))
                .sum(),
            Family::LinearImage { inner, inverse, .. } => {
                composite::linear_image_value(inner, inverse, x)
            }
            Family::CommonMix { inner, gamma } => composite::common_mix_value(inner, *gamma, x),
            Family::Marginal {
                inner,
                keep,
                groups,
            } => composite::marginal_value(inner, keep, groups, x),
        }
    }

    /// `g(x) - max(x)`, evaluated without cancellation for the families with
    /// closed forms, so that remainders far below rounding of `g` survive.
    pub fn excess(&self, x: &[f64]) -> f64 {
        match &*self.family {
            Family::Gaussian { corr, .. } if self.dim == 2 => catalog::gaussian_excess(corr[1], x),
            Family::LogisticGp { theta } => catalog::logistic_gp_excess(*theta, x),
            Family::InvertedLogistic { theta } => catalog::inverted_logistic_excess(*theta, x),
            Family::InvertedHuslerReiss { lambda } => catalog::inverted_hr_excess(*lambda, x),
            Family::Independence => {
                let m = x.iter().cloned().fold(0.0, f64::max);
                let i = x.iter().position(|&v| v == m).unwrap_or(0);
                x.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v).sum()
            }
            Family::MaxOnly => 0.0,
            Family::CommonMix { inner, gamma } => composite::common_mix_excess(inner, *gamma, x),
            _ => self.value(x) - x.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Groups of coordinates that must be equal for `g` to be finite.
    /// Only groups of two or more coordinates are listed.
    pub fn equality_groups(&self) -> Vec<Vec<usize>> {
        match &*self.family {
            Family::HuslerReissGp | Family::PerfectDependence if self.dim > 1 => {
                vec![(0..self.dim).collect()]
            }
            Family::Additive { blocks, offsets } => blocks
                .iter()
                .zip(offsets)
                .flat_map(|(b, &o)| {
                    b.equality_groups()
                        .into_iter()
                        .map(move |grp| grp.into_iter().map(|i| i + o).collect())
                })
                .collect(),
            Family::LinearImage { inner, inverse, .. } => {
                composite::linear_image_groups(inner, inverse, self.dim)
            }
            Family::CommonMix { inner, .. } => {
                if inner.equality_groups().is_empty() {
                    Vec::new()
                } else {
                    vec![(0..self.dim).collect()]
                }
            }
            Family::Marginal { inner, keep, .. } => {
                let mut out = Vec::new();
                for grp in inner.equality_groups() {
                    let kept: Vec<usize> = grp
                        .iter()
                        .filter_map(|i| keep.iter().position(|k| k == i))
                        .collect();
                    if kept.len() >= 2 {
                        out.push(kept);
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// The serializable descriptor of this gauge.
    pub fn spec(&self) -> GaugeSpec {
        spec::to_spec(self)
    }

    /// Builds a gauge from a descriptor.
    pub fn from_spec(spec: &GaugeSpec) -> Result<Gauge> {
        spec::from_spec(spec)
    }

    /// Lebesgue volume of `{g <= 1}`, computed once and cached.
    pub fn volume(&self) -> Result<f64> {
        if let Some(v) = self.volume.get() {
            return Ok(*v);
        }
        let v = volume::limit_set_volume(self)?;
        Ok(*self.volume.get_or_init(|| v))
    }

    /// Density `exp(-g(x)) / (d! |G|)` of the model whose density is defined
    /// by this gauge.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let vol = self.volume()?;
        let g = self.eval(x)?.to_f64();
        Ok((-g).exp() / (volume::factorial(self.dim) * vol))
    }
}

impl Gauge {
    /// Gaussian gauge `sqrt(x)' Sigma^{-1} sqrt(x)` for a correlation matrix
    /// with nonnegative entries, given as rows.
    pub fn gaussian(corr: &[Vec<f64>]) -> Result<Gauge> {
        catalog::build_gaussian(corr)
    }

    /// Bivariate Gaussian gauge with correlation `rho`.
    pub fn gaussian2(rho: f64) -> Result<Gauge> {
        catalog::build_gaussian(&[vec![1.0, rho], vec![rho, 1.0]])
    }

    /// `max(x, y)/theta + (1 - 1/theta) min(x, y)`, `theta` in (0, 1].
    pub fn logistic_gp(theta: f64) -> Result<Gauge> {
        catalog::check_unit_open_closed("theta", theta)?;
        Ok(Gauge::from_family(2, Family::LogisticGp { theta }))
    }

    /// `(sum x_i^{1/theta})^theta`, `theta` in (0, 1].
    pub fn inverted_logistic(dim: usize, theta: f64) -> Result<Gauge> {
        catalog::check_dim(dim, 1)?;
        catalog::check_unit_open_closed("theta", theta)?;
        Ok(Gauge::from_family(dim, Family::InvertedLogistic { theta }))
    }

    /// Inverted Husler–Reiss gauge with parameter `lambda > 0`.
    pub fn inverted_husler_reiss(lambda: f64) -> Result<Gauge> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(crate::error::param(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Gauge::from_family(2, Family::InvertedHuslerReiss { lambda }))
    }

    /// Husler–Reiss generalized Pareto gauge: `x` on the diagonal, `+inf` off it.
    pub fn husler_reiss_gp() -> Gauge {
        Gauge::from_family(2, Family::HuslerReissGp)
    }

    /// Gauge of a perfectly dependent vector: `x_1` when all coordinates agree,
    /// `+inf` otherwise.
    pub fn perfect_dependence(dim: usize) -> Result<Gauge> {
        catalog::check_dim(dim, 1)?;
        Ok(Gauge::from_family(dim, Family::PerfectDependence))
    }

    /// Pointwise minimum of a logistic GP gauge and an inverted logistic gauge.
    pub fn mixture_vi(theta1: f64, theta2: f64) -> Result<Gauge> {
        catalog::check_unit_open_closed("theta1", theta1)?;
        catalog::check_unit_open_closed("theta2", theta2)?;
        Ok(Gauge::from_family(2, Family::MixtureVi { theta1, theta2 }))
    }

    /// `max((x-y)/theta, (y-x)/theta, (x+y)/(2-theta))`, `theta` in (0, 1].
    pub fn triangle(theta: f64) -> Result<Gauge> {
        catalog::check_unit_open_closed("theta", theta)?;
        Ok(Gauge::from_family(2, Family::Triangle { theta, mu: None }))
    }

    /// `max((x-y)/theta, (y-x)/theta, min(x-mu y, y-mu x)/(1-theta-mu))`
    /// with `theta > 0`, `mu >= 0`, `theta + mu < 1`.
    pub fn triangle_mu(theta: f64, mu: f64) -> Result<Gauge> {
        if !(theta > 0.0 && mu >= 0.0 && theta + mu < 1.0) {
            return Err(crate::error::param(format!(
                "need theta > 0, mu >= 0, theta + mu < 1; got theta={theta}, mu={mu}"
            )));
        }
        Ok(Gauge::from_family(2, Family::Triangle { theta, mu: Some(mu) }))
    }

    /// Trivariate vine gauge: independence between coordinates 1 and 2,
    /// inverted Clayton (`beta`) between 2 and 3 and inverted Clayton
    /// (`gamma`) for the conditional pair.
    pub fn vine3(beta: f64, gamma: f64) -> Result<Gauge> {
        if !(beta > 0.0 && gamma > 0.0 && beta.is_finite() && gamma.is_finite()) {
            return Err(crate::error::param(format!(
                "vine parameters must be positive, got beta={beta}, gamma={gamma}"
            )));
        }
        Ok(Gauge::from_family(3, Family::Vine3 { beta, gamma }))
    }

    /// `sum x_i`.
    pub fn independence(dim: usize) -> Result<Gauge> {
        catalog::check_dim(dim, 1)?;
        Ok(Gauge::from_family(dim, Family::Independence))
    }

    /// `max x_i`.
    pub fn max_only(dim: usize) -> Result<Gauge> {
        catalog::check_dim(dim, 1)?;
        Ok(Gauge::from_family(dim, Family::MaxOnly))
    }

    /// A user-supplied gauge. Homogeneity, dominance and unit-face contact
    /// are checked before the gauge is accepted; it stays tagged unverified.
    pub fn custom<F>(name: &str, dim: usize, f: F) -> Result<Gauge>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        catalog::check_dim(dim, 1)?;
        let g = Gauge::from_family(
            dim,
            Family::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
        );
        let report = invariants::check(&g, &invariants::CheckOptions::quick())?;
        if let Some(failure) = report.first_failure() {
            return Err(Error::Invariant(format!("custom gauge {name:?}: {failure}")));
        }
        Ok(g)
    }

    /// Sum of gauges over consecutive disjoint coordinate blocks.
    pub fn additive(blocks: Vec<Gauge>) -> Result<Gauge> {
        composite::additive(blocks)
    }

    /// Gauge of the image `A Z` of a vector with gauge `inner`:
    /// `z -> inner(A^{-1} z)`, `+inf` outside `A` applied to the orthant.
    pub fn linear_image(inner: &Gauge, matrix: &[Vec<f64>]) -> Result<Gauge> {
        composite::linear_image(inner, matrix)
    }

    /// Gauge of `gamma S + V` with `S` perfectly dependent and `V` having
    /// gauge `inner`: `min over s in [0, min(x)/gamma] of s + inner(x - gamma s)`.
    pub fn common_mix(inner: &Gauge, gamma: f64) -> Result<Gauge> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(crate::error::param(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(Gauge::from_family(
            inner.dim,
            Family::CommonMix {
                inner: inner.clone(),
                gamma,
            },
        ))
    }

    /// Minimizing `s` of a mixture gauge at `x`; `None` for other families.
    pub fn mixing_argmin(&self, x: &[f64]) -> Option<f64> {
        match &*self.family {
            Family::CommonMix { inner, gamma } => Some(composite::common_mix_argmin(inner, *gamma, x)),
            _ => None,
        }
    }

    /// Marginal gauge on the coordinates `keep` (zero-based): the minimum of
    /// `g` over the dropped coordinates. Uses exact reductions where the
    /// family admits them.
    pub fn marginal(&self, keep: &[usize]) -> Result<Gauge> {
        composite::marginal(self, keep, true)
    }

    /// Marginal gauge computed by numerical minimization only.
    pub fn marginal_numeric(&self, keep: &[usize]) -> Result<Gauge> {
        composite::marginal(self, keep, false)
    }
}
