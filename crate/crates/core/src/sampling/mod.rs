//! Sample clouds from the model catalog in standard exponential or Pareto
//! margins, and their scaling by `r_n = log n`.
//!
//! Rows are generated in fixed-size chunks, each from its own seed derived
//! from the run seed, so a cloud is bit-identical whatever the execution
//! policy.

mod io;
mod models;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::{derive_seed, Exec};
use crate::gauge::catalog::correlation_and_precision;
use crate::gauge::{Gauge, GaugeSpec};

pub use io::{read_cloud, sidecar_path, write_cloud, CloudMeta};
pub use models::{mix_survival, mix_to_exponential};
use models::Generator;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margins {
    #[default]
    Exponential,
    /// `exp` of the exponential margins: `P(X > x) = 1/x` for `x >= 1`.
    Pareto,
}

/// Copula families with a sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum ModelFamily {
    /// Correlation matrix as rows; negative entries allowed.
    MetaGaussian { corr: Vec<Vec<f64>> },
    LogisticGp { theta: f64 },
    InvertedLogistic { theta: f64 },
    InvertedHuslerReiss { lambda: f64 },
    /// Generalized Pareto with Gaussian generator `(0, lambda N)`.
    HuslerReissGp { lambda: f64 },
    Vine3 { beta: f64, gamma: f64 },
    /// Density proportional to `exp(-g(x))`.
    DensityFromGauge { gauge: GaugeSpec },
    /// `gamma S + V` with a perfectly dependent exponential `S`.
    CommonMix { inner: Box<ModelSpec>, gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub family: ModelFamily,
    #[serde(default)]
    pub margins: Margins,
}

impl ModelSpec {
    pub fn new(dim: usize, family: ModelFamily) -> ModelSpec {
        ModelSpec {
            dim,
            family,
            margins: Margins::Exponential,
        }
    }

    pub fn with_margins(mut self, margins: Margins) -> ModelSpec {
        self.margins = margins;
        self
    }

    pub fn meta_gaussian2(rho: f64) -> ModelSpec {
        ModelSpec::new(
            2,
            ModelFamily::MetaGaussian {
                corr: vec![vec![1.0, rho], vec![rho, 1.0]],
            },
        )
    }

    pub fn density(g: &Gauge) -> ModelSpec {
        ModelSpec::new(g.dim(), ModelFamily::DensityFromGauge { gauge: g.spec() })
    }

    /// Gauge of the model in exponential margins.
    pub fn gauge(&self) -> Result<Gauge> {
        let g = match &self.family {
            ModelFamily::MetaGaussian { corr } => {
                if corr.iter().flatten().any(|v| *v < 0.0) {
                    return Err(Error::Unsupported(
                        "negative correlation gives a discontinuous gauge outside the catalog".into(),
                    ));
                }
                Gauge::gaussian(corr)?
            }
            ModelFamily::LogisticGp { theta } => Gauge::logistic_gp(*theta)?,
            ModelFamily::InvertedLogistic { theta } => Gauge::inverted_logistic(self.dim, *theta)?,
            ModelFamily::InvertedHuslerReiss { lambda } => Gauge::inverted_husler_reiss(*lambda)?,
            ModelFamily::HuslerReissGp { .. } => Gauge::husler_reiss_gp(),
            ModelFamily::Vine3 { beta, gamma } => Gauge::vine3(*beta, *gamma)?,
            ModelFamily::DensityFromGauge { gauge } => gauge.build()?,
            ModelFamily::CommonMix { inner, gamma } => Gauge::common_mix(&inner.gauge()?, *gamma)?,
        };
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: g.dim(),
            });
        }
        Ok(g)
    }

    fn generator(&self) -> Result<Generator> {
        let d = self.dim;
        let need_dim = |k: usize| -> Result<()> {
            if d != k {
                return Err(Error::Unsupported(format!(
                    "{} sampler is {k}-dimensional, got dimension {d}",
                    self.family_name()
                )));
            }
            Ok(())
        };
        let in_unit = |name: &str, v: f64, closed: bool| -> Result<()> {
            if !(v > 0.0 && (v < 1.0 || closed && v == 1.0)) {
                return Err(param(format!("{name} out of range: {v}")));
            }
            Ok(())
        };
        let gen = match &self.family {
            ModelFamily::MetaGaussian { corr } => {
                if corr.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: corr.len(),
                    });
                }
                let (flat, _) = correlation_and_precision(corr, true)?;
                let m = nalgebra::DMatrix::from_row_slice(d, d, &flat);
                let l = m
                    .cholesky()
                    .ok_or_else(|| param("correlation matrix is not positive definite"))?
                    .l();
                Generator::MetaGaussian {
                    chol: (0..d * d).map(|k| l[(k / d, k % d)]).collect(),
                    dim: d,
                }
            }
            ModelFamily::LogisticGp { theta } => {
                need_dim(2)?;
                in_unit("theta", *theta, false)?;
                Generator::LogisticGp { theta: *theta }
            }
            ModelFamily::InvertedLogistic { theta } => {
                if d < 2 {
                    return Err(param("inverted logistic needs dimension at least 2"));
                }
                in_unit("theta", *theta, true)?;
                Generator::InvertedLogistic { theta: *theta, dim: d }
            }
            ModelFamily::InvertedHuslerReiss { lambda } => {
                need_dim(2)?;
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(param(format!("lambda must be positive, got {lambda}")));
                }
                Generator::InvertedHuslerReiss { lambda: *lambda }
            }
            ModelFamily::HuslerReissGp { lambda } => {
                need_dim(2)?;
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(param(format!("lambda must be positive, got {lambda}")));
                }
                Generator::HuslerReissGp { lambda: *lambda }
            }
            ModelFamily::Vine3 { beta, gamma } => {
                need_dim(3)?;
                if !(*beta > 0.0 && *gamma > 0.0) {
                    return Err(param("vine parameters must be positive"));
                }
                Generator::Vine3 {
                    beta: *beta,
                    gamma: *gamma,
                }
            }
            ModelFamily::DensityFromGauge { gauge } => {
                let g = gauge.build()?;
                if g.is_extended_valued() {
                    return Err(Error::Unsupported(format!(
                        "{} is extended-valued and has no density",
                        g.family_name()
                    )));
                }
                if g.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: g.dim(),
                    });
                }
                Generator::Density { gauge: g }
            }
            ModelFamily::CommonMix { inner, gamma } => {
                in_unit("gamma", *gamma, false)?;
                let g = inner.generator()?;
                if g.needs_ranks() {
                    return Err(Error::Unsupported(format!(
                        "{} has no closed-form margins to mix",
                        inner.family_name()
                    )));
                }
                need_dim(inner.dim)?;
                Generator::CommonMix {
                    inner: Box::new(g),
                    gamma: *gamma,
                    dim: d,
                }
            }
        };
        Ok(gen)
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            ModelFamily::MetaGaussian { .. } => "meta_gaussian",
            ModelFamily::LogisticGp { .. } => "logistic_gp",
            ModelFamily::InvertedLogistic { .. } => "inverted_logistic",
            ModelFamily::InvertedHuslerReiss { .. } => "inverted_husler_reiss",
            ModelFamily::HuslerReissGp { .. } => "husler_reiss_gp",
            ModelFamily::Vine3 { .. } => "vine3",
            ModelFamily::DensityFromGauge { .. } => "density_from_gauge",
            ModelFamily::CommonMix { .. } => "common_mix",
        }
    }
}

/// `n` i.i.d. points, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    pub model: ModelSpec,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub margins: Margins,
    pub points: Vec<f64>,
    /// Accepted over proposed, for rejection samplers.
    pub acceptance_rate: Option<f64>,
}

/// A cloud divided by `r_n` in exponential margins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledCloud {
    pub dim: usize,
    pub points: Vec<f64>,
    pub r_n: f64,
    /// Pareto margins were log-transformed before scaling.
    pub log_transformed: bool,
}

impl ScaledCloud {
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }
}

impl SampleCloud {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// `log n`.
    pub fn r_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// The same cloud in the requested margins.
    pub fn in_margins(&self, margins: Margins) -> SampleCloud {
        let mut out = self.clone();
        if margins != self.margins {
            out.points = match margins {
                Margins::Pareto => self.points.iter().map(|v| v.exp()).collect(),
                Margins::Exponential => self.points.iter().map(|v| v.ln()).collect(),
            };
            out.margins = margins;
            out.model.margins = margins;
        }
        out
    }

    pub fn select(&self, rows: &[usize]) -> SampleCloud {
        let mut points = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            points.extend_from_slice(self.row(i));
        }
        SampleCloud {
            n: rows.len(),
            points,
            ..self.clone()
        }
    }

    pub fn from_points(model: ModelSpec, dim: usize, points: Vec<f64>, seed: u64) -> Result<SampleCloud> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(param("point buffer length is not a multiple of the dimension"));
        }
        let margins = model.margins;
        Ok(SampleCloud {
            n: points.len() / dim,
            model,
            dim,
            seed,
            margins,
            points,
            acceptance_rate: None,
        })
    }
}

/// Divides every point by `log n`, after taking logs of Pareto margins.
pub fn scale_cloud(cloud: &SampleCloud) -> Result<ScaledCloud> {
    if cloud.n < 2 {
        return Err(Error::UndefinedScaling(cloud.n));
    }
    let r_n = cloud.r_n();
    let log_transformed = cloud.margins == Margins::Pareto;
    let points = cloud
        .points
        .iter()
        .map(|&v| if log_transformed { v.ln() } else { v } / r_n)
        .collect();
    Ok(ScaledCloud {
        dim: cloud.dim,
        points,
        r_n,
        log_transformed,
    })
}

const CHUNK: usize = 8192;
const PILOT: u64 = 200_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// Replaces each column by the standard exponential quantiles of its ranks.
fn rank_to_exponential(points: &mut [f64], dim: usize) {
    let n = points.len() / dim;
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..dim {
        order.sort_by(|&a, &b| points[a * dim + j].total_cmp(&points[b * dim + j]).then(a.cmp(&b)));
        let mut col = vec![0.0; n];
        for (r, &i) in order.iter().enumerate() {
            col[i] = -(-((r + 1) as f64) / (n + 1) as f64).ln_1p();
        }
        for (i, v) in col.into_iter().enumerate() {
            points[i * dim + j] = v;
        }
    }
}

/// Draws `n` points; identical `(model, n, seed)` give identical clouds.
pub fn sample(model: &ModelSpec, n: usize, seed: u64, exec: Exec) -> Result<SampleCloud> {
    if n == 0 {
        return Err(param("sample size must be positive"));
    }
    let gen = model.generator()?;
    let d = gen.dim();
    if d != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: d,
        });
    }
    if let Generator::Density { gauge } = &gen {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
        let mut row = vec![0.0; d];
        let accepted = (0..PILOT).filter(|_| models::density_trial(gauge, &mut rng, &mut row)).count();
        let rate = accepted as f64 / PILOT as f64;
        if rate < MIN_ACCEPTANCE {
            return Err(Error::Unsupported(format!(
                "rejection acceptance rate {rate:.2e} is below {MIN_ACCEPTANCE:e}; \
                 the gauge puts little mass near the proposal, sample a lower-dimensional \
                 margin or use a dedicated sampler"
            )));
        }
    }
    let chunks = n.div_ceil(CHUNK);
    let parts = exec.map_range(chunks, |c| {
        let rows = CHUNK.min(n - c * CHUNK);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
        let mut buf = vec![0.0; rows * d];
        let mut proposals = 0u64;
        for row in buf.chunks_mut(d) {
            proposals += gen.draw(&mut rng, row);
        }
        (buf, proposals)
    });
    let mut points = Vec::with_capacity(n * d);
    let mut proposals = 0u64;
    for (buf, p) in parts {
        points.extend_from_slice(&buf);
        proposals += p;
    }
    if gen.needs_ranks() {
        rank_to_exponential(&mut points, d);
    }
    let acceptance_rate = matches!(gen, Generator::Density { .. }).then(|| n as f64 / proposals as f64);
    let cloud = SampleCloud {
        model: model.clone().with_margins(Margins::Exponential),
        dim: d,
        n,
        seed,
        margins: Margins::Exponential,
        points,
        acceptance_rate,
    };
    Ok(cloud.in_margins(model.margins))
}

/// Rejection sampler for the density `exp(-g(x)) / (d! |G|)`.
pub fn density_from_gauge_sampler(g: &Gauge, n: usize, seed: u64) -> Result<SampleCloud> {
    sample(&ModelSpec::density(g), n, seed, Exec::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, ks_two_sample};
    use approx::assert_relative_eq;

    fn exp_cdf(x: f64) -> f64 {
        -(-x).exp_m1()
    }

    #[test]
    fn reproducible_across_execution_policies() {
        let m = ModelSpec::new(3, ModelFamily::InvertedLogistic { theta: 0.4 });
        let a = sample(&m, 20_000, 9, Exec::Sequential).unwrap();
        let b = sample(&m, 20_000, 9, Exec::Parallel).unwrap();
        assert_eq!(a.points, b.points);
        let c = sample(&m, 20_000, 10, Exec::Parallel).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn margins_are_standard_exponential() {
        let models = [
            ModelSpec::meta_gaussian2(0.5),
            ModelSpec::meta_gaussian2(-0.4),
            ModelSpec::new(2, ModelFamily::InvertedLogistic { theta: 0.5 }),
            ModelSpec::new(2, ModelFamily::InvertedHuslerReiss { lambda: 1.0 }),
            ModelSpec::new(3, ModelFamily::Vine3 { beta: 1.0, gamma: 0.5 }),
            ModelSpec::new(
                2,
                ModelFamily::CommonMix {
                    inner: Box::new(ModelSpec::new(2, ModelFamily::InvertedLogistic { theta: 0.5 })),
                    gamma: 0.5,
                },
            ),
        ];
        for (k, m) in models.iter().enumerate() {
            let cloud = sample(m, 100_000, 100 + k as u64, Exec::Parallel).unwrap();
            for j in 0..m.dim {
                let ks = ks_one_sample(&cloud.column(j), exp_cdf);
                assert!(ks.p_value > 0.01, "{} column {j}: {ks:?}", m.family_name());
            }
        }
    }

    #[test]
    fn density_of_independence_is_product_of_exponentials() {
        let g = Gauge::independence(2).unwrap();
        let cloud = density_from_gauge_sampler(&g, 10_000, 4).unwrap();
        assert!(ks_one_sample(&cloud.column(0), exp_cdf).p_value > 0.01);
        // against a direct product sampler
        let direct = sample(&ModelSpec::meta_gaussian2(0.0), 10_000, 5, Exec::Parallel).unwrap();
        assert!(ks_two_sample(&cloud.column(1), &direct.column(1)).p_value > 0.01);
        assert_relative_eq!(cloud.acceptance_rate.unwrap(), 0.25, epsilon = 0.02);
    }

    #[test]
    fn pareto_margins_and_scaling() {
        let m = ModelSpec::meta_gaussian2(0.3).with_margins(Margins::Pareto);
        let n = 22_026; // e^10
        let cloud = sample(&m, n, 1, Exec::Parallel).unwrap();
        assert!(cloud.points.iter().all(|&v| v >= 1.0));
        let scaled = scale_cloud(&cloud).unwrap();
        assert!(scaled.log_transformed);
        assert_relative_eq!(scaled.r_n, 10.0, epsilon = 1e-4);
        assert_relative_eq!(scaled.points[0], cloud.points[0].ln() / scaled.r_n, epsilon = 1e-15);
        let one = sample(&m, 1, 1, Exec::Parallel).unwrap();
        assert!(matches!(scale_cloud(&one), Err(Error::UndefinedScaling(1))));
    }

    #[test]
    fn max_only_density_is_asymptotically_independent() {
        let cloud = density_from_gauge_sampler(&Gauge::max_only(2).unwrap(), 200_000, 6).unwrap();
        let cond = |t: f64| {
            let above_y = cloud.rows().filter(|r| r[1] > t).count() as f64;
            let both = cloud.rows().filter(|r| r[0] > t && r[1] > t).count() as f64;
            both / above_y
        };
        // P(X > t | Y > t) falls towards zero
        let (low, high) = (cond(2.0), cond(7.0));
        assert!(high < low && high < 0.35, "{low} {high}");
    }

    #[test]
    fn unsupported_combinations() {
        let m = ModelSpec::new(3, ModelFamily::LogisticGp { theta: 0.5 });
        assert!(matches!(sample(&m, 10, 0, Exec::Sequential), Err(Error::Unsupported(_))));
        let ext = ModelSpec::density(&Gauge::husler_reiss_gp());
        assert!(sample(&ext, 10, 0, Exec::Sequential).is_err());
    }

    /// `-log` of the vine density in exponential margins, from the pair
    /// copulas: the sampler's construction written out as a density.
    fn vine_neg_log_density(beta: f64, gamma: f64, x: [f64; 3]) -> f64 {
        // Clayton in p = exp(-x): log c(p, q) and log h(q | p)
        let log_c = |b: f64, lp: f64, lq: f64| {
            let s = ((-b * lp).exp() + (-b * lq).exp() - 1.0).ln();
            (1.0 + b).ln() - (b + 1.0) * (lp + lq) - (1.0 / b + 2.0) * s
        };
        let log_h = |b: f64, lp: f64, lq: f64| {
            let s = ((-b * lp).exp() + (-b * lq).exp() - 1.0).ln();
            -(b + 1.0) * lp - (1.0 / b + 1.0) * s
        };
        let (l1, l2, l3) = (-x[0], -x[1], -x[2]);
        let lq = log_h(beta, l2, l3);
        -(log_c(beta, l2, l3) + log_c(gamma, l1, lq) + l1 + l2 + l3)
    }

    #[test]
    fn vine_construction_matches_gauge() {
        let (beta, gamma) = (1.0, 0.5);
        let g = Gauge::vine3(beta, gamma).unwrap();
        let t = 400.0;
        for x in [[0.3, 0.5, 0.8], [0.7, 0.2, 0.4], [0.1, 0.9, 0.3], [0.5, 0.5, 1.0]] {
            let tx = [t * x[0], t * x[1], t * x[2]];
            let approx = vine_neg_log_density(beta, gamma, tx) / t;
            assert!((approx - g.value(&x)).abs() < 0.02, "{x:?}: {approx} vs {}", g.value(&x));
        }
    }

    #[test]
    fn model_json_round_trip() {
        let m = ModelSpec::new(
            2,
            ModelFamily::CommonMix {
                inner: Box::new(ModelSpec::meta_gaussian2(0.5)),
                gamma: 0.3,
            },
        )
        .with_margins(Margins::Pareto);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), m);
        assert_eq!(m.gauge().unwrap().family_name(), "common_mix");
    }
}
