//! Model selection flags and their translation into gauge and sampler
//! descriptors.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use limitset::gauge::FamilySpec;
use limitset::{GaugeSpec, ModelFamily, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    LogisticGp,
    InvertedLogistic,
    InvertedHuslerReiss,
    HuslerReissGp,
    MixtureVi,
    Triangle,
    Vine3,
    Independence,
    Max,
    PerfectDependence,
    CommonMix,
}

#[derive(Clone, Debug, Default, Args)]
pub struct ModelArgs {
    /// Catalog family.
    #[arg(long, value_enum, conflicts_with_all = ["gauge_json", "model_json"])]
    pub family: Option<FamilyArg>,
    /// Gauge descriptor: a JSON file path or inline JSON.
    #[arg(long)]
    pub gauge_json: Option<String>,
    /// Sampler descriptor: a JSON file path or inline JSON.
    #[arg(long, conflicts_with = "gauge_json")]
    pub model_json: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Correlation for a bivariate gaussian.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Upper-triangle correlations for a gaussian of any dimension,
    /// row by row, e.g. `0.75,0.25,0.4` for d = 3.
    #[arg(long, value_delimiter = ',')]
    pub corr: Option<Vec<f64>>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Second parameter of the two-component mixture gauge.
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Offset of the kinked triangle gauge.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Vine parameter, or the weight of the common component for `common-mix`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Husler-Reiss dependence parameter.
    #[arg(long)]
    pub lambda_hr: Option<f64>,
    /// Inner family for `common-mix`.
    #[arg(long, value_enum)]
    pub inner: Option<FamilyArg>,
    /// Sample from the density `exp(-g)` instead of the family's copula.
    #[arg(long)]
    pub density: bool,
}

fn read_json(arg: &str) -> Result<String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

fn need(v: Option<f64>, flag: &str, family: FamilyArg) -> Result<f64> {
    v.ok_or_else(|| anyhow!("--{flag} is required for {family:?}"))
}

impl ModelArgs {
    fn correlation(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim;
        let upper = match (&self.corr, self.rho) {
            (Some(c), _) => c.clone(),
            (None, Some(r)) if d == 2 => vec![r],
            _ => bail!("gaussian needs --rho (d = 2) or --corr"),
        };
        if upper.len() != d * (d - 1) / 2 {
            bail!("--corr needs {} values for d = {d}, got {}", d * (d - 1) / 2, upper.len());
        }
        let mut m = vec![vec![1.0; d]; d];
        let mut it = upper.iter();
        for i in 0..d {
            for j in (i + 1)..d {
                let v = *it.next().expect("length checked");
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        Ok(m)
    }

    fn family_spec(&self, family: FamilyArg) -> Result<GaugeSpec> {
        let d = self.dim;
        let fixed = |k: usize| -> Result<usize> {
            if d != k {
                bail!("{family:?} is {k}-dimensional, got --dim {d}");
            }
            Ok(k)
        };
        let spec = match family {
            FamilyArg::Gaussian => GaugeSpec::new(d, FamilySpec::Gaussian { corr: self.correlation()? }),
            FamilyArg::LogisticGp => GaugeSpec::new(
                fixed(2)?,
                FamilySpec::LogisticGp {
                    theta: need(self.theta, "theta", family)?,
                },
            ),
            FamilyArg::InvertedLogistic => GaugeSpec::new(
                d,
                FamilySpec::InvertedLogistic {
                    theta: need(self.theta, "theta", family)?,
                },
            ),
            FamilyArg::InvertedHuslerReiss => GaugeSpec::new(
                fixed(2)?,
                FamilySpec::InvertedHuslerReiss {
                    lambda: need(self.lambda_hr, "lambda-hr", family)?,
                },
            ),
            FamilyArg::HuslerReissGp => GaugeSpec::new(fixed(2)?, FamilySpec::HuslerReissGp),
            FamilyArg::MixtureVi => GaugeSpec::new(
                fixed(2)?,
                FamilySpec::MixtureVi {
                    theta1: need(self.theta, "theta", family)?,
                    theta2: need(self.theta2, "theta2", family)?,
                },
            ),
            FamilyArg::Triangle => GaugeSpec::new(
                fixed(2)?,
                FamilySpec::Triangle {
                    theta: need(self.theta, "theta", family)?,
                    mu: self.mu,
                },
            ),
            FamilyArg::Vine3 => GaugeSpec::new(
                fixed(3)?,
                FamilySpec::Vine3 {
                    beta: need(self.beta, "beta", family)?,
                    gamma: need(self.gamma, "gamma", family)?,
                },
            ),
            FamilyArg::Independence => GaugeSpec::new(d, FamilySpec::Independence),
            FamilyArg::Max => GaugeSpec::new(d, FamilySpec::MaxOnly),
            FamilyArg::PerfectDependence => GaugeSpec::new(d, FamilySpec::PerfectDependence),
            FamilyArg::CommonMix => {
                let inner = self.inner.ok_or_else(|| anyhow!("--inner is required for common-mix"))?;
                if inner == FamilyArg::CommonMix {
                    bail!("--inner cannot itself be common-mix");
                }
                GaugeSpec::new(
                    d,
                    FamilySpec::CommonMix {
                        inner: Box::new(self.family_spec(inner)?),
                        gamma: need(self.gamma, "gamma", family)?,
                    },
                )
            }
        };
        Ok(spec)
    }

    /// The gauge descriptor selected by the flags.
    pub fn gauge_spec(&self) -> Result<GaugeSpec> {
        if let Some(j) = &self.gauge_json {
            return Ok(GaugeSpec::from_json(&read_json(j)?)?);
        }
        if self.model_json.is_some() {
            return Ok(self.model_spec()?.gauge()?.spec());
        }
        let family = self
            .family
            .ok_or_else(|| anyhow!("one of --family, --gauge-json or --model-json is required"))?;
        self.family_spec(family)
    }

    fn family_model(&self, family: FamilyArg) -> Result<ModelSpec> {
        let d = self.dim;
        if self.density {
            return Ok(ModelSpec::new(
                d,
                ModelFamily::DensityFromGauge {
                    gauge: self.family_spec(family)?,
                },
            ));
        }
        let m = match family {
            FamilyArg::Gaussian => ModelSpec::new(d, ModelFamily::MetaGaussian { corr: self.correlation()? }),
            FamilyArg::LogisticGp => ModelSpec::new(
                2,
                ModelFamily::LogisticGp {
                    theta: need(self.theta, "theta", family)?,
                },
            ),
            FamilyArg::InvertedLogistic => ModelSpec::new(
                d,
                ModelFamily::InvertedLogistic {
                    theta: need(self.theta, "theta", family)?,
                },
            ),
            FamilyArg::InvertedHuslerReiss => ModelSpec::new(
                2,
                ModelFamily::InvertedHuslerReiss {
                    lambda: need(self.lambda_hr, "lambda-hr", family)?,
                },
            ),
            FamilyArg::HuslerReissGp => ModelSpec::new(
                2,
                ModelFamily::HuslerReissGp {
                    lambda: need(self.lambda_hr, "lambda-hr", family)?,
                },
            ),
            FamilyArg::Vine3 => ModelSpec::new(
                3,
                ModelFamily::Vine3 {
                    beta: need(self.beta, "beta", family)?,
                    gamma: need(self.gamma, "gamma", family)?,
                },
            ),
            FamilyArg::CommonMix => {
                let inner = self.inner.ok_or_else(|| anyhow!("--inner is required for common-mix"))?;
                if inner == FamilyArg::CommonMix {
                    bail!("--inner cannot itself be common-mix");
                }
                ModelSpec::new(
                    d,
                    ModelFamily::CommonMix {
                        inner: Box::new(self.family_model(inner)?),
                        gamma: need(self.gamma, "gamma", family)?,
                    },
                )
            }
            // no copula sampler: use the density defined by the gauge
            _ => ModelSpec::new(
                d,
                ModelFamily::DensityFromGauge {
                    gauge: self.family_spec(family)?,
                },
            ),
        };
        Ok(m)
    }

    /// The sampler descriptor selected by the flags. A bare gauge
    /// descriptor samples from its density.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        if let Some(j) = &self.model_json {
            let m: ModelSpec = serde_json::from_str(&read_json(j)?).context("parsing model descriptor")?;
            return Ok(m);
        }
        if let Some(j) = &self.gauge_json {
            let g = GaugeSpec::from_json(&read_json(j)?)?;
            return Ok(ModelSpec::new(g.dim, ModelFamily::DensityFromGauge { gauge: g }));
        }
        let family = self
            .family
            .ok_or_else(|| anyhow!("one of --family, --gauge-json or --model-json is required"))?;
        self.family_model(family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_from_upper_triangle() {
        let a = ModelArgs {
            dim: 3,
            corr: Some(vec![0.75, 0.25, 0.4]),
            ..Default::default()
        };
        let m = a.correlation().unwrap();
        assert_eq!(m[0][2], 0.25);
        assert_eq!(m[2][1], 0.4);
        assert_eq!(m[1][1], 1.0);
    }

    #[test]
    fn missing_parameter_is_reported() {
        let a = ModelArgs {
            dim: 2,
            family: Some(FamilyArg::LogisticGp),
            ..Default::default()
        };
        let e = a.gauge_spec().unwrap_err().to_string();
        assert!(e.contains("--theta"), "{e}");
    }
}
