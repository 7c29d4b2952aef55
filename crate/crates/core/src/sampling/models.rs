//! Row generators for each model, in standard exponential margins.

use rand::distr::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::gauge::Gauge;
use crate::stats::normal_to_exponential;

/// A model with its parameters preprocessed for fast row generation.
#[derive(Clone, Debug)]
pub(crate) enum Generator {
    /// Lower Cholesky factor, row-major.
    MetaGaussian { chol: Vec<f64>, dim: usize },
    InvertedLogistic { theta: f64, dim: usize },
    InvertedHuslerReiss { lambda: f64 },
    LogisticGp { theta: f64 },
    HuslerReissGp { lambda: f64 },
    Vine3 { beta: f64, gamma: f64 },
    /// Rejection from independent exponentials with rate `1/d`.
    Density { gauge: Gauge },
    CommonMix { inner: Box<Generator>, gamma: f64, dim: usize },
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Open01)
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Exp1)
}

/// `-log(1 - exp(-1/z))` for unit Frechet `z`, given `y = 1/z`: the upper
/// tail of the inverted copula in exponential margins.
fn inverted_frechet(y: f64) -> f64 {
    -(-(-y).exp_m1()).ln()
}

/// Positive stable variable with Laplace transform `exp(-t^a)`, `0 < a <= 1`.
fn positive_stable(rng: &mut ChaCha8Rng, a: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    let u = std::f64::consts::PI * uniform(rng);
    let w = exp1(rng);
    let left = ((a * u).sin() / u.sin().powf(1.0 / a)).max(0.0);
    left * (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a)
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `-log v` where `v` solves `h(v | u) = w` for the Clayton copula with
/// parameter `b`, from `log u` and `log w`.
fn clayton_conditional_exp(b: f64, log_u: f64, log_w: f64) -> f64 {
    let a = (-(b / (1.0 + b)) * log_w).exp_m1().ln();
    softplus(a - b * log_u) / b
}

impl Generator {
    pub(crate) fn dim(&self) -> usize {
        match self {
            Generator::MetaGaussian { dim, .. } => *dim,
            Generator::InvertedLogistic { dim, .. } => *dim,
            Generator::InvertedHuslerReiss { .. } => 2,
            Generator::LogisticGp { .. } => 2,
            Generator::HuslerReissGp { .. } => 2,
            Generator::Vine3 { .. } => 3,
            Generator::Density { gauge } => gauge.dim(),
            Generator::CommonMix { dim, .. } => *dim,
        }
    }

    /// Whether the margins come out standard exponential only after a rank
    /// transform of the whole sample.
    pub(crate) fn needs_ranks(&self) -> bool {
        matches!(
            self,
            Generator::LogisticGp { .. } | Generator::HuslerReissGp { .. } | Generator::Density { .. }
        )
    }

    /// Fills `row`; returns the number of proposals used (1 except for
    /// rejection sampling).
    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, row: &mut [f64]) -> u64 {
        match self {
            Generator::MetaGaussian { chol, dim } => {
                let z: Vec<f64> = (0..*dim).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..*dim {
                    let v: f64 = (0..=i).map(|j| chol[i * dim + j] * z[j]).sum();
                    row[i] = normal_to_exponential(v);
                }
                1
            }
            Generator::InvertedLogistic { theta, dim } => {
                let s = positive_stable(rng, *theta);
                for v in row.iter_mut().take(*dim) {
                    let w = exp1(rng);
                    *v = inverted_frechet((w / s).powf(*theta));
                }
                1
            }
            Generator::InvertedHuslerReiss { lambda } => {
                let z = husler_reiss_frechet(rng, *lambda);
                row[0] = inverted_frechet(1.0 / z[0]);
                row[1] = inverted_frechet(1.0 / z[1]);
                1
            }
            Generator::LogisticGp { theta } => {
                // X = E + T - max(T): one coordinate at E, the other E - V
                // with exp(V / theta) = 2 U^(-1/(1-theta)) - 1
                let e = exp1(rng);
                let u = uniform(rng);
                let w = 2.0 * u.powf(-1.0 / (1.0 - theta)) - 1.0;
                let v = theta * w.ln();
                if rng.random_bool(0.5) {
                    row[0] = e;
                    row[1] = e - v;
                } else {
                    row[0] = e - v;
                    row[1] = e;
                }
                1
            }
            Generator::HuslerReissGp { lambda } => {
                let e = exp1(rng);
                let t: f64 = lambda * rng.sample::<f64, _>(StandardNormal);
                let m = t.max(0.0);
                row[0] = e - m;
                row[1] = e + t - m;
                1
            }
            Generator::Vine3 { beta, gamma } => {
                // work with p = 1 - u, for which the inverted Clayton pairs
                // are Clayton; x = -log p
                let x1 = exp1(rng);
                let x2 = exp1(rng);
                let w = uniform(rng);
                // (p1, q) Clayton(gamma) with q = h_beta(p3 | p2)
                let log_q = -clayton_conditional_exp(*gamma, -x1, w.ln());
                let x3 = clayton_conditional_exp(*beta, -x2, log_q);
                row[0] = x1;
                row[1] = x2;
                row[2] = x3;
                1
            }
            Generator::Density { gauge } => {
                let mut tries = 1;
                while !density_trial(gauge, rng, row) {
                    tries += 1;
                }
                tries
            }
            Generator::CommonMix { inner, gamma, dim } => {
                let tries = inner.draw(rng, row);
                let s = exp1(rng);
                for v in row.iter_mut().take(*dim) {
                    *v = mix_to_exponential(gamma * s + *v, *gamma);
                }
                tries
            }
        }
    }
}

/// One proposal from independent exponentials with rate `1/d`, accepted
/// with probability `exp(-g(x) + sum(x)/d)`.
pub(crate) fn density_trial(gauge: &Gauge, rng: &mut ChaCha8Rng, row: &mut [f64]) -> bool {
    let d = gauge.dim();
    let rate = 1.0 / d as f64;
    let mut sum = 0.0;
    for v in row.iter_mut().take(d) {
        *v = exp1(rng) / rate;
        sum += *v;
    }
    // g >= max >= mean, so the ratio is at most one
    let log_ratio = -gauge.value(row) + sum * rate;
    uniform(rng).ln() < log_ratio
}

/// Unit Frechet pair with the bivariate Husler-Reiss extreme-value
/// distribution, by exact simulation through extremal functions.
fn husler_reiss_frechet(rng: &mut ChaCha8Rng, lambda: f64) -> [f64; 2] {
    let mut z = [0.0f64; 2];
    for j in 0..2 {
        let mut gamma = exp1(rng);
        loop {
            let zeta = 1.0 / gamma;
            if zeta <= z[j] {
                break;
            }
            let n: f64 = rng.sample(StandardNormal);
            let other = (lambda * n - 0.5 * lambda * lambda).exp();
            let y = if j == 0 { [1.0, other] } else { [other, 1.0] };
            // for j = 1 the point must not beat the record at coordinate 0
            if j == 0 || zeta * y[0] < z[0] {
                z[0] = z[0].max(zeta * y[0]);
                z[1] = z[1].max(zeta * y[1]);
            }
            gamma += exp1(rng);
        }
    }
    z
}

/// Survival function of `gamma S + V` for independent standard exponentials.
pub fn mix_survival(x: f64, gamma: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (-x).exp() * (-gamma * (-x * (1.0 - gamma) / gamma).exp()).ln_1p().exp() / (1.0 - gamma)
}

/// `-log` of [`mix_survival`], computed without underflow.
pub fn mix_to_exponential(x: f64, gamma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x - (-gamma * (-x * (1.0 - gamma) / gamma).exp()).ln_1p() + (1.0 - gamma).ln()
}
