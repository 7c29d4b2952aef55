//! Gauges of sums of independent vectors.
//!
//! For `X = gamma S + V` with `S` perfectly dependent (`S = s * 1`) and `V`
//! independent of `S`, the joint gauge of `(S, V)` is the block sum
//! `g_S(s) + g_V(v)`; mapping `(s, v) -> (gamma s + v, s)` and minimizing out
//! `s` gives
//!
//! `g_X(x) = min over s in [0, min(x)/gamma] of s + g_V(x - gamma s)`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::gauge::{Gauge, GaugeSpec};
use crate::geometry::search::{minimize_box, SearchOptions};
use crate::geometry::Reduction;
use crate::measures::{self, BetaValue};

/// Dependence structure of the common component `S`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonDependence {
    #[default]
    Perfect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub inner: GaugeSpec,
    pub gamma: f64,
    #[serde(default)]
    pub common: CommonDependence,
}

impl MixtureSpec {
    pub fn new(inner: GaugeSpec, gamma: f64) -> MixtureSpec {
        MixtureSpec {
            inner,
            gamma,
            common: CommonDependence::Perfect,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(param(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Gauge> {
        mix_gauge(self)
    }
}

/// Gauge of `(Z_1, Z_2)` for independent blocks: `g_1(z_1) + g_2(z_2)`.
pub fn concat_gauge(first: &Gauge, second: &Gauge) -> Result<Gauge> {
    Gauge::additive(vec![first.clone(), second.clone()])
}

/// Gauge of `A Z`: `z -> g(A^{-1} z)`, infinite off `A` applied to the orthant.
pub fn linear_image_gauge(g: &Gauge, a: &[Vec<f64>]) -> Result<Gauge> {
    Gauge::linear_image(g, a)
}

/// The map `(s, v) -> (gamma s + v, s)` on `2d` coordinates.
pub fn mixing_matrix(d: usize, gamma: f64) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        a[i][i] = gamma;
        a[i][d + i] = 1.0;
        a[d + i][i] = 1.0;
    }
    a
}

pub fn mix_gauge(spec: &MixtureSpec) -> Result<Gauge> {
    spec.validate()?;
    Gauge::common_mix(&spec.inner.build()?, spec.gamma)
}

/// `g_X` obtained the long way: block sum, linear image, then the marginal
/// over the `S` block by numerical minimization.
pub fn mix_via_marginal(inner: &Gauge, gamma: f64) -> Result<Gauge> {
    let d = inner.dim();
    let joint = concat_gauge(&Gauge::perfect_dependence(d)?, inner)?;
    let image = linear_image_gauge(&joint, &mixing_matrix(d, gamma))?;
    image.marginal_numeric(&(0..d).collect::<Vec<_>>())
}

/// `eta` of the mixture given `eta` of `V`: `eta_V` while `gamma < eta_V`,
/// `gamma` after.
pub fn mixture_eta(eta_v: f64, gamma: f64) -> f64 {
    if gamma < eta_v {
        eta_v
    } else {
        gamma
    }
}

/// Comparison of the conditional-extremes exponents of `V` and `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixBetaReport {
    pub gamma: f64,
    pub alpha_v: f64,
    pub alpha_x: f64,
    pub beta_v: BetaValue,
    pub beta_x: BetaValue,
    pub betas_agree: bool,
    /// `g_V(., 1)` has matching one-sided derivatives at `alpha`.
    pub differentiable: bool,
    /// Right derivative of `x -> g_V(x, 1)` at `alpha`.
    pub right_derivative: f64,
    /// `1 - gamma (1 + (1 - alpha) g_V'(alpha+, 1))`; positive means the
    /// minimizing `s` is zero near the face point.
    pub derivative_condition: f64,
    /// `(u, (g_X(alpha+u, 1) - 1) / (g_V(alpha+u, 1) - 1))`.
    pub remainder_ratios: Vec<(f64, f64)>,
    /// Minimizing `s` vanished at every probe `(alpha+u, 1)`.
    pub zero_shift: bool,
}

impl MixBetaReport {
    /// Remainder ratio at the smallest probe.
    pub fn limiting_ratio(&self) -> Option<f64> {
        self.remainder_ratios.last().map(|r| r.1)
    }
}

const BETA_TOL: f64 = 5e-3;

/// Exponents for the face `(x, 1)` of a bivariate `g_V` and of its mixture.
pub fn mix_beta_check(spec: &MixtureSpec) -> Result<MixBetaReport> {
    spec.validate()?;
    let gv = spec.inner.build()?;
    if gv.dim() != 2 {
        return Err(param(format!("beta check needs a bivariate gauge, got dimension {}", gv.dim())));
    }
    let gx = Gauge::common_mix(&gv, spec.gamma)?;
    // the varying coordinate is the first one; the second is held at 1
    let bv = measures::cond_beta(&gv, 1, 0)?;
    let bx = measures::cond_beta(&gx, 1, 0)?;
    let alpha = bv.alpha;

    let h = 1e-6;
    let at = |x: f64| gv.value(&[x, 1.0]);
    let right = (at(alpha + h) - at(alpha)) / h;
    let left = if alpha - h >= 0.0 {
        Some((at(alpha) - at(alpha - h)) / h)
    } else {
        None
    };
    let differentiable = left.is_some_and(|l| (l - right).abs() <= 1e-3 * (1.0 + right.abs()));
    let derivative_condition = 1.0 - spec.gamma * (1.0 + (1.0 - alpha) * right);

    let mut remainder_ratios = Vec::new();
    let mut zero_shift = true;
    for k in 2..=6 {
        let u = 10f64.powi(-k);
        let p = [alpha + u, 1.0];
        let rv = gv.excess(&p);
        let rx = gx.excess(&p);
        if gx.mixing_argmin(&p).is_some_and(|s| s > 0.0) {
            zero_shift = false;
        }
        if rv > 1e-11 {
            remainder_ratios.push((u, rx / rv));
        }
    }

    let betas_agree = match (&bv.beta, &bx.beta) {
        (BetaValue::Value { beta: a }, BetaValue::Value { beta: b }) => (a - b).abs() <= BETA_TOL,
        _ => false,
    };
    Ok(MixBetaReport {
        gamma: spec.gamma,
        alpha_v: alpha,
        alpha_x: bx.alpha,
        beta_v: bv.beta,
        beta_x: bx.beta,
        betas_agree,
        differentiable,
        right_derivative: right,
        derivative_condition,
        remainder_ratios,
        zero_shift,
    })
}

/// Experimental: `min over s in [0, x/gamma] of g_S(s) + g_V(x - gamma s)`
/// for a general common-component gauge `g_S`, by grid-seeded multistart.
#[derive(Clone, Debug)]
pub struct GeneralMix {
    common: Gauge,
    inner: Gauge,
    gamma: f64,
    search: SearchOptions,
}

impl GeneralMix {
    pub fn new(common: &Gauge, inner: &Gauge, gamma: f64) -> Result<GeneralMix> {
        if common.dim() != inner.dim() {
            return Err(crate::Error::DimensionMismatch {
                expected: inner.dim(),
                got: common.dim(),
            });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(param(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(GeneralMix {
            common: common.clone(),
            inner: inner.clone(),
            gamma,
            search: SearchOptions::default(),
        })
    }

    pub fn with_search(mut self, search: SearchOptions) -> GeneralMix {
        self.search = search;
        self
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        if x.len() != d || x.iter().any(|v| !(*v >= 0.0)) {
            return f64::INFINITY;
        }
        let bounds: Vec<(f64, f64)> = x.iter().map(|v| (0.0, v / self.gamma)).collect();
        let fixed = vec![None; d];
        let Some(red) = Reduction::new(&fixed, &bounds, &self.common.equality_groups()) else {
            return f64::INFINITY;
        };
        let f = |p: &[f64]| {
            let s = red.expand(p);
            let v: Vec<f64> = x.iter().zip(&s).map(|(xi, si)| (xi - self.gamma * si).max(0.0)).collect();
            self.common.value(&s) + self.inner.value(&v)
        };
        minimize_box(&f, red.bounds(), &self.search).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn concat_of_independence_blocks() {
        let g = concat_gauge(&Gauge::independence(2).unwrap(), &Gauge::independence(3).unwrap()).unwrap();
        assert_eq!(g.dim(), 5);
        assert_relative_eq!(g.value(&[0.1, 0.2, 0.3, 0.4, 0.5]), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn concat_with_perfect_dependence_is_finite_on_the_diagonal_only() {
        let v = Gauge::inverted_logistic(2, 0.5).unwrap();
        let g = concat_gauge(&Gauge::perfect_dependence(2).unwrap(), &v).unwrap();
        assert!(g.value(&[0.3, 0.3, 0.2, 0.5]).is_finite());
        assert!(g.value(&[0.3, 0.31, 0.2, 0.5]).is_infinite());
        assert_relative_eq!(g.value(&[0.3, 0.3, 0.2, 0.5]), 0.3 + v.value(&[0.2, 0.5]), epsilon = 1e-14);
    }

    #[test]
    fn concat_marginal_recovers_block() {
        let a = Gauge::gaussian2(0.5).unwrap();
        let b = Gauge::inverted_logistic(2, 0.4).unwrap();
        let g = concat_gauge(&a, &b).unwrap();
        let back = g.marginal(&[2, 3]).unwrap();
        for p in [[0.2, 0.9], [1.0, 0.4], [0.5, 0.5]] {
            assert_relative_eq!(back.value(&p), b.value(&p), epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_and_permutation_images() {
        let g = Gauge::gaussian2(0.3).unwrap();
        let id = linear_image_gauge(&g, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let swap = linear_image_gauge(&g, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let tri = Gauge::triangle_mu(0.3, 0.2).unwrap();
        let swap_tri = linear_image_gauge(&tri, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for p in [[0.2, 0.9], [1.0, 0.4]] {
            assert_relative_eq!(id.value(&p), g.value(&p), epsilon = 1e-14);
            assert_relative_eq!(swap.value(&p), g.value(&[p[1], p[0]]), epsilon = 1e-14);
            assert_relative_eq!(swap_tri.value(&p), tri.value(&[p[1], p[0]]), epsilon = 1e-14);
        }
        assert!(linear_image_gauge(&g, &[vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
    }

    #[test]
    fn mixing_image_is_shifted_sum() {
        let v = Gauge::gaussian2(0.5).unwrap();
        let gamma = 0.4;
        let joint = concat_gauge(&Gauge::perfect_dependence(2).unwrap(), &v).unwrap();
        let image = linear_image_gauge(&joint, &mixing_matrix(2, gamma)).unwrap();
        let (x, s) = ([0.9, 0.6], 0.5);
        let expect = s + v.value(&[x[0] - gamma * s, x[1] - gamma * s]);
        assert_relative_eq!(image.value(&[x[0], x[1], s, s]), expect, epsilon = 1e-12);
        // outside x > gamma s
        assert!(image.value(&[0.1, 0.6, 0.5, 0.5]).is_infinite());
    }

    #[test]
    fn eta_follows_piecewise_rule() {
        let v = Gauge::inverted_logistic(2, 0.5).unwrap();
        for (gamma, expect) in [(0.5, 2f64.powf(-0.5)), (0.9, 0.9)] {
            let g = mix_gauge(&MixtureSpec::new(v.spec(), gamma)).unwrap();
            assert_relative_eq!(measures::eta(&g, &[0, 1]).unwrap(), expect, epsilon = 1e-6);
            assert_relative_eq!(mixture_eta(2f64.powf(-0.5), gamma), expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn alpha_preserved() {
        let v = Gauge::gaussian2(0.5).unwrap();
        let g = Gauge::common_mix(&v, 0.6).unwrap();
        assert_relative_eq!(measures::cond_alpha(&g, 0, 1).unwrap().alpha, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn vanishing_mixture_recovers_inner() {
        let v = Gauge::inverted_logistic(2, 0.6).unwrap();
        let g = Gauge::common_mix(&v, 1e-3).unwrap();
        for i in 0..=10 {
            let p = [i as f64 / 10.0, 1.0];
            assert_relative_eq!(g.value(&p), v.value(&p), epsilon = 1e-12);
        }
    }

    #[test]
    fn marginal_route_agrees() {
        let v = Gauge::inverted_logistic(2, 0.5).unwrap();
        for gamma in [0.3, 0.8] {
            let direct = Gauge::common_mix(&v, gamma).unwrap();
            let long = mix_via_marginal(&v, gamma).unwrap();
            for i in 0..=8 {
                let p = [i as f64 / 8.0, 1.0 - 0.5 * i as f64 / 8.0];
                assert_relative_eq!(long.value(&p), direct.value(&p), epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn beta_check_smooth_and_kinked() {
        let smooth = mix_beta_check(&MixtureSpec::new(Gauge::gaussian2(0.5).unwrap().spec(), 0.5)).unwrap();
        assert!(smooth.betas_agree, "{smooth:?}");
        assert!(smooth.differentiable && smooth.derivative_condition > 0.0 && smooth.zero_shift);
        assert_relative_eq!(smooth.limiting_ratio().unwrap(), 1.0, epsilon = 1e-6);

        let kinked = mix_beta_check(&MixtureSpec::new(Gauge::triangle_mu(0.3, 0.2).unwrap().spec(), 0.8)).unwrap();
        assert!(!kinked.differentiable);
        assert!(kinked.betas_agree, "{kinked:?}");
        assert_relative_eq!(kinked.beta_x.value().unwrap(), 0.0, epsilon = 5e-3);
    }

    #[test]
    fn general_mix_matches_perfect_case() {
        let v = Gauge::gaussian2(0.4).unwrap();
        let gen = GeneralMix::new(&Gauge::perfect_dependence(2).unwrap(), &v, 0.5).unwrap();
        let direct = Gauge::common_mix(&v, 0.5).unwrap();
        for p in [[0.7, 1.0], [1.0, 0.2], [0.5, 0.5]] {
            assert_relative_eq!(gen.value(&p), direct.value(&p), epsilon = 1e-8);
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec = MixtureSpec::new(Gauge::inverted_logistic(2, 0.5).unwrap().spec(), 0.3);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<MixtureSpec>(&json).unwrap(), spec);
        assert!(MixtureSpec::new(spec.inner.clone(), 1.0).validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mixture_between_max_and_inner(x in 0.0f64..2.0, y in 0.0f64..2.0, gamma in 0.05f64..0.95) {
            let v = Gauge::inverted_logistic(2, 0.5).unwrap();
            let g = Gauge::common_mix(&v, gamma).unwrap();
            let gx = g.value(&[x, y]);
            prop_assert!(gx <= v.value(&[x, y]) + 1e-12);
            prop_assert!(gx >= x.max(y) - 1e-12);
        }
    }
}
