//! Empirical counterparts of `eta`, `tau_C(delta)` and `lambda(omega)`.
//!
//! All estimators work with exponential-scale values: a Pareto cloud is
//! log-transformed first, which turns the log-ratios of the Hill estimator
//! into differences. Standard errors come from a nonparametric bootstrap of
//! whole observations, one derived seed per replicate.

mod hausdorff;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::{derive_seed, Exec};
use crate::sampling::{Margins, SampleCloud};
use crate::stats::{fit_line, std_dev};

pub use hausdorff::{hausdorff, hausdorff_detail, HausdorffOptions, HausdorffResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Upper order statistics for Hill; `None` uses `floor(m^0.6)` for an
    /// effective sample of size `m`.
    pub k: Option<usize>,
    pub bootstrap: usize,
    pub seed: u64,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            k: None,
            bootstrap: 200,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bootstrap(mut self, b: usize) -> Self {
        self.bootstrap = b;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    fn k_for(&self, m: usize) -> usize {
        self.k.unwrap_or_else(|| default_k(m))
    }
}

/// `floor(m^0.6)`, at least 1.
pub fn default_k(m: usize) -> usize {
    ((m as f64).powf(0.6).floor() as usize).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Eta,
    Tau,
    TauFixedThreshold,
    Lambda,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateIndex {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub quantity: Quantity,
    pub index: EstimateIndex,
    pub value: f64,
    /// Bootstrap standard error; `None` without replicates.
    pub se: Option<f64>,
    pub k: Option<usize>,
    pub n_eff: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Estimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }
}

fn exponential_rows(cloud: &SampleCloud) -> SampleCloud {
    cloud.in_margins(Margins::Exponential)
}

fn check_subset(dim: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let mut c = subset.to_vec();
    c.sort_unstable();
    c.dedup();
    if c.is_empty() || c.iter().any(|&i| i >= dim) {
        return Err(param(format!("subset {subset:?} invalid for dimension {dim}")));
    }
    Ok(c)
}

/// Hill estimate from exponential-scale values: the mean excess of the top
/// `k` over the `(k+1)`-th largest. Reorders `values`.
pub fn hill_exponential(values: &mut [f64], k: usize) -> Result<(f64, bool)> {
    let m = values.len();
    if k == 0 || k >= m {
        return Err(param(format!("k = {k} needs 1 <= k < {m}")));
    }
    values.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = values[k];
    let top = &values[..k];
    let tie = top.contains(&threshold);
    let mean = top.iter().map(|v| v - threshold).sum::<f64>() / k as f64;
    Ok((mean, tie))
}

/// Per-row `(min over C, max over the rest)` in exponential scale; the rest
/// maximum is `-inf` when `C` is everything.
fn structure(cloud: &SampleCloud, c: &[usize]) -> Vec<(f64, f64)> {
    let rest: Vec<usize> = (0..cloud.dim).filter(|j| !c.contains(j)).collect();
    cloud
        .rows()
        .map(|r| {
            let t = c.iter().map(|&j| r[j]).fold(f64::INFINITY, f64::min);
            let m = rest.iter().map(|&j| r[j]).fold(f64::NEG_INFINITY, f64::max);
            (t, m)
        })
        .collect()
}

fn bootstrap<F>(n: usize, cfg: &EstimatorConfig, stat: F) -> (Option<f64>, Vec<String>)
where
    F: Fn(&[usize]) -> Option<f64> + Sync + Send,
{
    if cfg.bootstrap < 2 {
        return (None, Vec::new());
    }
    let reps: Vec<Option<f64>> = cfg.exec.map_range(cfg.bootstrap, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, b as u64));
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        stat(&idx)
    });
    let ok: Vec<f64> = reps.iter().flatten().cloned().collect();
    let mut warnings = Vec::new();
    if ok.len() < reps.len() {
        warnings.push(format!("{} of {} bootstrap replicates failed", reps.len() - ok.len(), reps.len()));
    }
    if ok.len() * 10 < reps.len() * 9 {
        return (None, warnings);
    }
    (Some(std_dev(&ok)), warnings)
}

/// Hill estimate of `eta_C` from the structure variable `min over C`.
pub fn hill_eta(cloud: &SampleCloud, subset: &[usize], cfg: &EstimatorConfig) -> Result<Estimate> {
    let c = check_subset(cloud.dim, subset)?;
    if c.len() < 2 {
        return Err(param("eta needs at least two coordinates"));
    }
    let exp = exponential_rows(cloud);
    let s: Vec<f64> = structure(&exp, &c).into_iter().map(|(t, _)| t).collect();
    let n = s.len();
    let k = cfg.k_for(n);
    let (value, tie) = hill_exponential(&mut s.clone(), k)?;
    let mut warnings = Vec::new();
    if tie {
        warnings.push("ties at the Hill threshold".into());
    }
    let (se, w) = bootstrap(n, cfg, |idx| {
        let mut v: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
        hill_exponential(&mut v, k).ok().map(|r| r.0)
    });
    warnings.extend(w);
    Ok(Estimate {
        quantity: Quantity::Eta,
        index: EstimateIndex {
            subset: Some(c),
            ..Default::default()
        },
        value,
        se,
        k: Some(k),
        n_eff: n,
        seed: cfg.seed,
        warnings,
    })
}

/// Hill estimates of `eta_C` for `k` in `{n^0.5, n^0.6, n^0.7}`.
pub fn hill_sensitivity(cloud: &SampleCloud, subset: &[usize], cfg: &EstimatorConfig) -> Result<Vec<Estimate>> {
    [0.5, 0.6, 0.7]
        .iter()
        .map(|p| {
            let k = ((cloud.n as f64).powf(*p).floor() as usize).max(1);
            hill_eta(cloud, subset, &cfg.clone().with_k(k))
        })
        .collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(param(format!("delta must lie in [0,1], got {delta}")));
    }
    Ok(())
}

/// Censored Hill estimate of `tau_C(delta)`: Hill on `min over C` among the
/// rows with `max over the rest < (min over C)^delta` in Pareto scale.
pub fn tau_hat(cloud: &SampleCloud, subset: &[usize], delta: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    let c = check_subset(cloud.dim, subset)?;
    check_delta(delta)?;
    if c.len() == cloud.dim {
        let mut e = hill_eta(cloud, &c, cfg)?;
        e.quantity = Quantity::Tau;
        e.index.delta = Some(delta);
        return Ok(e);
    }
    let exp = exponential_rows(cloud);
    let rows = structure(&exp, &c);
    let keep = |&(t, m): &(f64, f64)| m < delta * t;
    let kept: Vec<f64> = rows.iter().filter(|r| keep(r)).map(|r| r.0).collect();
    let n_eff = kept.len();
    if n_eff == 0 {
        return Err(Error::Estimation("no observation satisfies the censoring event".into()));
    }
    let k = cfg.k_for(n_eff);
    if k >= n_eff {
        return Err(Error::Estimation(format!("k = {k} is not below the {n_eff} retained observations")));
    }
    let (value, tie) = hill_exponential(&mut kept.clone(), k)?;
    let mut warnings = Vec::new();
    if tie {
        warnings.push("ties at the Hill threshold".into());
    }
    if n_eff < 10 * k {
        warnings.push(format!("only {n_eff} observations retained for k = {k}; uncertainty is wide"));
    }
    let (se, w) = bootstrap(rows.len(), cfg, |idx| {
        let mut v: Vec<f64> = idx.iter().map(|&i| rows[i]).filter(keep).map(|r| r.0).collect();
        hill_exponential(&mut v, k).ok().map(|r| r.0)
    });
    warnings.extend(w);
    Ok(Estimate {
        quantity: Quantity::Tau,
        index: EstimateIndex {
            subset: Some(c),
            delta: Some(delta),
            ..Default::default()
        },
        value,
        se,
        k: Some(k),
        n_eff,
        seed: cfg.seed,
        warnings,
    })
}

/// Minimum exceedance count for a threshold to enter a regression.
pub const MIN_EXCEEDANCES: usize = 20;

/// Slope of `log p` against `v` over the grid points with enough
/// exceedances, from `(v, count)` pairs out of `n` observations.
fn log_prob_slope(counts: &[(f64, usize)], n: usize) -> Option<(f64, usize)> {
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .filter(|(_, c)| *c >= MIN_EXCEEDANCES)
        .map(|&(v, c)| (v, (c as f64 / n as f64).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
    fit_line(&x, &y).map(|f| (f.slope, pts.len()))
}

/// `n_points` evenly spaced values from the `hi`-th to the `lo`-th largest
/// of `values` (1-based ranks).
fn rank_grid(values: &[f64], hi: usize, lo: usize, n_points: usize) -> Option<Vec<f64>> {
    let m = values.len();
    if m == 0 || hi <= lo {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let a = v[(hi - 1).min(m - 1)];
    let b = v[(lo - 1).min(m - 1)];
    if !(b > a) {
        return None;
    }
    Some((0..n_points).map(|i| a + (b - a) * i as f64 / (n_points - 1) as f64).collect())
}

/// `tau_C(delta)` from the decay of `P(min over C > t, max over the rest <= t^delta)`
/// in `t`: the log-log slope is `-1/tau`. `log_t_grid` holds `log t`; by
/// default 12 points spanning the tail used by [`tau_hat`].
pub fn tau_hat_fixed_threshold(
    cloud: &SampleCloud,
    subset: &[usize],
    delta: f64,
    log_t_grid: Option<&[f64]>,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    let c = check_subset(cloud.dim, subset)?;
    check_delta(delta)?;
    let exp = exponential_rows(cloud);
    let rows = structure(&exp, &c);
    let full = c.len() == cloud.dim;
    let grid: Vec<f64> = match log_t_grid {
        Some(g) => g.to_vec(),
        None => {
            let kept: Vec<f64> = rows
                .iter()
                .filter(|&&(t, m)| full || m < delta * t)
                .map(|r| r.0)
                .collect();
            let k = cfg.k_for(kept.len()).max(4 * MIN_EXCEEDANCES);
            rank_grid(&kept, k, MIN_EXCEEDANCES + MIN_EXCEEDANCES / 2, 12)
                .ok_or_else(|| Error::Estimation("too few tail observations for a threshold grid".into()))?
        }
    };
    // only rows above the lowest threshold can count
    let v_min = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let candidates: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].0 > v_min).collect();
    let counts_for = |multiplicity: &dyn Fn(usize) -> usize| -> Vec<(f64, usize)> {
        grid.iter()
            .map(|&v| {
                let cnt = candidates
                    .iter()
                    .filter(|&&i| rows[i].0 > v && (full || rows[i].1 <= delta * v))
                    .map(|&i| multiplicity(i))
                    .sum();
                (v, cnt)
            })
            .collect()
    };
    let n = rows.len();
    let counts = counts_for(&|_| 1);
    let n_eff = counts.iter().map(|c| c.1).max().unwrap_or(0);
    let (slope, used) = log_prob_slope(&counts, n)
        .ok_or_else(|| Error::Estimation("fewer than three thresholds with enough exceedances".into()))?;
    let mut warnings = Vec::new();
    if used < grid.len() {
        warnings.push(format!("{} of {} thresholds dropped for sparse exceedances", grid.len() - used, grid.len()));
    }
    let to_tau = |s: f64| if s < 0.0 { -1.0 / s } else { f64::INFINITY };
    let value = to_tau(slope);

    // bootstrap by multiplicities of the candidate rows
    let pos: std::collections::HashMap<usize, usize> =
        candidates.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let (se, w) = bootstrap(n, cfg, |idx| {
        let mut mult = vec![0usize; candidates.len()];
        for i in idx {
            if let Some(&p) = pos.get(i) {
                mult[p] += 1;
            }
        }
        let counts: Vec<(f64, usize)> = grid
            .iter()
            .map(|&v| {
                let cnt = candidates
                    .iter()
                    .zip(&mult)
                    .filter(|(&i, _)| rows[i].0 > v && (full || rows[i].1 <= delta * v))
                    .map(|(_, &m)| m)
                    .sum();
                (v, cnt)
            })
            .collect();
        log_prob_slope(&counts, n).map(|(s, _)| to_tau(s)).filter(|v| v.is_finite())
    });
    warnings.extend(w);
    Ok(Estimate {
        quantity: Quantity::TauFixedThreshold,
        index: EstimateIndex {
            subset: Some(c),
            delta: Some(delta),
            ..Default::default()
        },
        value,
        se,
        k: None,
        n_eff,
        seed: cfg.seed,
        warnings,
    })
}

/// `lambda(omega)` from the decay rate in `v` of `P(X_E > omega v)`.
/// `v_grid` defaults to 12 points between the thresholds exceeded by
/// `ceil(n^(2/3))` and 40 observations.
pub fn lambda_hat(cloud: &SampleCloud, omega: &[f64], v_grid: Option<&[f64]>, cfg: &EstimatorConfig) -> Result<Estimate> {
    if omega.len() != cloud.dim {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim,
            got: omega.len(),
        });
    }
    let total: f64 = omega.iter().sum();
    if omega.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(param("omega must lie on the unit simplex"));
    }
    let exp = exponential_rows(cloud);
    let q: Vec<f64> = exp
        .rows()
        .map(|r| {
            r.iter()
                .zip(omega)
                .filter(|(_, w)| **w > 0.0)
                .map(|(x, w)| x / w)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let n = q.len();
    let grid: Vec<f64> = match v_grid {
        Some(g) => g.to_vec(),
        None => {
            let hi = ((n as f64).powf(2.0 / 3.0).ceil() as usize).max(4 * MIN_EXCEEDANCES);
            rank_grid(&q, hi, 2 * MIN_EXCEEDANCES, 12)
                .ok_or_else(|| Error::Estimation("too few tail observations for a threshold grid".into()))?
        }
    };
    let v_min = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut tail: Vec<f64> = q.iter().cloned().filter(|v| *v > v_min).collect();
    tail.sort_by(f64::total_cmp);
    let count_above = |sorted: &[f64], v: f64| sorted.len() - sorted.partition_point(|x| *x <= v);
    let counts: Vec<(f64, usize)> = grid.iter().map(|&v| (v, count_above(&tail, v))).collect();
    let (slope, used) = log_prob_slope(&counts, n)
        .ok_or_else(|| Error::Estimation("fewer than three thresholds with enough exceedances".into()))?;
    let mut warnings = Vec::new();
    if used < grid.len() {
        warnings.push(format!("{} of {} thresholds dropped for sparse exceedances", grid.len() - used, grid.len()));
    }
    let (se, w) = bootstrap(n, cfg, |idx| {
        let mut t: Vec<f64> = idx.iter().map(|&i| q[i]).filter(|v| *v > v_min).collect();
        t.sort_by(f64::total_cmp);
        let counts: Vec<(f64, usize)> = grid.iter().map(|&v| (v, count_above(&t, v))).collect();
        log_prob_slope(&counts, n).map(|(s, _)| -s)
    });
    warnings.extend(w);
    Ok(Estimate {
        quantity: Quantity::Lambda,
        index: EstimateIndex {
            omega: Some(omega.to_vec()),
            ..Default::default()
        },
        value: -slope,
        se,
        k: None,
        n_eff: counts.first().map_or(0, |c| c.1),
        seed: cfg.seed,
        warnings,
    })
}

/// Whether two estimates agree within `z` combined standard errors.
pub fn agree(a: &Estimate, b: &Estimate, z: f64) -> Option<bool> {
    let (sa, sb) = (a.se?, b.se?);
    Some((a.value - b.value).abs() <= z * (sa * sa + sb * sb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample, ModelFamily, ModelSpec};
    use approx::assert_relative_eq;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default().with_bootstrap(50)
    }

    #[test]
    fn hill_on_exact_exponential_spacings() {
        // top values 10, 9, ..., threshold 5: mean excess of the top five is 3
        let mut v: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let (h, tie) = hill_exponential(&mut v, 5).unwrap();
        assert_relative_eq!(h, 3.0, epsilon = 1e-15);
        assert!(!tie);
        assert!(hill_exponential(&mut v, 11).is_err());
    }

    #[test]
    fn perfect_dependence_gives_unit_eta() {
        let base = sample(&ModelSpec::meta_gaussian2(0.0), 100_000, 2, Exec::Parallel).unwrap();
        let points: Vec<f64> = base.rows().flat_map(|r| [r[0], r[0]]).collect();
        let cloud = SampleCloud::from_points(base.model.clone(), 2, points, 2).unwrap();
        let e = hill_eta(&cloud, &[0, 1], &cfg()).unwrap();
        assert!((e.value - 1.0).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn independence_gives_half() {
        let cloud = sample(&ModelSpec::meta_gaussian2(0.0), 100_000, 3, Exec::Parallel).unwrap();
        let e = hill_eta(&cloud, &[0, 1], &cfg()).unwrap();
        assert!((e.value - 0.5).abs() < 0.05, "{e:?}");
        let l = lambda_hat(&cloud, &[0.3, 0.7], None, &cfg()).unwrap();
        assert!((l.value - 1.0).abs() < 0.05, "{l:?}");
        let t = tau_hat_fixed_threshold(&cloud, &[0], 0.5, None, &cfg()).unwrap();
        assert!((t.value - 1.0).abs() < 0.05, "{t:?}");
    }

    #[test]
    fn full_subset_tau_is_eta() {
        let cloud = sample(&ModelSpec::meta_gaussian2(0.5), 20_000, 4, Exec::Parallel).unwrap();
        let e = hill_eta(&cloud, &[0, 1], &cfg()).unwrap();
        let t = tau_hat(&cloud, &[0, 1], 1.0, &cfg()).unwrap();
        assert_eq!(e.value, t.value);
        assert_eq!(e.n_eff, t.n_eff);
    }

    #[test]
    fn censoring_is_monotone_in_delta() {
        let cloud = sample(&ModelSpec::meta_gaussian2(0.5), 50_000, 5, Exec::Parallel).unwrap();
        let c = EstimatorConfig::default().with_bootstrap(0);
        let mut last = 0;
        for delta in [0.1, 0.3, 0.5, 0.8, 1.0] {
            let e = tau_hat(&cloud, &[0], delta, &c).unwrap();
            assert!(e.n_eff >= last);
            last = e.n_eff;
        }
    }

    #[test]
    fn pareto_and_exponential_inputs_agree() {
        let cloud = sample(&ModelSpec::meta_gaussian2(0.5), 20_000, 6, Exec::Parallel).unwrap();
        let c = EstimatorConfig::default().with_bootstrap(0);
        let a = hill_eta(&cloud, &[0, 1], &c).unwrap();
        let b = hill_eta(&cloud.in_margins(Margins::Pareto), &[0, 1], &c).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-9);
    }

    #[test]
    fn estimate_json_record() {
        let cloud = sample(&ModelSpec::meta_gaussian2(0.5), 5_000, 7, Exec::Parallel).unwrap();
        let e = tau_hat(&cloud, &[0], 0.5, &EstimatorConfig::default().with_bootstrap(10)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        for key in ["quantity", "index", "value", "se", "k", "n_eff", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["quantity"], "tau");
    }

    #[test]
    fn husler_reiss_gp_decays_faster_than_any_power() {
        // the log-probability slope at level t is about 1 + t / (4 lambda^2),
        // so a small lambda shows the limit at this sample size
        let m = ModelSpec::new(2, ModelFamily::HuslerReissGp { lambda: 0.1 });
        let cloud = sample(&m, 1_000_000, 8, Exec::Parallel).unwrap();
        let c = EstimatorConfig::default().with_bootstrap(0);
        let a = tau_hat(&cloud, &[0], 0.5, &c).unwrap();
        let b = tau_hat_fixed_threshold(&cloud, &[0], 0.5, None, &c).unwrap();
        assert!(a.value < 0.1, "{a:?}");
        assert!(b.value < 0.1, "{b:?}");
    }

    #[test]
    fn husler_reiss_gp_fit_falls_with_threshold() {
        let m = ModelSpec::new(2, ModelFamily::HuslerReissGp { lambda: 1.0 });
        let cloud = sample(&m, 1_000_000, 9, Exec::Parallel).unwrap();
        let c = EstimatorConfig::default().with_bootstrap(0);
        let low = tau_hat_fixed_threshold(&cloud, &[0], 0.5, Some(&[0.5, 1.0, 1.5, 2.0]), &c).unwrap();
        let high = tau_hat_fixed_threshold(&cloud, &[0], 0.5, Some(&[2.5, 3.0, 3.5, 4.0]), &c).unwrap();
        assert!(high.value < low.value - 0.1, "{low:?} {high:?}");
    }
}
