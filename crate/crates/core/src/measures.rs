//! Extremal-dependence summaries computed from the gauge function.
//!
//! * `lambda(omega) = max(omega) * min over B_omega of g`
//! * `eta_C = 1 / min over {min(x) = 1} of the marginal gauge g_C`
//! * `tau_C(delta) = 1 / min over B^1_{C,delta} of g`, and `tau_D = eta_D`
//! * conditional-extremes exponents: `alpha` is the largest root of
//!   `g(1, x) = 1` on `[0, 1]`, and `beta = 1 - 1/rho` where `rho` is the
//!   index of regular variation at zero of `u -> g(1, alpha + u) - 1`.
//!
//! Coordinates are zero-based throughout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gauge::{Gauge, GaugeSpec};
use crate::geometry::search::{golden, SearchOptions};
use crate::geometry::{auto_upper, minimize, BoundaryRegion, MinResult};
use crate::stats::fit_line;

/// A computed summary with the boundary minimizer behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub min: Option<MinResult>,
    pub warnings: Vec<String>,
}

fn sorted_subset(dim: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let mut c = subset.to_vec();
    c.sort_unstable();
    c.dedup();
    if c.is_empty() {
        return Err(crate::error::param("coordinate subset must be nonempty"));
    }
    if let Some(&bad) = c.iter().find(|&&i| i >= dim) {
        return Err(crate::error::param(format!(
            "coordinate {bad} out of range for dimension {dim}"
        )));
    }
    Ok(c)
}

/// `lambda(omega)` with the default search settings.
pub fn lambda(g: &Gauge, omega: &[f64]) -> Result<f64> {
    Ok(lambda_eval(g, omega, &SearchOptions::default())?.value)
}

pub fn lambda_eval(g: &Gauge, omega: &[f64], opts: &SearchOptions) -> Result<Evaluation> {
    if omega.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: omega.len(),
        });
    }
    let m = omega.iter().cloned().fold(0.0, f64::max);
    let vertex: Vec<f64> = omega.iter().map(|w| w / m).collect();
    let region = BoundaryRegion::b_omega(omega, auto_upper(g, &vertex))?;
    let min = minimize(g, &region, opts)?;
    let raw = m * min.value;
    let value = raw.clamp(m, 1.0);
    let mut warnings = Vec::new();
    if (raw - value).abs() > 1e-9 {
        warnings.push(format!("lambda {raw} clamped to [{m}, 1]"));
    }
    Ok(Evaluation {
        value,
        min: Some(min),
        warnings,
    })
}

/// Marginal gauge on the zero-based coordinates `keep`.
pub fn marginalize(g: &Gauge, keep: &[usize]) -> Result<Gauge> {
    g.marginal(keep)
}

fn marginal_or_self(g: &Gauge, c: &[usize]) -> Result<Gauge> {
    if c.len() == g.dim() {
        Ok(g.clone())
    } else {
        g.marginal(c)
    }
}

/// `eta_C` with the default search settings.
pub fn eta(g: &Gauge, subset: &[usize]) -> Result<f64> {
    Ok(eta_eval(g, subset, &SearchOptions::default())?.value)
}

pub fn eta_eval(g: &Gauge, subset: &[usize], opts: &SearchOptions) -> Result<Evaluation> {
    let c = sorted_subset(g.dim(), subset)?;
    let gc = marginal_or_self(g, &c)?;
    let k = gc.dim();
    let region = BoundaryRegion::min_face(k, auto_upper(&gc, &vec![1.0; k]))?;
    let min = minimize(&gc, &region, opts)?;
    let raw = 1.0 / min.value;
    let value = raw.clamp(0.0, 1.0);
    let mut warnings = Vec::new();
    if (raw - value).abs() > 1e-9 {
        warnings.push(format!("eta {raw} clamped to [0, 1]"));
    }
    Ok(Evaluation {
        value,
        min: Some(min),
        warnings,
    })
}

/// `tau_C(delta)` with the default search settings.
pub fn tau(g: &Gauge, subset: &[usize], delta: f64) -> Result<f64> {
    Ok(tau_eval(g, subset, delta, &SearchOptions::default())?.value)
}

/// For `C = D` this is `eta_D` whatever `delta` is. A gauge that is infinite
/// on the whole region gives `tau = 0`: the probability decays faster than
/// any power.
pub fn tau_eval(g: &Gauge, subset: &[usize], delta: f64, opts: &SearchOptions) -> Result<Evaluation> {
    let d = g.dim();
    let c = sorted_subset(d, subset)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(crate::error::param(format!("delta must lie in [0,1], got {delta}")));
    }
    if c.len() == d {
        return eta_eval(g, &c, opts);
    }
    let vertex: Vec<f64> = (0..d).map(|i| if c.contains(&i) { 1.0 } else { 0.0 }).collect();
    let region = BoundaryRegion::b1_c_delta(d, &c, delta, auto_upper(g, &vertex))?;
    match minimize(g, &region, opts) {
        Ok(min) => {
            let raw = 1.0 / min.value;
            let value = raw.clamp(0.0, 1.0);
            let mut warnings = Vec::new();
            if (raw - value).abs() > 1e-9 {
                warnings.push(format!("tau {raw} clamped to [0, 1]"));
            }
            Ok(Evaluation {
                value,
                min: Some(min),
                warnings,
            })
        }
        Err(Error::Degenerate(msg)) => Ok(Evaluation {
            value: 0.0,
            min: None,
            warnings: vec![format!("rapid decay: {msg}")],
        }),
        Err(e) => Err(e),
    }
}

/// Bivariate face remainder `x -> g(1 at given, x at other) - 1` after
/// marginalizing to the pair.
fn pair_face(g: &Gauge, given: usize, other: usize) -> Result<impl Fn(f64) -> f64> {
    let d = g.dim();
    if given >= d || other >= d || given == other {
        return Err(crate::error::param(format!(
            "need two distinct coordinates below {d}, got {given} and {other}"
        )));
    }
    let pair = if d == 2 {
        g.clone()
    } else {
        g.marginal(&[given, other])?
    };
    // marginal keeps coordinates in increasing order
    let given_first = d == 2 && given == 0 || d > 2 && given < other;
    Ok(move |x: f64| {
        let p = if given_first { [1.0, x] } else { [x, 1.0] };
        let over = (x - 1.0).max(0.0);
        pair.excess(&p) + over
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    /// The set `{x : g(1, x) = 1}` around `alpha` when it is an interval.
    pub interval: Option<(f64, f64)>,
}

const ROOT_TOL: f64 = 1e-8;
// only exact zeros count as a flat stretch; tiny positive remainders are a
// steep approach to the root, not an interval of roots
const ZERO_TOL: f64 = 0.0;

/// Largest root in `[0, 1]` of `g(1, x) = 1` on the face where coordinate
/// `given` equals 1 and `other` varies.
pub fn cond_alpha(g: &Gauge, given: usize, other: usize) -> Result<AlphaResult> {
    let face = pair_face(g, given, other)?;
    alpha_on_face(&face)
}

fn alpha_on_face(face: &dyn Fn(f64) -> f64) -> Result<AlphaResult> {
    let n = 2001;
    let xs: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let phi = |x: f64| face(x);
    let vs: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    for k in (0..n).rev() {
        let left = if k > 0 { vs[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < n { vs[k + 1] } else { f64::INFINITY };
        if !(vs[k] <= left && vs[k] <= right) {
            continue;
        }
        let a = xs[k.saturating_sub(1)];
        let b = xs[(k + 1).min(n - 1)];
        let (xm, vm) = golden(&phi, a, b);
        if vm.abs() > ROOT_TOL {
            continue;
        }
        // a zero set longer than a grid step is an interval of roots
        let step = 1.0 / (n - 1) as f64;
        let flat_right = xm + step <= 1.0 && phi(xm + step).abs() <= ZERO_TOL && phi(xm + 0.5 * step).abs() <= ZERO_TOL;
        let flat_left = xm - step >= 0.0 && phi(xm - step).abs() <= ZERO_TOL && phi(xm - 0.5 * step).abs() <= ZERO_TOL;
        if !(flat_right || flat_left) {
            return Ok(AlphaResult {
                alpha: xm,
                interval: None,
            });
        }
        let hi = edge(&phi, xm, 1.0, step);
        let lo = edge(&phi, xm, 0.0, step);
        return Ok(AlphaResult {
            alpha: hi,
            interval: Some((lo, hi)),
        });
    }
    Err(Error::NoSolution(
        "g(1, x) = 1 has no root in [0, 1]; the gauge does not touch its unit face".into(),
    ))
}

/// Walks from `start` toward `limit` in grid steps while `phi` stays at zero,
/// then bisects the boundary of the zero set to `1e-10`.
fn edge(phi: &dyn Fn(f64) -> f64, start: f64, limit: f64, step: f64) -> f64 {
    let dir = if limit > start { 1.0 } else { -1.0 };
    let mut inside = start;
    loop {
        let next = inside + dir * step;
        if (next - limit) * dir >= 0.0 {
            if phi(limit).abs() <= ZERO_TOL {
                return limit;
            }
            break;
        }
        if phi(next).abs() > ZERO_TOL {
            break;
        }
        inside = next;
    }
    let mut outside = (inside + dir * step).clamp(start.min(limit), start.max(limit));
    while (outside - inside).abs() > 1e-10 {
        let mid = 0.5 * (inside + outside);
        if phi(mid).abs() <= ZERO_TOL {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaValue {
    Value { beta: f64 },
    Undetermined { reason: String },
}

impl BetaValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            BetaValue::Value { beta } => Some(*beta),
            BetaValue::Undetermined { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub beta: BetaValue,
    pub alpha: f64,
    /// Fitted index of regular variation at zero of the face remainder.
    pub rv_index: Option<f64>,
    pub r_squared: Option<f64>,
    /// The remainder decays faster than any power (index infinite, beta = 1).
    pub rapid_variation: bool,
    /// Range of `u` used in the fit.
    pub u_range: Option<(f64, f64)>,
}

/// Smallest remainder trusted against rounding in `g - 1`.
const REMAINDER_FLOOR: f64 = 1e-11;

/// `beta` for the pair (`given`, `other`) from the log-log slope of
/// `u -> g(1, alpha + u) - 1`.
pub fn cond_beta(g: &Gauge, given: usize, other: usize) -> Result<BetaResult> {
    let face = pair_face(g, given, other)?;
    let alpha = alpha_on_face(&face)?.alpha;
    Ok(beta_on_face(&face, alpha))
}

pub(crate) fn remainder_series(face: &dyn Fn(f64) -> f64, alpha: f64) -> Vec<(f64, f64)> {
    (0..=80)
        .map(|k| {
            let u = 10f64.powf(-(k as f64) / 10.0);
            (u, face(alpha + u))
        })
        .collect()
}

pub(crate) fn beta_on_face(face: &dyn Fn(f64) -> f64, alpha: f64) -> BetaResult {
    let undetermined = |reason: &str| BetaResult {
        beta: BetaValue::Undetermined {
            reason: reason.to_string(),
        },
        alpha,
        rv_index: None,
        r_squared: None,
        rapid_variation: false,
        u_range: None,
    };
    let series = remainder_series(face, alpha);
    if series.iter().all(|(_, r)| r.is_infinite()) {
        return undetermined("gauge is infinite off the root along the face");
    }
    // the smallest-u run of usable points, spanning at most two decades
    let usable: Vec<(f64, f64)> = series
        .iter()
        .cloned()
        .filter(|(_, r)| r.is_finite() && *r > REMAINDER_FLOOR)
        .collect();
    if usable.len() < 6 {
        return undetermined("remainder vanishes below rounding level");
    }
    let start = usable.len().saturating_sub(21);
    let window = &usable[start..];
    let lx: Vec<f64> = window.iter().map(|(u, _)| u.ln()).collect();
    let ly: Vec<f64> = window.iter().map(|(_, r)| r.ln()).collect();
    let Some(fit) = fit_line(&lx, &ly) else {
        return undetermined("degenerate log-log fit");
    };
    let half = window.len() / 2;
    let coarse = fit_line(&lx[..=half], &ly[..=half]).map(|f| f.slope);
    let fine = fit_line(&lx[half..], &ly[half..]).map(|f| f.slope);
    let u_range = Some((window[window.len() - 1].0, window[0].0));
    let rapid = matches!((coarse, fine), (Some(c), Some(f)) if c > 0.0 && f > 1.05 * c + 0.05);
    if rapid {
        return BetaResult {
            beta: BetaValue::Value { beta: 1.0 },
            alpha,
            rv_index: None,
            r_squared: Some(fit.r_squared),
            rapid_variation: true,
            u_range,
        };
    }
    if fit.r_squared < 0.999 || fit.slope <= 0.0 {
        let mut r = undetermined("log-log fit is not linear");
        r.rv_index = Some(fit.slope);
        r.r_squared = Some(fit.r_squared);
        r.u_range = u_range;
        return r;
    }
    BetaResult {
        beta: BetaValue::Value {
            beta: 1.0 - 1.0 / fit.slope,
        },
        alpha,
        rv_index: Some(fit.slope),
        r_squared: Some(fit.r_squared),
        rapid_variation: false,
        u_range,
    }
}

/// Grids and subsets for [`summarize`]. `None` selects the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    pub omega_grid: Option<Vec<Vec<f64>>>,
    pub delta_grid: Option<Vec<f64>>,
    /// Subsets for `eta` (default: every subset with at least two coordinates).
    pub eta_subsets: Option<Vec<Vec<usize>>>,
    /// Subsets for `tau` (default: every nonempty proper subset and `D`).
    pub tau_subsets: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub search: SearchOptions,
    #[serde(default)]
    pub exec: Exec,
}

/// `n + 1` evenly spaced points of the bivariate simplex.
pub fn omega_grid_2d(n: usize) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|k| {
            let w = k as f64 / n as f64;
            vec![w, 1.0 - w]
        })
        .collect()
}

/// Lattice points of the simplex with denominator `n`.
pub fn simplex_lattice(dim: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == dim - 1 {
            let mut p: Vec<f64> = prefix.iter().map(|&k| k as f64 / n as f64).collect();
            p.push(left as f64 / n as f64);
            out.push(p);
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim, left - k, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, n, n, &mut Vec::new(), &mut out);
    out
}

pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

fn subsets(dim: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << dim))
        .map(|mask| (0..dim).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub omega: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaEntry {
    pub subset: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEntry {
    pub subset: Vec<usize>,
    pub delta: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondEntry {
    pub given: usize,
    pub other: usize,
    pub alpha: f64,
    pub alpha_interval: Option<(f64, f64)>,
    pub beta: BetaValue,
    pub rapid_variation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryError {
    pub quantity: String,
    pub index: serde_json::Value,
    pub message: String,
}

/// All summaries for one gauge. Failed entries are listed in `errors`
/// instead of aborting the batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceSummary {
    pub model: GaugeSpec,
    pub dim: usize,
    pub lambda: Vec<LambdaEntry>,
    pub eta: Vec<EtaEntry>,
    pub tau: Vec<TauEntry>,
    pub cond: Vec<CondEntry>,
    pub flags: Vec<String>,
    pub warnings: Vec<String>,
    pub errors: Vec<EntryError>,
}

enum Task {
    Lambda(Vec<f64>),
    Eta(Vec<usize>),
    Tau(Vec<usize>, f64),
    Cond(usize, usize),
}

enum Outcome {
    Lambda(LambdaEntry, Vec<String>),
    Eta(EtaEntry, Vec<String>),
    Tau(TauEntry, Vec<String>),
    Cond(CondEntry),
    Failed(EntryError),
}

fn run_task(g: &Gauge, task: &Task, opts: &SearchOptions) -> Outcome {
    let failed = |quantity: &str, index: serde_json::Value, e: Error| {
        Outcome::Failed(EntryError {
            quantity: quantity.into(),
            index,
            message: e.to_string(),
        })
    };
    match task {
        Task::Lambda(omega) => match lambda_eval(g, omega, opts) {
            Ok(ev) => Outcome::Lambda(
                LambdaEntry {
                    omega: omega.clone(),
                    value: ev.value,
                },
                ev.warnings,
            ),
            Err(e) => failed("lambda", serde_json::json!(omega), e),
        },
        Task::Eta(c) => match eta_eval(g, c, opts) {
            Ok(ev) => Outcome::Eta(
                EtaEntry {
                    subset: c.clone(),
                    value: ev.value,
                },
                ev.warnings,
            ),
            Err(e) => failed("eta", serde_json::json!(c), e),
        },
        Task::Tau(c, delta) => match tau_eval(g, c, *delta, opts) {
            Ok(ev) => Outcome::Tau(
                TauEntry {
                    subset: c.clone(),
                    delta: *delta,
                    value: ev.value,
                },
                ev.warnings,
            ),
            Err(e) => failed("tau", serde_json::json!({"subset": c, "delta": delta}), e),
        },
        Task::Cond(j, i) => {
            let index = serde_json::json!([j, i]);
            let face = match pair_face(g, *j, *i) {
                Ok(f) => f,
                Err(e) => return failed("alpha", index, e),
            };
            match alpha_on_face(&face) {
                Ok(a) => {
                    let b = beta_on_face(&face, a.alpha);
                    Outcome::Cond(CondEntry {
                        given: *j,
                        other: *i,
                        alpha: a.alpha,
                        alpha_interval: a.interval,
                        beta: b.beta,
                        rapid_variation: b.rapid_variation,
                    })
                }
                Err(e) => failed("alpha", index, e),
            }
        }
    }
}

/// Computes every summary on the configured grids.
pub fn summarize(g: &Gauge, config: &SummaryConfig) -> DependenceSummary {
    let d = g.dim();
    let omegas = config.omega_grid.clone().unwrap_or_else(|| {
        if d == 2 {
            omega_grid_2d(20)
        } else {
            simplex_lattice(d, 4)
        }
    });
    let deltas = config.delta_grid.clone().unwrap_or_else(|| unit_grid(20));
    let all = subsets(d);
    let eta_sets = config
        .eta_subsets
        .clone()
        .unwrap_or_else(|| all.iter().filter(|c| c.len() >= 2).cloned().collect());
    let tau_sets = config.tau_subsets.clone().unwrap_or_else(|| all.clone());

    let mut tasks: Vec<Task> = omegas.into_iter().map(Task::Lambda).collect();
    tasks.extend(eta_sets.into_iter().map(Task::Eta));
    for c in tau_sets {
        for &delta in &deltas {
            tasks.push(Task::Tau(c.clone(), delta));
        }
    }
    for j in 0..d {
        for i in 0..d {
            if i != j {
                tasks.push(Task::Cond(j, i));
            }
        }
    }
    let outcomes = config.exec.map(&tasks, |t| run_task(g, t, &config.search));

    let mut summary = DependenceSummary {
        model: g.spec(),
        dim: d,
        lambda: Vec::new(),
        eta: Vec::new(),
        tau: Vec::new(),
        cond: Vec::new(),
        flags: Vec::new(),
        warnings: Vec::new(),
        errors: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Lambda(e, w) => {
                summary.lambda.push(e);
                summary.warnings.extend(w);
            }
            Outcome::Eta(e, w) => {
                summary.eta.push(e);
                summary.warnings.extend(w);
            }
            Outcome::Tau(e, w) => {
                summary.tau.push(e);
                summary.warnings.extend(w);
            }
            Outcome::Cond(e) => summary.cond.push(e),
            Outcome::Failed(e) => summary.errors.push(e),
        }
    }
    summary.flags = flags(g, &summary);
    summary
}

fn flags(g: &Gauge, s: &DependenceSummary) -> Vec<String> {
    let mut out = Vec::new();
    if g.is_unverified() {
        out.push("custom gauge: results assume a valid gauge".to_string());
    }
    // g coinciding with max(x) puts all mass on the axes' boundary square:
    // the geometry still yields (alpha, beta) = (1, 0)
    let probe = simplex_lattice(s.dim, 8);
    let is_max = probe.iter().all(|w| {
        let m = w.iter().cloned().fold(0.0, f64::max);
        (g.value(w) - m).abs() <= 1e-12
    });
    if is_max {
        out.push("g equals max(x): existence of a conditional limit with positive support is not guaranteed".to_string());
    }
    for c in &s.cond {
        if c.alpha == 0.0 {
            if let Ok(face) = pair_face(g, c.given, c.other) {
                let eps = 1e-8;
                let slope = (face(eps) - face(0.0)) / eps;
                if slope.abs() < 1e-6 {
                    out.push(format!(
                        "pair ({}, {}): alpha = 0 with zero face derivative at 0+; the sign of beta is not fixed by the face derivative",
                        c.given, c.other
                    ));
                }
            }
        }
    }
    out
}

impl DependenceSummary {
    /// Flat rows `(quantity, index_json, value)`.
    pub fn rows(&self) -> Vec<(String, String, String)> {
        let num = |v: f64| format!("{v}");
        let mut rows = Vec::new();
        for e in &self.lambda {
            rows.push(("lambda".into(), serde_json::to_string(&e.omega).unwrap(), num(e.value)));
        }
        for e in &self.eta {
            rows.push(("eta".into(), serde_json::to_string(&e.subset).unwrap(), num(e.value)));
        }
        for e in &self.tau {
            let idx = serde_json::json!({"subset": e.subset, "delta": e.delta});
            rows.push(("tau".into(), idx.to_string(), num(e.value)));
        }
        for e in &self.cond {
            let idx = serde_json::json!([e.given, e.other]).to_string();
            rows.push(("alpha".into(), idx.clone(), num(e.alpha)));
            let b = match &e.beta {
                BetaValue::Value { beta } => num(*beta),
                BetaValue::Undetermined { .. } => "undetermined".into(),
            };
            rows.push(("beta".into(), idx, b));
        }
        rows
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["quantity", "index_json", "value"])?;
        for (q, i, v) in self.rows() {
            w.write_record([q, i, v])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invariant(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn lambda_at(&self, omega: &[f64]) -> Option<f64> {
        self.lambda
            .iter()
            .find(|e| e.omega.iter().zip(omega).all(|(a, b)| (a - b).abs() < 1e-12))
            .map(|e| e.value)
    }

    pub fn eta_of(&self, subset: &[usize]) -> Option<f64> {
        self.eta.iter().find(|e| e.subset == subset).map(|e| e.value)
    }

    pub fn tau_of(&self, subset: &[usize], delta: f64) -> Option<f64> {
        self.tau
            .iter()
            .find(|e| e.subset == subset && (e.delta - delta).abs() < 1e-12)
            .map(|e| e.value)
    }

    pub fn cond_of(&self, given: usize, other: usize) -> Option<&CondEntry> {
        self.cond.iter().find(|e| e.given == given && e.other == other)
    }

    /// Human-readable digest.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", serde_json::to_string(&self.model).unwrap_or_default());
        for e in &self.eta {
            let _ = writeln!(s, "eta{:?} = {:.6}", e.subset, e.value);
        }
        for e in &self.cond {
            let b = e.beta.value().map_or("undetermined".to_string(), |b| format!("{b:.4}"));
            let _ = writeln!(s, "alpha({}|{}) = {:.6}, beta = {b}", e.other, e.given, e.alpha);
        }
        if !self.errors.is_empty() {
            let _ = writeln!(s, "{} entries failed", self.errors.len());
        }
        s
    }
}
