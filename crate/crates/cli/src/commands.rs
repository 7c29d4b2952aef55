use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use limitset::estimation::{
    agree, hill_eta, lambda_hat, tau_hat, tau_hat_fixed_threshold, Estimate, EstimatorConfig,
};
use limitset::geometry::levelset::level_set;
use limitset::measures::{self, omega_grid_2d, simplex_lattice, SummaryConfig};
use limitset::mixtures::{mix_gauge, mixture_eta, MixtureSpec};
use limitset::sampling::{read_cloud, sample, write_cloud};
use limitset::{Exec, Gauge, Margins, SampleCloud};

use crate::grids::{linspace, parse_delta_grid, parse_list, parse_omega_grid, parse_seeds};
use crate::model::ModelArgs;
use crate::{Format, Output};

pub enum Status {
    Complete,
    /// Number of failed entries.
    Partial(usize),
}

fn status(failures: usize) -> Status {
    if failures == 0 {
        Status::Complete
    } else {
        Status::Partial(failures)
    }
}

fn exec(o: &Output) -> Exec {
    if o.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn out_dir(o: &Output) -> Result<&Path> {
    fs::create_dir_all(&o.out).with_context(|| format!("creating {}", o.out.display()))?;
    Ok(&o.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summarize(model: &ModelArgs, delta_grid: Option<&str>, omega_grid: Option<&str>, o: &Output) -> Result<Status> {
    let spec = model.gauge_spec()?;
    let g = spec.build()?;
    let config = SummaryConfig {
        delta_grid: delta_grid.map(parse_delta_grid).transpose()?,
        omega_grid: omega_grid.map(|s| parse_omega_grid(s, g.dim())).transpose()?,
        exec: exec(o),
        ..Default::default()
    };
    let summary = measures::summarize(&g, &config);
    let dir = out_dir(o)?;
    write_json(&dir.join("summary.json"), &summary)?;
    let csv = summary.to_csv()?;
    fs::write(dir.join("summary.csv"), &csv)?;
    match o.format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{}", serde_json::to_string(&summary)?),
    }
    for e in &summary.errors {
        eprintln!("{} {}: {}", e.quantity, e.index, e.message);
    }
    Ok(status(summary.errors.len()))
}

pub fn levelset(model: &ModelArgs, points: Option<usize>, omega_grid: Option<&str>, o: &Output) -> Result<Status> {
    let g = model.gauge_spec()?.build()?;
    let d = g.dim();
    if !(2..=3).contains(&d) {
        bail!("level sets are available for d = 2 or 3, got {d}");
    }
    let ls = level_set(&g, points.unwrap_or(if d == 2 { 400 } else { 50 }))?;
    let omegas = match omega_grid {
        Some(s) => parse_omega_grid(s, d)?,
        None if d == 2 => omega_grid_2d(40),
        None => simplex_lattice(d, 10),
    };
    let fmt = |kind: &str, i: usize, p: &[f64]| -> Vec<String> {
        let mut r = vec![kind.to_string(), i.to_string()];
        r.extend(p.iter().map(|v| v.to_string()));
        r
    };
    let mut rows: Vec<Vec<String>> = ls.vertices.iter().enumerate().map(|(i, v)| fmt("boundary", i, v)).collect();
    let mut failures = 0;
    // lambda overlay: the point r_omega * omega / max(omega) = omega / lambda(omega)
    for (i, w) in omegas.iter().enumerate() {
        match measures::lambda(&g, w) {
            Ok(l) => rows.push(fmt("lambda", i, &w.iter().map(|c| c / l).collect::<Vec<_>>())),
            Err(e) => {
                eprintln!("lambda at {w:?}: {e}");
                failures += 1;
            }
        }
    }
    let all: Vec<usize> = (0..d).collect();
    match measures::eta(&g, &all) {
        Ok(e) => rows.push(fmt("eta", 0, &vec![e; d])),
        Err(e) => {
            eprintln!("eta: {e}");
            failures += 1;
        }
    }
    let mut header = vec!["kind".to_string(), "index".to_string()];
    header.extend((0..d).map(|j| format!("x{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = csv_string(&header, &rows)?;
    let dir = out_dir(o)?;
    fs::write(dir.join("levelset.csv"), &csv)?;
    let cells: Vec<Vec<String>> = ls
        .cells
        .iter()
        .map(|c| c.iter().map(|i| i.to_string()).collect())
        .collect();
    let cell_header: &[&str] = if d == 2 { &["a", "b"] } else { &["a", "b", "c"] };
    fs::write(dir.join("levelset_cells.csv"), csv_string(cell_header, &cells)?)?;
    match o.format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{}", serde_json::to_string(&ls)?),
    }
    Ok(status(failures))
}

pub fn sample_cmd(model: &ModelArgs, n: usize, seed: u64, pareto: bool, o: &Output) -> Result<Status> {
    let mut m = model.model_spec()?;
    if pareto {
        m = m.with_margins(Margins::Pareto);
    }
    let cloud = sample(&m, n, seed, exec(o))?;
    let path = out_dir(o)?.join(format!("cloud-{}-n{n}-seed{seed}.csv", m.family_name()));
    write_cloud(&cloud, &path)?;
    let report = json!({
        "path": path,
        "model": m,
        "n": n,
        "seed": seed,
        "r_n": cloud.r_n(),
        "acceptance_rate": cloud.acceptance_rate,
    });
    match o.format {
        Format::Csv => println!("{}", path.display()),
        Format::Json => println!("{report}"),
    }
    Ok(Status::Complete)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    Eta,
    Tau,
    TauFixed,
    Lambda,
    All,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Stored cloud (CSV with a JSON sidecar); otherwise a fresh sample is drawn.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample size when no cloud is given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampling and bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = QuantityArg::All)]
    pub quantity: QuantityArg,
    /// Zero-based coordinates of `C` for tau (default: the first coordinate).
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long, default_value = "0.1,0.5,0.9")]
    pub delta_grid: String,
    /// Default: the centroid of the simplex.
    #[arg(long)]
    pub omega_grid: Option<String>,
    /// Upper order statistics for Hill (default floor(m^0.6)).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[command(flatten)]
    pub output: Output,
}

fn load_or_sample(cloud: Option<&Path>, model: &ModelArgs, n: Option<usize>, seed: u64, ex: Exec) -> Result<SampleCloud> {
    match cloud {
        Some(p) => Ok(read_cloud(p).with_context(|| format!("reading cloud {}", p.display()))?),
        None => {
            let n = n.context("--n is required without --cloud")?;
            Ok(sample(&model.model_spec()?, n, seed, ex)?)
        }
    }
}

fn parse_subset(s: &str, dim: usize) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad coordinate {p:?}")))
        .collect::<Result<_>>()?;
    if v.is_empty() || v.iter().any(|&i| i >= dim) {
        bail!("subset {s:?} invalid for dimension {dim}");
    }
    Ok(v)
}

fn centroid(d: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / d as f64; d]]
}

fn estimate_rows(es: &[Estimate]) -> Vec<Vec<String>> {
    es.iter()
        .map(|e| {
            vec![
                serde_json::to_value(e.quantity).unwrap().as_str().unwrap_or_default().to_string(),
                serde_json::to_string(&e.index).unwrap(),
                e.value.to_string(),
                e.se.map(|s| s.to_string()).unwrap_or_default(),
                e.k.map(|k| k.to_string()).unwrap_or_default(),
                e.n_eff.to_string(),
            ]
        })
        .collect()
}

pub fn estimate(a: &EstimateArgs) -> Result<Status> {
    let ex = exec(&a.output);
    let cloud = load_or_sample(a.cloud.as_deref(), &a.model, a.n, a.seed, ex)?;
    let d = cloud.dim;
    let subset = a.subset.as_deref().map(|s| parse_subset(s, d)).transpose()?.unwrap_or(vec![0]);
    let deltas = parse_delta_grid(&a.delta_grid)?;
    let omegas = match &a.omega_grid {
        Some(s) => parse_omega_grid(s, d)?,
        None => centroid(d),
    };
    let mut cfg = EstimatorConfig::default().with_seed(a.seed).with_bootstrap(a.bootstrap);
    cfg.k = a.k;
    cfg.exec = ex;
    let want = |q: QuantityArg| a.quantity == q || a.quantity == QuantityArg::All;
    let all: Vec<usize> = (0..d).collect();
    let mut results: Vec<limitset::Result<Estimate>> = Vec::new();
    let mut labels: Vec<Value> = Vec::new();
    if want(QuantityArg::Eta) {
        results.push(hill_eta(&cloud, &all, &cfg));
        labels.push(json!({"quantity": "eta", "subset": all}));
    }
    for &delta in &deltas {
        if want(QuantityArg::Tau) {
            results.push(tau_hat(&cloud, &subset, delta, &cfg));
            labels.push(json!({"quantity": "tau", "subset": subset, "delta": delta}));
        }
        if want(QuantityArg::TauFixed) {
            results.push(tau_hat_fixed_threshold(&cloud, &subset, delta, None, &cfg));
            labels.push(json!({"quantity": "tau_fixed_threshold", "subset": subset, "delta": delta}));
        }
    }
    if want(QuantityArg::Lambda) {
        for w in &omegas {
            results.push(lambda_hat(&cloud, w, None, &cfg));
            labels.push(json!({"quantity": "lambda", "omega": w}));
        }
    }
    let mut estimates = Vec::new();
    let mut errors = Vec::new();
    for (r, label) in results.into_iter().zip(labels) {
        match r {
            Ok(e) => estimates.push(e),
            Err(e) => errors.push(json!({"entry": label, "message": e.to_string()})),
        }
    }
    let dir = out_dir(&a.output)?;
    write_json(
        &dir.join("estimates.json"),
        &json!({"model": cloud.model, "n": cloud.n, "seed": a.seed, "estimates": estimates, "errors": errors}),
    )?;
    match a.output.format {
        Format::Csv => print!(
            "{}",
            csv_string(&["quantity", "index_json", "value", "se", "k", "n_eff"], &estimate_rows(&estimates))?
        ),
        Format::Json => {
            for e in &estimates {
                println!("{}", e.to_json());
            }
        }
    }
    for e in &errors {
        eprintln!("{e}");
    }
    Ok(status(errors.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Estimates against the gauge values for eta, lambda and tau.
    Coherence,
    /// Censored Hill tau against the fixed-threshold regression.
    Equivalence,
    /// eta of the common-component mixture over a gamma sweep.
    Mixture,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(long, value_enum)]
    pub kind: StudyKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// `a..b` or a comma list.
    #[arg(long, default_value = "0..20")]
    pub seeds: String,
    #[arg(long, default_value = "0.1")]
    pub delta_grid: String,
    #[arg(long)]
    pub omega_grid: Option<String>,
    /// Comma list of mixing weights (default: 21 points from 0.02 to 0.98).
    #[arg(long)]
    pub gamma_grid: Option<String>,
    /// Bootstrap replicates (equivalence studies only).
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

/// Absolute tolerance for eta, relative tolerance for lambda, absolute
/// tolerance for tau.
pub const ETA_TOL: f64 = 0.05;
pub const LAMBDA_REL_TOL: f64 = 0.08;
pub const TAU_TOL: f64 = 0.06;
/// Agreement of the two tau estimators, in combined standard errors.
pub const AGREE_Z: f64 = 2.0;
pub const MIXTURE_TOL: f64 = 1e-4;
/// Share of passing cells for an aggregate to pass.
pub const PASS_SHARE: f64 = 0.9;

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub id: String,
    pub quantity: String,
    pub index: Value,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub estimate: Option<f64>,
    pub truth: Option<f64>,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub quantity: String,
    pub index: Value,
    pub passed: usize,
    pub total: usize,
    pub pass: bool,
}

fn aggregate(cells: &[Cell]) -> Vec<Aggregate> {
    let mut out: Vec<Aggregate> = Vec::new();
    for c in cells {
        let slot = match out.iter_mut().find(|a| a.quantity == c.quantity && a.index == c.index) {
            Some(a) => a,
            None => {
                out.push(Aggregate {
                    quantity: c.quantity.clone(),
                    index: c.index.clone(),
                    passed: 0,
                    total: 0,
                    pass: false,
                });
                out.last_mut().unwrap()
            }
        };
        slot.total += 1;
        slot.passed += usize::from(c.pass);
    }
    for a in &mut out {
        a.pass = a.passed as f64 >= PASS_SHARE * a.total as f64;
    }
    out
}

fn failed_cell(id: String, quantity: &str, index: Value, n: usize, seed: u64, e: impl ToString) -> Cell {
    Cell {
        id,
        quantity: quantity.into(),
        index,
        n: Some(n),
        seed: Some(seed),
        estimate: None,
        truth: None,
        se: None,
        z: None,
        pass: false,
        error: Some(e.to_string()),
    }
}

fn coherence_cells(a: &StudyArgs, g: &Gauge, cloud: &SampleCloud, seed: u64, cfg: &EstimatorConfig) -> Vec<Cell> {
    let d = cloud.dim;
    let n = cloud.n;
    let all: Vec<usize> = (0..d).collect();
    let mut cells = Vec::new();
    let mut push = |quantity: &str, index: Value, est: limitset::Result<Estimate>, truth: limitset::Result<f64>, ok: &dyn Fn(f64, f64) -> bool| {
        let id = format!("{quantity}-{index}-n{n}-seed{seed}");
        match (est, truth) {
            (Ok(e), Ok(t)) => cells.push(Cell {
                id,
                quantity: quantity.into(),
                index,
                n: Some(n),
                seed: Some(seed),
                estimate: Some(e.value),
                truth: Some(t),
                se: e.se,
                z: e.se.map(|s| (e.value - t) / s),
                pass: ok(e.value, t),
                error: None,
            }),
            (Err(e), _) | (_, Err(e)) => cells.push(failed_cell(id, quantity, index, n, seed, e)),
        }
    };
    push(
        "eta",
        json!(all),
        hill_eta(cloud, &all, cfg),
        measures::eta(g, &all),
        &|e, t| (e - t).abs() <= ETA_TOL,
    );
    let omegas = match &a.omega_grid {
        Some(s) => parse_omega_grid(s, d).unwrap_or_else(|_| centroid(d)),
        None => centroid(d),
    };
    for w in &omegas {
        push(
            "lambda",
            json!(w),
            lambda_hat(cloud, w, None, cfg),
            measures::lambda(g, w),
            &|e, t| (e - t).abs() <= LAMBDA_REL_TOL * t,
        );
    }
    for delta in parse_delta_grid(&a.delta_grid).unwrap_or_default() {
        push(
            "tau",
            json!({"subset": [0], "delta": delta}),
            tau_hat(cloud, &[0], delta, cfg),
            measures::tau(g, &[0], delta),
            &|e, t| (e - t).abs() <= TAU_TOL,
        );
    }
    cells
}

fn equivalence_cells(a: &StudyArgs, cloud: &SampleCloud, seed: u64, cfg: &EstimatorConfig) -> Vec<Cell> {
    let n = cloud.n;
    let mut cells = Vec::new();
    for delta in parse_delta_grid(&a.delta_grid).unwrap_or_default() {
        let index = json!({"subset": [0], "delta": delta});
        let id = format!("tau_agreement-{index}-n{n}-seed{seed}");
        let r = tau_hat(cloud, &[0], delta, cfg)
            .and_then(|x| tau_hat_fixed_threshold(cloud, &[0], delta, None, cfg).map(|y| (x, y)));
        match r {
            Ok((x, y)) => {
                let se = match (x.se, y.se) {
                    (Some(p), Some(q)) => Some((p * p + q * q).sqrt()),
                    _ => None,
                };
                cells.push(Cell {
                    id,
                    quantity: "tau_agreement".into(),
                    index,
                    n: Some(n),
                    seed: Some(seed),
                    estimate: Some(x.value),
                    truth: Some(y.value),
                    se,
                    z: se.map(|s| (x.value - y.value) / s),
                    pass: agree(&x, &y, AGREE_Z).unwrap_or(false),
                    error: None,
                });
            }
            Err(e) => cells.push(failed_cell(id, "tau_agreement", index, n, seed, e)),
        }
    }
    cells
}

fn mixture_cells(a: &StudyArgs) -> Result<Vec<Cell>> {
    let gv = a.model.gauge_spec()?;
    let d = gv.dim;
    let all: Vec<usize> = (0..d).collect();
    let eta_v = measures::eta(&gv.build()?, &all)?;
    let gammas = match &a.gamma_grid {
        Some(s) => parse_list(s)?,
        None => linspace(0.02, 0.98, 21),
    };
    let cells = gammas
        .iter()
        .map(|&gamma| {
            let index = json!({"gamma": gamma});
            let id = format!("mixture_eta-{index}");
            let truth = mixture_eta(eta_v, gamma);
            match mix_gauge(&MixtureSpec::new(gv.clone(), gamma)).and_then(|g| measures::eta(&g, &all)) {
                Ok(v) => Cell {
                    id,
                    quantity: "mixture_eta".into(),
                    index,
                    n: None,
                    seed: None,
                    estimate: Some(v),
                    truth: Some(truth),
                    se: None,
                    z: None,
                    pass: (v - truth).abs() <= MIXTURE_TOL,
                    error: None,
                },
                Err(e) => Cell {
                    id,
                    quantity: "mixture_eta".into(),
                    index,
                    n: None,
                    seed: None,
                    estimate: None,
                    truth: Some(truth),
                    se: None,
                    z: None,
                    pass: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(cells)
}

pub fn study(a: &StudyArgs) -> Result<Status> {
    let ex = exec(&a.output);
    let seeds = parse_seeds(&a.seeds)?;
    // validate grids up front so bad input is a usage error
    parse_delta_grid(&a.delta_grid)?;
    let model = if a.kind == StudyKind::Mixture {
        None
    } else {
        Some(a.model.model_spec()?)
    };
    if let (Some(s), Some(m)) = (&a.omega_grid, &model) {
        parse_omega_grid(s, m.dim)?;
    }
    let cells = match (&a.kind, &model) {
        (StudyKind::Mixture, _) => mixture_cells(a)?,
        (kind, Some(m)) => {
            let g = m.gauge()?;
            let mut cells = Vec::new();
            for &seed in &seeds {
                let mut cfg = EstimatorConfig::default().with_seed(seed);
                cfg.k = a.k;
                cfg.exec = ex;
                cfg.bootstrap = if *kind == StudyKind::Equivalence { a.bootstrap } else { 0 };
                match sample(m, a.n, seed, ex) {
                    Ok(cloud) if *kind == StudyKind::Coherence => {
                        cells.extend(coherence_cells(a, &g, &cloud, seed, &cfg))
                    }
                    Ok(cloud) => cells.extend(equivalence_cells(a, &cloud, seed, &cfg)),
                    Err(e) => cells.push(failed_cell(format!("sample-n{}-seed{seed}", a.n), "sample", Value::Null, a.n, seed, e)),
                }
            }
            cells
        }
        (_, None) => unreachable!("model resolved for sampling studies"),
    };
    let aggregates = aggregate(&cells);
    let failures = cells.iter().filter(|c| c.error.is_some()).count();
    let report = json!({
        "kind": a.kind,
        "model": model,
        "n": if a.kind == StudyKind::Mixture { None } else { Some(a.n) },
        "seeds": if a.kind == StudyKind::Mixture { None } else { Some(&seeds) },
        "cells": cells,
        "aggregates": aggregates,
        "all_pass": aggregates.iter().all(|x| x.pass),
    });
    let dir = out_dir(&a.output)?;
    write_json(&dir.join("study.json"), &report)?;
    match a.output.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = aggregates
                .iter()
                .map(|x| {
                    vec![
                        x.quantity.clone(),
                        x.index.to_string(),
                        x.passed.to_string(),
                        x.total.to_string(),
                        x.pass.to_string(),
                    ]
                })
                .collect();
            print!("{}", csv_string(&["quantity", "index_json", "passed", "total", "pass"], &rows)?);
        }
        Format::Json => println!("{}", serde_json::to_string(&aggregates)?),
    }
    Ok(status(failures))
}
