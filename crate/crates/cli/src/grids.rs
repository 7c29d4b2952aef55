//! Parsing of grid and seed arguments.

use anyhow::{bail, Context, Result};
use limitset::measures::{omega_grid_2d, simplex_lattice};

/// `"N"` (an integer of at least 2) gives `N` evenly spaced points of
/// `[0, 1]`; anything else is a comma-separated list.
pub fn parse_delta_grid(s: &str) -> Result<Vec<f64>> {
    let t = s.trim();
    if !t.contains([',', '.']) {
        let n: usize = t.parse().with_context(|| format!("bad grid {s:?}"))?;
        if n < 2 {
            bail!("a grid size must be at least 2, got {n}");
        }
        return Ok((0..n).map(|k| k as f64 / (n - 1) as f64).collect());
    }
    let v = parse_list(t)?;
    if v.iter().any(|d| !(0.0..=1.0).contains(d)) {
        bail!("grid values must lie in [0, 1]: {s:?}");
    }
    Ok(v)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number {p:?}")))
        .collect()
}

/// `"N"` gives the simplex lattice with denominator `N`; otherwise points
/// separated by `;`, each a comma-separated vector or, for `d = 2`, a single
/// weight `w` meaning `(w, 1 - w)`.
pub fn parse_omega_grid(s: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    let t = s.trim();
    if !t.contains([',', '.', ';']) {
        let n: usize = t.parse().with_context(|| format!("bad grid {s:?}"))?;
        if n == 0 {
            bail!("lattice denominator must be positive");
        }
        return Ok(if dim == 2 { omega_grid_2d(n) } else { simplex_lattice(dim, n) });
    }
    let mut out = Vec::new();
    for p in t.split(';').filter(|p| !p.trim().is_empty()) {
        let v = parse_list(p)?;
        let w = match (v.len(), dim) {
            (1, 2) => vec![v[0], 1.0 - v[0]],
            (k, d) if k == d => v,
            (k, d) => bail!("omega {p:?} has {k} entries, expected {d}"),
        };
        if w.iter().any(|x| *x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            bail!("omega {p:?} is not on the simplex");
        }
        out.push(w);
    }
    Ok(out)
}

/// `"a..b"` (half-open) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().context("bad seed range start")?;
        let b: u64 = b.trim().parse().context("bad seed range end")?;
        if b <= a {
            bail!("empty seed range {s:?}");
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("bad seed {p:?}")))
        .collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}
