//! Clouds on disk: a CSV of points (`x0, x1, ...`) next to a JSON sidecar
//! holding the model descriptor, seed, size and margins.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Margins, ModelSpec, SampleCloud};
use crate::error::{param, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub model: ModelSpec,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub margins: Margins,
    pub r_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

/// `cloud.csv` -> `cloud.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_cloud(cloud: &SampleCloud, csv_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    w.write_record((0..cloud.dim).map(|j| format!("x{j}")))?;
    for row in cloud.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    let meta = CloudMeta {
        model: cloud.model.clone(),
        dim: cloud.dim,
        n: cloud.n,
        seed: cloud.seed,
        margins: cloud.margins,
        r_n: cloud.r_n(),
        acceptance_rate: cloud.acceptance_rate,
    };
    let mut side = BufWriter::new(File::create(sidecar_path(csv_path))?);
    serde_json::to_writer_pretty(&mut side, &meta)?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(())
}

pub fn read_cloud(csv_path: &Path) -> Result<SampleCloud> {
    let meta: CloudMeta = serde_json::from_reader(BufReader::new(File::open(sidecar_path(csv_path))?))?;
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(csv_path)?));
    let mut points = Vec::with_capacity(meta.n * meta.dim);
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != meta.dim {
            return Err(param(format!("row with {} fields, expected {}", rec.len(), meta.dim)));
        }
        for f in rec.iter() {
            points.push(f.trim().parse::<f64>().map_err(|e| param(format!("bad number {f:?}: {e}")))?);
        }
    }
    if points.len() != meta.n * meta.dim {
        return Err(param(format!(
            "sidecar declares {} rows, file has {}",
            meta.n,
            points.len() / meta.dim.max(1)
        )));
    }
    Ok(SampleCloud {
        model: meta.model,
        dim: meta.dim,
        n: meta.n,
        seed: meta.seed,
        margins: meta.margins,
        points,
        acceptance_rate: meta.acceptance_rate,
    })
}
