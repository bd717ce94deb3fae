//! File formats: binary/CSV embedding files, weight/score/index CSVs,
//! metrics JSON, trajectory directories, and the flat JSON run config.
//!
//! The binary embedding layout is fixed little-endian: a 24-byte header
//! (magic `HBEM`, version u32 = 1, dtype u32 with 1 = f32 / 2 = f64,
//! dim u32, count u64) followed by the row-major payload, one pattern per
//! row. Floats in text formats are written with 17 significant digits so
//! they parse back to identical doubles.

use crate::boosting::{SampleWeights, ToyTrajectory};
use crate::config::ToyConfig;
use crate::error::{HbError, Result};
use crate::memory::{PatternMemory, QueryBatch};
use crate::metrics::OodMetrics;
use ndarray::Array2;
use serde::Deserialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Magic bytes of the binary embedding format.
pub const EMBEDDING_MAGIC: [u8; 4] = *b"HBEM";
/// Current binary format version.
pub const EMBEDDING_VERSION: u32 = 1;

/// Payload element type of a binary embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingDtype {
    F32 = 1,
    F64 = 2,
}

/// On-disk representation of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Binary,
    Csv,
}

/// Sniffs the format of an embedding file from its first bytes.
pub fn detect_format(path: impl AsRef<Path>) -> Result<EmbeddingFormat> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| HbError::io(path, e))?;
    let mut magic = [0u8; 4];
    match file.read_exact(&mut magic) {
        Ok(()) if magic == EMBEDDING_MAGIC => Ok(EmbeddingFormat::Binary),
        _ => Ok(EmbeddingFormat::Csv),
    }
}

/// Reads an embedding file into a `d x N` memory (patterns as columns).
pub fn read_embeddings(
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<PatternMemory<f64>> {
    let path = path.as_ref();
    match format {
        EmbeddingFormat::Binary => read_embeddings_binary(path),
        EmbeddingFormat::Csv => read_embeddings_csv(path),
    }
}

fn read_embeddings_binary(path: &Path) -> Result<PatternMemory<f64>> {
    let mut file = BufReader::new(File::open(path).map_err(|e| HbError::io(path, e))?);
    let mut header = [0u8; 24];
    file.read_exact(&mut header)
        .map_err(|_| HbError::format(path, "truncated: header shorter than 24 bytes"))?;
    if header[0..4] != EMBEDDING_MAGIC {
        return Err(HbError::format(path, "bad-magic: expected HBEM"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != EMBEDDING_VERSION {
        return Err(HbError::format(
            path,
            format!("bad-version: {version}, expected {EMBEDDING_VERSION}"),
        ));
    }
    let dtype = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let elem = match dtype {
        1 => 4usize,
        2 => 8usize,
        other => return Err(HbError::format(path, format!("bad-dtype: {other}"))),
    };
    let d = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
    if d == 0 {
        return Err(HbError::format(path, "zero-dim: dimension must be positive"));
    }
    if n == 0 {
        return Err(HbError::format(path, "zero-count: no patterns"));
    }

    let mut payload = vec![0u8; d * n * elem];
    file.read_exact(&mut payload)
        .map_err(|_| HbError::format(path, "truncated: payload shorter than d*N values"))?;
    let mut probe = [0u8; 1];
    if file.read(&mut probe).map_err(|e| HbError::io(path, e))? != 0 {
        return Err(HbError::format(path, "trailing: payload longer than d*N values"));
    }

    let mut data = Array2::<f64>::zeros((d, n));
    for i in 0..n {
        for j in 0..d {
            let off = (i * d + j) * elem;
            let v = match elem {
                4 => f32::from_le_bytes(payload[off..off + 4].try_into().unwrap()) as f64,
                _ => f64::from_le_bytes(payload[off..off + 8].try_into().unwrap()),
            };
            if !v.is_finite() {
                return Err(HbError::format(
                    path,
                    format!("non-finite: value at pattern {i}, coordinate {j}"),
                ));
            }
            data[[j, i]] = v;
        }
    }
    PatternMemory::new(data)
}

fn read_embeddings_csv(path: &Path) -> Result<PatternMemory<f64>> {
    let file = BufReader::new(File::open(path).map_err(|e| HbError::io(path, e))?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| HbError::format(path, "truncated: empty file"))?
        .map_err(|e| HbError::io(path, e))?;
    let d: usize = header
        .trim()
        .strip_prefix("d=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| HbError::format(path, "bad-header: expected first line d=<int>"))?;
    if d == 0 {
        return Err(HbError::format(path, "zero-dim: dimension must be positive"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| HbError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                HbError::format(path, format!("bad-value: row {} not numeric", lineno + 2))
            })?;
        if row.len() != d {
            return Err(HbError::format(
                path,
                format!("bad-row: row {} has {} values, expected {d}", lineno + 2, row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(HbError::format(
                path,
                format!("non-finite: value at row {}, coordinate {j}", lineno + 2),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HbError::format(path, "zero-count: no patterns"));
    }
    let mut data = Array2::<f64>::zeros((d, rows.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            data[[j, i]] = v;
        }
    }
    PatternMemory::new(data)
}

/// Writes a memory as a binary embedding file with the given payload dtype.
pub fn write_embeddings_binary(
    path: impl AsRef<Path>,
    memory: &PatternMemory<f64>,
    dtype: EmbeddingDtype,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| HbError::io(path, e))?);
    let d = memory.dim() as u32;
    let n = memory.len() as u64;
    out.write_all(&EMBEDDING_MAGIC)
        .and_then(|_| out.write_all(&EMBEDDING_VERSION.to_le_bytes()))
        .and_then(|_| out.write_all(&(dtype as u32).to_le_bytes()))
        .and_then(|_| out.write_all(&d.to_le_bytes()))
        .and_then(|_| out.write_all(&n.to_le_bytes()))
        .map_err(|e| HbError::io(path, e))?;
    for i in 0..memory.len() {
        for &v in memory.column(i).iter() {
            match dtype {
                EmbeddingDtype::F32 => out
                    .write_all(&(v as f32).to_le_bytes())
                    .map_err(|e| HbError::io(path, e))?,
                EmbeddingDtype::F64 => out
                    .write_all(&v.to_le_bytes())
                    .map_err(|e| HbError::io(path, e))?,
            }
        }
    }
    out.flush().map_err(|e| HbError::io(path, e))
}

/// Writes a memory as a CSV embedding file (`d=<int>` header, one pattern
/// per row).
pub fn write_embeddings_csv(path: impl AsRef<Path>, memory: &PatternMemory<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| HbError::io(path, e))?);
    writeln!(out, "d={}", memory.dim()).map_err(|e| HbError::io(path, e))?;
    for i in 0..memory.len() {
        let row: Vec<String> = memory.column(i).iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", row.join(",")).map_err(|e| HbError::io(path, e))?;
    }
    out.flush().map_err(|e| HbError::io(path, e))
}

/// Formats a double with 17 significant digits; parsing the result yields
/// the identical bit pattern.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_indexed_csv(path: &Path, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| HbError::io(path, e))?);
    writeln!(out, "index,value").map_err(|e| HbError::io(path, e))?;
    for (i, v) in values.enumerate() {
        writeln!(out, "{i},{}", fmt_f64(v)).map_err(|e| HbError::io(path, e))?;
    }
    out.flush().map_err(|e| HbError::io(path, e))
}

fn read_indexed_csv(path: &Path) -> Result<Vec<f64>> {
    let file = BufReader::new(File::open(path).map_err(|e| HbError::io(path, e))?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| HbError::format(path, "truncated: empty file"))?
        .map_err(|e| HbError::io(path, e))?;
    if header.trim() != "index,value" {
        return Err(HbError::format(path, "bad-header: expected index,value"));
    }
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| HbError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let idx: usize = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| {
                HbError::format(path, format!("bad-value: row {} index", lineno + 2))
            })?;
        let value: f64 = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| {
                HbError::format(path, format!("bad-value: row {} value", lineno + 2))
            })?;
        if idx != values.len() {
            return Err(HbError::format(
                path,
                format!("bad-index: row {} has index {idx}", lineno + 2),
            ));
        }
        if !value.is_finite() {
            return Err(HbError::format(
                path,
                format!("non-finite: value at row {}", lineno + 2),
            ));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(HbError::format(path, "zero-count: no rows"));
    }
    Ok(values)
}

/// Writes sampling weights as `index,value` CSV.
pub fn write_weights(path: impl AsRef<Path>, weights: &SampleWeights<f64>) -> Result<()> {
    write_indexed_csv(path.as_ref(), weights.values().iter().copied())
}

/// Reads and validates sampling weights.
pub fn read_weights(path: impl AsRef<Path>) -> Result<SampleWeights<f64>> {
    SampleWeights::new(ndarray::Array1::from_vec(read_indexed_csv(path.as_ref())?))
}

/// Writes per-query scores as `index,value` CSV.
pub fn write_scores(path: impl AsRef<Path>, scores: &[f64]) -> Result<()> {
    write_indexed_csv(path.as_ref(), scores.iter().copied())
}

/// Reads per-query scores.
pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_indexed_csv(path.as_ref())
}

/// Writes sampled indices as `draw,index` CSV.
pub fn write_indices(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| HbError::io(path, e))?);
    writeln!(out, "draw,index").map_err(|e| HbError::io(path, e))?;
    for (k, &i) in indices.iter().enumerate() {
        writeln!(out, "{k},{i}").map_err(|e| HbError::io(path, e))?;
    }
    out.flush().map_err(|e| HbError::io(path, e))
}

/// Writes the metrics JSON with 17-significant-digit decimal floats.
pub fn write_metrics(path: impl AsRef<Path>, metrics: &OodMetrics) -> Result<()> {
    let path = path.as_ref();
    let body = format!(
        "{{\"fpr95\":{},\"auroc\":{},\"gamma\":{}}}\n",
        fmt_f64(metrics.fpr95),
        fmt_f64(metrics.auroc),
        fmt_f64(metrics.gamma)
    );
    std::fs::write(path, body).map_err(|e| HbError::io(path, e))
}

/// Parses a metrics JSON file back.
pub fn read_metrics(path: impl AsRef<Path>) -> Result<OodMetrics> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| HbError::io(path, e))?;
    serde_json::from_str(&body).map_err(|e| HbError::format(path, format!("bad-json: {e}")))
}

/// Writes a grid and per-point values as CSV (`c0,...,c{d-1},value`).
pub fn write_field_csv(
    path: impl AsRef<Path>,
    grid: &QueryBatch<f64>,
    values: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    if grid.len() != values.len() {
        return Err(HbError::DimensionMismatch {
            context: "field csv",
            left: grid.len(),
            right: values.len(),
        });
    }
    let mut out = BufWriter::new(File::create(path).map_err(|e| HbError::io(path, e))?);
    let coord_header: Vec<String> = (0..grid.dim()).map(|j| format!("c{j}")).collect();
    writeln!(out, "{},value", coord_header.join(","))
        .map_err(|e| HbError::io(path, e))?;
    for i in 0..grid.len() {
        let coords: Vec<String> = grid.column(i).iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{},{}", coords.join(","), fmt_f64(values[i]))
            .map_err(|e| HbError::io(path, e))?;
    }
    out.flush().map_err(|e| HbError::io(path, e))
}

/// Writes a trajectory as a directory: `manifest.json` plus one CSV per
/// snapshot (`role,index,sampled_count,weight,c0,...`).
pub fn write_trajectory(dir: impl AsRef<Path>, trajectory: &ToyTrajectory) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| HbError::io(dir, e))?;
    let mut manifest_snapshots = Vec::new();
    for snap in &trajectory.snapshots {
        let file_name = format!("snapshot_{:06}.csv", snap.step);
        let path = dir.join(&file_name);
        let mut out = BufWriter::new(File::create(&path).map_err(|e| HbError::io(&path, e))?);
        let d = snap.id_patterns.nrows();
        let coord_header: Vec<String> = (0..d).map(|j| format!("c{j}")).collect();
        writeln!(out, "role,index,sampled_count,weight,{}", coord_header.join(","))
            .map_err(|e| HbError::io(&path, e))?;
        let mut write_side = |role: &str,
                              patterns: &ndarray::Array2<f64>,
                              sampled: &[usize],
                              weights: Option<&ndarray::Array1<f64>>|
         -> Result<()> {
            for i in 0..patterns.ncols() {
                let count = sampled.iter().filter(|&&k| k == i).count();
                let w = weights.map(|w| w[i]).unwrap_or(0.0);
                let coords: Vec<String> =
                    patterns.column(i).iter().map(|&v| fmt_f64(v)).collect();
                writeln!(out, "{role},{i},{count},{},{}", fmt_f64(w), coords.join(","))
                    .map_err(|e| HbError::io(&path, e))?;
            }
            Ok(())
        };
        write_side("id", &snap.id_patterns, &snap.id_indices, None)?;
        write_side(
            "aux",
            &snap.aux_patterns,
            &snap.aux_indices,
            Some(&snap.weights),
        )?;
        manifest_snapshots.push(serde_json::json!({
            "step": snap.step,
            "file": file_name,
            "l_ood": snap.l_ood,
            "ce": snap.ce,
        }));
    }
    let manifest = serde_json::json!({
        "config": trajectory.config,
        "enable_ce": trajectory.enable_ce,
        "snapshots": manifest_snapshots,
    });
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| HbError::format(&path, format!("bad-json: {e}")))?;
    std::fs::write(&path, body + "\n").map_err(|e| HbError::io(&path, e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToyConfig {
    beta: Option<f64>,
    lambda: Option<f64>,
    lr: Option<f64>,
    lr_growth: Option<f64>,
    steps: Option<usize>,
    resample_every: Option<usize>,
    batch_n: Option<usize>,
    record_every: Option<usize>,
    seed: Option<u64>,
    geometry: Option<crate::config::Geometry>,
}

/// Parses a flat JSON run config; missing keys take the defaults
/// (`beta = 4`, `lambda = 0.5`, `resample_every = 50`, ...), unknown keys
/// and out-of-range values are rejected.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ToyConfig> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| HbError::io(path, e))?;
    let raw: RawToyConfig = serde_json::from_str(&body)
        .map_err(|e| HbError::config(path, format!("{e}")))?;
    let defaults = ToyConfig::default();
    let cfg = ToyConfig {
        beta: raw.beta.unwrap_or(defaults.beta),
        lambda: raw.lambda.unwrap_or(defaults.lambda),
        lr: raw.lr.unwrap_or(defaults.lr),
        lr_growth: raw.lr_growth.unwrap_or(defaults.lr_growth),
        steps: raw.steps.unwrap_or(defaults.steps),
        resample_every: raw.resample_every.unwrap_or(defaults.resample_every),
        batch_n: raw.batch_n.unwrap_or(defaults.batch_n),
        record_every: raw.record_every.unwrap_or(defaults.record_every),
        seed: raw.seed.unwrap_or(defaults.seed),
        geometry: raw.geometry.unwrap_or(defaults.geometry),
    };
    cfg.validate()
        .map_err(|e| HbError::config(path, e.to_string()))?;
    Ok(cfg)
}
