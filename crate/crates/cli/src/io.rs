//! On-disk formats for datasets, matrices, encoders and charts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use geochart_core::chart::{EncoderParams, Embedding, Method};
use geochart_core::geom::Point2;
use geochart_core::graph::{DistanceMatrix, MatrixKind};
use geochart_core::sim::{CirSnapshot, Dataset, EnvironmentSpec, MeasurementMode, RadioConfig};

pub const FORMAT_VERSION: u32 = 1;

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    write(path, &f64_bytes(values))
}

pub fn read_f64(path: &Path) -> Result<Vec<f64>> {
    let bytes = read(path)?;
    ensure!(bytes.len() % 8 == 0, "{} is not a whole number of f64 values", path.display());
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn write_f32(path: &Path, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    write(path, &bytes)
}

pub fn read_f32(path: &Path) -> Result<Vec<f32>> {
    let bytes = read(path)?;
    ensure!(bytes.len() % 4 == 0, "{} is not a whole number of f32 values", path.display());
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub environment: EnvironmentSpec,
    pub radio: RadioConfig,
    pub seed: u64,
    pub n: usize,
    pub n_stations: usize,
    pub cir_length: usize,
    pub mode: MeasurementMode,
}

const DATASET_FILES: [&str; 5] = ["meta.json", "cirs.f32", "toa.f64", "pos.f64", "ts.f64"];

pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let n_b = ds.n_stations();
    let t = ds.radio.cir_length;
    let meta = DatasetMeta {
        format_version: FORMAT_VERSION,
        environment: ds.environment.clone(),
        radio: ds.radio.clone(),
        seed: ds.rng_seed,
        n: ds.len(),
        n_stations: n_b,
        cir_length: t,
        mode: ds.radio.mode,
    };
    write_json(&dir.join("meta.json"), &meta)?;
    let cirs: Vec<f32> = ds.snapshots.iter().flat_map(|s| s.cirs.iter().copied()).collect();
    write_f32(&dir.join("cirs.f32"), &cirs)?;
    let toa: Vec<f64> = ds.snapshots.iter().flat_map(|s| s.measured_toa.iter().map(|t| t.unwrap_or(f64::NAN))).collect();
    write_f64(&dir.join("toa.f64"), &toa)?;
    let pos: Vec<f64> = ds.snapshots.iter().flat_map(|s| [s.position.x, s.position.y]).collect();
    write_f64(&dir.join("pos.f64"), &pos)?;
    let ts: Vec<f64> = ds.snapshots.iter().map(|s| s.timestamp).collect();
    write_f64(&dir.join("ts.f64"), &ts)?;
    let summary = format!(
        "snapshots (N): {}\nbase stations (N_b): {}\nCIR length (T): {}\nbandwidth: {} MHz\nsample rate: {} MHz\nmode: {}\nmax reflection order: {}\nCIR noise std: {}\nToA noise std: {} ns\nseed: {}\n",
        ds.len(),
        n_b,
        t,
        ds.radio.bandwidth / 1e6,
        ds.radio.sample_rate / 1e6,
        mode_name(ds.radio.mode),
        ds.radio.max_reflection_order,
        ds.radio.noise_std,
        ds.radio.toa_noise_std * 1e9,
        ds.rng_seed,
    );
    write(&dir.join("summary.txt"), summary.as_bytes())
}

pub fn mode_name(mode: MeasurementMode) -> &'static str {
    match mode {
        MeasurementMode::Tof => "tof",
        MeasurementMode::Tdoa => "tdoa",
    }
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta: DatasetMeta = read_json(&dir.join("meta.json"))?;
    ensure!(meta.format_version == FORMAT_VERSION, "unsupported dataset format {}", meta.format_version);
    let (n, n_b, t) = (meta.n, meta.n_stations, meta.cir_length);
    let cirs = read_f32(&dir.join("cirs.f32"))?;
    let toa = read_f64(&dir.join("toa.f64"))?;
    let pos = read_f64(&dir.join("pos.f64"))?;
    let ts = read_f64(&dir.join("ts.f64"))?;
    ensure!(cirs.len() == n * n_b * t, "cirs.f32 holds {} values, expected {}", cirs.len(), n * n_b * t);
    ensure!(toa.len() == n * n_b && pos.len() == 2 * n && ts.len() == n, "dataset files disagree with meta.json");
    let snapshots = (0..n)
        .map(|i| CirSnapshot {
            index: i,
            position: Point2::new(pos[2 * i], pos[2 * i + 1]),
            cirs: cirs[i * n_b * t..(i + 1) * n_b * t].to_vec(),
            n_stations: n_b,
            cir_length: t,
            measured_toa: toa[i * n_b..(i + 1) * n_b].iter().map(|&v| (!v.is_nan()).then_some(v)).collect(),
            timestamp: ts[i],
        })
        .collect();
    Ok(Dataset { environment: meta.environment, radio: meta.radio, snapshots, rng_seed: meta.seed })
}

/// Content hash of a dataset directory.
pub fn dataset_hash(dir: &Path) -> Result<String> {
    let blobs = DATASET_FILES.iter().map(|f| read(&dir.join(f))).collect::<Result<Vec<_>>>()?;
    let parts: Vec<&[u8]> = blobs.iter().map(Vec::as_slice).collect();
    Ok(sha256_hex(&parts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub n: usize,
    pub kind: MatrixKind,
    pub k: Option<usize>,
    pub dataset_hash: Option<String>,
}

fn matrix_file(kind: MatrixKind) -> &'static str {
    match kind {
        MatrixKind::Pairwise => "dpw",
        MatrixKind::Geodesic => "dgeo",
        MatrixKind::Euclidean => "deuc",
    }
}

/// Write `dpw.f64` / `dgeo.f64` plus its `.json` sidecar into `dir`.
pub fn save_matrix(dir: &Path, m: &DistanceMatrix, k: Option<usize>, dataset_hash: Option<String>) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = matrix_file(m.kind);
    let path = dir.join(format!("{stem}.f64"));
    write_f64(&path, &m.values)?;
    write_json(&dir.join(format!("{stem}.json")), &MatrixMeta { n: m.n, kind: m.kind, k, dataset_hash })?;
    Ok(path)
}

pub fn load_matrix(dir: &Path, kind: MatrixKind) -> Result<(DistanceMatrix, MatrixMeta)> {
    let stem = matrix_file(kind);
    let meta: MatrixMeta = read_json(&dir.join(format!("{stem}.json")))?;
    let values = read_f64(&dir.join(format!("{stem}.f64")))?;
    ensure!(meta.kind == kind, "{} holds a {:?} matrix", dir.display(), meta.kind);
    ensure!(values.len() == meta.n * meta.n, "{stem}.f64 holds {} values for N = {}", values.len(), meta.n);
    Ok((DistanceMatrix { n: meta.n, values, kind }, meta))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderHeader {
    pub format_version: u32,
    pub sizes: Vec<usize>,
    pub hidden_activation: String,
    pub output_activation: String,
    pub input_scale: f64,
    pub output_scale: f64,
    /// Aligned tensor shape the encoder was trained on.
    pub n_stations: usize,
    pub window: usize,
    pub n_params: usize,
}

pub fn save_encoder(dir: &Path, p: &EncoderParams, n_stations: usize, window: usize) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let header = EncoderHeader {
        format_version: FORMAT_VERSION,
        sizes: p.sizes.clone(),
        hidden_activation: "relu".into(),
        output_activation: "identity".into(),
        input_scale: p.input_scale,
        output_scale: p.output_scale,
        n_stations,
        window,
        n_params: p.params.len(),
    };
    write_json(&dir.join("encoder.json"), &header)?;
    write_f64(&dir.join("weights.f64"), &p.params)
}

pub fn load_encoder(dir: &Path) -> Result<(EncoderParams, EncoderHeader)> {
    let h: EncoderHeader = read_json(&dir.join("encoder.json"))?;
    ensure!(h.format_version == FORMAT_VERSION, "unsupported encoder format {}", h.format_version);
    if h.hidden_activation != "relu" || h.output_activation != "identity" {
        bail!("unsupported activations {}/{}", h.hidden_activation, h.output_activation);
    }
    let params = read_f64(&dir.join("weights.f64"))?;
    let p = EncoderParams { sizes: h.sizes.clone(), params, input_scale: h.input_scale, output_scale: h.output_scale };
    p.validate()?;
    Ok((p, h))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartMeta {
    pub method: Method,
    pub n: usize,
    pub dataset_hash: Option<String>,
}

pub fn save_chart(dir: &Path, e: &Embedding, dataset_hash: Option<String>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let flat: Vec<f64> = e.points.iter().flat_map(|p| *p).collect();
    write_f64(&dir.join("chart.f64"), &flat)?;
    write_json(&dir.join("chart.json"), &ChartMeta { method: e.method, n: e.points.len(), dataset_hash })
}

pub fn load_chart(dir: &Path) -> Result<Embedding> {
    let meta: ChartMeta = read_json(&dir.join("chart.json"))?;
    let flat = read_f64(&dir.join("chart.f64"))?;
    ensure!(flat.len() == 2 * meta.n, "chart.f64 holds {} values for N = {}", flat.len(), meta.n);
    Ok(Embedding { points: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect(), method: meta.method })
}

/// `x,y,gt_x,gt_y` per point.
pub fn write_scatter(path: &Path, chart: &[[f64; 2]], gt: &[[f64; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["x", "y", "gt_x", "gt_y"])?;
    for (z, p) in chart.iter().zip(gt) {
        w.write_record([z[0].to_string(), z[1].to_string(), p[0].to_string(), p[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}
