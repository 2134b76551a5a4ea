//! Pipeline stages and the end-to-end run.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use log::info;

use geochart_core::chart::{
    embed_dataset, extend_out_of_sample, mds_embed, sammon_embed, train, EncoderParams, Embedding, Method, PcaModel,
};
use geochart_core::csi::{cir_distance, preprocess, required_width, AlignedTensor};
use geochart_core::eval::{default_k, evaluate, fit_affine, EvalReport};
use geochart_core::graph::{geodesic_matrix, knn_graph, pairwise_matrix, DistanceMatrix};
use geochart_core::rng::{self, Purpose};
use geochart_core::sim::{generate_dataset, generate_trajectory, Dataset, EnvironmentSpec};

use crate::config::PipelineConfig;
use crate::io;
use crate::rundir::RunDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub const BOTH: [Split; 2] = [Split::Train, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn index_usize(self) -> usize {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }

    fn index(self) -> u64 {
        self.index_usize() as u64
    }
}

/// Layout of a run directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn dataset(&self, split: Split) -> PathBuf {
        self.root.join("data").join(split.as_str())
    }

    pub fn matrices(&self) -> PathBuf {
        self.root.join("matrices")
    }

    pub fn encoder(&self) -> PathBuf {
        self.root.join(Method::SiameseGeo.as_str()).join("encoder")
    }

    pub fn chart(&self, method: Method, split: Split) -> PathBuf {
        self.root.join(method.as_str()).join(split.as_str())
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results.csv")
    }
}

/// Simulate the trajectory and snapshots of one split.
pub fn simulate_split(cfg: &PipelineConfig, env: &EnvironmentSpec, split: Split) -> Result<Dataset> {
    let spec = match split {
        Split::Train => &cfg.train_trajectory,
        Split::Test => &cfg.test_trajectory,
    };
    let mut traj_rng = rng::stream(cfg.seed, Purpose::Trajectory, split.index());
    let trajectory = generate_trajectory(env, spec, &mut traj_rng)?;
    let data_seed = rng::mix(cfg.seed ^ rng::mix(0x5eed_0000 + split.index()));
    Ok(generate_dataset(env, &cfg.radio, &trajectory, data_seed)?)
}

/// Tensor width: the widest aligned training snapshot plus headroom.
pub fn window_width(cfg: &PipelineConfig, train: &Dataset) -> usize {
    required_width(&train.snapshots, train.radio.sample_rate) + cfg.window_headroom
}

pub fn tensors(ds: &Dataset, width: usize) -> Result<Vec<AlignedTensor>> {
    ds.snapshots
        .iter()
        .map(|s| preprocess(s, &ds.radio, width).with_context(|| format!("aligning snapshot {}", s.index)))
        .collect()
}

pub fn geodesics(d_pw: &DistanceMatrix, k: usize) -> Result<DistanceMatrix> {
    let g = knn_graph(d_pw, k)?;
    Ok(geodesic_matrix(&g)?)
}

/// Row-major `[new, train]` CIR distances.
pub fn cross_distances(new: &[AlignedTensor], train: &[AlignedTensor]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(new.len() * train.len());
    for a in new {
        for b in train {
            out.push(cir_distance(a, b)?);
        }
    }
    Ok(out)
}

/// A chart method fitted on the training split.
#[derive(Debug, Clone)]
pub enum Fitted {
    Encoder(EncoderParams),
    Pca(PcaModel),
    /// Non-parametric chart of the training points.
    Transductive(Embedding),
}

pub fn fit_method(
    method: Method,
    cfg: &PipelineConfig,
    train_tensors: &[AlignedTensor],
    d_pw: &DistanceMatrix,
    d_geo: &DistanceMatrix,
) -> Result<Fitted> {
    Ok(match method {
        Method::SiameseGeo => {
            let out = train(train_tensors, d_geo, &cfg.train)?;
            info!(
                "siamese_geo: {} epochs, final loss {:.4}{}",
                out.loss_history.len(),
                out.loss_history.last().copied().unwrap_or(f64::NAN),
                if out.stopped_early { " (early stop)" } else { "" }
            );
            Fitted::Encoder(out.params)
        }
        Method::Pca => {
            let rows: Vec<&[f64]> = train_tensors.iter().map(|t| t.values.as_slice()).collect();
            Fitted::Pca(PcaModel::fit(&rows)?)
        }
        Method::IsomapMds => {
            let out = mds_embed(d_geo, &cfg.mds);
            info!("isomap_mds: {} iterations", out.stress_history.len());
            Fitted::Transductive(out.embedding)
        }
        Method::Sammon => {
            let out = sammon_embed(d_pw, &cfg.sammon);
            info!("sammon: {} iterations", out.stress_history.len());
            Fitted::Transductive(out.embedding)
        }
    })
}

impl Fitted {
    /// Chart of `tensors`; `cross` supplies distances to the training set for
    /// non-parametric charts.
    pub fn chart(&self, tensors: &[AlignedTensor], cross: Option<&[f64]>, oos_k: usize) -> Result<Embedding> {
        Ok(match self {
            Fitted::Encoder(p) => embed_dataset(p, tensors)?,
            Fitted::Pca(m) => m.embed(tensors)?,
            Fitted::Transductive(e) => match cross {
                None => e.clone(),
                Some(c) => extend_out_of_sample(e, c, oos_k)?,
            },
        })
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub root: PathBuf,
    pub reports: Vec<EvalReport>,
    pub width: usize,
}

fn xy(ds: &Dataset) -> Vec<[f64; 2]> {
    ds.positions().iter().map(|p| [p.x, p.y]).collect()
}

/// Score both splits of one method; the affine map is fitted on the
/// training split only.
pub fn evaluate_method(
    cfg: &PipelineConfig,
    method: Method,
    charts: [&Embedding; 2],
    truth: [&[[f64; 2]]; 2],
    originals: [&DistanceMatrix; 2],
) -> Result<Vec<EvalReport>> {
    let transform = fit_affine(&charts[0].points, truth[0])?;
    Split::BOTH
        .iter()
        .enumerate()
        .map(|(s, split)| {
            let n = charts[s].points.len();
            let k = cfg.eval.k.unwrap_or_else(|| default_k(n));
            Ok(evaluate(method.as_str(), split.as_str(), &charts[s].points, truth[s], originals[s], &transform, k)?)
        })
        .collect()
}

pub fn write_results(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["method", "split", "ct", "tw", "mae", "ce90", "n", "k", "ct_gt", "tw_gt"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.method.clone(),
            r.split.clone(),
            format!("{:?}", r.ct),
            format!("{:?}", r.tw),
            format!("{:?}", r.mae),
            format!("{:?}", r.ce90),
            r.n.to_string(),
            r.k_neighbors.to_string(),
            opt(r.ct_gt),
            opt(r.tw_gt),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn stage<T>(run: &mut RunDir, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    info!("stage {name}");
    run.enter(name);
    f().with_context(|| format!("stage {name} failed"))
}

/// Run every stage and write the run directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    with_run(cfg, "pipeline", |run| run_stages(cfg, run))
}

/// Hold the run-directory lock while `f` runs and record the outcome.
pub fn with_run<T>(cfg: &PipelineConfig, command: &str, f: impl FnOnce(&mut RunDir) -> Result<T>) -> Result<T> {
    cfg.validate()?;
    let mut run = RunDir::acquire(&cfg.out, command, cfg)?;
    let result = f(&mut run);
    match &result {
        Ok(_) => run.finish()?,
        Err(e) => run.fail(e)?,
    }
    result
}

fn run_stages(cfg: &PipelineConfig, run: &mut RunDir) -> Result<PipelineOutput> {
    let layout = Layout::new(&cfg.out);
    let env = stage(run, "environment", || cfg.environment.resolve(None))?;
    let data = stage(run, "simulate", || {
        let mut out = Vec::new();
        for split in Split::BOTH {
            let ds = simulate_split(cfg, &env, split)?;
            io::save_dataset(&layout.dataset(split), &ds)?;
            out.push(ds);
        }
        Ok(out)
    })?;
    let (train_ds, test_ds) = (&data[0], &data[1]);
    let width = window_width(cfg, train_ds);
    let (train_t, test_t) = stage(run, "preprocess", || Ok((tensors(train_ds, width)?, tensors(test_ds, width)?)))?;
    let train_hash = io::dataset_hash(&layout.dataset(Split::Train))?;
    let d_pw = stage(run, "distances", || {
        let d = pairwise_matrix(&train_t)?;
        io::save_matrix(&layout.matrices(), &d, None, Some(train_hash.clone()))?;
        Ok(d)
    })?;
    let d_geo = stage(run, "geodesic", || {
        let d = geodesics(&d_pw, cfg.graph.k)?;
        io::save_matrix(&layout.matrices(), &d, Some(cfg.graph.k), Some(train_hash.clone()))?;
        Ok(d)
    })?;
    let d_pw_test = stage(run, "test_distances", || Ok(pairwise_matrix(&test_t)?))?;
    let cross = if cfg.methods.iter().any(|m| !m.is_parametric()) {
        Some(stage(run, "cross_distances", || cross_distances(&test_t, &train_t))?)
    } else {
        None
    };
    let truth = [xy(train_ds), xy(test_ds)];
    let mut reports = Vec::new();
    for &method in &cfg.methods {
        let name = method.as_str();
        let fitted = stage(run, &format!("{name}/fit"), || fit_method(method, cfg, &train_t, &d_pw, &d_geo))?;
        if let Fitted::Encoder(p) = &fitted {
            io::save_encoder(&layout.encoder(), p, train_t[0].n_stations, width)?;
        }
        let charts = stage(run, &format!("{name}/embed"), || {
            let train_chart = fitted.chart(&train_t, None, cfg.eval.out_of_sample_k)?;
            let test_chart = fitted.chart(&test_t, cross.as_deref(), cfg.eval.out_of_sample_k)?;
            ensure!(train_chart.is_finite() && test_chart.is_finite(), "{name} produced non-finite chart points");
            Ok([train_chart, test_chart])
        })?;
        let method_reports = stage(run, &format!("{name}/evaluate"), || {
            evaluate_method(cfg, method, [&charts[0], &charts[1]], [&truth[0], &truth[1]], [&d_pw, &d_pw_test])
        })?;
        for (s, split) in Split::BOTH.iter().enumerate() {
            let dir = layout.chart(method, *split);
            let hash = io::dataset_hash(&layout.dataset(*split))?;
            io::save_chart(&dir, &charts[s], Some(hash))?;
            io::write_scatter(&dir.join("scatter.csv"), &charts[s].points, &truth[s])?;
            let r = &method_reports[s];
            info!("{name} {}: CT {:.4} TW {:.4} MAE {:.3} m CE90 {:.3} m", r.split, r.ct, r.tw, r.mae, r.ce90);
        }
        reports.extend(method_reports);
    }
    stage(run, "report", || {
        write_results(&layout.results(), &reports)?;
        io::write_json(&cfg.out.join("reports.json"), &reports)
    })?;
    Ok(PipelineOutput { root: cfg.out.clone(), reports, width })
}

/// Load both datasets of a run directory and align them to a common width.
pub fn load_tensors(layout: &Layout, cfg: &PipelineConfig) -> Result<(Dataset, Dataset, usize, Vec<AlignedTensor>, Vec<AlignedTensor>)> {
    let train_ds = io::load_dataset(&layout.dataset(Split::Train))?;
    let test_ds = io::load_dataset(&layout.dataset(Split::Test))?;
    let width = window_width(cfg, &train_ds);
    let train_t = tensors(&train_ds, width)?;
    let test_t = tensors(&test_ds, width)?;
    Ok((train_ds, test_ds, width, train_t, test_t))
}

/// Ground-truth positions of a dataset as `[x, y]`.
pub fn positions(ds: &Dataset) -> Vec<[f64; 2]> {
    xy(ds)
}
