//! One function per subcommand, operating on a run directory.

use anyhow::{ensure, Context, Result};
use log::info;

use geochart_core::chart::Method;
use geochart_core::eval::EvalReport;
use geochart_core::graph::{pairwise_matrix, MatrixKind};

use crate::config::PipelineConfig;
use crate::io;
use crate::pipeline::{
    cross_distances, evaluate_method, fit_method, geodesics, load_tensors, positions, simulate_split, stage, tensors,
    window_width, with_run, Fitted, Layout, Split,
};
use crate::study::{run_study, StudyReport};

pub fn simulate(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "simulate", |run| {
        let env = stage(run, "environment", || cfg.environment.resolve(None))?;
        stage(run, "simulate", || {
            for split in Split::BOTH {
                let ds = simulate_split(cfg, &env, split)?;
                io::save_dataset(&layout.dataset(split), &ds)?;
                info!("{} split: {} snapshots", split.as_str(), ds.len());
            }
            Ok(())
        })
    })
}

pub fn distances(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "distances", |run| {
        stage(run, "distances", || {
            let dir = layout.dataset(Split::Train);
            let ds = io::load_dataset(&dir)?;
            let d = pairwise_matrix(&tensors(&ds, window_width(cfg, &ds))?)?;
            io::save_matrix(&layout.matrices(), &d, None, Some(io::dataset_hash(&dir)?))?;
            Ok(())
        })
    })
}

pub fn geodesic(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "geodesic", |run| {
        stage(run, "geodesic", || {
            let (d_pw, meta) = io::load_matrix(&layout.matrices(), MatrixKind::Pairwise)?;
            let d = geodesics(&d_pw, cfg.graph.k)?;
            io::save_matrix(&layout.matrices(), &d, Some(cfg.graph.k), meta.dataset_hash)?;
            Ok(())
        })
    })
}

pub fn train(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "train", |run| {
        stage(run, "siamese_geo/fit", || {
            let dir = layout.dataset(Split::Train);
            let ds = io::load_dataset(&dir)?;
            let width = window_width(cfg, &ds);
            let t = tensors(&ds, width)?;
            let (d_geo, meta) = io::load_matrix(&layout.matrices(), MatrixKind::Geodesic)?;
            check_hash(meta.dataset_hash.as_deref(), &io::dataset_hash(&dir)?)?;
            let (d_pw, _) = io::load_matrix(&layout.matrices(), MatrixKind::Pairwise)?;
            if let Fitted::Encoder(p) = fit_method(Method::SiameseGeo, cfg, &t, &d_pw, &d_geo)? {
                io::save_encoder(&layout.encoder(), &p, ds.n_stations(), width)?;
            }
            Ok(())
        })
    })
}

fn check_hash(stored: Option<&str>, actual: &str) -> Result<()> {
    if let Some(h) = stored {
        ensure!(h == actual, "distance matrices were computed from a different training dataset");
    }
    Ok(())
}

/// Charts for both splits of every configured method. The Siamese encoder is
/// read from disk when present and trained otherwise.
pub fn embed(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "embed", |run| {
        let (_, _, width, train_t, test_t) = stage(run, "preprocess", || load_tensors(&layout, cfg))?;
        let (d_pw, _) = io::load_matrix(&layout.matrices(), MatrixKind::Pairwise)?;
        let (d_geo, _) = io::load_matrix(&layout.matrices(), MatrixKind::Geodesic)?;
        let cross = if cfg.methods.iter().any(|m| !m.is_parametric()) {
            Some(stage(run, "cross_distances", || cross_distances(&test_t, &train_t))?)
        } else {
            None
        };
        for &method in &cfg.methods {
            let name = method.as_str();
            let fitted = stage(run, &format!("{name}/fit"), || {
                if method == Method::SiameseGeo && layout.encoder().join("encoder.json").exists() {
                    let (p, header) = io::load_encoder(&layout.encoder())?;
                    ensure!(header.window == width, "encoder expects window {} but the data aligns to {width}", header.window);
                    return Ok(Fitted::Encoder(p));
                }
                let f = fit_method(method, cfg, &train_t, &d_pw, &d_geo)?;
                if let Fitted::Encoder(p) = &f {
                    io::save_encoder(&layout.encoder(), p, train_t[0].n_stations, width)?;
                }
                Ok(f)
            })?;
            stage(run, &format!("{name}/embed"), || {
                for (split, t, c) in [(Split::Train, &train_t, None), (Split::Test, &test_t, cross.as_deref())] {
                    let chart = fitted.chart(t, c, cfg.eval.out_of_sample_k)?;
                    ensure!(chart.is_finite(), "{name} produced non-finite chart points");
                    let hash = io::dataset_hash(&layout.dataset(split))?;
                    io::save_chart(&layout.chart(method, split), &chart, Some(hash))?;
                }
                Ok(())
            })?;
        }
        Ok(())
    })
}

/// Score stored charts and write `results.csv`, `reports.json` and the
/// scatter files.
pub fn evaluate(cfg: &PipelineConfig) -> Result<Vec<EvalReport>> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "evaluate", |run| {
        let (train_ds, test_ds, _, _, test_t) = stage(run, "preprocess", || load_tensors(&layout, cfg))?;
        let (d_pw, _) = io::load_matrix(&layout.matrices(), MatrixKind::Pairwise)?;
        let d_pw_test = stage(run, "test_distances", || Ok(pairwise_matrix(&test_t)?))?;
        let truth = [positions(&train_ds), positions(&test_ds)];
        let mut reports = Vec::new();
        for &method in &cfg.methods {
            let name = method.as_str();
            let r = stage(run, &format!("{name}/evaluate"), || {
                let charts = Split::BOTH.map(|s| io::load_chart(&layout.chart(method, s)));
                let [train_c, test_c] = charts;
                let (train_c, test_c) = (train_c?, test_c?);
                for (s, c) in Split::BOTH.iter().zip([&train_c, &test_c]) {
                    io::write_scatter(&layout.chart(method, *s).join("scatter.csv"), &c.points, &truth[s.index_usize()])?;
                }
                evaluate_method(cfg, method, [&train_c, &test_c], [&truth[0], &truth[1]], [&d_pw, &d_pw_test])
                    .with_context(|| format!("scoring {name}"))
            })?;
            reports.extend(r);
        }
        stage(run, "report", || {
            crate::pipeline::write_results(&layout.results(), &reports)?;
            io::write_json(&cfg.out.join("reports.json"), &reports)
        })?;
        Ok(reports)
    })
}

/// Correlation study of the training dataset under `cfg.out`, simulated first
/// when absent. Results go to `<out>/study`.
pub fn study(cfg: &PipelineConfig) -> Result<StudyReport> {
    let layout = Layout::new(&cfg.out);
    with_run(cfg, "study", |run| {
        let dir = layout.dataset(Split::Train);
        let ds = if dir.join("meta.json").exists() {
            io::load_dataset(&dir)?
        } else {
            let env = stage(run, "environment", || cfg.environment.resolve(None))?;
            stage(run, "simulate", || {
                let ds = simulate_split(cfg, &env, Split::Train)?;
                io::save_dataset(&dir, &ds)?;
                Ok(ds)
            })?
        };
        stage(run, "study", || run_study(&ds, cfg, &cfg.out.join("study")))
    })
}
