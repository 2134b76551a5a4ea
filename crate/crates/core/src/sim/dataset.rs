use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::math;
use crate::rng::{self, Purpose};
use crate::sim::{mpcs_from_paths, simulate_cir, EnvironmentSpec, MeasurementMode, MpcList, RadioConfig, TrajectoryPoint, Tracer};
use crate::{Error, Result};

/// One measurement burst over all stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirSnapshot {
    pub index: usize,
    /// Ground truth, used for evaluation only.
    pub position: Point2,
    /// Row-major `[n_stations, cir_length]` magnitudes.
    pub cirs: Vec<f32>,
    pub n_stations: usize,
    pub cir_length: usize,
    /// ToF or TDoA per station, seconds; `None` when the station sees no path.
    pub measured_toa: Vec<Option<f64>>,
    pub timestamp: f64,
}

impl CirSnapshot {
    pub fn row(&self, station: usize) -> &[f32] {
        &self.cirs[station * self.cir_length..(station + 1) * self.cir_length]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub environment: EnvironmentSpec,
    pub radio: RadioConfig,
    pub snapshots: Vec<CirSnapshot>,
    pub rng_seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_stations(&self) -> usize {
        self.environment.base_stations.len()
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.snapshots.iter().map(|s| s.position).collect()
    }
}

/// Simulate one snapshot per trajectory point.
///
/// Each stored CIR is a receiver window starting `lead_samples` before the
/// (rounded) true first arrival; components arriving after the window are
/// dropped. Snapshot `i` draws from its own stream `(seed, i)` so the result
/// does not depend on evaluation order.
pub fn generate_dataset(env: &EnvironmentSpec, radio: &RadioConfig, trajectory: &[TrajectoryPoint], seed: u64) -> Result<Dataset> {
    env.validate()?;
    radio.validate(env)?;
    if trajectory.is_empty() {
        return Err(Error::Trajectory("trajectory is empty".into()));
    }
    if trajectory.windows(2).any(|w| !(w[1].timestamp > w[0].timestamp)) {
        return Err(Error::Trajectory("timestamps must be strictly increasing".into()));
    }
    let tracer = Tracer::new(env, radio.max_reflection_order)?;
    let snapshots = trajectory
        .iter()
        .enumerate()
        .map(|(i, p)| snapshot(&tracer, radio, i, p, seed).map_err(|e| Error::Snapshot { index: i, source: Box::new(e) }))
        .collect::<Result<_>>()?;
    Ok(Dataset { environment: env.clone(), radio: radio.clone(), snapshots, rng_seed: seed })
}

fn snapshot(tracer: &Tracer<'_>, radio: &RadioConfig, index: usize, point: &TrajectoryPoint, seed: u64) -> Result<CirSnapshot> {
    let env = tracer.environment();
    let pos = point.position;
    if !env.bounds.contains(pos) || !pos.is_finite() {
        return Err(Error::OutOfBounds { x: pos.x, y: pos.y });
    }
    let n_b = env.base_stations.len();
    let t = radio.cir_length;
    let fs = radio.sample_rate;
    let mut rng = rng::stream(seed, Purpose::Snapshot, index as u64);
    let mut cirs = vec![0f32; n_b * t];
    let mut toa = vec![None; n_b];
    for k in 0..n_b {
        let mpcs = mpcs_from_paths(&tracer.paths(k, pos), radio, &mut rng);
        let Some(first) = mpcs.first_delay() else { continue };
        let origin = (math::round(first * fs) - radio.lead_samples as f64) / fs;
        let end = origin + t as f64 / fs;
        let visible = MpcList { paths: mpcs.paths.into_iter().take_while(|m| m.delay < end).collect() };
        let cir = simulate_cir(&visible, radio, origin, &mut rng)?;
        let peak = cir.magnitudes.iter().copied().fold(0.0, f64::max);
        let scale = if radio.normalize_peak && peak > 0.0 { 1.0 / peak } else { 1.0 };
        for (dst, m) in cirs[k * t..(k + 1) * t].iter_mut().zip(&cir.magnitudes) {
            *dst = (m * scale) as f32;
        }
        // A ranging receiver never reports a negative flight time.
        toa[k] = cir.first_path_toa.map(|v| v.max(0.0));
    }
    if radio.mode == MeasurementMode::Tdoa {
        to_tdoa(&mut toa);
    }
    Ok(CirSnapshot { index, position: pos, cirs, n_stations: n_b, cir_length: t, measured_toa: toa, timestamp: point.timestamp })
}

/// Replace ToFs by differences to the earliest station (lowest index on
/// ties). The reference becomes exactly zero.
fn to_tdoa(toa: &mut [Option<f64>]) {
    let mut reference: Option<(usize, f64)> = None;
    for (k, v) in toa.iter().enumerate() {
        if let Some(v) = *v {
            if reference.is_none_or(|(_, r)| v < r) {
                reference = Some((k, v));
            }
        }
    }
    let Some((r, base)) = reference else { return };
    for (k, v) in toa.iter_mut().enumerate() {
        if let Some(v) = v.as_mut() {
            *v = if k == r { 0.0 } else { *v - base };
        }
    }
}
