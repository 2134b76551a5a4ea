//! ToA-aligned CIR tensors and the local CIR distances.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::math;
use crate::sim::{CirSnapshot, MeasurementMode, MpcList, RadioConfig};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Station CIRs placed on a shared time axis.
///
/// Row `k` holds station `k`'s stored window shifted right by its rounded
/// measured ToA, so column `c` sits at `window_origin + c / sample_rate`
/// relative to the (unknown) transmit or reference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedTensor {
    /// Row-major `[n_stations, width]`.
    pub values: Vec<f64>,
    pub n_stations: usize,
    pub width: usize,
    pub sample_rate: f64,
    pub window_origin: f64,
}

impl AlignedTensor {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_stations, self.width)
    }
}

/// Column offset of a stored row for a measured ToA.
pub fn shift_samples(toa: f64, sample_rate: f64) -> usize {
    math::round(toa * sample_rate).max(0.0) as usize
}

/// Smallest tensor width holding every snapshot without truncation.
pub fn required_width<'a>(snapshots: impl IntoIterator<Item = &'a CirSnapshot>, sample_rate: f64) -> usize {
    snapshots
        .into_iter()
        .map(|s| {
            let shift = s.measured_toa.iter().flatten().map(|&t| shift_samples(t, sample_rate)).max().unwrap_or(0);
            s.cir_length + shift
        })
        .max()
        .unwrap_or(0)
}

pub fn preprocess(snapshot: &CirSnapshot, radio: &RadioConfig, width: usize) -> Result<AlignedTensor> {
    let (n_b, t) = (snapshot.n_stations, snapshot.cir_length);
    if snapshot.cirs.len() != n_b * t || snapshot.measured_toa.len() != n_b {
        return Err(Error::ShapeMismatch(alloc::format!(
            "snapshot {} has {} samples and {} ToAs for {n_b} stations of length {t}",
            snapshot.index,
            snapshot.cirs.len(),
            snapshot.measured_toa.len()
        )));
    }
    let mut values = vec![0.0; n_b * width];
    for k in 0..n_b {
        let Some(toa) = snapshot.measured_toa[k] else { continue };
        let shift = shift_samples(toa, radio.sample_rate);
        if shift + t > width {
            return Err(Error::WindowTooShort { station: k, required: shift + t, available: width });
        }
        let dst = &mut values[k * width + shift..k * width + shift + t];
        for (d, &s) in dst.iter_mut().zip(snapshot.row(k)) {
            *d = f64::from(s);
        }
    }
    Ok(AlignedTensor {
        values,
        n_stations: n_b,
        width,
        sample_rate: radio.sample_rate,
        window_origin: -(radio.lead_samples as f64) / radio.sample_rate,
    })
}

/// Sum over stations and time of the absolute magnitude difference.
pub fn cir_distance(a: &AlignedTensor, b: &AlignedTensor) -> Result<f64> {
    if a.shape() != b.shape() || a.sample_rate != b.sample_rate {
        return Err(Error::ShapeMismatch(alloc::format!(
            "tensor shapes {:?} @ {} Hz and {:?} @ {} Hz differ",
            a.shape(),
            a.sample_rate,
            b.shape(),
            b.sample_rate
        )));
    }
    Ok(math::l1_distance(&a.values, &b.values))
}

/// Delay-domain distance between two positions from their true MPC delays,
/// in seconds. Paths are paired by sorted index per station.
///
/// In TDoA mode every delay is taken relative to the earliest first arrival
/// of its own position (lowest station index on ties).
pub fn true_delay_distance(a: &[MpcList], b: &[MpcList], mode: MeasurementMode) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(alloc::format!("{} vs {} stations", a.len(), b.len())));
    }
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        if x.is_empty() || y.is_empty() {
            return Err(Error::EmptyMpcList { station: k });
        }
    }
    let (ra, rb) = match mode {
        MeasurementMode::Tof => (0.0, 0.0),
        MeasurementMode::Tdoa => (earliest(a), earliest(b)),
    };
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.delays().zip(y.delays()) {
            sum += math::abs((p - ra) - (q - rb));
        }
    }
    Ok(sum)
}

fn earliest(lists: &[MpcList]) -> f64 {
    lists.iter().filter_map(MpcList::first_delay).fold(f64::INFINITY, f64::min)
}

/// Orthogonal timing error between two positions seen from one station, in
/// seconds: `sqrt((d / c)² − Δt²)` with `Δt` the difference of the LoS
/// delays. Zero when the move is radial, `d / c` when it is tangential.
pub fn delay_error(xi: Point2, xj: Point2, station: Point2) -> f64 {
    let d = xi.distance(xj) / SPEED_OF_LIGHT;
    let dt = (xi.distance(station) - xj.distance(station)) / SPEED_OF_LIGHT;
    math::sqrt((d * d - dt * dt).max(0.0))
}
