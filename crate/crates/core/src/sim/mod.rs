//! Radio environment simulation.
//!
//! A 2-D room with reflective walls, LoS blockers and base stations. Multipath
//! components come from the image-source method; each station's CIR is the
//! band-limited superposition of its components plus complex noise.

mod cir;
mod dataset;
mod env;
mod propagation;
mod radio;
mod trajectory;

pub use cir::{simulate_cir, SimulatedCir};
pub use dataset::{generate_dataset, CirSnapshot, Dataset};
pub use env::{BaseStation, EnvironmentSpec, Wall};
pub use propagation::{image_sources, mpcs_from_paths, multipath, ImageSource, Mpc, MpcList, PathGeometry, Tracer};
pub use radio::{MeasurementMode, RadioConfig};
pub use trajectory::{generate_trajectory, TrajectoryPoint, TrajectorySpec, MIN_CLEARANCE};
