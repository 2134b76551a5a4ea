//! Channel charting for multi-station SISO radio setups.
//!
//! The crate is `no_std` + `alloc`. It covers the whole numerical pipeline:
//!
//! - [`sim`]: 2-D image-source multipath simulation and labelled datasets,
//! - [`csi`]: the ToA-aligned CIR tensor and the local CIR distance,
//! - [`graph`]: pairwise distance matrices, k-NN graphs and geodesic distances,
//! - [`chart`]: the geodesic Siamese encoder and the PCA / MDS / Sammon baselines,
//! - [`eval`]: continuity, trustworthiness, affine registration and positioning errors.
//!
//! File formats, configuration and the command-line front end live in the
//! `geochart` companion crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod chart;
pub mod csi;
pub mod error;
pub mod eval;
pub mod geom;
pub mod graph;
pub mod math;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
