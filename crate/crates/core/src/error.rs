use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid radio configuration: {0}")]
    InvalidRadio(String),
    #[error("unknown base station id {0}")]
    UnknownStation(u32),
    #[error("position ({x}, {y}) lies outside the environment bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("MPC {index} has delay {delay:e} s outside the CIR window [{start:e}, {end:e}) s")]
    DelayOutsideWindow {
        index: usize,
        delay: f64,
        start: f64,
        end: f64,
    },
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error("snapshot {index}: {source}")]
    Snapshot {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("station {station} needs a window of {required} samples, have {available}")]
    WindowTooShort {
        station: usize,
        required: usize,
        available: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty MPC list for station {station}")]
    EmptyMpcList { station: usize },
    #[error("k = {k} out of range for {n} nodes (need 1 <= k < n)")]
    NeighborCount { k: usize, n: usize },
    #[error("graph is disconnected: component sizes {sizes:?}")]
    Disconnected { sizes: Vec<usize> },
    #[error("invalid encoder shape: {0}")]
    EncoderShape(String),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("invalid training configuration: {0}")]
    TrainConfig(String),
    #[error("data has rank {rank} < 2")]
    RankDeficient { rank: usize },
    #[error("neighbourhood size K = {k} out of range for N = {n}")]
    NeighborhoodSize { k: usize, n: usize },
    #[error("chart is degenerate (collinear or too few points) for an affine fit")]
    DegenerateChart,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
