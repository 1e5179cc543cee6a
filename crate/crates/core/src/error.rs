use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge}: vertex index {vertex} out of range (n = {n})")]
    VertexIndex { edge: usize, vertex: usize, n: usize },

    #[error("network has no vertices or no edges")]
    EmptyNetwork,

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("vertex {vertex}, edge {edge}: weight {weight} outside [0, 1]")]
    WeightRange { vertex: usize, edge: usize, weight: f64 },

    #[error("vertex {vertex}, edge {edge}: nonzero weight on an edge that does not leave the vertex")]
    WeightSlot { vertex: usize, edge: usize },

    #[error("vertex {vertex}: Kirchhoff weights sum to {sum}, expected 1")]
    Kirchhoff { vertex: usize, sum: f64 },

    #[error("edge {edge}: velocity {value} at x = {x} is not positive")]
    Velocity { edge: usize, x: f64, value: f64 },

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("invalid delay measure: {0}")]
    Measure(String),

    #[error("atom {atom} at theta = {theta} violates the gap: {gap} < dt = {dt}")]
    Gap { atom: usize, theta: f64, gap: f64, dt: f64 },

    #[error("history covers {available} but {required} is needed")]
    HistoryTooShort { required: f64, available: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("det(I - A_mu) = {det} is numerically zero at mu = {mu}")]
    CharacteristicSingularity { mu: Complex64, det: Complex64 },

    #[error("det(I - D e_mu) = {det} is numerically zero at mu = {mu}")]
    NeutralSingularity { mu: Complex64, det: Complex64 },

    #[error("delay characteristic operator is singular at mu = {mu} (condition {cond:e})")]
    DelayCharacteristicSingularity { mu: Complex64, cond: f64 },

    #[error("|det| = {min_abs:e} on the contour after {attempts} perturbations")]
    ContourTooClose { min_abs: f64, attempts: usize },

    #[error("Newton iteration diverged after {iterations} steps (last residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("every frequency sample is singular")]
    AllSamplesSingular,

    #[error("edge {edge}: transit time {tau} is shorter than dt = {dt}")]
    Cfl { edge: usize, tau: f64, dt: f64 },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
