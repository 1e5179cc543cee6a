//! Controllability analysis for neutral delay transport systems on directed metric graphs.
//!
//! The state `rho_j(t, x)` on each edge is transported from `x = 1` to `x = 0` with
//! velocity `c_j` and absorption `q_j`, coupled at vertices by Kirchhoff weights, and fed
//! back through delay measures acting on the history `z_t`.

pub mod config;
pub mod control;
pub mod delay;
pub mod error;
pub mod flow;
pub mod grid;
pub mod linalg;
pub mod network;
pub mod operators;
mod parallel;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod system;
pub mod timesim;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use system::System;
