//! Frequency-domain operators on the discretized state space.

mod blocks;
mod oracle;
mod toolkit;

pub use blocks::{BlockResolvent, DelayFunctionals, DiscreteGenerator, GeneratorImage, ProductVector};
pub use oracle::{oracle_resolvent, OracleTolerance};
pub use toolkit::{
    char_det, char_matrix, couple, dirichlet, dirichlet_factor, gtrace, mtrace, resolvent_free, resolvent_perturbed,
    trace_resolvent, Diagnostics, FrequencyToolkit,
};
