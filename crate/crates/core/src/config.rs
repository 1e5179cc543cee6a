//! JSON run configuration: parsing, validation and model assembly.
//!
//! Every error is an [`Error::Config`] whose `path` points at the offending field,
//! for example `network.edges[2].weight` or `delays.d.atoms[0].theta`.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::control::{ControlConfig, Controls, MuStrategy, DEFAULT_EPS};
use crate::delay::{Atom, DelayBank, DelayMeasure, DensityPiece};
use crate::error::{Error, Result};
use crate::network::{Connectivity, EdgeCoefficients, Network};
use crate::profile::Profile;
use crate::spectral::Rect;
use crate::system::System;
use crate::timesim::ControlSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub delays: DelayConfig,
    #[serde(default)]
    pub control: ControlConfig,
    /// Gauss nodes per edge.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub vertices: usize,
    pub edges: Vec<EdgeConfig>,
    #[serde(default)]
    pub allow_components: bool,
}

/// Edge from `tail` (x = 1) to `head` (x = 0); `weight` is its share of the inflow at `tail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub tail: usize,
    pub head: usize,
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default = "unit_profile")]
    pub c: Profile,
    #[serde(default = "zero_profile")]
    pub q: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    #[serde(default = "one")]
    pub r: f64,
    /// Number of distributed inputs `u`.
    #[serde(default)]
    pub inputs: usize,
    #[serde(default)]
    pub d: MeasureConfig,
    #[serde(default)]
    pub l: MeasureConfig,
    #[serde(default)]
    pub k1: MeasureConfig,
    #[serde(default)]
    pub b1: MeasureConfig,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self { r: 1.0, inputs: 0, d: Default::default(), l: Default::default(), k1: Default::default(), b1: Default::default() }
    }
}

/// Matrices are given as lists of rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub density: Vec<DensityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub theta: f64,
    pub weight: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub from: f64,
    pub to: f64,
    pub value: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub samples: usize,
    pub strategy: MuStrategy,
    /// Half-width of the sampled frequency band; `pi N / tau_min` when absent.
    pub bandwidth: Option<f64>,
    pub eps: f64,
    /// Root search box `[re_min, re_max, im_min, im_max]`.
    #[serde(rename = "box")]
    pub scan_box: [f64; 4],
    pub depth: usize,
    pub sweep: SweepConfig,
    pub oracle_checks: usize,
    /// Gauss nodes per edge for the oracle comparison.
    pub oracle_grid: usize,
    pub oracle_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            samples: 40,
            strategy: MuStrategy::Line,
            bandwidth: None,
            eps: DEFAULT_EPS,
            scan_box: [-1.0, 1.0, -7.0, 7.0],
            depth: 2,
            sweep: SweepConfig::default(),
            oracle_checks: 10,
            oracle_grid: 256,
            oracle_tol: 1e-8,
        }
    }
}

impl AnalysisConfig {
    pub fn rect(&self) -> Rect {
        let [a, b, c, d] = self.scan_box;
        Rect::new(a, b, c, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub alpha: f64,
    /// Imaginary range; the scan box's range when absent.
    pub range: Option<[f64; 2]>,
    pub samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { alpha: 1.0, range: None, samples: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between recorded snapshots.
    pub stride: usize,
    /// Initial transport profile `rho(0)` per edge; zero when absent.
    pub initial: Option<Vec<Profile>>,
    /// Constant value of the history `z(theta)`, `theta < 0`.
    pub history: f64,
    pub signal: ControlSignal,
    /// Probe count for the empirical Gramian; none when zero.
    pub probes: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { dt: 0.01, t_final: 1.0, stride: 10, initial: None, history: 0.0, signal: ControlSignal::default(), probes: 0 }
    }
}

fn default_grid() -> usize {
    16
}

fn one() -> f64 {
    1.0
}

fn unit_profile() -> Profile {
    Profile::constant(1.0)
}

fn zero_profile() -> Profile {
    Profile::constant(0.0)
}

fn at(path: impl Into<String>, err: impl ToString) -> Error {
    Error::Config { path: path.into(), message: err.to_string() }
}

fn matrix(path: &str, rows: &[Vec<f64>], shape: (usize, usize)) -> Result<DMatrix<f64>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(at(path, format!("expected a {}x{} matrix", shape.0, shape.1)));
    }
    Ok(DMatrix::from_fn(shape.0, shape.1, |i, j| rows[i][j]))
}

impl MeasureConfig {
    fn build(&self, path: &str, r: f64, shape: (usize, usize)) -> Result<DelayMeasure> {
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| Ok(Atom { theta: a.theta, weight: matrix(&format!("{path}.atoms[{i}].weight"), &a.weight, shape)? }))
            .collect::<Result<Vec<_>>>()?;
        let density = self
            .density
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(DensityPiece { from: p.from, to: p.to, value: matrix(&format!("{path}.density[{i}].value"), &p.value, shape)? })
            })
            .collect::<Result<Vec<_>>>()?;
        DelayMeasure::new(r, shape.0, shape.1, atoms, density).map_err(|e| match e {
            Error::Gap { atom, .. } => at(format!("{path}.atoms[{atom}].theta"), e),
            e => at(path, e),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.density.is_empty()
    }
}

impl RunConfig {
    /// Read and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Parse and validate, including every cross-shape check.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            at(if path == "." { String::new() } else { path }, e.into_inner())
        })?;
        let sys = cfg.system()?;
        cfg.controls(&sys)?;
        cfg.check_numbers()?;
        Ok(cfg)
    }

    fn check_numbers(&self) -> Result<()> {
        let a = &self.analysis;
        if !(a.eps > 0.0 && a.eps < 1.0) {
            return Err(at("analysis.eps", "must lie in (0, 1)"));
        }
        let [re0, re1, im0, im1] = a.scan_box;
        if !(re0 < re1 && im0 < im1) || !a.scan_box.iter().all(|v| v.is_finite()) {
            return Err(at("analysis.box", "needs re_min < re_max and im_min < im_max"));
        }
        if a.bandwidth.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
            return Err(at("analysis.bandwidth", "must be positive"));
        }
        if let Some([lo, hi]) = a.sweep.range {
            if lo >= hi {
                return Err(at("analysis.sweep.range", "needs lo < hi"));
            }
        }
        let s = &self.simulation;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(at("simulation.dt", "must be positive"));
        }
        if !(s.t_final >= 0.0 && s.t_final.is_finite()) {
            return Err(at("simulation.t_final", "must be non-negative"));
        }
        if let Some(init) = &s.initial {
            if init.len() != self.network.edges.len() {
                return Err(at("simulation.initial", format!("needs {} edge profiles", self.network.edges.len())));
            }
            for (j, p) in init.iter().enumerate() {
                p.validate().map_err(|e| at(format!("simulation.initial[{j}]"), e))?;
            }
        }
        let n_v = self.control.n_v();
        if s.signal.v.len() > n_v {
            return Err(at("simulation.signal.v", format!("{} waveforms for {n_v} boundary controls", s.signal.v.len())));
        }
        if s.signal.u.len() > self.delays.inputs {
            return Err(at("simulation.signal.u", format!("{} waveforms for {} inputs", s.signal.u.len(), self.delays.inputs)));
        }
        Ok(())
    }

    pub fn network(&self) -> Result<Network> {
        let net = &self.network;
        let n = net.vertices;
        let m = net.edges.len();
        let mut weights = DMatrix::zeros(n, m);
        for (j, e) in net.edges.iter().enumerate() {
            for (name, v) in [("tail", e.tail), ("head", e.head)] {
                if v >= n {
                    return Err(at(format!("network.edges[{j}].{name}"), format!("vertex {v} out of range (n = {n})")));
                }
            }
            let w = e.weight.ok_or_else(|| at(format!("network.edges[{j}].weight"), format!("missing Kirchhoff weight at vertex {}", e.tail)))?;
            weights[(e.tail, j)] = w;
        }
        let edges: Vec<(usize, usize)> = net.edges.iter().map(|e| (e.tail, e.head)).collect();
        let connectivity = if net.allow_components { Connectivity::AllowComponents } else { Connectivity::Required };
        Network::build_with(n, &edges, &weights, connectivity).map_err(|e| match e {
            Error::WeightRange { edge, .. } => at(format!("network.edges[{edge}].weight"), e),
            e @ Error::EmptyNetwork => at("network.edges", e),
            e => at("network", e),
        })
    }

    pub fn coefficients(&self) -> Result<EdgeCoefficients> {
        let edges = &self.network.edges;
        for (j, e) in edges.iter().enumerate() {
            e.c.validate().map_err(|err| at(format!("network.edges[{j}].c"), err))?;
            e.q.validate().map_err(|err| at(format!("network.edges[{j}].q"), err))?;
        }
        EdgeCoefficients::new(edges.iter().map(|e| e.c.clone()).collect(), edges.iter().map(|e| e.q.clone()).collect()).map_err(
            |e| match e {
                Error::Velocity { edge, .. } => at(format!("network.edges[{edge}].c"), e),
                e => at("network.edges", e),
            },
        )
    }

    pub fn bank(&self) -> Result<DelayBank> {
        let d = &self.delays;
        let m = self.network.edges.len();
        if !(d.r > 0.0 && d.r.is_finite()) {
            return Err(at("delays.r", "horizon must be positive"));
        }
        let eta = d.d.build("delays.d", d.r, (m, m))?;
        let gamma = d.l.build("delays.l", d.r, (m, m))?;
        let vartheta = d.k1.build("delays.k1", d.r, (m, d.inputs))?;
        let nu = d.b1.build("delays.b1", d.r, (m, d.inputs))?;
        DelayBank::new(eta, gamma, vartheta, nu).map_err(|e| at("delays", e))
    }

    pub fn system(&self) -> Result<System> {
        let network = self.network()?;
        let coeffs = self.coefficients()?;
        let bank = self.bank()?;
        System::new(network, coeffs, bank, self.grid).map_err(|e| at("grid", e))
    }

    pub fn controls(&self, sys: &System) -> Result<Controls> {
        self.control.realize(sys).map_err(|e| at("control", e))
    }
}
