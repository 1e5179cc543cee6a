//! Browser bindings: characteristic roots, decay of a neutral loop, reachability spectrum.
//!
//! Every export returns a JSON string.

use nalgebra::{DMatrix, DVector};
use netdelay::control::{aggregate_and_rank, choose_mu_samples, default_bandwidth, sample_reachability, Controls, MuStrategy, DEFAULT_EPS};
use netdelay::delay::{DelayBank, DelayMeasure};
use netdelay::network::{EdgeCoefficients, Network};
use netdelay::profile::Profile;
use netdelay::report::to_json;
use netdelay::spectral::{scan, Rect, Root};
use netdelay::timesim::{decay_rate, ControlSignal, Simulator};
use netdelay::System;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const GRID: usize = 16;
const DEPTH: usize = 2;

fn js(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

/// Unit loop with absorption `q` and neutral atom `d` at `theta = -1`.
fn neutral_loop(d: f64, q: f64) -> netdelay::Result<System> {
    let net = Network::build(1, &[(0, 0)], &DMatrix::from_element(1, 1, 1.0))?;
    let coeffs = EdgeCoefficients::new(vec![Profile::constant(1.0)], vec![Profile::constant(q)])?;
    let bank = if d == 0.0 {
        DelayBank::none(1, 0)
    } else {
        let eta = DelayMeasure::atom(1.0, -1.0, DMatrix::from_element(1, 1, d))?;
        DelayBank::new(eta, DelayMeasure::zero(1.0, 1, 1), DelayMeasure::zero(1.0, 1, 0), DelayMeasure::zero(1.0, 1, 0))?
    };
    System::new(net, coeffs, bank, GRID)
}

#[derive(Serialize)]
struct RootMap<'a> {
    roots: &'a [Root],
    count: usize,
    max_real: Option<f64>,
}

/// Characteristic roots of the neutral loop inside a box.
#[wasm_bindgen]
pub fn root_map(d: f64, q: f64, re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<String, JsError> {
    let sys = neutral_loop(d, q).map_err(js)?;
    let rep = scan(&sys, Rect::new(re_min, re_max, im_min, im_max), DEPTH).map_err(js)?;
    to_json(&RootMap { roots: &rep.roots, count: rep.count(), max_real: rep.max_real() }).map_err(js)
}

#[derive(Serialize)]
struct Decay {
    t: Vec<f64>,
    norm: Vec<f64>,
    fitted_rate: f64,
    rightmost_root: Option<f64>,
}

/// Norm of `z(t)` for the neutral loop started from a bump, with the fitted late-time rate.
#[wasm_bindgen]
pub fn decay_curve(d: f64, q: f64, t_final: f64) -> Result<String, JsError> {
    let sys = neutral_loop(d, q).map_err(js)?;
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 0.01).map_err(js)?;
    let state = sim.init(|_, _, _| 0.0, |_| DVector::zeros(0), |_, x| 1.0 + (std::f64::consts::PI * x).sin());
    let (_, snaps) = sim.simulate(state, &ControlSignal::default(), t_final, 10);
    let w = sys.grid.full_weights();
    let (t, norm): (Vec<f64>, Vec<f64>) =
        snaps.iter().map(|s| (s.t, s.z.iter().zip(w.iter()).map(|(v, w)| w * v * v).sum::<f64>().sqrt())).unzip();
    let late: Vec<(f64, f64)> = t.iter().copied().zip(norm.iter().copied()).filter(|(s, _)| *s >= 0.5 * t_final).collect();
    let rightmost = scan(&sys, Rect::new(-3.0 + q.min(0.0), 1.0 + q.max(0.0), -7.0, 7.0), DEPTH).ok().and_then(|r| r.max_real());
    to_json(&Decay { fitted_rate: decay_rate(&late), rightmost_root: rightmost, t, norm }).map_err(js)
}

#[derive(Serialize)]
struct Spectrum {
    sigmas: Vec<f64>,
    rank: usize,
    dim: usize,
    defect: f64,
    verdict: &'static str,
}

/// Reachability singular values for a loop that leaks a fraction `leak` into a second, uncontrolled loop.
#[wasm_bindgen]
pub fn singular_spectrum(leak: f64, samples: usize, seed: u64) -> Result<String, JsError> {
    let w = DMatrix::from_row_slice(2, 3, &[1.0 - leak, leak, 0.0, 0.0, 0.0, 1.0]);
    let net = Network::build(2, &[(0, 0), (0, 1), (1, 1)], &w).map_err(js)?;
    let coeffs = EdgeCoefficients::new(vec![Profile::constant(1.0); 3], vec![Profile::constant(0.0); 3]).map_err(js)?;
    let sys = System::new(net, coeffs, DelayBank::none(3, 0), GRID).map_err(js)?;
    let ctrl = Controls::boundary(&sys, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
    let mus = choose_mu_samples(&[], samples, MuStrategy::Line, default_bandwidth(&sys), seed);
    let (samples, _) = sample_reachability(&sys, &ctrl, &mus);
    let rep = aggregate_and_rank(&sys.grid, &samples, DEFAULT_EPS).map_err(js)?;
    to_json(&Spectrum { verdict: rep.verdict.as_str(), sigmas: rep.sigmas, rank: rep.rank, dim: rep.dim, defect: rep.defect }).map_err(js)
}
