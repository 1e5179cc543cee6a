//! Method-of-characteristics simulation in the time domain, and empirical reachability.
//!
//! Each edge carries a mesh uniform in the transit-time coordinate `s = tau(x, 1)`, so a
//! characteristic advances exactly one step `dt` in `s`. When `tau_j / dt` is an integer the
//! advection is an exact shift; otherwise the foot of the characteristic is found by cubic
//! interpolation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::Controls;
use crate::delay::HistoryBuffer;
use crate::error::{Error, Result};
use crate::linalg::{svd_full, to_weighted};
use crate::parallel::par_map;
use crate::system::System;
use crate::C64;

/// Scalar control waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Waveform {
    #[default]
    Zero,
    Constant { value: f64 },
    Sine { amplitude: f64, omega: f64, #[serde(default)] phase: f64 },
    /// Box pulse on `[start, start + width)`.
    Pulse { amplitude: f64, start: f64, width: f64 },
}

impl Waveform {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Waveform::Zero => 0.0,
            Waveform::Constant { value } => value,
            Waveform::Sine { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Waveform::Pulse { amplitude, start, width } => {
                if t >= start && t < start + width {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }
}

/// Boundary controls `v` and distributed controls `u`; missing channels are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ControlSignal {
    #[serde(default)]
    pub v: Vec<Waveform>,
    #[serde(default)]
    pub u: Vec<Waveform>,
}

impl ControlSignal {
    fn channels(w: &[Waveform], n: usize, t: f64) -> DVector<f64> {
        DVector::from_fn(n, |i, _| w.get(i).map_or(0.0, |w| w.eval(t)))
    }

    pub fn v(&self, n_v: usize, t: f64) -> DVector<f64> {
        Self::channels(&self.v, n_v, t)
    }

    pub fn u(&self, n_u: usize, t: f64) -> DVector<f64> {
        Self::channels(&self.u, n_u, t)
    }
}

/// Interpolation weights on a run of consecutive mesh nodes.
#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    w: Vec<f64>,
}

impl Stencil {
    /// Cubic Lagrange interpolation at `s` on nodes `i h`, `i = 0..=cells`.
    fn new(cells: usize, h: f64, s: f64) -> Self {
        let pos = (s / h).clamp(0.0, cells as f64);
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        if frac < 1e-12 {
            return Self { start: i0, w: vec![1.0] };
        }
        if frac > 1.0 - 1e-12 {
            return Self { start: i0 + 1, w: vec![1.0] };
        }
        let len = (cells + 1).min(4);
        let start = (i0 as isize - 1).clamp(0, (cells + 1 - len) as isize) as usize;
        let w = (0..len)
            .map(|a| {
                (0..len)
                    .filter(|&b| b != a)
                    .map(|b| (pos - (start + b) as f64) / (a as f64 - b as f64))
                    .product()
            })
            .collect();
        Self { start, w }
    }

    fn apply(&self, vals: &[f64]) -> f64 {
        self.w.iter().zip(&vals[self.start..]).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone)]
struct EdgeMesh {
    offset: usize,
    cells: usize,
    h: f64,
    x: Vec<f64>,
    /// Foot of the characteristic through node `i`, for nodes with `s_i >= dt`.
    foot: Vec<Option<(Stencil, f64)>>,
    /// `exp(int q dt)` from the inflow point to node `i`.
    from_inflow: Vec<f64>,
    mass_w: Vec<f64>,
    c_in: f64,
    c_out: f64,
}

impl EdgeMesh {
    fn len(&self) -> usize {
        self.cells + 1
    }

    fn s(&self, i: usize) -> f64 {
        i as f64 * self.h
    }
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub dt: f64,
    /// `rho` on the concatenated edge meshes.
    pub rho: DVector<f64>,
    /// Inflow values `rho_j(t, 1)`.
    inflow: Vec<f64>,
    pub z_hist: HistoryBuffer<f64>,
    pub u_hist: HistoryBuffer<f64>,
}

impl SimState {
    pub fn z(&self) -> &DVector<f64> {
        self.z_hist.get(0).expect("history is never empty")
    }
}

/// One recorded time, sampled on the Gauss grid.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Precomputed stepping data for one system, control set and step.
pub struct Simulator<'a> {
    sys: &'a System,
    ctrl: &'a Controls,
    dt: f64,
    meshes: Vec<EdgeMesh>,
    total: usize,
    d_w: Vec<(usize, DMatrix<f64>)>,
    l_w: Vec<(usize, DMatrix<f64>)>,
    k1_w: Vec<(usize, DMatrix<f64>)>,
    b1_w: Vec<(usize, DMatrix<f64>)>,
    /// `transfer[j][k]`: stencils evaluating edge `k` at the node positions of edge `j`.
    transfer: Vec<Vec<Option<Vec<Stencil>>>>,
    k0: DMatrix<f64>,
    b0: DMatrix<f64>,
    out: Vec<Vec<Stencil>>,
    hist_len: usize,
}

fn lagged(w: &[(usize, DMatrix<f64>)]) -> usize {
    w.iter().map(|(k, _)| *k).max().unwrap_or(0)
}

impl<'a> Simulator<'a> {
    pub fn new(sys: &'a System, ctrl: &'a Controls, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Cfl { edge: 0, tau: 0.0, dt });
        }
        let bank = &sys.bank;
        bank.eta.check_gap(dt)?;
        bank.vartheta.check_gap(dt)?;
        let nodes = sys.grid.nodes();
        for j in 0..sys.m() {
            let flow = sys.flow.edge(j);
            let limit = nodes
                .windows(2)
                .map(|w| (w[1] - w[0]) / flow.c(w[0]).max(flow.c(w[1])))
                .fold(f64::INFINITY, f64::min);
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::Cfl { edge: j, tau: limit, dt });
            }
        }

        let mut meshes = Vec::with_capacity(sys.m());
        let mut offset = 0;
        for j in 0..sys.m() {
            let flow = sys.flow.edge(j);
            let tau = sys.flow.tau_total(j);
            let xi_total = sys.flow.xi_total(j);
            let cells = ((tau / dt) * (1.0 + 1e-12)).floor().max(1.0) as usize;
            let h = tau / cells as f64;
            let x: Vec<f64> = (0..=cells).map(|i| flow.position_at(tau - i as f64 * h)).collect();
            let xi0: Vec<f64> = x.iter().map(|&x| flow.cumulative(x).0).collect();
            let foot = (0..=cells)
                .map(|i| {
                    let s = i as f64 * h - dt;
                    (s >= -1e-12 * tau).then(|| {
                        let s = s.max(0.0);
                        let xa = flow.position_at(tau - s);
                        (Stencil::new(cells, h, s), (flow.cumulative(xa).0 - xi0[i]).exp())
                    })
                })
                .collect();
            let from_inflow = xi0.iter().map(|v| (xi_total - v).exp()).collect();
            let mass_w = (0..=cells)
                .map(|i| {
                    let end = if i == 0 || i == cells { 0.5 } else { 1.0 };
                    end * h * flow.c(x[i])
                })
                .collect();
            meshes.push(EdgeMesh {
                offset,
                cells,
                h,
                x,
                foot,
                from_inflow,
                mass_w,
                c_in: flow.c(1.0),
                c_out: flow.c(0.0),
            });
            offset += cells + 1;
        }

        let d_w = bank.eta.step_weights(dt);
        let l_w = bank.gamma.step_weights(dt);
        let k1_w = bank.vartheta.step_weights(dt);
        let b1_w = bank.nu.step_weights(dt);
        let coupled = |ws: &[&Vec<(usize, DMatrix<f64>)>], j: usize, k: usize| {
            ws.iter().any(|w| w.iter().any(|(_, m)| m[(j, k)] != 0.0))
        };
        let transfer = (0..sys.m())
            .map(|j| {
                (0..sys.m())
                    .map(|k| {
                        (j != k && coupled(&[&d_w, &l_w], j, k)).then(|| {
                            let mk = &meshes[k];
                            let tk = sys.flow.tau_total(k);
                            meshes[j]
                                .x
                                .iter()
                                .map(|&x| Stencil::new(mk.cells, mk.h, tk - sys.flow.edge(k).cumulative(x).1))
                                .collect()
                        })
                    })
                    .collect()
            })
            .collect();
        let on_nodes = |cols: &DMatrix<C64>| {
            let mut out = DMatrix::zeros(offset, cols.ncols());
            for p in 0..cols.ncols() {
                let col = cols.column(p).into_owned();
                for (j, mesh) in meshes.iter().enumerate() {
                    for (i, &x) in mesh.x.iter().enumerate() {
                        out[(mesh.offset + i, p)] = sys.grid.eval_edge(&col, j, x).re;
                    }
                }
            }
            out
        };
        let k0 = on_nodes(&ctrl.k0);
        let b0 = on_nodes(&ctrl.b0);
        let out = meshes
            .iter()
            .enumerate()
            .map(|(j, mesh)| {
                let tau = sys.flow.tau_total(j);
                nodes
                    .iter()
                    .map(|&x| Stencil::new(mesh.cells, mesh.h, tau - sys.flow.edge(j).cumulative(x).1))
                    .collect()
            })
            .collect();
        let hist_len = [lagged(&d_w), lagged(&l_w), lagged(&k1_w), lagged(&b1_w), (bank.r() / dt).ceil() as usize]
            .into_iter()
            .max()
            .unwrap()
            + 2;
        Ok(Self { sys, ctrl, dt, meshes, total: offset, d_w, l_w, k1_w, b1_w, transfer, k0, b0, out, hist_len })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of mesh nodes over all edges.
    pub fn nodes(&self) -> usize {
        self.total
    }

    /// Position `x` of every mesh node, edge by edge.
    pub fn mesh_positions(&self) -> Vec<(usize, f64)> {
        self.meshes.iter().enumerate().flat_map(|(j, m)| m.x.iter().map(move |&x| (j, x))).collect()
    }

    fn n_u(&self) -> usize {
        self.sys.bank.n_u()
    }

    /// Apply an edge-coupling measure to the history of mesh profiles.
    fn state_delay(&self, w: &[(usize, DMatrix<f64>)], hist: &HistoryBuffer<f64>, out: &mut DVector<f64>) {
        for (lag, mat) in w {
            let Some(z) = hist.get(*lag) else { continue };
            for (j, mj) in self.meshes.iter().enumerate() {
                for (k, mk) in self.meshes.iter().enumerate() {
                    let a = mat[(j, k)];
                    if a == 0.0 {
                        continue;
                    }
                    let src = &z.as_slice()[mk.offset..mk.offset + mk.len()];
                    match &self.transfer[j][k] {
                        None => {
                            for i in 0..mj.len() {
                                out[mj.offset + i] += a * src[i];
                            }
                        }
                        Some(st) => {
                            for (i, s) in st.iter().enumerate() {
                                out[mj.offset + i] += a * s.apply(src);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Apply an input measure to the control history; the result is constant along each edge.
    fn input_delay(&self, w: &[(usize, DMatrix<f64>)], hist: &HistoryBuffer<f64>, out: &mut DVector<f64>) {
        for (lag, mat) in w {
            let Some(u) = hist.get(*lag) else { continue };
            let per_edge = mat * u;
            for (j, mj) in self.meshes.iter().enumerate() {
                for i in 0..mj.len() {
                    out[mj.offset + i] += per_edge[j];
                }
            }
        }
    }

    /// `D z_t + K0 u(t) + K1 u_t`.
    fn neutral_part(&self, z_hist: &HistoryBuffer<f64>, u_hist: &HistoryBuffer<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.total);
        self.state_delay(&self.d_w, z_hist, &mut out);
        if self.k0.ncols() > 0 {
            out += &self.k0 * u_hist.get(0).expect("control history");
        }
        self.input_delay(&self.k1_w, u_hist, &mut out);
        out
    }

    /// `L z_t + B0 u(t) + B1 u_t`.
    fn forcing(&self, z_hist: &HistoryBuffer<f64>, u_hist: &HistoryBuffer<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.total);
        self.state_delay(&self.l_w, z_hist, &mut out);
        if self.b0.ncols() > 0 {
            out += &self.b0 * u_hist.get(0).expect("control history");
        }
        self.input_delay(&self.b1_w, u_hist, &mut out);
        out
    }

    fn inflow(&self, rho: &DVector<f64>, v: &DVector<f64>) -> Vec<f64> {
        let net = &self.sys.network;
        let k = &self.ctrl.k;
        let vertex_flux: Vec<f64> = (0..net.n())
            .map(|i| {
                let transit: f64 = net
                    .incoming(i)
                    .map(|e| {
                        let m = &self.meshes[e];
                        m.c_out * rho[m.offset + m.cells]
                    })
                    .sum();
                let control: f64 = (0..k.ncols()).map(|l| k[(i, l)].re * v[l]).sum();
                transit + control
            })
            .collect();
        self.meshes
            .iter()
            .enumerate()
            .map(|(j, m)| net.weight_of(j) * vertex_flux[net.tail(j)] / m.c_in)
            .collect()
    }

    /// Initial state from the `z` history `phi(theta, edge, x)`, the `u` history `psi(theta)`
    /// and `g(edge, x) = rho(0, x)`.
    pub fn init(
        &self,
        phi: impl Fn(f64, usize, f64) -> f64,
        psi: impl Fn(f64) -> DVector<f64>,
        g: impl Fn(usize, f64) -> f64,
    ) -> SimState {
        let pos = self.mesh_positions();
        let span = (self.hist_len - 2) as f64 * self.dt;
        let mut z_hist =
            HistoryBuffer::from_fn(self.dt, span, self.total, |th| DVector::from_fn(self.total, |i, _| phi(th, pos[i].0, pos[i].1)));
        let u_hist = HistoryBuffer::from_fn(self.dt, span, self.n_u(), psi);
        let rho = DVector::from_fn(self.total, |i, _| g(pos[i].0, pos[i].1));
        let z0 = &rho + self.neutral_part(&z_hist, &u_hist);
        *z_hist.newest_mut().expect("filled") = z0;
        let inflow = self.meshes.iter().map(|m| rho[m.offset]).collect();
        SimState { t: 0.0, dt: self.dt, rho, inflow, z_hist, u_hist }
    }

    /// State with zero history and zero initial profile.
    pub fn zero_state(&self) -> SimState {
        let n_u = self.n_u();
        self.init(|_, _, _| 0.0, |_| DVector::zeros(n_u), |_, _| 0.0)
    }

    /// Advance one step.
    pub fn step(&self, state: &mut SimState, signal: &ControlSignal) {
        let dt = self.dt;
        let g = self.forcing(&state.z_hist, &state.u_hist);
        let source = &state.rho + &g * dt;
        let mut rho = DVector::zeros(self.total);
        for m in &self.meshes {
            let src = &source.as_slice()[m.offset..m.offset + m.len()];
            for (i, foot) in m.foot.iter().enumerate() {
                if let Some((st, absorb)) = foot {
                    rho[m.offset + i] = absorb * st.apply(src);
                }
            }
        }
        let t1 = state.t + dt;
        let v1 = signal.v(self.ctrl.n_v(), t1);
        let inflow = self.inflow(&rho, &v1);
        for (j, m) in self.meshes.iter().enumerate() {
            for (i, foot) in m.foot.iter().enumerate() {
                if foot.is_none() {
                    let s = m.s(i);
                    let b = state.inflow[j] + (inflow[j] - state.inflow[j]) * (dt - s) / dt;
                    rho[m.offset + i] = m.from_inflow[i] * (b + s * g[m.offset]);
                }
            }
        }
        state.u_hist.push(signal.u(self.n_u(), t1));
        state.z_hist.push(rho.clone());
        let z1 = &rho + self.neutral_part(&state.z_hist, &state.u_hist);
        *state.z_hist.newest_mut().expect("just pushed") = z1;
        state.rho = rho;
        state.inflow = inflow;
        state.t = t1;
    }

    /// `max |z(t) - rho(t) - D z_t - K0 u(t) - K1 u_t|`.
    pub fn reconstruction_residual(&self, state: &SimState) -> f64 {
        let r = state.z() - &state.rho - self.neutral_part(&state.z_hist, &state.u_hist);
        r.amax()
    }

    /// `sum_j int z_j dx`.
    pub fn mass(&self, state: &SimState) -> f64 {
        let z = state.z();
        self.meshes.iter().map(|m| (0..m.len()).map(|i| m.mass_w[i] * z[m.offset + i]).sum::<f64>()).sum()
    }

    /// A mesh profile sampled at the Gauss nodes, edge-major.
    pub fn sample(&self, profile: &DVector<f64>) -> DVector<f64> {
        let n = self.sys.grid.n();
        DVector::from_fn(self.sys.dim(), |row, _| {
            let (j, i) = (row / n, row % n);
            let m = &self.meshes[j];
            self.out[j][i].apply(&profile.as_slice()[m.offset..m.offset + m.len()])
        })
    }

    pub fn snapshot(&self, state: &SimState) -> Snapshot {
        Snapshot {
            t: state.t,
            z: self.sample(state.z()).iter().copied().collect(),
            rho: self.sample(&state.rho).iter().copied().collect(),
        }
    }

    /// Step to `t_final`, recording every `stride`-th state (and the first and last).
    pub fn simulate(&self, mut state: SimState, signal: &ControlSignal, t_final: f64, stride: usize) -> (SimState, Vec<Snapshot>) {
        let steps = ((t_final - state.t) / self.dt - 1e-9).ceil().max(0.0) as usize;
        let stride = stride.max(1);
        let mut snaps = vec![self.snapshot(&state)];
        for k in 1..=steps {
            self.step(&mut state, signal);
            if k % stride == 0 || k == steps {
                snaps.push(self.snapshot(&state));
            }
        }
        (state, snaps)
    }
}

/// Probe controls: sinusoids and pulses spread over the channels.
pub fn probe_signals(n_v: usize, n_u: usize, count: usize, t_final: f64) -> Vec<ControlSignal> {
    let channels = n_v + n_u;
    if channels == 0 {
        return vec![];
    }
    let per_channel = count.div_ceil(channels);
    let pulses = per_channel / 2;
    let waves = per_channel - pulses;
    (0..count)
        .map(|p| {
            let ch = p % channels;
            let idx = p / channels;
            let w = if idx < waves {
                let k = idx / 2 + 1;
                let phase = if idx.is_multiple_of(2) { 0.0 } else { PI / 2.0 };
                Waveform::Sine { amplitude: 1.0, omega: PI * k as f64 / t_final, phase }
            } else {
                let q = idx - waves;
                let width = t_final / pulses.max(1) as f64;
                Waveform::Pulse { amplitude: 1.0, start: q as f64 * width, width }
            };
            let mut sig = ControlSignal { v: vec![Waveform::Zero; n_v], u: vec![Waveform::Zero; n_u] };
            if ch < n_v {
                sig.v[ch] = w;
            } else {
                sig.u[ch - n_v] = w;
            }
            sig
        })
        .collect()
}

/// End states of probe simulations and their weighted singular spectrum.
#[derive(Debug, Clone)]
pub struct Gramian {
    /// `mN x probes`, `z(T)` on the Gauss grid.
    pub snapshots: DMatrix<f64>,
    pub sigmas: Vec<f64>,
    /// Orthonormal left singular vectors in the weighted frame.
    pub u: DMatrix<C64>,
}

impl Gramian {
    pub fn rank(&self, tol: f64) -> usize {
        crate::linalg::numerical_rank(&self.sigmas, tol, self.sigmas.first().copied().unwrap_or(0.0))
    }
}

pub fn empirical_gramian(sys: &System, ctrl: &Controls, probes: &[ControlSignal], t_final: f64, dt: f64) -> Result<Gramian> {
    let sim = Simulator::new(sys, ctrl, dt)?;
    let ends = par_map(probes, |sig| {
        let (state, _) = sim.simulate(sim.zero_state(), sig, t_final, usize::MAX);
        sim.sample(state.z())
    });
    let dim = sys.dim();
    let mut snapshots = DMatrix::zeros(dim, ends.len());
    for (p, e) in ends.iter().enumerate() {
        snapshots.set_column(p, e);
    }
    if ends.is_empty() {
        return Ok(Gramian { snapshots, sigmas: vec![], u: DMatrix::zeros(dim, 0) });
    }
    let spec = svd_full(&to_weighted(&sys.grid, &snapshots.map(C64::from)));
    Ok(Gramian { snapshots, sigmas: spec.sigma, u: spec.u })
}

/// Principal angles between two column spans at a common numerical rank.
#[derive(Debug, Clone, Serialize)]
pub struct AngleReport {
    pub rank_a: usize,
    pub rank_b: usize,
    pub angles: Vec<f64>,
    pub rank_mismatch: bool,
}

impl AngleReport {
    pub fn max_angle(&self) -> f64 {
        self.angles.iter().copied().fold(0.0, f64::max)
    }
}

/// Angles between the spans of `a` and `b` (grid coordinates, weighted inner product).
pub fn principal_angles(sys: &System, a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> AngleReport {
    let basis = |m: &DMatrix<C64>| {
        let spec = svd_full(&to_weighted(&sys.grid, m));
        let r = crate::linalg::numerical_rank(&spec.sigma, tol, spec.sigma.first().copied().unwrap_or(0.0));
        (r, spec.u)
    };
    let (ra, ua) = basis(a);
    let (rb, ub) = basis(b);
    let r = ra.min(rb);
    let angles = crate::linalg::principal_angles(&ua.columns(0, r).into_owned(), &ub.columns(0, r).into_owned());
    AngleReport { rank_a: ra, rank_b: rb, angles, rank_mismatch: ra != rb }
}

/// Least-squares slope of `ln y` against `t`.
pub fn decay_rate(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|(_, y)| *y > 0.0).map(|&(t, y)| (t, y.ln())).collect();
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_reproduces_cubics() {
        let f = |s: f64| 1.0 - 2.0 * s + 0.5 * s * s - 0.1 * s.powi(3);
        let vals: Vec<f64> = (0..=10).map(|i| f(i as f64 * 0.3)).collect();
        for &s in &[0.0, 0.1, 1.37, 2.99, 3.0] {
            assert!((Stencil::new(10, 0.3, s).apply(&vals) - f(s)).abs() < 1e-12);
        }
        assert_eq!(Stencil::new(10, 0.3, 0.9).w, vec![1.0]);
    }

    #[test]
    fn waveforms() {
        assert_eq!(Waveform::Pulse { amplitude: 2.0, start: 1.0, width: 0.5 }.eval(1.2), 2.0);
        assert_eq!(Waveform::Pulse { amplitude: 2.0, start: 1.0, width: 0.5 }.eval(1.5), 0.0);
        let s: Waveform = serde_json::from_str(r#"{"kind":"sine","amplitude":1,"omega":2}"#).unwrap();
        assert!((s.eval(0.25) - 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn decay_rate_of_exponential() {
        let pts: Vec<(f64, f64)> = (0..50).map(|k| (k as f64 * 0.1, 3.0 * (-0.7 * k as f64 * 0.1).exp())).collect();
        assert!((decay_rate(&pts) + 0.7).abs() < 1e-12);
    }

    #[test]
    fn probes_cover_channels() {
        let p = probe_signals(1, 1, 6, 2.0);
        assert_eq!(p.len(), 6);
        assert!(p.iter().step_by(2).all(|s| s.u[0] == Waveform::Zero && s.v[0] != Waveform::Zero));
    }
}
