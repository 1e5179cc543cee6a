//! Flow exponents `xi(x,y) = int_x^y q/c` and `tau(x,y) = int_x^y 1/c`.

use crate::error::Result;
use crate::grid::Grid;
use crate::network::EdgeCoefficients;
use crate::profile::Profile;
use crate::quadrature::{gauss_legendre, Lagrange};
use crate::C64;

const SUBDIVISIONS: usize = 64;
const GAUSS: usize = 20;

/// Cumulative integrals of `q/c` and `1/c` from 0 along one edge.
#[derive(Debug, Clone)]
pub struct EdgeFlow {
    breaks: Vec<f64>,
    xi_cum: Vec<f64>,
    tau_cum: Vec<f64>,
    c: Profile,
    q: Profile,
    gx: Vec<f64>,
    gw: Vec<f64>,
}

impl EdgeFlow {
    fn new(coeffs: &EdgeCoefficients, j: usize, extra_breaks: &[f64]) -> Self {
        let c = coeffs.c[j].clone();
        let q = coeffs.q[j].clone();
        let mut breaks: Vec<f64> = (0..=SUBDIVISIONS).map(|k| k as f64 / SUBDIVISIONS as f64).collect();
        breaks.extend_from_slice(c.interior_breaks());
        breaks.extend_from_slice(q.interior_breaks());
        breaks.extend_from_slice(extra_breaks);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let (gx, gw) = gauss_legendre(GAUSS);
        let mut flow = Self { breaks, xi_cum: vec![0.0], tau_cum: vec![0.0], c, q, gx, gw };
        for k in 1..flow.breaks.len() {
            let (dxi, dtau) = flow.segment(flow.breaks[k - 1], flow.breaks[k]);
            let (xi, tau) = (flow.xi_cum[k - 1] + dxi, flow.tau_cum[k - 1] + dtau);
            flow.xi_cum.push(xi);
            flow.tau_cum.push(tau);
        }
        flow
    }

    fn segment(&self, a: f64, b: f64) -> (f64, f64) {
        let h = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut xi = 0.0;
        let mut tau = 0.0;
        for (t, w) in self.gx.iter().zip(&self.gw) {
            let s = mid + h * t;
            let ic = 1.0 / self.c.eval(s);
            xi += w * self.q.eval(s) * ic;
            tau += w * ic;
        }
        (h * xi, h * tau)
    }

    /// `(int_0^x q/c, int_0^x 1/c)`.
    pub fn cumulative(&self, x: f64) -> (f64, f64) {
        let k = self.breaks.partition_point(|&b| b <= x).clamp(1, self.breaks.len() - 1) - 1;
        let b = self.breaks[k];
        if x == b {
            return (self.xi_cum[k], self.tau_cum[k]);
        }
        let (dxi, dtau) = self.segment(b, x);
        (self.xi_cum[k] + dxi, self.tau_cum[k] + dtau)
    }

    pub fn c(&self, x: f64) -> f64 {
        self.c.eval(x)
    }

    pub fn q(&self, x: f64) -> f64 {
        self.q.eval(x)
    }

    /// Inverse of the cumulative transit time: `x` with `tau(0, x) = t`.
    pub fn position_at(&self, t: f64) -> f64 {
        let total = *self.tau_cum.last().unwrap();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= total {
            return 1.0;
        }
        let k = self.tau_cum.partition_point(|&v| v <= t) - 1;
        let (mut lo, mut hi) = (self.breaks[k], self.breaks[k + 1]);
        let mut x = lo + (hi - lo) * (t - self.tau_cum[k]) / (self.tau_cum[k + 1] - self.tau_cum[k]);
        for _ in 0..60 {
            let f = self.cumulative(x).1 - t;
            if f.abs() < 1e-15 * total.max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - f * self.c(x);
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        x
    }
}

/// One Gauss point of the resolvent kernel tables.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelPoint {
    pub weight: f64,
    pub xi: f64,
    pub tau: f64,
}

/// Per-edge quadrature tables for `int_x^1 e^{xi(x,y) - mu tau(x,y)} f(y)/c(y) dy`.
#[derive(Debug, Clone)]
pub(crate) struct KernelTables {
    /// Reference basis values, one row per Gauss point.
    pub basis: Vec<Vec<f64>>,
    /// Full panels: Gauss points of each panel.
    pub full: Vec<Vec<KernelPoint>>,
    /// Partial panel from each node to its panel end, with its own basis values.
    pub partial: Vec<(Vec<KernelPoint>, Vec<Vec<f64>>)>,
}

/// Flow exponents of every edge plus their values on a grid.
#[derive(Debug, Clone)]
pub struct FlowExponents {
    edges: Vec<EdgeFlow>,
    node_xi: Vec<Vec<f64>>,
    node_tau: Vec<Vec<f64>>,
    pub(crate) kernels: Vec<KernelTables>,
}

impl FlowExponents {
    pub fn new(coeffs: &EdgeCoefficients, grid: &Grid) -> Result<Self> {
        let panel_breaks: Vec<f64> = (1..grid.panels()).map(|p| p as f64 * grid.panel_width()).collect();
        let edges: Vec<EdgeFlow> = (0..coeffs.m()).map(|j| EdgeFlow::new(coeffs, j, &panel_breaks)).collect();
        let node_xi = edges.iter().map(|e| grid.nodes().iter().map(|&x| e.cumulative(x).0).collect()).collect();
        let node_tau = edges.iter().map(|e| grid.nodes().iter().map(|&x| e.cumulative(x).1).collect()).collect();
        let kernels = edges.iter().map(|e| kernel_tables(e, grid)).collect();
        Ok(Self { edges, node_xi, node_tau, kernels })
    }

    pub fn edge(&self, j: usize) -> &EdgeFlow {
        &self.edges[j]
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn xi(&self, j: usize, x: f64, y: f64) -> f64 {
        self.edges[j].cumulative(y).0 - self.edges[j].cumulative(x).0
    }

    pub fn tau(&self, j: usize, x: f64, y: f64) -> f64 {
        self.edges[j].cumulative(y).1 - self.edges[j].cumulative(x).1
    }

    /// `xi_j(0, 1)`.
    pub fn xi_total(&self, j: usize) -> f64 {
        *self.edges[j].xi_cum.last().unwrap()
    }

    /// `tau_j(0, 1)`.
    pub fn tau_total(&self, j: usize) -> f64 {
        *self.edges[j].tau_cum.last().unwrap()
    }

    /// `xi_j(x_i, 1)` at grid node `i`.
    pub fn xi_to_end(&self, j: usize, i: usize) -> f64 {
        self.xi_total(j) - self.node_xi[j][i]
    }

    /// `tau_j(x_i, 1)` at grid node `i`.
    pub fn tau_to_end(&self, j: usize, i: usize) -> f64 {
        self.tau_total(j) - self.node_tau[j][i]
    }

    pub fn node_xi(&self, j: usize) -> &[f64] {
        &self.node_xi[j]
    }

    pub fn node_tau(&self, j: usize) -> &[f64] {
        &self.node_tau[j]
    }

    /// Propagation factor `e^{xi - mu tau}` across edge `j`.
    pub fn transfer(&self, j: usize, mu: C64) -> C64 {
        (C64::from(self.xi_total(j)) - mu * self.tau_total(j)).exp()
    }
}

fn kernel_tables(e: &EdgeFlow, grid: &Grid) -> KernelTables {
    let p = grid.order();
    let q = (p + 8).max(16);
    let (gx, gw) = gauss_legendre(q);
    let reference = Lagrange::new(gauss_legendre(p).0);
    let basis = gx.iter().map(|&t| reference.basis(t)).collect();
    let h = grid.panel_width();
    let point = |y: f64, w: f64| {
        let (xi, tau) = e.cumulative(y);
        KernelPoint { weight: w / e.c(y), xi, tau }
    };
    let full = (0..grid.panels())
        .map(|pan| {
            let a = pan as f64 * h;
            gx.iter().zip(&gw).map(|(t, w)| point(a + 0.5 * h * (t + 1.0), 0.5 * h * w)).collect()
        })
        .collect();
    let partial = grid
        .nodes()
        .iter()
        .map(|&x| {
            let pan = grid.panel_of(x);
            let b = (pan + 1) as f64 * h;
            let half = 0.5 * (b - x);
            let mut pts = Vec::with_capacity(q);
            let mut bas = Vec::with_capacity(q);
            for (t, w) in gx.iter().zip(&gw) {
                let y = x + half * (t + 1.0);
                pts.push(point(y, half * w));
                bas.push(grid.interp_in(pan, y).1);
            }
            (pts, bas)
        })
        .collect();
    KernelTables { basis, full, partial }
}
