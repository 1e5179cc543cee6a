//! Discretizations of [0, 1] (edges) and [-r, 0] (delay line).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_on, Lagrange};
use crate::C64;

const PANEL_ORDERS: [usize; 5] = [8, 7, 6, 5, 4];

/// Composite Gauss-Legendre grid shared by all edges.
#[derive(Debug, Clone)]
pub struct Grid {
    m: usize,
    n: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    reference: Lagrange,
    ref_diff: Vec<Vec<f64>>,
}

impl Grid {
    /// `n` nodes per edge on `m` edges; `n >= 4`.
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Shape(format!("grid needs at least 4 nodes per edge, got {n}")));
        }
        if m == 0 {
            return Err(Error::Shape("grid needs at least one edge".into()));
        }
        let order = PANEL_ORDERS.iter().copied().find(|&p| n.is_multiple_of(p)).unwrap_or(n);
        let panels = n / order;
        let (x, w) = gauss_legendre(order);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for p in 0..panels {
            let a = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        for _ in 0..3 {
            let defect = 1.0 - weights.iter().sum::<f64>();
            weights[n / 2] += defect;
        }
        let reference = Lagrange::new(x);
        let ref_diff = reference.diff_matrix();
        Ok(Self { m, n, order, nodes, weights, reference, ref_diff })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Nodes per edge.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panels(&self) -> usize {
        self.n / self.order
    }

    pub fn panel_width(&self) -> f64 {
        1.0 / self.panels() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights on one edge.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn idx(&self, edge: usize, i: usize) -> usize {
        edge * self.n + i
    }

    pub fn panel_of(&self, x: f64) -> usize {
        ((x * self.panels() as f64).floor() as usize).min(self.panels() - 1)
    }

    /// Values of the panel basis at `x`, together with the first node of that panel.
    pub fn interp(&self, x: f64) -> (usize, Vec<f64>) {
        self.interp_in(self.panel_of(x), x)
    }

    /// Basis of panel `p` evaluated at `x`, which may lie outside the panel.
    pub fn interp_in(&self, p: usize, x: f64) -> (usize, Vec<f64>) {
        let h = self.panel_width();
        let t = 2.0 * (x - p as f64 * h) / h - 1.0;
        (p * self.order, self.reference.basis(t))
    }

    /// Boundary trace at 0 or 1, extrapolated from the adjacent panel.
    pub fn trace(&self, at_one: bool) -> (usize, Vec<f64>) {
        if at_one {
            self.interp_in(self.panels() - 1, 1.0)
        } else {
            self.interp_in(0, 0.0)
        }
    }

    /// Block-diagonal panel differentiation matrix for one edge.
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let scale = 2.0 / self.panel_width();
        let mut d = DMatrix::zeros(self.n, self.n);
        for p in 0..self.panels() {
            let o = p * self.order;
            for i in 0..self.order {
                for k in 0..self.order {
                    d[(o + i, o + k)] = scale * self.ref_diff[i][k];
                }
            }
        }
        d
    }

    /// Sample `f(edge, x)` at every node.
    pub fn sample(&self, f: impl Fn(usize, f64) -> C64) -> DVector<C64> {
        DVector::from_iterator(
            self.dim(),
            (0..self.m).flat_map(|j| self.nodes.iter().map(move |&x| (j, x))).map(|(j, x)| f(j, x)),
        )
    }

    /// Weights repeated over all edges.
    pub fn full_weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), (0..self.m).flat_map(|_| self.weights.iter().copied()))
    }

    /// Discrete `L^2` inner product `sum w f conj(g)`.
    pub fn inner(&self, f: &DVector<C64>, g: &DVector<C64>) -> C64 {
        f.iter()
            .zip(g.iter())
            .enumerate()
            .map(|(k, (a, b))| a * b.conj() * self.weights[k % self.n])
            .sum()
    }

    pub fn norm(&self, f: &DVector<C64>) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    /// Interpolate a grid function at arbitrary points on one edge.
    pub fn eval_edge(&self, f: &DVector<C64>, edge: usize, x: f64) -> C64 {
        let (o, b) = self.interp(x);
        b.iter().enumerate().map(|(k, bk)| f[self.idx(edge, o + k)] * *bk).sum()
    }
}

/// Uniform grid on [-r, 0] with panel-polynomial calculus.
#[derive(Debug, Clone)]
pub struct DelayGrid {
    r: f64,
    intervals: usize,
    span: usize,
    reference: Lagrange,
    ref_diff: Vec<Vec<f64>>,
}

impl DelayGrid {
    /// `intervals` uniform cells; panels of up to 8 cells carry the interpolant.
    pub fn new(r: f64, intervals: usize) -> Result<Self> {
        if r.is_nan() || r <= 0.0 || intervals == 0 {
            return Err(Error::Shape(format!("delay grid needs r > 0 and cells > 0 (r = {r}, cells = {intervals})")));
        }
        let span = [8, 6, 4, 2, 1].into_iter().find(|&s| intervals.is_multiple_of(s)).unwrap_or(1);
        let reference = Lagrange::new((0..=span).map(|k| k as f64).collect());
        let ref_diff = reference.diff_matrix();
        Ok(Self { r, intervals, span, reference, ref_diff })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.r / self.intervals as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.r + k as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len()).map(|k| if k == 0 || k == self.intervals { 0.5 * h } else { h }).collect()
    }

    fn panels(&self) -> usize {
        self.intervals / self.span
    }

    fn panel_of(&self, theta: f64) -> usize {
        let s = (theta + self.r) / (self.step() * self.span as f64);
        (s.floor().max(0.0) as usize).min(self.panels() - 1)
    }

    fn panel_start(&self, p: usize) -> f64 {
        self.node(p * self.span)
    }

    /// Panel basis at `theta` and the first node index of that panel.
    pub fn interp(&self, theta: f64) -> (usize, Vec<f64>) {
        let p = self.panel_of(theta);
        let t = (theta - self.panel_start(p)) / self.step();
        (p * self.span, self.reference.basis(t))
    }

    /// Integrals of the panel basis over `[a, b]`, which must lie in one panel.
    fn basis_integrals(&self, p: usize, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.span + 1];
        for (s, w) in gauss_on(a, b, self.span + 2) {
            let t = (s - self.panel_start(p)) / self.step();
            for (o, v) in out.iter_mut().zip(self.reference.basis(t)) {
                *o += w * v;
            }
        }
        out
    }

    /// Split `[a, b]` into pieces each contained in one panel.
    fn pieces(&self, a: f64, b: f64) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        let mut lo = a;
        while lo < b - 1e-15 * self.r {
            let p = self.panel_of(lo + 1e-13 * self.r);
            let hi = self.panel_start(p + 1).min(b);
            out.push((p, lo, hi));
            lo = hi;
        }
        out
    }

    /// Weights `c_k` with `int_a^b f = sum_k c_k f(theta_k)` for the panel interpolant.
    pub fn integral_row(&self, a: f64, b: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (p, lo, hi) in self.pieces(a, b) {
            for (k, v) in self.basis_integrals(p, lo, hi).into_iter().enumerate() {
                out.push((p * self.span + k, v));
            }
        }
        out
    }

    /// Differentiation matrix; shared panel nodes take the left panel.
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let h = self.step();
        let mut d = DMatrix::zeros(n, n);
        for row in 0..n {
            let (p, local) = if row == 0 { (0, 0) } else { ((row - 1) / self.span, (row - 1) % self.span + 1) };
            let o = p * self.span;
            for k in 0..=self.span {
                d[(row, o + k)] = self.ref_diff[local][k] / h;
            }
        }
        d
    }

    /// Resolvent of `d/dtheta` with `g(0) = 0`: `g(theta) = int_theta^0 e^{mu (theta - s)} f(s) ds`.
    pub fn resolvent(&self, mu: C64) -> DMatrix<C64> {
        let n = self.len();
        let mut out = DMatrix::zeros(n, n);
        let q = self.span + 12;
        for a in 0..self.intervals {
            let ta = self.node(a);
            for (p, lo, hi) in self.pieces(ta, 0.0) {
                for (s, w) in gauss_on(lo, hi, q) {
                    let e = (mu * (ta - s)).exp() * w;
                    let t = (s - self.panel_start(p)) / self.step();
                    for (k, b) in self.reference.basis(t).into_iter().enumerate() {
                        out[(a, p * self.span + k)] += e * b;
                    }
                }
            }
        }
        out
    }

    /// Sampled exponential `theta -> e^{mu theta}`.
    pub fn exp(&self, mu: C64) -> DVector<C64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|k| (mu * self.node(k)).exp()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_and_weights() {
        for (m, n) in [(1, 4), (2, 16), (3, 33), (1, 256)] {
            let g = Grid::new(m, n).unwrap();
            assert_eq!(g.dim(), m * n);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1.0).abs() <= 1e-15, "n={n} sum {s}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
        assert!(Grid::new(1, 3).is_err());
    }

    #[test]
    fn panel_calculus_exact_on_low_degree() {
        let g = Grid::new(1, 32).unwrap();
        let f = |x: f64| 1.0 + x - 3.0 * x.powi(5);
        let vals = DVector::from_iterator(32, g.nodes().iter().map(|&x| f(x)));
        let d = g.diff_matrix() * &vals;
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((d[i] - (1.0 - 15.0 * x.powi(4))).abs() < 1e-11);
        }
        for at_one in [false, true] {
            let (o, b) = g.trace(at_one);
            let v: f64 = b.iter().enumerate().map(|(k, bk)| bk * vals[o + k]).sum();
            let x = if at_one { 1.0 } else { 0.0 };
            assert!((v - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_grid_resolvent_solves_ode() {
        let dg = DelayGrid::new(1.0, 32).unwrap();
        let mu = C64::new(0.7, -1.1);
        let f = DVector::from_iterator(33, dg.nodes().iter().map(|&t| C64::new(t.cos(), 0.0)));
        let g = dg.resolvent(mu) * &f;
        assert!(g[32].norm() < 1e-15);
        let d = dg.diff_matrix().map(|v| C64::new(v, 0.0)) * &g;
        for k in 0..32 {
            let res = mu * g[k] - d[k] - f[k];
            assert!(res.norm() < 1e-8, "k={k} res={}", res.norm());
        }
    }

    #[test]
    fn delay_grid_integrals() {
        let dg = DelayGrid::new(2.0, 16).unwrap();
        let row = dg.integral_row(-1.3, -0.1);
        let v: f64 = row.iter().map(|&(k, c)| c * dg.node(k).powi(3)).sum();
        let exact = (0.1f64.powi(4) - 1.3f64.powi(4)) / 4.0;
        assert!((v - exact).abs() < 1e-13);
    }
}
