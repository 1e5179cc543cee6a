//! Resolvent of the full generator on `X + L^2([-r,0]; X) + L^2([-r,0]; C^{n_u})`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::grid::DelayGrid;
use crate::linalg::{apply_pointwise, pointwise};
use crate::operators::toolkit::FrequencyToolkit;
use crate::system::System;
use crate::C64;

/// State of the product space sampled on the spatial grid and the delay grid.
///
/// Row `k` of `phi` and `psi` holds the value at `theta_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    pub x: DVector<C64>,
    pub phi: DMatrix<C64>,
    pub psi: DMatrix<C64>,
}

impl ProductVector {
    pub fn zeros(dim: usize, thetas: usize, n_u: usize) -> Self {
        Self { x: DVector::zeros(dim), phi: DMatrix::zeros(thetas, dim), psi: DMatrix::zeros(thetas, n_u) }
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.phi.norm_squared() + self.psi.norm_squared()).sqrt()
    }

    fn add(mut self, other: &Self) -> Self {
        self.x += &other.x;
        self.phi += &other.phi;
        self.psi += &other.psi;
        self
    }
}

/// Delay functionals `D`, `L`, `K1`, `B1` discretized on a delay grid.
#[derive(Debug, Clone)]
pub struct DelayFunctionals {
    pub grid: DelayGrid,
    eta: Vec<DMatrix<C64>>,
    gamma: Vec<DMatrix<C64>>,
    vartheta: Vec<DMatrix<C64>>,
    nu: Vec<DMatrix<C64>>,
}

impl DelayFunctionals {
    pub fn new(sys: &System, intervals: usize) -> Result<Self> {
        let grid = DelayGrid::new(sys.bank.r(), intervals)?;
        let conv = |w: Vec<DMatrix<f64>>| w.into_iter().map(|m| m.map(C64::from)).collect();
        Ok(Self {
            eta: conv(sys.bank.eta.grid_weights(&grid)),
            gamma: conv(sys.bank.gamma.grid_weights(&grid)),
            vartheta: conv(sys.bank.vartheta.grid_weights(&grid)),
            nu: conv(sys.bank.nu.grid_weights(&grid)),
            grid,
        })
    }

    fn state(sys: &System, weights: &[DMatrix<C64>], phi: &DMatrix<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(sys.dim());
        for (k, w) in weights.iter().enumerate() {
            if w.iter().any(|v| v.norm() != 0.0) {
                out += apply_pointwise(&sys.grid, w, &phi.row(k).transpose());
            }
        }
        out
    }

    fn input(sys: &System, weights: &[DMatrix<C64>], psi: &DMatrix<C64>) -> DVector<C64> {
        let mut edge = DVector::<C64>::zeros(sys.m());
        for (k, w) in weights.iter().enumerate() {
            edge += w * psi.row(k).transpose();
        }
        let n = sys.grid.n();
        DVector::from_fn(sys.dim(), |i, _| edge[i / n])
    }

    /// `D phi`.
    pub fn d(&self, sys: &System, phi: &DMatrix<C64>) -> DVector<C64> {
        Self::state(sys, &self.eta, phi)
    }

    /// `L phi`.
    pub fn l(&self, sys: &System, phi: &DMatrix<C64>) -> DVector<C64> {
        Self::state(sys, &self.gamma, phi)
    }

    /// `K1 psi`, constant along each edge.
    pub fn k1(&self, sys: &System, psi: &DMatrix<C64>) -> DVector<C64> {
        Self::input(sys, &self.vartheta, psi)
    }

    /// `B1 psi`.
    pub fn b1(&self, sys: &System, psi: &DMatrix<C64>) -> DVector<C64> {
        Self::input(sys, &self.nu, psi)
    }
}

/// Outer product `e_mu (theta) y`.
fn lift(e: &DVector<C64>, y: &DVector<C64>) -> DMatrix<C64> {
    e * y.transpose()
}

/// The 3x3 block resolvent at one `mu`.
pub struct BlockResolvent<'a> {
    sys: &'a System,
    tk: &'a FrequencyToolkit,
    f: &'a DelayFunctionals,
    rq: DMatrix<C64>,
    e: DVector<C64>,
    de_inv: DMatrix<C64>,
    s: DMatrix<C64>,
    t: DMatrix<C64>,
}

impl<'a> BlockResolvent<'a> {
    pub fn new(sys: &'a System, tk: &'a FrequencyToolkit, f: &'a DelayFunctionals) -> Result<Self> {
        let grid = &sys.grid;
        let m = sys.m();
        let id = DMatrix::<C64>::identity(m, m);
        let de_inv_small = (&id - &tk.de)
            .try_inverse()
            .ok_or(crate::Error::NeutralSingularity { mu: tk.mu, det: tk.neutral_det })?;
        let de_inv = pointwise(grid, &de_inv_small);
        let s = &de_inv * &tk.r_agm;
        let dim = grid.dim();
        let t = (DMatrix::<C64>::identity(dim, dim) - pointwise(grid, &tk.le) * &s)
            .try_inverse()
            .ok_or(crate::Error::DelayCharacteristicSingularity { mu: tk.mu, cond: f64::INFINITY })?;
        Ok(Self { sys, tk, f, rq: f.grid.resolvent(tk.mu), e: f.grid.exp(tk.mu), de_inv, s, t })
    }

    pub fn delay_grid(&self) -> &DelayGrid {
        &self.f.grid
    }

    /// `Gamma(mu) y = e_mu Xi(mu) y`.
    pub fn gamma(&self, y: &DVector<C64>) -> DMatrix<C64> {
        lift(&self.e, &(&self.tk.xi * y))
    }

    /// `Gamma` through `R(1, Delta(mu)) e_mu (I - De_mu)^{-1}`.
    pub fn gamma_via_delta(&self, y: &DVector<C64>) -> DMatrix<C64> {
        self.r1_delta(&lift(&self.e, &(&self.de_inv * y)))
    }

    /// `R(1, Delta(mu)) h = h + e_mu S (I - Le S)^{-1} L h`, `S = (I - De)^{-1} R_{AGM}`.
    pub fn r1_delta(&self, h: &DMatrix<C64>) -> DMatrix<C64> {
        let lh = self.f.l(self.sys, h);
        h + lift(&self.e, &(&self.s * (&self.t * lh)))
    }

    /// `R(mu, Q_D) f = w + e_mu (I - De)^{-1} D w`, `w = R(mu, Q^X) f`.
    pub fn rq_d(&self, f: &DMatrix<C64>) -> DMatrix<C64> {
        let w = &self.rq * f;
        let dw = self.f.d(self.sys, &w);
        &w + lift(&self.e, &(&self.de_inv * dw))
    }

    /// `R(mu, Q^U) g`.
    pub fn rq_u(&self, g: &DMatrix<C64>) -> DMatrix<C64> {
        &self.rq * g
    }

    /// `Omega(mu) psi = Gamma (K1 + R_{AGM} B1) psi`.
    pub fn omega(&self, psi: &DMatrix<C64>) -> DMatrix<C64> {
        let y = self.f.k1(self.sys, psi) + &self.tk.r_agm * self.f.b1(self.sys, psi);
        self.gamma(&y)
    }

    /// `Lambda(mu) psi = R_{AGM} (L Omega + B1) psi`.
    pub fn lambda(&self, psi: &DMatrix<C64>) -> DVector<C64> {
        let om = self.omega(psi);
        &self.tk.r_agm * (self.f.l(self.sys, &om) + self.f.b1(self.sys, psi))
    }

    /// Contribution of the X component.
    pub fn column_x(&self, x: &DVector<C64>) -> ProductVector {
        let rx = &self.tk.r_agm * x;
        let phi = self.gamma(&rx);
        let rho = &rx + &self.tk.r_agm * self.f.l(self.sys, &phi);
        ProductVector { x: rho, phi, psi: DMatrix::zeros(self.f.grid.len(), self.sys.bank.n_u()) }
    }

    /// Contribution of the delay-line component.
    pub fn column_phi(&self, f: &DMatrix<C64>) -> ProductVector {
        let phi = self.r1_delta(&self.rq_d(f));
        let rho = &self.tk.r_agm * self.f.l(self.sys, &phi);
        ProductVector { x: rho, phi, psi: DMatrix::zeros(self.f.grid.len(), self.sys.bank.n_u()) }
    }

    /// Contribution of the input-history component.
    pub fn column_psi(&self, g: &DMatrix<C64>) -> ProductVector {
        let psi = self.rq_u(g);
        ProductVector { x: self.lambda(&psi), phi: self.omega(&psi), psi }
    }

    /// `R(mu, A) (x, f, g)` assembled from the nine blocks.
    pub fn apply(&self, v: &ProductVector) -> ProductVector {
        self.column_x(&v.x).add(&self.column_phi(&v.phi)).add(&self.column_psi(&v.psi))
    }
}

/// Direct collocation of `mu - A` on the product grid.
pub struct DiscreteGenerator<'a> {
    sys: &'a System,
    f: &'a DelayFunctionals,
    dx: DMatrix<f64>,
    dtheta: DMatrix<f64>,
}

/// Image of `mu - A_h`, split into collocation rows and boundary rows.
#[derive(Debug, Clone)]
pub struct GeneratorImage {
    pub x: DVector<C64>,
    /// `c(1) rho(1) - B c(0) rho(0)` per edge.
    pub x_boundary: DVector<C64>,
    /// Rows `theta_0 .. theta_{N-1}`.
    pub phi: DMatrix<C64>,
    /// `phi(0) - rho - D phi - K1 psi`.
    pub phi_boundary: DVector<C64>,
    pub psi: DMatrix<C64>,
    pub psi_boundary: DVector<C64>,
}

impl<'a> DiscreteGenerator<'a> {
    pub fn new(sys: &'a System, f: &'a DelayFunctionals) -> Self {
        Self { sys, f, dx: sys.grid.diff_matrix(), dtheta: f.grid.diff_matrix() }
    }

    pub fn apply_shifted(&self, mu: C64, y: &ProductVector) -> GeneratorImage {
        let sys = self.sys;
        let grid = &sys.grid;
        let n = grid.n();
        let mut ax = DVector::zeros(grid.dim());
        for j in 0..sys.m() {
            let e = sys.flow.edge(j);
            let seg = y.x.rows(j * n, n);
            let d = self.dx.map(C64::from) * seg;
            for i in 0..n {
                let x = grid.nodes()[i];
                ax[j * n + i] = e.c(x) * d[i] + e.q(x) * seg[i];
            }
        }
        let x = &y.x * mu - ax - self.f.l(sys, &y.phi) - self.f.b1(sys, &y.psi);

        let b = sys.network.line_graph_adjacency();
        let (o0, b0) = grid.trace(false);
        let (o1, b1) = grid.trace(true);
        let trace = |j: usize, o: usize, b: &[f64]| -> C64 { b.iter().enumerate().map(|(k, bk)| y.x[j * n + o + k] * *bk).sum() };
        let x_boundary = DVector::from_fn(sys.m(), |j, _| {
            let out = trace(j, o1, &b1) * sys.flow.edge(j).c(1.0);
            let inflow: C64 =
                (0..sys.m()).map(|k| trace(k, o0, &b0) * (sys.flow.edge(k).c(0.0) * b[(j, k)])).sum();
            out - inflow
        });

        let last = self.f.grid.intervals();
        let dt = self.dtheta.map(C64::from);
        let dphi = &dt * &y.phi;
        let dpsi = &dt * &y.psi;
        let phi = (&y.phi * mu - dphi).rows(0, last).into_owned();
        let psi = (&y.psi * mu - dpsi).rows(0, last).into_owned();
        let phi_boundary =
            y.phi.row(last).transpose() - &y.x - self.f.d(sys, &y.phi) - self.f.k1(sys, &y.psi);
        let psi_boundary = y.psi.row(last).transpose();
        GeneratorImage { x, x_boundary, phi, phi_boundary, psi, psi_boundary }
    }

    /// `|| (mu - A_h) y - v || / ||v||` over all rows.
    pub fn relative_residual(&self, mu: C64, y: &ProductVector, v: &ProductVector) -> f64 {
        let img = self.apply_shifted(mu, y);
        let last = self.f.grid.intervals();
        let r2 = (&img.x - &v.x).norm_squared()
            + img.x_boundary.norm_squared()
            + (&img.phi - v.phi.rows(0, last)).norm_squared()
            + img.phi_boundary.norm_squared()
            + (&img.psi - v.psi.rows(0, last)).norm_squared()
            + img.psi_boundary.norm_squared();
        r2.sqrt() / v.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{DelayBank, DelayMeasure};
    use crate::network::{EdgeCoefficients, Network};

    #[test]
    fn delay_free_blocks_are_triangular() {
        let sys = System::new(Network::single_loop(), EdgeCoefficients::uniform(1, 1.0, 0.0), DelayBank::zero(1.0, 1, 1), 16)
            .unwrap();
        let mu = C64::new(0.8, 0.3);
        let tk = FrequencyToolkit::new(&sys, mu).unwrap();
        let f = DelayFunctionals::new(&sys, 16).unwrap();
        let br = BlockResolvent::new(&sys, &tk, &f).unwrap();
        let x = sys.grid.sample(|_, x| C64::new(x.cos(), x));
        let col = br.column_x(&x);
        assert!((&col.x - &tk.r_agm * &x).norm() < 1e-13);
        assert!((&col.phi - lift(&br.e, &(&tk.r_agm * &x))).norm() < 1e-13);
        let phi = DMatrix::from_fn(17, 16, |k, i| C64::new((k as f64 * 0.1).sin(), i as f64 * 0.01));
        let col = br.column_phi(&phi);
        assert!(col.x.norm() < 1e-14);
        assert!((&col.phi - &br.rq * &phi).norm() < 1e-13);
        let g = DMatrix::from_fn(17, 1, |k, _| C64::new(1.0 + k as f64, 0.0));
        let col = br.column_psi(&g);
        assert!(col.x.norm() < 1e-14 && col.phi.norm() < 1e-14);
        let zero = br.apply(&ProductVector::zeros(16, 17, 1));
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn gamma_two_ways() {
        let eta = DelayMeasure::atom(1.0, -1.0, DMatrix::from_element(1, 1, 0.4)).unwrap();
        let gamma = DelayMeasure::atom(1.0, -0.5, DMatrix::from_element(1, 1, 0.3)).unwrap();
        let bank = DelayBank::new(eta, gamma, DelayMeasure::zero(1.0, 1, 1), DelayMeasure::zero(1.0, 1, 1)).unwrap();
        let sys = System::new(Network::single_loop(), EdgeCoefficients::uniform(1, 1.0, -0.2), bank, 16).unwrap();
        let tk = FrequencyToolkit::new(&sys, C64::new(0.6, 2.0)).unwrap();
        let f = DelayFunctionals::new(&sys, 32).unwrap();
        let br = BlockResolvent::new(&sys, &tk, &f).unwrap();
        let y = sys.grid.sample(|_, x| C64::new(1.0 - x * x, 0.5 * x));
        let a = br.gamma(&y);
        let b = br.gamma_via_delta(&y);
        assert!((&a - &b).norm() <= 1e-8 * a.norm(), "{}", (&a - &b).norm());
    }
}
