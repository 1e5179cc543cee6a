use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{constant_columns, inverse_with_cond, pointwise};
use crate::system::System;
use crate::C64;

pub(crate) const DET_TOL: f64 = 1e-12;
pub(crate) const COND_MAX: f64 = 1e14;

/// `R(mu, A)`: transport resolvent with zero inflow at `x = 1`.
pub fn resolvent_free(sys: &System, mu: C64) -> DMatrix<C64> {
    let grid = &sys.grid;
    let (n, p) = (grid.n(), grid.order());
    let mut out = DMatrix::zeros(grid.dim(), grid.dim());
    for j in 0..sys.m() {
        let tables = &sys.flow.kernels[j];
        let (xs, ts) = (sys.flow.node_xi(j), sys.flow.node_tau(j));
        let base = j * n;
        for i in 0..n {
            let pan = grid.panel_of(grid.nodes()[i]);
            let (pts, bas) = &tables.partial[i];
            let mut row = |points: &[crate::flow::KernelPoint], basis: &[Vec<f64>], first: usize| {
                for (pt, b) in points.iter().zip(basis) {
                    let e = (C64::from(pt.xi - xs[i]) - mu * (pt.tau - ts[i])).exp() * pt.weight;
                    for (k, bk) in b.iter().enumerate() {
                        out[(base + i, base + first + k)] += e * *bk;
                    }
                }
            };
            row(pts, bas, pan * p);
            for later in pan + 1..grid.panels() {
                row(&tables.full[later], &tables.basis, later * p);
            }
        }
    }
    out
}

/// `M R(mu, A)`: vertex outflux `sum_{head k = i} c_k(0) (R f)_k(0)`, evaluated from the kernel at `x = 0`.
pub fn trace_resolvent(sys: &System, mu: C64) -> DMatrix<C64> {
    let grid = &sys.grid;
    let (n, p) = (grid.n(), grid.order());
    let mut out = DMatrix::zeros(sys.n_vertices(), grid.dim());
    for j in 0..sys.m() {
        let tables = &sys.flow.kernels[j];
        let c0 = sys.flow.edge(j).c(0.0);
        let head = sys.network.head(j);
        for (pan, points) in tables.full.iter().enumerate() {
            for (pt, b) in points.iter().zip(&tables.basis) {
                let e = (C64::from(pt.xi) - mu * pt.tau).exp() * pt.weight * c0;
                for (k, bk) in b.iter().enumerate() {
                    out[(head, j * n + pan * p + k)] += e * *bk;
                }
            }
        }
    }
    out
}

/// Value of `(D_mu v)_j` at `x` per unit of `v_{tail(j)}`: `w e^{xi(x,1) - mu tau(x,1)} / c_j(1)`.
pub fn dirichlet_factor(sys: &System, mu: C64, j: usize, x: f64) -> C64 {
    let w = sys.network.weight_of(j);
    let lift = w / sys.flow.edge(j).c(1.0);
    lift * (C64::from(sys.flow.xi(j, x, 1.0)) - mu * sys.flow.tau(j, x, 1.0)).exp()
}

/// `D_mu`: `mN x n` lifting of vertex data into `ker(mu - A_m)`.
pub fn dirichlet(sys: &System, mu: C64) -> DMatrix<C64> {
    let grid = &sys.grid;
    let mut out = DMatrix::zeros(grid.dim(), sys.n_vertices());
    for j in 0..sys.m() {
        let lift = sys.network.weight_of(j) / sys.flow.edge(j).c(1.0);
        let t = sys.network.tail(j);
        for i in 0..grid.n() {
            let e = C64::from(sys.flow.xi_to_end(j, i)) - mu * sys.flow.tau_to_end(j, i);
            out[(grid.idx(j, i), t)] = e.exp() * lift;
        }
    }
    out
}

/// Characteristic matrix: `A[i, p] = sum_{j: p -> i} w_pj (c_j(0)/c_j(1)) e^{xi_j(0,1) - mu tau_j(0,1)}`.
pub fn char_matrix(sys: &System, mu: C64) -> DMatrix<C64> {
    let n = sys.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..sys.m() {
        let e = sys.flow.edge(j);
        let ratio = e.c(0.0) / e.c(1.0);
        a[(sys.network.head(j), sys.network.tail(j))] += sys.flow.transfer(j, mu) * sys.network.weight_of(j) * ratio;
    }
    a
}

/// `det(I - A_mu)`.
pub fn char_det(sys: &System, mu: C64) -> C64 {
    let n = sys.n_vertices();
    (DMatrix::<C64>::identity(n, n) - char_matrix(sys, mu)).determinant()
}

/// Grid boundary trace `M f = I^+ c(0) f(0)`, extrapolated from the first panel.
pub fn mtrace(sys: &System) -> DMatrix<f64> {
    let grid = &sys.grid;
    let (o, b) = grid.trace(false);
    let mut out = DMatrix::zeros(sys.n_vertices(), grid.dim());
    for j in 0..sys.m() {
        let c0 = sys.flow.edge(j).c(0.0);
        for (k, bk) in b.iter().enumerate() {
            out[(sys.network.head(j), grid.idx(j, o + k))] += c0 * bk;
        }
    }
    out
}

/// Grid trace read through the lifting: `G f = I^- c(1) f(1)`.
pub fn gtrace(sys: &System) -> DMatrix<f64> {
    let grid = &sys.grid;
    let (o, b) = grid.trace(true);
    let mut out = DMatrix::zeros(sys.n_vertices(), grid.dim());
    for j in 0..sys.m() {
        let c1 = sys.flow.edge(j).c(1.0);
        for (k, bk) in b.iter().enumerate() {
            out[(sys.network.tail(j), grid.idx(j, o + k))] += c1 * bk;
        }
    }
    out
}

/// `R(mu, A_{G,M}) = R(mu, A) + D_mu (I - A_mu)^{-1} M R(mu, A)`.
pub fn couple(ra: &DMatrix<C64>, dmu: &DMatrix<C64>, char_inv: &DMatrix<C64>, mra: &DMatrix<C64>) -> DMatrix<C64> {
    ra + dmu * (char_inv * mra)
}

/// Resolvent of the boundary-coupled transport operator.
pub fn resolvent_perturbed(sys: &System, mu: C64) -> Result<DMatrix<C64>> {
    let amu = char_matrix(sys, mu);
    let n = amu.nrows();
    let ima = DMatrix::<C64>::identity(n, n) - &amu;
    let det = ima.determinant();
    if det.norm() <= DET_TOL {
        return Err(Error::CharacteristicSingularity { mu, det });
    }
    let inv = ima.lu().try_inverse().ok_or(Error::CharacteristicSingularity { mu, det })?;
    Ok(couple(&resolvent_free(sys, mu), &dirichlet(sys, mu), &inv, &trace_resolvent(sys, mu)))
}

/// All frequency-domain operators of one system at one `mu`.
#[derive(Debug, Clone)]
pub struct FrequencyToolkit {
    pub mu: C64,
    pub ra: DMatrix<C64>,
    pub mra: DMatrix<C64>,
    pub dmu: DMatrix<C64>,
    pub amu: DMatrix<C64>,
    pub char_det: C64,
    pub char_inv: DMatrix<C64>,
    pub r_agm: DMatrix<C64>,
    pub de: DMatrix<C64>,
    pub le: DMatrix<C64>,
    pub k1e: DMatrix<C64>,
    pub b1e: DMatrix<C64>,
    pub neutral_det: C64,
    pub xi: DMatrix<C64>,
    pub cond_char: f64,
    pub cond_xi: f64,
}

/// Scalars reported by the CLI for one toolkit.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub mu: [f64; 2],
    pub char_det: [f64; 2],
    pub neutral_det: [f64; 2],
    pub cond_char: f64,
    pub cond_xi: f64,
}

impl FrequencyToolkit {
    pub fn new(sys: &System, mu: C64) -> Result<Self> {
        let n = sys.n_vertices();
        let m = sys.m();
        let amu = char_matrix(sys, mu);
        let ima = DMatrix::<C64>::identity(n, n) - &amu;
        let char_det = ima.determinant();
        if char_det.norm() <= DET_TOL {
            return Err(Error::CharacteristicSingularity { mu, det: char_det });
        }
        let (char_inv, cond_char) =
            inverse_with_cond(&ima).ok_or(Error::CharacteristicSingularity { mu, det: char_det })?;
        let ra = resolvent_free(sys, mu);
        let mra = trace_resolvent(sys, mu);
        let dmu = dirichlet(sys, mu);
        let r_agm = couple(&ra, &dmu, &char_inv, &mra);

        let bank = &sys.bank;
        let de = bank.eta.symbol(mu);
        let le = bank.gamma.symbol(mu);
        let k1e = bank.vartheta.symbol(mu);
        let b1e = bank.nu.symbol(mu);
        let neutral_det = (DMatrix::<C64>::identity(m, m) - &de).determinant();
        if neutral_det.norm() <= DET_TOL {
            return Err(Error::NeutralSingularity { mu, det: neutral_det });
        }
        let grid = &sys.grid;
        let (xi, cond_xi) = if bank.eta.is_zero() && bank.gamma.is_zero() {
            (DMatrix::identity(grid.dim(), grid.dim()), 1.0)
        } else {
            let mut assembled = DMatrix::<C64>::identity(grid.dim(), grid.dim()) - pointwise(grid, &de);
            if !bank.gamma.is_zero() {
                assembled -= &r_agm * pointwise(grid, &le);
            }
            match inverse_with_cond(&assembled) {
                Some((inv, cond)) if cond <= COND_MAX => (inv, cond),
                Some((_, cond)) => return Err(Error::DelayCharacteristicSingularity { mu, cond }),
                None => return Err(Error::DelayCharacteristicSingularity { mu, cond: f64::INFINITY }),
            }
        };
        Ok(Self {
            mu,
            ra,
            mra,
            dmu,
            amu,
            char_det,
            char_inv,
            r_agm,
            de,
            le,
            k1e,
            b1e,
            neutral_det,
            xi,
            cond_char,
            cond_xi,
        })
    }

    /// `I - De_mu - R(mu, A_{G,M}) Le_mu` on the grid.
    pub fn delay_characteristic(&self, sys: &System) -> DMatrix<C64> {
        let g = &sys.grid;
        DMatrix::<C64>::identity(g.dim(), g.dim()) - pointwise(g, &self.de) - &self.r_agm * pointwise(g, &self.le)
    }

    /// `K1 e_mu` as edge-wise constant functions, `mN x n_u`.
    pub fn k1_columns(&self, sys: &System) -> DMatrix<C64> {
        constant_columns(&sys.grid, &self.k1e)
    }

    pub fn b1_columns(&self, sys: &System) -> DMatrix<C64> {
        constant_columns(&sys.grid, &self.b1e)
    }

    /// `D_mu (I - A_mu)^{-1} K`.
    pub fn boundary_injection(&self, k: &DMatrix<C64>) -> DMatrix<C64> {
        &self.dmu * (&self.char_inv * k)
    }

    pub fn apply_xi(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.xi * v
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let pair = |z: C64| [z.re, z.im];
        Diagnostics {
            mu: pair(self.mu),
            char_det: pair(self.char_det),
            neutral_det: pair(self.neutral_det),
            cond_char: self.cond_char,
            cond_xi: self.cond_xi,
        }
    }
}
