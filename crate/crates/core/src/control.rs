//! Frequency-domain reachability and approximate controllability at grid resolution.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DelayGrid, Grid};
use crate::linalg::{from_weighted, numerical_rank, pointwise, svd_full, to_weighted};
use crate::operators::{char_matrix, dirichlet, resolvent_perturbed, Diagnostics, FrequencyToolkit};
use crate::parallel::par_map;
use crate::profile::Profile;
use crate::spectral::Root;
use crate::system::System;
use crate::C64;

/// Default relative SVD threshold.
pub const DEFAULT_EPS: f64 = 1e-8;
const WITNESS_TOL: f64 = 1e-8;

/// Control operators as read from a configuration file.
///
/// `k` is `n x n_v`; `k0` and `b0` hold one column per distributed input, each a profile per edge.
/// The delayed input measures live in the [`DelayBank`](crate::delay::DelayBank).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    #[serde(default)]
    pub k: Vec<Vec<f64>>,
    #[serde(default)]
    pub k0: Vec<Vec<Profile>>,
    #[serde(default)]
    pub b0: Vec<Vec<Profile>>,
}

impl ControlConfig {
    pub fn n_v(&self) -> usize {
        self.k.first().map_or(0, Vec::len)
    }

    pub fn realize(&self, sys: &System) -> Result<Controls> {
        let n = sys.n_vertices();
        let n_u = sys.bank.n_u();
        if !self.k.is_empty() && self.k.len() != n {
            return Err(Error::Shape(format!("k needs {n} rows, got {}", self.k.len())));
        }
        let n_v = self.n_v();
        if let Some(i) = self.k.iter().position(|row| row.len() != n_v || row.iter().any(|v| !v.is_finite())) {
            return Err(Error::Shape(format!("k row {i} must hold {n_v} finite entries")));
        }
        let k = DMatrix::from_fn(n, n_v, |i, l| C64::from(self.k[i][l]));
        let distributed = |name: &str, cols: &[Vec<Profile>]| -> Result<DMatrix<C64>> {
            if cols.is_empty() {
                return Ok(DMatrix::zeros(sys.dim(), n_u));
            }
            if cols.len() != n_u {
                return Err(Error::Shape(format!("{name} needs {n_u} columns, got {}", cols.len())));
            }
            let mut out = DMatrix::zeros(sys.dim(), n_u);
            for (p, col) in cols.iter().enumerate() {
                if col.len() != sys.m() {
                    return Err(Error::Shape(format!("{name} column {p} needs {} edge profiles", sys.m())));
                }
                for prof in col {
                    prof.validate()?;
                }
                out.set_column(p, &sys.grid.sample(|j, x| C64::from(col[j].eval(x))));
            }
            Ok(out)
        };
        Ok(Controls { k, k0: distributed("k0", &self.k0)?, b0: distributed("b0", &self.b0)? })
    }
}

/// Control operators on a grid: `K` (`n x n_v`), `K0`, `B0` (`mN x n_u`).
#[derive(Debug, Clone, PartialEq)]
pub struct Controls {
    pub k: DMatrix<C64>,
    pub k0: DMatrix<C64>,
    pub b0: DMatrix<C64>,
}

impl Controls {
    /// Boundary injection only.
    pub fn boundary(sys: &System, k: DMatrix<f64>) -> Self {
        let n_u = sys.bank.n_u();
        Self { k: k.map(C64::from), k0: DMatrix::zeros(sys.dim(), n_u), b0: DMatrix::zeros(sys.dim(), n_u) }
    }

    pub fn none(sys: &System) -> Self {
        Self::boundary(sys, DMatrix::zeros(sys.n_vertices(), 0))
    }

    pub fn n_v(&self) -> usize {
        self.k.ncols()
    }

    pub fn n_u(&self) -> usize {
        self.k0.ncols()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let s = C64::from(s);
        Self { k: &self.k * s, k0: &self.k0 * s, b0: &self.b0 * s }
    }
}

/// Reachability columns at one frequency.
#[derive(Debug, Clone)]
pub struct ReachabilitySample {
    pub mu: C64,
    /// `Xi D_mu (I - A_mu)^{-1} K`, `mN x n_v`.
    pub boundary: DMatrix<C64>,
    /// `Xi (K0 + K1 e_mu + R(mu, A_{G,M}) (B0 + B1 e_mu))`, `mN x n_u`.
    pub distributed: DMatrix<C64>,
    pub diagnostics: Diagnostics,
}

impl ReachabilitySample {
    pub fn columns(&self) -> DMatrix<C64> {
        hstack(&[&self.boundary, &self.distributed])
    }
}

fn hstack(blocks: &[&DMatrix<C64>]) -> DMatrix<C64> {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.ncols() > 0 {
            out.columns_mut(at, b.ncols()).copy_from(*b);
            at += b.ncols();
        }
    }
    out
}

/// `K0 + K1 e_mu + R(mu, A_{G,M}) (B0 + B1 e_mu)` before the action of `Xi`.
fn distributed_raw(sys: &System, tk: &FrequencyToolkit, ctrl: &Controls) -> DMatrix<C64> {
    &ctrl.k0 + tk.k1_columns(sys) + &tk.r_agm * (&ctrl.b0 + tk.b1_columns(sys))
}

pub fn reach_columns(sys: &System, tk: &FrequencyToolkit, ctrl: &Controls) -> ReachabilitySample {
    ReachabilitySample {
        mu: tk.mu,
        boundary: &tk.xi * tk.boundary_injection(&ctrl.k),
        distributed: &tk.xi * distributed_raw(sys, tk, ctrl),
        diagnostics: tk.diagnostics(),
    }
}

/// A frequency whose toolkit could not be assembled.
#[derive(Debug, Clone, Serialize)]
pub struct Flagged {
    pub mu: C64,
    pub reason: String,
}

/// Reachability samples at every `mu`, with singular frequencies set aside.
pub fn sample_reachability(sys: &System, ctrl: &Controls, mus: &[C64]) -> (Vec<ReachabilitySample>, Vec<Flagged>) {
    let results = par_map(mus, |&mu| FrequencyToolkit::new(sys, mu).map(|tk| reach_columns(sys, &tk, ctrl)));
    let mut ok = Vec::new();
    let mut flagged = Vec::new();
    for (mu, r) in mus.iter().zip(results) {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => flagged.push(Flagged { mu: *mu, reason: e.to_string() }),
        }
    }
    (ok, flagged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ControllableAtGrid,
    Defective,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ControllableAtGrid => "controllable-at-grid",
            Verdict::Defective => "defective",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllabilityReport {
    pub samples: Vec<C64>,
    pub columns: usize,
    pub sigmas: Vec<f64>,
    pub rank: usize,
    pub dim: usize,
    pub defect: f64,
    pub sigma_min: f64,
    pub verdict: Verdict,
    pub witness_pairing: f64,
    pub witness: Option<Vec<C64>>,
    #[serde(skip)]
    pub aggregate: DMatrix<C64>,
}

impl ControllabilityReport {
    pub fn passes(&self) -> bool {
        self.verdict == Verdict::ControllableAtGrid
    }
}

/// Columns scaled to unit weighted norm; numerically zero columns are dropped.
pub fn normalize_columns(grid: &Grid, cols: &DMatrix<C64>) -> DMatrix<C64> {
    let norms: Vec<f64> = cols.column_iter().map(|c| grid.norm(&c.into_owned())).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..cols.ncols()).filter(|&j| norms[j] > 1e-14 * top && norms[j] > 0.0).collect();
    let mut out = DMatrix::zeros(cols.nrows(), keep.len());
    for (k, &j) in keep.iter().enumerate() {
        out.set_column(k, &(cols.column(j) / C64::from(norms[j])));
    }
    out
}

/// Weighted SVD rank test of the union of column families.
pub fn rank_columns(grid: &Grid, cols: &DMatrix<C64>, eps: f64) -> ControllabilityReport {
    let dim = grid.dim();
    let agg = normalize_columns(grid, cols);
    let spec = svd_full(&to_weighted(grid, &agg));
    let sigma1 = spec.sigma.first().copied().unwrap_or(0.0);
    let rank = numerical_rank(&spec.sigma, eps, sigma1);
    let sigma_min = if spec.sigma.len() >= dim { spec.sigma[dim - 1] } else { 0.0 };
    let (verdict, witness, witness_pairing) = if rank == dim {
        (Verdict::ControllableAtGrid, None, f64::NAN)
    } else {
        let phi = from_weighted(grid, &spec.u.column(dim - 1).into_owned());
        let pairing = agg
            .column_iter()
            .map(|c| grid.inner(&c.into_owned(), &phi).norm())
            .fold(0.0, f64::max);
        let v = if pairing <= WITNESS_TOL { Verdict::Defective } else { Verdict::Inconclusive };
        (v, Some(phi.iter().copied().collect()), pairing)
    };
    ControllabilityReport {
        samples: vec![],
        columns: agg.ncols(),
        sigmas: spec.sigma,
        rank,
        dim,
        defect: (dim - rank) as f64 / dim as f64,
        sigma_min,
        verdict,
        witness_pairing,
        witness,
        aggregate: agg,
    }
}

pub fn aggregate_and_rank(grid: &Grid, samples: &[ReachabilitySample], eps: f64) -> Result<ControllabilityReport> {
    if samples.is_empty() {
        return Err(Error::AllSamplesSingular);
    }
    let blocks: Vec<DMatrix<C64>> = samples.iter().map(ReachabilitySample::columns).collect();
    let refs: Vec<&DMatrix<C64>> = blocks.iter().collect();
    let mut report = rank_columns(grid, &hstack(&refs), eps);
    report.samples = samples.iter().map(|s| s.mu).collect();
    Ok(report)
}

/// Outcome of the rank test for boundary input `l`.
#[derive(Debug, Clone, Serialize)]
pub struct RankConditionReport {
    pub l: usize,
    /// Dimension of the annihilator of the boundary family.
    pub d_l: usize,
    /// Rank of the pairing matrix.
    pub rank: usize,
    pub pairing_shape: (usize, usize),
    pub boundary_zero: bool,
    pub pass: bool,
}

/// Rank condition for boundary input `l` over the frequencies in `samples`.
///
/// `Upsilon_l` is the annihilator of the columns `Xi D_mu (I - A_mu)^{-1} K_l`; the pairing rows are
/// the distributed columns and the remaining boundary columns at every sample.
pub fn rank_condition_t4(grid: &Grid, samples: &[ReachabilitySample], l: usize, eps: f64) -> Result<RankConditionReport> {
    if samples.is_empty() {
        return Err(Error::AllSamplesSingular);
    }
    let n_v = samples[0].boundary.ncols();
    if l >= n_v {
        return Err(Error::Shape(format!("boundary input {l} out of range 0..{n_v}")));
    }
    let dim = grid.dim();
    let mut own = DMatrix::zeros(dim, samples.len());
    let mut rest = Vec::new();
    for (s, sample) in samples.iter().enumerate() {
        own.set_column(s, &sample.boundary.column(l));
        let others: Vec<usize> = (0..n_v).filter(|&k| k != l).collect();
        rest.push(sample.boundary.select_columns(&others));
        rest.push(sample.distributed.clone());
    }
    let refs: Vec<&DMatrix<C64>> = rest.iter().collect();
    let rest = normalize_columns(grid, &hstack(&refs));
    let own = normalize_columns(grid, &own);
    let all = to_weighted(grid, &hstack(&[&own, &rest]));
    let threshold = eps * all.singular_values().max();

    let own_spec = svd_full(&to_weighted(grid, &own));
    let r_l = own_spec.sigma.iter().filter(|&&s| s >= threshold && s > 0.0).count();
    let d_l = dim - r_l;
    let basis = own_spec.u.columns(r_l, d_l).into_owned();
    let pairing = to_weighted(grid, &rest).adjoint() * &basis;
    let rank = if pairing.is_empty() {
        0
    } else {
        pairing.singular_values().iter().filter(|&&s| s >= threshold && s > 0.0).count()
    };
    Ok(RankConditionReport {
        l,
        d_l,
        rank,
        pairing_shape: pairing.shape(),
        boundary_zero: r_l == 0,
        pass: rank == d_l,
    })
}

/// Reachability test vectors in `X x L^2([-r, 0], X)` at one frequency.
#[derive(Debug, Clone)]
pub struct FullStateSample {
    pub mu: C64,
    /// `mN x (n_v + n_u)`.
    pub x: DMatrix<C64>,
    /// Row `k * mN + i` holds the delay-line value at `theta_k`, grid node `i`.
    pub delay: DMatrix<C64>,
    /// `e_mu` on the delay grid.
    pub e: DVector<C64>,
}

impl FullStateSample {
    pub fn delay_at(&self, k: usize) -> DMatrix<C64> {
        let dim = self.x.nrows();
        self.delay.rows(k * dim, dim).into_owned()
    }

    /// `(e_mu)^T` applied to the delay-line block: `sum_k w_k conj(e_k) g_k`.
    pub fn project_delay(&self, dgrid: &DelayGrid) -> DMatrix<C64> {
        let w = dgrid.weights();
        (0..dgrid.len()).fold(DMatrix::zeros(self.x.nrows(), self.x.ncols()), |acc, k| {
            acc + self.delay_at(k) * (self.e[k].conj() * w[k])
        })
    }
}

/// The two blocks of the full-state test vectors for controls `(v, u)`.
pub fn full_state_columns(sys: &System, tk: &FrequencyToolkit, ctrl: &Controls, dgrid: &DelayGrid) -> FullStateSample {
    let grid = &sys.grid;
    let e = dgrid.exp(tk.mu);
    let bkv = tk.boundary_injection(&ctrl.k);
    let zero_v = DMatrix::zeros(grid.dim(), ctrl.n_v());
    // R(mu, A_{G,M})(BKv + B0 u), Gamma-lifted inputs, and e_mu u.
    let r_in = hstack(&[&bkv, &(&tk.r_agm * &ctrl.b0)]);
    let k0 = hstack(&[&zero_v, &ctrl.k0]);
    let om_in = hstack(&[&zero_v, &(tk.k1_columns(sys) + &tk.r_agm * tk.b1_columns(sys))]);
    let b1 = hstack(&[&zero_v, &(&tk.r_agm * tk.b1_columns(sys))]);

    let l_lift = &tk.r_agm * pointwise(grid, &tk.le);
    let gamma_arg = &r_in + &k0;
    let x = &r_in + &l_lift * (&tk.xi * (&gamma_arg + &om_in)) + &b1;
    let lifted = &tk.xi * (&gamma_arg + &om_in);
    let dim = grid.dim();
    let mut delay = DMatrix::zeros(dim * dgrid.len(), x.ncols());
    for k in 0..dgrid.len() {
        delay.rows_mut(k * dim, dim).copy_from(&(&lifted * e[k]));
    }
    FullStateSample { mu: tk.mu, x, delay, e }
}

/// Full-state samples at every `mu`, with singular frequencies set aside.
pub fn sample_full_state(sys: &System, ctrl: &Controls, mus: &[C64], dgrid: &DelayGrid) -> Vec<FullStateSample> {
    par_map(mus, |&mu| FrequencyToolkit::new(sys, mu).ok().map(|tk| full_state_columns(sys, &tk, ctrl, dgrid)))
        .into_iter()
        .flatten()
        .collect()
}

/// Rank test of the delay-line block after pairing with `e_mu`.
pub fn lp_corollary(grid: &Grid, dgrid: &DelayGrid, samples: &[FullStateSample], eps: f64) -> Result<ControllabilityReport> {
    if samples.is_empty() {
        return Err(Error::AllSamplesSingular);
    }
    let blocks: Vec<DMatrix<C64>> = samples.iter().map(|s| s.project_delay(dgrid)).collect();
    let refs: Vec<&DMatrix<C64>> = blocks.iter().collect();
    let mut report = rank_columns(grid, &hstack(&refs), eps);
    report.samples = samples.iter().map(|s| s.mu).collect();
    Ok(report)
}

/// Frequency-span test for delay-free systems from `R(mu, A_{G,M})` alone.
pub fn hautus_delay_free(sys: &System, ctrl: &Controls, mus: &[C64], eps: f64) -> Result<ControllabilityReport> {
    let b = &sys.bank;
    if !(b.eta.is_zero() && b.gamma.is_zero() && b.vartheta.is_zero()) {
        return Err(Error::Shape("the delay-free test needs D = L = K1 = 0".into()));
    }
    let n = sys.n_vertices();
    let cols = par_map(mus, |&mu| -> Option<DMatrix<C64>> {
        let res = resolvent_perturbed(sys, mu).ok()?;
        let inv = (DMatrix::<C64>::identity(n, n) - char_matrix(sys, mu)).try_inverse()?;
        let boundary = dirichlet(sys, mu) * (inv * &ctrl.k);
        let distributed = &ctrl.k0 + res * (&ctrl.b0 + crate::linalg::constant_columns(&sys.grid, &b.nu.symbol(mu)));
        Some(hstack(&[&boundary, &distributed]))
    });
    let kept: Vec<(C64, DMatrix<C64>)> = mus.iter().zip(cols).filter_map(|(mu, c)| c.map(|c| (*mu, c))).collect();
    if kept.is_empty() {
        return Err(Error::AllSamplesSingular);
    }
    let refs: Vec<&DMatrix<C64>> = kept.iter().map(|(_, c)| c).collect();
    let mut report = rank_columns(&sys.grid, &hstack(&refs), eps);
    report.samples = kept.iter().map(|(mu, _)| *mu).collect();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MuStrategy {
    /// Jittered samples on one vertical line right of every root.
    #[default]
    Line,
    /// Line samples plus small rings around located roots.
    Rings,
}

const RING_RADIUS: f64 = 0.05;
const RING_POINTS: usize = 4;
const ROOT_CLEARANCE: f64 = 1e-2;

/// `pi N / tau_min`, the grid's resolvable bandwidth.
pub fn default_bandwidth(sys: &System) -> f64 {
    PI * sys.grid.n() as f64 / sys.tau_min()
}

/// Deterministic frequency samples avoiding the located roots.
pub fn choose_mu_samples(roots: &[Root], count: usize, strategy: MuStrategy, omega_max: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = roots.iter().map(|r| r.mu.re).fold(0.0, f64::max) + 1.0;
    let clear = |z: C64| roots.iter().all(|r| (z - r.mu).norm() >= ROOT_CLEARANCE);
    let mut out = Vec::with_capacity(count);
    if strategy == MuStrategy::Rings {
        let budget = count / 2;
        let mut near: Vec<&Root> = roots.iter().collect();
        near.sort_by(|a, b| a.mu.norm().total_cmp(&b.mu.norm()));
        'roots: for r in near {
            let phase: f64 = rng.gen_range(0.0..(2.0 * PI / RING_POINTS as f64));
            for q in 0..RING_POINTS {
                if out.len() >= budget {
                    break 'roots;
                }
                let a = phase + 2.0 * PI * q as f64 / RING_POINTS as f64;
                let z = r.mu + C64::from_polar(RING_RADIUS, a);
                if clear(z) {
                    out.push(z);
                }
            }
        }
    }
    let line = count - out.len();
    for k in 0..line {
        let jitter: f64 = rng.gen_range(-0.25..0.25);
        let t = (k as f64 + 0.5 + jitter) / line as f64;
        let z = C64::new(alpha, -omega_max + 2.0 * omega_max * t);
        out.push(if clear(z) { z } else { z + ROOT_CLEARANCE * 2.0 });
    }
    out
}
