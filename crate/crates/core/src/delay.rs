//! Matrix-valued delay measures on [-r, 0] and their actions.

use std::collections::VecDeque;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::DelayGrid;
use crate::C64;

/// Point mass `weight * delta_theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub theta: f64,
    pub weight: DMatrix<f64>,
}

/// Constant density `value` on `[from, to]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPiece {
    pub from: f64,
    pub to: f64,
    pub value: DMatrix<f64>,
}

/// Stieltjes measure with matrix coefficients: atoms plus a piecewise-constant density.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayMeasure {
    r: f64,
    rows: usize,
    cols: usize,
    atoms: Vec<Atom>,
    density: Vec<DensityPiece>,
}

impl DelayMeasure {
    pub fn new(r: f64, rows: usize, cols: usize, atoms: Vec<Atom>, density: Vec<DensityPiece>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Measure(format!("horizon r = {r} must be positive")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.weight.shape() != (rows, cols) {
                return Err(Error::Measure(format!("atom {i} has shape {:?}, expected ({rows}, {cols})", a.weight.shape())));
            }
            if a.theta >= 0.0 {
                return Err(Error::Gap { atom: i, theta: a.theta, gap: -a.theta, dt: 0.0 });
            }
            if a.theta < -r || !a.weight.iter().all(|v| v.is_finite()) {
                return Err(Error::Measure(format!("atom {i} at theta = {} outside [-{r}, 0)", a.theta)));
            }
        }
        for (i, p) in density.iter().enumerate() {
            if p.value.shape() != (rows, cols) {
                return Err(Error::Measure(format!("density piece {i} has shape {:?}", p.value.shape())));
            }
            if !(p.from >= -r && p.from < p.to && p.to <= 0.0) || !p.value.iter().all(|v| v.is_finite()) {
                return Err(Error::Measure(format!("density piece {i} on [{}, {}] is not inside [-{r}, 0]", p.from, p.to)));
            }
        }
        Ok(Self { r, rows, cols, atoms, density })
    }

    pub fn zero(r: f64, rows: usize, cols: usize) -> Self {
        Self::new(r, rows, cols, vec![], vec![]).expect("valid horizon")
    }

    /// Single atom `weight` at `theta`.
    pub fn atom(r: f64, theta: f64, weight: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = weight.shape();
        Self::new(r, rows, cols, vec![Atom { theta, weight }], vec![])
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[DensityPiece] {
        &self.density
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.weight.iter().all(|&v| v == 0.0))
            && self.density.iter().all(|p| p.value.iter().all(|&v| v == 0.0))
    }

    /// Distance from 0 of the support; `r` for the zero measure.
    pub fn gap(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| -a.theta)
            .chain(self.density.iter().map(|p| -p.to))
            .fold(self.r, f64::min)
    }

    /// `sum_i W_i e^{mu theta_i} + int rho(theta) e^{mu theta} dtheta`.
    pub fn symbol(&self, mu: C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for a in &self.atoms {
            let e = (mu * a.theta).exp();
            out += a.weight.map(|v| e * v);
        }
        for p in &self.density {
            let e = exp_moment(mu, p.from, p.to);
            out += p.value.map(|v| e * v);
        }
        out
    }

    /// Entrywise total variation.
    pub fn total_variation(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for a in &self.atoms {
            out += a.weight.abs();
        }
        for p in &self.density {
            out += p.value.abs() * (p.to - p.from);
        }
        out
    }

    /// Total mass `sum W_i + int rho`.
    pub fn mass(&self) -> DMatrix<f64> {
        self.symbol(C64::new(0.0, 0.0)).map(|v| v.re)
    }

    /// Ok iff the support keeps a distance `>= dt` from 0.
    pub fn check_gap(&self, dt: f64) -> Result<()> {
        for (i, a) in self.atoms.iter().enumerate() {
            if -a.theta < dt {
                return Err(Error::Gap { atom: i, theta: a.theta, gap: -a.theta, dt });
            }
        }
        for (i, p) in self.density.iter().enumerate() {
            if -p.to < dt {
                return Err(Error::Gap { atom: self.atoms.len() + i, theta: p.to, gap: -p.to, dt });
            }
        }
        Ok(())
    }

    /// Weights on history samples `theta_k = -k dt` (linear interpolation in time).
    pub fn step_weights(&self, dt: f64) -> Vec<(usize, DMatrix<f64>)> {
        let mut acc: Vec<(usize, DMatrix<f64>)> = Vec::new();
        let mut add = |k: usize, w: DMatrix<f64>| match acc.iter_mut().find(|(i, _)| *i == k) {
            Some((_, m)) => *m += w,
            None => acc.push((k, w)),
        };
        for a in &self.atoms {
            let s = -a.theta / dt;
            let k = (s + 1e-12).floor();
            let frac = (s - k).max(0.0);
            add(k as usize, &a.weight * (1.0 - frac));
            if frac > 1e-12 {
                add(k as usize + 1, &a.weight * frac);
            }
        }
        for p in &self.density {
            let (s0, s1) = (-p.to / dt, -p.from / dt);
            let lo = s0.floor() as usize;
            let hi = s1.ceil() as usize;
            for k in lo..=hi {
                let w = hat_integral(k as f64, s0, s1) * dt;
                if w != 0.0 {
                    add(k, &p.value * w);
                }
            }
        }
        acc.sort_by_key(|(k, _)| *k);
        acc
    }

    /// Sum of the measure against a history buffer.
    pub fn apply_history<T>(&self, hist: &HistoryBuffer<T>) -> Result<DVector<T>>
    where
        T: ComplexField<RealField = f64> + Copy,
    {
        if hist.dim() != self.cols {
            return Err(Error::Shape(format!("history has dimension {}, measure expects {}", hist.dim(), self.cols)));
        }
        if hist.span() < self.r - 1e-12 * self.r {
            return Err(Error::HistoryTooShort { required: self.r, available: hist.span() });
        }
        let mut out = DVector::from_element(self.rows, T::zero());
        for (k, w) in self.step_weights(hist.dt()) {
            let sample = hist.get(k).ok_or(Error::HistoryTooShort {
                required: k as f64 * hist.dt(),
                available: hist.span(),
            })?;
            out += w.map(T::from_real) * sample;
        }
        Ok(out)
    }

    /// Node weights on a delay grid (panel interpolation for atoms, exact panel integrals for density).
    pub fn grid_weights(&self, grid: &DelayGrid) -> Vec<DMatrix<f64>> {
        let mut out = vec![DMatrix::zeros(self.rows, self.cols); grid.len()];
        for a in &self.atoms {
            let (o, b) = grid.interp(a.theta);
            for (k, bk) in b.into_iter().enumerate() {
                out[o + k] += &a.weight * bk;
            }
        }
        for p in &self.density {
            for (k, c) in grid.integral_row(p.from, p.to) {
                out[k] += &p.value * c;
            }
        }
        out
    }
}

/// `int_a^b e^{mu t} dt`, stable near `mu = 0`.
fn exp_moment(mu: C64, a: f64, b: f64) -> C64 {
    let len = b - a;
    let z = mu * len;
    if z.norm() < 1e-3 {
        let series = C64::from(1.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
        (mu * a).exp() * len * series
    } else {
        ((mu * b).exp() - (mu * a).exp()) / mu
    }
}

/// `int_{s0}^{s1} max(0, 1 - |s - k|) ds`.
fn hat_integral(k: f64, s0: f64, s1: f64) -> f64 {
    let rise = |s: f64| 0.5 * (s - k + 1.0).powi(2);
    let fall = |s: f64| -0.5 * (k + 1.0 - s).powi(2);
    let mut total = 0.0;
    let (a, b) = (s0.max(k - 1.0), s1.min(k));
    if b > a {
        total += rise(b) - rise(a);
    }
    let (a, b) = (s0.max(k), s1.min(k + 1.0));
    if b > a {
        total += fall(b) - fall(a);
    }
    total
}

/// Samples `h(-k dt)`, `k = 0, 1, ...`, newest first.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T> {
    dt: f64,
    dim: usize,
    capacity: usize,
    samples: VecDeque<DVector<T>>,
}

impl<T> HistoryBuffer<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    /// Buffer holding `capacity` samples of dimension `dim`.
    pub fn new(dt: f64, dim: usize, capacity: usize) -> Self {
        Self { dt, dim, capacity, samples: VecDeque::with_capacity(capacity) }
    }

    /// Fill from a function of `theta`, covering `[-span, 0]`.
    pub fn from_fn(dt: f64, span: f64, dim: usize, f: impl Fn(f64) -> DVector<T>) -> Self {
        let count = (span / dt - 1e-9).ceil() as usize + 2;
        let mut buf = Self::new(dt, dim, count);
        for k in (0..count).rev() {
            buf.push(f(-(k as f64) * dt));
        }
        buf
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length of the covered interval.
    pub fn span(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn push(&mut self, v: DVector<T>) {
        debug_assert_eq!(v.len(), self.dim);
        if self.samples.len() == self.capacity {
            self.samples.pop_back();
        }
        self.samples.push_front(v);
    }

    /// Sample at `theta = -k dt`.
    pub fn get(&self, k: usize) -> Option<&DVector<T>> {
        self.samples.get(k)
    }

    pub fn newest_mut(&mut self) -> Option<&mut DVector<T>> {
        self.samples.front_mut()
    }
}

/// The four measures `D`, `L`, `K1`, `B1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBank {
    pub eta: DelayMeasure,
    pub gamma: DelayMeasure,
    pub vartheta: DelayMeasure,
    pub nu: DelayMeasure,
}

impl DelayBank {
    pub fn new(eta: DelayMeasure, gamma: DelayMeasure, vartheta: DelayMeasure, nu: DelayMeasure) -> Result<Self> {
        let r = eta.r();
        if [&gamma, &vartheta, &nu].iter().any(|d| (d.r() - r).abs() > 1e-14 * r) {
            return Err(Error::Measure("all four measures need the same horizon r".into()));
        }
        let m = eta.rows;
        let nu_cols = vartheta.cols;
        if eta.shape() != (m, m) || gamma.shape() != (m, m) {
            return Err(Error::Shape(format!("state measures must be {m}x{m}")));
        }
        if vartheta.shape() != (m, nu_cols) || nu.shape() != (m, nu_cols) {
            return Err(Error::Shape(format!("input measures must be {m}x{nu_cols}")));
        }
        Ok(Self { eta, gamma, vartheta, nu })
    }

    /// No delays at all.
    pub fn none(m: usize, n_u: usize) -> Self {
        Self::zero(1.0, m, n_u)
    }

    pub fn zero(r: f64, m: usize, n_u: usize) -> Self {
        Self {
            eta: DelayMeasure::zero(r, m, m),
            gamma: DelayMeasure::zero(r, m, m),
            vartheta: DelayMeasure::zero(r, m, n_u),
            nu: DelayMeasure::zero(r, m, n_u),
        }
    }

    pub fn r(&self) -> f64 {
        self.eta.r()
    }

    pub fn m(&self) -> usize {
        self.eta.rows
    }

    pub fn n_u(&self) -> usize {
        self.vartheta.cols
    }

    /// `det(I - D e_mu)`.
    pub fn neutral_det(&self, mu: C64) -> C64 {
        let m = self.m();
        (DMatrix::<C64>::identity(m, m) - self.eta.symbol(mu)).determinant()
    }
}
