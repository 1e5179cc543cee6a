//! Characteristic roots by the argument principle, and resolvent norm sweeps.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::weighted_norm;
use crate::operators::{char_det, FrequencyToolkit};
use crate::parallel::par_map;
use crate::system::System;
use crate::C64;

const CONTOUR_MIN: f64 = 1e-9;
const POLISH_TOL: f64 = 1e-10;
const MAX_POLISH: usize = 50;
const MIN_CELL: f64 = 1e-6;
const BASE_POINTS: usize = 512;
const MAX_DEPTH: usize = 30;
const MAX_STEP: f64 = 0.5;
const PERTURBATIONS: usize = 3;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self { re_min, re_max, im_min, im_max }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: C64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    fn grow(&self, by: f64) -> Self {
        Self::new(self.re_min - by, self.re_max + by, self.im_min - by, self.im_max + by)
    }

    /// Split at fractions `(fx, fy)` of the sides.
    fn quarter(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let x = self.re_min + fx * self.width();
        let y = self.im_min + fy * self.height();
        [
            Rect::new(self.re_min, x, self.im_min, y),
            Rect::new(x, self.re_max, self.im_min, y),
            Rect::new(self.re_min, x, y, self.im_max),
            Rect::new(x, self.re_max, y, self.im_max),
        ]
    }
}

/// Which determinant a root belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `det(I - A_mu)`.
    Boundary,
    /// `det(I - D e_mu)`.
    Neutral,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Boundary => "boundary",
            Family::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub mu: C64,
    pub family: Family,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellCount {
    pub cell: Rect,
    pub winding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    pub rect: Rect,
    pub roots: Vec<Root>,
    pub cells: Vec<CellCount>,
}

impl RootReport {
    /// Roots counted with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn max_real(&self) -> Option<f64> {
        self.roots.iter().map(|r| r.mu.re).reduce(f64::max)
    }

    /// Union of two reports over the same rectangle.
    pub fn merge(mut self, other: RootReport) -> RootReport {
        self.roots.extend(other.roots);
        self.cells.extend(other.cells);
        self.roots.sort_by(|a, b| a.mu.im.total_cmp(&b.mu.im).then(a.mu.re.total_cmp(&b.mu.re)));
        self
    }
}

/// Number of zeros of `f` inside `rect`, from the phase increments along the boundary.
pub fn winding_number(f: &(dyn Fn(C64) -> C64 + Sync), rect: &Rect) -> Result<usize> {
    let corners = [
        C64::new(rect.re_min, rect.im_min),
        C64::new(rect.re_max, rect.im_min),
        C64::new(rect.re_max, rect.im_max),
        C64::new(rect.re_min, rect.im_max),
    ];
    let per_side = BASE_POINTS / 4;
    let mut min_abs = f64::INFINITY;
    let mut total = 0.0;
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        let at = |k: usize| a + (b - a) * (k as f64 / per_side as f64);
        let mut prev = (at(0), f(at(0)));
        for k in 1..=per_side {
            let next = (at(k), f(at(k)));
            total += phase(f, prev, next, 0, &mut min_abs);
            prev = next;
        }
    }
    if min_abs.is_nan() || min_abs < CONTOUR_MIN {
        return Err(Error::ContourTooClose { min_abs, attempts: 0 });
    }
    Ok((total / TAU).round().max(0.0) as usize)
}

fn phase(f: &(dyn Fn(C64) -> C64 + Sync), a: (C64, C64), b: (C64, C64), depth: usize, min_abs: &mut f64) -> f64 {
    *min_abs = min_abs.min(a.1.norm()).min(b.1.norm());
    let whole = (b.1 / a.1).arg();
    if depth >= MAX_DEPTH || min_abs.is_nan() || *min_abs < CONTOUR_MIN {
        return whole;
    }
    let mid = 0.5 * (a.0 + b.0);
    let m = (mid, f(mid));
    let left = (m.1 / a.1).arg();
    let right = (b.1 / m.1).arg();
    if whole.abs() < MAX_STEP && (left + right - whole).abs() < 1e-6 {
        return whole;
    }
    phase(f, a, m, depth + 1, min_abs) + phase(f, m, b, depth + 1, min_abs)
}

/// Newton iteration with a central-difference derivative.
pub fn polish_root(f: &(dyn Fn(C64) -> C64 + Sync), mu0: C64) -> Result<C64> {
    let mut mu = mu0;
    let mut val = f(mu);
    if val.norm() <= POLISH_TOL * 1e-3 {
        return Ok(mu);
    }
    for it in 0..MAX_POLISH {
        let h = 1e-7 * mu.norm().max(1.0);
        let d = (f(mu + h) - f(mu - h)) / (2.0 * h);
        let step = val / d;
        if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 1e6 {
            return Err(Error::Divergence { iterations: it + 1, residual: val.norm() });
        }
        mu -= step;
        val = f(mu);
        if val.norm() <= POLISH_TOL && step.norm() <= 1e-10 * mu.norm().max(1.0) {
            return Ok(mu);
        }
    }
    if val.norm() <= POLISH_TOL {
        return Ok(mu);
    }
    Err(Error::Divergence { iterations: MAX_POLISH, residual: val.norm() })
}

/// Locate every zero of `f` in `rect`, starting from a `2^depth x 2^depth` subdivision.
pub fn count_roots(f: &(dyn Fn(C64) -> C64 + Sync), rect: Rect, depth: usize, family: Family) -> Result<RootReport> {
    let mut outer = rect;
    let mut attempt = 0;
    let total = loop {
        match winding_number(f, &outer) {
            Ok(w) => break w,
            Err(Error::ContourTooClose { min_abs, .. }) => {
                attempt += 1;
                if attempt > PERTURBATIONS {
                    return Err(Error::ContourTooClose { min_abs, attempts: PERTURBATIONS });
                }
                outer = rect.grow(1e-3 * attempt as f64 * rect.diameter());
            }
            Err(e) => return Err(e),
        }
    };
    let mut report = RootReport { rect: outer, roots: vec![], cells: vec![] };
    if total == 0 {
        return Ok(report);
    }
    let k = 1usize << depth;
    let mut cells = Vec::new();
    'attempts: for attempt in 0..=PERTURBATIONS {
        let shift = 0.0137 * (attempt as f64 + 1.0) / k as f64;
        let cut = |i: usize| if i == 0 { 0.0 } else if i == k { 1.0 } else { (i as f64 + shift * (1.0 + 0.37 * i as f64)) / k as f64 };
        let grid: Vec<Rect> = (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .map(|(a, b)| {
                Rect::new(
                    outer.re_min + cut(a) * outer.width(),
                    outer.re_min + cut(a + 1) * outer.width(),
                    outer.im_min + cut(b) * outer.height(),
                    outer.im_min + cut(b + 1) * outer.height(),
                )
            })
            .collect();
        let counts = par_map(&grid, |c| winding_number(f, c));
        let mut ok = Vec::with_capacity(grid.len());
        for (c, w) in grid.iter().zip(counts) {
            match w {
                Ok(w) => ok.push((*c, w)),
                Err(Error::ContourTooClose { .. }) if attempt < PERTURBATIONS => continue 'attempts,
                Err(Error::ContourTooClose { min_abs, .. }) => {
                    return Err(Error::ContourTooClose { min_abs, attempts: PERTURBATIONS })
                }
                Err(e) => return Err(e),
            }
        }
        if ok.iter().map(|(_, w)| w).sum::<usize>() == total || attempt == PERTURBATIONS {
            cells = ok;
            break;
        }
    }
    let found = par_map(&cells, |&(c, w)| refine(f, c, w, family));
    for r in found {
        let (roots, counts) = r?;
        report.roots.extend(roots);
        report.cells.extend(counts);
    }
    report.roots.sort_by(|a, b| a.mu.im.total_cmp(&b.mu.im).then(a.mu.re.total_cmp(&b.mu.re)));
    Ok(report)
}

fn refine(f: &(dyn Fn(C64) -> C64 + Sync), cell: Rect, winding: usize, family: Family) -> Result<(Vec<Root>, Vec<CellCount>)> {
    let mut roots = Vec::new();
    let mut counts = vec![CellCount { cell, winding }];
    if winding == 0 {
        return Ok((roots, counts));
    }
    if let Ok(mu) = polish_root(f, cell.center()) {
        if cell.grow(1e-9 * cell.diameter().max(1.0)).contains(mu) {
            let h = (0.25 * cell.width().min(cell.height())).min(1e-3);
            let tight = Rect::new(mu.re - h, mu.re + h, mu.im - h, mu.im + h);
            if winding == 1 || winding_number(f, &tight).ok() == Some(winding) {
                roots.push(Root { mu, family, multiplicity: winding, residual: f(mu).norm() });
                return Ok((roots, counts));
            }
        }
    }
    if cell.diameter() < MIN_CELL {
        let mu = polish_root(f, cell.center()).unwrap_or(cell.center());
        roots.push(Root { mu, family, multiplicity: winding, residual: f(mu).norm() });
        return Ok((roots, counts));
    }
    for attempt in 0..=PERTURBATIONS {
        let off = 0.5 + 0.0173 * (attempt as f64 + 1.0);
        let parts = cell.quarter(off, 1.0 - off);
        let ws: Result<Vec<usize>> = parts.iter().map(|p| winding_number(f, p)).collect();
        match ws {
            Ok(ws) if ws.iter().sum::<usize>() == winding => {
                counts.clear();
                for (p, w) in parts.iter().zip(ws) {
                    let (r, c) = refine(f, *p, w, family)?;
                    roots.extend(r);
                    counts.extend(c);
                }
                return Ok((roots, counts));
            }
            Ok(_) | Err(Error::ContourTooClose { .. }) if attempt < PERTURBATIONS => continue,
            Ok(_) => break,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ContourTooClose { min_abs: 0.0, attempts: PERTURBATIONS })
}

/// Roots of both determinant families of a system.
pub fn scan(sys: &System, rect: Rect, depth: usize) -> Result<RootReport> {
    let boundary = count_roots(&|mu| char_det(sys, mu), rect, depth, Family::Boundary)?;
    if sys.bank.eta.is_zero() {
        return Ok(boundary);
    }
    let neutral = count_roots(&|mu| sys.bank.neutral_det(mu), rect, depth, Family::Neutral)?;
    Ok(boundary.merge(neutral))
}

/// Norms along `Re mu = alpha`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSample {
    pub mu: C64,
    pub xi_norm: f64,
    pub r_agm_norm: f64,
    pub char_inv_norm: f64,
    pub singular: Option<String>,
}

pub fn resolvent_norm_sweep(sys: &System, alpha: f64, im_range: (f64, f64), samples: usize) -> Vec<SweepSample> {
    if samples == 0 || im_range.1 <= im_range.0 {
        return vec![];
    }
    let mus: Vec<C64> = (0..samples)
        .map(|k| {
            let t = if samples == 1 { 0.5 } else { k as f64 / (samples - 1) as f64 };
            C64::new(alpha, im_range.0 + t * (im_range.1 - im_range.0))
        })
        .collect();
    par_map(&mus, |&mu| match FrequencyToolkit::new(sys, mu) {
        Ok(tk) => SweepSample {
            mu,
            xi_norm: weighted_norm(&sys.grid, &tk.xi),
            r_agm_norm: weighted_norm(&sys.grid, &tk.r_agm),
            char_inv_norm: tk.char_inv.singular_values().max(),
            singular: None,
        },
        Err(e) => SweepSample { mu, xi_norm: f64::NAN, r_agm_norm: f64::NAN, char_inv_norm: f64::NAN, singular: Some(e.to_string()) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn loop_det(mu: C64) -> C64 {
        C64::from(1.0) - (-mu).exp()
    }

    #[test]
    fn winding_counts_lattice() {
        assert_eq!(winding_number(&loop_det, &Rect::new(-1.0, 1.0, -7.0, 7.0)).unwrap(), 3);
        assert_eq!(winding_number(&loop_det, &Rect::new(0.5, 1.0, -7.0, 7.0)).unwrap(), 0);
        assert!(winding_number(&loop_det, &Rect::new(0.0, 1.0, -1.0, 1.0)).is_err());
    }

    #[test]
    fn polish_examples() {
        let root = C64::new(0.0, 2.0 * PI);
        let p = polish_root(&loop_det, C64::new(0.1, 6.0)).unwrap();
        assert!((p - root).norm() < 1e-10);
        assert_eq!(polish_root(&loop_det, root).unwrap(), root);
        assert!(matches!(polish_root(&loop_det, C64::new(50.0, 0.0)), Err(Error::Divergence { .. })));
    }

    #[test]
    fn empty_box() {
        let r = count_roots(&loop_det, Rect::new(0.5, 1.0, -3.0, 3.0), 2, Family::Boundary).unwrap();
        assert!(r.roots.is_empty());
    }

    #[test]
    fn double_roots_of_two_loops() {
        let det = |mu: C64| (C64::from(1.0) - (-mu).exp()) * (C64::from(1.0) - (-mu * 2.0).exp());
        let r = count_roots(&det, Rect::new(-1.0, 1.0, -7.0, 7.0), 2, Family::Boundary).unwrap();
        // pi i k for |k| <= 2, with 0 and +-2 pi i double
        assert_eq!(r.count(), 8);
        for root in &r.roots {
            let k = root.mu.im / PI;
            assert!((k - k.round()).abs() < 1e-5 && root.mu.re.abs() < 1e-5);
            let expect = if (k.round() as i64) % 2 == 0 { 2 } else { 1 };
            assert_eq!(root.multiplicity, expect, "{root:?}");
            assert!(root.residual <= 1e-10);
        }
    }
}
