//! Independent reference solver for `mu g - c g' - q g = f` on each edge.

use crate::network::EdgeCoefficients;
use crate::C64;

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Tolerances of the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct OracleTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OracleTolerance {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-15 }
    }
}

/// Integrate from `x = 1` (value `boundary[j]`) down to 0 with Dormand-Prince 5(4),
/// returning `g_j` at each of `points` (any order).
pub fn oracle_resolvent(
    coeffs: &EdgeCoefficients,
    mu: C64,
    f: &dyn Fn(usize, f64) -> C64,
    boundary: &[C64],
    points: &[f64],
    tol: OracleTolerance,
) -> Vec<Vec<C64>> {
    (0..coeffs.m())
        .map(|j| {
            let c = &coeffs.c[j];
            let q = &coeffs.q[j];
            let rhs = |x: f64, g: C64| ((mu - q.eval(x)) * g - f(j, x)) / c.eval(x);
            let mut stops: Vec<f64> = points.to_vec();
            stops.extend(c.interior_breaks());
            stops.extend(q.interior_breaks());
            stops.sort_by(|a, b| b.total_cmp(a));
            stops.dedup();
            let mut x = 1.0;
            let mut g = boundary[j];
            let mut h = -1e-3;
            let mut at = Vec::with_capacity(stops.len());
            for &target in &stops {
                while x > target {
                    if x + h < target {
                        h = target - x;
                    }
                    let (g_new, err) = dp_step(&rhs, x, g, h);
                    let scale = tol.atol + tol.rtol * g.norm().max(g_new.norm());
                    let ratio = err / scale;
                    if ratio <= 1.0 {
                        x = if (x + h - target).abs() < 1e-15 { target } else { x + h };
                        g = g_new;
                    }
                    let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                    h = (h * factor).max(-0.05);
                }
                at.push((target, g));
            }
            points
                .iter()
                .map(|p| at.iter().find(|(t, _)| t == p).map(|(_, v)| *v).unwrap_or(g))
                .collect()
        })
        .collect()
}

fn dp_step(rhs: &impl Fn(f64, C64) -> C64, x: f64, g: C64, h: f64) -> (C64, f64) {
    let mut k = [C64::new(0.0, 0.0); 7];
    k[0] = rhs(x, g);
    for s in 1..7 {
        let mut acc = g;
        for (t, a) in A[s - 1].iter().enumerate().take(s) {
            acc += k[t] * (h * a);
        }
        k[s] = rhs(x + C[s] * h, acc);
    }
    let mut hi = g;
    let mut lo = g;
    for s in 0..7 {
        hi += k[s] * (h * B[s]);
        lo += k[s] * (h * B4[s]);
    }
    (hi, (hi - lo).norm())
}
