//! Gauss-Legendre rules and polynomial interpolation helpers.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule mapped to [a, b].
pub fn gauss_on(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    x.into_iter().zip(w).map(move |(xi, wi)| (c + h * xi, h * wi))
}

/// Integrate a smooth function with a composite Gauss rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| 0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0)))
                .sum::<f64>()
        })
        .sum()
}

/// Lagrange interpolation on a fixed set of nodes, in barycentric form.
#[derive(Debug, Clone)]
pub struct Lagrange {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl Lagrange {
    pub fn new(nodes: Vec<f64>) -> Self {
        let bary = (0..nodes.len())
            .map(|k| {
                1.0 / nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, xj)| nodes[k] - xj)
                    .product::<f64>()
            })
            .collect();
        Self { nodes, bary }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all basis polynomials at `y` (works for extrapolation too).
    pub fn basis(&self, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        if let Some(k) = self.nodes.iter().position(|&x| x == y) {
            out[k] = 1.0;
            return out;
        }
        // product form is stable for the few-point extrapolation we need
        let ell: f64 = self.nodes.iter().map(|x| y - x).product();
        for (k, o) in out.iter_mut().enumerate() {
            *o = ell * self.bary[k] / (y - self.nodes[k]);
        }
        out
    }

    /// Differentiation matrix on the nodes, row-major.
    #[allow(clippy::needless_range_loop)]
    pub fn diff_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut diag = 0.0;
            for k in 0..n {
                if i != k {
                    let v = self.bary[k] / self.bary[i] / (self.nodes[i] - self.nodes[k]);
                    d[i][k] = v;
                    diag -= v;
                }
            }
            d[i][i] = diag;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exact_on_polynomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn lagrange_reproduces_cubic() {
        let l = Lagrange::new(vec![0.0, 0.3, 0.5, 1.0]);
        let f = |x: f64| 1.0 - 2.0 * x + x * x * x;
        for y in [-0.2, 0.1, 0.7, 1.3] {
            let v: f64 = l.basis(y).iter().zip(l.nodes()).map(|(b, x)| b * f(*x)).sum();
            assert!((v - f(y)).abs() < 1e-13);
        }
        let d = l.diff_matrix();
        for (i, row) in d.iter().enumerate() {
            let v: f64 = row.iter().zip(l.nodes()).map(|(a, x)| a * f(*x)).sum();
            let x = l.nodes()[i];
            assert!((v - (-2.0 + 3.0 * x * x)).abs() < 1e-12);
        }
    }
}
