//! Directed metric graphs with Kirchhoff weights and edge coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::profile::Profile;

const KIRCHHOFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Required,
    AllowComponents,
}

/// Directed graph whose edges are parametrized over [0, 1].
///
/// Edge `j` runs from its tail `e_j(1)` (x = 1) to its head `e_j(0)` (x = 0).
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    tails: Vec<usize>,
    heads: Vec<usize>,
    inc_out: DMatrix<f64>,
    inc_in: DMatrix<f64>,
    weights: DMatrix<f64>,
}

impl Network {
    /// Build from `(tail, head)` pairs and an `n x m` outgoing weight matrix.
    pub fn build(n: usize, edges: &[(usize, usize)], weights: &DMatrix<f64>) -> Result<Self> {
        Self::build_with(n, edges, weights, Connectivity::Required)
    }

    pub fn build_with(
        n: usize,
        edges: &[(usize, usize)],
        weights: &DMatrix<f64>,
        connectivity: Connectivity,
    ) -> Result<Self> {
        let m = edges.len();
        if n == 0 || m == 0 {
            return Err(Error::EmptyNetwork);
        }
        if weights.shape() != (n, m) {
            return Err(Error::Shape(format!("weights are {:?}, expected ({n}, {m})", weights.shape())));
        }
        for (j, &(t, h)) in edges.iter().enumerate() {
            for v in [t, h] {
                if v >= n {
                    return Err(Error::VertexIndex { edge: j, vertex: v, n });
                }
            }
        }
        let mut inc_out = DMatrix::zeros(n, m);
        let mut inc_in = DMatrix::zeros(n, m);
        for (j, &(t, h)) in edges.iter().enumerate() {
            inc_out[(t, j)] = 1.0;
            inc_in[(h, j)] = 1.0;
        }
        let components = count_components(n, edges);
        if components > 1 && connectivity == Connectivity::Required {
            return Err(Error::Disconnected { components });
        }
        for i in 0..n {
            for j in 0..m {
                let w = weights[(i, j)];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::WeightRange { vertex: i, edge: j, weight: w });
                }
                if w != 0.0 && inc_out[(i, j)] == 0.0 {
                    return Err(Error::WeightSlot { vertex: i, edge: j });
                }
            }
            let sum: f64 = weights.row(i).sum();
            if (sum - 1.0).abs() > KIRCHHOFF_TOL {
                return Err(Error::Kirchhoff { vertex: i, sum });
            }
        }
        Ok(Self {
            n,
            tails: edges.iter().map(|e| e.0).collect(),
            heads: edges.iter().map(|e| e.1).collect(),
            inc_out,
            inc_in,
            weights: weights.clone(),
        })
    }

    /// One vertex with a self-loop.
    pub fn single_loop() -> Self {
        Self::build(1, &[(0, 0)], &DMatrix::from_element(1, 1, 1.0)).expect("valid loop")
    }

    /// `k` self-loops on `k` separate vertices.
    pub fn disjoint_loops(k: usize) -> Self {
        let edges: Vec<_> = (0..k).map(|i| (i, i)).collect();
        Self::build_with(k, &edges, &DMatrix::identity(k, k), Connectivity::AllowComponents).expect("valid loops")
    }

    /// Directed cycle v0 -> v1 -> ... -> v0 with `len` edges.
    pub fn cycle(len: usize) -> Self {
        let edges: Vec<_> = (0..len).map(|i| (i, (i + 1) % len)).collect();
        Self::build(len, &edges, &DMatrix::identity(len, len)).expect("valid cycle")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.tails.len()
    }

    pub fn tail(&self, j: usize) -> usize {
        self.tails[j]
    }

    pub fn head(&self, j: usize) -> usize {
        self.heads[j]
    }

    pub fn inc_out(&self) -> &DMatrix<f64> {
        &self.inc_out
    }

    pub fn inc_in(&self) -> &DMatrix<f64> {
        &self.inc_in
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Weight with which vertex `tail(j)` feeds edge `j`.
    pub fn weight_of(&self, j: usize) -> f64 {
        self.weights[(self.tails[j], j)]
    }

    /// Edges whose head is vertex `i`.
    pub fn incoming(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.heads.iter().enumerate().filter(move |(_, &h)| h == i).map(|(j, _)| j)
    }

    /// Weighted line-graph adjacency `weights^T inc_in`.
    pub fn line_graph_adjacency(&self) -> DMatrix<f64> {
        self.weights.transpose() * &self.inc_in
    }
}

fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..n).filter(|&v| find(&mut parent, v) == v).count()
}

/// Velocity and absorption profiles per edge.
#[derive(Debug, Clone)]
pub struct EdgeCoefficients {
    pub c: Vec<Profile>,
    pub q: Vec<Profile>,
}

impl EdgeCoefficients {
    pub fn new(c: Vec<Profile>, q: Vec<Profile>) -> Result<Self> {
        if c.len() != q.len() {
            return Err(Error::Shape(format!("{} velocity profiles, {} absorption profiles", c.len(), q.len())));
        }
        for p in c.iter().chain(&q) {
            p.validate()?;
        }
        for (j, cj) in c.iter().enumerate() {
            let mut xs: Vec<f64> = (0..=512).map(|k| k as f64 / 512.0).collect();
            for &b in cj.interior_breaks() {
                xs.extend([b - 1e-12, b]);
            }
            for x in xs {
                let v = cj.eval(x);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Velocity { edge: j, x, value: v });
                }
            }
        }
        Ok(Self { c, q })
    }

    /// Constant `c` and `q` on all `m` edges.
    pub fn uniform(m: usize, c: f64, q: f64) -> Self {
        Self::new(vec![Profile::constant(c); m], vec![Profile::constant(q); m]).expect("positive velocity")
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    /// True when every velocity profile is constant along its edge.
    pub fn piecewise_constant_velocity(&self) -> bool {
        self.c.iter().all(Profile::is_constant)
    }
}
