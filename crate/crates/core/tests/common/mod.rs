#![allow(dead_code)]

use nalgebra::DMatrix;
use netdelay::delay::DelayBank;
use netdelay::network::{EdgeCoefficients, Network};
use netdelay::profile::Profile;
use netdelay::{System, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn loop_system(c: f64, q: f64, n: usize) -> System {
    System::new(Network::single_loop(), EdgeCoefficients::uniform(1, c, q), DelayBank::none(1, 0), n).unwrap()
}

/// Three vertices, one branching vertex, variable coefficients.
pub fn branching_network() -> (Network, EdgeCoefficients) {
    let edges = [(0, 1), (0, 2), (1, 0), (2, 0)];
    let w = DMatrix::from_row_slice(3, 4, &[0.4, 0.6, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let net = Network::build(3, &edges, &w).unwrap();
    let coeffs = EdgeCoefficients::new(
        vec![
            Profile::Polynomial(vec![1.0, 0.5]),
            Profile::Polynomial(vec![2.0, -1.0]),
            Profile::constant(1.5),
            Profile::Polynomial(vec![0.8, 0.0, 0.4]),
        ],
        vec![
            Profile::Polynomial(vec![0.0, 0.3]),
            Profile::constant(-0.5),
            Profile::Polynomial(vec![0.2, -0.1]),
            Profile::constant(0.0),
        ],
    )
    .unwrap();
    (net, coeffs)
}

pub fn branching_system(n: usize) -> System {
    let (net, coeffs) = branching_network();
    System::new(net, coeffs, DelayBank::none(4, 0), n).unwrap()
}

pub fn two_cycle_system(n: usize) -> System {
    let coeffs = EdgeCoefficients::new(
        vec![Profile::constant(1.0), Profile::Polynomial(vec![1.0, 1.0])],
        vec![Profile::constant(0.0), Profile::Polynomial(vec![-0.3, 0.2])],
    )
    .unwrap();
    System::new(Network::cycle(2), coeffs, DelayBank::none(2, 0), n).unwrap()
}

/// Random smooth function `(edge, x) -> sum_k a_k cos(k pi x + p_k)`.
#[derive(Debug, Clone)]
pub struct SmoothFn {
    terms: Vec<Vec<(C64, f64)>>,
}

impl SmoothFn {
    pub fn random(r: &mut impl Rng, edges: usize, modes: usize) -> Self {
        let terms = (0..edges)
            .map(|_| {
                (0..modes)
                    .map(|k| {
                        let a = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)) / (1.0 + k as f64);
                        (a, r.gen_range(0.0..std::f64::consts::TAU))
                    })
                    .collect()
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, edge: usize, x: f64) -> C64 {
        self.terms[edge]
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * (k as f64 * std::f64::consts::PI * x + p).cos())
            .sum()
    }
}

pub fn random_mu(r: &mut impl Rng, re: (f64, f64), im: (f64, f64)) -> C64 {
    C64::new(r.gen_range(re.0..re.1), r.gen_range(im.0..im.1))
}

/// `k` disjoint unit-speed loops with transit times `taus`.
pub fn loops_system(taus: &[f64], bank: DelayBank, n: usize) -> System {
    let k = taus.len();
    let coeffs = EdgeCoefficients::new(
        taus.iter().map(|t| Profile::constant(1.0 / t)).collect(),
        vec![Profile::constant(0.0); k],
    )
    .unwrap();
    System::new(Network::disjoint_loops(k), coeffs, bank, n).unwrap()
}

/// Single loop with a neutral atom `d delta_{-r}`.
pub fn neutral_loop(d: f64, r: f64, q: f64, n: usize) -> System {
    use netdelay::delay::DelayMeasure;
    let eta = DelayMeasure::atom(r, -r, DMatrix::from_element(1, 1, d)).unwrap();
    let bank = DelayBank::new(
        eta,
        DelayMeasure::zero(r, 1, 1),
        DelayMeasure::zero(r, 1, 0),
        DelayMeasure::zero(r, 1, 0),
    )
    .unwrap();
    System::new(Network::single_loop(), EdgeCoefficients::uniform(1, 1.0, q), bank, n).unwrap()
}

/// Named fixtures for cross-checking the controllability criteria.
pub fn criterion_fixtures(n: usize) -> Vec<(&'static str, System, netdelay::control::Controls)> {
    use netdelay::control::Controls;
    use netdelay::delay::DelayMeasure;
    let mut out = Vec::new();

    let s = loop_system(1.0, 0.0, n);
    let c = Controls::boundary(&s, DMatrix::from_element(1, 1, 1.0));
    out.push(("single loop, boundary", s, c));

    let s = loops_system(&[1.0, 1.0], DelayBank::none(2, 0), n);
    let c = Controls::boundary(&s, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
    out.push(("two loops, boundary on loop 1", s, c));

    let s = neutral_loop(0.5, 1.0, 0.0, n);
    let c = Controls::boundary(&s, DMatrix::from_element(1, 1, 1.0));
    out.push(("neutral loop, boundary", s, c));

    let r = 1.0;
    let bank = |vartheta: DelayMeasure, nu: DelayMeasure| {
        DelayBank::new(DelayMeasure::zero(r, 2, 2), DelayMeasure::zero(r, 2, 2), vartheta, nu).unwrap()
    };
    let loop2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
    let s = loops_system(
        &[1.0, 1.0],
        bank(DelayMeasure::atom(r, -0.5, loop2.clone()).unwrap(), DelayMeasure::zero(r, 2, 1)),
        n,
    );
    let c = Controls::boundary(&s, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
    out.push(("two loops, delayed K1 input on loop 2", s, c));

    let s = loops_system(
        &[1.0, 1.0],
        bank(DelayMeasure::zero(r, 2, 1), DelayMeasure::atom(r, -0.5, loop2).unwrap()),
        n,
    );
    let c = Controls::boundary(&s, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
    out.push(("two loops, delayed B1 input on loop 2", s, c));

    let s = branching_system(n);
    let c = Controls::boundary(&s, DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
    out.push(("branching graph, boundary at the branch", s, c));
    out
}

/// Branching graph with constant speeds 1, 2, 1, 1/2 and no absorption.
pub fn constant_speed_branching(n: usize) -> System {
    let edges = [(0, 1), (0, 2), (1, 0), (2, 0)];
    let w = DMatrix::from_row_slice(3, 4, &[0.4, 0.6, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let net = Network::build(3, &edges, &w).unwrap();
    let c = [1.0, 2.0, 1.0, 0.5];
    let coeffs = EdgeCoefficients::new(c.iter().map(|&c| Profile::constant(c)).collect(), vec![Profile::constant(0.0); 4]).unwrap();
    System::new(net, coeffs, DelayBank::none(4, 0), n).unwrap()
}
