use nalgebra::DMatrix;
use netdelay::delay::{Atom, DelayMeasure, DensityPiece};
use netdelay::flow::FlowExponents;
use netdelay::grid::Grid;
use netdelay::network::{Connectivity, EdgeCoefficients, Network};
use netdelay::profile::Profile;
use netdelay::C64;
use proptest::prelude::*;

/// Every vertex gets at least one outgoing edge, then a few extra random edges.
fn kirchhoff_network() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, DMatrix<f64>)> {
    (1usize..6)
        .prop_flat_map(|n| {
            let first = prop::collection::vec(0..n, n);
            let extra = prop::collection::vec((0..n, 0..n), 0..6);
            (Just(n), first, extra)
        })
        .prop_flat_map(|(n, first, extra)| {
            let mut edges: Vec<(usize, usize)> = first.into_iter().enumerate().collect();
            edges.extend(extra);
            let raw = prop::collection::vec(0.05f64..1.0, edges.len());
            (Just(n), Just(edges), raw)
        })
        .prop_map(|(n, edges, raw)| {
            let mut w = DMatrix::zeros(n, edges.len());
            for v in 0..n {
                let total: f64 = edges.iter().zip(&raw).filter(|(e, _)| e.0 == v).map(|(_, r)| r).sum();
                for (j, (e, r)) in edges.iter().zip(&raw).enumerate() {
                    if e.0 == v {
                        w[(v, j)] = r / total;
                    }
                }
            }
            (n, edges, w)
        })
}

fn measure() -> impl Strategy<Value = DelayMeasure> {
    let atoms = prop::collection::vec((-2.0f64..-0.05, -2.0f64..2.0), 0..4);
    let density = prop::collection::vec((-2.0f64..-0.5, 0.05f64..0.5, -2.0f64..2.0), 0..3);
    (atoms, density).prop_map(|(atoms, density)| {
        let atoms = atoms.into_iter().map(|(theta, w)| Atom { theta, weight: DMatrix::from_element(1, 1, w) }).collect();
        let density = density
            .into_iter()
            .map(|(from, len, v)| DensityPiece { from, to: (from + len).min(0.0), value: DMatrix::from_element(1, 1, v) })
            .collect();
        DelayMeasure::new(2.0, 1, 1, atoms, density).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kirchhoff_rows_and_line_graph_columns_sum_to_one((n, edges, w) in kirchhoff_network()) {
        let net = Network::build_with(n, &edges, &w, Connectivity::AllowComponents).unwrap();
        for i in 0..n {
            prop_assert!((net.weights().row(i).sum() - 1.0).abs() <= 1e-12);
        }
        let b = net.line_graph_adjacency();
        for k in 0..net.m() {
            prop_assert!((b.column(k).sum() - 1.0).abs() <= 1e-12);
        }
        prop_assert_eq!(net.inc_out().row_sum().sum() as usize, net.m());
        prop_assert_eq!(net.inc_in().row_sum().sum() as usize, net.m());
    }

    #[test]
    fn unbalanced_weights_are_rejected((n, edges, w) in kirchhoff_network(), scale in 0.5f64..0.99) {
        let mut bad = w.clone();
        let j = 0;
        bad[(edges[j].0, j)] *= scale;
        prop_assert!(Network::build_with(n, &edges, &bad, Connectivity::AllowComponents).is_err());
    }

    #[test]
    fn flow_exponents_are_additive(
        c0 in 0.3f64..3.0, c1 in -0.25f64..0.25, q0 in -2.0f64..2.0, q1 in -2.0f64..2.0,
        mut pts in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        pts.sort_by(f64::total_cmp);
        let (x, y, z) = (pts[0], pts[1], pts[2]);
        let coeffs = EdgeCoefficients::new(
            vec![Profile::Polynomial(vec![c0, c1 * c0])],
            vec![Profile::Polynomial(vec![q0, q1])],
        ).unwrap();
        let f = FlowExponents::new(&coeffs, &Grid::new(1, 8).unwrap()).unwrap();
        prop_assert!((f.xi(0, x, z) - f.xi(0, x, y) - f.xi(0, y, z)).abs() <= 1e-12);
        prop_assert!((f.tau(0, x, z) - f.tau(0, x, y) - f.tau(0, y, z)).abs() <= 1e-12);
        prop_assert!(f.tau(0, x, y) >= 0.0);
    }

    #[test]
    fn symbol_is_analytic(m in measure(), re in -3.0f64..3.0, im in -20.0f64..20.0) {
        let h = 1e-5;
        let f = |mu: C64| m.symbol(mu)[(0, 0)];
        let mu = C64::new(re, im);
        let dx = (f(mu + h) - f(mu - h)) / (2.0 * h);
        let dy = (f(mu + C64::i() * h) - f(mu - C64::i() * h)) / (2.0 * h);
        // f' = df/dx = -i df/dy
        let scale = 1.0 + dx.norm();
        prop_assert!((dx + C64::i() * dy).norm() <= 1e-6 * scale, "{} {}", dx, dy);
    }

    #[test]
    fn symbol_is_bounded_by_total_variation(m in measure(), re in -3.0f64..3.0, im in -50.0f64..50.0) {
        let mu = C64::new(re, im);
        let bound = m.total_variation()[(0, 0)] * (-m.r() * re).exp().max(1.0);
        prop_assert!(m.symbol(mu)[(0, 0)].norm() <= bound * (1.0 + 1e-12) + 1e-15);
    }
}
