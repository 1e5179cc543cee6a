mod common;

use std::f64::consts::PI;

use common::*;
use nalgebra::{DMatrix, DVector};
use netdelay::control::{aggregate_and_rank, choose_mu_samples, default_bandwidth, sample_reachability, Controls, MuStrategy, DEFAULT_EPS};
use netdelay::delay::{DelayBank, DelayMeasure};
use netdelay::network::EdgeCoefficients;
use netdelay::profile::Profile;
use netdelay::spectral::{scan, Rect};
use netdelay::timesim::*;
use netdelay::{Error, System, C64};
use rand::Rng;

fn bump(j: usize, x: f64) -> f64 {
    1.0 + 0.3 * (2.0 * PI * x + j as f64).cos() + 0.2 * x
}

#[test]
fn zero_data_stays_zero() {
    let sys = neutral_loop(0.5, 1.0, 0.0, 16);
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 0.01).unwrap();
    let state = sim.zero_state();
    assert!(state.z().iter().all(|v| *v == 0.0));
    let (end, snaps) = sim.simulate(state, &ControlSignal::default(), 2.0, 10);
    assert!(end.z().iter().all(|v| *v == 0.0));
    assert!(snaps.iter().all(|s| s.z.iter().all(|v| *v == 0.0)));
}

#[test]
fn zero_horizon_gives_initial_snapshot() {
    let sys = loop_system(1.0, 0.0, 16);
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 0.01).unwrap();
    let (_, snaps) = sim.simulate(sim.init(|_, _, _| 0.0, |_| DVector::zeros(0), bump), &ControlSignal::default(), 0.0, 1);
    assert_eq!(snaps.len(), 1);
    assert_eq!(snaps[0].t, 0.0);
}

#[test]
fn constant_history_pulls_through() {
    let d = 0.5;
    let sys = neutral_loop(d, 1.0, 0.0, 16);
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 0.01).unwrap();
    let z0 = 2.0;
    let state = sim.init(|_, _, _| z0, |_| DVector::zeros(0), bump);
    for (i, (j, x)) in sim.mesh_positions().into_iter().enumerate() {
        assert!((state.z()[i] - (bump(j, x) + d * z0)).abs() <= 1e-14);
    }
}

#[test]
fn reconstruction_holds_every_step() {
    let mut r = rng(3);
    let r_max = 1.0;
    let eta = DelayMeasure::new(
        r_max,
        2,
        2,
        vec![netdelay::delay::Atom { theta: -0.3, weight: DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, -0.3]) }],
        vec![netdelay::delay::DensityPiece { from: -1.0, to: -0.5, value: DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.2, 0.1]) }],
    )
    .unwrap();
    let gamma = DelayMeasure::atom(r_max, -0.25, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.3, 0.0])).unwrap();
    let vartheta = DelayMeasure::atom(r_max, -0.4, DMatrix::from_row_slice(2, 1, &[1.0, 0.5])).unwrap();
    let nu = DelayMeasure::atom(r_max, -0.7, DMatrix::from_row_slice(2, 1, &[0.0, 1.0])).unwrap();
    let bank = DelayBank::new(eta, gamma, vartheta, nu).unwrap();
    let sys = two_cycle_system(16).with_bank(bank).unwrap();
    let mut ctrl = Controls::boundary(&sys, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
    ctrl.k0 = sys.grid.sample(|j, x| C64::from(x * (1.0 + j as f64))).reshape_generic(nalgebra::Dyn(sys.dim()), nalgebra::Dyn(1));
    ctrl.b0 = sys.grid.sample(|_, x| C64::from(1.0 - x)).reshape_generic(nalgebra::Dyn(sys.dim()), nalgebra::Dyn(1));
    let sim = Simulator::new(&sys, &ctrl, 0.004).unwrap();
    let f = SmoothFn::random(&mut r, 2, 4);
    let (a, b) = (r.gen_range(0.5..2.0), r.gen_range(0.5..2.0));
    let mut state = sim.init(
        |th, j, x| (a * th).cos() + f.eval(j, x).re,
        |th| DVector::from_element(1, (b * th).sin()),
        |j, x| f.eval(j, x).im,
    );
    assert!(sim.reconstruction_residual(&state) <= 1e-12);
    let signal = ControlSignal {
        v: vec![Waveform::Sine { amplitude: 1.0, omega: 3.0, phase: 0.2 }],
        u: vec![Waveform::Pulse { amplitude: 2.0, start: 0.1, width: 0.3 }],
    };
    for _ in 0..300 {
        sim.step(&mut state, &signal);
        assert!(sim.reconstruction_residual(&state) <= 1e-10);
    }
}

#[test]
fn constant_profile_on_a_loop_is_stationary() {
    let sys = loop_system(1.0, 0.0, 16);
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 0.01).unwrap();
    let mut state = sim.init(|_, _, _| 0.0, |_| DVector::zeros(0), |_, _| 1.5);
    for _ in 0..250 {
        sim.step(&mut state, &ControlSignal::default());
        assert!(state.z().iter().all(|v| (v - 1.5).abs() <= 1e-14));
    }
}

#[test]
fn uniform_absorption_decays_mass() {
    let base = constant_speed_branching(16);
    let coeffs = EdgeCoefficients::new(base.coeffs.c.clone(), vec![Profile::constant(-1.0); 4]).unwrap();
    let sys = System::new(base.network.clone(), coeffs, DelayBank::none(4, 0), 16).unwrap();
    let ctrl = Controls::none(&sys);
    let dt = 1e-3;
    let sim = Simulator::new(&sys, &ctrl, dt).unwrap();
    let mut state = sim.init(|_, _, _| 0.0, |_| DVector::zeros(0), bump);
    sim.step(&mut state, &ControlSignal::default());
    let m0 = sim.mass(&state);
    let (end, _) = sim.simulate(state, &ControlSignal::default(), 1.0, usize::MAX);
    let ratio = sim.mass(&end) / m0;
    let exact = (-(end.t - dt)).exp();
    assert!((ratio / exact - 1.0).abs() <= 0.01, "{ratio} vs {exact}");
}

#[test]
fn kirchhoff_transport_conserves_mass() {
    let sys = constant_speed_branching(16);
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 5e-3).unwrap();
    let mut state = sim.init(|_, _, _| 0.0, |_| DVector::zeros(0), bump);
    sim.step(&mut state, &ControlSignal::default());
    let m0 = sim.mass(&state);
    let mut worst: f64 = 0.0;
    while state.t < 10.0 - 1e-9 {
        sim.step(&mut state, &ControlSignal::default());
        worst = worst.max((sim.mass(&state) - m0).abs());
    }
    assert!(worst <= 1e-6 * m0, "{worst}");
}

#[test]
fn decay_matches_rightmost_root() {
    let sys = neutral_loop(0.5, 1.0, -1.0, 16);
    let roots = scan(&sys, Rect::new(-2.0, 0.5, -10.0, 10.0), 2).unwrap();
    let rightmost = roots.max_real().unwrap();
    assert!((rightmost - 0.5f64.ln()).abs() <= 1e-8);
    let ctrl = Controls::none(&sys);
    let sim = Simulator::new(&sys, &ctrl, 0.01).unwrap();
    let state = sim.init(|_, _, _| 0.0, |_| DVector::zeros(0), bump);
    let (_, snaps) = sim.simulate(state, &ControlSignal::default(), 30.0, 10);
    let pts: Vec<(f64, f64)> = snaps
        .iter()
        .filter(|s| s.t >= 15.0)
        .map(|s| (s.t, sys.grid.norm(&DVector::from_iterator(s.z.len(), s.z.iter().map(|&v| C64::from(v))))))
        .collect();
    let rate = decay_rate(&pts);
    assert!((rate / rightmost - 1.0).abs() <= 0.05, "{rate} vs {rightmost}");
}

#[test]
fn first_order_in_time() {
    let gamma = DelayMeasure::atom(1.0, -0.5, DMatrix::from_element(1, 1, 0.5)).unwrap();
    let bank = DelayBank::new(DelayMeasure::zero(1.0, 1, 1), gamma, DelayMeasure::zero(1.0, 1, 1), DelayMeasure::zero(1.0, 1, 1)).unwrap();
    let sys = loop_system(1.0, 0.0, 16).with_bank(bank).unwrap();
    let mut ctrl = Controls::none(&sys);
    ctrl.b0 = sys.grid.sample(|_, x| C64::from((PI * x).sin())).reshape_generic(nalgebra::Dyn(sys.dim()), nalgebra::Dyn(1));
    let signal = ControlSignal { v: vec![], u: vec![Waveform::Sine { amplitude: 1.0, omega: 2.0, phase: 0.3 }] };
    let run = |dt: f64| {
        let sim = Simulator::new(&sys, &ctrl, dt).unwrap();
        let state = sim.init(|_, _, _| 0.0, |_| DVector::zeros(1), |_, x| 1.0 + 0.3 * (2.0 * PI * x).cos());
        let (end, _) = sim.simulate(state, &signal, 2.0, usize::MAX);
        sim.sample(end.z())
    };
    let dt = 0.01;
    let reference = run(dt / 4.0);
    let e1 = (run(dt) - &reference).amax();
    let e2 = (run(dt / 2.0) - &reference).amax();
    let slope = (e1 / e2).log2();
    let expected = 3f64.log2();
    assert!((slope / expected - 1.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn step_limits_are_enforced() {
    let sys = loop_system(1.0, 0.0, 16);
    let ctrl = Controls::none(&sys);
    assert!(matches!(Simulator::new(&sys, &ctrl, 0.5), Err(Error::Cfl { .. })));
    let sys = neutral_loop(0.5, 0.005, 0.0, 16);
    assert!(matches!(Simulator::new(&sys, &ctrl, 0.01), Err(Error::Gap { .. })));
}

#[test]
fn no_probes_no_snapshots() {
    let sys = loop_system(1.0, 0.0, 16);
    let ctrl = Controls::boundary(&sys, DMatrix::from_element(1, 1, 1.0));
    let g = empirical_gramian(&sys, &ctrl, &[], 2.0, 0.01).unwrap();
    assert_eq!(g.snapshots.ncols(), 0);
    assert!(g.sigmas.is_empty());
}

#[test]
fn probes_on_one_loop_leave_the_other_at_rest() {
    let sys = loops_system(&[1.0, 1.0], DelayBank::none(2, 0), 16);
    let ctrl = Controls::boundary(&sys, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
    let probes = probe_signals(1, 0, 20, 2.0);
    let g = empirical_gramian(&sys, &ctrl, &probes, 2.0, 0.004).unwrap();
    let n = sys.grid.n();
    assert!(g.snapshots.rows(n, n).amax() <= 1e-10);
    assert!(g.snapshots.rows(0, n).amax() > 1e-3);

    let mus = choose_mu_samples(&[], 40, MuStrategy::Line, default_bandwidth(&sys), 1);
    let (samples, _) = sample_reachability(&sys, &ctrl, &mus);
    let rep = aggregate_and_rank(&sys.grid, &samples, DEFAULT_EPS).unwrap();
    let phi = DVector::from_vec(rep.witness.unwrap());
    for col in g.snapshots.column_iter() {
        let col = col.map(C64::from);
        assert!(sys.grid.inner(&col, &phi).norm() <= 1e-8 * sys.grid.norm(&col).max(1.0));
    }
}

#[test]
fn gramian_spans_the_grid_for_a_controllable_loop() {
    let sys = loop_system(1.0, 0.0, 16);
    let ctrl = Controls::boundary(&sys, DMatrix::from_element(1, 1, 1.0));
    let probes = probe_signals(1, 0, 60, 2.0);
    let g = empirical_gramian(&sys, &ctrl, &probes, 2.0, 1e-3).unwrap();
    assert_eq!(g.rank(1e-6), sys.dim());

    let mus = choose_mu_samples(&[], 40, MuStrategy::Line, default_bandwidth(&sys), 1);
    let (samples, _) = sample_reachability(&sys, &ctrl, &mus);
    let rep = aggregate_and_rank(&sys.grid, &samples, DEFAULT_EPS).unwrap();
    let angles = principal_angles(&sys, &rep.aggregate, &g.snapshots.map(C64::from), 1e-6);
    assert!(!angles.rank_mismatch);
    assert!(angles.max_angle() <= 0.1);
}

#[test]
fn angles_of_identical_and_orthogonal_spans() {
    let sys = loop_system(1.0, 0.0, 16);
    let a = sys.grid.sample(|_, x| C64::from(x));
    let b = sys.grid.sample(|_, x| C64::from(x - 0.5));
    let a = DMatrix::from_columns(&[a]);
    let same = principal_angles(&sys, &a, &(&a * C64::from(3.0)), 1e-10);
    assert!(same.max_angle() <= 1e-7);
    // x - 1/2 against the constant function is orthogonal on [0, 1].
    let one = DMatrix::from_columns(&[sys.grid.sample(|_, _| C64::from(1.0))]);
    let orth = principal_angles(&sys, &one, &DMatrix::from_columns(&[b]), 1e-10);
    assert!((orth.max_angle() - PI / 2.0).abs() <= 1e-7);
}
