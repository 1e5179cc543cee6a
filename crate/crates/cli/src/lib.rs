//! Batch front end: load a JSON config, run one analysis, write CSV/JSON artifacts.
//!
//! Exit codes: 0 on success, 1 on any error, 2 when `controllability` finds a defect.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use nalgebra::DVector;
use netdelay::config::RunConfig;
use netdelay::control::{
    aggregate_and_rank, choose_mu_samples, default_bandwidth, lp_corollary, rank_condition_t4, sample_full_state,
    sample_reachability, ControllabilityReport, Flagged, RankConditionReport, Verdict,
};
use netdelay::grid::DelayGrid;
use netdelay::operators::{oracle_resolvent, resolvent_free};
use netdelay::report::{fmt_f64, to_json};
use netdelay::spectral::{resolvent_norm_sweep, scan, Root};
use netdelay::timesim::{empirical_gramian, probe_signals, Simulator};
use netdelay::{Error, System, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const DELAY_INTERVALS: usize = 32;
const GRAMIAN_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}: {source}")]
    Config { file: String, source: Error },
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Check(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Spectrum,
    ResolventCheck,
    Controllability,
    Simulate,
}

/// Global options; `None` keeps the config value.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Defective,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Defective => 2,
        }
    }
}

/// A loaded config with its output directory, ready to run.
pub struct Run {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Run {
    pub fn load(flags: &Flags) -> CliResult<Self> {
        let file = flags.config.display().to_string();
        let wrap = |source| CliError::Config { file: file.clone(), source };
        let mut cfg = RunConfig::load(&flags.config).map_err(wrap)?;
        if let Some(n) = flags.grid {
            cfg.grid = n;
            cfg.system().map_err(wrap)?;
        }
        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        let out = flags.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.display().to_string(), source })?;
        Ok(Self { cfg, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, to_json(value)?).map_err(|source| CliError::Io { path: path.display().to_string(), source })
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        let path = self.path(name);
        let err = |source| CliError::Csv { path: path.display().to_string(), source };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|source| CliError::Io { path: path.display().to_string(), source })
    }
}

pub fn run(cmd: Command, flags: &Flags) -> CliResult<Outcome> {
    let run = Run::load(flags)?;
    let sys = run.cfg.system()?;
    match cmd {
        Command::Validate => validate(&run, &sys),
        Command::Spectrum => spectrum(&run, &sys),
        Command::ResolventCheck => resolvent_check(&run, &sys),
        Command::Controllability => controllability(&run, &sys),
        Command::Simulate => simulate(&run, &sys),
    }
}

fn with_path(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        e @ Error::Config { .. } => e,
        e => Error::Config { path: path.into(), message: e.to_string() },
    }
}

#[derive(Serialize)]
struct Summary {
    vertices: usize,
    edges: usize,
    grid: usize,
    dim: usize,
    tau_min: f64,
    horizon: f64,
    boundary_controls: usize,
    distributed_inputs: usize,
    neutral: bool,
}

fn validate(run: &Run, sys: &System) -> CliResult<Outcome> {
    let ctrl = run.cfg.controls(sys)?;
    run.write_json(
        "validate.json",
        &Summary {
            vertices: sys.n_vertices(),
            edges: sys.m(),
            grid: sys.grid.n(),
            dim: sys.dim(),
            tau_min: sys.tau_min(),
            horizon: sys.bank.r(),
            boundary_controls: ctrl.n_v(),
            distributed_inputs: ctrl.n_u(),
            neutral: !sys.bank.eta.is_zero(),
        },
    )?;
    Ok(Outcome::Ok)
}

fn find_roots(run: &Run, sys: &System) -> CliResult<netdelay::spectral::RootReport> {
    let a = &run.cfg.analysis;
    Ok(scan(sys, a.rect(), a.depth).map_err(with_path("analysis.box"))?)
}

fn spectrum(run: &Run, sys: &System) -> CliResult<Outcome> {
    let report = find_roots(run, sys)?;
    run.write_csv(
        "spectrum.csv",
        &["re", "im", "family", "multiplicity", "residual"],
        report.roots.iter().map(|r| {
            vec![fmt_f64(r.mu.re), fmt_f64(r.mu.im), r.family.as_str().into(), r.multiplicity.to_string(), fmt_f64(r.residual)]
        }),
    )?;
    #[derive(Serialize)]
    struct SpectrumJson<'a> {
        count: usize,
        max_real: Option<f64>,
        #[serde(flatten)]
        report: &'a netdelay::spectral::RootReport,
    }
    run.write_json("spectrum.json", &SpectrumJson { count: report.count(), max_real: report.max_real(), report: &report })?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct OracleCheck {
    mu: C64,
    relative_error: f64,
}

fn resolvent_check(run: &Run, sys: &System) -> CliResult<Outcome> {
    let a = &run.cfg.analysis;
    let fine = sys.regrid(a.oracle_grid).map_err(with_path("analysis.oracle_grid"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.cfg.seed);
    let nodes = fine.grid.nodes();
    let zero = vec![C64::new(0.0, 0.0); sys.m()];
    let mut checks = Vec::with_capacity(a.oracle_checks);
    for _ in 0..a.oracle_checks {
        let mu = C64::new(rng.gen_range(1.0..5.0), rng.gen_range(-10.0..10.0));
        let coef: Vec<[f64; 4]> = (0..sys.m() * 5).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen(), rng.gen()]).collect();
        let f = |j: usize, x: f64| {
            coef[j * 5..(j + 1) * 5]
                .iter()
                .enumerate()
                .map(|(k, c)| C64::new(c[0], c[1]) * (PI * k as f64 * x + 2.0 * PI * c[2]).cos())
                .sum::<C64>()
        };
        let g = resolvent_free(&fine, mu) * fine.grid.sample(f);
        let reference = oracle_resolvent(&fine.coeffs, mu, &f, &zero, nodes, Default::default());
        let exact = DVector::from_fn(fine.dim(), |idx, _| reference[idx / nodes.len()][idx % nodes.len()]);
        checks.push(OracleCheck { mu, relative_error: (&g - &exact).norm() / exact.norm() });
    }
    let worst = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);

    let [_, _, im_lo, im_hi] = a.scan_box;
    let (lo, hi) = a.sweep.range.map_or((im_lo, im_hi), |[l, h]| (l, h));
    let sweep = resolvent_norm_sweep(sys, a.sweep.alpha, (lo, hi), a.sweep.samples);
    run.write_csv(
        "resolvent_sweep.csv",
        &["re", "im", "xi_norm", "r_agm_norm", "char_inv_norm", "singular"],
        sweep.iter().map(|s| {
            vec![
                fmt_f64(s.mu.re),
                fmt_f64(s.mu.im),
                fmt_f64(s.xi_norm),
                fmt_f64(s.r_agm_norm),
                fmt_f64(s.char_inv_norm),
                s.singular.clone().unwrap_or_default(),
            ]
        }),
    )?;
    #[derive(Serialize)]
    struct CheckJson<'a> {
        checks: &'a [OracleCheck],
        max_relative_error: f64,
        oracle_grid: usize,
        tolerance: f64,
        pass: bool,
        sweep_samples: usize,
        sweep_singular: usize,
    }
    let pass = worst <= a.oracle_tol;
    run.write_json(
        "resolvent_check.json",
        &CheckJson {
            checks: &checks,
            max_relative_error: worst,
            oracle_grid: a.oracle_grid,
            tolerance: a.oracle_tol,
            pass,
            sweep_samples: sweep.len(),
            sweep_singular: sweep.iter().filter(|s| s.singular.is_some()).count(),
        },
    )?;
    if !pass {
        return Err(CliError::Check(format!("analysis.oracle_tol: resolvent disagrees with the oracle ({worst:e} > {:e})", a.oracle_tol)));
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct Trend {
    grid: usize,
    rank: usize,
    dim: usize,
    defect: f64,
    verdict: Verdict,
}

#[derive(Serialize)]
struct ControllabilityJson<'a> {
    grid: usize,
    seed: u64,
    roots: &'a [Root],
    flagged: &'a [Flagged],
    #[serde(flatten)]
    report: &'a ControllabilityReport,
    trend: Vec<Trend>,
    rank_condition: Vec<RankConditionReport>,
    lp_corollary: Option<Trend>,
}

fn analyse(run: &Run, sys: &System, mus: &[C64]) -> CliResult<(ControllabilityReport, Vec<Flagged>, Vec<netdelay::control::ReachabilitySample>)> {
    let ctrl = run.cfg.controls(sys)?;
    let (samples, flagged) = sample_reachability(sys, &ctrl, mus);
    let report = aggregate_and_rank(&sys.grid, &samples, run.cfg.analysis.eps).map_err(with_path("analysis.samples"))?;
    Ok((report, flagged, samples))
}

fn controllability(run: &Run, sys: &System) -> CliResult<Outcome> {
    let a = &run.cfg.analysis;
    let roots = find_roots(run, sys)?;
    let omega = a.bandwidth.unwrap_or_else(|| default_bandwidth(sys));
    let mus = choose_mu_samples(&roots.roots, a.samples, a.strategy, omega, run.cfg.seed);
    let (report, flagged, samples) = analyse(run, sys, &mus)?;

    let fine = sys.regrid(2 * sys.grid.n())?;
    let fine_omega = a.bandwidth.map_or_else(|| default_bandwidth(&fine), |b| 2.0 * b);
    let fine_mus = choose_mu_samples(&roots.roots, 2 * a.samples, a.strategy, fine_omega, run.cfg.seed);
    let (fine_report, _, _) = analyse(run, &fine, &fine_mus)?;
    let trend = [(sys, &report), (&fine, &fine_report)]
        .iter()
        .map(|(s, r)| Trend { grid: s.grid.n(), rank: r.rank, dim: r.dim, defect: r.defect, verdict: r.verdict })
        .collect();

    let ctrl = run.cfg.controls(sys)?;
    let rank_condition =
        (0..ctrl.n_v()).map(|l| rank_condition_t4(&sys.grid, &samples, l, a.eps)).collect::<netdelay::Result<Vec<_>>>()?;

    let lp = if sys.bank.eta.is_zero() && sys.bank.gamma.is_zero() && sys.bank.vartheta.is_zero() && sys.bank.nu.is_zero() {
        None
    } else {
        let dgrid = DelayGrid::new(sys.bank.r(), DELAY_INTERVALS)?;
        let full = sample_full_state(sys, &ctrl, &mus, &dgrid);
        let r = lp_corollary(&sys.grid, &dgrid, &full, a.eps).map_err(with_path("analysis.samples"))?;
        Some(Trend { grid: sys.grid.n(), rank: r.rank, dim: r.dim, defect: r.defect, verdict: r.verdict })
    };

    run.write_csv(
        "singular_values.csv",
        &["index", "sigma", "relative"],
        report.sigmas.iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt_f64(*s), fmt_f64(s / report.sigmas[0])]),
    )?;
    run.write_json(
        "controllability.json",
        &ControllabilityJson {
            grid: sys.grid.n(),
            seed: run.cfg.seed,
            roots: &roots.roots,
            flagged: &flagged,
            report: &report,
            trend,
            rank_condition,
            lp_corollary: lp,
        },
    )?;
    Ok(if report.verdict == Verdict::Defective { Outcome::Defective } else { Outcome::Ok })
}

#[derive(Serialize)]
struct Manifest {
    dt: f64,
    t_final: f64,
    steps: usize,
    snapshots: usize,
    mesh_nodes: usize,
    mass_initial: f64,
    mass_final: f64,
    reconstruction_residual: f64,
    gramian: Option<GramianSummary>,
    files: Vec<&'static str>,
}

#[derive(Serialize)]
struct GramianSummary {
    probes: usize,
    tolerance: f64,
    rank: usize,
    dim: usize,
    sigmas: Vec<f64>,
}

fn simulate(run: &Run, sys: &System) -> CliResult<Outcome> {
    let s = &run.cfg.simulation;
    let ctrl = run.cfg.controls(sys)?;
    let sim = Simulator::new(sys, &ctrl, s.dt).map_err(with_path("simulation.dt"))?;
    let n_u = ctrl.n_u();
    let state = sim.init(|_, _, _| s.history, |_| DVector::zeros(n_u), |j, x| s.initial.as_ref().map_or(0.0, |p| p[j].eval(x)));
    let mass_initial = sim.mass(&state);
    let (end, snaps) = sim.simulate(state, &s.signal, s.t_final, s.stride);
    let nodes = sys.grid.nodes();
    let n = nodes.len();
    run.write_csv(
        "trajectory.csv",
        &["t", "edge", "x", "z", "rho"],
        snaps.iter().flat_map(|snap| {
            (0..snap.z.len()).map(move |i| {
                vec![fmt_f64(snap.t), (i / n).to_string(), fmt_f64(nodes[i % n]), fmt_f64(snap.z[i]), fmt_f64(snap.rho[i])]
            })
        }),
    )?;
    let mut files = vec!["trajectory.csv"];
    let gramian = if s.probes > 0 {
        let probes = probe_signals(ctrl.n_v(), n_u, s.probes, s.t_final);
        let g = empirical_gramian(sys, &ctrl, &probes, s.t_final, s.dt).map_err(with_path("simulation.probes"))?;
        run.write_csv(
            "gramian_sigmas.csv",
            &["index", "sigma"],
            g.sigmas.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]),
        )?;
        files.push("gramian_sigmas.csv");
        Some(GramianSummary { probes: probes.len(), tolerance: GRAMIAN_TOL, rank: g.rank(GRAMIAN_TOL), dim: sys.dim(), sigmas: g.sigmas })
    } else {
        None
    };
    files.push("manifest.json");
    run.write_json(
        "manifest.json",
        &Manifest {
            dt: sim.dt(),
            t_final: end.t,
            steps: snaps.last().map_or(0, |_| ((end.t / sim.dt()).round()) as usize),
            snapshots: snaps.len(),
            mesh_nodes: sim.nodes(),
            mass_initial,
            mass_final: sim.mass(&end),
            reconstruction_residual: sim.reconstruction_residual(&end),
            gramian,
            files,
        },
    )?;
    Ok(Outcome::Ok)
}
