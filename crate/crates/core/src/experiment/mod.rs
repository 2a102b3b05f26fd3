//! Config-driven experiment runs with CSV/JSON artifacts.
//!
//! Every run writes into its output directory:
//! - `config.txt`: the effective configuration, re-parseable;
//! - `manifest.json`: flat object with the subcommand, code version and the
//!   configuration echo;
//! - `timings.txt`: wall-clock seconds per phase (the only artifact that is
//!   not reproducible byte for byte);
//! - the subcommand's own CSV/JSON files.

mod config;
mod verify;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use config::{ExperimentConfig, PulseSide, TargetKind, KEYS};
pub use verify::{verify_suite, VerifyItem, VerifyReport};

use crate::control_lab::{h1_star_experiment, observability_test, residual_curve, synthesize_control, targets, NormKind, SynthesisProblem, SynthesisResult};
use crate::error::{Error, Result};
use crate::geometry::{eikonal_distance, filled_subdomain, DomainSpec};
use crate::regularizer::RegularizerSpectrum;
use crate::spectral::{eigensolve, Backend, SpectralBasis};
use crate::waveop::{fd_oracle_forward, support_violation, BoundaryControl, BoundarySignal, FieldRole, StateField, TimeGrid, WaveSystem};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Eikonal,
    Eigen,
    Forward,
    Dual,
    Observe,
    Beta,
    Control,
    H1Star,
    Verify,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Eikonal,
        Command::Eigen,
        Command::Forward,
        Command::Dual,
        Command::Observe,
        Command::Beta,
        Command::Control,
        Command::H1Star,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Eikonal => "eikonal",
            Command::Eigen => "eigen",
            Command::Forward => "forward",
            Command::Dual => "dual",
            Command::Observe => "observe",
            Command::Beta => "beta",
            Command::Control => "control",
            Command::H1Star => "h1star",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: Command,
    pub out_dir: PathBuf,
    /// Artifact file names, in write order.
    pub artifacts: Vec<String>,
    /// False only when `verify` found a failing item.
    pub passed: bool,
    pub verify: Option<VerifyReport>,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
    timings: Vec<(String, f64)>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            timings: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w).map_err(|e| Error::io(name, e))
        })
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        self.timings.push((phase.to_string(), t0.elapsed().as_secs_f64()));
        Ok(out)
    }
}

fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Auto => "auto",
        Backend::Analytic => "analytic",
        Backend::FiniteDifference => "fd",
        Backend::Krylov => "krylov",
    }
}

/// Runs one subcommand and writes its artifacts to `config.out_dir`.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<RunReport> {
    let mut art = Artifacts::create(&config.out_dir)?;
    let text = config.to_text();
    art.write("config.txt", |w| w.write_all(text.as_bytes()).map_err(|e| Error::io("config.txt", e)))?;
    let mut manifest = Map::new();
    manifest.insert("subcommand".into(), json!(command.name()));
    manifest.insert("code_version".into(), json!(CODE_VERSION));
    for (k, v) in config.echo() {
        manifest.insert(format!("config.{k}"), json!(v));
    }
    art.json("manifest.json", &Value::Object(manifest))?;

    let mut verify = None;
    let total = Instant::now();
    match command {
        Command::Eikonal => eikonal(config, &mut art)?,
        Command::Eigen => eigen(config, &mut art)?,
        Command::Forward => forward(config, &mut art)?,
        Command::Dual => dual(config, &mut art)?,
        Command::Observe => observe(config, &mut art)?,
        Command::Beta => beta(config, &mut art)?,
        Command::Control => control(config, &mut art, false)?,
        Command::H1Star => control(config, &mut art, true)?,
        Command::Verify => {
            let report = art.timed("suites", || verify_suite(config))?;
            art.json("report.json", &Value::Object(report.to_flat_json()))?;
            verify = Some(report);
        }
    }
    art.timings.push(("total".into(), total.elapsed().as_secs_f64()));
    let timings = std::mem::take(&mut art.timings);
    art.write("timings.txt", |w| {
        for (phase, secs) in &timings {
            writeln!(w, "{phase} {secs:.6}").map_err(|e| Error::io("timings.txt", e))?;
        }
        Ok(())
    })?;
    Ok(RunReport {
        command,
        out_dir: config.out_dir.clone(),
        artifacts: art.written,
        passed: verify.as_ref().is_none_or(|r| r.pass()),
        verify,
    })
}

fn basis(config: &ExperimentConfig, domain: &DomainSpec, art: &mut Artifacts) -> Result<SpectralBasis> {
    art.timed("eigensolve", || eigensolve(domain, config.n_modes, config.backend))
}

fn system<'a>(config: &ExperimentConfig, basis: &'a SpectralBasis) -> Result<WaveSystem<'a>> {
    let sys = WaveSystem::new(basis, config.time()?);
    Ok(if config.break_quadrature { sys.with_broken_quadrature() } else { sys })
}

fn centre_node(domain: &DomainSpec) -> usize {
    let g = domain.grid();
    g.index(g.nx() / 2, g.ny() / 2)
}

fn eikonal(config: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let domain = config.domain()?;
    let dist = art.timed("eikonal", || eikonal_distance(&domain))?;
    let region = filled_subdomain(&dist, config.horizon)?;
    art.write("distance.csv", |w| dist.write_csv(w))?;
    art.write("filled.csv", |w| region.write_csv(w))?;
    let c = centre_node(&domain);
    let (x, y) = domain.grid().coords(c);
    art.json(
        "summary.json",
        &json!({
            "horizon": config.horizon,
            "filling_time": crate::geometry::filling_time(&dist),
            "centre_x": x,
            "centre_y": y,
            "tau_centre": dist.tau[c],
            "filled_nodes": region.count(),
            "covers_interior": region.covers_interior(),
        }),
    )
}

pub(crate) fn gram_offdiag(b: &SpectralBasis) -> f64 {
    let n = b.n_modes();
    let mut off: f64 = 0.0;
    for k in 0..n {
        for l in (k + 1)..n {
            off = off.max(b.h_inner(b.mode(k), b.mode(l)).abs());
        }
    }
    off
}

fn eigen(config: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let domain = config.domain()?;
    let b = basis(config, &domain, art)?;
    art.write("lambdas.csv", |w| b.write_lambdas_csv(w))?;
    for k in 1..=config.export_modes.min(b.n_modes()) {
        art.write(&format!("mode_{k}.csv"), |w| b.write_mode_csv(k - 1, w))?;
    }
    let l = b.lambdas();
    art.json(
        "summary.json",
        &json!({
            "backend": backend_name(b.backend()),
            "n_modes": b.n_modes(),
            "lambda_1": l[0],
            "lambda_n": l[l.len() - 1],
            "max_residual": b.max_residual(),
            "gram_offdiag": gram_offdiag(&b),
        }),
    )
}

/// The configured forward control: `control_file` when given, otherwise the
/// smooth pulse on `pulse_interval`.
fn forward_control(config: &ExperimentConfig, domain: &DomainSpec, time: TimeGrid) -> Result<BoundaryControl> {
    if let Some(p) = &config.control_file {
        let f = File::open(p).map_err(|e| Error::io(p, e))?;
        return Ok(BoundaryControl::new(BoundarySignal::read_csv(domain.grid(), f)?).detect_initial_rest());
    }
    let (a, b) = config.pulse_interval;
    let left = config.pulse_side == PulseSide::Left;
    Ok(BoundaryControl::from_fn(domain.grid(), time, |_, (x, _), t| {
        if !left || x == 0.0 {
            targets::exp_bump(t, a, b)
        } else {
            0.0
        }
    }))
}

fn forward(config: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let domain = config.domain()?;
    let b = basis(config, &domain, art)?;
    let sys = system(config, &b)?;
    let f = forward_control(config, &domain, config.time()?)?;
    let u = art.timed("transposition", || sys.control_to_state(&f))?;
    let lifted = sys.control_to_state_lifted(&f)?;
    let oracle = art.timed("leapfrog", || Ok(fd_oracle_forward(&f, &domain)))?;
    let dist = eikonal_distance(&domain)?;
    let region = filled_subdomain(&dist, config.horizon)?;
    let band = 2.0 * domain.grid().spacing() + 2.0 * sys.time().dt();
    art.write("control.csv", |w| f.signal.write_csv(w))?;
    art.write("state.csv", |w| u.write_csv(w))?;
    art.write("state_lifted.csv", |w| lifted.write_csv(w))?;
    let oracle_distance = match &oracle {
        Ok(v) => {
            art.write("oracle.csv", |w| v.write_csv(w))?;
            Some(u.combine(1.0, v, -1.0)?.h_norm() / v.h_norm().max(f64::MIN_POSITIVE))
        }
        Err(Error::Cfl(_)) => None,
        Err(e) => return Err(Error::Internal(e.to_string())),
    };
    art.json(
        "summary.json",
        &json!({
            "horizon": config.horizon,
            "control_norm": f.f_norm(),
            "state_norm": u.h_norm(),
            "lifted_norm": lifted.h_norm(),
            "band": band,
            "support_violation": support_violation(&lifted, &region, band)?,
            "support_violation_modal": support_violation(&u, &region, band)?,
            "oracle_distance": oracle_distance,
        }),
    )
}

/// Largest relative duality discrepancy over `samples` seeded random pairs.
pub(crate) fn duality_sweep(sys: &WaveSystem, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = sys.basis().grid().clone();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut f = sys.zero_control();
        f.signal.samples_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let y = StateField::from_fn(grid.clone(), FieldRole::Target, |_, _| rng.random_range(-1.0..1.0));
        worst = worst.max(sys.verify_duality(&f, &y)?);
    }
    Ok(worst)
}

fn dual(config: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let domain = config.domain()?;
    let b = basis(config, &domain, art)?;
    let sys = system(config, &b)?;
    let y = config.target_field(&b)?;
    let trace = art.timed("observe", || sys.observe(&y))?;
    let v0 = sys.solve_dual(&y, &[0.0])?.remove(0);
    let discrepancy = art.timed("duality", || duality_sweep(&sys, config.samples, config.seed))?;
    art.write("trace.csv", |w| trace.write_csv(w))?;
    art.write("dual_t0.csv", |w| v0.write_csv(w))?;
    art.json(
        "summary.json",
        &json!({
            "horizon": config.horizon,
            "target_norm": y.h_norm(),
            "tail_norm": b.tail_norm(&y)?,
            "trace_norm": trace.f_norm(),
            "trace_ratio": trace.f_norm() / y.h_norm(),
            "samples": config.samples,
            "duality_max_discrepancy": discrepancy,
        }),
    )
}

fn observe(config: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let domain = config.domain()?;
    let b = basis(config, &domain, art)?;
    let y = config.target_field(&b)?;
    let dist = eikonal_distance(&domain)?;
    let verdict = art.timed("observe", || observability_test(&y, config.time()?, config.delta, config.observe_tol, &b, &dist))?;
    let trace = system(config, &b)?.observe(&y)?;
    art.write("trace.csv", |w| trace.write_csv(w))?;
    art.json("verdict.json", &verdict)
}

/// `max λ_k^{s/2} |β_k|` over the last quarter of the retained modes.
pub(crate) fn tail_decay(spec: &RegularizerSpectrum, s: f64) -> f64 {
    let n = spec.lambdas.len();
    (3 * n / 4..n)
        .map(|k| spec.lambdas[k].powf(s / 2.0) * spec.betas[k].abs())
        .fold(0.0, f64::max)
}

fn beta(config: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    use crate::regularizer::MollifierKernel;
    let domain = config.domain()?;
    let b = basis(config, &domain, art)?;
    let spec = art.timed("betas", || RegularizerSpectrum::for_basis(config.epsilon, &b))?;
    art.write("betas.csv", |w| spec.write_csv(w))?;
    art.json(
        "summary.json",
        &json!({
            "epsilon": config.epsilon,
            "normalization": MollifierKernel::normalization(),
            "second_moment": MollifierKernel::second_moment(),
            "max_abs_beta": spec.betas.iter().fold(0.0_f64, |m, b| m.max(b.abs())),
            "tail_decay_s1": tail_decay(&spec, 1.0),
            "tail_decay_s2": tail_decay(&spec, 2.0),
            "tail_decay_s4": tail_decay(&spec, 4.0),
        }),
    )
}

pub(crate) fn problem(config: &ExperimentConfig, target: StateField) -> Result<SynthesisProblem> {
    let mut p = SynthesisProblem::with_time(target, config.time()?)
        .norm(NormKind::Ds(config.s))
        .class(config.class)
        .alpha(config.alpha)
        .budget(config.budget)
        .smoothing(config.epsilon, config.delta);
    p.tolerance = config.tolerance;
    Ok(p)
}

fn write_synthesis(art: &mut Artifacts, problem: &SynthesisProblem, r: &SynthesisResult, reached: &StateField) -> Result<()> {
    art.write("control.csv", |w| r.control.signal.write_csv(w))?;
    art.write("history.csv", |w| r.write_history_csv(w))?;
    art.write("reached.csv", |w| reached.write_csv(w))?;
    art.json("summary.json", &r.summary(problem))
}

fn control(config: &ExperimentConfig, art: &mut Artifacts, h1: bool) -> Result<()> {
    let domain = config.domain()?;
    let b = basis(config, &domain, art)?;
    let y = config.target_field(&b)?;
    let prob = problem(config, y)?;
    let sys = WaveSystem::new(&b, prob.time);
    if h1 {
        let r = art.timed("synthesis", || h1_star_experiment(&prob, &b, None))?;
        let reached = sys.control_to_state_lifted(&r.control)?;
        let prob = prob.class(crate::control_lab::ControlClass::Smooth).norm(NormKind::H1);
        return write_synthesis(art, &prob, &r, &reached);
    }
    let curve = art.timed("residual_curve", || residual_curve(&prob, &config.alphas, &b))?;
    art.write("residual_curve.csv", |w| curve.write_csv(w))?;
    let r = art.timed("synthesis", || synthesize_control(&prob, &b))?;
    let reached = sys.control_to_state(&r.control)?;
    write_synthesis(art, &prob, &r, &reached)
}
