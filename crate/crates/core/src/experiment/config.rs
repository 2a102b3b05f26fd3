//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Keys left out take the defaults listed in [`KEYS`]; `eps` and
//! `delta` default to `T/20` and `T/10`, and `nodes` / `n_modes` to
//! 513 / 64 in 1D and 129 / 100 in 2D.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::control_lab::{targets, ControlClass};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientPreset, DomainSpec, Grid};
use crate::spectral::{Backend, SpectralBasis};
use crate::waveop::{StateField, TimeGrid};

/// Recognised keys with a one-line description each.
pub const KEYS: &[(&str, &str)] = &[
    ("dim", "1 or 2 (default 1)"),
    ("lx", "domain length in x (default 1)"),
    ("ly", "domain length in y, 2D only (default 1)"),
    ("nodes", "grid nodes per axis, boundary included"),
    ("preset", "constant | radial_bump (default constant)"),
    ("a11", "constant preset: a11 (default 1)"),
    ("a12", "constant preset: a12 (default 0)"),
    ("a22", "constant preset: a22 (default 1)"),
    ("bump_base", "radial_bump preset: background speed squared (default 1)"),
    ("bump_amplitude", "radial_bump preset: peak increment (default 0.5)"),
    ("bump_center", "radial_bump preset: centre x,y (default domain centre)"),
    ("bump_radius", "radial_bump preset: radius (default 0.25)"),
    ("coefficient_table", "CSV i,j,a11,a12,a22[,q]; overrides preset and potential"),
    ("potential", "constant potential q >= 0 (default 0)"),
    ("n_modes", "retained eigenpairs"),
    ("backend", "auto | analytic | fd | krylov (default auto)"),
    ("T", "horizon (default 0.75)"),
    ("steps", "time steps on [0, T] (default 1024)"),
    ("eps", "mollifier width, 0 < eps < delta"),
    ("delta", "initial rest length, delta < T"),
    ("s", "order of the D_s norm, s >= 0 (default 0)"),
    ("alpha", "Tikhonov weight for single synthesis runs (default 1e-4)"),
    ("alphas", "decreasing weight schedule (default 1e-1,1e-2,1e-3,1e-4,1e-5,1e-6)"),
    ("budget", "CGLS iteration budget (default 500)"),
    ("tolerance", "CGLS stopping tolerance (default 1e-8)"),
    ("class", "all_of_f | smooth_vanishing_at_t | smooth (default all_of_f)"),
    ("target", "smooth_bump | kaiser_bump | centre_bump | ramp | constant | mode | file (default smooth_bump)"),
    ("target_interval", "support a,b of bump targets (default 0.1,0.8)"),
    ("target_value", "constant target value (default 1)"),
    ("target_mode", "one-based mode index for target = mode (default 1)"),
    ("target_file", "CSV x,u or x,y,u for target = file"),
    ("pulse_interval", "support a,b in time of the forward pulse (default 0.1,0.5)"),
    ("pulse_side", "all | left (default left)"),
    ("control_file", "CSV gamma_id,t,g; replaces the forward pulse"),
    ("observe_tol", "trace tolerance of the observability test (default 1e-3)"),
    ("export_modes", "modes written by eigen (default 4)"),
    ("samples", "random pairs per property suite (default 100)"),
    ("seed", "generator seed (default 20240601)"),
    ("out_dir", "artifact directory (default out)"),
    ("break_quadrature", "test hook: rectangle weights in the transposition (default false)"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    SmoothBump,
    KaiserBump,
    CentreBump,
    Ramp,
    Constant,
    Mode,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseSide {
    All,
    Left,
}

/// Validated experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub lx: f64,
    pub ly: f64,
    pub nodes: usize,
    pub preset: CoefficientPreset,
    pub coefficient_table: Option<PathBuf>,
    pub potential: Option<f64>,
    pub n_modes: usize,
    pub backend: Backend,
    pub horizon: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub s: f64,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub budget: usize,
    pub tolerance: f64,
    pub class: ControlClass,
    pub target: TargetKind,
    pub target_interval: (f64, f64),
    pub target_value: f64,
    pub target_mode: usize,
    pub target_file: Option<PathBuf>,
    pub pulse_interval: (f64, f64),
    pub pulse_side: PulseSide,
    pub control_file: Option<PathBuf>,
    pub observe_tol: f64,
    pub export_modes: usize,
    pub samples: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub break_quadrature: bool,
    echo: BTreeMap<String, String>,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| cfg(format!("{key}: cannot parse {v:?}"))),
        }
    }

    fn opt_num(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| v.parse().map_err(|_| cfg(format!("{key}: cannot parse {v:?}"))))
            .transpose()
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.take(key) else { return Ok(None) };
        v.split(',')
            .map(|p| p.trim().parse().map_err(|_| cfg(format!("{key}: cannot parse {p:?}"))))
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    fn pair(&mut self, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok((v[0], v[1])),
            Some(_) => Err(cfg(format!("{key}: expected two comma separated values"))),
        }
    }
}

impl ExperimentConfig {
    /// Parses config text. Relative file paths are taken relative to `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(cfg(format!("line {}: unknown key {k:?}", n + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(cfg(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        Self::from_map(Raw(map), base)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    /// Built-in defaults (1D unit interval).
    pub fn default_1d() -> Self {
        Self::parse("", None).expect("defaults are valid")
    }

    fn from_map(mut raw: Raw, base: Option<&Path>) -> Result<Self> {
        let resolve = |p: String| -> PathBuf {
            let p = PathBuf::from(p);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        let dim: usize = raw.num("dim", 1)?;
        if dim != 1 && dim != 2 {
            return Err(cfg(format!("dim must be 1 or 2, got {dim}")));
        }
        let lx = raw.num("lx", 1.0)?;
        let ly = raw.num("ly", 1.0)?;
        let nodes = raw.num("nodes", if dim == 1 { 513 } else { 129 })?;
        let a11 = raw.num("a11", 1.0)?;
        let a12 = raw.num("a12", 0.0)?;
        let a22 = raw.num("a22", 1.0)?;
        let base_speed = raw.num("bump_base", 1.0)?;
        let amplitude = raw.num("bump_amplitude", 0.5)?;
        let center = raw.pair("bump_center", (lx / 2.0, if dim == 2 { ly / 2.0 } else { 0.0 }))?;
        let radius = raw.num("bump_radius", 0.25)?;
        let preset = match raw.take("preset").as_deref().unwrap_or("constant") {
            "constant" => CoefficientPreset::Constant { a11, a12, a22 },
            "radial_bump" => CoefficientPreset::RadialBump {
                base: base_speed,
                amplitude,
                center,
                radius,
            },
            other => return Err(cfg(format!("preset: unknown value {other:?}"))),
        };
        let coefficient_table = raw.take("coefficient_table").map(resolve);
        let potential = raw.opt_num("potential")?;
        let n_modes = raw.num("n_modes", if dim == 1 { 64 } else { 100 })?;
        let backend = match raw.take("backend").as_deref().unwrap_or("auto") {
            "auto" => Backend::Auto,
            "analytic" => Backend::Analytic,
            "fd" => Backend::FiniteDifference,
            "krylov" => Backend::Krylov,
            other => return Err(cfg(format!("backend: unknown value {other:?}"))),
        };
        let horizon: f64 = raw.num("T", 0.75)?;
        let steps = raw.num("steps", 1024)?;
        let delta = raw.opt_num("delta")?.unwrap_or(horizon / 10.0);
        let epsilon = raw.opt_num("eps")?.unwrap_or(delta / 2.0);
        let s = raw.num("s", 0.0)?;
        let alpha = raw.num("alpha", 1e-4)?;
        let alphas = raw.list("alphas")?.unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]);
        let budget = raw.num("budget", 500)?;
        let tolerance = raw.num("tolerance", 1e-8)?;
        let class_name = raw.take("class").unwrap_or_else(|| "all_of_f".into());
        let class = ControlClass::parse(&class_name).ok_or_else(|| cfg(format!("class: unknown value {class_name:?}")))?;
        let target = match raw.take("target").as_deref().unwrap_or("smooth_bump") {
            "smooth_bump" => TargetKind::SmoothBump,
            "kaiser_bump" => TargetKind::KaiserBump,
            "centre_bump" | "center_bump" => TargetKind::CentreBump,
            "ramp" => TargetKind::Ramp,
            "constant" => TargetKind::Constant,
            "mode" => TargetKind::Mode,
            "file" => TargetKind::File,
            other => return Err(cfg(format!("target: unknown value {other:?}"))),
        };
        let target_interval = raw.pair("target_interval", (0.1, 0.8))?;
        let target_value = raw.num("target_value", 1.0)?;
        let target_mode = raw.num("target_mode", 1)?;
        let target_file = raw.take("target_file").map(resolve);
        let pulse_interval = raw.pair("pulse_interval", (0.1, 0.5))?;
        let pulse_side = match raw.take("pulse_side").as_deref().unwrap_or("left") {
            "all" => PulseSide::All,
            "left" => PulseSide::Left,
            other => return Err(cfg(format!("pulse_side: unknown value {other:?}"))),
        };
        let control_file = raw.take("control_file").map(resolve);
        let observe_tol = raw.num("observe_tol", 1e-3)?;
        let export_modes = raw.num("export_modes", 4)?;
        let samples = raw.num("samples", 100)?;
        let seed = raw.num("seed", 20240601)?;
        let out_dir = PathBuf::from(raw.take("out_dir").unwrap_or_else(|| "out".into()));
        let break_quadrature = raw.num("break_quadrature", false)?;
        debug_assert!(raw.0.is_empty(), "unconsumed keys {:?}", raw.0.keys());

        let mut c = ExperimentConfig {
            dim,
            lx,
            ly,
            nodes,
            preset,
            coefficient_table,
            potential,
            n_modes,
            backend,
            horizon,
            steps,
            epsilon,
            delta,
            s,
            alpha,
            alphas,
            budget,
            tolerance,
            class,
            target,
            target_interval,
            target_value,
            target_mode,
            target_file,
            pulse_interval,
            pulse_side,
            control_file,
            observe_tol,
            export_modes,
            samples,
            seed,
            out_dir,
            break_quadrature,
            echo: BTreeMap::new(),
        };
        c.validate()?;
        c.refresh_echo();
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg(format!("{name} must be positive, got {v}")))
            }
        };
        pos("lx", self.lx)?;
        pos("ly", self.ly)?;
        pos("T", self.horizon)?;
        pos("tolerance", self.tolerance)?;
        pos("observe_tol", self.observe_tol)?;
        if !(0.0 < self.epsilon && self.epsilon < self.delta && self.delta < self.horizon) {
            return Err(cfg(format!(
                "need 0 < eps < delta < T, got eps = {}, delta = {}, T = {}",
                self.epsilon, self.delta, self.horizon
            )));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(cfg(format!("s must be >= 0, got {}", self.s)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(cfg(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0)) || self.alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(cfg("alphas must be positive and strictly decreasing"));
        }
        if self.nodes < 3 {
            return Err(cfg(format!("nodes must be >= 3, got {}", self.nodes)));
        }
        let interior = (self.nodes - 2).pow(self.dim as u32);
        if self.n_modes == 0 || self.n_modes > interior {
            return Err(cfg(format!("n_modes must lie in 1..={interior}, got {}", self.n_modes)));
        }
        if self.steps == 0 || self.budget == 0 || self.samples == 0 {
            return Err(cfg("steps, budget and samples must be positive"));
        }
        if let Some(q) = self.potential {
            if !(q >= 0.0) {
                return Err(cfg(format!("potential must be >= 0, got {q}")));
            }
        }
        let (a, b) = self.target_interval;
        if !(a < b) {
            return Err(cfg("target_interval must satisfy a < b"));
        }
        let (a, b) = self.pulse_interval;
        if !(0.0 <= a && a < b) {
            return Err(cfg("pulse_interval must satisfy 0 <= a < b"));
        }
        if self.target_mode == 0 || self.target_mode > self.n_modes {
            return Err(cfg(format!("target_mode must lie in 1..={}", self.n_modes)));
        }
        if self.target == TargetKind::File && self.target_file.is_none() {
            return Err(cfg("target = file needs target_file"));
        }
        Ok(())
    }

    /// Overrides the seed (command line `--seed`).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.refresh_echo();
        self
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = dir.into();
        self
    }

    fn refresh_echo(&mut self) {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let pair = |p: (f64, f64)| format!("{},{}", p.0, p.1);
        let mut e = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            e.insert(k.to_string(), v);
        };
        put("dim", self.dim.to_string());
        put("lx", self.lx.to_string());
        if self.dim == 2 {
            put("ly", self.ly.to_string());
        }
        put("nodes", self.nodes.to_string());
        match &self.coefficient_table {
            Some(p) => put("coefficient_table", p.display().to_string()),
            None => match self.preset {
                CoefficientPreset::Constant { a11, a12, a22 } => {
                    put("preset", "constant".into());
                    put("a11", a11.to_string());
                    put("a12", a12.to_string());
                    put("a22", a22.to_string());
                }
                CoefficientPreset::RadialBump {
                    base,
                    amplitude,
                    center,
                    radius,
                } => {
                    put("preset", "radial_bump".into());
                    put("bump_base", base.to_string());
                    put("bump_amplitude", amplitude.to_string());
                    put("bump_center", pair(center));
                    put("bump_radius", radius.to_string());
                }
            },
        }
        if let Some(q) = self.potential {
            put("potential", q.to_string());
        }
        put("n_modes", self.n_modes.to_string());
        put(
            "backend",
            match self.backend {
                Backend::Auto => "auto",
                Backend::Analytic => "analytic",
                Backend::FiniteDifference => "fd",
                Backend::Krylov => "krylov",
            }
            .into(),
        );
        put("T", self.horizon.to_string());
        put("steps", self.steps.to_string());
        put("eps", self.epsilon.to_string());
        put("delta", self.delta.to_string());
        put("s", self.s.to_string());
        put("alpha", self.alpha.to_string());
        put("alphas", list(&self.alphas));
        put("budget", self.budget.to_string());
        put("tolerance", self.tolerance.to_string());
        put("class", self.class.name().into());
        let target = match self.target {
            TargetKind::SmoothBump => "smooth_bump",
            TargetKind::KaiserBump => "kaiser_bump",
            TargetKind::CentreBump => "centre_bump",
            TargetKind::Ramp => "ramp",
            TargetKind::Constant => "constant",
            TargetKind::Mode => "mode",
            TargetKind::File => "file",
        };
        put("target", target.into());
        put("target_interval", pair(self.target_interval));
        put("target_value", self.target_value.to_string());
        put("target_mode", self.target_mode.to_string());
        if let Some(p) = &self.target_file {
            put("target_file", p.display().to_string());
        }
        put("pulse_interval", pair(self.pulse_interval));
        put(
            "pulse_side",
            match self.pulse_side {
                PulseSide::All => "all",
                PulseSide::Left => "left",
            }
            .into(),
        );
        if let Some(p) = &self.control_file {
            put("control_file", p.display().to_string());
        }
        put("observe_tol", self.observe_tol.to_string());
        put("export_modes", self.export_modes.to_string());
        put("samples", self.samples.to_string());
        put("seed", self.seed.to_string());
        put("break_quadrature", self.break_quadrature.to_string());
        self.echo = e;
    }

    /// Effective configuration as sorted `(key, value)` pairs; parsing
    /// [`Self::to_text`] reproduces the same run.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.echo {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.dim == 1 {
            Grid::interval(self.lx, self.nodes)
        } else {
            Grid::rectangle(self.lx, self.ly, self.nodes, self.nodes)
        }
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let grid = self.grid()?;
        match &self.coefficient_table {
            Some(p) => DomainSpec::from_table(grid, p),
            None => DomainSpec::from_preset(grid, &self.preset, self.potential),
        }
    }

    pub fn time(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps)
    }

    pub fn target_field(&self, basis: &SpectralBasis) -> Result<StateField> {
        let grid = basis.grid();
        let (a, b) = self.target_interval;
        Ok(match self.target {
            TargetKind::SmoothBump => targets::smooth_bump(grid, a, b),
            TargetKind::KaiserBump => targets::kaiser_bump(grid, a, b),
            TargetKind::CentreBump => targets::centre_bump(grid),
            TargetKind::Ramp => targets::linear_ramp(grid),
            TargetKind::Constant => targets::constant(grid, self.target_value),
            TargetKind::Mode => targets::mode(basis, self.target_mode - 1),
            TargetKind::File => {
                let p = self.target_file.as_ref().expect("validated");
                let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
                StateField::read_csv(grid.clone(), crate::waveop::FieldRole::Target, f)?
            }
        })
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::default_1d()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_derived_values() {
        let c = ExperimentConfig::default_1d();
        assert_eq!(c.nodes, 513);
        assert_eq!(c.n_modes, 64);
        assert!((c.delta - 0.075).abs() < 1e-15);
        assert!((c.epsilon - 0.0375).abs() < 1e-15);
        let c2 = ExperimentConfig::parse("dim = 2", None).unwrap();
        assert_eq!((c2.nodes, c2.n_modes), (129, 100));
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["colour = red", "T = 1\nT = 2", "eps = 0.2\ndelta = 0.1", "s = -1", "T = 0", "alphas = 1e-3,1e-2", "dim = 3", "nodes"] {
            assert!(matches!(ExperimentConfig::parse(text, None), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig::parse("T = 0.3\ntarget = centre_bump # unreachable\nalphas = 0.5, 0.25", None).unwrap();
        let again = ExperimentConfig::parse(&c.to_text(), None).unwrap();
        assert_eq!(c.to_text(), again.to_text());
        assert_eq!(again.target, TargetKind::CentreBump);
    }
}
