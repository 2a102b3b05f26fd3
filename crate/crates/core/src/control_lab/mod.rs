//! Regularized least-squares control synthesis and the reachability and
//! observability experiments built on it.
//!
//! `synthesize_control` minimizes `‖G p − y‖² + α‖p‖²` by CGLS, where `p`
//! is a pre-control, `G = W^T ∘ S` for the chosen class smoother `S`, and
//! the norm is either the truncated modal `D_s` norm or the grid `H¹` norm.
//! The adjoint is assembled from `observe` and the smoother adjoint, so
//! the normal equations are exact.

mod experiments;
pub mod targets;

use std::io;
use std::time::{Duration, Instant};

use serde::Serialize;

pub use experiments::{
    class_monotonicity, embed_antisymmetric_into_plain, embed_later, h1_star_experiment, horizon_monotonicity,
    observability_test, residual_curve, unreachability_bound, ClassMonotonicity, HorizonMonotonicity,
    ObservabilityVerdict, ResidualCurve, Unreachability,
};

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::regularizer::{ControlSmoother, SmoothingKind};
use crate::spectral::SpectralBasis;
use crate::waveop::{BoundaryControl, BoundarySignal, StateField, TimeGrid, WaveSystem};

/// Admissible controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlClass {
    /// Every `L2` control: reachable set `U^T`.
    AllOfF,
    /// Antisymmetrically smoothed controls: `U^T₀` proxy.
    SmoothVanishingAtT,
    /// Plainly smoothed controls vanishing near `t = 0`: `U^T_*` proxy.
    Smooth,
}

impl ControlClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all_of_f" => Some(ControlClass::AllOfF),
            "smooth_vanishing_at_t" => Some(ControlClass::SmoothVanishingAtT),
            "smooth" => Some(ControlClass::Smooth),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControlClass::AllOfF => "all_of_f",
            ControlClass::SmoothVanishingAtT => "smooth_vanishing_at_t",
            ControlClass::Smooth => "smooth",
        }
    }
}

/// Norm in which the misfit is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Truncated modal `D_s` norm; `s = 0` is reported in the grid `H` norm
    /// (truncation tail included).
    Ds(f64),
    /// Grid `H¹(Ω)` norm (mass plus edge-gradient quadrature).
    H1,
}

#[derive(Clone, Debug)]
pub struct SynthesisProblem {
    pub target: StateField,
    pub time: TimeGrid,
    pub norm: NormKind,
    pub class: ControlClass,
    pub alpha: f64,
    pub budget: usize,
    pub tolerance: f64,
    /// Class smoothing offset `δ` (default `T/10`).
    pub delta: f64,
    /// Mollifier width `ε` (default `δ/2`).
    pub epsilon: f64,
}

impl SynthesisProblem {
    pub const DEFAULT_BUDGET: usize = 500;
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    /// Defaults: `Δt = T/1024`, `D_0` norm, all of `F^T`, `α = 0`, 500
    /// iterations, `δ = T/10`, `ε = δ/2`.
    pub fn new(target: StateField, horizon: f64) -> Result<Self> {
        let time = TimeGrid::with_default_steps(horizon)?;
        Ok(Self::with_time(target, time))
    }

    pub fn with_time(target: StateField, time: TimeGrid) -> Self {
        let delta = time.horizon() / 10.0;
        SynthesisProblem {
            target,
            time,
            norm: NormKind::Ds(0.0),
            class: ControlClass::AllOfF,
            alpha: 0.0,
            budget: Self::DEFAULT_BUDGET,
            tolerance: Self::DEFAULT_TOLERANCE,
            delta,
            epsilon: delta / 2.0,
        }
    }

    pub fn norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    pub fn class(mut self, class: ControlClass) -> Self {
        self.class = class;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn smoothing(mut self, epsilon: f64, delta: f64) -> Self {
        self.epsilon = epsilon;
        self.delta = delta;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.time.horizon()
    }

    fn validate(&self, basis: &SpectralBasis) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::param(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if let NormKind::Ds(s) = self.norm {
            if !(s >= 0.0) {
                return Err(Error::param(format!("order s must be non-negative, got {s}")));
            }
        }
        if !basis.grid().same_shape(self.target.grid()) {
            return Err(Error::param("target is sampled on a different grid than the basis"));
        }
        if self.budget == 0 {
            return Err(Error::param("iteration budget must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    /// Control on `Σ^T` (after the class smoother).
    pub control: BoundaryControl,
    /// Optimization variable: the pre-control fed to the class smoother.
    pub pre_control: BoundarySignal,
    /// Misfit in the objective norm, one entry per iterate (entry 0 is the
    /// starting guess).
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub target_norm: f64,
    pub relative_residual: f64,
    /// `‖y − P_N y‖_H`: the part of the target outside the modal span.
    pub tail_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

/// Flat JSON summary of one synthesis run.
#[derive(Clone, Debug, Serialize)]
pub struct SynthesisSummary {
    pub horizon: f64,
    pub time_steps: usize,
    pub norm: String,
    pub class: String,
    pub alpha: f64,
    pub budget: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub target_norm: f64,
    pub tail_norm: f64,
    pub final_residual: f64,
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SynthesisResult {
    pub fn summary(&self, problem: &SynthesisProblem) -> SynthesisSummary {
        SynthesisSummary {
            horizon: problem.horizon(),
            time_steps: problem.time.steps(),
            norm: match problem.norm {
                NormKind::Ds(s) => format!("ds:{s}"),
                NormKind::H1 => "h1".into(),
            },
            class: problem.class.name().into(),
            alpha: problem.alpha,
            budget: problem.budget,
            epsilon: problem.epsilon,
            delta: problem.delta,
            target_norm: self.target_norm,
            tail_norm: self.tail_norm,
            final_residual: self.final_residual,
            relative_residual: self.relative_residual,
            iterations: self.iterations,
            converged: self.converged,
        }
    }

    /// CSV `iter,residual`.
    pub fn write_history_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "residual"])?;
        for (i, r) in self.residual_history.iter().enumerate() {
            w.write_record([i.to_string(), r.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Grid `H¹` Gram operator: trapezoid mass plus edge differences.
pub(crate) fn h1_apply(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = grid.mass_weights().iter().zip(u).map(|(w, v)| w * v).collect();
    let mut edge = |a: usize, b: usize, w: f64| {
        let d = w * (u[a] - u[b]);
        out[a] += d;
        out[b] -= d;
    };
    if grid.dim() == 1 {
        for i in 0..grid.nx() - 1 {
            edge(i, i + 1, 1.0 / grid.hx());
        }
    } else {
        let (hx, hy) = (grid.hx(), grid.hy());
        let half = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if i + 1 < grid.nx() {
                    edge(grid.index(i, j), grid.index(i + 1, j), half(j, grid.ny()) * hy / hx);
                }
                if j + 1 < grid.ny() {
                    edge(grid.index(i, j), grid.index(i, j + 1), half(i, grid.nx()) * hx / hy);
                }
            }
        }
    }
    out
}

/// Grid `H¹(Ω)` norm.
pub fn h1_norm(y: &StateField) -> f64 {
    let q = h1_apply(y.grid(), y.values());
    q.iter().zip(y.values()).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

enum Objective {
    Modal(Vec<f64>),
    H1,
}

pub(crate) struct ForwardMap<'a> {
    sys: WaveSystem<'a>,
    smoother: Option<ControlSmoother>,
    objective: Objective,
}

impl<'a> ForwardMap<'a> {
    pub(crate) fn new(problem: &SynthesisProblem, basis: &'a SpectralBasis) -> Result<Self> {
        let sys = WaveSystem::new(basis, problem.time);
        let smoother = match problem.class {
            ControlClass::AllOfF => None,
            ControlClass::SmoothVanishingAtT => Some(ControlSmoother::new(
                SmoothingKind::Antisymmetric,
                problem.time,
                problem.epsilon,
                problem.delta,
            )?),
            ControlClass::Smooth => Some(ControlSmoother::new(
                SmoothingKind::Plain,
                problem.time,
                problem.epsilon,
                problem.delta,
            )?),
        };
        let objective = match problem.norm {
            NormKind::Ds(s) => Objective::Modal(basis.lambdas().iter().map(|l| l.powf(0.5 * s)).collect()),
            NormKind::H1 => Objective::H1,
        };
        Ok(ForwardMap {
            sys,
            smoother,
            objective,
        })
    }

    pub(crate) fn pre_grid(&self) -> TimeGrid {
        self.smoother.as_ref().map_or(*self.sys.time(), |s| *s.pre_grid())
    }

    pub(crate) fn zero_pre(&self) -> BoundarySignal {
        BoundarySignal::zeros(self.sys.basis().grid(), self.pre_grid())
    }

    pub(crate) fn control(&self, p: &BoundarySignal) -> BoundarySignal {
        match &self.smoother {
            Some(s) => s.apply(p),
            None => p.clone(),
        }
    }

    fn mask(&self, p: &mut BoundarySignal) {
        if let Some(s) = &self.smoother {
            s.mask(p);
        }
    }

    /// Target in objective coordinates.
    fn rhs(&self, y: &StateField) -> Vec<f64> {
        match &self.objective {
            Objective::Modal(w) => {
                let a = self.sys.basis().project_values(y.values());
                a.iter().zip(w).map(|(a, w)| a * w).collect()
            }
            Objective::H1 => y.values().to_vec(),
        }
    }

    fn apply(&self, p: &BoundarySignal) -> Result<Vec<f64>> {
        let f = self.control(p);
        match &self.objective {
            Objective::Modal(w) => {
                let c = self.sys.control_to_modal_unchecked(&f);
                Ok(c.iter().zip(w).map(|(c, w)| c * w).collect())
            }
            Objective::H1 => self.sys.lifted_unchecked(&f),
        }
    }

    fn adjoint(&self, r: &[f64]) -> Result<BoundarySignal> {
        let h = match &self.objective {
            Objective::Modal(w) => {
                let rw: Vec<f64> = r.iter().zip(w).map(|(r, w)| r * w).collect();
                self.sys.observe_modal(&rw)
            }
            Objective::H1 => {
                let z = h1_apply(self.sys.basis().grid(), r);
                self.sys.lifted_adjoint(&z)?
            }
        };
        Ok(match &self.smoother {
            Some(s) => s.adjoint(&h),
            None => h,
        })
    }

    fn y_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.objective {
            Objective::Modal(_) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Objective::H1 => {
                let q = h1_apply(self.sys.basis().grid(), a);
                q.iter().zip(b).map(|(x, y)| x * y).sum()
            }
        }
    }
}

fn axpy(y: &mut BoundarySignal, a: f64, x: &BoundarySignal) {
    y.samples_mut().iter_mut().zip(x.samples()).for_each(|(y, x)| *y += a * x);
}

/// Runs the synthesis from a zero pre-control.
pub fn synthesize_control(problem: &SynthesisProblem, basis: &SpectralBasis) -> Result<SynthesisResult> {
    synthesize_control_from(problem, basis, None)
}

/// Runs the synthesis from the given pre-control (on the class pre-grid).
pub fn synthesize_control_from(
    problem: &SynthesisProblem,
    basis: &SpectralBasis,
    start: Option<&BoundarySignal>,
) -> Result<SynthesisResult> {
    problem.validate(basis)?;
    let started = Instant::now();
    let map = ForwardMap::new(problem, basis)?;
    let b = map.rhs(&problem.target);
    let alpha = problem.alpha;

    let mut x = match start {
        Some(p) => {
            if *p.time() != map.pre_grid() || p.n_boundary() != basis.boundary_nodes().len() {
                return Err(Error::param("starting pre-control does not match the class pre-grid"));
            }
            p.clone()
        }
        None => map.zero_pre(),
    };
    map.mask(&mut x);

    let tail_norm = basis.tail_norm(&problem.target)?;
    // s = 0 misfits are reported in the grid H norm, which adds the tail
    let tail_sq = match problem.norm {
        NormKind::Ds(s) if s == 0.0 => tail_norm * tail_norm,
        _ => 0.0,
    };
    let report = |r_sq: f64| (r_sq + tail_sq).max(0.0).sqrt();

    let gx = map.apply(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&gx).map(|(b, g)| b - g).collect();
    let mut s = map.adjoint(&r)?;
    axpy(&mut s, -alpha, &x);
    let normal_scale = map.adjoint(&b)?.f_norm().max(f64::MIN_POSITIVE);
    let mut p = s.clone();
    let mut gamma = s.f_inner_unchecked(&s);

    let objective = |r: &[f64], x: &BoundarySignal| map.y_inner(r, r) + alpha * x.f_inner_unchecked(x);
    let mut history = vec![report(map.y_inner(&r, &r))];
    let mut best = (objective(&r, &x), x.clone(), history[0]);
    let mut converged = gamma.sqrt() <= problem.tolerance * normal_scale;
    let mut iterations = 0;

    while !converged && iterations < problem.budget {
        let q = map.apply(&p)?;
        let denom = map.y_inner(&q, &q) + alpha * p.f_inner_unchecked(&p);
        if !(denom > 0.0) {
            break;
        }
        let a = gamma / denom;
        axpy(&mut x, a, &p);
        r.iter_mut().zip(&q).for_each(|(r, q)| *r -= a * q);
        s = map.adjoint(&r)?;
        axpy(&mut s, -alpha, &x);
        let gamma_new = s.f_inner_unchecked(&s);
        iterations += 1;

        let res = report(map.y_inner(&r, &r));
        history.push(res);
        let j = objective(&r, &x);
        if j <= best.0 {
            best = (j, x.clone(), res);
        }
        if gamma_new.sqrt() <= problem.tolerance * normal_scale {
            converged = true;
            break;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        let mut next = s.clone();
        axpy(&mut next, beta, &p);
        p = next;
    }

    let pre = best.1;
    let mut control = BoundaryControl::new(map.control(&pre));
    match problem.class {
        ControlClass::AllOfF => {}
        ControlClass::SmoothVanishingAtT => {
            control.flags.vanishes_near_zero = Some(problem.delta - problem.epsilon);
            control.flags.vanishes_at_t_even_derivatives = true;
        }
        ControlClass::Smooth => control.flags.vanishes_near_zero = Some(problem.delta - problem.epsilon),
    }

    let target_norm = match problem.norm {
        NormKind::Ds(s) if s == 0.0 => problem.target.h_norm(),
        NormKind::Ds(_) => map.y_inner(&b, &b).sqrt(),
        NormKind::H1 => h1_norm(&problem.target),
    };
    let final_residual = best.2;
    Ok(SynthesisResult {
        control,
        pre_control: pre,
        residual_history: history,
        final_residual,
        target_norm,
        relative_residual: if target_norm > 0.0 { final_residual / target_norm } else { final_residual },
        tail_norm,
        iterations,
        converged,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::spectral::{eigensolve, Backend};

    fn basis() -> SpectralBasis {
        let d = DomainSpec::interval(1.0, 129).unwrap();
        eigensolve(&d, 24, Backend::Auto).unwrap()
    }

    #[test]
    fn in_range_target_is_recovered() {
        let b = basis();
        let time = TimeGrid::new(0.75, 256).unwrap();
        let sys = WaveSystem::new(&b, time);
        let g = BoundaryControl::from_fn(b.grid(), time, |gid, _, t| if gid == 0 { (7.0 * t).sin() } else { t * t });
        let y = sys.control_to_state(&g).unwrap();
        let prob = SynthesisProblem::with_time(y, time);
        let res = synthesize_control(&prob, &b).unwrap();
        assert!(res.relative_residual < 1e-6, "{}", res.relative_residual);
        assert!(res.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn h1_gram_matches_gradient_integral() {
        let grid = Grid::interval(1.0, 257).unwrap();
        let y = StateField::from_fn(grid, crate::waveop::FieldRole::Target, |x, _| x * x);
        // ∫ x⁴ + ∫ 4x² = 1/5 + 4/3
        assert!((h1_norm(&y).powi(2) - (0.2 + 4.0 / 3.0)).abs() < 1e-4);
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let b = basis();
        let y = targets::centre_bump(b.grid());
        let prob = SynthesisProblem::new(y, 0.3).unwrap().alpha(-1.0);
        assert!(synthesize_control(&prob, &b).is_err());
    }
}
