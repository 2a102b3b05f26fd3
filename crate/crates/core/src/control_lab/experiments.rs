use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{filled_subdomain, DistanceField, FilledRegion};
use crate::regularizer::{ControlSmoother, SmoothingKind};
use crate::spectral::SpectralBasis;
use crate::waveop::{BoundarySignal, StateField, TimeGrid, WaveSystem};

use super::{synthesize_control, synthesize_control_from, ControlClass, NormKind, SynthesisProblem, SynthesisResult};

/// Lower bound on `inf_f ‖W^T f − y‖_H` from finite speed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Unreachability {
    /// `‖y‖_H` over the nodes outside `Ω^T`.
    pub bound: f64,
    /// Same with `Ω^T` dilated by the smearing band.
    pub banded_bound: f64,
    pub band: f64,
}

fn mass_outside(y: &StateField, region: &FilledRegion) -> f64 {
    y.grid()
        .mass_weights()
        .iter()
        .zip(y.values())
        .enumerate()
        .filter(|(k, _)| !region.contains(*k))
        .map(|(_, (w, v))| w * v * v)
        .sum::<f64>()
        .sqrt()
}

fn mass_inside(y: &StateField, region: &FilledRegion) -> f64 {
    y.grid()
        .mass_weights()
        .iter()
        .zip(y.values())
        .enumerate()
        .filter(|(k, _)| region.contains(*k))
        .map(|(_, (w, v))| w * v * v)
        .sum::<f64>()
        .sqrt()
}

pub fn unreachability_bound(target: &StateField, region: &FilledRegion, band: f64) -> Result<Unreachability> {
    if !target.grid().same_shape(region.grid()) {
        return Err(Error::param("target and region live on different grids"));
    }
    Ok(Unreachability {
        bound: mass_outside(target, region),
        banded_bound: mass_outside(target, &region.dilated(band)),
        band,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservabilityVerdict {
    /// `‖O^T y‖` over `Γ × [δ, T]`.
    pub trace_norm: f64,
    pub y_norm: f64,
    /// Mass of `y` in `Ω^{T−δ}` eroded by the band.
    pub inner_mass: f64,
    pub band: f64,
    /// Trace above `tol ‖y‖`.
    pub observable: bool,
    /// Support assertion, made only when the trace is below tolerance.
    pub support_check: Option<bool>,
    pub pass: bool,
}

/// Tests the implication "trace vanishes on `Γ×[δ,T]` ⇒ `y` vanishes in
/// `Ω^{T−δ}`". The support check uses the coupled tolerance
/// `10 tol ‖y‖` and the smearing band `2h + 2Δt`.
pub fn observability_test(
    y: &StateField,
    time: TimeGrid,
    delta: f64,
    tol: f64,
    basis: &SpectralBasis,
    dist: &DistanceField,
) -> Result<ObservabilityVerdict> {
    let big_t = time.horizon();
    if !(delta > 0.0 && delta < big_t) {
        return Err(Error::param(format!("delta must lie in (0, T) = (0, {big_t}), got {delta}")));
    }
    let sys = WaveSystem::new(basis, time);
    let trace = sys.observe(y)?;
    let trace_norm = trace.f_norm_after(delta);
    let y_norm = y.h_norm();
    let band = 2.0 * dist.h + 2.0 * time.dt();
    let inner = filled_subdomain(dist, big_t - delta)?.eroded(band);
    let inner_mass = mass_inside(y, &inner);
    let observable = trace_norm > tol * y_norm;
    let support_check = if observable || y_norm == 0.0 {
        None
    } else {
        Some(inner_mass <= 10.0 * tol * y_norm)
    };
    Ok(ObservabilityVerdict {
        trace_norm,
        y_norm,
        inner_mass,
        band,
        observable,
        support_check,
        pass: support_check.unwrap_or(true),
    })
}

/// Synthesis with the plainly smoothed class in the grid `H¹` norm.
pub fn h1_star_experiment(
    problem: &SynthesisProblem,
    basis: &SpectralBasis,
    start: Option<&BoundarySignal>,
) -> Result<SynthesisResult> {
    let p = problem.clone().class(ControlClass::Smooth).norm(NormKind::H1);
    synthesize_control_from(&p, basis, start)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualCurve {
    pub alphas: Vec<f64>,
    pub final_residuals: Vec<f64>,
    pub relative_residuals: Vec<f64>,
    pub converged: Vec<bool>,
}

impl ResidualCurve {
    /// True when the residual does not grow as `α` decreases, up to `slack`
    /// relative.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.final_residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    /// CSV `alpha,final_residual,relative_residual`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "final_residual", "relative_residual"])?;
        for ((a, r), q) in self.alphas.iter().zip(&self.final_residuals).zip(&self.relative_residuals) {
            w.write_record([a.to_string(), r.to_string(), q.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Final residual for each `α` of a strictly decreasing positive schedule.
/// Runs are independent and merged in schedule order.
pub fn residual_curve(problem: &SynthesisProblem, alphas: &[f64], basis: &SpectralBasis) -> Result<ResidualCurve> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0)) || alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("alpha schedule must be positive and strictly decreasing"));
    }
    let runs: Vec<SynthesisResult> = alphas
        .par_iter()
        .map(|&a| synthesize_control(&problem.clone().alpha(a), basis))
        .collect::<Result<_>>()?;
    Ok(ResidualCurve {
        alphas: alphas.to_vec(),
        final_residuals: runs.iter().map(|r| r.final_residual).collect(),
        relative_residuals: runs.iter().map(|r| r.relative_residual).collect(),
        converged: runs.iter().map(|r| r.converged).collect(),
    })
}

/// Delays a control on `[0, T₁]` to end at `T₂` on a grid with the same
/// `Δt`, so that `W^{T₂}` of the result equals `W^{T₁}` of the input. The
/// sample at the joint is halved to keep the trapezoid weight.
pub fn embed_later(p: &BoundarySignal, later: TimeGrid) -> Result<BoundarySignal> {
    let early = p.time();
    let shift = later.steps().checked_sub(early.steps()).ok_or_else(|| Error::param("target horizon is shorter"))?;
    if (early.dt() - later.dt()).abs() > 1e-12 * later.dt() {
        return Err(Error::param("embedding needs the same time step on both grids"));
    }
    let nb = p.n_boundary();
    let mut out = vec![0.0; later.len() * nb];
    for i in 0..early.len() {
        let scale = if i == 0 && shift > 0 { 0.5 } else { 1.0 };
        for g in 0..nb {
            out[(i + shift) * nb + g] = scale * p.get(i, g);
        }
    }
    Ok(BoundarySignal::from_parts(later, p.boundary_weights().to_vec(), out))
}

/// Rewrites an antisymmetric pre-control as a plain pre-control producing
/// the same smoothed control (the reflected kernel becomes a negated copy
/// past `T`).
pub fn embed_antisymmetric_into_plain(
    p: &BoundarySignal,
    anti: &ControlSmoother,
    plain: &ControlSmoother,
) -> Result<BoundarySignal> {
    if anti.kind() != SmoothingKind::Antisymmetric || plain.kind() != SmoothingKind::Plain {
        return Err(Error::param("expected an antisymmetric and a plain smoother"));
    }
    if anti.out_grid() != plain.out_grid() || anti.epsilon() != plain.epsilon() || anti.delta() != plain.delta() {
        return Err(Error::param("smoothers must share grid, epsilon and delta"));
    }
    let n = anti.out_grid().steps();
    let pre = *plain.pre_grid();
    let nb = p.n_boundary();
    let mut out = vec![0.0; pre.len() * nb];
    for j in 0..n {
        if !anti.is_active(j) {
            continue;
        }
        for g in 0..nb {
            out[j * nb + g] += p.get(j, g);
            let r = 2 * n - j;
            if r < pre.len() {
                out[r * nb + g] -= p.get(j, g);
            }
        }
    }
    Ok(BoundarySignal::from_parts(pre, p.boundary_weights().to_vec(), out))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassMonotonicity {
    pub smooth_vanishing_at_t: f64,
    pub smooth: f64,
    pub all_of_f: f64,
}

impl ClassMonotonicity {
    pub fn holds(&self, tol: f64) -> bool {
        self.smooth <= self.smooth_vanishing_at_t + tol && self.all_of_f <= self.smooth + tol
    }
}

/// Final residuals for the three classes at `α = 0`, each run warm-started
/// from the optimum of the next smaller class.
pub fn class_monotonicity(problem: &SynthesisProblem, basis: &SpectralBasis) -> Result<ClassMonotonicity> {
    let base = problem.clone().alpha(0.0);
    let m0 = synthesize_control(&base.clone().class(ControlClass::SmoothVanishingAtT), basis)?;
    let anti = ControlSmoother::new(SmoothingKind::Antisymmetric, base.time, base.epsilon, base.delta)?;
    let plain = ControlSmoother::new(SmoothingKind::Plain, base.time, base.epsilon, base.delta)?;
    let q = embed_antisymmetric_into_plain(&m0.pre_control, &anti, &plain)?;
    let smooth = synthesize_control_from(&base.clone().class(ControlClass::Smooth), basis, Some(&q))?;
    let f = plain.apply(&smooth.pre_control);
    let all = synthesize_control_from(&base.class(ControlClass::AllOfF), basis, Some(&f))?;
    Ok(ClassMonotonicity {
        smooth_vanishing_at_t: m0.final_residual,
        smooth: smooth.final_residual,
        all_of_f: all.final_residual,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HorizonMonotonicity {
    pub short: f64,
    pub long: f64,
}

/// Final residuals over all of `F^T` at two horizons sharing `Δt`; the long
/// run starts from the delayed short optimum.
pub fn horizon_monotonicity(
    problem: &SynthesisProblem,
    long: TimeGrid,
    basis: &SpectralBasis,
) -> Result<HorizonMonotonicity> {
    let short = problem.clone().alpha(0.0).class(ControlClass::AllOfF);
    let r1 = synthesize_control(&short, basis)?;
    let start = embed_later(&r1.pre_control, long)?;
    let mut lp = short.clone();
    lp.time = long;
    let r2 = synthesize_control_from(&lp, basis, Some(&start))?;
    Ok(HorizonMonotonicity {
        short: r1.final_residual,
        long: r2.final_residual,
    })
}
