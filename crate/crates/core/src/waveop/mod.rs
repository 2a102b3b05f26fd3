//! Control operator `W^T f = u^f(·,T)` and observation operator
//! `O^T y = ∂_{ν_A} v^y|_{Σ^T}` as an exactly adjoint discrete pair.
//!
//! The dual solution is summed from its modal series
//! `v^y(·,t) = Σ α_k sin(√λ_k (t−T))/√λ_k e_k`. The forward map is defined by
//! transposition, `(W^T f, e_k)_H = (f, O^T e_k)_{F^T}`, with the same
//! boundary and trapezoid weights that define `(·,·)_{F^T}`, so the discrete
//! duality holds up to rounding.

mod leapfrog;
mod signal;

use rayon::prelude::*;

pub use leapfrog::{fd_oracle_forward, support_violation};
pub use signal::{BoundaryControl, BoundarySignal, BoundaryTrace, ClassFlags, FieldRole, StateField, TimeGrid};

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Forward and dual wave maps on a fixed basis and time grid.
#[derive(Debug)]
pub struct WaveSystem<'a> {
    basis: &'a SpectralBasis,
    time: TimeGrid,
    // sin(√λ_k (t_i − T)) / √λ_k
    sines: Vec<Vec<f64>>,
    // weights used inside the transposition; differ from the F^T weights
    // only when deliberately broken
    transposition_weights: Vec<f64>,
}

impl<'a> WaveSystem<'a> {
    pub fn new(basis: &'a SpectralBasis, time: TimeGrid) -> Self {
        let big_t = time.horizon();
        let sines = basis
            .lambdas()
            .par_iter()
            .map(|l| {
                let w = l.sqrt();
                (0..time.len()).map(|i| (w * (time.time(i) - big_t)).sin() / w).collect()
            })
            .collect();
        WaveSystem {
            basis,
            time,
            sines,
            transposition_weights: time.weights(),
        }
    }

    /// Negative-control hook: the transposition uses the rectangle rule
    /// while `(·,·)_{F^T}` keeps the trapezoid rule, so duality fails.
    #[doc(hidden)]
    pub fn with_broken_quadrature(mut self) -> Self {
        let dt = self.time.dt();
        self.transposition_weights.iter_mut().for_each(|w| *w = dt);
        self
    }

    pub fn basis(&self) -> &'a SpectralBasis {
        self.basis
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn zero_control(&self) -> BoundaryControl {
        BoundaryControl::zeros(self.basis.grid(), self.time)
    }

    pub fn zero_signal(&self) -> BoundarySignal {
        BoundarySignal::zeros(self.basis.grid(), self.time)
    }

    fn check_signal(&self, f: &BoundarySignal) -> Result<()> {
        if f.n_boundary() != self.basis.boundary_nodes().len() {
            return Err(Error::GridMismatch {
                expected: self.basis.boundary_nodes().len(),
                got: f.n_boundary(),
            });
        }
        if *f.time() != self.time {
            return Err(Error::param(format!(
                "control time grid (T = {}, {} steps) does not match the system (T = {}, {} steps)",
                f.horizon(),
                f.time().steps(),
                self.time.horizon(),
                self.time.steps()
            )));
        }
        Ok(())
    }

    fn check_state(&self, y: &StateField) -> Result<()> {
        if !self.basis.grid().same_shape(y.grid()) {
            return Err(Error::param("state field is sampled on a different grid than the basis"));
        }
        Ok(())
    }

    /// `(W^T f, e_k)_H = (f, O^T e_k)_{F^T}` for every retained mode.
    pub fn control_to_modal(&self, f: &BoundarySignal) -> Result<Vec<f64>> {
        self.check_signal(f)?;
        Ok(self.control_to_modal_unchecked(f))
    }

    pub(crate) fn control_to_modal_unchecked(&self, f: &BoundarySignal) -> Vec<f64> {
        let bw = self.basis.boundary_weights();
        let tw = &self.transposition_weights;
        (0..self.basis.n_modes())
            .into_par_iter()
            .map(|k| {
                let wtr: Vec<f64> = self.basis.conormal_trace(k).iter().zip(bw).map(|(a, b)| a * b).collect();
                let s = &self.sines[k];
                (0..self.time.len())
                    .map(|i| {
                        let row: f64 = f.row(i).iter().zip(&wtr).map(|(a, b)| a * b).sum();
                        tw[i] * s[i] * row
                    })
                    .sum()
            })
            .collect()
    }

    /// `W^T f` reconstructed on the grid.
    pub fn control_to_state(&self, f: &BoundaryControl) -> Result<StateField> {
        let c = self.control_to_modal(&f.signal)?;
        Ok(StateField::new(self.basis.grid().clone(), self.basis.synthesize(&c), FieldRole::WaveSnapshot))
    }

    /// `O^T y`.
    pub fn observe(&self, y: &StateField) -> Result<BoundaryTrace> {
        self.check_state(y)?;
        Ok(self.observe_modal(&self.basis.project_values(y.values())))
    }

    /// `O^T (Σ α_k e_k)`.
    pub fn observe_modal(&self, alphas: &[f64]) -> BoundaryTrace {
        let nb = self.basis.boundary_nodes().len();
        let nt = self.time.len();
        let active: Vec<usize> = (0..alphas.len().min(self.basis.n_modes())).filter(|&k| alphas[k] != 0.0).collect();
        let rows: Vec<Vec<f64>> = (0..nt)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; nb];
                for &k in &active {
                    let c = alphas[k] * self.sines[k][i];
                    row.iter_mut().zip(self.basis.conormal_trace(k)).for_each(|(r, t)| *r += c * t);
                }
                row
            })
            .collect();
        BoundarySignal::from_parts(self.time, self.basis.boundary_weights().to_vec(), rows.concat())
    }

    /// Dual solution `v^y(·,t)` at the requested times (any real `t`, the
    /// series is defined for all of them).
    pub fn solve_dual(&self, y: &StateField, times: &[f64]) -> Result<Vec<StateField>> {
        self.check_state(y)?;
        let alphas = self.basis.project_values(y.values());
        Ok(times
            .iter()
            .map(|&t| {
                let c: Vec<f64> = alphas
                    .iter()
                    .zip(self.basis.lambdas())
                    .map(|(a, l)| a * (l.sqrt() * (t - self.time.horizon())).sin() / l.sqrt())
                    .collect();
                StateField::new(self.basis.grid().clone(), self.basis.synthesize(&c), FieldRole::WaveSnapshot)
            })
            .collect())
    }

    /// Time derivative `v^y_t(·,t)` from the same series.
    pub fn dual_velocity(&self, y: &StateField, t: f64) -> Result<StateField> {
        self.check_state(y)?;
        let alphas = self.basis.project_values(y.values());
        let c: Vec<f64> = alphas
            .iter()
            .zip(self.basis.lambdas())
            .map(|(a, l)| a * (l.sqrt() * (t - self.time.horizon())).cos())
            .collect();
        Ok(StateField::new(self.basis.grid().clone(), self.basis.synthesize(&c), FieldRole::VelocityPerturbation))
    }

    /// `|(W^T f, y)_H − (f, O^T y)_{F^T}| / (‖f‖ ‖y‖)`, zero when either
    /// input vanishes.
    pub fn verify_duality(&self, f: &BoundaryControl, y: &StateField) -> Result<f64> {
        let wf = self.control_to_state(f)?;
        let oy = self.observe(y)?;
        let lhs = self.basis.h_inner(wf.values(), y.values());
        let rhs = f.signal.f_inner(&oy)?;
        let scale = f.f_norm() * y.h_norm();
        if scale == 0.0 {
            return Ok((lhs - rhs).abs());
        }
        Ok((lhs - rhs).abs() / scale)
    }

    /// State with the boundary values restored:
    /// `P_N W^T f + (I − P_N) ℓ(f(·,T))`, where `ℓ` is the discrete
    /// `A`-harmonic extension. Agrees with `u^f(·,T)` away from `Γ` and
    /// carries the right trace on `Γ`.
    pub fn control_to_state_lifted(&self, f: &BoundaryControl) -> Result<StateField> {
        self.check_signal(&f.signal)?;
        let values = self.lifted_unchecked(&f.signal)?;
        Ok(StateField::new(self.basis.grid().clone(), values, FieldRole::WaveSnapshot))
    }

    pub(crate) fn lifted_unchecked(&self, f: &BoundarySignal) -> Result<Vec<f64>> {
        let chol = self.basis.operator_factor()?;
        let c = self.control_to_modal_unchecked(f);
        let mut u = self.basis.synthesize(&c);
        let ell = self.basis.operator().harmonic_extension(chol, f.row(self.time.steps()));
        let p = self.basis.synthesize(&self.basis.project_values(&ell));
        u.iter_mut().zip(ell.iter().zip(&p)).for_each(|(u, (l, p))| *u += l - p);
        Ok(u)
    }

    /// Transpose of [`Self::lifted_unchecked`]: returns `h` with
    /// `z · lifted(f) = (f, h)_{F^T}` for a nodal dual vector `z`.
    pub(crate) fn lifted_adjoint(&self, z: &[f64]) -> Result<BoundarySignal> {
        let chol = self.basis.operator_factor()?;
        let ez: Vec<f64> = self.basis.modes().iter().map(|e| e.iter().zip(z).map(|(a, b)| a * b).sum()).collect();
        let mut h = self.observe_modal(&ez);
        // (I − M E Eᵀ) z
        let m = self.basis.mass_weights();
        let back = self.basis.synthesize(&ez);
        let zz: Vec<f64> = z.iter().zip(&back).zip(m).map(|((z, b), w)| z - w * b).collect();
        let lt = self.basis.operator().harmonic_extension_adjoint(chol, &zz);
        let last = self.time.steps();
        let wt = self.time.weights()[last];
        let nb = h.n_boundary();
        let bw = self.basis.boundary_weights().to_vec();
        let samples = h.samples_mut();
        for g in 0..nb {
            samples[last * nb + g] += lt[g] / (wt * bw[g]);
        }
        Ok(h)
    }
}
