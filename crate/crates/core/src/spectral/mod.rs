//! Dirichlet eigenbasis of `A₀`, conormal boundary traces and the modal
//! `D_s` inner products.

mod banded;
mod eigen;
mod operator;

use std::f64::consts::PI;
use std::io;
use std::sync::OnceLock;

use rayon::prelude::*;

pub use banded::BandedCholesky;
pub use eigen::DENSE_LIMIT;
pub use operator::EllipticOperator;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Grid, Side};
use crate::waveop::{FieldRole, StateField};

/// Which eigensolver produced (or should produce) a basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Analytic when coefficients are constant and diagonal, otherwise
    /// finite differences.
    Auto,
    Analytic,
    FiniteDifference,
    /// Finite differences through the Krylov path regardless of size.
    Krylov,
}

/// Truncated eigenbasis `(λ_k, e_k)` of the Dirichlet operator.
///
/// Modes are stored as full grid functions (zero on `Γ`) normalized in the
/// mass-weighted inner product. Conormal traces are aligned with
/// [`Grid::boundary_nodes`].
#[derive(Debug)]
pub struct SpectralBasis {
    grid: Grid,
    backend: Backend,
    lambdas: Vec<f64>,
    modes: Vec<Vec<f64>>,
    traces: Vec<Vec<f64>>,
    boundary_nodes: Vec<usize>,
    boundary_weights: Vec<f64>,
    mass_weights: Vec<f64>,
    operator: EllipticOperator,
    lift: OnceLock<BandedCholesky>,
    max_residual: f64,
}

/// `α_k = (y, e_k)_H` for the retained modes, tagged with the order `s` of
/// the norm they are meant for.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalCoefficients {
    pub alphas: Vec<f64>,
    pub s: f64,
}

impl ModalCoefficients {
    pub fn new(alphas: Vec<f64>) -> Self {
        ModalCoefficients { alphas, s: 0.0 }
    }

    pub fn with_order(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Computes the lowest `n_modes` eigenpairs.
pub fn eigensolve(domain: &DomainSpec, n_modes: usize, backend: Backend) -> Result<SpectralBasis> {
    let grid = domain.grid().clone();
    let operator = EllipticOperator::assemble(domain)?;
    let n_int = operator.n_unknowns();
    if n_modes == 0 || n_modes > n_int {
        return Err(Error::param(format!(
            "n_modes must be in 1..={n_int} (interior node count), got {n_modes}"
        )));
    }
    let analytic_ok = domain.is_constant() && domain.is_diagonal();
    let backend = match backend {
        Backend::Auto if analytic_ok => Backend::Analytic,
        Backend::Auto => Backend::FiniteDifference,
        Backend::Analytic if !analytic_ok => {
            return Err(Error::param("analytic backend needs constant diagonal coefficients and constant potential"))
        }
        b => b,
    };

    let (lambdas, modes, traces, max_residual) = match backend {
        Backend::Analytic => {
            let (l, m, t) = analytic(domain, n_modes);
            (l, m, t, 0.0)
        }
        _ => {
            let pairs = eigen::lowest(&operator, n_modes, backend == Backend::Krylov)?;
            let scale = 1.0 / grid.cell_measure().sqrt();
            let modes: Vec<Vec<f64>> = pairs
                .vectors
                .par_iter()
                .map(|v| {
                    let mut e = vec![0.0; grid.len()];
                    for (u, &k) in operator.interior().iter().enumerate() {
                        e[k] = v[u] * scale;
                    }
                    e
                })
                .collect();
            let traces = modes.par_iter().map(|e| fd_trace(domain, e)).collect();
            (pairs.values, modes, traces, pairs.max_residual)
        }
    };
    if let Some(bad) = lambdas.iter().position(|l| !(*l > 0.0)) {
        return Err(Error::Internal(format!("eigenvalue {bad} is not positive: {}", lambdas[bad])));
    }

    Ok(SpectralBasis {
        boundary_nodes: grid.boundary_nodes(),
        boundary_weights: grid.boundary_weights(),
        mass_weights: grid.mass_weights(),
        grid,
        backend,
        lambdas,
        modes,
        traces,
        operator,
        lift: OnceLock::new(),
        max_residual,
    })
}

type Pairs = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn analytic(domain: &DomainSpec, n_modes: usize) -> Pairs {
    let grid = domain.grid();
    let [a11, _, a22] = domain.coefficient(0);
    let q = domain.potential(0);
    let (lx, ly) = grid.extents();
    let bnodes = grid.boundary_nodes();

    if grid.dim() == 1 {
        let norm = (2.0 / lx).sqrt();
        let mut lambdas = Vec::with_capacity(n_modes);
        let mut modes = Vec::with_capacity(n_modes);
        let mut traces = Vec::with_capacity(n_modes);
        for k in 1..=n_modes {
            let kappa = k as f64 * PI / lx;
            lambdas.push(a11 * kappa * kappa + q);
            let nx = grid.nx();
            let e: Vec<f64> = (0..nx)
                .map(|i| if i == 0 || i == nx - 1 { 0.0 } else { norm * (kappa * grid.coords(i).0).sin() })
                .collect();
            modes.push(e);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            traces.push(vec![-a11 * norm * kappa, a11 * norm * kappa * sign]);
        }
        return (lambdas, modes, traces);
    }

    // candidate index pairs: enough to contain the n lowest
    let (mx, my) = (grid.nx() - 2, grid.ny() - 2);
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for m in 1..=mx.min(n_modes) {
        for n in 1..=my.min(n_modes) {
            let l = a11 * (m as f64 * PI / lx).powi(2) + a22 * (n as f64 * PI / ly).powi(2) + q;
            cands.push((l, m, n));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    cands.truncate(n_modes);
    let norm = 2.0 / (lx * ly).sqrt();
    let built: Vec<(Vec<f64>, Vec<f64>)> = cands
        .par_iter()
        .map(|&(_, m, n)| {
            let (km, kn) = (m as f64 * PI / lx, n as f64 * PI / ly);
            let e = (0..grid.len())
                .map(|k| {
                    if grid.is_boundary(k) {
                        0.0
                    } else {
                        let (x, y) = grid.coords(k);
                        norm * (km * x).sin() * (kn * y).sin()
                    }
                })
                .collect();
            let t = bnodes
                .iter()
                .map(|&k| {
                    let (x, y) = grid.coords(k);
                    match grid.side(k) {
                        Some(Side::Left) => -a11 * norm * km * (kn * y).sin(),
                        Some(Side::Right) => a11 * norm * km * (km * lx).cos() * (kn * y).sin(),
                        Some(Side::Bottom) => -a22 * norm * kn * (km * x).sin(),
                        Some(Side::Top) => a22 * norm * kn * (kn * ly).cos() * (km * x).sin(),
                        None => 0.0,
                    }
                })
                .collect();
            (e, t)
        })
        .collect();
    let (modes, traces) = built.into_iter().unzip();
    (cands.iter().map(|c| c.0).collect(), modes, traces)
}

/// Conormal derivative by second-order one-sided differences. The
/// tangential derivative of a mode vanishes on `Γ`, so only the normal
/// diagonal coefficient contributes.
fn fd_trace(domain: &DomainSpec, e: &[f64]) -> Vec<f64> {
    let grid = domain.grid();
    let one_sided = |e1: f64, e2: f64, h: f64| (4.0 * e1 - e2) / (2.0 * h);
    grid.boundary_nodes()
        .into_iter()
        .map(|k| {
            let (i, j) = grid.ij(k);
            let c = domain.coefficient(k);
            let (hx, hy) = (grid.hx(), grid.hy());
            match grid.side(k) {
                Some(Side::Left) => -c[0] * one_sided(e[grid.index(1, j)], e[grid.index(2, j)], hx),
                Some(Side::Right) => {
                    let n = grid.nx();
                    -c[0] * one_sided(e[grid.index(n - 2, j)], e[grid.index(n - 3, j)], hx)
                }
                Some(Side::Bottom) => -c[2] * one_sided(e[grid.index(i, 1)], e[grid.index(i, 2)], hy),
                Some(Side::Top) => {
                    let n = grid.ny();
                    -c[2] * one_sided(e[grid.index(i, n - 2)], e[grid.index(i, n - 3)], hy)
                }
                None => 0.0,
            }
        })
        .collect()
}

impl SpectralBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Backend actually used (never `Auto`).
    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k]
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    /// `∂_{ν_A} e_k` on the boundary nodes.
    pub fn conormal_trace(&self, k: usize) -> &[f64] {
        &self.traces[k]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass_weights
    }

    pub fn operator(&self) -> &EllipticOperator {
        &self.operator
    }

    /// Largest relative eigen-residual reported by the solver (0 for the
    /// analytic backend).
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Cholesky factor of `A₀`, built on first use.
    pub fn operator_factor(&self) -> Result<&BandedCholesky> {
        if let Some(c) = self.lift.get() {
            return Ok(c);
        }
        let chol = self.operator.cholesky()?;
        Ok(self.lift.get_or_init(|| chol))
    }

    /// Mass-weighted `L2(Ω)` inner product of two grid functions.
    pub fn h_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass_weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    pub fn h_norm(&self, a: &[f64]) -> f64 {
        self.h_inner(a, a).sqrt()
    }

    fn check_grid(&self, y: &StateField) -> Result<()> {
        if !self.grid.same_shape(y.grid()) {
            return Err(Error::param("state field is sampled on a different grid than the basis"));
        }
        Ok(())
    }

    /// `α_k = (y, e_k)_H` by mass-weighted quadrature.
    pub fn project(&self, y: &StateField) -> Result<ModalCoefficients> {
        self.check_grid(y)?;
        Ok(ModalCoefficients::new(self.project_values(y.values())))
    }

    pub(crate) fn project_values(&self, y: &[f64]) -> Vec<f64> {
        self.modes.par_iter().map(|e| self.h_inner(e, y)).collect()
    }

    /// `Σ α_k e_k` on the grid.
    pub fn reconstruct(&self, c: &ModalCoefficients) -> Result<StateField> {
        self.check_len(c)?;
        Ok(StateField::new(self.grid.clone(), self.synthesize(&c.alphas), FieldRole::Target))
    }

    pub(crate) fn synthesize(&self, alphas: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (a, e) in alphas.iter().zip(&self.modes) {
            if *a != 0.0 {
                out.iter_mut().zip(e).for_each(|(o, v)| *o += a * v);
            }
        }
        out
    }

    fn check_len(&self, c: &ModalCoefficients) -> Result<()> {
        if c.len() != self.n_modes() {
            return Err(Error::GridMismatch {
                expected: self.n_modes(),
                got: c.len(),
            });
        }
        Ok(())
    }

    /// `(y, w)_{D_s} = Σ λ_k^s α_k(y) α_k(w)` on the modal span.
    pub fn ds_inner(&self, y: &ModalCoefficients, w: &ModalCoefficients, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::param(format!("order s must be non-negative, got {s}")));
        }
        self.check_len(y)?;
        self.check_len(w)?;
        Ok(self
            .lambdas
            .iter()
            .zip(&y.alphas)
            .zip(&w.alphas)
            .map(|((l, a), b)| l.powf(s) * a * b)
            .sum())
    }

    pub fn ds_norm(&self, y: &ModalCoefficients, s: f64) -> Result<f64> {
        Ok(self.ds_inner(y, y, s)?.sqrt())
    }

    /// `‖y − P_N y‖_H`, the part of `y` the truncation cannot see.
    pub fn tail_norm(&self, y: &StateField) -> Result<f64> {
        let c = self.project(y)?;
        let r: Vec<f64> = self.synthesize(&c.alphas).iter().zip(y.values()).map(|(p, v)| v - p).collect();
        Ok(self.h_norm(&r))
    }

    /// CSV `k,lambda` with `k` starting at 1.
    pub fn write_lambdas_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "lambda"])?;
        for (k, l) in self.lambdas.iter().enumerate() {
            w.write_record([(k + 1).to_string(), l.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// CSV `i,j,x,y,e` of mode `k` (zero based).
    pub fn write_mode_csv<W: io::Write>(&self, k: usize, out: W) -> Result<()> {
        let e = self
            .modes
            .get(k)
            .ok_or_else(|| Error::param(format!("mode {k} out of range")))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "x", "y", "e"])?;
        for (idx, v) in e.iter().enumerate() {
            let (i, j) = self.grid.ij(idx);
            let (x, y) = self.grid.coords(idx);
            w.write_record([i.to_string(), j.to_string(), x.to_string(), y.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
