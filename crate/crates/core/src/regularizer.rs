//! Mollifier `φ_ε`, the modal multipliers `β_k^ε`, the state regularizer
//! `R_ε` and the time smoothing of boundary controls.
//!
//! `φ(t) = c exp(−1/(1−t²))` on `(−1, 1)`, `φ_ε(t) = φ(t/ε)/ε` and
//! `β(ε, λ) = ∫ φ(t) cos(ε√λ t) dt`. The multiplier is evaluated as
//! `1 − 2∫ φ(t) sin²(ε√λ t/2) dt`, which keeps `β ≤ 1` and
//! `1 − β ≤ ε²λ m₂/2` exact under a positive-weight quadrature.

use std::collections::HashMap;
use std::io;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;
use crate::waveop::{BoundaryControl, BoundarySignal, FieldRole, StateField, TimeGrid};

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature of `f` on `[a, b]` to the
/// absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        if err <= t || depth >= 40 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * t, depth + 1));
            stack.push((lo, mid, 0.5 * t, depth + 1));
        }
    }
    total
}

const QUAD_TOL: f64 = 1e-12;

fn raw_bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

fn constants() -> &'static (f64, f64) {
    static C: OnceLock<(f64, f64)> = OnceLock::new();
    C.get_or_init(|| {
        let mass = 2.0 * integrate(raw_bump, 0.0, 1.0, 1e-15);
        let c = 1.0 / mass;
        let m2 = 2.0 * c * integrate(|t| t * t * raw_bump(t), 0.0, 1.0, 1e-15);
        (c, m2)
    })
}

/// Scaled bump `φ_ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierKernel {
    epsilon: f64,
}

impl MollifierKernel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(MollifierKernel { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Normalization `c` with `∫ φ = 1`.
    pub fn normalization() -> f64 {
        constants().0
    }

    /// `m₂ = ∫ t² φ(t) dt`.
    pub fn second_moment() -> f64 {
        constants().1
    }

    /// Unscaled profile `φ(t)`.
    pub fn profile(t: f64) -> f64 {
        Self::normalization() * raw_bump(t)
    }

    /// `φ_ε(t) = φ(t/ε)/ε`.
    pub fn eval(&self, t: f64) -> f64 {
        Self::profile(t / self.epsilon) / self.epsilon
    }

    pub fn beta(&self, lambda: f64) -> f64 {
        beta(self.epsilon, lambda)
    }
}

type BetaKey = (u64, u64);

fn cache() -> &'static RwLock<HashMap<BetaKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<BetaKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `β(ε, λ) = ∫_{−1}^{1} φ(t) cos(ε√λ t) dt`, cached per `(ε, λ)`.
///
/// # Panics
/// If `ε ≤ 0` or `λ ≤ 0`.
pub fn beta(epsilon: f64, lambda: f64) -> f64 {
    assert!(epsilon > 0.0 && lambda > 0.0, "beta needs epsilon > 0 and lambda > 0");
    let key = (epsilon.to_bits(), lambda.to_bits());
    if let Some(v) = cache().read().ok().and_then(|m| m.get(&key).copied()) {
        return v;
    }
    let w = epsilon * lambda.sqrt();
    let c = MollifierKernel::normalization();
    let half = integrate(|t| raw_bump(t) * (0.5 * w * t).sin().powi(2), 0.0, 1.0, QUAD_TOL / (4.0 * c));
    let v = 1.0 - 4.0 * c * half;
    if let Ok(mut m) = cache().write() {
        m.entry(key).or_insert(v);
    }
    v
}

/// Multipliers `β_k^ε` of the retained modes.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizerSpectrum {
    pub epsilon: f64,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl RegularizerSpectrum {
    pub fn new(epsilon: f64, lambdas: &[f64]) -> Result<Self> {
        MollifierKernel::new(epsilon)?;
        let betas = lambdas.par_iter().map(|l| beta(epsilon, *l)).collect();
        Ok(RegularizerSpectrum {
            epsilon,
            lambdas: lambdas.to_vec(),
            betas,
        })
    }

    pub fn for_basis(epsilon: f64, basis: &SpectralBasis) -> Result<Self> {
        Self::new(epsilon, basis.lambdas())
    }

    /// CSV `k,lambda,beta`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "lambda", "beta"])?;
        for (k, (l, b)) in self.lambdas.iter().zip(&self.betas).enumerate() {
            w.write_record([(k + 1).to_string(), l.to_string(), b.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// `R_ε y = Σ β_k^ε α_k e_k`.
pub fn regularize_state(y: &StateField, epsilon: f64, basis: &SpectralBasis) -> Result<StateField> {
    let spec = RegularizerSpectrum::for_basis(epsilon, basis)?;
    let alphas = basis.project(y)?.alphas;
    let scaled: Vec<f64> = alphas.iter().zip(&spec.betas).map(|(a, b)| a * b).collect();
    Ok(StateField::new(basis.grid().clone(), basis.synthesize(&scaled), FieldRole::Target))
}

// first time index with t >= delta, robust to rounding of t
fn first_active(delta: f64, dt: f64) -> usize {
    (delta / dt - 1e-9).ceil().max(0.0) as usize
}

/// How a smoother builds `f_ε` from a pre-control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothingKind {
    /// `f_ε(t) = ∫ [φ_ε(t−η) − φ_ε(2T−t−η)] f(η) dη` over `[δ, T]`.
    /// Output vanishes near `t = 0` and is odd about `t = T`.
    Antisymmetric,
    /// `f_ε(t) = ∫ φ_ε(t−η) p(η) dη` over `[δ, T+ε]`. Output vanishes near
    /// `t = 0`, no condition at `t = T`.
    Plain,
}

/// Discrete smoothing operator `S` from a pre-control grid to the control
/// grid, with its adjoint in the `F^T` pairings.
#[derive(Clone, Debug)]
pub struct ControlSmoother {
    kind: SmoothingKind,
    epsilon: f64,
    delta: f64,
    out: TimeGrid,
    pre: TimeGrid,
    // per output time: (pre index, w̃_j K_ij)
    rows: Vec<Vec<(usize, f64)>>,
}

impl ControlSmoother {
    pub fn new(kind: SmoothingKind, out: TimeGrid, epsilon: f64, delta: f64) -> Result<Self> {
        let big_t = out.horizon();
        if !(epsilon > 0.0 && epsilon < delta && delta < big_t) {
            return Err(Error::param(format!(
                "smoothing needs 0 < epsilon < delta < T, got epsilon = {epsilon}, delta = {delta}, T = {big_t}"
            )));
        }
        let kernel = MollifierKernel::new(epsilon)?;
        let dt = out.dt();
        let pre = match kind {
            SmoothingKind::Antisymmetric => out,
            SmoothingKind::Plain => {
                let extra = (epsilon / dt).ceil() as usize + 1;
                TimeGrid::new(big_t + extra as f64 * dt, out.steps() + extra)?
            }
        };
        let pw = pre.weights();
        let first = first_active(delta, dt);
        let rows = (0..out.len())
            .map(|i| {
                let t = out.time(i);
                let mut row = Vec::new();
                for j in first..pre.len() {
                    let eta = pre.time(j);
                    let mut k = kernel.eval(t - eta);
                    if kind == SmoothingKind::Antisymmetric {
                        k -= kernel.eval(2.0 * big_t - t - eta);
                    }
                    if k != 0.0 {
                        row.push((j, pw[j] * k));
                    }
                }
                row
            })
            .collect();
        Ok(ControlSmoother {
            kind,
            epsilon,
            delta,
            out,
            pre,
            rows,
        })
    }

    pub fn kind(&self) -> SmoothingKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Grid of the pre-control.
    pub fn pre_grid(&self) -> &TimeGrid {
        &self.pre
    }

    pub fn out_grid(&self) -> &TimeGrid {
        &self.out
    }

    /// True when pre-control samples at index `j` are free parameters.
    pub fn is_active(&self, j: usize) -> bool {
        j >= first_active(self.delta, self.out.dt())
    }

    /// `S p`.
    pub fn apply(&self, p: &BoundarySignal) -> BoundarySignal {
        let nb = p.n_boundary();
        let mut out = vec![0.0; self.out.len() * nb];
        for (i, row) in self.rows.iter().enumerate() {
            let o = &mut out[i * nb..(i + 1) * nb];
            for &(j, a) in row {
                o.iter_mut().zip(p.row(j)).for_each(|(x, v)| *x += a * v);
            }
        }
        BoundarySignal::from_parts(self.out, p.boundary_weights().to_vec(), out)
    }

    /// `S* g` with `(S p, g)_{F^T} = (p, S* g)` in the pre-grid pairing.
    pub fn adjoint(&self, g: &BoundarySignal) -> BoundarySignal {
        let nb = g.n_boundary();
        let ow = self.out.weights();
        let pw = self.pre.weights();
        let mut out = vec![0.0; self.pre.len() * nb];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                let c = ow[i] * a / pw[j];
                let o = &mut out[j * nb..(j + 1) * nb];
                o.iter_mut().zip(g.row(i)).for_each(|(x, v)| *x += c * v);
            }
        }
        BoundarySignal::from_parts(self.pre, g.boundary_weights().to_vec(), out)
    }

    /// Zeroes the inactive part of a pre-control.
    pub fn mask(&self, p: &mut BoundarySignal) {
        let nb = p.n_boundary();
        let first = first_active(self.delta, self.out.dt()).min(self.pre.len());
        p.samples_mut()[..first * nb].iter_mut().for_each(|v| *v = 0.0);
    }
}

/// `f_ε(·,t) = ∫_0^T [φ_ε(t−η) − φ_ε(2T−t−η)] f(·,η) dη` on the control's
/// time grid. Requires `0 < ε < δ < T` and `f ≡ 0` before `δ`.
pub fn smooth_control(f: &BoundaryControl, epsilon: f64, delta: f64) -> Result<BoundaryControl> {
    let s = ControlSmoother::new(SmoothingKind::Antisymmetric, *f.time(), epsilon, delta)?;
    let time = f.time();
    for i in 0..first_active(delta, time.dt()).min(time.len()) {
        if f.signal.row(i).iter().any(|v| *v != 0.0) {
            return Err(Error::param(format!(
                "control is nonzero at t = {} < delta = {delta}",
                time.time(i)
            )));
        }
    }
    let mut out = BoundaryControl::new(s.apply(&f.signal));
    out.flags.vanishes_near_zero = Some(delta - epsilon);
    out.flags.vanishes_at_t_even_derivatives = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bump_is_a_probability_density() {
        let c = MollifierKernel::normalization();
        let mass = integrate(|t| c * raw_bump(t), -1.0, 1.0, 1e-14);
        assert!((mass - 1.0).abs() < 1e-10);
        assert_eq!(MollifierKernel::profile(1.0), 0.0);
        assert_eq!(MollifierKernel::profile(0.3), MollifierKernel::profile(-0.3));
    }

    #[test]
    fn gauss_kronrod_integrates_oscillation() {
        let v = integrate(|t| (40.0 * t).cos(), 0.0, 1.0, 1e-13);
        assert!((v - 40.0_f64.sin() / 40.0).abs() < 1e-12);
    }

    #[test]
    fn beta_agrees_with_cosine_form() {
        let c = MollifierKernel::normalization();
        for w in [0.5, 3.0, 12.0] {
            let direct = 2.0 * c * integrate(|t| raw_bump(t) * (w * t).cos(), 0.0, 1.0, 1e-14);
            assert!((beta(w, 1.0) - direct).abs() < 1e-11, "w = {w}");
        }
        assert!((beta(1e-8, std::f64::consts::PI.powi(2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_smoothing_vanishes_at_horizon() {
        let grid = Grid::interval(1.0, 9).unwrap();
        let time = TimeGrid::new(1.0, 400).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let f = BoundaryControl::from_fn(&grid, time, |_, _, t| if t >= 0.1 { rng.random_range(-1.0..1.0) } else { 0.0 });
        let fe = smooth_control(&f, 0.05, 0.1).unwrap();
        assert!(fe.signal.row(400).iter().all(|v| v.abs() < 1e-14));
        for i in 0..time.len() {
            if time.time(i) <= 0.05 {
                assert!(fe.signal.row(i).iter().all(|v| *v == 0.0));
            }
        }
        assert!(smooth_control(&f, 0.1, 0.1).is_err());
        let early = BoundaryControl::from_fn(&grid, time, |_, _, _| 1.0);
        assert!(smooth_control(&early, 0.05, 0.1).is_err());
    }

    #[test]
    fn smoother_adjoint_matches() {
        let grid = Grid::interval(1.0, 9).unwrap();
        let out = TimeGrid::new(0.8, 200).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for kind in [SmoothingKind::Antisymmetric, SmoothingKind::Plain] {
            let s = ControlSmoother::new(kind, out, 0.04, 0.08).unwrap();
            let mut p = BoundarySignal::zeros(&grid, *s.pre_grid());
            p.samples_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            s.mask(&mut p);
            let mut g = BoundarySignal::zeros(&grid, out);
            g.samples_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            let lhs = s.apply(&p).f_inner(&g).unwrap();
            let rhs = p.f_inner(&s.adjoint(&g)).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{kind:?}");
        }
    }
}
