use std::io;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::Grid;

/// Uniform grid `t_i = T i / n`, `i = 0..=n`, with trapezoid weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub const DEFAULT_STEPS: usize = 1024;

    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::param(format!("horizon must be positive, got {horizon}")));
        }
        if steps < 2 {
            return Err(Error::param(format!("need at least 2 time steps, got {steps}")));
        }
        Ok(TimeGrid { horizon, steps })
    }

    /// `Δt = T / 1024`.
    pub fn with_default_steps(horizon: f64) -> Result<Self> {
        Self::new(horizon, Self::DEFAULT_STEPS)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.len())
            .map(|i| if i == 0 || i == self.steps { 0.5 * dt } else { dt })
            .collect()
    }
}

/// What a grid function stands for in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRole {
    Target,
    WaveSnapshot,
    VelocityPerturbation,
}

/// Grid function on the closed domain.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    grid: Grid,
    values: Vec<f64>,
    role: FieldRole,
}

impl StateField {
    /// # Panics
    /// If `values` does not have one entry per grid node.
    pub fn new(grid: Grid, values: Vec<f64>, role: FieldRole) -> Self {
        assert_eq!(values.len(), grid.len(), "one value per grid node");
        StateField { grid, values, role }
    }

    pub fn zeros(grid: Grid, role: FieldRole) -> Self {
        let n = grid.len();
        StateField::new(grid, vec![0.0; n], role)
    }

    pub fn from_fn(grid: Grid, role: FieldRole, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        StateField::new(grid, values, role)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn h_inner(&self, other: &StateField) -> Result<f64> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::param("state fields live on different grids"));
        }
        let w = self.grid.mass_weights();
        Ok(w.iter().zip(&self.values).zip(&other.values).map(|((w, a), b)| w * a * b).sum())
    }

    pub fn h_norm(&self) -> f64 {
        let w = self.grid.mass_weights();
        w.iter().zip(&self.values).map(|(w, a)| w * a * a).sum::<f64>().sqrt()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &StateField, b: f64) -> Result<StateField> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::param("state fields live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(StateField::new(self.grid.clone(), values, self.role))
    }

    /// CSV `x,u` in 1D, `x,y,u` in 2D, one row per node.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.grid.dim() == 1 {
            w.write_record(["x", "u"])?;
        } else {
            w.write_record(["x", "y", "u"])?;
        }
        for (k, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.coords(k);
            if self.grid.dim() == 1 {
                w.write_record([x.to_string(), v.to_string()])?;
            } else {
                w.write_record([x.to_string(), y.to_string(), v.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads the layout written by [`StateField::write_csv`]. Rows must come
    /// in node order.
    pub fn read_csv<R: io::Read>(grid: Grid, role: FieldRole, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = headers
            .iter()
            .position(|h| h == "u")
            .ok_or_else(|| Error::param("state CSV needs a `u` column"))?;
        let mut values = Vec::with_capacity(grid.len());
        for rec in rdr.records() {
            let rec = rec?;
            let v: f64 = rec[col]
                .parse()
                .map_err(|_| Error::param(format!("bad number `{}` in state CSV", &rec[col])))?;
            values.push(v);
        }
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(StateField::new(grid, values, role))
    }
}

/// Samples `g(γ, t_i)` on boundary nodes × time grid together with the
/// quadrature weights of `F^T = L2(Σ^T)`. Row-major in time.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySignal {
    time: TimeGrid,
    weights: Vec<f64>,
    samples: Vec<f64>,
}

/// Output of the observation operator.
pub type BoundaryTrace = BoundarySignal;

impl BoundarySignal {
    pub fn zeros(grid: &Grid, time: TimeGrid) -> Self {
        let weights = grid.boundary_weights();
        let samples = vec![0.0; weights.len() * time.len()];
        BoundarySignal { time, weights, samples }
    }

    /// Samples `f(gamma_id, (x, y), t)`.
    pub fn from_fn(grid: &Grid, time: TimeGrid, mut f: impl FnMut(usize, (f64, f64), f64) -> f64) -> Self {
        let mut s = Self::zeros(grid, time);
        let nodes = grid.boundary_nodes();
        let nb = nodes.len();
        for i in 0..time.len() {
            let t = time.time(i);
            for (g, &k) in nodes.iter().enumerate() {
                s.samples[i * nb + g] = f(g, grid.coords(k), t);
            }
        }
        s
    }

    pub(crate) fn from_parts(time: TimeGrid, weights: Vec<f64>, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), weights.len() * time.len());
        BoundarySignal { time, weights, samples }
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn horizon(&self) -> f64 {
        self.time.horizon()
    }

    pub fn n_boundary(&self) -> usize {
        self.weights.len()
    }

    pub fn boundary_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn get(&self, i: usize, g: usize) -> f64 {
        self.samples[i * self.weights.len() + g]
    }

    /// All boundary values at time index `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let nb = self.weights.len();
        &self.samples[i * nb..(i + 1) * nb]
    }

    pub fn same_layout(&self, other: &BoundarySignal) -> bool {
        self.time == other.time && self.weights == other.weights
    }

    fn check_layout(&self, other: &BoundarySignal) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::param("boundary signals use different time grids or boundary layouts"));
        }
        Ok(())
    }

    /// `(f, g)_{F^T}` with boundary × trapezoid weights.
    pub fn f_inner(&self, other: &BoundarySignal) -> Result<f64> {
        self.check_layout(other)?;
        Ok(self.f_inner_unchecked(other))
    }

    pub(crate) fn f_inner_unchecked(&self, other: &BoundarySignal) -> f64 {
        let tw = self.time.weights();
        let nb = self.weights.len();
        let mut total = 0.0;
        for (i, w) in tw.iter().enumerate() {
            let a = &self.samples[i * nb..(i + 1) * nb];
            let b = &other.samples[i * nb..(i + 1) * nb];
            let row: f64 = self.weights.iter().zip(a).zip(b).map(|((g, x), y)| g * x * y).sum();
            total += w * row;
        }
        total
    }

    pub fn f_norm(&self) -> f64 {
        self.f_inner_unchecked(self).sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &BoundarySignal, b: f64) -> Result<Self> {
        self.check_layout(other)?;
        let mut out = self.clone();
        out.samples.iter_mut().zip(&other.samples).for_each(|(x, y)| *x = a * *x + b * y);
        Ok(out)
    }

    /// `F^T`-norm restricted to times `t ≥ from`.
    pub fn f_norm_after(&self, from: f64) -> f64 {
        let tw = self.time.weights();
        let nb = self.weights.len();
        let mut total = 0.0;
        for (i, w) in tw.iter().enumerate() {
            if self.time.time(i) < from {
                continue;
            }
            let row = &self.samples[i * nb..(i + 1) * nb];
            total += w * self.weights.iter().zip(row).map(|(g, x)| g * x * x).sum::<f64>();
        }
        total.sqrt()
    }

    /// CSV `gamma_id,t,g`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["gamma_id", "t", "g"])?;
        let nb = self.weights.len();
        for i in 0..self.time.len() {
            let t = self.time.time(i).to_string();
            for g in 0..nb {
                w.write_record([g.to_string(), t.clone(), self.samples[i * nb + g].to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads `gamma_id,t,g` rows in any order. The time grid is inferred
    /// from the distinct `t` values, which must be uniform and start at 0.
    pub fn read_csv<R: io::Read>(grid: &Grid, reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            gamma_id: usize,
            t: f64,
            g: f64,
        }
        let nb = grid.boundary_nodes().len();
        let mut rows = Vec::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for r in rdr.deserialize() {
            let r: Row = r?;
            if r.gamma_id >= nb {
                return Err(Error::param(format!("gamma_id {} outside 0..{nb}", r.gamma_id)));
            }
            rows.push(r);
        }
        let mut ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        if ts.len() < 3 || ts[0] != 0.0 {
            return Err(Error::param("control time grid must start at 0 and have at least 3 samples"));
        }
        let horizon = *ts.last().unwrap_or(&0.0);
        let time = TimeGrid::new(horizon, ts.len() - 1)?;
        let tol = 1e-9 * time.dt();
        let index_of = |t: f64| -> Result<usize> {
            let i = (t / time.dt()).round() as usize;
            if i < time.len() && (time.time(i) - t).abs() <= tol.max(1e-12 * horizon) {
                Ok(i)
            } else {
                Err(Error::param(format!("time {t} is not on a uniform grid")))
            }
        };
        let mut out = Self::zeros(grid, time);
        let mut seen = vec![false; out.samples.len()];
        for r in rows {
            let slot = index_of(r.t)? * nb + r.gamma_id;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(Error::param(format!("duplicate sample at gamma_id {}, t {}", r.gamma_id, r.t)));
            }
            out.samples[slot] = r.g;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::param("control CSV does not cover every (gamma_id, t) pair"));
        }
        Ok(out)
    }
}

/// Control-class metadata. Solvers accept any `L2` control; these flags
/// describe what an experiment has certified about it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassFlags {
    /// `f ≡ 0` on `[0, t0]` with the recorded `t0 > 0`.
    pub vanishes_near_zero: Option<f64>,
    /// `f` and its even time derivatives vanish at `t = T` (structural
    /// certificate from antisymmetric smoothing).
    pub vanishes_at_t_even_derivatives: bool,
}

/// Boundary control on `Σ^T` with its class flags.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryControl {
    pub signal: BoundarySignal,
    pub flags: ClassFlags,
}

impl BoundaryControl {
    pub fn new(signal: BoundarySignal) -> Self {
        BoundaryControl {
            signal,
            flags: ClassFlags::default(),
        }
    }

    pub fn zeros(grid: &Grid, time: TimeGrid) -> Self {
        Self::new(BoundarySignal::zeros(grid, time))
    }

    pub fn from_fn(grid: &Grid, time: TimeGrid, f: impl FnMut(usize, (f64, f64), f64) -> f64) -> Self {
        Self::new(BoundarySignal::from_fn(grid, time, f))
    }

    /// Records the largest `t0` with `f ≡ 0` on `[0, t0]`, if positive.
    pub fn detect_initial_rest(mut self) -> Self {
        let s = &self.signal;
        let first = (0..s.time.len()).find(|&i| s.row(i).iter().any(|v| *v != 0.0));
        self.flags.vanishes_near_zero = match first {
            None => Some(s.horizon()),
            Some(0) | Some(1) => None,
            Some(i) => Some(s.time.time(i - 1)),
        };
        self
    }

    pub fn time(&self) -> &TimeGrid {
        self.signal.time()
    }

    pub fn horizon(&self) -> f64 {
        self.signal.horizon()
    }

    pub fn f_norm(&self) -> f64 {
        self.signal.f_norm()
    }
}
