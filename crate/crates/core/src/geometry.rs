//! Domain description, the Riemannian metric induced by the coefficients,
//! and the travel-time geometry: distance to the boundary `τ`, the filled
//! layers `Ω^T = {τ < T}` and the filling time.
//!
//! Domains are intervals and rectangles sampled on uniform node grids. The
//! outermost grid layer is the boundary `Γ`. The coefficient field `a^{ij}` is
//! stored per node as the symmetric triple `(a11, a12, a22)`; in 1D only `a11`
//! is meaningful.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Uniform tensor grid on `[0, lx]` or `[0, lx] x [0, ly]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    hx: f64,
    hy: f64,
}

/// Side of a rectangle a boundary node sits on; corners have no side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Grid {
    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::param(format!("interval length must be positive, got {length}")));
        }
        if nodes < 4 {
            return Err(Error::param(format!("need at least 4 nodes, got {nodes}")));
        }
        Ok(Grid {
            dim: 1,
            nx: nodes,
            ny: 1,
            lx: length,
            ly: 0.0,
            hx: length / (nodes - 1) as f64,
            hy: 1.0,
        })
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::param(format!("{name} must be positive, got {l}")));
            }
        }
        if nx < 4 || ny < 4 {
            return Err(Error::param(format!("need at least 4 nodes per axis, got {nx} x {ny}")));
        }
        Ok(Grid {
            dim: 2,
            nx,
            ny,
            lx,
            ly,
            hx: lx / (nx - 1) as f64,
            hy: ly / (ny - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn extents(&self) -> (f64, f64) {
        (self.lx, self.ly)
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Largest grid spacing.
    pub fn spacing(&self) -> f64 {
        if self.dim == 1 {
            self.hx
        } else {
            self.hx.max(self.hy)
        }
    }

    /// Measure of one grid cell (`h` in 1D, `hx*hy` in 2D).
    pub fn cell_measure(&self) -> f64 {
        if self.dim == 1 {
            self.hx
        } else {
            self.hx * self.hy
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.ij(idx);
        let y = if self.dim == 1 { 0.0 } else { j as f64 * self.hy };
        (i as f64 * self.hx, y)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        if i == 0 || i == self.nx - 1 {
            return true;
        }
        self.dim == 2 && (j == 0 || j == self.ny - 1)
    }

    /// Boundary node indices in ascending order; the position in this list is
    /// the `gamma_id` used by boundary signals.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    /// Trapezoid weights realizing the `L2(Ω)` inner product on the grid.
    pub fn mass_weights(&self) -> Vec<f64> {
        let w1 = |n: usize, h: f64, k: usize| if k == 0 || k == n - 1 { 0.5 * h } else { h };
        (0..self.len())
            .map(|idx| {
                let (i, j) = self.ij(idx);
                if self.dim == 1 {
                    w1(self.nx, self.hx, i)
                } else {
                    w1(self.nx, self.hx, i) * w1(self.ny, self.hy, j)
                }
            })
            .collect()
    }

    /// Quadrature weights of the boundary measure, aligned with
    /// [`Grid::boundary_nodes`]. Counting measure in 1D, side-wise trapezoid
    /// in 2D (a corner collects half a spacing from each adjacent side).
    pub fn boundary_weights(&self) -> Vec<f64> {
        self.boundary_nodes()
            .into_iter()
            .map(|idx| {
                if self.dim == 1 {
                    return 1.0;
                }
                match self.side(idx) {
                    Some(Side::Left) | Some(Side::Right) => self.hy,
                    Some(Side::Bottom) | Some(Side::Top) => self.hx,
                    None => 0.5 * (self.hx + self.hy),
                }
            })
            .collect()
    }

    /// Side of a boundary node. `None` for interior nodes and 2D corners.
    pub fn side(&self, idx: usize) -> Option<Side> {
        let (i, j) = self.ij(idx);
        let left = i == 0;
        let right = i == self.nx - 1;
        if self.dim == 1 {
            return if left {
                Some(Side::Left)
            } else if right {
                Some(Side::Right)
            } else {
                None
            };
        }
        let bottom = j == 0;
        let top = j == self.ny - 1;
        match (left || right, bottom || top) {
            (true, true) | (false, false) => None,
            (true, false) => Some(if left { Side::Left } else { Side::Right }),
            (false, true) => Some(if bottom { Side::Bottom } else { Side::Top }),
        }
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Closed-form coefficient fields.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientPreset {
    Constant { a11: f64, a12: f64, a22: f64 },
    /// `a^{ij} = (base + amplitude * b(|x - center| / radius)) δ^{ij}` with the
    /// smooth bump `b(s) = exp(1 - 1/(1 - s²))` (peak value 1 at the centre).
    RadialBump {
        base: f64,
        amplitude: f64,
        center: (f64, f64),
        radius: f64,
    },
}

impl CoefficientPreset {
    pub fn identity() -> Self {
        CoefficientPreset::Constant {
            a11: 1.0,
            a12: 0.0,
            a22: 1.0,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 3] {
        match *self {
            CoefficientPreset::Constant { a11, a12, a22 } => [a11, a12, a22],
            CoefficientPreset::RadialBump {
                base,
                amplitude,
                center,
                radius,
            } => {
                let r = ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt() / radius;
                let b = if r < 1.0 { (1.0 - 1.0 / (1.0 - r * r)).exp() } else { 0.0 };
                let a = base + amplitude * b;
                [a, 0.0, a]
            }
        }
    }
}

/// Domain, coefficients and optional potential, validated on construction.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    grid: Grid,
    coeffs: Vec<[f64; 3]>,
    potential: Option<Vec<f64>>,
    mu: f64,
}

fn min_max_eig(c: [f64; 3], dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (c[0], c[0]);
    }
    let m = 0.5 * (c[0] + c[2]);
    let r = (0.25 * (c[0] - c[2]).powi(2) + c[1] * c[1]).sqrt();
    (m - r, m + r)
}

impl DomainSpec {
    pub fn new(grid: Grid, coeffs: Vec<[f64; 3]>, potential: Option<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        let coeffs: Vec<[f64; 3]> = if grid.dim() == 1 {
            coeffs.into_iter().map(|c| [c[0], 0.0, 0.0]).collect()
        } else {
            coeffs
        };
        let mut mu = f64::INFINITY;
        for (idx, c) in coeffs.iter().enumerate() {
            let (lo, _) = min_max_eig(*c, grid.dim());
            if !(lo > 0.0) || c.iter().any(|v| !v.is_finite()) {
                let (i, j) = grid.ij(idx);
                let (x, y) = grid.coords(idx);
                return Err(Error::NotPositiveDefinite {
                    i,
                    j,
                    x,
                    y,
                    min_eig: lo,
                });
            }
            mu = mu.min(lo);
        }
        if let Some(q) = &potential {
            if q.len() != grid.len() {
                return Err(Error::GridMismatch {
                    expected: grid.len(),
                    got: q.len(),
                });
            }
            if let Some(bad) = q.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::param(format!(
                    "potential must be finite and non-negative, node {bad} has {}",
                    q[bad]
                )));
            }
        }
        Ok(DomainSpec {
            grid,
            coeffs,
            potential,
            mu,
        })
    }

    /// `(0, length)` with `a = 1`, `q = 0`.
    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        let grid = Grid::interval(length, nodes)?;
        Self::from_preset(grid, &CoefficientPreset::identity(), None)
    }

    /// `(0, lx) x (0, ly)` with `a = I`, `q = 0`.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        let grid = Grid::rectangle(lx, ly, nx, ny)?;
        Self::from_preset(grid, &CoefficientPreset::identity(), None)
    }

    pub fn from_preset(grid: Grid, preset: &CoefficientPreset, potential: Option<f64>) -> Result<Self> {
        Self::from_fn(grid, |x, y| preset.eval(x, y), potential.map(|q| move |_: f64, _: f64| q))
    }

    pub fn from_fn<F, Q>(grid: Grid, coeff: F, potential: Option<Q>) -> Result<Self>
    where
        F: Fn(f64, f64) -> [f64; 3],
        Q: Fn(f64, f64) -> f64,
    {
        let nodes: Vec<(f64, f64)> = (0..grid.len()).map(|k| grid.coords(k)).collect();
        let coeffs = nodes.iter().map(|&(x, y)| coeff(x, y)).collect();
        let q = potential.map(|q| nodes.iter().map(|&(x, y)| q(x, y)).collect());
        Self::new(grid, coeffs, q)
    }

    /// Reads a coefficient table with header `i,j,a11,a12,a22[,q]`, one row
    /// per node.
    pub fn from_table(grid: Grid, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_table_reader(grid, file)
    }

    pub fn from_table_reader<R: io::Read>(grid: Grid, reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            i: usize,
            j: usize,
            a11: f64,
            a12: f64,
            a22: f64,
            q: Option<f64>,
        }
        let mut coeffs: Vec<Option<[f64; 3]>> = vec![None; grid.len()];
        let mut q: Vec<Option<f64>> = vec![None; grid.len()];
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.i >= grid.nx() || row.j >= grid.ny() {
                return Err(Error::param(format!("table node ({}, {}) outside the grid", row.i, row.j)));
            }
            let idx = grid.index(row.i, row.j);
            if coeffs[idx].replace([row.a11, row.a12, row.a22]).is_some() {
                return Err(Error::param(format!("table node ({}, {}) listed twice", row.i, row.j)));
            }
            q[idx] = row.q;
        }
        let coeffs = coeffs
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                c.ok_or_else(|| {
                    let (i, j) = grid.ij(k);
                    Error::param(format!("table is missing node ({i}, {j})"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let potential = match q.iter().filter(|v| v.is_some()).count() {
            0 => None,
            n if n == q.len() => Some(q.into_iter().map(|v| v.unwrap_or(0.0)).collect()),
            _ => return Err(Error::param("potential column must be given for all nodes or none")),
        };
        Self::new(grid, coeffs, potential)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[[f64; 3]] {
        &self.coeffs
    }

    pub fn coefficient(&self, idx: usize) -> [f64; 3] {
        self.coeffs[idx]
    }

    pub fn potential(&self, idx: usize) -> f64 {
        self.potential.as_ref().map_or(0.0, |q| q[idx])
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    /// Ellipticity constant: smallest eigenvalue of `a^{ij}` over all nodes.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Largest eigenvalue of `a^{ij}` over all nodes (squared maximal speed).
    pub fn max_speed_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| min_max_eig(*c, self.grid.dim()).1)
            .fold(0.0, f64::max)
    }

    /// Metric tensor `a_{ij} = (a^{ij})^{-1}` at a node, as `(g11, g12, g22)`.
    pub fn metric(&self, idx: usize) -> [f64; 3] {
        let [a11, a12, a22] = self.coeffs[idx];
        if self.grid.dim() == 1 {
            return [1.0 / a11, 0.0, 0.0];
        }
        let det = a11 * a22 - a12 * a12;
        [a22 / det, -a12 / det, a11 / det]
    }

    /// True when coefficients and potential are the same at every node.
    pub fn is_constant(&self) -> bool {
        let c0 = self.coeffs[0];
        let q0 = self.potential(0);
        self.coeffs.iter().all(|c| *c == c0) && (0..self.grid.len()).all(|k| self.potential(k) == q0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.coeffs.iter().all(|c| c[1] == 0.0)
    }

    /// Same domain with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| [c[0] * factor, c[1] * factor, c[2] * factor])
            .collect();
        Self::new(self.grid.clone(), coeffs, self.potential.clone())
    }
}

/// Travel time to the boundary, `τ(x) = dist_A(x, Γ)`, sampled on the grid.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub tau: Vec<f64>,
    pub h: f64,
    grid: Grid,
}

impl DistanceField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.tau[self.grid.index(i, j)]
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "x", "y", "tau"])?;
        for (idx, t) in self.tau.iter().enumerate() {
            let (i, j) = self.grid.ij(idx);
            let (x, y) = self.grid.coords(idx);
            w.write_record([i.to_string(), j.to_string(), x.to_string(), y.to_string(), t.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Node set `Ω^T = {τ < T}` together with its frontier band `|τ - T| <= h`.
#[derive(Clone, Debug)]
pub struct FilledRegion {
    pub horizon: f64,
    pub indicator: Vec<bool>,
    pub frontier: Vec<usize>,
    tau: Vec<f64>,
    h: f64,
    grid: Grid,
}

impl FilledRegion {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.indicator[idx]
    }

    /// Region for the horizon enlarged by `band` (same distance field).
    pub fn dilated(&self, band: f64) -> FilledRegion {
        threshold(&self.tau, self.h, &self.grid, self.horizon + band)
    }

    /// Region for the horizon reduced by `band`; empty when the reduced
    /// horizon is non-positive.
    pub fn eroded(&self, band: f64) -> FilledRegion {
        threshold(&self.tau, self.h, &self.grid, self.horizon - band)
    }

    pub fn covers_interior(&self) -> bool {
        (0..self.grid.len()).all(|k| self.grid.is_boundary(k) || self.indicator[k])
    }

    pub fn is_subset_of(&self, other: &FilledRegion) -> bool {
        self.indicator.iter().zip(&other.indicator).all(|(a, b)| !a || *b)
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|b| **b).count()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "x", "y", "inside"])?;
        for (idx, inside) in self.indicator.iter().enumerate() {
            let (i, j) = self.grid.ij(idx);
            let (x, y) = self.grid.coords(idx);
            w.write_record([
                i.to_string(),
                j.to_string(),
                x.to_string(),
                y.to_string(),
                u8::from(*inside).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn threshold(tau: &[f64], h: f64, grid: &Grid, horizon: f64) -> FilledRegion {
    let indicator = tau.iter().map(|t| *t < horizon).collect();
    let frontier = tau
        .iter()
        .enumerate()
        .filter(|(_, t)| (**t - horizon).abs() <= h)
        .map(|(k, _)| k)
        .collect();
    FilledRegion {
        horizon,
        indicator,
        frontier,
        tau: tau.to_vec(),
        h,
        grid: grid.clone(),
    }
}

/// Solves `|∇τ|_a = 1`, `τ|_Γ = 0`.
///
/// 1D uses the closed form `τ(x) = min(∫_0^x a^{-1/2}, ∫_x^L a^{-1/2})`
/// (trapezoid integral for variable coefficients). 2D uses first-order fast
/// marching with the 8-neighbour simplex update measured in the metric `a_{ij}`.
pub fn eikonal_distance(domain: &DomainSpec) -> Result<DistanceField> {
    let grid = domain.grid().clone();
    // Revalidate: a DomainSpec can only be built valid, but the error contract
    // names the node, so surface it here as well.
    let domain = DomainSpec::new(grid.clone(), domain.coeffs.clone(), domain.potential.clone())?;
    let tau = if grid.dim() == 1 {
        eikonal_1d(&domain)
    } else {
        fast_marching(&domain)
    };
    Ok(DistanceField {
        tau,
        h: grid.spacing(),
        grid,
    })
}

fn eikonal_1d(domain: &DomainSpec) -> Vec<f64> {
    let grid = domain.grid();
    let n = grid.nx();
    let (length, _) = grid.extents();
    if domain.is_constant() {
        let c = domain.coefficient(0)[0].sqrt();
        return (0..n)
            .map(|i| {
                let x = grid.coords(i).0;
                x.min(length - x) / c
            })
            .collect();
    }
    let slowness: Vec<f64> = (0..n).map(|i| 1.0 / domain.coefficient(i)[0].sqrt()).collect();
    let h = grid.hx();
    let mut from_left = vec![0.0; n];
    for i in 1..n {
        from_left[i] = from_left[i - 1] + 0.5 * h * (slowness[i - 1] + slowness[i]);
    }
    let mut from_right = vec![0.0; n];
    for i in (0..n - 1).rev() {
        from_right[i] = from_right[i + 1] + 0.5 * h * (slowness[i] + slowness[i + 1]);
    }
    from_left.iter().zip(&from_right).map(|(a, b)| a.min(*b)).collect()
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on the value, ties by node index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const RING: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn fast_marching(domain: &DomainSpec) -> Vec<f64> {
    let grid = domain.grid();
    let n = grid.len();
    let mut tau = vec![f64::INFINITY; n];
    let mut known = vec![false; n];
    let mut heap = BinaryHeap::new();
    for k in grid.boundary_nodes() {
        tau[k] = 0.0;
        heap.push(HeapEntry(0.0, k));
    }
    while let Some(HeapEntry(t, k)) = heap.pop() {
        if known[k] || t > tau[k] {
            continue;
        }
        known[k] = true;
        let (i, j) = grid.ij(k);
        for (di, dj) in RING {
            let Some(nb) = neighbour(grid, i, j, di, dj) else { continue };
            if known[nb] {
                continue;
            }
            let cand = simplex_update(domain, nb, &tau, &known);
            if cand < tau[nb] {
                tau[nb] = cand;
                heap.push(HeapEntry(cand, nb));
            }
        }
    }
    tau
}

fn neighbour(grid: &Grid, i: usize, j: usize, di: i64, dj: i64) -> Option<usize> {
    let ii = i as i64 + di;
    let jj = j as i64 + dj;
    if ii < 0 || jj < 0 || ii >= grid.nx() as i64 || jj >= grid.ny() as i64 {
        return None;
    }
    Some(grid.index(ii as usize, jj as usize))
}

fn simplex_update(domain: &DomainSpec, k: usize, tau: &[f64], known: &[bool]) -> f64 {
    let grid = domain.grid();
    let (i, j) = grid.ij(k);
    let g = domain.metric(k);
    let quad = |u: (f64, f64), v: (f64, f64)| g[0] * u.0 * v.0 + g[1] * (u.0 * v.1 + u.1 * v.0) + g[2] * u.1 * v.1;
    let disp = |(di, dj): (i64, i64)| (di as f64 * grid.hx(), dj as f64 * grid.hy());

    let mut best = f64::INFINITY;
    let mut known_at = [None; 8];
    for (m, &d) in RING.iter().enumerate() {
        if let Some(nb) = neighbour(grid, i, j, d.0, d.1) {
            if known[nb] {
                known_at[m] = Some(tau[nb]);
                let v = disp(d);
                best = best.min(tau[nb] + quad(v, v).sqrt());
            }
        }
    }
    for m in 0..8 {
        let (Some(ta), Some(tb)) = (known_at[m], known_at[(m + 1) % 8]) else { continue };
        let da = disp(RING[m]);
        let db = disp(RING[(m + 1) % 8]);
        let w = (db.0 - da.0, db.1 - da.1);
        let a = quad(w, w);
        let b = quad(da, w);
        let c = quad(da, da);
        let delta = tb - ta;
        let gap = a - delta * delta;
        if gap <= 0.0 {
            continue;
        }
        // stationary points of θ ↦ ta + θ δ + sqrt(aθ² + 2bθ + c)
        let disc = b * b / (a * a) - (b * b - delta * delta * c) / (a * gap);
        if disc < 0.0 {
            continue;
        }
        for theta in [-b / a + disc.sqrt(), -b / a - disc.sqrt()] {
            if theta > 0.0 && theta < 1.0 {
                let val = ta + theta * delta + (a * theta * theta + 2.0 * b * theta + c).max(0.0).sqrt();
                best = best.min(val);
            }
        }
    }
    best
}

/// Thresholds `τ` at the horizon `T`.
pub fn filled_subdomain(dist: &DistanceField, horizon: f64) -> Result<FilledRegion> {
    if !(horizon > 0.0) {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    Ok(threshold(&dist.tau, dist.h, &dist.grid, horizon))
}

/// `T_fill = max τ`.
pub fn filling_time(dist: &DistanceField) -> f64 {
    dist.tau.iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize, a: f64) -> DomainSpec {
        let grid = Grid::rectangle(1.0, 1.0, n, n).unwrap();
        DomainSpec::from_preset(
            grid,
            &CoefficientPreset::Constant {
                a11: a,
                a12: 0.0,
                a22: a,
            },
            None,
        )
        .unwrap()
    }

    #[test]
    fn interval_closed_form() {
        let d = DomainSpec::interval(1.0, 513).unwrap();
        let dist = eikonal_distance(&d).unwrap();
        let i = (0..513).find(|&i| (d.grid().coords(i).0 - 0.3).abs() < 1e-3).unwrap();
        let x = d.grid().coords(i).0;
        assert_eq!(dist.tau[i], x.min(1.0 - x));
        assert_eq!(filling_time(&dist), 0.5);
    }

    #[test]
    fn square_centre_and_scaling() {
        let h = 1.0 / 128.0;
        let dist = eikonal_distance(&square(129, 1.0)).unwrap();
        assert!((dist.at(64, 64) - 0.5).abs() <= 2.0 * h);
        let dist4 = eikonal_distance(&square(129, 4.0)).unwrap();
        assert!((dist4.at(64, 64) - 0.25).abs() <= 2.0 * h);
        assert!((filling_time(&dist4) - 0.25).abs() <= 2.0 * h);
    }

    #[test]
    fn rejects_indefinite_coefficients() {
        let grid = Grid::rectangle(1.0, 1.0, 8, 8).unwrap();
        let err = DomainSpec::from_fn(
            grid,
            |x, _| if x > 0.5 { [1.0, 2.0, 1.0] } else { [1.0, 0.0, 1.0] },
            None::<fn(f64, f64) -> f64>,
        )
        .unwrap_err();
        match err {
            Error::NotPositiveDefinite { i, min_eig, .. } => {
                assert!(i >= 4);
                assert!(min_eig < 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_positive_horizon_is_rejected() {
        let dist = eikonal_distance(&DomainSpec::interval(1.0, 33).unwrap()).unwrap();
        assert!(filled_subdomain(&dist, 0.0).is_err());
        assert!(filled_subdomain(&dist, -1.0).is_err());
    }

    #[test]
    fn interval_layers() {
        let d = DomainSpec::interval(1.0, 513).unwrap();
        let dist = eikonal_distance(&d).unwrap();
        let r = filled_subdomain(&dist, 0.3).unwrap();
        for k in 0..513 {
            let x = d.grid().coords(k).0;
            assert_eq!(r.contains(k), x < 0.3 || x > 0.7, "x = {x}");
        }
        assert!(filled_subdomain(&dist, 0.6).unwrap().covers_interior());
        assert!(!r.frontier.is_empty());
    }

    #[test]
    fn table_roundtrip_reads_all_nodes() {
        let grid = Grid::rectangle(1.0, 1.0, 4, 4).unwrap();
        let mut text = String::from("i,j,a11,a12,a22,q\n");
        for j in 0..4 {
            for i in 0..4 {
                text.push_str(&format!("{i},{j},2.0,0.5,1.0,0.25\n"));
            }
        }
        let d = DomainSpec::from_table_reader(grid.clone(), text.as_bytes()).unwrap();
        assert_eq!(d.coefficient(5), [2.0, 0.5, 1.0]);
        assert_eq!(d.potential(7), 0.25);
        let missing = "i,j,a11,a12,a22\n0,0,1,0,1\n";
        assert!(DomainSpec::from_table_reader(grid, missing.as_bytes()).is_err());
    }
}
