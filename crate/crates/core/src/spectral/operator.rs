//! Symmetric finite-difference discretization of `A = -∂_i a^{ij} ∂_j + q`
//! with Dirichlet rows eliminated.
//!
//! The matrix is the Hessian of a discrete energy divided by the cell
//! measure, so it is symmetric by construction:
//!
//! * axis edges carry `a11` / `a22` harmonically averaged between the two
//!   end nodes,
//! * each cell carries the cross term `2 a12 g_x g_y` built from the
//!   cell-averaged gradients, with `a12` averaged over the four corners,
//! * the potential enters as a nodal mass term.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Grid};

use super::banded::BandedCholesky;

#[derive(Clone, Debug)]
pub struct EllipticOperator {
    grid: Grid,
    interior: Vec<usize>,
    unknown_of: Vec<Option<usize>>,
    rows: Vec<Vec<(usize, f64)>>,
    boundary_coupling: Vec<Vec<(usize, f64)>>,
    coeffs: Vec<[f64; 3]>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl EllipticOperator {
    pub fn assemble(domain: &DomainSpec) -> Result<Self> {
        let grid = domain.grid().clone();
        let n = grid.len();
        let mut full: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        let mut add = |r: usize, c: usize, v: f64| *full[r].entry(c).or_insert(0.0) += v;

        let measure = grid.cell_measure();
        if grid.dim() == 1 {
            let h = grid.hx();
            for i in 0..grid.nx() - 1 {
                let a = harmonic(domain.coefficient(i)[0], domain.coefficient(i + 1)[0]);
                let w = a / h;
                add(i, i, w);
                add(i + 1, i + 1, w);
                add(i, i + 1, -w);
                add(i + 1, i, -w);
            }
        } else {
            let (hx, hy) = (grid.hx(), grid.hy());
            for j in 0..grid.ny() {
                for i in 0..grid.nx() {
                    let k = grid.index(i, j);
                    if i + 1 < grid.nx() {
                        let k2 = grid.index(i + 1, j);
                        let w = harmonic(domain.coefficient(k)[0], domain.coefficient(k2)[0]) * hy / hx;
                        add(k, k, w);
                        add(k2, k2, w);
                        add(k, k2, -w);
                        add(k2, k, -w);
                    }
                    if j + 1 < grid.ny() {
                        let k2 = grid.index(i, j + 1);
                        let w = harmonic(domain.coefficient(k)[2], domain.coefficient(k2)[2]) * hx / hy;
                        add(k, k, w);
                        add(k2, k2, w);
                        add(k, k2, -w);
                        add(k2, k, -w);
                    }
                    if i + 1 < grid.nx() && j + 1 < grid.ny() {
                        // corners in order (i,j), (i+1,j), (i,j+1), (i+1,j+1)
                        let c = [k, grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
                        let a12 = c.iter().map(|&m| domain.coefficient(m)[1]).sum::<f64>() / 4.0;
                        if a12 != 0.0 {
                            let gx = [-1.0 / (2.0 * hx), 1.0 / (2.0 * hx), -1.0 / (2.0 * hx), 1.0 / (2.0 * hx)];
                            let gy = [-1.0 / (2.0 * hy), -1.0 / (2.0 * hy), 1.0 / (2.0 * hy), 1.0 / (2.0 * hy)];
                            let scale = a12 * hx * hy;
                            for p in 0..4 {
                                for q in 0..4 {
                                    add(c[p], c[q], scale * (gx[p] * gy[q] + gy[p] * gx[q]));
                                }
                            }
                        }
                    }
                }
            }
        }
        for k in 0..n {
            let q = domain.potential(k);
            if q != 0.0 {
                add(k, k, q * measure);
            }
        }

        let interior = grid.interior_nodes();
        let mut unknown_of = vec![None; n];
        for (u, &k) in interior.iter().enumerate() {
            unknown_of[k] = Some(u);
        }
        let mut rows = Vec::with_capacity(interior.len());
        let mut boundary_coupling = Vec::with_capacity(interior.len());
        for &k in &interior {
            let mut row = Vec::new();
            let mut bc = Vec::new();
            for (&c, &v) in &full[k] {
                if v == 0.0 {
                    continue;
                }
                match unknown_of[c] {
                    Some(u) => row.push((u, v / measure)),
                    None => bc.push((c, v / measure)),
                }
            }
            rows.push(row);
            boundary_coupling.push(bc);
        }
        let op = EllipticOperator {
            grid,
            interior,
            unknown_of,
            rows,
            boundary_coupling,
            coeffs: domain.coefficients().to_vec(),
        };
        op.check_symmetric()?;
        Ok(op)
    }

    fn check_symmetric(&self) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let back = self.rows[c].iter().find(|(cc, _)| *cc == r).map(|e| e.1);
                match back {
                    Some(w) if (w - v).abs() <= 1e-12 * v.abs().max(w.abs()) => {}
                    _ => {
                        return Err(Error::Internal(format!(
                            "assembled operator is not symmetric at ({r}, {c})"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_unknowns(&self) -> usize {
        self.interior.len()
    }

    /// Node index of each unknown.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn unknown_of(&self, node: usize) -> Option<usize> {
        self.unknown_of[node]
    }

    pub fn coefficient(&self, node: usize) -> [f64; 3] {
        self.coeffs[node]
    }

    /// `A₀ u` on the unknowns (homogeneous Dirichlet data).
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            out[r] = row.iter().map(|&(c, v)| v * u[c]).sum();
        }
    }

    /// `A u` at the interior nodes for a full grid function whose boundary
    /// values act as Dirichlet data. Returned on the unknowns.
    pub fn apply_with_boundary(&self, nodes: &[f64], out: &mut [f64]) {
        for (r, (row, bc)) in self.rows.iter().zip(&self.boundary_coupling).enumerate() {
            let inner: f64 = row.iter().map(|&(c, v)| v * nodes[self.interior[c]]).sum();
            let outer: f64 = bc.iter().map(|&(k, v)| v * nodes[k]).sum();
            out[r] = inner + outer;
        }
    }

    /// Gershgorin bound on the spectral radius of `A₀`.
    pub fn gershgorin_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn bandwidth(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.n_unknowns();
        let mut m = DMatrix::zeros(n, n);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let bw = self.bandwidth();
        BandedCholesky::factor(self.n_unknowns(), bw, |r, c| {
            self.rows[r].iter().find(|(cc, _)| *cc == c).map_or(0.0, |e| e.1)
        })
    }

    /// Discrete `A`-harmonic extension of boundary data: solves
    /// `A ℓ = 0` at interior nodes with `ℓ|_Γ = g`. `g` is aligned with
    /// [`Grid::boundary_nodes`].
    pub fn harmonic_extension(&self, chol: &BandedCholesky, g: &[f64]) -> Vec<f64> {
        let mut nodes = vec![0.0; self.grid.len()];
        for (&k, &v) in self.grid.boundary_nodes().iter().zip(g) {
            nodes[k] = v;
        }
        let mut rhs = vec![0.0; self.n_unknowns()];
        self.apply_with_boundary(&nodes, &mut rhs);
        rhs.iter_mut().for_each(|v| *v = -*v);
        let sol = chol.solve(&rhs);
        for (u, &k) in self.interior.iter().enumerate() {
            nodes[k] = sol[u];
        }
        nodes
    }

    /// Transpose of [`Self::harmonic_extension`] as a map from nodal vectors
    /// to boundary vectors (plain Euclidean pairing on both sides).
    pub fn harmonic_extension_adjoint(&self, chol: &BandedCholesky, z: &[f64]) -> Vec<f64> {
        let bnodes = self.grid.boundary_nodes();
        let mut slot = vec![usize::MAX; self.grid.len()];
        for (g, &k) in bnodes.iter().enumerate() {
            slot[k] = g;
        }
        let zi: Vec<f64> = self.interior.iter().map(|&k| z[k]).collect();
        let w = chol.solve(&zi);
        let mut out: Vec<f64> = bnodes.iter().map(|&k| z[k]).collect();
        for (r, bc) in self.boundary_coupling.iter().enumerate() {
            for &(k, v) in bc {
                out[slot[k]] -= v * w[r];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CoefficientPreset;
    use rand::{Rng, SeedableRng};

    fn anisotropic() -> DomainSpec {
        let grid = Grid::rectangle(1.0, 0.8, 9, 7).unwrap();
        DomainSpec::from_fn(
            grid,
            |x, y| [1.0 + x * y, 0.3 * (x - y), 1.5 + 0.5 * x],
            Some(|x: f64, _y: f64| x),
        )
        .unwrap()
    }

    #[test]
    fn operator_is_self_adjoint_on_random_functions() {
        let op = EllipticOperator::assemble(&anisotropic()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = op.n_unknowns();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut au = vec![0.0; n];
        let mut aw = vec![0.0; n];
        op.apply(&u, &mut au);
        op.apply(&w, &mut aw);
        let lhs: f64 = au.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = u.iter().zip(&aw).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn operator_is_positive_definite_with_cross_terms() {
        let op = EllipticOperator::assemble(&anisotropic()).unwrap();
        assert!(op.cholesky().is_ok());
    }

    #[test]
    fn harmonic_extension_is_linear_in_1d() {
        let d = DomainSpec::interval(1.0, 17).unwrap();
        let op = EllipticOperator::assemble(&d).unwrap();
        let chol = op.cholesky().unwrap();
        let l = op.harmonic_extension(&chol, &[1.0, 0.0]);
        for (k, v) in l.iter().enumerate() {
            let x = d.grid().coords(k).0;
            assert!((v - (1.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn extension_adjoint_is_transpose() {
        let d = anisotropic();
        let op = EllipticOperator::assemble(&d).unwrap();
        let chol = op.cholesky().unwrap();
        let nb = d.grid().boundary_nodes().len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g: Vec<f64> = (0..nb).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..d.grid().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = op.harmonic_extension(&chol, &g).iter().zip(&z).map(|(a, b)| a * b).sum();
        let rhs: f64 = op.harmonic_extension_adjoint(&chol, &z).iter().zip(&g).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn constant_potential_shifts_diagonal() {
        let grid = Grid::interval(1.0, 9).unwrap();
        let plain = EllipticOperator::assemble(&DomainSpec::from_preset(grid.clone(), &CoefficientPreset::identity(), None).unwrap()).unwrap();
        let shifted = EllipticOperator::assemble(&DomainSpec::from_preset(grid, &CoefficientPreset::identity(), Some(2.0)).unwrap()).unwrap();
        let (a, b) = (plain.dense(), shifted.dense());
        let diff = &b - &a;
        for r in 0..diff.nrows() {
            for c in 0..diff.ncols() {
                let expect = if r == c { 2.0 } else { 0.0 };
                assert!((diff[(r, c)] - expect).abs() < 1e-9);
            }
        }
    }
}
