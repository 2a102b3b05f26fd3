//! Lowest eigenpairs of the assembled operator.
//!
//! Small problems go through a dense symmetric solve. Larger ones build a
//! block Krylov space of `A₀⁻¹` (banded Cholesky solves), keep it
//! orthonormal by repeated Gram–Schmidt and extract Ritz pairs of `A₀` by
//! Rayleigh–Ritz. The block start vectors are random, so eigenspaces of
//! multiplicity up to the block size are resolved.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::operator::EllipticOperator;

/// Problems with at most this many unknowns use the dense solver.
pub const DENSE_LIMIT: usize = 2000;

const BLOCK: usize = 8;
const REL_TOL: f64 = 1e-8;

/// Eigenvalues ascending with unit Euclidean eigenvectors on the unknowns.
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub max_residual: f64,
}

pub fn lowest(op: &EllipticOperator, count: usize, force_krylov: bool) -> Result<EigenPairs> {
    if !force_krylov && op.n_unknowns() <= DENSE_LIMIT {
        dense(op, count)
    } else {
        krylov(op, count)
    }
}

fn residual(op: &EllipticOperator, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    op.apply(v, &mut av);
    av.iter().zip(v).map(|(a, x)| (a - lambda * x).powi(2)).sum::<f64>().sqrt()
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

fn dense(op: &EllipticOperator, count: usize) -> Result<EigenPairs> {
    let eig = SymmetricEigen::new(op.dense());
    let order = sorted_order(eig.eigenvalues.as_slice());
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut max_residual: f64 = 0.0;
    for &k in order.iter().take(count) {
        let lambda = eig.eigenvalues[k];
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        fix_sign(&mut v);
        max_residual = max_residual.max(residual(op, lambda, &v) / lambda.abs());
        values.push(lambda);
        vectors.push(v);
    }
    if max_residual > REL_TOL {
        return Err(Error::EigenNonConvergence { residual: max_residual });
    }
    Ok(EigenPairs {
        values,
        vectors,
        max_residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct KrylovBasis<'a> {
    op: &'a EllipticOperator,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

impl KrylovBasis<'_> {
    /// Orthonormalizes `w` against the basis and appends it. Returns false
    /// when `w` is numerically contained in the span.
    fn push(&mut self, mut w: Vec<f64>) -> bool {
        let norm0 = dot(&w, &w).sqrt();
        if norm0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for q in &self.v {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm < 1e-10 * norm0 {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let mut aw = vec![0.0; w.len()];
        self.op.apply(&w, &mut aw);
        let col: Vec<f64> = self.v.iter().map(|q| dot(q, &aw)).collect();
        for (row, c) in self.h.iter_mut().zip(&col) {
            row.push(*c);
        }
        let mut last = col;
        last.push(dot(&w, &aw));
        self.h.push(last);
        self.v.push(w);
        self.av.push(aw);
        true
    }

    fn ritz(&self, count: usize) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
        let m = self.v.len();
        // symmetrize against rounding in the incremental projection
        let hm = DMatrix::from_fn(m, m, |r, c| 0.5 * (self.h[r][c] + self.h[c][r]));
        let eig = SymmetricEigen::new(hm);
        let order = sorted_order(eig.eigenvalues.as_slice());
        let n = self.v[0].len();
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        let mut worst: f64 = 0.0;
        for &k in order.iter().take(count) {
            let theta = eig.eigenvalues[k];
            let s = eig.eigenvectors.column(k);
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for (i, si) in s.iter().enumerate() {
                x.iter_mut().zip(&self.v[i]).for_each(|(a, b)| *a += si * b);
                ax.iter_mut().zip(&self.av[i]).for_each(|(a, b)| *a += si * b);
            }
            let res = ax.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(res / theta.abs());
            fix_sign(&mut x);
            values.push(theta);
            vectors.push(x);
        }
        (values, vectors, worst)
    }
}

fn krylov(op: &EllipticOperator, count: usize) -> Result<EigenPairs> {
    let n = op.n_unknowns();
    let chol = op.cholesky()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut basis = KrylovBasis {
        op,
        v: Vec::new(),
        av: Vec::new(),
        h: Vec::new(),
    };
    let mut frontier = Vec::new();
    for _ in 0..BLOCK {
        let w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        if basis.push(w) {
            frontier.push(basis.v.len() - 1);
        }
    }
    let max_dim = n.min(20 * count + 200);
    let mut blocks = 0usize;
    let mut worst = f64::INFINITY;
    loop {
        let mut next = Vec::new();
        for &i in &frontier {
            let w = chol.solve(&basis.v[i]);
            if basis.push(w) {
                next.push(basis.v.len() - 1);
            }
        }
        blocks += 1;
        let dim = basis.v.len();
        let exhausted = next.is_empty() || dim >= max_dim;
        if dim >= 2 * count + 2 * BLOCK && (blocks % 4 == 0 || exhausted) {
            let (values, vectors, res) = basis.ritz(count);
            worst = res;
            if res <= REL_TOL {
                return Ok(EigenPairs {
                    values,
                    vectors,
                    max_residual: res,
                });
            }
        }
        if exhausted {
            if dim >= count && dim == n {
                let (values, vectors, res) = basis.ritz(count);
                return Ok(EigenPairs {
                    values,
                    vectors,
                    max_residual: res,
                });
            }
            return Err(Error::EigenNonConvergence { residual: worst });
        }
        frontier = next;
    }
}
