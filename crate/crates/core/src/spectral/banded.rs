use crate::error::{Error, Result};

/// Cholesky factor `L Lᵀ` of a symmetric positive definite band matrix.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // row i holds L(i, i-bw ..= i), left-padded with zeros
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the matrix given entry-wise by `entry(r, c)` for `|r - c| <= bw`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = entry(i, j);
                for k in klo..j {
                    s -= data[at(i, k)] * data[at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Internal(format!(
                            "matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    data[at(i, i)] = s.sqrt();
                } else {
                    data[at(i, j)] = s / data[at(j, j)];
                }
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.data[at(i, k)] * x[k];
            }
            x[i] = s / self.data[at(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for k in i + 1..=hi {
                s -= self.data[at(k, i)] * x[k];
            }
            x[i] = s / self.data[at(i, i)];
        }
    }
}
