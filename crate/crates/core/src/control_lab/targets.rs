//! Target states used by the experiments.

use crate::geometry::Grid;
use crate::spectral::SpectralBasis;
use crate::waveop::{FieldRole, StateField};

fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Continuous Kaiser–Bessel window on `[a, b]`, normalized to peak 1 and
/// shifted so it vanishes at the endpoints.
pub fn kaiser_window(x: f64, a: f64, b: f64, shape: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let s = (2.0 * x - a - b) / (b - a);
    (bessel_i0(shape * (1.0 - s * s).sqrt()) - 1.0) / (bessel_i0(shape) - 1.0)
}

/// `exp(1 − 1/(1 − s²))` on `[a, b]`, peak 1 at the midpoint.
pub fn exp_bump(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let s = (2.0 * x - a - b) / (b - a);
    (1.0 - 1.0 / (1.0 - s * s)).exp()
}

fn product(grid: &Grid, f: impl Fn(f64) -> f64) -> StateField {
    let two_d = grid.dim() == 2;
    StateField::from_fn(grid.clone(), FieldRole::Target, |x, y| if two_d { f(x) * f(y) } else { f(x) })
}

/// Kaiser–Bessel (shape 10) bump on `[a, b]` (tensor product in 2D).
pub fn kaiser_bump(grid: &Grid, a: f64, b: f64) -> StateField {
    product(grid, |x| kaiser_window(x, a, b, 10.0))
}

/// Bump on `[0.45, 0.55]`: needs travel time 0.45 to reach the boundary of
/// the unit interval.
pub fn centre_bump(grid: &Grid) -> StateField {
    kaiser_bump(grid, 0.45, 0.55)
}

/// `C^∞` bump on `[a, b]` (tensor product in 2D).
pub fn smooth_bump(grid: &Grid, a: f64, b: f64) -> StateField {
    product(grid, |x| exp_bump(x, a, b))
}

/// `y(x) = 1 − x/L`: boundary value 1 on the left, 0 on the right.
pub fn linear_ramp(grid: &Grid) -> StateField {
    let (l, _) = grid.extents();
    StateField::from_fn(grid.clone(), FieldRole::Target, |x, _| 1.0 - x / l)
}

pub fn constant(grid: &Grid, value: f64) -> StateField {
    StateField::from_fn(grid.clone(), FieldRole::Target, |_, _| value)
}

/// Mode `e_k` (zero based) as a target.
pub fn mode(basis: &SpectralBasis, k: usize) -> StateField {
    StateField::new(basis.grid().clone(), basis.mode(k).to_vec(), FieldRole::Target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kaiser_window_shape() {
        assert_eq!(kaiser_window(0.45, 0.45, 0.55, 10.0), 0.0);
        assert!((kaiser_window(0.5, 0.45, 0.55, 10.0) - 1.0).abs() < 1e-14);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
    }
}
