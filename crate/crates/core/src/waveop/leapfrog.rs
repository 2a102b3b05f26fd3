use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, FilledRegion};
use crate::spectral::EllipticOperator;

use super::signal::{BoundaryControl, FieldRole, StateField};

/// Explicit leapfrog for `u_tt + A u = 0`, `u|_Γ = f`, zero initial data,
/// with Dirichlet injection of `f` at the boundary nodes. Steps on the
/// control's own time grid and returns `u(·,T)`.
///
/// Refuses to run unless `Δt ≤ h / √max eig(a)` and `Δt² ρ(A_h) ≤ 4`
/// (Gershgorin bound).
pub fn fd_oracle_forward(f: &BoundaryControl, domain: &DomainSpec) -> Result<StateField> {
    let grid = domain.grid();
    let nodes = grid.boundary_nodes();
    if f.signal.n_boundary() != nodes.len() {
        return Err(Error::GridMismatch {
            expected: nodes.len(),
            got: f.signal.n_boundary(),
        });
    }
    let op = EllipticOperator::assemble(domain)?;
    let time = *f.time();
    let dt = time.dt();
    let h = if grid.dim() == 1 { grid.hx() } else { grid.hx().min(grid.hy()) };
    let limit = h / domain.max_speed_sq().sqrt();
    if dt > limit {
        return Err(Error::Cfl(format!("dt = {dt:e} exceeds h/sqrt(max a) = {limit:e}")));
    }
    let rho = op.gershgorin_bound();
    if dt * dt * rho > 4.0 {
        return Err(Error::Cfl(format!(
            "dt^2 * rho(A) = {:.4} exceeds 4 (dt = {dt:e}, rho <= {rho:e})",
            dt * dt * rho
        )));
    }

    let interior = op.interior().to_vec();
    let n = grid.len();
    let inject = |u: &mut [f64], i: usize| {
        for (g, &k) in nodes.iter().enumerate() {
            u[k] = f.signal.get(i, g);
        }
    };
    let mut prev = vec![0.0; n];
    inject(&mut prev, 0);
    let mut au = vec![0.0; op.n_unknowns()];
    op.apply_with_boundary(&prev, &mut au);
    let mut curr = prev.clone();
    for (r, &k) in interior.iter().enumerate() {
        curr[k] = prev[k] - 0.5 * dt * dt * au[r];
    }
    inject(&mut curr, 1);
    let mut next = vec![0.0; n];
    for i in 1..time.steps() {
        op.apply_with_boundary(&curr, &mut au);
        for (r, &k) in interior.iter().enumerate() {
            next[k] = 2.0 * curr[k] - prev[k] - dt * dt * au[r];
        }
        inject(&mut next, i + 1);
        std::mem::swap(&mut prev, &mut curr);
        std::mem::swap(&mut curr, &mut next);
    }
    Ok(StateField::new(grid.clone(), curr, FieldRole::WaveSnapshot))
}

/// Relative `H`-mass of `u` outside `region` dilated by `band`. Zero for
/// `u = 0`.
pub fn support_violation(u: &StateField, region: &FilledRegion, band: f64) -> Result<f64> {
    if !u.grid().same_shape(region.grid()) {
        return Err(Error::param("state field and region live on different grids"));
    }
    let wide = region.dilated(band);
    let w = u.grid().mass_weights();
    let mut outside = 0.0;
    let mut total = 0.0;
    for (k, (v, wk)) in u.values().iter().zip(&w).enumerate() {
        let m = wk * v * v;
        total += m;
        if !wide.contains(k) {
            outside += m;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((outside / total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{eikonal_distance, filled_subdomain};
    use crate::waveop::TimeGrid;

    #[test]
    fn zero_control_gives_zero_state() {
        let d = DomainSpec::interval(1.0, 65).unwrap();
        let f = BoundaryControl::zeros(d.grid(), TimeGrid::new(0.5, 256).unwrap());
        let u = fd_oracle_forward(&f, &d).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cfl_violation_is_refused() {
        let d = DomainSpec::interval(1.0, 513).unwrap();
        let f = BoundaryControl::zeros(d.grid(), TimeGrid::new(1.0, 64).unwrap());
        assert!(matches!(fd_oracle_forward(&f, &d), Err(Error::Cfl(_))));
    }

    #[test]
    fn constant_field_violation_fraction() {
        let d = DomainSpec::interval(1.0, 513).unwrap();
        let dist = eikonal_distance(&d).unwrap();
        let region = filled_subdomain(&dist, 0.3).unwrap();
        let u = StateField::from_fn(d.grid().clone(), FieldRole::WaveSnapshot, |_, _| 1.0);
        let v = support_violation(&u, &region, 0.0).unwrap();
        assert!((v * v - 0.4).abs() < 3.0 / 512.0, "{}", v * v);
        let inside = StateField::from_fn(d.grid().clone(), FieldRole::WaveSnapshot, |x, _| if x < 0.2 { x } else { 0.0 });
        assert_eq!(support_violation(&inside, &region, 0.0).unwrap(), 0.0);
    }
}
