//! Before the waves can reach it, a target in the middle of the interval
//! cannot be approached, whatever the regularization.

use bclab::control_lab::{residual_curve, targets, unreachability_bound, SynthesisProblem};
use bclab::geometry::{eikonal_distance, filled_subdomain, DomainSpec};
use bclab::spectral::{eigensolve, Backend};

fn main() -> bclab::Result<()> {
    let domain = DomainSpec::interval(1.0, 513)?;
    let basis = eigensolve(&domain, 64, Backend::Auto)?;
    let y = targets::centre_bump(basis.grid());
    for big_t in [0.3, 0.75] {
        let region = filled_subdomain(&eikonal_distance(&domain)?, big_t)?;
        let bound = unreachability_bound(&y, &region, 0.0)?;
        let curve = residual_curve(&SynthesisProblem::new(y.clone(), big_t)?, &[1e-2, 1e-4, 1e-6], &basis)?;
        println!("T = {big_t}: lower bound {:.4}, relative residuals {:.3?}", bound.bound / y.h_norm(), curve.relative_residuals);
    }
    Ok(())
}
