//! A target hidden from the boundary leaves no trace; the first mode does.

use bclab::control_lab::{observability_test, targets};
use bclab::geometry::{eikonal_distance, DomainSpec};
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::TimeGrid;

fn main() -> bclab::Result<()> {
    let domain = DomainSpec::interval(1.0, 513)?;
    let basis = eigensolve(&domain, 64, Backend::Auto)?;
    let dist = eikonal_distance(&domain)?;
    for (name, y, big_t) in [
        ("bump on [0.45, 0.55]", targets::centre_bump(basis.grid()), 0.3),
        ("bump on [0.45, 0.55]", targets::centre_bump(basis.grid()), 0.75),
        ("first mode", targets::mode(&basis, 0), 0.3),
    ] {
        let v = observability_test(&y, TimeGrid::with_default_steps(big_t)?, big_t / 10.0, 1e-3, &basis, &dist)?;
        println!(
            "{name}, T = {big_t}: trace / |y| = {:.3e}, observable = {}, support check = {:?}",
            v.trace_norm / v.y_norm,
            v.observable,
            v.support_check
        );
    }
    Ok(())
}
