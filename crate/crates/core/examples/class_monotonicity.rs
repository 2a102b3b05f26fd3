//! Larger control classes and longer horizons never do worse.

use bclab::control_lab::{class_monotonicity, horizon_monotonicity, targets, SynthesisProblem};
use bclab::geometry::DomainSpec;
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::TimeGrid;

fn main() -> bclab::Result<()> {
    let basis = eigensolve(&DomainSpec::interval(1.0, 513)?, 64, Backend::Auto)?;
    let y = targets::smooth_bump(basis.grid(), 0.2, 0.7);
    let short = SynthesisProblem::new(y, 0.4)?.budget(200);
    let c = class_monotonicity(&short, &basis)?;
    println!(
        "T = 0.4 residuals: smooth vanishing at T {:.4e} >= smooth {:.4e} >= all {:.4e}: {}",
        c.smooth_vanishing_at_t,
        c.smooth,
        c.all_of_f,
        c.holds(1e-9)
    );
    let dt = short.time.dt();
    let long = TimeGrid::new(dt * 1536.0, 1536)?;
    let h = horizon_monotonicity(&short, long, &basis)?;
    println!("T = 0.4 -> {:.2}: {:.4e} -> {:.4e}", long.horizon(), h.short, h.long);
    Ok(())
}
