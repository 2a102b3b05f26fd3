//! `y = 1 − x` has a boundary value, so it is out of reach of the modal
//! span but can be approached in `H¹` once the lift is included.

use bclab::control_lab::{h1_norm, h1_star_experiment, targets, SynthesisProblem};
use bclab::geometry::DomainSpec;
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::WaveSystem;

fn main() -> bclab::Result<()> {
    let basis = eigensolve(&DomainSpec::interval(1.0, 513)?, 64, Backend::Auto)?;
    let y = targets::linear_ramp(basis.grid());
    let p = SynthesisProblem::new(y.clone(), 0.75)?.alpha(1e-4);
    let r = h1_star_experiment(&p, &basis, None)?;
    println!("relative H1 residual {:.3e} ({} iterations)", r.relative_residual, r.iterations);
    let u = WaveSystem::new(&basis, p.time).control_to_state_lifted(&r.control)?;
    println!("|u - y|_H1 = {:.3e}, |y|_H1 = {:.3}", h1_norm(&u.combine(1.0, &y, -1.0)?), h1_norm(&y));
    for (i, x) in [(0, 0.0), (128, 0.25), (256, 0.5), (512, 1.0)] {
        println!("x = {x}: u = {:+.4}, y = {:+.4}", u.values()[i], y.values()[i]);
    }
    Ok(())
}
