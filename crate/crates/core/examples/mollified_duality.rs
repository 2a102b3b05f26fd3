//! Smoothing the control in time equals smoothing the target in space:
//! `(f_ε, O^T y) = (f, O^T R_ε y)` for controls at rest before `δ`.

use bclab::geometry::DomainSpec;
use bclab::regularizer::{regularize_state, smooth_control};
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::{BoundaryControl, FieldRole, StateField, TimeGrid, WaveSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bclab::Result<()> {
    let basis = eigensolve(&DomainSpec::interval(1.0, 513)?, 64, Backend::Auto)?;
    let time = TimeGrid::with_default_steps(0.75)?;
    let (delta, eps) = (0.075, 0.0375);
    let sys = WaveSystem::new(&basis, time);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let f = BoundaryControl::from_fn(basis.grid(), time, |_, _, t| if t >= delta { rng.random_range(-1.0..1.0) } else { 0.0 });
        let y = StateField::from_fn(basis.grid().clone(), FieldRole::Target, |_, _| rng.random_range(-1.0..1.0));
        let lhs = smooth_control(&f, eps, delta)?.signal.f_inner(&sys.observe(&y)?)?;
        let rhs = f.signal.f_inner(&sys.observe(&regularize_state(&y, eps, &basis)?)?)?;
        println!("{lhs:+.12e}  {rhs:+.12e}  diff {:.1e}", (lhs - rhs).abs());
    }
    Ok(())
}
