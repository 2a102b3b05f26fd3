//! A pulse sent in from `x = 0`: transposition solution against the
//! travelling wave `f(T − x)` and the leapfrog solver.

use bclab::control_lab::targets::exp_bump;
use bclab::geometry::DomainSpec;
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::{fd_oracle_forward, BoundaryControl, FieldRole, StateField, TimeGrid, WaveSystem};

fn main() -> bclab::Result<()> {
    let domain = DomainSpec::interval(1.0, 513)?;
    let basis = eigensolve(&domain, 64, Backend::Auto)?;
    let big_t = 0.8;
    let time = TimeGrid::with_default_steps(big_t)?;
    let sys = WaveSystem::new(&basis, time);

    let f = BoundaryControl::from_fn(domain.grid(), time, |g, _, t| if g == 0 { exp_bump(t, 0.1, 0.5) } else { 0.0 });
    let u = sys.control_to_state(&f)?;
    let wave = StateField::from_fn(domain.grid().clone(), FieldRole::WaveSnapshot, |x, _| {
        if x <= big_t {
            exp_bump(big_t - x, 0.1, 0.5)
        } else {
            0.0
        }
    });
    let leapfrog = fd_oracle_forward(&f, &domain)?;
    let rel = |a: &StateField, b: &StateField| a.combine(1.0, b, -1.0).map(|d| d.h_norm() / b.h_norm());
    println!("|u - f(T - x)| / |f(T - x)| = {:.3e}", rel(&u, &wave)?);
    println!("|u - leapfrog| / |leapfrog| = {:.3e}", rel(&u, &leapfrog)?);
    for x in [0.2, 0.3, 0.5, 0.7, 0.9] {
        let i = (x * 512.0_f64).round() as usize;
        println!("x = {x}: u = {:+.5}, f(T - x) = {:+.5}", u.values()[i], wave.values()[i]);
    }
    Ok(())
}
