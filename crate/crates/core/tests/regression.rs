//! Frozen numbers from the default 1D setup. A change beyond the relative
//! slack means the discretisation changed, not that it broke.

use bclab::control_lab::targets::exp_bump;
use bclab::geometry::DomainSpec;
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::{fd_oracle_forward, BoundaryControl, FieldRole, StateField, TimeGrid, WaveSystem};

const PULSE_ERROR: f64 = 6.438e-4;
const LEAPFROG_GAP: f64 = 1.335e-3;

fn close(measured: f64, frozen: f64) -> bool {
    (measured / frozen - 1.0).abs() < 0.01
}

#[test]
fn travelling_pulse_errors_are_frozen() {
    let domain = DomainSpec::interval(1.0, 513).unwrap();
    let basis = eigensolve(&domain, 64, Backend::Auto).unwrap();
    let big_t = 0.8;
    let time = TimeGrid::with_default_steps(big_t).unwrap();
    let f = BoundaryControl::from_fn(domain.grid(), time, |g, _, t| if g == 0 { exp_bump(t, 0.1, 0.5) } else { 0.0 });
    let u = WaveSystem::new(&basis, time).control_to_state(&f).unwrap();
    let wave = StateField::from_fn(domain.grid().clone(), FieldRole::WaveSnapshot, |x, _| {
        if x <= big_t {
            exp_bump(big_t - x, 0.1, 0.5)
        } else {
            0.0
        }
    });
    let leapfrog = fd_oracle_forward(&f, &domain).unwrap();
    let rel = |a: &StateField, b: &StateField| a.combine(1.0, b, -1.0).unwrap().h_norm() / b.h_norm();
    let (e1, e2) = (rel(&u, &wave), rel(&u, &leapfrog));
    assert!(close(e1, PULSE_ERROR), "{e1:e}");
    assert!(close(e2, LEAPFROG_GAP), "{e2:e}");
}
