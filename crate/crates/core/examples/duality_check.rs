//! `(W^T f, y)_H = (f, O^T y)_{F^T}` on random pairs, and the same check
//! with deliberately mismatched quadrature.

use bclab::geometry::DomainSpec;
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::{FieldRole, StateField, TimeGrid, WaveSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bclab::Result<()> {
    let domain = DomainSpec::rectangle(1.0, 1.0, 33, 33)?;
    let basis = eigensolve(&domain, 40, Backend::FiniteDifference)?;
    let time = TimeGrid::with_default_steps(0.75)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, sys) in [
        ("trapezoid", WaveSystem::new(&basis, time)),
        ("broken", WaveSystem::new(&basis, time).with_broken_quadrature()),
    ] {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let mut f = sys.zero_control();
            f.signal.samples_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            let y = StateField::from_fn(basis.grid().clone(), FieldRole::Target, |_, _| rng.random_range(-1.0..1.0));
            worst = worst.max(sys.verify_duality(&f, &y)?);
        }
        println!("{name:>9}: max relative discrepancy {worst:.3e}");
    }
    Ok(())
}
