//! Smooth controls, vanishing near `t = 0` and `t = T`, steering the wave
//! to a smooth target in the `D_1` norm.

use bclab::control_lab::{synthesize_control, targets, ControlClass, NormKind, SynthesisProblem};
use bclab::geometry::DomainSpec;
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::WaveSystem;

fn main() -> bclab::Result<()> {
    let basis = eigensolve(&DomainSpec::interval(1.0, 513)?, 64, Backend::Auto)?;
    let y = targets::smooth_bump(basis.grid(), 0.1, 0.8);
    for alpha in [1e-2, 1e-4, 1e-6] {
        let p = SynthesisProblem::new(y.clone(), 0.75)?
            .norm(NormKind::Ds(1.0))
            .class(ControlClass::SmoothVanishingAtT)
            .alpha(alpha);
        let r = synthesize_control(&p, &basis)?;
        println!(
            "alpha = {alpha:.0e}: relative D1 residual {:.3e} after {} iterations, |f| = {:.3}",
            r.relative_residual,
            r.iterations,
            r.control.f_norm()
        );
        if alpha == 1e-6 {
            let sys = WaveSystem::new(&basis, p.time);
            let u = sys.control_to_state(&r.control)?;
            let diff = u.combine(1.0, &y, -1.0)?;
            println!("  plain L2 miss {:.3e}", diff.h_norm() / y.h_norm());
            let last = r.control.signal.row(p.time.len() - 1);
            println!("  control at t = T: {last:?}");
        }
    }
    Ok(())
}
