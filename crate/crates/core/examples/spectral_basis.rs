//! Dirichlet eigenpairs: analytic, dense finite differences and the Krylov
//! path on a 2D grid.

use std::f64::consts::PI;
use std::time::Instant;

use bclab::geometry::{CoefficientPreset, DomainSpec, Grid};
use bclab::spectral::{eigensolve, Backend};

fn main() -> bclab::Result<()> {
    let line = DomainSpec::interval(1.0, 513)?;
    let exact = eigensolve(&line, 64, Backend::Analytic)?;
    let fd = eigensolve(&line, 64, Backend::FiniteDifference)?;
    println!("{:>3} {:>14} {:>14} {:>10}", "k", "analytic", "fd", "rel err");
    for k in [0, 1, 2, 15, 31, 63] {
        let (a, b) = (exact.lambdas()[k], fd.lambdas()[k]);
        println!("{:>3} {a:>14.6} {b:>14.6} {:>10.2e}", k + 1, (b / a - 1.0).abs());
    }

    let square = DomainSpec::rectangle(1.0, 1.0, 129, 129)?;
    let t0 = Instant::now();
    let b2 = eigensolve(&square, 100, Backend::FiniteDifference)?;
    println!(
        "square 129x129, 100 modes in {:.2?}: lambda_1 / 2pi^2 = {:.6}, max residual {:.1e}",
        t0.elapsed(),
        b2.lambdas()[0] / (2.0 * PI * PI),
        b2.max_residual()
    );
    // degenerate pair lambda_{1,2} = lambda_{2,1}
    println!("lambda_2 = {:.4}, lambda_3 = {:.4}", b2.lambdas()[1], b2.lambdas()[2]);

    let grid = Grid::rectangle(1.0, 1.0, 65, 65)?;
    let preset = CoefficientPreset::RadialBump {
        base: 1.0,
        amplitude: 1.5,
        center: (0.5, 0.5),
        radius: 0.3,
    };
    let bumpy = eigensolve(&DomainSpec::from_preset(grid, &preset, Some(2.0))?, 10, Backend::Auto)?;
    println!("radial bump, q = 2: first eigenvalues {:.3?}", &bumpy.lambdas()[..4]);
    Ok(())
}
