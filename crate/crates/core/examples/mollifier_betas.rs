//! Multipliers `β_k^ε` of the state mollifier: small-argument law and decay.

use bclab::geometry::DomainSpec;
use bclab::regularizer::{MollifierKernel, RegularizerSpectrum};
use bclab::spectral::{eigensolve, Backend};

fn main() -> bclab::Result<()> {
    let basis = eigensolve(&DomainSpec::interval(1.0, 513)?, 64, Backend::Auto)?;
    let m2 = MollifierKernel::second_moment();
    println!("kernel: normalization {:.10}, second moment {m2:.10}", MollifierKernel::normalization());
    for eps in [0.005, 0.05, 0.2] {
        let spec = RegularizerSpectrum::for_basis(eps, &basis)?;
        println!("eps = {eps}");
        for k in [0, 7, 31, 63] {
            let (l, b) = (spec.lambdas[k], spec.betas[k]);
            println!(
                "  k = {:>2}: eps*sqrt(lambda) = {:>7.3}, beta = {b:+.6e}, 1 - eps^2 lambda m2 / 2 = {:+.6}",
                k + 1,
                eps * l.sqrt(),
                1.0 - 0.5 * eps * eps * l * m2
            );
        }
    }
    let spec = RegularizerSpectrum::for_basis(0.05, &basis)?;
    spec.write_csv(std::io::stdout().lock())?;
    Ok(())
}
