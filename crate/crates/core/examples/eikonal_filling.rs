//! Travel-time field from the boundary and the filled region `Ω^T`.

use bclab::geometry::{eikonal_distance, filled_subdomain, filling_time, CoefficientPreset, DomainSpec, Grid};

fn main() -> bclab::Result<()> {
    let line = DomainSpec::interval(1.0, 513)?;
    println!("interval: T_fill = {}", filling_time(&eikonal_distance(&line)?));

    let square = DomainSpec::rectangle(1.0, 1.0, 129, 129)?;
    let dist = eikonal_distance(&square)?;
    println!("square:   T_fill = {:.6}, tau(0.5, 0.5) = {:.6}", filling_time(&dist), dist.at(64, 64));
    for t in [0.1, 0.25, 0.4, 0.5] {
        let region = filled_subdomain(&dist, t)?;
        println!("  T = {t:<4}: {:5} of {} nodes filled", region.count(), square.grid().len());
    }

    // a faster medium shortens travel times by the square root of the speed-up
    let fast = square.scaled(4.0)?;
    println!("a -> 4a:  T_fill = {:.6}", filling_time(&eikonal_distance(&fast)?));

    // anisotropic constant metric: waves travel faster along x
    let grid = Grid::rectangle(1.0, 1.0, 129, 129)?;
    let aniso = DomainSpec::from_preset(grid, &CoefficientPreset::Constant { a11: 4.0, a12: 0.0, a22: 1.0 }, None)?;
    let d = eikonal_distance(&aniso)?;
    println!("a = diag(4, 1): T_fill = {:.6}, tau(0.25, 0.5) = {:.6}", filling_time(&d), d.at(32, 64));
    Ok(())
}
