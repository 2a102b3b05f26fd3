//! Checks against values computed independently of the library: closed
//! forms, d'Alembert, reference projections and a separate quadrature.

use std::f64::consts::PI;

use bclab::control_lab::{observability_test, ControlClass, synthesize_control, targets, unreachability_bound, SynthesisProblem};
use bclab::geometry::{eikonal_distance, filled_subdomain, CoefficientPreset, DomainSpec, Grid};
use bclab::regularizer::{beta, smooth_control, MollifierKernel};
use bclab::spectral::{eigensolve, Backend};
use bclab::waveop::{BoundaryControl, TimeGrid, WaveSystem};

/// `β(ε, λ)` at `ε√λ = 1`, from 30-digit quadrature of
/// `∫ φ(t) cos t dt`, frozen.
const BETA_AT_ONE: f64 = 0.923_119_010_817_905_2;
/// `∫ t² φ(t) dt`, same source.
const SECOND_MOMENT: f64 = 0.158_113_636_263_798_23;

/// Composite Simpson on `[-1, 1]` for the normalized bump moments.
fn simpson_bump(g: impl Fn(f64) -> f64) -> f64 {
    let n = 200_000;
    let h = 2.0 / n as f64;
    let bump = |t: f64| if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
    let (mut z, mut m) = (0.0, 0.0);
    for i in 0..=n {
        let t = -1.0 + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        z += w * bump(t);
        m += w * bump(t) * g(t);
    }
    m / z
}

#[test]
fn beta_at_unit_argument_matches_frozen_quadrature() {
    let simpson = simpson_bump(f64::cos);
    assert!((simpson - BETA_AT_ONE).abs() < 1e-10, "{simpson}");
    for eps in [0.01, 0.1, 0.5] {
        let b = beta(eps, 1.0 / (eps * eps));
        assert!((b - BETA_AT_ONE).abs() < 1e-12, "eps {eps}: {b}");
    }
    assert!((MollifierKernel::second_moment() - SECOND_MOMENT).abs() < 1e-12);
    assert!((simpson_bump(|t| t * t) - SECOND_MOMENT).abs() < 1e-10);
}

#[test]
fn richardson_recovers_second_moment() {
    let lambda = 1.0;
    let ratio = |j: i32| {
        let e = 2.0_f64.powi(-j);
        (1.0 - beta(e, lambda)) / (0.5 * e * e * lambda)
    };
    // error is O(ε²): one Richardson step removes it
    for j in 3..7 {
        let extrap = (4.0 * ratio(j + 1) - ratio(j)) / 3.0;
        assert!((extrap - SECOND_MOMENT).abs() < 1e-7, "j {j}: {extrap}");
    }
}

#[test]
fn scaled_metric_halves_travel_time() {
    let grid = Grid::rectangle(1.0, 1.0, 129, 129).unwrap();
    let h = grid.spacing();
    let fast = DomainSpec::from_preset(grid.clone(), &CoefficientPreset::Constant { a11: 4.0, a12: 0.0, a22: 4.0 }, None).unwrap();
    let tau = eikonal_distance(&fast).unwrap();
    assert!((tau.at(64, 64) - 0.25).abs() <= 2.0 * h);
    // every node within 2h of Euclidean distance to the boundary / 2
    let plain = DomainSpec::rectangle(1.0, 1.0, 129, 129).unwrap();
    let d = eikonal_distance(&plain).unwrap();
    for k in 0..grid.len() {
        let (x, y) = grid.coords(k);
        let exact = x.min(1.0 - x).min(y).min(1.0 - y);
        assert!((d.tau[k] - exact).abs() <= 2.0 * h, "node {k}");
        assert!((tau.tau[k] - exact / 2.0).abs() <= 2.0 * h, "node {k}");
    }
}

#[test]
fn filled_region_is_a_frame() {
    let d = DomainSpec::rectangle(1.0, 1.0, 129, 129).unwrap();
    let h = d.grid().spacing();
    let region = filled_subdomain(&eikonal_distance(&d).unwrap(), 0.25).unwrap();
    for k in 0..d.grid().len() {
        let (x, y) = d.grid().coords(k);
        let dist = x.min(1.0 - x).min(y).min(1.0 - y);
        if dist <= 0.25 - 2.0 * h {
            assert!(region.contains(k), "({x}, {y}) should be filled");
        }
        if dist >= 0.25 + 2.0 * h {
            assert!(!region.contains(k), "({x}, {y}) should be empty");
        }
    }
}

#[test]
fn potential_shifts_the_spectrum() {
    let grid = Grid::interval(1.0, 513).unwrap();
    let d = DomainSpec::from_preset(grid, &CoefficientPreset::identity(), Some(1.0)).unwrap();
    let b = eigensolve(&d, 8, Backend::FiniteDifference).unwrap();
    let h = 1.0 / 512.0;
    for (k, l) in b.lambdas().iter().enumerate() {
        let kk = (k + 1) as f64;
        // exact eigenvalues of the three-point Laplacian, plus q
        let discrete = 4.0 / (h * h) * (kk * PI * h / 2.0).sin().powi(2) + 1.0;
        assert!((l / discrete - 1.0).abs() < 1e-10, "k {kk}: {l} vs {discrete}");
        assert!((l / (kk * kk * PI * PI + 1.0) - 1.0).abs() < 1e-3);
    }
}

#[test]
fn truncation_tail_matches_full_reference_projection() {
    let d = DomainSpec::interval(1.0, 513).unwrap();
    let full = eigensolve(&d, 511, Backend::FiniteDifference).unwrap();
    let short = eigensolve(&d, 64, Backend::FiniteDifference).unwrap();
    let y = targets::smooth_bump(d.grid(), 0.45, 0.55);
    let a = full.project(&y).unwrap().alphas;
    let reference = a[64..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let tail = short.tail_norm(&y).unwrap();
    assert!((tail - reference).abs() <= 1e-9 * y.h_norm(), "{tail} vs {reference}");
    assert!(tail / y.h_norm() < 0.05);
}

#[test]
fn d1_norm_is_the_dirichlet_energy() {
    // enough modes that the D1 tail of the bump is below 1e-6
    let b = eigensolve(&DomainSpec::interval(1.0, 513).unwrap(), 256, Backend::Auto).unwrap();
    let y = targets::smooth_bump(b.grid(), 0.2, 0.8);
    // y = exp(1 − 1/(1 − s²)), s = (2x − 1)/0.6
    let dy = |x: f64| {
        let s: f64 = (2.0 * x - 1.0) / 0.6;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let v = (1.0 - 1.0 / (1.0 - s * s)).exp();
        v * (-2.0 * s / (1.0 - s * s).powi(2)) * (2.0 / 0.6)
    };
    let energy = bclab::regularizer::integrate(|x| dy(x) * dy(x), 0.2, 0.8, 1e-13);
    let a = b.project(&y).unwrap();
    let d1 = b.ds_inner(&a, &a, 1.0).unwrap();
    assert!((d1 / energy - 1.0).abs() < 1e-6, "{d1} vs {energy}");
}

#[test]
fn single_mode_trace_closed_form() {
    let b = eigensolve(&DomainSpec::interval(1.0, 513).unwrap(), 16, Backend::Analytic).unwrap();
    let big_t = 0.75;
    let time = TimeGrid::with_default_steps(big_t).unwrap();
    let sys = WaveSystem::new(&b, time);
    for k in [1usize, 2, 7, 16] {
        let w = k as f64 * PI;
        let trace = sys.observe(&targets::mode(&b, k - 1)).unwrap();
        // e_k = √2 sin(kπx): outward derivative −√2 kπ at 0, √2 kπ cos kπ at 1
        let dn = [-(2.0_f64.sqrt()) * w, 2.0_f64.sqrt() * w * (w).cos()];
        for i in 0..time.len() {
            let s = (w * (time.time(i) - big_t)).sin() / w;
            for (g, d) in dn.iter().enumerate() {
                assert!((trace.get(i, g) - d * s).abs() < 1e-9 * w, "k {k} i {i} g {g}");
            }
        }
    }
}

#[test]
fn smoothed_control_support() {
    let grid = Grid::interval(1.0, 65).unwrap();
    let time = TimeGrid::with_default_steps(0.75).unwrap();
    let (delta, eps) = (0.2, 0.08);
    let f = BoundaryControl::from_fn(&grid, time, |_, _, t| if t >= delta { (7.0 * t).sin() + 1.5 } else { 0.0 });
    let fe = smooth_control(&f, eps, delta).unwrap();
    for i in 0..time.len() {
        if time.time(i) <= delta - eps {
            assert!(fe.signal.row(i).iter().all(|v| *v == 0.0), "t = {}", time.time(i));
        }
    }
    assert!(fe.signal.row(time.len() / 2).iter().any(|v| *v != 0.0));
}

#[test]
fn observability_examples() {
    let d = DomainSpec::interval(1.0, 513).unwrap();
    let b = eigensolve(&d, 64, Backend::Auto).unwrap();
    let dist = eikonal_distance(&d).unwrap();
    let bump = targets::centre_bump(b.grid());
    let v = observability_test(&bump, TimeGrid::with_default_steps(0.3).unwrap(), 0.05, 1e-3, &b, &dist).unwrap();
    assert!(v.trace_norm <= 1e-3 * v.y_norm);
    assert_eq!(v.support_check, Some(true));
    let e1 = targets::mode(&b, 0);
    let v = observability_test(&e1, TimeGrid::with_default_steps(0.75).unwrap(), 0.05, 1e-3, &b, &dist).unwrap();
    assert!(v.observable && v.support_check.is_none() && v.pass);
}

#[test]
fn half_reachable_target_plateaus_at_the_outside_mass() {
    let d = DomainSpec::interval(1.0, 513).unwrap();
    let b = eigensolve(&d, 64, Backend::Auto).unwrap();
    let big_t = 0.3;
    // Ω^0.3 = [0, 0.3] ∪ [0.7, 1]; the bump straddles x = 0.3
    let y = targets::smooth_bump(b.grid(), 0.15, 0.45);
    let region = filled_subdomain(&eikonal_distance(&d).unwrap(), big_t).unwrap();
    let sharp = unreachability_bound(&y, &region, 0.0).unwrap().bound;
    // 64 modes cannot resolve a front narrower than about 2/64
    let smeared = unreachability_bound(&y, &region, 2.0 / 64.0).unwrap().banded_bound;
    let p = SynthesisProblem::new(y.clone(), big_t).unwrap().class(ControlClass::SmoothVanishingAtT);
    let mut last = f64::INFINITY;
    for alpha in [1e-2, 1e-4, 1e-6] {
        let r = synthesize_control(&p.clone().alpha(alpha), &b).unwrap();
        assert!(r.final_residual <= last);
        assert!(r.final_residual >= smeared, "alpha {alpha}: {} below {smeared}", r.final_residual);
        last = r.final_residual;
    }
    assert!(sharp > 0.5 * y.h_norm());
    assert!((last / sharp - 1.0).abs() < 0.05, "plateau {last} vs {sharp}");
}
