use proptest::prelude::*;
use shearlab::grid::{refined, uniform, Y_MAX};
use shearlab::orrsommerfeld::*;
use shearlab::profiles::*;
use shearlab::rayleigh::{decaying_states, WallPath};
use shearlab::specialfn::{airy_ai, airy_repeated_integral, tietjens_complex, AiryKind};
use shearlab::{Error, C64, I};
use std::f64::consts::PI;

fn tanh1() -> Tanh {
    Tanh { u_plus: 1.0 }
}

fn exp1() -> ExpLayer {
    ExpLayer { u_plus: 1.0 }
}

/// Ai(2, z) = ∫₀^∞ s Ai(z + s) ds by composite Simpson; independent of the
/// repeated-integral code path.
fn ai2_quadrature(z: C64) -> C64 {
    let n = 6000;
    let h = 30.0 / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=n {
        let s = k as f64 * h;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * s * airy_ai(z + s).unwrap();
    }
    acc * h / 3.0
}

// ---------------------------------------------------------------------------
// Spectral point

#[test]
fn epsilon_is_exact() {
    let p = ViscousSpectralPoint::new(&tanh1(), 0.3, C64::new(0.1, 0.02), 1e-6).unwrap();
    assert_eq!(p.epsilon, C64::new(1e-6, 0.0) / (I * 0.3));
    assert_eq!(p.lambda, -I * 0.3 * C64::new(0.1, 0.02));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_cubed_and_branch(alpha in 0.01f64..2.0, cr in 0.01f64..0.9, ci in -0.05f64..0.05, lnu in -12f64..-3.0) {
        let nu = 10f64.powf(lnu);
        let prof = tanh1();
        let p = ViscousSpectralPoint::new(&prof, alpha, C64::new(cr, ci), nu).unwrap();
        let target = I * alpha * prof.d1(p.y_c) / nu;
        prop_assert!((p.gamma.powi(3) - target).norm() <= 1e-10 * target.norm());
        let arg = p.gamma.arg();
        prop_assert!(arg > 0.0 && arg < PI / 3.0);
    }

    #[test]
    fn z_argument_is_a_sixth_of_pi(alpha0 in 0.1f64..10.0, c0 in 0.01f64..5.0, s in 0.2f64..5.0) {
        let z = limiting_z(alpha0, C64::new(c0, 0.0), s);
        prop_assert!((z.arg() - PI / 6.0).abs() <= 1e-8);
    }
}

#[test]
fn gamma_argument_for_real_c() {
    let p = ViscousSpectralPoint::new(&exp1(), 0.05, C64::new(0.2, 0.0), 1e-8).unwrap();
    assert!((p.gamma.arg() - PI / 6.0).abs() < 1e-12);
}

// ---------------------------------------------------------------------------
// Fast solution

#[test]
fn fast_solution_at_critical_point() {
    let c = C64::new(0.2, 0.0);
    let p = ViscousSpectralPoint::new(&tanh1(), 0.05, c, 1e-8).unwrap();
    let yc = p.y_c.re;
    let mut grid = refined(5.0, 1.0, 5e-4, 0.1);
    grid.push(yc);
    grid.sort_by(|a, b| a.total_cmp(b));
    let f = fast_solution(&tanh1(), &p, &grid).unwrap();
    let j = grid.iter().position(|&y| y == yc).unwrap();
    let ai20 = airy_repeated_integral(AiryKind::Ai, 2, C64::new(0.0, 0.0)).unwrap();
    assert!((f.values[j] - ai20).norm() < 1e-14, "{} vs {}", f.values[j], ai20);
}

#[test]
fn fast_solution_wall_value_is_the_repeated_integral() {
    let p = ViscousSpectralPoint::new(&tanh1(), 0.03, C64::new(0.03, 0.004), 1e-8).unwrap();
    let grid = refined(2.0, 0.5, 2e-4, 0.05);
    let f = fast_solution(&tanh1(), &p, &grid).unwrap();
    let exact = airy_repeated_integral(AiryKind::Ai, 2, -p.gamma * p.y_c).unwrap();
    assert_eq!(f.values[0], exact);
}

#[test]
fn fast_solution_decays_away_from_the_layer() {
    let nu = 1e-6f64;
    let alpha = nu.powf(0.25);
    let p = ViscousSpectralPoint::new(&exp1(), alpha, C64::new(0.06, 0.005), nu).unwrap();
    let grid = refined(1.0, 0.5, 1e-3, 0.02);
    let f = fast_solution(&exp1(), &p, &grid).unwrap();
    let mut last = f64::INFINITY;
    for (j, &y) in grid.iter().enumerate() {
        if y < p.y_c.re {
            continue;
        }
        let m = f.values[j].norm();
        assert!(m < last, "not decreasing at y = {y}");
        last = m;
    }
    for &y in &[p.y_c.re, p.y_c.re + 0.02, p.y_c.re + 0.05] {
        let z = p.gamma * (C64::new(y, 0.0) - p.y_c);
        let j = grid.iter().position(|&t| t >= y).unwrap();
        let z = if grid[j] == y { z } else { p.gamma * (C64::new(grid[j], 0.0) - p.y_c) };
        let q = ai2_quadrature(z);
        assert!((f.values[j] - q).norm() < 1e-7 * q.norm().max(1e-30), "y = {}: {} vs {}", grid[j], f.values[j], q);
    }
}

#[test]
fn fast_solution_errors() {
    let p = ViscousSpectralPoint::new(&tanh1(), 0.03, C64::new(0.03, 0.004), 1e-8).unwrap();
    let coarse = uniform(2.0, 21);
    assert!(matches!(fast_solution(&tanh1(), &p, &coarse), Err(Error::Resolution(_))));
    let weak = ViscousSpectralPoint::new(&tanh1(), 0.5, C64::new(0.3, 0.0), 0.1).unwrap();
    assert!(matches!(fast_solution(&tanh1(), &weak, &coarse), Err(Error::Parameter(_))));
}

// ---------------------------------------------------------------------------
// Slow solution

#[test]
fn slow_wall_value_expansion() {
    let alpha = 0.01;
    let c = C64::new(0.005, 0.001);
    for prof in [&tanh1() as &dyn ShearProfile, &exp1()] {
        let p = ViscousSpectralPoint::new(prof, alpha, c, 1e-8).unwrap();
        let w = slow_wall_values(prof, &p).unwrap();
        let err = (w[0] - (-c + alpha)).norm();
        assert!(err <= 10.0 * alpha * alpha, "{}: {err:.3e}", prof.name());
        assert!((w[1] - 1.0).norm() < 0.1, "{}", w[1]);
    }
}

#[test]
fn slow_wall_value_shrinks_with_parameters() {
    for k in 1..4 {
        let a = 10f64.powi(-k - 1);
        let p = ViscousSpectralPoint::new(&exp1(), a, C64::new(a, a), 1e-14).unwrap();
        let w = slow_wall_values(&exp1(), &p).unwrap();
        assert!(w[0].norm() < 3.0 * a, "{}", w[0]);
    }
}

#[test]
fn slow_solution_reduces_to_rayleigh_as_viscosity_vanishes() {
    let prof = tanh1();
    let (alpha, c) = (0.2, C64::new(0.3, 0.05));
    let grid = refined(10.0, 2.0, 0.01, 0.2);
    let p = ViscousSpectralPoint::new(&prof, alpha, c, 1e-30).unwrap();
    let s = slow_solution(&prof, &p, &grid).unwrap();
    let ray = decaying_states(&prof, alpha, c, Y_MAX, &grid, WallPath::Below).unwrap();
    let scale = 1.0 - c;
    for (j, st) in ray.iter().enumerate() {
        let r = st[0] * scale;
        assert!((s.values[j] - r).norm() <= 1e-9 * r.norm().max(1e-3), "y = {}", grid[j]);
    }
}

#[test]
fn slow_solution_refuses_large_epsilon() {
    let p = ViscousSpectralPoint::new(&tanh1(), 0.01, C64::new(0.2, 0.01), 1e-3).unwrap();
    assert!(slow_solution(&tanh1(), &p, &uniform(5.0, 101)).is_err());
}

// ---------------------------------------------------------------------------
// Dispersion relation

#[test]
fn limiting_residual_small_alpha() {
    let c0 = C64::new(0.7, 0.2);
    let r = dispersion_residual(1e-12, c0, &tanh1(), 0.0).unwrap();
    let w = -limiting_z(1e-12, c0, 1.0) * C64::from_polar(1.0, 5.0 * PI / 6.0);
    let expect = -c0 * (1.0 - tietjens_complex(w).unwrap());
    assert!((r - expect).norm() < 1e-10);
    assert!(r.norm() > 0.1);
}

#[test]
fn residual_is_not_scale_invariant() {
    let c0 = C64::new(0.9, 0.3);
    let r1 = dispersion_residual(2.0, c0, &tanh1(), 0.0).unwrap();
    let r2 = dispersion_residual(2.0, 2.0 * c0, &tanh1(), 0.0).unwrap();
    assert!((r2 - 2.0 * r1).norm() > 1e-3);
}

#[test]
fn residual_domain_checks() {
    assert!(matches!(dispersion_residual(0.0, C64::new(1.0, 0.0), &tanh1(), 0.0), Err(Error::Parameter(_))));
    assert!(matches!(dispersion_residual(1.0, C64::new(11.0, 0.0), &tanh1(), 0.0), Err(Error::Parameter(_))));
    assert!(matches!(solve_dispersion(12.0, &tanh1(), None), Err(Error::Parameter(_))));
}

#[test]
fn sign_structure_and_fixed_point() {
    let below = solve_dispersion(0.7, &tanh1(), None).unwrap();
    let above = solve_dispersion(2.8, &tanh1(), None).unwrap();
    assert!(below.im < 0.0, "{below}");
    assert!(above.im > 0.0, "{above}");
    assert!(dispersion_residual(2.8, above, &tanh1(), 0.0).unwrap().norm() <= 1e-10);
    let again = solve_dispersion(2.8, &tanh1(), Some(above)).unwrap();
    assert!((again - above).norm() <= 1e-12 * above.norm().max(1.0), "{again} vs {above}");
}

#[test]
fn finite_nu_residual_tends_to_the_limit() {
    let c0 = solve_dispersion(2.5, &exp1(), None).unwrap();
    let mut last = f64::INFINITY;
    for nu in [1e-8, 1e-12, 1e-16] {
        let r = dispersion_residual(2.5, c0, &exp1(), nu).unwrap().norm();
        assert!(r < last, "nu = {nu}: {r}");
        last = r;
    }
    assert!(last < 1e-3, "{last}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// c₀ = k ĉ(α₀/m) with m = s^{5/4}U₊^{−3/2}, k = s^{1/4}U₊^{1/2}.
    #[test]
    fn root_scaling_law(u in 0.5f64..2.0, alpha0 in 1.5f64..4.0) {
        let unit = tanh1();
        let scaled = Tanh { u_plus: u };
        let (m, k) = (u.powf(-0.25), u.powf(0.75));
        let direct = solve_dispersion(alpha0, &scaled, None).unwrap();
        let reference = solve_dispersion(alpha0 / m, &unit, None).unwrap();
        prop_assert!((direct - k * reference).norm() < 1e-8 * direct.norm(), "{} vs {}", direct, k * reference);
    }
}

// ---------------------------------------------------------------------------
// Scan

#[test]
fn scan_figure_values() {
    let scan = scan_growth((0.5, 6.0), 200, &tanh1()).unwrap();
    let am = scan.alpha_m;
    let ac = scan.alpha_c.expect("neutral crossing in range");
    assert!((am - 2.8).abs() <= 0.3, "alpha_M = {am}");
    assert!(ac < am);
    // Frozen from a converged run.
    assert!((ac - 1.000489).abs() < 1e-5, "{ac}");
    assert!((am - 2.71593).abs() < 1e-4, "{am}");
    assert!((scan.max_re_lambda - 1.24051).abs() < 1e-4);
    for r in &scan.rows {
        if r.alpha0 < ac - 1e-9 {
            assert!(r.re_lambda < 0.0, "{}", r.alpha0);
        }
        if r.alpha0 > ac + 1e-9 {
            assert!(r.re_lambda > 0.0, "{}", r.alpha0);
        }
        if (r.alpha0 - am).abs() > 0.5 {
            assert!(r.re_lambda < scan.max_re_lambda - 0.05, "second peak near {}", r.alpha0);
        }
    }
    let fine = scan_growth((0.5, 6.0), 400, &tanh1()).unwrap();
    assert!((fine.alpha_m - am).abs() < 1e-3);
}

#[test]
fn scan_csv_header() {
    let scan = scan_growth((1.0, 3.0), 50, &exp1()).unwrap();
    let mut buf = Vec::new();
    scan.write_csv(&mut buf, &["test".into()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# test"));
    assert_eq!(lines.next(), Some("alpha0,re_c0,im_c0,re_lambda"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn scan_requires_enough_points() {
    assert!(matches!(scan_growth((1.0, 3.0), 10, &tanh1()), Err(Error::Parameter(_))));
}

// ---------------------------------------------------------------------------
// Band

#[test]
fn band_brackets_the_maximum() {
    let b = unstable_band(1e-8, &tanh1()).unwrap();
    let (lo, hi) = (b.alpha_lo.unwrap(), b.alpha_hi.unwrap());
    assert!(lo < b.alpha_max && b.alpha_max < hi);
    assert!(b.max_growth > 0.0);
    // Lower edge sits near α_c ν^{1/4}.
    assert!((lo / 1e-2 - 1.0).abs() < 0.1, "{lo}");
}

#[test]
fn band_empty_for_large_viscosity() {
    let b = unstable_band(1e-4, &exp1()).unwrap();
    assert!(b.is_empty());
    assert!(b.max_growth < 0.0);
}

// ---------------------------------------------------------------------------
// Eigenmode

fn mode(nu: f64) -> Eigenmode {
    let q = nu.powf(0.25);
    let alpha = 2.7 * q;
    let c0 = solve_dispersion(2.7, &tanh1(), None).unwrap();
    let p = solve_matched(&tanh1(), alpha, nu, c0 * q).unwrap();
    let gamma = p.gamma.norm();
    let grid = refined(10.0, (p.y_c.re + 40.0 / gamma).max(0.2), 0.1 / gamma, 0.05);
    eigenmode(&tanh1(), &p, &grid).unwrap()
}

#[test]
fn eigenmode_wall_conditions_and_ordering() {
    let nu = 1e-8;
    let m = mode(nu);
    assert!(m.wall_residual.0 <= 1e-6 && m.wall_residual.1 <= 1e-6, "{:?}", m.wall_residual);
    assert!(m.psi.values[0].norm() <= 1e-6 * m.u.max_norm());
    let ratio = m.v.max_norm() / m.u.max_norm() / nu.powf(0.25);
    assert!(ratio > 0.1 && ratio < 10.0, "{ratio}");
}

#[test]
fn eigenmode_vorticity_grows_like_inverse_quarter_power() {
    let nus = [1e-6, 1e-8, 1e-10];
    let umax2 = 4.0 / (3.0 * 3f64.sqrt()); // max |tanh''|
    let w: Vec<f64> = nus.iter().map(|&nu| mode(nu).omega.max_norm() / umax2).collect();
    let slope = log_slope(&nus, &w);
    assert!((slope + 0.25).abs() <= 0.05, "{slope}");
}

#[test]
fn eigenmode_rejects_non_roots() {
    let p = ViscousSpectralPoint::new(&tanh1(), 0.03, C64::new(0.03, 0.001), 1e-8).unwrap();
    assert!(matches!(eigenmode(&tanh1(), &p, &refined(5.0, 0.5, 1e-4, 0.05)), Err(Error::Parameter(_))));
}

// ---------------------------------------------------------------------------
// Green function

fn green_point() -> ViscousSpectralPoint {
    ViscousSpectralPoint::new(&tanh1(), 0.1, C64::new(0.15, 0.02), 1e-6).unwrap()
}

#[test]
fn green_boundary_continuity_and_jump() {
    let prof = tanh1();
    let p = green_point();
    let mut rng = 0x2545F4914F6CDD1Du64;
    for _ in 0..5 {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        let x = 0.05 + 0.9 * (rng % 10_000) as f64 / 10_000.0;
        let wall = os_green_jet(&prof, &p, x, 0.0, false).unwrap();
        let scale = os_green_jet(&prof, &p, x, x, true).unwrap()[0].norm().max(1e-12);
        assert!(wall[0].norm() <= 1e-6 * scale, "G(x,0) at x = {x}: {}", wall[0]);
        assert!(wall[1].norm() <= 1e-6 * scale * p.gamma.norm(), "dG(x,0) at x = {x}");
        let up = os_green_jet(&prof, &p, x, x, true).unwrap();
        let dn = os_green_jet(&prof, &p, x, x, false).unwrap();
        let g = p.gamma.norm();
        for k in 0..3 {
            let tol = 1e-6 * (up[k].norm() + g.powi(k as i32) * scale);
            assert!((up[k] - dn[k]).norm() <= tol, "k = {k} at x = {x}");
        }
        let jump = -p.epsilon * (up[3] - dn[3]);
        assert!((jump - 1.0).norm() <= 1e-6, "jump {jump} at x = {x}");
    }
}

#[test]
fn green_jump_by_one_sided_differences() {
    let prof = tanh1();
    let p = green_point();
    let x = 0.4;
    let h = 0.02 / p.gamma.norm();
    let g = |y: f64| os_green_function(&prof, &p, x, y).unwrap();
    // Third derivative from four one-sided samples at the interface (second order).
    let right = (-2.5 * g(x) + 9.0 * g(x + h) - 12.0 * g(x + 2.0 * h) + 7.0 * g(x + 3.0 * h) - 1.5 * g(x + 4.0 * h)) / h.powi(3);
    let dn = os_green_jet(&prof, &p, x, x, false).unwrap();
    let left = (2.5 * dn[0] - 9.0 * g(x - h) + 12.0 * g(x - 2.0 * h) - 7.0 * g(x - 3.0 * h) + 1.5 * g(x - 4.0 * h)) / h.powi(3);
    let jump = -p.epsilon * (right - left);
    assert!((jump - 1.0).norm() < 2e-2, "{jump}");
}

#[test]
fn green_decays() {
    // Far above the source only the slow decaying solution survives, and tanh is
    // flat there, so G falls off like exp(-alpha y).
    let prof = tanh1();
    let p = green_point();
    let g15 = os_green_function(&prof, &p, 0.5, 15.0).unwrap();
    let g20 = os_green_function(&prof, &p, 0.5, 20.0).unwrap();
    let expect = (-5.0 * p.alpha).exp();
    assert!((g20 / g15 - expect).norm() < 1e-6 * expect, "{} vs {expect}", g20 / g15);
    let near = os_green_function(&prof, &p, 0.5, 0.6).unwrap().norm();
    assert!(g20.norm() < near);
}

#[test]
fn green_detects_eigenvalue() {
    let nu = 1e-8f64;
    let q = nu.powf(0.25);
    let c0 = solve_dispersion(2.7, &tanh1(), None).unwrap();
    let p = solve_matched(&tanh1(), 2.7 * q, nu, c0 * q).unwrap();
    let r = os_green_function(&tanh1(), &p, 0.2, 0.3);
    assert!(matches!(r, Err(Error::NearEigenvalue(_))), "{r:?}");
}

// ---------------------------------------------------------------------------
// Collocation

#[test]
fn collocation_matches_matched_root() {
    let nu = 1e-6f64;
    let q = nu.powf(0.25);
    let alpha = 2.7 * q;
    let c0 = solve_dispersion(2.7, &tanh1(), None).unwrap();
    let p = solve_matched(&tanh1(), alpha, nu, c0 * q).unwrap();
    let modes = collocation_modes(&tanh1(), alpha, nu, 128).unwrap();
    assert!(modes[0].residual <= 1e-6);
    assert!((modes[0].c - p.c).norm() < 1e-3 * p.c.norm(), "{} vs {}", modes[0].c, p.c);
    let kept = collocation_spectrum(&tanh1(), alpha, nu, 128).unwrap();
    assert!((kept[0] - modes[0].c).norm() < 1e-6);
}

#[test]
fn collocation_stable_below_band() {
    let nu = 1e-6f64;
    let kept = collocation_spectrum(&tanh1(), 0.01 * nu.powf(0.25), nu, 96).unwrap();
    assert!(!kept.is_empty());
    assert!(kept.iter().all(|c| c.im < 0.0), "{:?}", kept.first());
}

#[test]
fn collocation_mode_count_checked() {
    assert!(matches!(collocation_spectrum(&tanh1(), 0.1, 1e-6, 32), Err(Error::Parameter(_))));
}
