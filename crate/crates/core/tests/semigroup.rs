use proptest::prelude::*;
use shearlab::grid::{d2, refined, uniform, GridFunction};
use shearlab::profiles::*;
use shearlab::rayleigh::{point_spectrum, Region};
use shearlab::semigroup::*;
use shearlab::{Error, C64};

fn tanh1() -> Tanh {
    Tanh { u_plus: 1.0 }
}

fn exp1() -> ExpLayer {
    ExpLayer { u_plus: 1.0 }
}

fn bump(y: &[f64], centre: f64, width: f64) -> GridFunction {
    GridFunction::from_fn(y, |t| C64::new((-((t - centre) / width).powi(2)).exp(), 0.0))
}

/// Smooth and compactly supported on [a, b].
fn compact_bump(y: &[f64], a: f64, b: f64) -> GridFunction {
    GridFunction::from_fn(y, |t| {
        let r = (2.0 * t - a - b) / (b - a);
        if r.abs() < 1.0 {
            C64::new((1.0 - 1.0 / (1.0 - r * r)).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    a.sub(b).max_norm() / b.max_norm()
}

// ---------------------------------------------------------------------------
// Poisson inversion

#[test]
fn kernel_value_from_a_hat_source() {
    // A unit-mass hat at y = 1 is integrated exactly by the piecewise-linear
    // quadrature, so ψ(2) = ∫H(2, y)hat(y)dy = H(2, 1) + O(h²).
    let h = 1e-3;
    let y = uniform(30.0, 30_001);
    let omega = GridFunction::from_fn(&y, |t| C64::new(((1.0 - (t - 1.0).abs() / h) / h).max(0.0), 0.0));
    let psi = poisson_invert(1.0, &omega).unwrap();
    let j = y.iter().position(|&t| (t - 2.0).abs() < 1e-9).unwrap();
    let exact = 0.5 * ((-1.0f64).exp() - (-3.0f64).exp());
    assert!((exact - 0.159046).abs() < 1e-6);
    assert!((psi.values[j].re - exact).abs() < 1e-7, "{}", psi.values[j]);
}

#[test]
fn exponential_source_closed_form() {
    // (∂² − 1)ψ = −e^{−2y}, ψ(0) = 0, ψ → 0: ψ = (e^{−y} − e^{−2y})/3.
    let y = uniform(30.0, 2048);
    let omega = GridFunction::from_fn(&y, |t| C64::new((-2.0 * t).exp(), 0.0));
    let (psi, dpsi) = poisson_invert_with_derivative(1.0, &omega).unwrap();
    for (k, &t) in y.iter().enumerate() {
        let exact = ((-t).exp() - (-2.0 * t).exp()) / 3.0;
        let dexact = (2.0 * (-2.0 * t).exp() - (-t).exp()) / 3.0;
        assert!((psi.values[k] - exact).norm() < 1e-5, "psi at {t}");
        assert!((dpsi.values[k] - dexact).norm() < 1e-4, "dpsi at {t}");
    }
    assert_eq!(psi.values[0], C64::new(0.0, 0.0));
}

#[test]
fn round_trip_through_finite_differences() {
    let alpha = 0.5;
    let y = uniform(20.0, 2048);
    let omega = bump(&y, 1.5, 0.5);
    let psi = poisson_invert(alpha, &omega).unwrap();
    let h = y[1] - y[0];
    let mut acc = 0.0;
    for j in 1..y.len() - 1 {
        let lap = (psi.values[j + 1] - 2.0 * psi.values[j] + psi.values[j - 1]) / (h * h) - alpha * alpha * psi.values[j];
        acc += (lap + omega.values[j]).norm_sqr() * h;
    }
    assert!(acc.sqrt() <= 1e-4, "L2 error {:.3e}", acc.sqrt());
}

#[test]
fn zero_in_zero_out() {
    let y = uniform(20.0, 512);
    let zero = GridFunction::zeros(&y);
    assert_eq!(poisson_invert(0.5, &zero).unwrap().max_norm(), 0.0);
    let st = ModeState::new(0.5, zero.clone()).unwrap();
    assert_eq!(evolve_linear_euler(&tanh1(), &st, 3.0, 0.1).unwrap().omega.max_norm(), 0.0);
    assert_eq!(evolve_linear_ns(&tanh1(), &st, 1e-3, 3.0, 0.1).unwrap().omega.max_norm(), 0.0);
    let c = ContourSpec::standard(0.0, 1.0, 0.25, 0.25);
    assert_eq!(contour_evolve_vorticity(&tanh1(), 0.5, &zero, &[2.0], &c).unwrap()[0].max_norm(), 0.0);
    assert_eq!(vorticity_contour(&tanh1(), 0.5, &zero, 2.0, y[100], &c).unwrap().norm(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn stream_function_vanishes_at_the_wall(alpha in 0.05f64..3.0, centre in 0.0f64..5.0, width in 0.2f64..2.0, k in -3.0f64..3.0) {
        let y = refined(15.0, 2.0, 0.01, 0.05);
        let omega = bump(&y, centre, width).map(|t, w| w * C64::from_polar(1.0, k * t));
        let psi = poisson_invert(alpha, &omega).unwrap();
        prop_assert_eq!(psi.values[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn poisson_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, alpha in 0.1f64..2.0) {
        let y = uniform(15.0, 400);
        let w1 = bump(&y, 1.0, 0.5);
        let w2 = bump(&y, 3.0, 1.0).map(|t, w| w * C64::from_polar(1.0, t));
        let mix = GridFunction::new(y.clone(), (0..y.len()).map(|j| a * w1.values[j] + C64::new(0.0, b) * w2.values[j]).collect());
        let lhs = poisson_invert(alpha, &mix).unwrap();
        let p1 = poisson_invert(alpha, &w1).unwrap();
        let p2 = poisson_invert(alpha, &w2).unwrap();
        for j in 0..y.len() {
            let rhs = a * p1.values[j] + C64::new(0.0, b) * p2.values[j];
            prop_assert!((lhs.values[j] - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }
}

#[test]
fn truncation_is_reported() {
    let y = uniform(5.0, 200);
    assert!(truncation_warning(&bump(&y, 4.0, 1.0)).is_some());
    assert!(truncation_warning(&bump(&y, 1.0, 0.3)).is_none());
}

#[test]
fn kernel_grid_is_validated() {
    let omega = GridFunction::from_fn(&[0.5, 1.0, 2.0], |_| C64::new(1.0, 0.0));
    assert!(matches!(poisson_invert(1.0, &omega), Err(Error::Parameter(_))));
    let y = uniform(5.0, 50);
    assert!(matches!(poisson_invert(0.0, &bump(&y, 1.0, 0.5)), Err(Error::Parameter(_))));
}

// ---------------------------------------------------------------------------
// Euler stepping

#[test]
fn linear_profile_is_pure_transport() {
    let alpha = 0.5;
    let prof = Linear { slope: 1.0 };
    let y = uniform(10.0, 1024);
    let omega0 = compact_bump(&y, 2.0, 4.0);
    let st = ModeState::new(alpha, omega0.clone()).unwrap();
    let out = evolve_linear_euler(&prof, &st, 10.0, 0.1).unwrap();
    let exact = omega0.map(|t, w| w * C64::from_polar(1.0, -alpha * t * 10.0));
    assert!(out.omega.sub(&exact).max_norm() <= 1e-6);
    assert!((out.omega.max_norm() - omega0.max_norm()).abs() <= 1e-12);
}

#[test]
fn transport_does_not_damp_vorticity() {
    let alpha = 0.5;
    let prof = Linear { slope: 1.0 };
    let y = uniform(10.0, 1024);
    let st = ModeState::new(alpha, compact_bump(&y, 2.0, 4.0)).unwrap();
    let traj = euler_trajectory(&prof, &st, &geometric_times(10.0, 100.0, 12), 0.1).unwrap();
    let report = damping_diagnostics(&prof, &traj).unwrap();
    assert!(report.vorticity_exponent.abs() < 1e-9, "{}", report.vorticity_exponent);
    assert!(report.decay_exponent < -0.5);
}

#[test]
fn cfl_violation_is_a_parameter_error() {
    let y = uniform(10.0, 100);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    assert!(matches!(evolve_linear_euler(&tanh1(), &st, 1.0, 1.5), Err(Error::Parameter(_))));
    // Unbounded profiles use the largest sampled speed.
    assert!(matches!(evolve_linear_euler(&Linear { slope: 1.0 }, &st, 1.0, 0.2), Err(Error::Parameter(_))));
    assert!(matches!(evolve_linear_ns(&tanh1(), &st, 1e-3, 1.0, 1.5), Err(Error::Parameter(_))));
}

#[test]
fn rk4_order() {
    let alpha = 0.5;
    let y = uniform(15.0, 512);
    let st = ModeState::new(alpha, bump(&y, 1.0, 0.5)).unwrap();
    let run = |dt: f64| evolve_linear_euler(&tanh1(), &st, 4.0, dt).unwrap().omega;
    let (a, b, c) = (run(0.4), run(0.2), run(0.1));
    let ratio = a.sub(&b).max_norm() / b.sub(&c).max_norm();
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn euler_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let alpha = 0.7;
        let y = uniform(12.0, 256);
        let w1 = bump(&y, 1.0, 0.5);
        let w2 = bump(&y, 2.0, 0.7).map(|t, w| w * C64::from_polar(1.0, -t));
        let mix = GridFunction::new(y.clone(), (0..y.len()).map(|j| a * w1.values[j] + C64::new(0.0, b) * w2.values[j]).collect());
        let go = |w: &GridFunction| evolve_linear_euler(&tanh1(), &ModeState::new(alpha, w.clone()).unwrap(), 3.0, 0.1).unwrap().omega;
        let (lhs, r1, r2) = (go(&mix), go(&w1), go(&w2));
        for j in 0..y.len() {
            let rhs = a * r1.values[j] + C64::new(0.0, b) * r2.values[j];
            prop_assert!((lhs.values[j] - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }
    }
}

#[test]
fn state_stream_function_matches_its_vorticity() {
    let y = uniform(15.0, 512);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    for s in euler_trajectory(&tanh1(), &st, &[1.0, 5.0, 20.0], 0.1).unwrap() {
        assert!(rel(&s.stream_from_vorticity(), &s.psi) <= 1e-8);
        assert_eq!(s.psi.values[0], C64::new(0.0, 0.0));
    }
    for s in ns_trajectory(&tanh1(), &st, 1e-3, &[1.0, 5.0], 0.1).unwrap() {
        assert!(rel(&poisson_invert(0.5, &s.omega).unwrap(), &s.psi) <= 1e-8);
    }
}

#[test]
fn output_times_are_hit_exactly() {
    let y = uniform(10.0, 128);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    let traj = euler_trajectory(&tanh1(), &st, &[0.0, 0.33, 1.7], 0.1).unwrap();
    let t: Vec<f64> = traj.iter().map(|s| s.time).collect();
    assert_eq!(t, vec![0.0, 0.33, 1.7]);
    assert_eq!(traj[0].omega, st.omega);
    assert!(euler_trajectory(&tanh1(), &st, &[1.0, 0.5], 0.1).is_err());
}

#[test]
fn trajectory_csv_layout() {
    let y = uniform(10.0, 128);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    let traj = euler_trajectory(&tanh1(), &st, &[0.0, 1.0], 0.1).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf, &["run".into()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# run");
    assert_eq!(lines[1], "t,norm_psi_inf,norm_dpsi_inf,norm_omega_inf");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[3].split(',').count(), 4);
}

#[test]
fn damping_needs_a_long_trajectory() {
    let y = uniform(10.0, 128);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    let traj = euler_trajectory(&tanh1(), &st, &[10.0, 20.0, 40.0], 0.1).unwrap();
    assert!(matches!(damping_diagnostics(&tanh1(), &traj), Err(Error::InsufficientData(_))));
}

// ---------------------------------------------------------------------------
// Navier–Stokes stepping

#[test]
fn strong_viscosity_decays() {
    let y = refined(20.0, 1.0, 0.005, 0.05);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    let times: Vec<f64> = (1..=30).map(|k| k as f64).collect();
    let traj = ns_trajectory(&tanh1(), &st, 0.1, &times, 0.05).unwrap();
    let norms: Vec<f64> = traj.iter().map(|s| s.omega.l2_norm()).collect();
    for w in norms[2..].windows(2) {
        assert!(w[1] < w[0], "{norms:?}");
    }
    assert!(norms[29] < 0.05 * norms[0]);
}

#[test]
fn no_slip_holds() {
    let y = refined(20.0, 1.0, 0.005, 0.05);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    let s = evolve_linear_ns(&tanh1(), &st, 1e-3, 2.0, 0.05).unwrap();
    assert_eq!(s.psi.values[0], C64::new(0.0, 0.0));
    assert!(s.dpsi.values[0].norm() <= 1e-10 * s.dpsi.max_norm(), "{}", s.dpsi.values[0]);
}

#[test]
fn no_growth_below_the_band() {
    // tanh at ν = 1e-6 is unstable only for α ≳ 0.036.
    let nu = 1e-6;
    let y = refined(30.0, 1.0, 0.002, 0.05);
    let st = ModeState::new(0.02, bump(&y, 1.0, 0.5)).unwrap();
    let horizon = 4600.0;
    let times: Vec<f64> = (1..=20).map(|k| horizon * k as f64 / 20.0).collect();
    let traj = ns_trajectory(&tanh1(), &st, nu, &times, 1.0).unwrap();
    let rate = growth_rate(&traj, 0.5 * horizon).unwrap();
    assert!(rate < 0.0, "rate {rate:e}");
}

#[test]
fn viscosity_must_be_positive() {
    let y = uniform(10.0, 128);
    let st = ModeState::new(0.5, bump(&y, 1.0, 0.5)).unwrap();
    assert!(matches!(evolve_linear_ns(&tanh1(), &st, 0.0, 1.0, 0.1), Err(Error::Parameter(_))));
}

// ---------------------------------------------------------------------------
// Contour integrals

fn standard() -> ContourSpec {
    ContourSpec::standard(0.0, 1.0, 0.25, 0.25)
}

#[test]
fn contour_recovers_the_initial_stream_function() {
    let y = uniform(20.0, 1024);
    let omega0 = bump(&y, 1.5, 0.5);
    let psi0 = poisson_invert(0.5, &omega0).unwrap();
    for prof in [&tanh1() as &dyn ShearProfile, &exp1()] {
        let out = contour_evolve_vorticity(prof, 0.5, &omega0, &[0.0], &standard()).unwrap();
        assert!(rel(&out[0], &psi0) <= 1e-3);
    }
    // Same through the stream-function entry point.
    let out = resolvent_contour_evolve(&tanh1(), 0.5, &psi0, 0.0, &standard()).unwrap();
    assert!(rel(&out, &psi0) <= 1e-3);
}

#[test]
fn contour_matches_time_stepping() {
    let y = uniform(20.0, 1024);
    let omega0 = bump(&y, 1.5, 0.5);
    let times = [1.0, 5.0, 10.0];
    for prof in [&tanh1() as &dyn ShearProfile, &exp1()] {
        for alpha in [0.3, 1.0] {
            let st = ModeState::new(alpha, omega0.clone()).unwrap();
            let stepped = euler_trajectory(prof, &st, &times, 0.02).unwrap();
            let contour = contour_evolve_vorticity(prof, alpha, &omega0, &times, &standard()).unwrap();
            for (s, c) in stepped.iter().zip(&contour) {
                let e = rel(c, &s.psi);
                assert!(e <= 1e-3, "{} alpha {alpha} t {}: {e:.2e}", prof.name(), s.time);
            }
        }
    }
}

#[test]
fn contour_independence() {
    let y = uniform(20.0, 1024);
    let omega0 = bump(&y, 1.5, 0.5);
    let bent = ContourSpec { vertices: vec![C64::new(-0.4, 0.4), C64::new(0.5, 0.15), C64::new(1.4, 0.4)], reversed: false };
    let a = contour_evolve_vorticity(&tanh1(), 0.5, &omega0, &[5.0], &standard()).unwrap();
    let b = contour_evolve_vorticity(&tanh1(), 0.5, &omega0, &[5.0], &bent).unwrap();
    assert!(rel(&b[0], &a[0]) <= 1e-4);
    let rev = ContourSpec { reversed: true, ..standard() };
    let c = contour_evolve_vorticity(&tanh1(), 0.5, &omega0, &[5.0], &rev).unwrap();
    assert!(rel(&c[0].scaled(C64::new(-1.0, 0.0)), &a[0]) <= 1e-12);
}

#[test]
fn contour_placement_is_validated() {
    let y = uniform(20.0, 256);
    let omega0 = bump(&y, 1.5, 0.5);
    let through = ContourSpec { vertices: vec![C64::new(-0.2, 0.2), C64::new(0.5, -0.1), C64::new(1.2, 0.2)], reversed: false };
    let short = ContourSpec::standard(0.6, 1.0, 0.25, 0.1);
    for c in [through, short] {
        assert!(matches!(contour_evolve_vorticity(&tanh1(), 0.5, &omega0, &[1.0], &c), Err(Error::Contour(_))));
    }
}

#[test]
fn node_on_an_eigenvalue_is_a_contour_error() {
    let prof = Inflected;
    let alpha = 0.5;
    let region = Region { re_min: 0.0, re_max: 1.0, im_min: 1e-3, im_max: 0.6 };
    let eig = point_spectrum(&prof, alpha, region).unwrap();
    assert!(!eig.is_empty());
    let c = eig[0].c;
    let y = uniform(20.0, 512);
    let omega0 = bump(&y, 1.5, 0.5);
    let (lo, hi) = y.iter().map(|&t| prof.eval(C64::new(t, 0.0)).re).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let spec = ContourSpec { vertices: vec![C64::new(lo - 0.9, 0.9), c, C64::new(hi + 0.9, 0.9)], reversed: false };
    match contour_evolve_vorticity(&prof, alpha, &omega0, &[1.0], &spec) {
        Err(Error::Contour(m)) => assert!(m.contains("eigenvalue"), "{m}"),
        other => panic!("expected a contour error, got {other:?}"),
    }
}

#[test]
fn pointwise_vorticity_is_consistent() {
    let alpha = 0.5;
    let y = uniform(20.0, 1024);
    let omega0 = bump(&y, 1.5, 0.5);
    let t = 5.0;
    let psi = &contour_evolve_vorticity(&tanh1(), alpha, &omega0, &[t], &standard()).unwrap()[0];
    let lap = d2(&y, &psi.values);
    let st = evolve_linear_euler(&tanh1(), &ModeState::new(alpha, omega0.clone()).unwrap(), t, 0.02).unwrap();
    let scale = st.omega.max_norm();
    for j in [40, 77, 150, 300] {
        let w = vorticity_contour(&tanh1(), alpha, &omega0, t, y[j], &standard()).unwrap();
        let from_psi = alpha * alpha * psi.values[j] - lap[j];
        assert!((w - from_psi).norm() <= 1e-3 * scale, "y = {}: {w} vs {from_psi}", y[j]);
        assert!((w - st.omega.values[j]).norm() <= 1e-3 * scale, "y = {}: {w} vs stepper {}", y[j], st.omega.values[j]);
    }
    assert!(matches!(vorticity_contour(&tanh1(), alpha, &omega0, t, 0.123456, &standard()), Err(Error::Parameter(_))));
}

#[test]
fn demodulated_vorticity_settles_like_inverse_time() {
    // Differences of ω e^{iαUt} between t and 2t shrink like C/t.
    let alpha = 0.5;
    let y = uniform(20.0, 1024);
    let omega0 = bump(&y, 1.5, 0.5);
    let low = ContourSpec::standard(0.0, 1.0, 0.05, 0.25);
    let times = [40.0, 80.0, 160.0];
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for j in [50, 73, 100, 150] {
        let u = tanh1().eval(C64::new(y[j], 0.0)).re;
        let w = vorticity_contour_many(&tanh1(), alpha, &omega0, &times, y[j], &low).unwrap();
        let d: Vec<C64> = w.iter().zip(&times).map(|(w, t)| w * C64::from_polar(1.0, alpha * u * t)).collect();
        d1 = d1.max((d[1] - d[0]).norm());
        d2 = d2.max((d[2] - d[1]).norm());
    }
    let (c1, c2) = (40.0 * d1, 80.0 * d2);
    assert!(d2 < d1, "{d1} {d2}");
    assert!((c2 / c1 - 1.0).abs() < 0.3, "C estimates {c1} and {c2}");
}
