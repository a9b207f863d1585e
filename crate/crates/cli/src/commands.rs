//! Subcommand bodies. Each one validates its config block, computes, and only
//! then hands the finished files to [`Outputs::flush`].

use crate::config::{ConfigError, GridSpec, RunConfig};
use crate::output::{resolve_dir, Outputs};
use crate::svg::Plot;
use serde_json::json;
use shearlab::cascade::{cascade_report, Scenario};
use shearlab::grid::{refined, uniform, GridFunction};
use shearlab::orrsommerfeld::{
    collocation_modes, collocation_spectrum, eigenmode, os_green_function, scan_growth, solve_dispersion, solve_matched, ViscousSpectralPoint,
};
use shearlab::profiles::{builtin_profile, heat_evolve, HeatScheme, HeatState, ShearProfile};
use shearlab::rayleigh::{green_function, point_spectrum, Region};
use shearlab::semigroup::{
    contour_evolve_vorticity, damping_diagnostics, euler_trajectory, geometric_times, growth_rate, ns_trajectory, write_trajectory_csv,
    ContourSpec, ModeState,
};
use shearlab::{Error, C64};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) if e.is_validation() => "validation",
            CliError::Core(_) => "numerical",
        }
    }

    /// One-line JSON error record for stderr.
    pub fn record(&self, command: &str) -> String {
        let message = match self {
            CliError::Config(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        };
        json!({"error": self.kind(), "command": command, "exit_code": self.exit_code(), "message": message}).to_string()
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn invalid<T>(msg: impl Into<String>) -> Res<T> {
    Err(CliError::Config(msg.into()))
}

fn positive(name: &str, v: f64) -> Res<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite (got {v})"))
    }
}

pub fn run(command: &str, cfg: &RunConfig, out_flag: Option<&str>) -> Res<Vec<PathBuf>> {
    let profile = builtin_profile(&cfg.profile.name, cfg.profile.u_plus)?;
    let mut out = Outputs::new(command, cfg);
    match command {
        "dispersion" => dispersion(cfg, profile.as_ref(), &mut out)?,
        "spectrum" => spectrum(cfg, profile.as_ref(), &mut out)?,
        "evolve" => evolve(cfg, profile.as_ref(), &mut out)?,
        "cascade" => cascade(cfg, &mut out)?,
        "green" => green(cfg, profile.as_ref(), &mut out)?,
        "profile" => heat(cfg, profile.as_ref(), &mut out)?,
        _ => return invalid(format!("unknown command '{command}'")),
    }
    out.flush(&resolve_dir(out_flag, cfg)).map_err(CliError::Io)
}

fn dispersion(cfg: &RunConfig, profile: &dyn ShearProfile, out: &mut Outputs) -> Res<()> {
    let d = &cfg.dispersion;
    if !(d.alpha_min < d.alpha_max) {
        return invalid(format!("empty scan range [{}, {}]", d.alpha_min, d.alpha_max));
    }
    if !(0.1..=10.0).contains(&d.alpha_min) || !(0.1..=10.0).contains(&d.alpha_max) {
        return invalid("scan range must lie inside [0.1, 10]");
    }
    if d.n_points < 50 {
        return invalid("dispersion.n_points must be at least 50");
    }
    let scan = scan_growth((d.alpha_min, d.alpha_max), d.n_points, profile)?;
    out.csv("dispersion.csv", |w, h| scan.write_csv(w, h));
    out.json(
        "summary.json",
        json!({
            "profile": profile.name(),
            "alpha_c": scan.alpha_c,
            "alpha_M": scan.alpha_m,
            "max_re_lambda": scan.max_re_lambda,
            "unimodal": scan.unimodal(),
            "slope_sign_changes": scan.slope_sign_changes,
        }),
    );
    if cfg.output.svg {
        let pts = |f: fn(&shearlab::orrsommerfeld::ScanRow) -> f64| scan.rows.iter().map(|r| (r.alpha0, f(r))).collect::<Vec<_>>();
        out.svg(
            "fig_a.svg",
            &Plot { title: "Im c0 against alpha0", x_label: "alpha0", y_label: "Im c0", log_x: false, log_y: false, series: vec![("Im c0", pts(|r| r.c0.im))] },
        );
        out.svg(
            "fig_b.svg",
            &Plot { title: "Re lambda against alpha0", x_label: "alpha0", y_label: "alpha0 Im c0", log_x: false, log_y: false, series: vec![("Re lambda", pts(|r| r.re_lambda))] },
        );
    }
    Ok(())
}

fn spectrum(cfg: &RunConfig, profile: &dyn ShearProfile, out: &mut Outputs) -> Res<()> {
    let s = &cfg.spectrum;
    positive("spectrum.alpha", s.alpha)?;
    let r = &s.region;
    let records: Vec<serde_json::Value> = match s.method.as_str() {
        "rayleigh" => {
            if !(r.re_min < r.re_max && r.im_min < r.im_max) {
                return invalid("spectrum.region must have re_min < re_max and im_min < im_max");
            }
            if r.im_min < 1e-4 {
                return invalid("spectrum.region.im_min must be at least 1e-4");
            }
            let region = Region { re_min: r.re_min, re_max: r.re_max, im_min: r.im_min, im_max: r.im_max };
            point_spectrum(profile, s.alpha, region)?
                .iter()
                .map(|e| json!({"alpha": s.alpha, "re_c": e.c.re, "im_c": e.c.im, "residual": e.residual}))
                .collect()
        }
        "collocation" => {
            positive("spectrum.nu", s.nu)?;
            if !(64..=1024).contains(&s.n_modes) {
                return invalid("spectrum.n_modes must lie in [64, 1024]");
            }
            let kept = collocation_spectrum(profile, s.alpha, s.nu, s.n_modes)?;
            collocation_modes(profile, s.alpha, s.nu, s.n_modes)?
                .into_iter()
                .filter(|m| kept.contains(&m.c))
                .take(s.keep)
                .map(|m| json!({"alpha": s.alpha, "re_c": m.c.re, "im_c": m.c.im, "residual": m.residual}))
                .collect()
        }
        other => return invalid(format!("unknown spectrum.method '{other}' (expected rayleigh or collocation)")),
    };
    out.json("spectrum.json", json!({"profile": profile.name(), "method": s.method, "records": records}));
    Ok(())
}

fn build_grid(g: &GridSpec) -> Res<Vec<f64>> {
    positive("evolve.grid.y_max", g.y_max)?;
    match g.kind.as_str() {
        "uniform" => {
            if g.n_points < 16 {
                return invalid("evolve.grid.n_points must be at least 16");
            }
            Ok(uniform(g.y_max, g.n_points))
        }
        "refined" => {
            positive("evolve.grid.h_fine", g.h_fine)?;
            positive("evolve.grid.h_coarse", g.h_coarse)?;
            if !(g.fine_end > 0.0 && g.fine_end < g.y_max) {
                return invalid("evolve.grid.fine_end must lie inside (0, y_max)");
            }
            Ok(refined(g.y_max, g.fine_end, g.h_fine, g.h_coarse))
        }
        other => invalid(format!("unknown evolve.grid.kind '{other}' (expected uniform or refined)")),
    }
}

fn evolve(cfg: &RunConfig, profile: &dyn ShearProfile, out: &mut Outputs) -> Res<()> {
    let e = &cfg.evolve;
    positive("evolve.alpha", e.alpha)?;
    positive("evolve.dt", e.dt)?;
    positive("evolve.t_final", e.t_final)?;
    if e.n_outputs < 2 {
        return invalid("evolve.n_outputs must be at least 2");
    }
    if !matches!(e.mode.as_str(), "euler" | "ns" | "compare") {
        return invalid(format!("unknown evolve.mode '{}' (expected euler, ns or compare)", e.mode));
    }
    if e.mode == "ns" {
        positive("evolve.nu", e.nu)?;
    }
    let grid = build_grid(&e.grid)?;
    let contour = if e.contour.is_empty() {
        None
    } else {
        Some(ContourSpec { vertices: e.contour.iter().map(|v| C64::new(v[0], v[1])).collect(), reversed: false })
    };
    if e.mode == "compare" {
        if e.checkpoints.is_empty() || e.checkpoints.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return invalid("evolve.checkpoints must be a nonempty list of positive times");
        }
        positive("evolve.contour_height", e.contour_height)?;
    }

    // Initial vorticity.
    let (state, predicted) = match e.initial.as_str() {
        "bump" => {
            positive("evolve.bump_width", e.bump_width)?;
            let (c, w) = (e.bump_centre, e.bump_width);
            let omega = GridFunction::from_fn(&grid, |y| C64::new((-((y - c) / w).powi(2)).exp(), 0.0));
            (ModeState::new(e.alpha, omega)?, None)
        }
        "eigenmode" => {
            if e.mode != "ns" {
                return invalid("evolve.initial = eigenmode needs evolve.mode = ns");
            }
            let q = e.nu.powf(0.25);
            let c0 = solve_dispersion(e.alpha / q, profile, None)?;
            let point = solve_matched(profile, e.alpha, e.nu, c0 * q)?;
            let mode = eigenmode(profile, &point, &grid)?;
            (ModeState::new(e.alpha, mode.omega)?, Some(e.alpha * point.c.im))
        }
        other => return invalid(format!("unknown evolve.initial '{other}' (expected bump or eigenmode)")),
    };

    let mut times = vec![0.0];
    let t0 = e.t_final.min(1.0);
    times.extend(geometric_times(t0, e.t_final, e.n_outputs).into_iter().filter(|&t| t > 0.0));
    times.dedup();

    let mut summary = json!({"profile": profile.name(), "mode": e.mode, "alpha": e.alpha});
    match e.mode.as_str() {
        "euler" => {
            let traj = euler_trajectory(profile, &state, &times, e.dt)?;
            out.csv("trajectory.csv", |w, h| write_trajectory_csv(&traj, w, h));
            let last = traj.last().expect("states");
            out.csv("psi_final.csv", |w, h| last.psi.write_csv(w, h));
            match damping_diagnostics(profile, &traj) {
                Ok(d) => {
                    summary["decay_exponent"] = d.decay_exponent.into();
                    summary["vorticity_exponent"] = d.vorticity_exponent.into();
                    out.csv("omega_infinity.csv", |w, h| d.omega_infinity.write_csv(w, h));
                }
                Err(Error::InsufficientData(m)) => summary["damping"] = format!("not computed: {m}").into(),
                Err(err) => return Err(err.into()),
            }
            trajectory_plot(out, cfg, &traj);
        }
        "ns" => {
            let traj = ns_trajectory(profile, &state, e.nu, &times, e.dt)?;
            out.csv("trajectory.csv", |w, h| write_trajectory_csv(&traj, w, h));
            let last = traj.last().expect("states");
            out.csv("psi_final.csv", |w, h| last.psi.write_csv(w, h));
            summary["nu"] = e.nu.into();
            match growth_rate(&traj, 0.5 * e.t_final) {
                Ok(g) => summary["growth_rate"] = g.into(),
                Err(Error::InsufficientData(m)) => summary["growth_rate"] = format!("not computed: {m}").into(),
                Err(err) => return Err(err.into()),
            }
            if let Some(p) = predicted {
                summary["predicted_growth_rate"] = p.into();
            }
            trajectory_plot(out, cfg, &traj);
        }
        _ => {
            let (u_min, u_max) = grid.iter().map(|&y| profile.eval(C64::new(y, 0.0)).re).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| (a.min(u), b.max(u)));
            let contour = contour.unwrap_or_else(|| ContourSpec::standard(u_min, u_max, e.contour_height, 0.25));
            contour.validate(u_min, u_max)?;
            let traj = euler_trajectory(profile, &state, &e.checkpoints, e.dt)?;
            let psi = contour_evolve_vorticity(profile, e.alpha, &state.omega, &e.checkpoints, &contour)?;
            let gaps: Vec<f64> = traj.iter().zip(&psi).map(|(s, p)| p.sub(&s.psi).max_norm() / s.psi.max_norm()).collect();
            out.text("compare.csv", &{
                let mut s = String::from("t,rel_gap\n");
                for (t, g) in e.checkpoints.iter().zip(&gaps) {
                    s.push_str(&format!("{t:.12e},{g:.12e}\n"));
                }
                s
            });
            summary["checkpoints"] = json!(e.checkpoints);
            summary["rel_gaps"] = json!(gaps);
            summary["max_rel_gap"] = gaps.iter().copied().fold(0.0, f64::max).into();
        }
    }
    out.json("summary.json", summary);
    Ok(())
}

fn trajectory_plot(out: &mut Outputs, cfg: &RunConfig, traj: &[ModeState]) {
    if !cfg.output.svg {
        return;
    }
    let series = |k: usize| -> Vec<(f64, f64)> {
        traj.iter()
            .map(|s| {
                let n = s.norms();
                (s.time, [n.0, n.1, n.2][k])
            })
            .collect()
    };
    out.svg(
        "trajectory.svg",
        &Plot {
            title: "Mode norms",
            x_label: "t",
            y_label: "sup norm",
            log_x: true,
            log_y: true,
            series: vec![("psi", series(0)), ("dpsi", series(1)), ("omega", series(2))],
        },
    );
}

fn cascade(cfg: &RunConfig, out: &mut Outputs) -> Res<()> {
    let scenario: Scenario = cfg.cascade.scenario.parse()?;
    let nu = cfg.cascade.nu;
    if !(nu > 0.0 && nu < 1.0) {
        return invalid(format!("cascade.nu must lie in (0, 1) (got {nu})"));
    }
    let report = cascade_report(nu, scenario)?;
    out.csv("report.csv", |w, h| report.write_csv(w, h));
    out.text("report.txt", &report.to_text());
    Ok(())
}

fn green(cfg: &RunConfig, profile: &dyn ShearProfile, out: &mut Outputs) -> Res<()> {
    let g = &cfg.green;
    positive("green.alpha", g.alpha)?;
    positive("green.x", g.x)?;
    positive("green.y_max", g.y_max)?;
    if g.n_points < 2 {
        return invalid("green.n_points must be at least 2");
    }
    let c = C64::new(g.c[0], g.c[1]);
    let y = uniform(g.y_max, g.n_points);
    let values: Vec<shearlab::Result<C64>> = match g.operator.as_str() {
        "rayleigh" => shearlab::par::map(&y, |&yy| green_function(profile, g.alpha, c, g.x, yy)),
        "orr_sommerfeld" => {
            positive("green.nu", g.nu)?;
            let point = ViscousSpectralPoint::new(profile, g.alpha, c, g.nu)?;
            shearlab::par::map(&y, |&yy| os_green_function(profile, &point, g.x, yy))
        }
        other => return invalid(format!("unknown green.operator '{other}' (expected rayleigh or orr_sommerfeld)")),
    };
    let values: shearlab::Result<Vec<C64>> = values.into_iter().collect();
    let gf = GridFunction::new(y, values?).with_alpha(g.alpha);
    out.csv("green.csv", |w, h| gf.write_csv(w, h));
    if cfg.output.svg {
        let pts = |f: fn(C64) -> f64| gf.y.iter().zip(&gf.values).map(|(&y, &v)| (y, f(v))).collect::<Vec<_>>();
        out.svg(
            "green.svg",
            &Plot { title: "Green function", x_label: "y", y_label: "G(x, y)", log_x: false, log_y: false, series: vec![("Re", pts(|v| v.re)), ("Im", pts(|v| v.im))] },
        );
    }
    Ok(())
}

fn heat(cfg: &RunConfig, profile: &dyn ShearProfile, out: &mut Outputs) -> Res<()> {
    let h = &cfg.heat;
    positive("heat.y_max", h.y_max)?;
    positive("heat.dt", h.dt)?;
    if h.n_points < 3 {
        return invalid("heat.n_points must be at least 3");
    }
    let scheme = match h.scheme.as_str() {
        "crank_nicolson" => HeatScheme::CrankNicolson,
        "explicit" => HeatScheme::Explicit,
        other => return invalid(format!("unknown heat.scheme '{other}' (expected crank_nicolson or explicit)")),
    };
    let initial = HeatState::from_profile(profile, h.y_max, h.n_points);
    let fin = heat_evolve(initial.clone(), h.dt, h.steps, scheme)?;
    out.csv("heat_initial.csv", |w, hd| initial.write_csv(w, hd));
    out.csv("heat_final.csv", |w, hd| fin.write_csv(w, hd));
    out.json(
        "summary.json",
        json!({"profile": profile.name(), "time": fin.time, "gradient_mass_initial": initial.gradient_mass(), "gradient_mass_final": fin.gradient_mass()}),
    );
    if cfg.output.svg {
        let pts = |s: &HeatState| s.grid.iter().copied().zip(s.values.iter().copied()).collect::<Vec<_>>();
        out.svg(
            "heat.svg",
            &Plot { title: "Background profile", x_label: "y", y_label: "U", log_x: false, log_y: false, series: vec![("initial", pts(&initial)), ("final", pts(&fin))] },
        );
    }
    Ok(())
}
