use std::path::Path;
use std::process::{Command, Output};

fn shearlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shearlab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("SHEARLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn stderr_record(o: &Output) -> serde_json::Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).expect("error record is JSON")
}

#[test]
fn dispersion_default_run() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["dispersion", "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "dispersion.csv");
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# shearlab "));
    assert!(lines.next().unwrap().starts_with("# config sha256 "));
    assert_eq!(csv.lines().find(|l| !l.starts_with('#')).unwrap(), "alpha0,re_c0,im_c0,re_lambda");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 201);
    let s = json(d.path(), "summary.json");
    let am = s["alpha_M"].as_f64().unwrap();
    assert!((2.5..=3.1).contains(&am), "alpha_M = {am}");
    assert!(s["alpha_c"].is_number());
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    for f in ["fig_a.svg", "fig_b.svg"] {
        let svg = read(d.path(), f);
        assert!(svg.contains("config sha256") && svg.contains("<polyline"));
    }
}

#[test]
fn dispersion_empty_range_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["dispersion", "--set", "dispersion.alpha_min=3", "--set", "dispersion.alpha_max=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_record(&o)["error"], "config");
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 0, "no partial outputs");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["dispersion", "--set", "dispersion.alpha_min=2", "--set", "dispersion.alpha_max=4", "--set", "dispersion.n_points=50"];
    assert!(shearlab(a.path(), &args).status.success());
    assert!(shearlab(b.path(), &args).status.success());
    assert_eq!(read(a.path(), "dispersion.csv"), read(b.path(), "dispersion.csv"));
    assert_eq!(read(a.path(), "summary.json"), read(b.path(), "summary.json"));
}

#[test]
fn config_file_and_overrides_change_the_hash() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    std::fs::write(&cfg, r#"{"cascade": {"scenario": "euler_stable"}}"#).unwrap();
    let out1 = d.path().join("one");
    let out2 = d.path().join("two");
    assert!(shearlab(&out1, &["cascade", "--config", cfg.to_str().unwrap()]).status.success());
    assert!(shearlab(&out2, &["cascade", "--config", cfg.to_str().unwrap(), "--set", "cascade.nu=1e-6"]).status.success());
    let h = |p: &Path| read(p, "report.csv").lines().nth(1).unwrap().to_string();
    assert_ne!(h(&out1), h(&out2));
    assert!(read(&out1, "report.csv").contains("1/16"));
}

#[test]
fn unknown_keys_and_bad_files_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["cascade", "--set", "cascade.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = d.path().join("bad.json");
    std::fs::write(&cfg, r#"{"cascade": {"nu": 1e-8, "extra": true}}"#).unwrap();
    let o = shearlab(d.path(), &["cascade", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "not json").unwrap();
    assert_eq!(shearlab(d.path(), &["cascade", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn cascade_tables() {
    let d = tempfile::tempdir().unwrap();
    assert!(shearlab(d.path(), &["cascade"]).status.success());
    let csv = read(d.path(), "report.csv");
    assert!(csv.lines().any(|l| l == "quantity,label,exponent,log_power,value_at_nu,paper_anchor"));
    let exps: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    for e in ["1/2", "3/4", "13/16", "11/16", "5/8", "-1/4"] {
        assert!(exps.contains(&e), "missing {e} in {exps:?}");
    }
    assert!(read(d.path(), "report.txt").contains("13/16"));

    let d = tempfile::tempdir().unwrap();
    assert!(shearlab(d.path(), &["cascade", "--set", "cascade.scenario=euler_stable"]).status.success());
    let csv = read(d.path(), "report.csv");
    for e in ["1/2", "5/8", "1/16", "1/32"] {
        assert!(csv.lines().any(|l| l.split(',').nth(2) == Some(e)), "missing {e}");
    }
}

#[test]
fn unknown_scenario_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["cascade", "--set", "cascade.scenario=sideways"]);
    assert_eq!(o.status.code(), Some(2));
    let r = stderr_record(&o);
    assert_eq!(r["error"], "validation");
    assert_eq!(r["command"], "cascade");
}

#[test]
fn env_var_sets_the_default_directory() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shearlab")).arg("cascade").env("SHEARLAB_OUT_DIR", d.path()).output().unwrap();
    assert!(o.status.success());
    assert!(d.path().join("report.csv").exists());
    // The flag wins over the variable.
    let e = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shearlab"))
        .args(["cascade", "--set", "cascade.scenario=euler_stable", "--out"])
        .arg(e.path())
        .env("SHEARLAB_OUT_DIR", d.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(e.path().join("report.csv").exists());
    assert!(read(d.path(), "report.csv").contains("13/16"), "first run left untouched");
}

#[test]
fn evolve_zero_dt_is_rejected_before_work() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["evolve", "--set", "evolve.dt=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 0);
}

#[test]
fn evolve_euler_short_run() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(
        d.path(),
        &["evolve", "--profile", "tanh", "--set", "evolve.t_final=5", "--set", "evolve.n_outputs=6", "--set", "evolve.grid.n_points=512", "--svg"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read(d.path(), "trajectory.csv");
    assert!(t.lines().any(|l| l == "t,norm_psi_inf,norm_dpsi_inf,norm_omega_inf"));
    assert_eq!(t.lines().filter(|l| !l.starts_with('#')).count(), 1 + 7);
    let s = json(d.path(), "summary.json");
    assert!(s["damping"].as_str().unwrap().starts_with("not computed"));
    assert!(read(d.path(), "psi_final.csv").lines().any(|l| l == "y,Re,Im"));
    assert!(d.path().join("trajectory.svg").exists());
}

#[test]
fn evolve_compare_mode_reports_small_gaps() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(
        d.path(),
        &[
            "evolve",
            "--profile",
            "tanh",
            "--set",
            "evolve.mode=compare",
            "--set",
            "evolve.grid.y_max=20",
            "--set",
            "evolve.grid.n_points=1024",
            "--set",
            "evolve.checkpoints=[1,5]",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let gap = json(d.path(), "summary.json")["max_rel_gap"].as_f64().unwrap();
    assert!(gap <= 1e-3, "gap {gap}");
}

#[test]
fn contour_touching_the_spectrum_exits_3() {
    // Contour errors are reported as numerical failures, like a node landing on an eigenvalue.
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(
        d.path(),
        &["evolve", "--set", "evolve.mode=compare", "--set", "evolve.grid.n_points=256", "--set", "evolve.contour=[[-0.5,0.2],[0.5,0.0],[1.5,0.2]]"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_record(&o)["error"], "numerical");
}

#[test]
fn spectrum_rayleigh_by_profile() {
    let d = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--profile", "inflected", "--set", "spectrum.alpha=0.6", "--set", "spectrum.region.re_max=1.7", "--set", "spectrum.region.im_max=0.6"];
    let o = shearlab(d.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = json(d.path(), "spectrum.json")["records"].as_array().unwrap().clone();
    assert!(!recs.is_empty());
    for k in ["alpha", "re_c", "im_c", "residual"] {
        assert!(recs[0][k].is_number());
    }

    let e = tempfile::tempdir().unwrap();
    assert!(shearlab(e.path(), &["spectrum"]).status.success());
    assert!(json(e.path(), "spectrum.json")["records"].as_array().unwrap().is_empty());
}

#[test]
fn spectrum_malformed_region() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["spectrum", "--set", "spectrum.region.im_max=-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = shearlab(d.path(), &["spectrum", "--set", "spectrum.method=magic"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn green_dumps_both_operators() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["green", "--set", "green.n_points=41"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g = read(d.path(), "green.csv");
    let rows: Vec<&str> = g.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "y,Re,Im");
    assert_eq!(rows.len(), 42);
    // G vanishes at the wall.
    let wall: Vec<f64> = rows[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!(wall[1].abs() < 1e-12 && wall[2].abs() < 1e-12);

    let e = tempfile::tempdir().unwrap();
    let o = shearlab(e.path(), &["green", "--set", "green.operator=orr_sommerfeld", "--set", "green.n_points=21", "--set", "green.nu=1e-4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(e.path(), "green.csv").lines().filter(|l| !l.starts_with('#')).count(), 22);
}

#[test]
fn profile_heat_run() {
    let d = tempfile::tempdir().unwrap();
    let o = shearlab(d.path(), &["profile", "--set", "heat.steps=10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = read(d.path(), "heat_final.csv");
    assert!(f.lines().any(|l| l == "y,U"));
    assert!(f.starts_with("# shearlab "));
    let s = json(d.path(), "summary.json");
    assert!(s["gradient_mass_final"].as_f64().unwrap() <= s["gradient_mass_initial"].as_f64().unwrap() + 1e-12);
    let o = shearlab(d.path(), &["profile", "--set", "heat.scheme=leapfrog"]);
    assert_eq!(o.status.code(), Some(2));
}
