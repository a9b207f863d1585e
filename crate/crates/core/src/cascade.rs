//! Exponent bookkeeping for the multilayer instability ladder.
//!
//! Every scale is a power of ν (exact rational), a power of log ν⁻¹ and a
//! symbolic prefactor. Reports are built by composing these, so the exponent
//! identities come out of the arithmetic rather than being typed in.

use crate::grid::GridFunction;
use crate::orrsommerfeld::DispersionScan;
use crate::profiles::TwoExponential;
use crate::{param, Error, Result, C64};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

/// Exact rational, re-exported for callers building exponents.
pub type Q = Rational64;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleExpr {
    /// Symbolic prefactors with rational powers, e.g. {"U_+": 1, "C0": 1}.
    pub prefactor: BTreeMap<String, Q>,
    /// Power of ν.
    pub exponent: Q,
    /// Power of log ν⁻¹.
    pub log_power: i64,
}

impl ScaleExpr {
    pub fn one() -> Self {
        ScaleExpr { prefactor: BTreeMap::new(), exponent: q(0, 1), log_power: 0 }
    }

    /// ν^{n/d}.
    pub fn nu(n: i64, d: i64) -> Self {
        ScaleExpr { exponent: q(n, d), ..Self::one() }
    }

    pub fn nu_pow(e: Q) -> Self {
        ScaleExpr { exponent: e, ..Self::one() }
    }

    /// A bare symbolic constant such as U_+ or C0.
    pub fn tag(name: &str) -> Self {
        let mut prefactor = BTreeMap::new();
        prefactor.insert(name.to_string(), q(1, 1));
        ScaleExpr { prefactor, ..Self::one() }
    }

    /// log ν⁻¹.
    pub fn log_inv_nu() -> Self {
        ScaleExpr { log_power: 1, ..Self::one() }
    }

    /// ν^exponent (log ν⁻¹)^log_power; prefactors are symbols and count as one.
    pub fn eval(&self, nu: f64) -> f64 {
        let e = *self.exponent.numer() as f64 / *self.exponent.denom() as f64;
        nu.powf(e) * (1.0 / nu).ln().powi(self.log_power as i32)
    }

    /// Ordering as ν → 0: Greater means asymptotically larger.
    pub fn cmp_small_nu(&self, other: &Self) -> std::cmp::Ordering {
        other.exponent.cmp(&self.exponent).then(self.log_power.cmp(&other.log_power))
    }

    fn merge(mut self, other: &Self, sign: i64) -> Self {
        for (k, v) in &other.prefactor {
            let e = self.prefactor.entry(k.clone()).or_insert(q(0, 1));
            *e += *v * sign;
        }
        self.prefactor.retain(|_, v| *v != q(0, 1));
        self
    }
}

pub fn scale_mul(a: &ScaleExpr, b: &ScaleExpr) -> ScaleExpr {
    let mut out = a.clone().merge(b, 1);
    out.exponent = a.exponent + b.exponent;
    out.log_power = a.log_power + b.log_power;
    out
}

pub fn scale_div(a: &ScaleExpr, b: &ScaleExpr) -> ScaleExpr {
    let mut out = a.clone().merge(b, -1);
    out.exponent = a.exponent - b.exponent;
    out.log_power = a.log_power - b.log_power;
    out
}

/// a^r. The log power must stay integral.
pub fn scale_pow(a: &ScaleExpr, r: Q) -> Result<ScaleExpr> {
    let lp = Q::from_integer(a.log_power) * r;
    if !lp.is_integer() {
        return Err(Error::Domain(format!("(log 1/nu)^{} is not an integer power", lp)));
    }
    Ok(ScaleExpr {
        prefactor: a.prefactor.iter().map(|(k, v)| (k.clone(), *v * r)).filter(|(_, v)| *v != q(0, 1)).collect(),
        exponent: a.exponent * r,
        log_power: lp.to_integer(),
    })
}

fn pow(a: &ScaleExpr, r: Q) -> ScaleExpr {
    scale_pow(a, r).expect("no log factor")
}

fn fmt_q(e: Q) -> String {
    if e.is_integer() {
        e.to_integer().to_string()
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

impl fmt::Display for ScaleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, v) in &self.prefactor {
            parts.push(if *v == q(1, 1) { k.clone() } else { format!("{k}^{{{}}}", fmt_q(*v)) });
        }
        if self.exponent != q(0, 1) {
            parts.push(format!("nu^{{{}}}", fmt_q(self.exponent)));
        }
        match self.log_power {
            0 => {}
            1 => parts.push("log(1/nu)".into()),
            p => parts.push(format!("log(1/nu)^{p}")),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

/// Viscosity after (T, X, Y) = ν^{−a}(t, x, y): ν^{1−a}.
pub fn rescale_viscosity(a: Q) -> Result<ScaleExpr> {
    if a < q(0, 1) || a >= q(1, 1) {
        return param(format!("rescaling exponent {} outside [0, 1)", fmt_q(a)));
    }
    Ok(ScaleExpr::nu_pow(q(1, 1) - a))
}

/// length · velocity / viscosity.
pub fn reynolds_number(length: &ScaleExpr, velocity: &ScaleExpr, viscosity: &ScaleExpr) -> ScaleExpr {
    scale_div(&scale_mul(length, velocity), viscosity)
}

// ---------------------------------------------------------------------------
// Sublayer construction

/// μ = (−c₁)^{1/2} on the principal branch; the corrector decays only if Re μ > 0.
pub fn corrector_rate(c1: C64) -> Result<C64> {
    let mu = (-c1).sqrt();
    if !(mu.re > 0.0) {
        return Err(Error::Branch(format!("Re mu = {} for c1 = {c1}; no decaying corrector", mu.re)));
    }
    if !(c1.im > 0.0) {
        return param(format!("c1 = {c1} is not an unstable mode (Im c1 <= 0)"));
    }
    Ok(mu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublayerCorrector {
    pub mu: C64,
    /// Stream function φ₁(Y₁).
    pub phi: GridFunction,
    /// Horizontal velocity ∂_{Y₁}φ₁.
    pub u: GridFunction,
}

/// φ₁(Y₁) = −∂φ₀(0) ν₁^{1/2} μ⁻¹ (1 − e^{−ν₁^{−1/2} μ Y₁}), the viscous layer that
/// cancels the slip ∂φ₀(0) of the inviscid mode at the wall.
pub fn sublayer_corrector(dphi0: C64, c1: C64, nu1: f64, grid: &[f64]) -> Result<SublayerCorrector> {
    if !(nu1 > 0.0 && nu1 < 1.0) {
        return param("nu1 must lie in (0, 1)");
    }
    let mu = corrector_rate(c1)?;
    let s = nu1.sqrt();
    let phi = GridFunction::from_fn(grid, |y| -dphi0 * s / mu * (1.0 - (-mu * y / s).exp()));
    let u = GridFunction::from_fn(grid, |y| -dphi0 * (-mu * y / s).exp());
    Ok(SublayerCorrector { mu, phi, u })
}

/// Frozen second-layer profile U₁(0, Y₂) = −2 Re[∂φ₀(0)(1 − e^{−μY₂})].
pub fn second_layer_profile(dphi0: C64, c1: C64) -> Result<TwoExponential> {
    let mu = corrector_rate(c1)?;
    if dphi0.norm() == 0.0 {
        return param("dphi0 must be nonzero");
    }
    Ok(TwoExponential { amp: -dphi0, rate: mu })
}

/// σ = ∂(αc)/∂α at the scan row nearest α₀, by a five-point centred stencil.
pub fn group_velocity(scan: &DispersionScan, alpha0: f64) -> Result<C64> {
    let rows = &scan.rows;
    if rows.len() < 5 {
        return Err(Error::InsufficientData("group velocity needs five or more scan rows".into()));
    }
    let k = rows
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.alpha0 - alpha0).abs().total_cmp(&(b.1.alpha0 - alpha0).abs()))
        .map(|(k, _)| k)
        .expect("nonempty");
    if k < 2 || k + 2 >= rows.len() {
        return Err(Error::Domain(format!("alpha0 = {alpha0} has fewer than two scan rows on one side; the stencil does not fit")));
    }
    let h = rows[k + 1].alpha0 - rows[k].alpha0;
    for j in k - 2..k + 2 {
        if ((rows[j + 1].alpha0 - rows[j].alpha0) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::Domain("scan rows are not equally spaced around alpha0".into()));
        }
    }
    if (rows[k].alpha0 - alpha0).abs() > 0.5 * h.abs() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("alpha0 = {alpha0} lies outside the scan")));
    }
    let f = |j: usize| rows[j].c0 * rows[j].alpha0;
    Ok((f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)) / (12.0 * h))
}

/// Sign of Re A in the amplitude equation φ' = λφ + A|φ|²φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicSign {
    Negative,
    Zero,
    Positive,
}

/// Linear rate of the viscous Prandtl-layer instability in the amplitude equation.
fn bifurcation_rate() -> ScaleExpr {
    pow(&prandtl_viscosity(), q(1, 4))
}

/// Saturated amplitude: |φ|² ∼ λ when cubic terms tame, |φ|⁴ ∼ λ when only quintic
/// terms do, O(1) otherwise.
pub fn saturation_amplitude(sign: CubicSign) -> ScaleExpr {
    match sign {
        CubicSign::Negative => pow(&bifurcation_rate(), q(1, 2)),
        CubicSign::Zero => pow(&bifurcation_rate(), q(1, 4)),
        CubicSign::Positive => ScaleExpr::one(),
    }
}

// ---------------------------------------------------------------------------
// Layer reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    EulerUnstable,
    EulerStable,
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler_unstable" => Ok(Scenario::EulerUnstable),
            "euler_stable" => Ok(Scenario::EulerStable),
            _ => param(format!("unknown scenario '{s}' (expected euler_unstable or euler_stable)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    pub label: String,
    pub scale: ScaleExpr,
    pub anchor: String,
}

fn entry(label: &str, scale: ScaleExpr, anchor: &str) -> ScaleEntry {
    ScaleEntry { label: label.into(), scale, anchor: anchor.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub scenario: Scenario,
    pub nu: f64,
    pub vertical_scales: Vec<ScaleEntry>,
    pub horizontal_scales: Vec<ScaleEntry>,
    pub time_scales: Vec<ScaleEntry>,
    pub reynolds: Vec<ScaleEntry>,
    /// Time T^ν at which the instability is fully developed.
    pub horizon: ScaleEntry,
    pub amplitudes: Vec<ScaleEntry>,
    pub notes: Vec<String>,
}

/// ν₁, the viscosity seen inside the Prandtl layer.
fn prandtl_viscosity() -> ScaleExpr {
    rescale_viscosity(q(1, 2)).expect("valid")
}

/// Viscosity in the rescaled variables of layer `level` (1: Prandtl layer, 2: viscous sublayer).
/// There is no third layer: the second instability is too weak to seed one.
pub fn layer_viscosity(level: u32) -> Result<ScaleExpr> {
    match level {
        0 => Ok(ScaleExpr::nu(1, 1)),
        1 => rescale_viscosity(q(1, 2)),
        2 => rescale_viscosity(q(3, 4)),
        _ => Err(Error::Breakdown(format!(
            "layer {level} requested: the second-layer instability is too small in amplitude to build a further sublayer"
        ))),
    }
}

/// Scales of one viscous Orr–Sommerfeld instability living in a layer of
/// thickness `depth` with rescaled viscosity `visc`: lower-branch wavenumber
/// and phase speed ∼ visc^{1/4}, growth ∼ visc^{1/2}.
struct ViscousMode {
    wavenumber: ScaleExpr,
    speed: ScaleExpr,
    growth: ScaleExpr,
}

fn viscous_mode(visc: &ScaleExpr) -> ViscousMode {
    ViscousMode { wavenumber: pow(visc, q(1, 4)), speed: pow(visc, q(1, 4)), growth: pow(visc, q(1, 2)) }
}

pub fn cascade_report(nu: f64, scenario: Scenario) -> Result<LayerReport> {
    if !(nu > 0.0 && nu < 1.0) {
        return param("nu must lie in (0, 1)");
    }
    let one = ScaleExpr::one();
    let u_plus = ScaleExpr::tag("U_+");
    let nu_s = layer_viscosity(0)?;
    let nu1 = layer_viscosity(1)?;
    // The Prandtl layer thickness equals its rescaled viscosity: Y₁ = ν^{−1/2}y.
    let prandtl = nu1.clone();
    let horizon = entry("T^nu", scale_mul(&ScaleExpr::tag("C0"), &ScaleExpr::log_inv_nu()), "time for the instability to reach full size");
    let mut notes = vec!["prefactors are symbolic; value_at_nu evaluates the nu and log(1/nu) powers only".to_string()];
    let report = match scenario {
        Scenario::EulerUnstable => {
            // Inviscid Rayleigh mode of the Prandtl layer: O(1) in rescaled units.
            let t1 = prandtl.clone();
            let x1 = prandtl.clone();
            let sub = scale_mul(&prandtl, &pow(&nu1, q(1, 2)));
            let nu2 = layer_viscosity(2)?;
            let mode2 = viscous_mode(&nu2);
            let t2 = scale_div(&sub, &mode2.growth);
            let x2 = scale_div(&sub, &mode2.wavenumber);
            let critical = scale_mul(&sub, &mode2.speed);
            // Group velocity ∼ c₂, travel over T_insta,2.
            let travel = scale_mul(&sub, &scale_div(&mode2.speed, &mode2.growth));
            notes.push(format!("second-layer travel distance {} stays below the Prandtl thickness {}", travel, prandtl));
            notes.push("a third sublayer is not constructed".into());
            LayerReport {
                scenario,
                nu,
                vertical_scales: vec![
                    entry("domain", one.clone(), "domain size"),
                    entry("prandtl_layer", prandtl.clone(), "Prandtl boundary layer"),
                    entry("viscous_sublayer", sub.clone(), "viscous sublayer correcting the Rayleigh mode"),
                    entry("critical_layer_2", critical, "critical layer of the sublayer instability"),
                ],
                horizontal_scales: vec![
                    entry("domain", one.clone(), "domain size"),
                    entry("rayleigh_wavelength", x1, "period of the Rayleigh instability"),
                    entry("sublayer_wavelength", x2, "period of the sublayer instability"),
                ],
                time_scales: vec![
                    entry("background", one.clone(), "evolution of the background layer"),
                    entry("rayleigh_growth", t1, "growth time of the Rayleigh instability"),
                    entry("sublayer_growth", t2, "growth time of the sublayer instability"),
                ],
                reynolds: vec![
                    entry("prandtl_layer", reynolds_number(&prandtl, &u_plus, &nu_s), "Reynolds number of the Prandtl layer"),
                    entry("viscous_sublayer", reynolds_number(&sub, &u_plus, &nu_s), "Reynolds number of the sublayer"),
                ],
                horizon,
                amplitudes: vec![entry("final_amplitude", one.clone(), "instability reaches order one")],
                notes,
            }
        }
        Scenario::EulerStable => {
            let mode1 = viscous_mode(&nu1);
            let recirculation = scale_div(&prandtl, &mode1.wavenumber);
            let critical = scale_mul(&prandtl, &mode1.speed);
            let t1 = scale_mul(&prandtl, &scale_div(&one, &mode1.growth));
            notes.push("horizontal entry is the rescaled wavenumber of the viscous mode".into());
            notes.push("the sign of Re A is taken as an input, not computed here".into());
            LayerReport {
                scenario,
                nu,
                vertical_scales: vec![
                    entry("domain", one.clone(), "domain size"),
                    entry("recirculation_layer", recirculation, "recirculation layer of the viscous mode"),
                    entry("prandtl_layer", prandtl.clone(), "Prandtl boundary layer"),
                    entry("critical_layer", critical, "critical layer created by the instability"),
                ],
                horizontal_scales: vec![
                    entry("domain", one.clone(), "domain size"),
                    entry("instability_periodicity", mode1.wavenumber.clone(), "periodicity of the viscous instability"),
                ],
                time_scales: vec![
                    entry("background", one.clone(), "evolution of the background layer"),
                    entry("viscous_growth", t1, "growth time of the viscous instability"),
                ],
                reynolds: vec![entry("prandtl_layer", reynolds_number(&prandtl, &u_plus, &nu_s), "Reynolds number of the Prandtl layer")],
                horizon,
                amplitudes: vec![
                    entry("re_a_negative", saturation_amplitude(CubicSign::Negative), "cubic saturation"),
                    entry("re_a_zero", saturation_amplitude(CubicSign::Zero), "quintic saturation"),
                    entry("re_a_positive", saturation_amplitude(CubicSign::Positive), "no saturation below order one"),
                ],
                notes,
            }
        }
    };
    Ok(report)
}

impl LayerReport {
    /// All entries with their quantity column.
    pub fn rows(&self) -> Vec<(&'static str, &ScaleEntry)> {
        let mut out = Vec::new();
        for (name, list) in [
            ("vertical", &self.vertical_scales),
            ("horizontal", &self.horizontal_scales),
            ("time", &self.time_scales),
            ("reynolds", &self.reynolds),
        ] {
            out.extend(list.iter().map(|e| (name, e)));
        }
        out.push(("horizon", &self.horizon));
        out.extend(self.amplitudes.iter().map(|e| ("amplitude", e)));
        out
    }

    /// CSV with columns `quantity,label,exponent,log_power,value_at_nu,paper_anchor`.
    pub fn write_csv(&self, out: &mut dyn Write, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        writeln!(out, "quantity,label,exponent,log_power,value_at_nu,paper_anchor")?;
        for (quantity, e) in self.rows() {
            writeln!(
                out,
                "{quantity},{},{},{},{:.6e},{}",
                e.label,
                fmt_q(e.scale.exponent),
                e.scale.log_power,
                e.scale.eval(self.nu),
                e.anchor
            )?;
        }
        Ok(())
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let rows = self.rows();
        let w = rows.iter().map(|(_, e)| e.label.len()).max().unwrap_or(5);
        for (quantity, e) in rows {
            let expr = e.scale.to_string();
            s.push_str(&format!("{quantity:<10} {:<w$} {expr:<22} {:>12.4e}  {}\n", e.label, e.scale.eval(self.nu), e.anchor));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}
