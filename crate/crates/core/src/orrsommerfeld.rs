//! Orr–Sommerfeld: viscous bases assembled from Rayleigh and Airy pieces, the
//! Airy/Tietjens dispersion relation, growth scans, band extraction, eigenmodes,
//! the Green function, and a collocation solver used as an independent check.
//!
//! OS(ψ) = (U − c)(ψ'' − α²ψ) − U''ψ − ε(∂² − α²)²ψ with ε = ν/(iα).

use crate::grid::{GridFunction, Y_MAX};
use crate::profiles::{critical_point, ShearProfile};
use crate::rayleigh::{check_far_field, decaying_states, RayleighOde, WallPath};
use crate::specialfn::{airy_ai_family, airy_bi_family, tietjens_complex, AiryFamily, MAX_ABS_Z};
use crate::taylor::{self, Ode2, State};
use crate::{par, param, Error, Result, C64, I};
use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Solve};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// A phase speed c at wavenumber α and viscosity ν, with the derived viscous scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscousSpectralPoint {
    pub alpha: f64,
    pub c: C64,
    pub nu: f64,
    /// ν/(iα).
    pub epsilon: C64,
    /// Principal cube root of iαU'(y_c)/ν.
    pub gamma: C64,
    pub y_c: C64,
    /// −iαc.
    pub lambda: C64,
}

impl ViscousSpectralPoint {
    pub fn new(profile: &dyn ShearProfile, alpha: f64, c: C64, nu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return param("alpha must be positive");
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return param("nu must be positive");
        }
        let y_c = critical_point(profile, c)?;
        let gamma = (I * alpha * profile.d1(y_c) / nu).cbrt();
        let arg = gamma.arg();
        if !(arg > 0.0 && arg < PI / 3.0) {
            return Err(Error::Branch(format!("arg gamma = {arg:.4} outside (0, pi/3); U'(y_c) must be near the positive axis")));
        }
        Ok(ViscousSpectralPoint { alpha, c, nu, epsilon: C64::new(nu, 0.0) / (I * alpha), gamma, y_c, lambda: -I * alpha * c })
    }
}

/// Value and first three derivatives.
pub type Jet4 = [C64; 4];

fn airy_jet(f: &AiryFamily, g: C64) -> Jet4 {
    [f.int2, g * f.int1, g * g * f.f, g * g * g * f.fp]
}

/// Ai(2, γ(y − y_c)) and its y-derivatives.
pub fn fast_decaying_jet(point: &ViscousSpectralPoint, y: C64) -> Result<Jet4> {
    let eta = point.gamma * (y - point.y_c);
    if eta.norm() > 0.99 * MAX_ABS_Z {
        // Deep in the decaying sector everything underflows.
        if eta.arg().abs() < 2.0 * PI / 3.0 {
            return Ok([C64::new(0.0, 0.0); 4]);
        }
        return Err(Error::Range(format!("fast solution argument {eta} too large")));
    }
    Ok(airy_jet(&airy_ai_family(eta)?, point.gamma))
}

/// Bi(2, γ(y − y_c)) and its y-derivatives; grows away from the wall.
pub fn fast_growing_jet(point: &ViscousSpectralPoint, y: C64) -> Result<Jet4> {
    let eta = point.gamma * (y - point.y_c);
    if eta.norm() > 0.99 * MAX_ABS_Z {
        return Err(Error::Range(format!("growing fast solution argument {eta} too large")));
    }
    Ok(airy_jet(&airy_bi_family(eta)?, point.gamma))
}

fn require_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return param("grid must be strictly increasing, start at y >= 0 and have two or more points");
    }
    Ok(())
}

/// Points per fast scale |γ|⁻¹ required inside the critical layer.
const LAYER_POINTS: f64 = 8.0;

fn check_layer_resolution(point: &ViscousSpectralPoint, grid: &[f64], what: &str) -> Result<()> {
    let g = point.gamma.norm();
    let (lo, hi) = (point.y_c.re - LAYER_POINTS / g, point.y_c.re + LAYER_POINTS / g);
    let worst = grid
        .windows(2)
        .filter(|w| w[1] >= lo && w[0] <= hi)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if worst * g * LAYER_POINTS > 1.0 {
        return Err(Error::Resolution(format!(
            "{what}: spacing {worst:.3e} near the critical layer exceeds |gamma|^-1/{LAYER_POINTS} = {:.3e}",
            1.0 / (g * LAYER_POINTS)
        )));
    }
    Ok(())
}

/// Leading-order fast decaying solution ψ_{f,−}(y) = Ai(2, γ(y − y_c)).
pub fn fast_solution(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, grid: &[f64]) -> Result<GridFunction> {
    let _ = profile;
    require_grid(grid)?;
    if point.gamma.norm() < 10.0 {
        return param(format!("|gamma| = {:.3} < 10: outside the asymptotic regime", point.gamma.norm()));
    }
    check_layer_resolution(point, grid, "fast solution")?;
    let vals: Result<Vec<C64>> = grid.iter().map(|&y| Ok(fast_decaying_jet(point, C64::new(y, 0.0))?[0])).collect();
    Ok(GridFunction::new(grid.to_vec(), vals?).with_alpha(point.alpha))
}

/// Viscous corrector ψ^c of the slow solution, solving ((U − c) − ε∂²)∂²ψ^c = ε Diff(ψ^s)
/// on a uniform window around the critical layer, with ψ^c → 0 above the layer.
struct Corrector {
    y: Vec<f64>,
    /// ψ^c, ∂ψ^c, ∂²ψ^c at the window nodes.
    val: Vec<[C64; 3]>,
    /// max|ψ^c| / max|ψ^s| over the inner layer.
    ratio: f64,
}

impl Corrector {
    fn at(&self, y: f64) -> [C64; 3] {
        let n = self.y.len();
        let zero = C64::new(0.0, 0.0);
        if y >= self.y[n - 1] {
            return [zero; 3];
        }
        if y <= self.y[0] {
            let v = self.val[0];
            return [v[0] + v[1] * (y - self.y[0]), v[1], zero];
        }
        let h = self.y[1] - self.y[0];
        let j = (((y - self.y[0]) / h).floor() as usize).min(n - 2);
        let t = (y - self.y[j]) / h;
        let (a, b) = (self.val[j], self.val[j + 1]);
        // Cubic Hermite for ψ^c from (ψ^c, ∂ψ^c); linear for the rest.
        let (h00, h10, h01, h11) =
            (2.0 * t.powi(3) - 3.0 * t * t + 1.0, t.powi(3) - 2.0 * t * t + t, -2.0 * t.powi(3) + 3.0 * t * t, t.powi(3) - t * t);
        let v = a[0] * h00 + a[1] * (h10 * h) + b[0] * h01 + b[1] * (h11 * h);
        let d = a[1] * (1.0 - t) + b[1] * t;
        let d2 = a[2] * (1.0 - t) + b[2] * t;
        [v, d, d2]
    }
}

/// Half-width of the corrector window in units of |γ|⁻¹, and nodes per unit.
const WINDOW: f64 = 16.0;
const WINDOW_DENSITY: f64 = 16.0;

fn solve_tridiagonal(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64]) -> Vec<C64> {
    let n = diag.len();
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { C64::new(0.0, 0.0) };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn corrector(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, y_max: f64) -> Result<Corrector> {
    let g = point.gamma.norm();
    let half = WINDOW / g;
    let lo = point.y_c.re - half;
    let hi = (point.y_c.re + half).min(0.5 * y_max);
    // Fixed node count keeps ψ^c smooth in c.
    let n = (2.0 * WINDOW * WINDOW_DENSITY) as usize + 1;
    let h = (hi - lo) / (n - 1) as f64;
    let y: Vec<f64> = (0..n).map(|j| lo + h * j as f64).collect();
    let alpha = point.alpha;
    let a2 = alpha * alpha;
    let states = decaying_states(profile, alpha, point.c, y_max, &y, WallPath::Below)?;
    let ode = RayleighOde::new(profile, alpha, point.c);
    let eps = point.epsilon;
    // ε Diff ψ^s with Diff ψ = g'' − α²g, g = Rψ, R = U''/(U − c) = q − α².
    let mut f = vec![C64::new(0.0, 0.0); n];
    let mut diag = vec![C64::new(0.0, 0.0); n];
    let mut off = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let z = C64::new(y[j], 0.0);
        let q = ode.q_jet(z, 2);
        let (r0, r1, r2) = (q[0] - a2, q[1], 2.0 * q[2]);
        let [p, dp] = states[j];
        let d2p = q[0] * p;
        let gg = r0 * p;
        let g2 = r2 * p + 2.0 * r1 * dp + r0 * d2p;
        f[j] = eps * (g2 - a2 * gg);
        diag[j] = profile.eval(z) - point.c + 2.0 * eps / (h * h);
        off[j] = -eps / (h * h);
    }
    // Dirichlet ends.
    diag[0] = C64::new(1.0, 0.0);
    diag[n - 1] = C64::new(1.0, 0.0);
    f[0] = C64::new(0.0, 0.0);
    f[n - 1] = C64::new(0.0, 0.0);
    let mut sub = off.clone();
    let mut sup = off;
    sub[0] = C64::new(0.0, 0.0);
    sup[0] = C64::new(0.0, 0.0);
    sub[n - 1] = C64::new(0.0, 0.0);
    sup[n - 1] = C64::new(0.0, 0.0);
    let phi = solve_tridiagonal(&sub, &diag, &sup, &f);
    // ψ^c(y) = ∫_y^hi (t − y) φ(t) dt via two trapezoid sweeps from the top.
    let mut i1 = vec![C64::new(0.0, 0.0); n];
    let mut i2 = vec![C64::new(0.0, 0.0); n];
    for j in (0..n - 1).rev() {
        i1[j] = i1[j + 1] + (phi[j] + phi[j + 1]) * (0.5 * h);
        i2[j] = i2[j + 1] + (i1[j] + i1[j + 1]) * (0.5 * h);
    }
    let scale = point.profile_scale(profile);
    let val: Vec<[C64; 3]> = (0..n).map(|j| [i2[j] * scale, -i1[j] * scale, phi[j] * scale]).collect();
    let inner = 3.0 / g;
    let (mut mc, mut ms) = (0.0f64, 0.0f64);
    for j in 0..n {
        if (y[j] - point.y_c.re).abs() <= inner {
            mc = mc.max(val[j][0].norm());
            ms = ms.max((states[j][0] * scale).norm());
        }
    }
    Ok(Corrector { y, val, ratio: if ms > 0.0 { mc / ms } else { f64::INFINITY } })
}

impl ViscousSpectralPoint {
    /// Factor U₊ − c taking ψ₋ = e^{−αy} at infinity to the slow normalisation
    /// ψ_{s,−} ≈ U − c + O(α).
    fn profile_scale(&self, profile: &dyn ShearProfile) -> C64 {
        C64::new(profile.u_plus(), 0.0) - self.c
    }
}

/// Slow decaying solution with derivatives on a grid.
struct SlowParts {
    psi: Vec<C64>,
    dpsi: Vec<C64>,
    d2psi: Vec<C64>,
    corrector_ratio: f64,
}

const MAX_EPSILON: f64 = 1e-2;

fn slow_parts(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, grid: &[f64], with_corrector: bool) -> Result<SlowParts> {
    require_grid(grid)?;
    if point.epsilon.norm() > MAX_EPSILON {
        return param(format!("|epsilon| = {:.3e} > {MAX_EPSILON}: slow construction needs small viscosity", point.epsilon.norm()));
    }
    let y_max = grid[grid.len() - 1].max(Y_MAX);
    check_far_field(profile, y_max)?;
    let states = decaying_states(profile, point.alpha, point.c, y_max, grid, WallPath::Below)?;
    let ode = RayleighOde::new(profile, point.alpha, point.c);
    let scale = point.profile_scale(profile);
    let mut psi = Vec::with_capacity(grid.len());
    let mut dpsi = Vec::with_capacity(grid.len());
    let mut d2psi = Vec::with_capacity(grid.len());
    for (j, &y) in grid.iter().enumerate() {
        let q = ode.q_jet(C64::new(y, 0.0), 0)[0];
        psi.push(states[j][0] * scale);
        dpsi.push(states[j][1] * scale);
        d2psi.push(q * states[j][0] * scale);
    }
    let mut ratio = 0.0;
    // Below y_c the continued ψ^s switches branch on the real axis, so the
    // real-axis corrector only exists for Im y_c >= 0.
    if with_corrector && point.y_c.im >= 0.0 {
        let corr = corrector(profile, point, y_max)?;
        if corr.ratio > 10.0 {
            return Err(Error::Breakdown(format!(
                "viscous corrector is {:.1}x the Rayleigh part in the critical layer; epsilon too large",
                corr.ratio
            )));
        }
        ratio = corr.ratio;
        for (j, &y) in grid.iter().enumerate() {
            let c = corr.at(y);
            psi[j] += c[0];
            dpsi[j] += c[1];
            d2psi[j] += c[2];
        }
    }
    Ok(SlowParts { psi, dpsi, d2psi, corrector_ratio: ratio })
}

/// Slow decaying solution ψ_{s,−}: the Rayleigh ψ₋ continued below the critical
/// point, normalised to U − c + O(α), plus the viscous critical-layer corrector
/// when Im y_c >= 0 (for damped points the continued Rayleigh solution is returned).
pub fn slow_solution(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, grid: &[f64]) -> Result<GridFunction> {
    let parts = slow_parts(profile, point, grid, true)?;
    Ok(GridFunction::new(grid.to_vec(), parts.psi).with_alpha(point.alpha))
}

/// Wall values (ψ, ∂ψ) of the slow decaying solution.
pub fn slow_wall_values(profile: &dyn ShearProfile, point: &ViscousSpectralPoint) -> Result<State> {
    let parts = slow_parts(profile, point, &[0.0, Y_MAX], true)?;
    Ok([parts.psi[0], parts.dpsi[0]])
}

/// Decaying slow and fast solutions with their wall values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OSBasis {
    pub point: ViscousSpectralPoint,
    pub psi_s_minus: GridFunction,
    pub dpsi_s_minus: GridFunction,
    pub psi_f_minus: GridFunction,
    pub dpsi_f_minus: GridFunction,
    /// (ψ_{s,−}(0), ∂ψ_{s,−}(0)).
    pub slow_wall: (C64, C64),
    /// (ψ_{f,−}(0), ∂ψ_{f,−}(0)).
    pub fast_wall: (C64, C64),
    /// Size of the viscous corrector relative to the Rayleigh part in the layer.
    pub corrector_ratio: f64,
}

pub fn os_basis(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, grid: &[f64]) -> Result<OSBasis> {
    let slow = slow_parts(profile, point, grid, true)?;
    let fast = fast_solution(profile, point, grid)?;
    let dfast: Result<Vec<C64>> = grid.iter().map(|&y| Ok(fast_decaying_jet(point, C64::new(y, 0.0))?[1])).collect();
    let fw = fast_decaying_jet(point, C64::new(grid[0], 0.0))?;
    Ok(OSBasis {
        point: *point,
        slow_wall: (slow.psi[0], slow.dpsi[0]),
        fast_wall: (fw[0], fw[1]),
        psi_s_minus: GridFunction::new(grid.to_vec(), slow.psi).with_alpha(point.alpha),
        dpsi_s_minus: GridFunction::new(grid.to_vec(), slow.dpsi).with_alpha(point.alpha),
        psi_f_minus: fast,
        dpsi_f_minus: GridFunction::new(grid.to_vec(), dfast?).with_alpha(point.alpha),
        corrector_ratio: slow.corrector_ratio,
    })
}

// ---------------------------------------------------------------------------
// Dispersion relation

/// (U₊, U'(0)) for the limiting relation.
fn wall_data(profile: &dyn ShearProfile) -> Result<(f64, f64)> {
    let up = profile.u_plus();
    let s = profile.d1(C64::new(0.0, 0.0)).re;
    if !up.is_finite() || !(s > 0.0) {
        return param("dispersion relation needs finite U_+ and U'(0) > 0");
    }
    Ok((up, s))
}

fn check_dispersion_args(alpha0: f64, c0: C64) -> Result<()> {
    if !(alpha0 > 0.0 && alpha0 <= 10.0) {
        return param(format!("alpha0 = {alpha0} outside (0, 10]"));
    }
    let m = c0.norm();
    if !(m > 0.0 && m <= 10.0) {
        return param(format!("|c0| = {m} outside (0, 10]"));
    }
    Ok(())
}

/// Z = (iU'(0))^{1/3} α₀^{1/3} c₀ / U'(0), the leading-order γ y_c.
pub fn limiting_z(alpha0: f64, c0: C64, s: f64) -> C64 {
    (I * s).cbrt() * alpha0.cbrt() * c0 / s
}

fn limiting_residual(alpha0: f64, c0: C64, up: f64, s: f64) -> Result<C64> {
    let z = limiting_z(alpha0, c0, s);
    let w = -z * C64::from_polar(1.0, 5.0 * PI / 6.0);
    Ok(alpha0 * up * up / s - c0 * (1.0 - tietjens_complex(w)?))
}

/// LHS − RHS of the rescaled dispersion relation.
///
/// For ν = 0 this is the limiting Tietjens form α₀U₊²/U'(0) − c₀[1 − Ti(−Z e^{5iπ/6})].
/// For ν > 0, α = α₀ν^{1/4} and c = c₀ν^{1/4} enter with the exact critical point and γ:
/// α₀U₊²/U'(0) − c₀ − U'(0)ν^{−1/4} Ai(2, −γy_c)/(γ Ai(1, −γy_c)).
pub fn dispersion_residual(alpha0: f64, c0: C64, profile: &dyn ShearProfile, nu: f64) -> Result<C64> {
    check_dispersion_args(alpha0, c0)?;
    let (up, s) = wall_data(profile)?;
    if nu == 0.0 {
        return limiting_residual(alpha0, c0, up, s);
    }
    if !(nu > 0.0) {
        return param("nu must be non-negative");
    }
    let q = nu.powf(0.25);
    let point = ViscousSpectralPoint::new(profile, alpha0 * q, c0 * q, nu)?;
    let fam = airy_ai_family(-point.gamma * point.y_c)?;
    Ok(alpha0 * up * up / s - c0 - s / q * fam.int2 / (point.gamma * fam.int1))
}

/// Wall ratio mismatch between the slow and fast decaying solutions,
/// U'(0)ν^{−1/4}[ψ_{s,−}(0)/∂ψ_{s,−}(0) − ψ_{f,−}(0)/∂ψ_{f,−}(0)].
///
/// The slow side is the full Rayleigh ψ₋ continued below y_c, which carries both
/// edges of the unstable band and is smooth in c across Im c = 0.
pub fn matched_residual(profile: &dyn ShearProfile, alpha: f64, c: C64, nu: f64) -> Result<C64> {
    let point = ViscousSpectralPoint::new(profile, alpha, c, nu)?;
    matched_at(profile, &point)
}

fn matched_at(profile: &dyn ShearProfile, point: &ViscousSpectralPoint) -> Result<C64> {
    let s = profile.d1(C64::new(0.0, 0.0)).re;
    let parts = slow_parts(profile, point, &[0.0, Y_MAX], false)?;
    let (ps, dps) = (parts.psi[0], parts.dpsi[0]);
    let fam = airy_ai_family(-point.gamma * point.y_c)?;
    let fast = fam.int2 / (point.gamma * fam.int1);
    Ok(s / point.nu.powf(0.25) * (ps / dps - fast))
}

/// Newton's method with a central-difference derivative and step halving.
///
/// Converged when |f| ≤ tol; one further step is then taken and kept only if it
/// does not increase |f|, so restarting from a root returns it unchanged.
pub fn newton(f: &dyn Fn(C64) -> Result<C64>, seed: C64, tol: f64) -> Result<C64> {
    let mut c = seed;
    let mut fc = f(c)?;
    for _ in 0..100 {
        let h = 1e-7 * c.norm().max(1.0);
        let d = (f(c + h)? - f(c - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return Err(Error::NoConvergence(format!("degenerate derivative at c = {c}")));
        }
        let step = -fc / d;
        let converged = fc.norm() <= tol;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = c + step * t;
            if let Ok(ft) = f(trial) {
                if ft.norm() < fc.norm() || (converged && ft.norm() <= fc.norm()) {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            if converged {
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cn, fnew)) => {
                let small = (cn - c).norm() <= 1e-14 * cn.norm().max(1.0);
                c = cn;
                fc = fnew;
                if converged || (fc.norm() <= tol && small) {
                    return Ok(c);
                }
            }
            None if converged => return Ok(c),
            None => break,
        }
    }
    if fc.norm() <= tol {
        return Ok(c);
    }
    Err(Error::NoConvergence(format!("no root: |residual| = {:.3e} at c = {c}", fc.norm())))
}

pub const DISPERSION_TOL: f64 = 1e-10;
/// The matched relation carries ODE round-off amplified by ν^{−1/4}.
pub const MATCHED_TOL: f64 = 1e-9;

/// Root of the unit problem (U₊ = U'(0) = 1) near α₀ = 2.7, used to start continuation.
const UNIT_ANCHOR: (f64, C64) = (2.7, C64 { re: 3.023599, im: 0.459369 });

/// Continues the unit limiting root from the anchor to â.
fn unit_root(a_hat: f64) -> Result<C64> {
    let (a0, mut c) = UNIT_ANCHOR;
    let steps = ((a_hat - a0).abs() / 0.05).ceil().max(1.0) as usize;
    let mut prev: Option<C64> = None;
    for k in 0..=steps {
        let a = a0 + (a_hat - a0) * k as f64 / steps as f64;
        let seed = match prev {
            Some(p) => 2.0 * c - p,
            None => c,
        };
        let root = newton(&|z| limiting_residual(a, z, 1.0, 1.0), seed, DISPERSION_TOL)?;
        prev = Some(c);
        c = root;
    }
    Ok(c)
}

/// Exact scaling of the limiting relation: c₀(α₀; U₊, s) = k ĉ(α₀/m) with
/// m = s^{5/4}U₊^{−3/2}, k = s^{1/4}U₊^{1/2}, where ĉ solves the unit problem.
pub fn limiting_scales(profile: &dyn ShearProfile) -> Result<(f64, f64)> {
    let (up, s) = wall_data(profile)?;
    Ok((s.powf(1.25) * up.powf(-1.5), s.powf(0.25) * up.sqrt()))
}

fn auto_seed(alpha0: f64, profile: &dyn ShearProfile) -> Result<C64> {
    let (m, k) = limiting_scales(profile)?;
    Ok(unit_root(alpha0 / m)? * k)
}

/// Root c₀ of the limiting dispersion relation at α₀ ∈ [0.1, 10].
pub fn solve_dispersion(alpha0: f64, profile: &dyn ShearProfile, seed: Option<C64>) -> Result<C64> {
    solve_dispersion_nu(alpha0, profile, 0.0, seed)
}

/// Root c₀ of the rescaled relation at viscosity ν (ν = 0 for the limiting form).
pub fn solve_dispersion_nu(alpha0: f64, profile: &dyn ShearProfile, nu: f64, seed: Option<C64>) -> Result<C64> {
    if !(0.1..=10.0).contains(&alpha0) {
        return param(format!("alpha0 = {alpha0} outside [0.1, 10]"));
    }
    let seed = match seed {
        Some(s) => s,
        None => auto_seed(alpha0, profile)?,
    };
    newton(&|c| dispersion_residual(alpha0, c, profile, nu), seed, DISPERSION_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha0: f64,
    pub c0: C64,
    /// α₀ Im c₀.
    pub re_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionScan {
    pub rows: Vec<ScanRow>,
    /// Neutral crossing of Im c₀, when the scan contains one.
    pub alpha_c: Option<f64>,
    /// Argmax of α₀ Im c₀.
    pub alpha_m: f64,
    pub max_re_lambda: f64,
    /// Sign changes of the discrete slope of α₀ Im c₀; one means unimodal.
    pub slope_sign_changes: usize,
}

impl DispersionScan {
    pub fn unimodal(&self) -> bool {
        self.slope_sign_changes == 1
    }

    pub fn write_csv(&self, out: &mut dyn Write, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        writeln!(out, "alpha0,re_c0,im_c0,re_lambda")?;
        for r in &self.rows {
            writeln!(out, "{:.12e},{:.12e},{:.12e},{:.12e}", r.alpha0, r.c0.re, r.c0.im, r.re_lambda)?;
        }
        Ok(())
    }
}

fn bisect_sign(
    f: &dyn Fn(f64, C64) -> Result<C64>,
    (mut a, mut ca): (f64, C64),
    (mut b, mut cb): (f64, C64),
    log: bool,
    tol: f64,
) -> Result<(f64, C64)> {
    let sa = ca.im;
    for _ in 0..60 {
        if (b - a).abs() <= 1e-11 * a.abs().max(b.abs()) {
            break;
        }
        let m = if log { (a * b).sqrt() } else { 0.5 * (a + b) };
        let seed = if (m - a).abs() < (b - m).abs() { ca } else { cb };
        let cm = newton(&|c| f(m, c), seed, tol)?;
        if (cm.im > 0.0) == (sa > 0.0) {
            a = m;
            ca = cm;
        } else {
            b = m;
            cb = cm;
        }
    }
    let m = 0.5 * (a + b);
    Ok((m, if (m - a).abs() < (b - m).abs() { ca } else { cb }))
}

/// Maximises α Im c(α) on [a, b] by golden section, continuing roots from `seed`.
fn golden_max(
    f: &dyn Fn(f64, C64) -> Result<C64>,
    mut a: f64,
    mut b: f64,
    seed: C64,
    tol: f64,
    root_tol: f64,
) -> Result<(f64, C64, f64)> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |x: f64, s: C64| -> Result<(C64, f64)> {
        let c = newton(&|z| f(x, z), s, root_tol)?;
        Ok((c, x * c.im))
    };
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut c1, mut g1) = eval(x1, seed)?;
    let (mut c2, mut g2) = eval(x2, seed)?;
    while (b - a) > tol * a.abs().max(1e-300) {
        if g1 > g2 {
            b = x2;
            x2 = x1;
            c2 = c1;
            g2 = g1;
            x1 = b - phi * (b - a);
            (c1, g1) = eval(x1, c2)?;
        } else {
            a = x1;
            x1 = x2;
            c1 = c2;
            g1 = g2;
            x2 = a + phi * (b - a);
            (c2, g2) = eval(x2, c1)?;
        }
    }
    Ok(if g1 > g2 { (x1, c1, g1) } else { (x2, c2, g2) })
}

fn slope_sign_changes(g: &[f64]) -> usize {
    let signs: Vec<bool> = g.windows(2).filter(|w| w[1] != w[0]).map(|w| w[1] > w[0]).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Continuation scan of the limiting relation over α₀.
pub fn scan_growth(range: (f64, f64), n_points: usize, profile: &dyn ShearProfile) -> Result<DispersionScan> {
    let (lo, hi) = range;
    if !(0.1 <= lo && lo < hi && hi <= 10.0) {
        return param(format!("scan range [{lo}, {hi}] must lie inside [0.1, 10] with lo < hi"));
    }
    if n_points < 50 {
        return param("scan needs at least 50 points");
    }
    let f = |a: f64, c: C64| dispersion_residual(a, c, profile, 0.0);
    let alphas: Vec<f64> = (0..n_points).map(|j| lo + (hi - lo) * j as f64 / (n_points - 1) as f64).collect();
    let mut rows: Vec<ScanRow> = Vec::with_capacity(n_points);
    for &a in &alphas {
        let seed = match rows.len() {
            0 => auto_seed(a, profile)?,
            1 => rows[0].c0,
            n => {
                let (p, q) = (&rows[n - 1], &rows[n - 2]);
                p.c0 + (p.c0 - q.c0) * ((a - p.alpha0) / (p.alpha0 - q.alpha0))
            }
        };
        let c0 = newton(&|c| f(a, c), seed, DISPERSION_TOL)?;
        rows.push(ScanRow { alpha0: a, c0, re_lambda: a * c0.im });
    }
    let alpha_c = match rows.windows(2).find(|w| w[0].c0.im < 0.0 && w[1].c0.im >= 0.0) {
        Some(w) => Some(bisect_sign(&f, (w[0].alpha0, w[0].c0), (w[1].alpha0, w[1].c0), false, DISPERSION_TOL)?.0),
        None => None,
    };
    let g: Vec<f64> = rows.iter().map(|r| r.re_lambda).collect();
    let i = (0..g.len()).max_by(|&a, &b| g[a].total_cmp(&g[b])).expect("rows");
    let (alpha_m, max_re_lambda) = if i == 0 || i + 1 == rows.len() {
        (rows[i].alpha0, g[i])
    } else {
        let (x, _, gx) = golden_max(&f, rows[i - 1].alpha0, rows[i + 1].alpha0, rows[i].c0, 1e-10, DISPERSION_TOL)?;
        (x, gx)
    };
    Ok(DispersionScan { rows, alpha_c, alpha_m, max_re_lambda, slope_sign_changes: slope_sign_changes(&g) })
}

/// Unstable wavenumber interval of the matched viscous relation at fixed ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub nu: f64,
    /// Lower neutral point; None when Im c never turns positive.
    pub alpha_lo: Option<f64>,
    /// Upper neutral point; None when the scan ends inside the band.
    pub alpha_hi: Option<f64>,
    /// Wavenumber of largest α Im c and that growth rate.
    pub alpha_max: f64,
    pub max_growth: f64,
    /// Continuation rows (α, c).
    pub rows: Vec<(f64, C64)>,
}

impl Band {
    pub fn is_empty(&self) -> bool {
        self.alpha_lo.is_none()
    }
}

/// Band scan points between 0.5ν^{1/4} and min(2, 6ν^{1/6}).
const BAND_POINTS: usize = 72;

pub fn unstable_band(nu: f64, profile: &dyn ShearProfile) -> Result<Band> {
    if !(1e-12..=1e-2).contains(&nu) {
        return param(format!("nu = {nu:e} outside [1e-12, 1e-2]"));
    }
    let q = nu.powf(0.25);
    let f = |a: f64, c: C64| matched_residual(profile, a, c, nu);
    let (a_lo, a_hi) = (0.5 * q, (6.0 * nu.powf(1.0 / 6.0)).min(2.0));
    let alphas: Vec<f64> =
        (0..BAND_POINTS).map(|j| a_lo * (a_hi / a_lo).powf(j as f64 / (BAND_POINTS - 1) as f64)).collect();
    let mut rows: Vec<(f64, C64)> = Vec::with_capacity(BAND_POINTS);
    for &a in &alphas {
        let seed = match rows.len() {
            0 => auto_seed(a / q, profile)? * q,
            1 => rows[0].1,
            n => {
                let ((a1, c1), (a2, c2)) = (rows[n - 1], rows[n - 2]);
                c1 + (c1 - c2) * ((a / a1).ln() / (a1 / a2).ln())
            }
        };
        match newton(&|c| f(a, c), seed, MATCHED_TOL) {
            Ok(c) => rows.push((a, c)),
            // Beyond the upper branch the root can leave the profile's range; stop there.
            Err(e) if !rows.is_empty() && rows[rows.len() - 1].1.im < 0.0 && a > 10.0 * q => {
                let _ = e;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut alpha_lo = None;
    let mut alpha_hi = None;
    for w in rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        if alpha_lo.is_none() && a.1.im < 0.0 && b.1.im >= 0.0 {
            alpha_lo = Some(bisect_sign(&f, a, b, true, MATCHED_TOL)?.0);
        } else if alpha_lo.is_some() && alpha_hi.is_none() && a.1.im >= 0.0 && b.1.im < 0.0 {
            alpha_hi = Some(bisect_sign(&f, a, b, true, MATCHED_TOL)?.0);
        }
    }
    let g: Vec<f64> = rows.iter().map(|(a, c)| a * c.im).collect();
    let i = (0..g.len()).max_by(|&a, &b| g[a].total_cmp(&g[b])).expect("rows");
    let (alpha_max, max_growth) = if i == 0 || i + 1 == rows.len() {
        (rows[i].0, g[i])
    } else {
        let (x, _, gx) = golden_max(&f, rows[i - 1].0, rows[i + 1].0, rows[i].1, 1e-8, MATCHED_TOL)?;
        (x, gx)
    };
    Ok(Band { nu, alpha_lo, alpha_hi, alpha_max, max_growth, rows })
}

/// Bands for several viscosities, in parallel.
pub fn band_sweep(nus: &[f64], profile: &dyn ShearProfile) -> Vec<Result<Band>> {
    par::map(nus, |&nu| unstable_band(nu, profile))
}

/// Least-squares slope of log y against log x.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Eigenmodes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenmode {
    pub point: ViscousSpectralPoint,
    /// Fast amplitude with the slow amplitude fixed to one.
    pub a: C64,
    pub psi: GridFunction,
    pub u: GridFunction,
    pub v: GridFunction,
    pub omega: GridFunction,
    /// |ψ(0)| and |∂ψ(0)| relative to max|u|.
    pub wall_residual: (f64, f64),
}

/// Eigenmode tolerance on the wall conditions, relative to max|u|.
pub const EIGENMODE_WALL_TOL: f64 = 1e-6;

/// ψ = ψ_{s,−} + a ψ_{f,−} with a from ψ(0) = 0; ∂ψ(0) = 0 then holds because
/// the point solves the matched relation. The slow part is the continued Rayleigh
/// solution without corrector, the same one the matched relation uses.
pub fn eigenmode(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, grid: &[f64]) -> Result<Eigenmode> {
    let r = matched_at(profile, point)?;
    if r.norm() > 1e-8 {
        return param(format!("point is not a dispersion root: |residual| = {:.3e}", r.norm()));
    }
    if grid[0] != 0.0 {
        return param("eigenmode grid must start at the wall");
    }
    let slow = slow_parts(profile, point, grid, false)?;
    let fast = fast_solution(profile, point, grid)?;
    let jets: Result<Vec<Jet4>> = grid.iter().map(|&y| fast_decaying_jet(point, C64::new(y, 0.0))).collect();
    let jets = jets?;
    let a = -slow.psi[0] / fast.values[0];
    let a2 = point.alpha * point.alpha;
    let n = grid.len();
    let mut psi = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    for j in 0..n {
        let p = slow.psi[j] + a * jets[j][0];
        let dp = slow.dpsi[j] + a * jets[j][1];
        let d2p = slow.d2psi[j] + a * jets[j][2];
        psi.push(p);
        u.push(dp);
        v.push(-I * point.alpha * p);
        omega.push(-(d2p - a2 * p));
    }
    let umax = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let wall = (psi[0].norm() / umax, u[0].norm() / umax);
    if wall.0 > EIGENMODE_WALL_TOL || wall.1 > EIGENMODE_WALL_TOL {
        return Err(Error::Breakdown(format!("eigenmode misses the wall conditions: {:.2e}, {:.2e}", wall.0, wall.1)));
    }
    let gf = |vals: Vec<C64>| GridFunction::new(grid.to_vec(), vals).with_alpha(point.alpha);
    Ok(Eigenmode { point: *point, a, psi: gf(psi), u: gf(u), v: gf(v), omega: gf(omega), wall_residual: wall })
}

/// Root of the matched relation at (α, ν) near `seed`.
pub fn solve_matched(profile: &dyn ShearProfile, alpha: f64, nu: f64, seed: C64) -> Result<ViscousSpectralPoint> {
    let c = newton(&|c| matched_residual(profile, alpha, c, nu), seed, MATCHED_TOL)?;
    ViscousSpectralPoint::new(profile, alpha, c, nu)
}

// ---------------------------------------------------------------------------
// Green function

/// Slow solutions with four derivatives: ψ₋ (decaying, continued below y_c) and
/// ψ₊ (ψ(0) = 0, ∂ψ(0) = 1). These are the Rayleigh solutions; the viscous
/// corrector is not included pointwise.
fn slow_jets(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, pts: &[f64]) -> Result<(Vec<Jet4>, Vec<Jet4>)> {
    let mut sorted: Vec<f64> = pts.to_vec();
    sorted.push(0.0);
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let minus = decaying_states(profile, point.alpha, point.c, Y_MAX, &sorted, WallPath::Below)?;
    let ode = RayleighOde::new(profile, point.alpha, point.c);
    let scale = point.profile_scale(profile);
    let zero = C64::new(0.0, 0.0);
    let mut plus = Vec::with_capacity(sorted.len());
    let mut s: State = [zero, C64::new(1.0, 0.0)];
    let mut at = 0.0;
    for &y in &sorted {
        if y > at {
            s = taylor::segment(&ode, C64::new(at, 0.0), C64::new(y, 0.0), s, &[])?.0;
            at = y;
        }
        plus.push(s);
    }
    let jet = |y: f64, st: State, k: C64| -> Jet4 {
        let q = ode.q_jet(C64::new(y, 0.0), 1);
        [st[0] * k, st[1] * k, q[0] * st[0] * k, (q[1] * st[0] + q[0] * st[1]) * k]
    };
    let find = |y: f64| sorted.iter().position(|&t| t == y).expect("point present");
    let m = pts.iter().map(|&y| jet(y, minus[find(y)], scale)).collect();
    let p = pts.iter().map(|&y| jet(y, plus[find(y)], C64::new(1.0, 0.0))).collect();
    Ok((m, p))
}

/// Condition-number bound for the jump system.
pub const GREEN_COND_MAX: f64 = 1e12;

fn cond1(m: &Array2<C64>) -> Result<f64> {
    let norm1 = |a: &Array2<C64>| (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let inv = m.inv().map_err(|e| Error::IllConditioned(format!("jump matrix singular: {e}")))?;
    Ok(norm1(m) * norm1(&inv))
}

/// G(x, y) and ∂_y^k G for k = 1, 2, 3; at y = x the one-sided value from `side`.
pub fn os_green_jet(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, x: f64, y: f64, above: bool) -> Result<Jet4> {
    if !(x > 0.0) || !(y >= 0.0) || x >= Y_MAX || y >= Y_MAX {
        return param("need 0 < x < Y_MAX and 0 <= y < Y_MAX");
    }
    let (sm, sp) = slow_jets(profile, point, &[x, y])?;
    let (sx_m, sx_p, sy_m, sy_p) = (sm[0], sp[0], sm[1], sp[1]);
    let z = |t: f64| C64::new(t, 0.0);
    let fx_m = fast_decaying_jet(point, z(x))?;
    let fx_p = fast_growing_jet(point, z(x))?;
    let (fm_norm, fp_norm) = (fx_m[0], fx_p[0]);
    if fm_norm.norm() == 0.0 || fp_norm.norm() == 0.0 {
        return Err(Error::Range("fast solution vanishes at x; cannot normalise".into()));
    }
    let mut m = Array2::<C64>::zeros((4, 4));
    for k in 0..4 {
        m[(k, 0)] = sx_m[k];
        m[(k, 1)] = sx_p[k];
        m[(k, 2)] = fx_m[k] / fm_norm;
        m[(k, 3)] = fx_p[k] / fp_norm;
    }
    let cond = cond1(&m)?;
    if cond > GREEN_COND_MAX {
        return Err(Error::IllConditioned(format!("jump matrix condition {cond:.2e}")));
    }
    // v = (−a₋, a₊, −b₋, b₊): left minus right of each derivative. A unit jump
    // of −ε∂³G across y = x means ∂³G(x⁻) − ∂³G(x⁺) = 1/ε.
    let mut rhs = Array1::<C64>::zeros(4);
    rhs[3] = 1.0 / point.epsilon;
    let v = m.solve(&rhs).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let (am, ap, bm, bp) = (-v[0], v[1], -v[2], v[3]);
    // Interior part at the wall (the wall is left of x) and at y.
    let f0_p = fast_growing_jet(point, z(0.0))?;
    let f0_m = fast_decaying_jet(point, z(0.0))?;
    let (s0_m, s0_p) = slow_jets(profile, point, &[0.0]).map(|(a, b)| (a[0], b[0]))?;
    let gi0 = [ap * s0_p[0] + bp * f0_p[0] / fp_norm, ap * s0_p[1] + bp * f0_p[1] / fp_norm];
    // Boundary part d_s φ_{s,−} + d_f φ_{f,−}/φ_{f,−}(0).
    let n = [[s0_m[0], C64::new(1.0, 0.0)], [s0_m[1], f0_m[1] / f0_m[0]]];
    let det = n[0][0] * n[1][1] - n[0][1] * n[1][0];
    if det.norm() < 1e-10 {
        return Err(Error::NearEigenvalue(format!("|det N| = {:.2e}", det.norm())));
    }
    let ds = (-gi0[0] * n[1][1] + gi0[1] * n[0][1]) / det;
    let df = (-gi0[1] * n[0][0] + gi0[0] * n[1][0]) / det;
    let fy_m = fast_decaying_jet(point, z(y))?;
    let left = y < x || (y == x && !above);
    let mut out = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        let gi = if left {
            ap * sy_p[k] + bp * fast_growing_jet(point, z(y))?[k] / fp_norm
        } else {
            am * sy_m[k] + bm * fy_m[k] / fm_norm
        };
        out[k] = gi + ds * sy_m[k] + df * fy_m[k] / f0_m[0];
    }
    Ok(out)
}

/// Orr–Sommerfeld Green function G(x, y) with G(x, 0) = ∂_yG(x, 0) = 0 and decay.
pub fn os_green_function(profile: &dyn ShearProfile, point: &ViscousSpectralPoint, x: f64, y: f64) -> Result<C64> {
    Ok(os_green_jet(profile, point, x, y, true)?[0])
}

// ---------------------------------------------------------------------------
// Collocation

/// Chebyshev points cos(πj/N) and the differentiation matrix.
fn cheb(n: usize) -> (Vec<f64>, Array2<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c: Vec<f64> = (0..=n).map(|j| if j == 0 || j == n { 2.0 } else { 1.0 } * if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut d = Array2::<f64>::zeros((n + 1, n + 1));
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c[i] / c[j] / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// One collocation eigenvalue with the relative residual of its eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollocationMode {
    pub c: C64,
    pub residual: f64,
}

/// Map y = a(1 + x)/(b − x) with y(1) = y_max.
fn collocation_map(alpha: f64, nu: f64) -> (f64, f64) {
    let y_max = Y_MAX.max(25.0 / alpha);
    let a = (4.0 * (nu / alpha).cbrt()).clamp(0.05, 1.0) * 4.0;
    (a, 1.0 + 2.0 * a / y_max)
}

/// Eigenvalues c of the clamped OS problem on N + 1 mapped Chebyshev points.
pub fn collocation_modes(profile: &dyn ShearProfile, alpha: f64, nu: f64, n: usize) -> Result<Vec<CollocationMode>> {
    if !(alpha > 0.0) || !(nu > 0.0) {
        return param("alpha and nu must be positive");
    }
    let (x, d) = cheb(n);
    let (a, b) = collocation_map(alpha, nu);
    let d2 = d.dot(&d);
    let d3 = d2.dot(&d);
    let d4 = d3.dot(&d);
    let m = n - 1;
    let int = s![1..n, 1..n];
    let (d1, d2, d3, d4) = (d.slice(int).to_owned(), d2.slice(int).to_owned(), d3.slice(int).to_owned(), d4.slice(int).to_owned());
    // x-derivatives of ψ = (1 − x²)p with p(±1) = 0.
    let xi: Vec<f64> = x[1..n].to_vec();
    let mut px = [Array2::<f64>::zeros((m, m)), Array2::zeros((m, m)), Array2::zeros((m, m)), Array2::zeros((m, m)), Array2::zeros((m, m))];
    for i in 0..m {
        let (s, t) = (1.0 - xi[i] * xi[i], xi[i]);
        for j in 0..m {
            let id = if i == j { 1.0 } else { 0.0 };
            px[0][(i, j)] = s * id;
            px[1][(i, j)] = s * d1[(i, j)] - 2.0 * t * id;
            px[2][(i, j)] = s * d2[(i, j)] - 4.0 * t * d1[(i, j)] - 2.0 * id;
            px[3][(i, j)] = s * d3[(i, j)] - 6.0 * t * d2[(i, j)] - 6.0 * d1[(i, j)];
            px[4][(i, j)] = s * d4[(i, j)] - 8.0 * t * d3[(i, j)] - 12.0 * d2[(i, j)];
        }
    }
    // Chain rule to y with x(y) = (by − a)/(y + a).
    let k = a * (1.0 + b);
    let mut bm = Array2::<C64>::zeros((m, m));
    let mut am = Array2::<C64>::zeros((m, m));
    let eps = C64::new(nu, 0.0) / (I * alpha);
    let a2 = alpha * alpha;
    for i in 0..m {
        let y = a * (1.0 + xi[i]) / (b - xi[i]);
        let w = y + a;
        let (x1, x2, x3, x4) = (k / w.powi(2), -2.0 * k / w.powi(3), 6.0 * k / w.powi(4), -24.0 * k / w.powi(5));
        let z = C64::new(y, 0.0);
        let (u, u2) = (profile.eval(z), profile.d2(z));
        for j in 0..m {
            let p0 = px[0][(i, j)];
            let p2y = x1 * x1 * px[2][(i, j)] + x2 * px[1][(i, j)];
            let p4y = x1.powi(4) * px[4][(i, j)]
                + 6.0 * x1 * x1 * x2 * px[3][(i, j)]
                + (3.0 * x2 * x2 + 4.0 * x1 * x3) * px[2][(i, j)]
                + x4 * px[1][(i, j)];
            let lap = p2y - a2 * p0;
            bm[(i, j)] = C64::new(lap, 0.0);
            am[(i, j)] = u * lap - u2 * p0 - eps * (p4y - 2.0 * a2 * p2y + a2 * a2 * p0);
        }
    }
    let binv = bm.inv().map_err(|e| Error::NoConvergence(format!("collocation: {e}")))?;
    let kmat = binv.dot(&am);
    let (vals, vecs) = kmat.eig().map_err(|e| Error::NoConvergence(format!("collocation eigen-solver: {e}")))?;
    let anorm = (0..m).map(|i| am.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let bnorm = (0..m).map(|i| bm.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let c = vals[j];
        let q = vecs.column(j);
        let r = am.dot(&q) - bm.dot(&q).mapv(|z| z * c);
        let rn = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let qn = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
        out.push(CollocationMode { c, residual: rn / ((anorm + c.norm() * bnorm) * qn) });
    }
    out.sort_by(|p, q| q.c.im.total_cmp(&p.c.im));
    Ok(out)
}

/// Threshold for keeping an eigenvalue under resolution doubling.
pub const DOUBLING_TOL: f64 = 1e-6;

/// Collocation eigenvalues stable under N → 2N, sorted by Im c descending.
pub fn collocation_spectrum(profile: &dyn ShearProfile, alpha: f64, nu: f64, n_modes: usize) -> Result<Vec<C64>> {
    if !(64..=1024).contains(&n_modes) {
        return param("n_modes must lie in [64, 1024]");
    }
    let coarse = collocation_modes(profile, alpha, nu, n_modes)?;
    let fine = collocation_modes(profile, alpha, nu, 2 * n_modes)?;
    Ok(coarse
        .into_iter()
        .map(|m| m.c)
        .filter(|c| fine.iter().any(|f| (f.c - c).norm() <= DOUBLING_TOL))
        .collect())
}
