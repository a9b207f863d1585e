//! Single Fourier modes under linearised Euler and Navier–Stokes.
//!
//! Vorticity form: ∂_tω = −iαUω − iαU''ψ + ν(∂² − α²)ω with ω = −(∂² − α²)ψ.
//! Two independent evaluators: explicit time stepping, and the contour integral
//! ψ(t) = (α/2π)∫_Γ e^{−iαct} ψ_{α,c} dc, ψ_{α,c} = −(iα)⁻¹Ray⁻¹ω₀.

use crate::grid::{check_uniform, cumulative, GridFunction};
use crate::profiles::ShearProfile;
use crate::rayleigh::solve_rayleigh_bvp;
use crate::{par, param, Error, Result, C64, I};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Relative size of ω at the far end above which the kernel truncation is reported.
pub const DECAY_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Poisson inversion with H_α(x, y) = (e^{−α|x−y|} − e^{−α(x+y)})/(2α)

/// ∫₀¹ e^{κs} ds and ∫₀¹ s e^{κs} ds.
fn moments(k: C64) -> (C64, C64) {
    if k.norm() < 0.5 {
        let (mut e0, mut e1) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut p = C64::new(1.0, 0.0); // κⁿ/n!
        for n in 0..18 {
            e0 += p / (n + 1) as f64;
            e1 += p / (n + 2) as f64;
            p = p * k / (n + 1) as f64;
        }
        return (e0, e1);
    }
    let ek = k.exp();
    ((ek - 1.0) / k, (ek * (k - 1.0) + 1.0) / (k * k))
}

fn check_kernel_grid(alpha: f64, y: &[f64]) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return param("alpha must be positive");
    }
    if y.len() < 2 || y[0] != 0.0 || y.windows(2).any(|w| !(w[1] > w[0])) {
        return param("grid must start at the wall y = 0 and increase");
    }
    Ok(())
}

/// ψ and ∂ψ for ω = a·e^{iφ}, with a and φ interpolated linearly per cell.
///
/// φ = 0 is plain piecewise-linear quadrature; a transport phase −αUt keeps the
/// quadrature exact in the oscillation that develops under shear.
fn kernel_solve(alpha: f64, y: &[f64], amp: &[C64], phase: Option<&[f64]>) -> (Vec<C64>, Vec<C64>) {
    let n = y.len();
    let ph = |j: usize| phase.map_or(0.0, |p| p[j]);
    let mut a = vec![C64::new(0.0, 0.0); n];
    let mut b = vec![C64::new(0.0, 0.0); n];
    for j in 1..n {
        let h = y[j] - y[j - 1];
        let d = ph(j) - ph(j - 1);
        let decay = (-alpha * h).exp();
        let (e0, e1) = moments(C64::new(alpha * h, d));
        let da = amp[j] - amp[j - 1];
        let cell = C64::from_polar(h * decay, ph(j - 1)) * (amp[j - 1] * e0 + da * e1);
        a[j] = a[j - 1] * decay + cell;
    }
    for j in (0..n - 1).rev() {
        let h = y[j + 1] - y[j];
        let d = ph(j + 1) - ph(j);
        let (e0, e1) = moments(C64::new(-alpha * h, d));
        let da = amp[j + 1] - amp[j];
        let cell = C64::from_polar(h, ph(j)) * (amp[j] * e0 + da * e1);
        b[j] = b[j + 1] * (-alpha * h).exp() + cell;
    }
    let c = b[0];
    let mut psi = Vec::with_capacity(n);
    let mut dpsi = Vec::with_capacity(n);
    for j in 0..n {
        let w = c * (-alpha * y[j]).exp();
        psi.push((a[j] + b[j] - w) / (2.0 * alpha));
        dpsi.push((b[j] - a[j] + w) * 0.5);
    }
    psi[0] = C64::new(0.0, 0.0);
    (psi, dpsi)
}

/// ψ = ∫ H_α(·, y) ω(y) dy on ω's grid; ψ(0) = 0 exactly and (∂² − α²)ψ = −ω.
pub fn poisson_invert(alpha: f64, omega: &GridFunction) -> Result<GridFunction> {
    Ok(poisson_invert_with_derivative(alpha, omega)?.0)
}

/// ψ and ∂ψ; the derivative comes from the kernel, not from differencing.
pub fn poisson_invert_with_derivative(alpha: f64, omega: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    check_kernel_grid(alpha, &omega.y)?;
    let (p, d) = kernel_solve(alpha, &omega.y, &omega.values, None);
    Ok((
        GridFunction::new(omega.y.clone(), p).with_alpha(alpha),
        GridFunction::new(omega.y.clone(), d).with_alpha(alpha),
    ))
}

/// Warning text when ω has not decayed at the far end of its grid.
pub fn truncation_warning(omega: &GridFunction) -> Option<String> {
    let m = omega.max_norm();
    let last = omega.values[omega.len() - 1].norm();
    (m > 0.0 && last > DECAY_TOL * m).then(|| format!("|omega(Y_max)| / max|omega| = {:.2e} exceeds {DECAY_TOL:e}; the kernel truncates", last / m))
}

/// Fourth-order variant on uniform grids (same kernel, cumulative quadrature).
fn poisson_uniform(alpha: f64, y: &[f64], f: &[C64]) -> Vec<C64> {
    let n = y.len();
    let ep: Vec<C64> = (0..n).map(|j| f[j] * (-alpha * (y[n - 1] - y[j])).exp()).collect();
    let em: Vec<C64> = (0..n).map(|j| f[j] * (-alpha * y[j]).exp()).collect();
    let left = cumulative(y, &ep); // e^{−αY} ∫₀^x e^{αy} f
    let right = cumulative(y, &em); // ∫₀^x e^{−αy} f
    let total = right[n - 1];
    (0..n)
        .map(|j| {
            let x = y[j];
            let l = left[j] * (alpha * (y[n - 1] - x)).exp();
            let r = (total - right[j]) * (alpha * x).exp();
            let w = total * (-alpha * x).exp();
            (l + r - w) / (2.0 * alpha)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Mode state

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub alpha: f64,
    pub omega: GridFunction,
    pub psi: GridFunction,
    pub dpsi: GridFunction,
    pub time: f64,
    /// Phase used to interpolate ω between grid points when deriving ψ
    /// (the transport phase −αU(y)t for inviscid runs, zero otherwise).
    pub phase: Vec<f64>,
}

impl ModeState {
    pub fn new(alpha: f64, omega: GridFunction) -> Result<Self> {
        let (psi, dpsi) = poisson_invert_with_derivative(alpha, &omega)?;
        let phase = vec![0.0; omega.len()];
        Ok(ModeState { alpha, omega: omega.with_alpha(alpha), psi, dpsi, time: 0.0, phase })
    }

    fn from_parts(alpha: f64, y: &[f64], omega: Vec<C64>, phase: Vec<f64>, time: f64) -> Self {
        let amp: Vec<C64> = omega.iter().zip(&phase).map(|(w, p)| w * C64::from_polar(1.0, -p)).collect();
        let (psi, dpsi) = kernel_solve(alpha, y, &amp, Some(&phase));
        let gf = |v: Vec<C64>| GridFunction::new(y.to_vec(), v).with_alpha(alpha);
        ModeState { alpha, omega: gf(omega), psi: gf(psi), dpsi: gf(dpsi), time, phase }
    }

    /// ψ re-derived from ω with the stored interpolation phase.
    pub fn stream_from_vorticity(&self) -> GridFunction {
        let amp: Vec<C64> = self.omega.values.iter().zip(&self.phase).map(|(w, p)| w * C64::from_polar(1.0, -p)).collect();
        GridFunction::new(self.omega.y.clone(), kernel_solve(self.alpha, &self.omega.y, &amp, Some(&self.phase)).0).with_alpha(self.alpha)
    }

    /// (‖ψ‖∞, ‖∂ψ‖∞, ‖ω‖∞).
    pub fn norms(&self) -> (f64, f64, f64) {
        (self.psi.max_norm(), self.dpsi.max_norm(), self.omega.max_norm())
    }
}

/// Trajectory CSV: `t,norm_psi_inf,norm_dpsi_inf,norm_omega_inf`.
pub fn write_trajectory_csv(states: &[ModeState], out: &mut dyn Write, header: &[String]) -> std::io::Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    writeln!(out, "t,norm_psi_inf,norm_dpsi_inf,norm_omega_inf")?;
    for s in states {
        let (a, b, c) = s.norms();
        writeln!(out, "{:.10e},{a:.10e},{b:.10e},{c:.10e}", s.time)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Time stepping

fn profile_samples(profile: &dyn ShearProfile, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let u = y.iter().map(|&t| profile.eval(C64::new(t, 0.0)).re).collect();
    let u2 = y.iter().map(|&t| profile.d2(C64::new(t, 0.0)).re).collect();
    (u, u2)
}

fn check_step(alpha: f64, u: &[f64], state: &ModeState, t_final: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return param("dt must be positive");
    }
    if !(t_final >= state.time) {
        return param("t_final must not precede the state time");
    }
    if (state.alpha - alpha).abs() > 0.0 {
        return param("state wavenumber mismatch");
    }
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if alpha * umax * dt > 0.5 {
        return param(format!("CFL: alpha*max|U|*dt = {:.3} > 0.5", alpha * umax * dt));
    }
    Ok(())
}

/// Output times split into equal steps no longer than dt.
fn schedule(t0: f64, times: &[f64], dt: f64) -> Result<Vec<(f64, usize)>> {
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    for &tn in times {
        if tn < t {
            return param("output times must be increasing and not before the state time");
        }
        let n = ((tn - t) / dt).ceil().max(0.0) as usize;
        out.push((tn, n));
        t = tn;
    }
    Ok(out)
}

/// Linearised Euler to `t_final` by RK4 on ω̃ = ω e^{iαUt}.
pub fn evolve_linear_euler(profile: &dyn ShearProfile, state: &ModeState, t_final: f64, dt: f64) -> Result<ModeState> {
    Ok(euler_trajectory(profile, state, &[t_final], dt)?.pop().expect("one output"))
}

/// States at each of `times`.
pub fn euler_trajectory(profile: &dyn ShearProfile, state: &ModeState, times: &[f64], dt: f64) -> Result<Vec<ModeState>> {
    let y = &state.omega.y;
    let alpha = state.alpha;
    check_kernel_grid(alpha, y)?;
    let (u, u2) = profile_samples(profile, y);
    check_step(alpha, &u, state, times.last().copied().unwrap_or(state.time), dt)?;
    let n = y.len();
    let ph = |t: f64| -> Vec<f64> { u.iter().map(|v| -alpha * v * t).collect() };
    // Interaction variable relative to absolute time.
    let mut w: Vec<C64> = (0..n).map(|j| state.omega.values[j] * C64::from_polar(1.0, alpha * u[j] * state.time)).collect();
    let rhs = |t: f64, w: &[C64]| -> Vec<C64> {
        let p = ph(t);
        let (psi, _) = kernel_solve(alpha, y, w, Some(&p));
        (0..n).map(|j| -I * alpha * u2[j] * psi[j] * C64::from_polar(1.0, -p[j])).collect()
    };
    let mut t = state.time;
    let mut out = Vec::with_capacity(times.len());
    for (tn, steps) in schedule(state.time, times, dt)? {
        if steps > 0 {
            let h = (tn - t) / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(t, &w);
                let s: Vec<C64> = (0..n).map(|j| w[j] + k1[j] * (0.5 * h)).collect();
                let k2 = rhs(t + 0.5 * h, &s);
                let s: Vec<C64> = (0..n).map(|j| w[j] + k2[j] * (0.5 * h)).collect();
                let k3 = rhs(t + 0.5 * h, &s);
                let s: Vec<C64> = (0..n).map(|j| w[j] + k3[j] * h).collect();
                let k4 = rhs(t + h, &s);
                for j in 0..n {
                    w[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
                }
                t += h;
            }
        }
        t = tn;
        let p = ph(t);
        let omega: Vec<C64> = (0..n).map(|j| w[j] * C64::from_polar(1.0, p[j])).collect();
        out.push(ModeState::from_parts(alpha, y, omega, p, t));
    }
    Ok(out)
}

/// Crank–Nicolson half step for ν(∂² − α²) with the wall vorticity chosen so
/// that ∫ e^{−αy}ω = 0, i.e. ∂ψ(0) = 0 (influence-matrix closure).
struct Diffusion {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    theta: f64,
    /// Response to unit wall vorticity.
    unit: Vec<C64>,
    /// Quadrature weights of ∫ e^{−αy}ω matching the kernel.
    weights: Vec<f64>,
}

impl Diffusion {
    fn new(y: &[f64], alpha: f64, nu: f64, tau: f64) -> Self {
        let n = y.len();
        let theta = 0.5 * nu * tau;
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 1..n - 1 {
            let (hl, hr) = (y[j] - y[j - 1], y[j + 1] - y[j]);
            let s = 2.0 / (hl + hr);
            lower[j] = s / hl;
            upper[j] = s / hr;
            diag[j] = -s / hl - s / hr - alpha * alpha;
        }
        let mut weights = vec![0.0; n];
        for j in 0..n - 1 {
            let h = y[j + 1] - y[j];
            let (e0, e1) = moments(C64::new(-alpha * h, 0.0));
            let f = h * (-alpha * y[j]).exp();
            weights[j] += f * (e0.re - e1.re);
            weights[j + 1] += f * e1.re;
        }
        let mut d = Diffusion { lower, diag, upper, theta, unit: vec![], weights };
        let mut rhs = vec![C64::new(0.0, 0.0); n];
        rhs[0] = C64::new(1.0, 0.0);
        d.unit = d.solve(rhs);
        d
    }

    /// (I − θL)x = r on the interior with x₀ = r₀ and x_{n−1} = 0.
    fn solve(&self, r: Vec<C64>) -> Vec<C64> {
        let n = r.len();
        let t = self.theta;
        let mut c = vec![0.0; n];
        let mut d = vec![C64::new(0.0, 0.0); n];
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[0] = r[0];
        // Thomas sweep over j = 1..n−2.
        let mut prev_c = 0.0;
        let mut prev_d = x[0];
        let mut first = true;
        for j in 1..n - 1 {
            let a = -t * self.lower[j];
            let b = 1.0 - t * self.diag[j];
            let cu = -t * self.upper[j];
            let mut rj = r[j];
            let denom;
            if first {
                rj -= a * x[0];
                denom = b;
                first = false;
            } else {
                denom = b - a * prev_c;
                rj -= a * prev_d;
            }
            c[j] = cu / denom;
            d[j] = rj / denom;
            prev_c = c[j];
            prev_d = d[j];
        }
        for j in (1..n - 1).rev() {
            x[j] = d[j] - c[j] * if j + 1 < n - 1 { x[j + 1] } else { C64::new(0.0, 0.0) };
        }
        x
    }

    fn step(&self, w: &[C64]) -> Vec<C64> {
        let n = w.len();
        let t = self.theta;
        let mut r = vec![C64::new(0.0, 0.0); n];
        for j in 1..n - 1 {
            r[j] = w[j] + (w[j - 1] * self.lower[j] + w[j] * self.diag[j] + w[j + 1] * self.upper[j]) * t;
        }
        let p = self.solve(r);
        let dot = |v: &[C64]| -> C64 { v.iter().zip(&self.weights).map(|(a, b)| a * b).sum() };
        let lam = -dot(&p) / dot(&self.unit);
        (0..n).map(|j| p[j] + self.unit[j] * lam).collect()
    }
}

/// Linearised Navier–Stokes with no-slip, Strang splitting: CN diffusion half
/// steps around an RK4 advection step.
pub fn evolve_linear_ns(profile: &dyn ShearProfile, state: &ModeState, nu: f64, t_final: f64, dt: f64) -> Result<ModeState> {
    Ok(ns_trajectory(profile, state, nu, &[t_final], dt)?.pop().expect("one output"))
}

pub fn ns_trajectory(profile: &dyn ShearProfile, state: &ModeState, nu: f64, times: &[f64], dt: f64) -> Result<Vec<ModeState>> {
    if !(nu > 0.0 && nu.is_finite()) {
        return param("nu must be positive");
    }
    let y = &state.omega.y;
    let alpha = state.alpha;
    check_kernel_grid(alpha, y)?;
    if y.len() < 4 {
        return param("grid too short");
    }
    let (u, u2) = profile_samples(profile, y);
    check_step(alpha, &u, state, times.last().copied().unwrap_or(state.time), dt)?;
    let n = y.len();
    let rhs = |w: &[C64]| -> Vec<C64> {
        let (psi, _) = kernel_solve(alpha, y, w, None);
        (0..n).map(|j| -I * alpha * (u[j] * w[j] + u2[j] * psi[j])).collect()
    };
    let mut w = state.omega.values.clone();
    let mut t = state.time;
    let mut out = Vec::with_capacity(times.len());
    let mut cached: Option<(f64, Diffusion)> = None;
    for (tn, steps) in schedule(state.time, times, dt)? {
        if steps > 0 {
            let h = (tn - t) / steps as f64;
            if cached.as_ref().map_or(true, |(hh, _)| (hh - h).abs() > 1e-14 * h) {
                cached = Some((h, Diffusion::new(y, alpha, nu, 0.5 * h)));
            }
            let diff = &cached.as_ref().expect("set above").1;
            for _ in 0..steps {
                w = diff.step(&w);
                let k1 = rhs(&w);
                let s: Vec<C64> = (0..n).map(|j| w[j] + k1[j] * (0.5 * h)).collect();
                let k2 = rhs(&s);
                let s: Vec<C64> = (0..n).map(|j| w[j] + k2[j] * (0.5 * h)).collect();
                let k3 = rhs(&s);
                let s: Vec<C64> = (0..n).map(|j| w[j] + k3[j] * h).collect();
                let k4 = rhs(&s);
                for j in 0..n {
                    w[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
                }
                w = diff.step(&w);
            }
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Range("vorticity overflow during evolution".into()));
            }
        }
        t = tn;
        out.push(ModeState::from_parts(alpha, y, w.clone(), vec![0.0; n], t));
    }
    Ok(out)
}

/// Least-squares rate of log‖ω‖∞ over the states with time ≥ `from`.
pub fn growth_rate(states: &[ModeState], from: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = states.iter().filter(|s| s.time >= from).map(|s| (s.time, s.omega.max_norm().ln())).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData("need three or more states in the fit window".into()));
    }
    Ok(fit_slope(&pts))
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Contour integrals

/// Piecewise-linear path in the c-plane. The first and last vertices continue to
/// infinity along (−1 − i)ℝ₊ and (1 − i)ℝ₊, so the path runs above the
/// continuous spectrum and closes downwards, where e^{−iαct} decays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub vertices: Vec<C64>,
    /// Traversal left to right (the orientation of the evolution formula) unless reversed.
    pub reversed: bool,
}

impl ContourSpec {
    /// Horizontal segment at height `height` from U_min − margin to U_max + margin.
    pub fn standard(u_min: f64, u_max: f64, height: f64, margin: f64) -> Self {
        ContourSpec { vertices: vec![C64::new(u_min - margin, height), C64::new(u_max + margin, height)], reversed: false }
    }

    /// Checks that the path avoids the real segment [u_min, u_max].
    pub fn validate(&self, u_min: f64, u_max: f64) -> Result<()> {
        let v = &self.vertices;
        if v.is_empty() {
            return Err(Error::Contour("contour needs one or more vertices".into()));
        }
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Contour("non-finite vertex".into()));
        }
        let dist = |a: C64, b: C64| -> f64 {
            // Distance from segment ab to the real interval, sampled finely.
            (0..=200)
                .map(|k| {
                    let z = a + (b - a) * (k as f64 / 200.0);
                    let x = z.re.clamp(u_min, u_max);
                    (z - x).norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        for w in v.windows(2) {
            if dist(w[0], w[1]) < 1e-3 {
                return Err(Error::Contour(format!("segment {} -> {} touches the continuous spectrum", w[0], w[1])));
            }
        }
        if v.iter().any(|z| z.im <= 0.0 && z.re >= u_min && z.re <= u_max) {
            return Err(Error::Contour("vertex on or below the continuous spectrum".into()));
        }
        let (first, last) = (v[0], v[v.len() - 1]);
        if first.re - first.im.max(0.0) >= u_min - 1e-3 && first.im > 0.0 {
            return Err(Error::Contour(format!("left leg from {first} crosses the spectrum")));
        }
        if last.re + last.im.max(0.0) <= u_max + 1e-3 && last.im > 0.0 {
            return Err(Error::Contour(format!("right leg from {last} crosses the spectrum")));
        }
        Ok(())
    }

    fn pieces(&self) -> Vec<Piece> {
        let v = &self.vertices;
        let mut out = vec![Piece::LeftLeg(v[0])];
        for w in v.windows(2) {
            out.push(Piece::Segment(w[0], w[1]));
        }
        out.push(Piece::RightLeg(v[v.len() - 1]));
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    LeftLeg(C64),
    Segment(C64, C64),
    RightLeg(C64),
}

const LEG_SCALE: f64 = 1.0;

impl Piece {
    /// (c(u), dc/du) for u ∈ [0, 1]; None at the point at infinity.
    fn at(&self, u: f64) -> Option<(C64, C64)> {
        let l = LEG_SCALE;
        match *self {
            Piece::LeftLeg(v) => {
                if u <= 0.0 {
                    return None;
                }
                let s = l * (1.0 - u) / u;
                Some((v + C64::new(-1.0, -1.0) * s, C64::new(1.0, 1.0) * (l / (u * u))))
            }
            Piece::Segment(a, b) => Some((a + (b - a) * u, b - a)),
            Piece::RightLeg(v) => {
                if u >= 1.0 {
                    return None;
                }
                let s = l * u / (1.0 - u);
                Some((v + C64::new(1.0, -1.0) * s, C64::new(1.0, -1.0) * (l / (1.0 - u).powi(2))))
            }
        }
    }
}

/// Change under halving, relative to the size of the initial data, below which a piece is accepted.
pub const CONTOUR_TOL: f64 = 1e-6;
const MAX_LEVEL: u32 = 11;

/// Nested Simpson integration of Σ_k e^{−iαc t_k} F(c) dc along one piece,
/// refined until halving the spacing changes no output by more than `tol` (absolute).
fn integrate_piece<F>(piece: Piece, alpha: f64, times: &[f64], len: usize, tol: f64, f: &F) -> Result<Vec<Vec<C64>>>
where
    F: Fn(C64) -> Result<Vec<C64>> + Sync,
{
    let zero = vec![C64::new(0.0, 0.0); len];
    let eval = |u: f64| -> Result<(C64, Vec<C64>)> {
        match piece.at(u) {
            None => Ok((C64::new(0.0, 0.0), zero.clone())),
            Some((c, dc)) => Ok((c, f(c)?.into_iter().map(|v| v * dc).collect())),
        }
    };
    let mut nodes: Vec<(C64, Vec<C64>)> = Vec::new();
    let mut n = 16usize;
    let first: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    for r in par::map(&first, |&u| eval(u)) {
        nodes.push(r?);
    }
    let simpson = |nodes: &[(C64, Vec<C64>)], stride: usize| -> Vec<Vec<C64>> {
        let m = (nodes.len() - 1) / stride;
        let h = 1.0 / m as f64;
        times
            .iter()
            .map(|&t| {
                let mut acc = vec![C64::new(0.0, 0.0); len];
                for k in 0..=m {
                    let (c, ref v) = nodes[k * stride];
                    if v.is_empty() {
                        continue;
                    }
                    let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    let e = (-I * alpha * c * t).exp() * (w * h / 3.0);
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a += x * e;
                    }
                }
                acc
            })
            .collect()
    };
    let mut level = 4;
    loop {
        let fine = simpson(&nodes, 1);
        let coarse = simpson(&nodes, 2);
        let diff = fine
            .iter()
            .zip(&coarse)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max);
        if diff <= tol {
            return Ok(fine);
        }
        if level >= MAX_LEVEL {
            return Err(Error::Contour(format!("quadrature not converged after {n} panels (change {diff:.2e})")));
        }
        let mids: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
        let new = par::map(&mids, |&u| eval(u));
        let mut merged = Vec::with_capacity(2 * n + 1);
        for (j, r) in new.into_iter().enumerate() {
            merged.push(nodes[j].clone());
            merged.push(r?);
        }
        merged.push(nodes[n].clone());
        nodes = merged;
        n *= 2;
        level += 1;
    }
}

fn spectrum_range(profile: &dyn ShearProfile, y: &[f64]) -> (f64, f64) {
    y.iter().map(|&t| profile.eval(C64::new(t, 0.0)).re).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn node_error(c: C64, e: Error) -> Error {
    match e {
        Error::NearEigenvalue(m) => Error::Contour(format!("contour node c = {c} is near an eigenvalue: {m}")),
        Error::Parameter(m) | Error::Domain(m) => Error::Contour(format!("contour node c = {c}: {m}")),
        other => other,
    }
}

/// Large-c data shared by the contour evaluators.
struct Tail {
    cs: C64,
    psi0: Vec<C64>,
    d: Vec<C64>,
}

fn tail_terms(profile: &dyn ShearProfile, alpha: f64, omega0: &GridFunction) -> (Tail, f64, f64) {
    let y = &omega0.y;
    let (lo, hi) = spectrum_range(profile, y);
    let cs = C64::new(0.5 * (lo + hi), 0.0);
    let psi0 = poisson_uniform(alpha, y, &omega0.values);
    let (u, u2) = profile_samples(profile, y);
    let src: Vec<C64> = (0..y.len()).map(|j| (u[j] - cs.re) * omega0.values[j] + u2[j] * psi0[j]).collect();
    let d = poisson_uniform(alpha, y, &src);
    (Tail { cs, psi0, d }, lo, hi)
}

fn check_contour_input(alpha: f64, omega0: &GridFunction) -> Result<()> {
    check_kernel_grid(alpha, &omega0.y)?;
    check_uniform(&omega0.y)?;
    Ok(())
}

/// ψ(t) for each t from the initial vorticity, by the resolvent contour integral.
///
/// The two leading large-c terms −(iα)⁻¹[ψ₀/(c − c_s) + D/(c − c_s)²] are
/// integrated exactly; only the O(c⁻³) remainder is summed numerically.
pub fn contour_evolve_vorticity(
    profile: &dyn ShearProfile,
    alpha: f64,
    omega0: &GridFunction,
    times: &[f64],
    contour: &ContourSpec,
) -> Result<Vec<GridFunction>> {
    check_contour_input(alpha, omega0)?;
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return param("times must be non-negative");
    }
    let (tail, lo, hi) = tail_terms(profile, alpha, omega0);
    contour.validate(lo, hi)?;
    let n = omega0.len();
    let ia = I * alpha;
    let remainder = |c: C64| -> Result<Vec<C64>> {
        let r = solve_rayleigh_bvp(profile, alpha, c, omega0).map_err(|e| node_error(c, e))?;
        let z = c - tail.cs;
        Ok((0..n).map(|j| (-r.values[j] + tail.psi0[j] / z + tail.d[j] / (z * z)) / ia).collect())
    };
    let mut total: Vec<Vec<C64>> = times
        .iter()
        .map(|&t| {
            let e = (-ia * tail.cs * t).exp();
            (0..n).map(|j| e * (tail.psi0[j] - ia * t * tail.d[j])).collect()
        })
        .collect();
    let sign = if contour.reversed { -1.0 } else { 1.0 };
    let tol = CONTOUR_TOL * tail.psi0.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for piece in contour.pieces() {
        let part = integrate_piece(piece, alpha, times, n, tol, &remainder)?;
        for (tot, p) in total.iter_mut().zip(part) {
            for (a, b) in tot.iter_mut().zip(p) {
                *a += b * (sign * alpha / (2.0 * PI));
            }
        }
    }
    // A reversed path integrates the exact terms with the opposite sign too.
    if contour.reversed {
        for (k, &t) in times.iter().enumerate() {
            let e = (-ia * tail.cs * t).exp();
            for j in 0..n {
                total[k][j] -= 2.0 * e * (tail.psi0[j] - ia * t * tail.d[j]);
            }
        }
    }
    Ok(total.into_iter().map(|v| GridFunction::new(omega0.y.clone(), v).with_alpha(alpha)).collect())
}

/// e^{L_E t}ψ⁰ by the contour integral; ω₀ = −(∂² − α²)ψ⁰ by fourth-order differences.
pub fn resolvent_contour_evolve(profile: &dyn ShearProfile, alpha: f64, psi0: &GridFunction, t: f64, contour: &ContourSpec) -> Result<GridFunction> {
    check_uniform(&psi0.y)?;
    let d2 = crate::grid::d2(&psi0.y, &psi0.values);
    let omega0 = GridFunction::new(psi0.y.clone(), (0..psi0.len()).map(|j| alpha * alpha * psi0.values[j] - d2[j]).collect());
    Ok(contour_evolve_vorticity(profile, alpha, &omega0, &[t], contour)?.pop().expect("one time"))
}

/// (e^{−iαat} − e^{−iαbt})/(b − a), continuous at a = b.
fn phase_quotient(alpha: f64, t: f64, a: f64, b: f64) -> C64 {
    let d = b - a;
    let x = alpha * t * d;
    if x.abs() < 1e-6 {
        return I * alpha * t * C64::from_polar(1.0, -alpha * a * t) * (1.0 - 0.5 * I * x);
    }
    (C64::from_polar(1.0, -alpha * a * t) - C64::from_polar(1.0, -alpha * b * t)) / d
}

/// ω(t, y) at a grid point y of ω₀ from (α/2π)∫ e^{−iαct} ω_{α,c}(y) dc with
/// ω_{α,c} = (ω₀ − iαU''ψ_{α,c})/(iα(U − c)).
pub fn vorticity_contour(profile: &dyn ShearProfile, alpha: f64, omega0: &GridFunction, t: f64, y: f64, contour: &ContourSpec) -> Result<C64> {
    Ok(vorticity_contour_many(profile, alpha, omega0, &[t], y, contour)?[0])
}

pub fn vorticity_contour_many(
    profile: &dyn ShearProfile,
    alpha: f64,
    omega0: &GridFunction,
    times: &[f64],
    y: f64,
    contour: &ContourSpec,
) -> Result<Vec<C64>> {
    check_contour_input(alpha, omega0)?;
    let j = omega0
        .y
        .iter()
        .position(|&t| (t - y).abs() <= 1e-12 * y.abs().max(1.0))
        .ok_or_else(|| Error::Parameter(format!("y = {y} is not a grid point of omega0")))?;
    let (tail, lo, hi) = tail_terms(profile, alpha, omega0);
    contour.validate(lo, hi)?;
    let z = C64::new(y, 0.0);
    let (uy, u2y) = (profile.eval(z).re, profile.d2(z).re);
    let ia = I * alpha;
    let remainder = |c: C64| -> Result<Vec<C64>> {
        let r = solve_rayleigh_bvp(profile, alpha, c, omega0).map_err(|e| node_error(c, e))?;
        let r1 = -r.values[j] / ia + tail.psi0[j] / (ia * (c - tail.cs));
        Ok(vec![-u2y * r1 / (uy - c)])
    };
    let sign = if contour.reversed { -1.0 } else { 1.0 };
    let mut out: Vec<C64> = times
        .iter()
        .map(|&t| sign * (omega0.values[j] * C64::from_polar(1.0, -alpha * uy * t) - u2y * tail.psi0[j] * phase_quotient(alpha, t, tail.cs.re, uy)))
        .collect();
    let tol = CONTOUR_TOL * omega0.max_norm().max(1e-300);
    for piece in contour.pieces() {
        let part = integrate_piece(piece, alpha, times, 1, tol, &remainder)?;
        for (o, p) in out.iter_mut().zip(part) {
            *o += p[0] * (sign * alpha / (2.0 * PI));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Damping diagnostics

/// ω e^{iαUt}.
pub fn demodulated(profile: &dyn ShearProfile, state: &ModeState) -> GridFunction {
    state.omega.map(|y, w| w * C64::from_polar(1.0, state.alpha * profile.eval(C64::new(y, 0.0)).re * state.time))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingReport {
    /// Slope of log(α‖ψ‖∞ + ‖∂ψ‖∞) against log⟨t⟩ for t ≥ 10.
    pub decay_exponent: f64,
    /// Slope of log‖ω‖∞ on the same window.
    pub vorticity_exponent: f64,
    /// Demodulated vorticity averaged over the last decade of the trajectory.
    pub omega_infinity: GridFunction,
}

pub fn damping_diagnostics(profile: &dyn ShearProfile, trajectory: &[ModeState]) -> Result<DampingReport> {
    let late: Vec<&ModeState> = trajectory.iter().filter(|s| s.time >= 10.0).collect();
    let t_end = trajectory.iter().map(|s| s.time).fold(0.0, f64::max);
    if late.len() < 3 || t_end < 100.0 {
        return Err(Error::InsufficientData("trajectory must reach t = 100 with three or more states beyond t = 10".into()));
    }
    let velocity: Vec<(f64, f64)> = late
        .iter()
        .map(|s| ((1.0 + s.time).ln(), (s.alpha * s.psi.max_norm() + s.dpsi.max_norm()).ln()))
        .collect();
    let vort: Vec<(f64, f64)> = late.iter().map(|s| ((1.0 + s.time).ln(), s.omega.max_norm().ln())).collect();
    let window: Vec<&&ModeState> = late.iter().filter(|s| s.time >= 0.1 * t_end).collect();
    let mut avg = GridFunction::zeros(&window[0].omega.y);
    for s in &window {
        let d = demodulated(profile, s);
        for (a, b) in avg.values.iter_mut().zip(&d.values) {
            *a += b / window.len() as f64;
        }
    }
    Ok(DampingReport { decay_exponent: fit_slope(&velocity), vorticity_exponent: fit_slope(&vort), omega_infinity: avg })
}

/// Geometric output times from t0 to t1 (inclusive), n of them.
pub fn geometric_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 * (t1 / t0).powf(k as f64 / (n - 1) as f64)).collect()
}
