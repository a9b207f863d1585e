//! Rayleigh's equation (U − c)(ψ'' − α²ψ) − U''ψ = f on the half-line.
//!
//! Solutions are carried by Taylor-series integration of ψ'' = qψ,
//! q = α² + U''/(U − c), along paths in the complex y-plane. The solution
//! regular at the critical point comes from its Frobenius series.
//!
//! Wronskians are W(f, g) = f g' − f' g. The decaying and growing solutions are
//! normalised by W(ψ₊, ψ₋) = 1, which is what makes the Green function
//! G = G_int + G_b below invert the operator with a unit-weight delta.

use crate::grid::{cumulative, GridFunction};
use crate::profiles::{critical_point, ShearProfile};
use crate::taylor::{self, divide, Ode2, State};
use crate::{par, param, Error, Result, C64};
use serde::{Deserialize, Serialize};

/// ψ'' = (α² + U''/(U − c))ψ.
pub struct RayleighOde<'a> {
    profile: &'a dyn ShearProfile,
    alpha2: f64,
    c: C64,
    zeros: Vec<C64>,
}

impl<'a> RayleighOde<'a> {
    pub fn new(profile: &'a dyn ShearProfile, alpha: f64, c: C64) -> Self {
        let mut zeros = Vec::new();
        if let Some(z) = profile.preimage(c) {
            zeros.push(z);
            if let Some(p) = profile.period() {
                for k in 1..4 {
                    zeros.push(z + p * k as f64);
                    zeros.push(z - p * k as f64);
                }
            }
        }
        RayleighOde { profile, alpha2: alpha * alpha, c, zeros }
    }

    /// The zero of U − c nearest the real axis, if any.
    pub fn critical(&self) -> Option<C64> {
        self.zeros.first().copied()
    }
}

impl Ode2 for RayleighOde<'_> {
    fn q_jet(&self, z: C64, n: usize) -> Vec<C64> {
        let u = self.profile.jet(z, n + 2);
        let mut a: Vec<C64> = u[..=n].to_vec();
        a[0] -= self.c;
        let b: Vec<C64> = (0..=n).map(|k| u[k + 2] * ((k + 1) * (k + 2)) as f64).collect();
        let mut q = divide(&b, &a);
        q[0] += self.alpha2;
        q
    }

    fn radius(&self, z: C64) -> f64 {
        self.zeros.iter().map(|w| (z - w).norm()).fold(self.profile.singularity_distance(z), f64::min)
    }
}

/// (U − c)(ψ'' − α²ψ) − U''ψ at a point, given ψ and ψ''.
pub fn rayleigh_operator(profile: &dyn ShearProfile, alpha: f64, c: C64, y: C64, psi: C64, psi2: C64) -> C64 {
    (profile.eval(y) - c) * (psi2 - alpha * alpha * psi) - profile.d2(y) * psi
}

/// Frobenius series of the solution holomorphic at y_c: ψ^r = Σ_{n≥1} β_n (y − y_c)^n, β₁ = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLayerSeries {
    pub center: C64,
    pub coefficients: Vec<C64>,
    /// Trusted radius; evaluation is limited to half of it.
    pub radius: f64,
}

const SERIES_TERMS: usize = 64;

impl CriticalLayerSeries {
    pub fn eval(&self, z: C64) -> State {
        taylor::eval_jet(&self.coefficients, z - self.center)
    }

    /// Size of the last retained term at half the radius, relative to the first.
    pub fn tail_estimate(&self) -> f64 {
        let n = self.coefficients.len();
        let h = 0.5 * self.radius;
        (n - 3..n).map(|k| self.coefficients[k].norm() * h.powi(k as i32)).fold(0.0, f64::max) / h
    }
}

pub fn critical_layer_series(profile: &dyn ShearProfile, alpha: f64, c: C64) -> Result<CriticalLayerSeries> {
    let yc = critical_point(profile, c)?;
    let ode = RayleighOde::new(profile, alpha, c);
    let others = ode.zeros.iter().skip(1).map(|w| (yc - w).norm()).fold(f64::INFINITY, f64::min);
    let radius = (0.5 * profile.singularity_distance(yc).min(others)).min(1.0);
    let k = SERIES_TERMS;
    let u = profile.jet(yc, k + 2);
    let mut a: Vec<C64> = u[..=k].to_vec();
    a[0] = C64::new(0.0, 0.0);
    let b: Vec<C64> = (0..=k).map(|j| u[j + 2] * ((j + 1) * (j + 2)) as f64).collect();
    let a2 = alpha * alpha;
    let mut beta = vec![C64::new(0.0, 0.0); k + 1];
    beta[1] = C64::new(1.0, 0.0);
    for m in 1..k {
        let mut rhs = C64::new(0.0, 0.0);
        for j in 0..=m {
            rhs += b[j] * beta[m - j];
        }
        for i in 1..=m {
            rhs += a[i] * beta[m - i] * a2;
        }
        for i in 2..=m {
            rhs -= a[i] * beta[m - i + 2] * ((m - i + 2) * (m - i + 1)) as f64;
        }
        beta[m + 1] = rhs / (a[1] * ((m + 1) * m) as f64);
    }
    Ok(CriticalLayerSeries { center: yc, coefficients: beta, radius })
}

fn states_to_grid(y: &[f64], states: &[State], alpha: f64) -> (GridFunction, GridFunction) {
    (
        GridFunction::new(y.to_vec(), states.iter().map(|s| s[0]).collect()).with_alpha(alpha),
        GridFunction::new(y.to_vec(), states.iter().map(|s| s[1]).collect()).with_alpha(alpha),
    )
}

/// Runs the ODE along the real axis from x0 in both directions, filling every grid point.
fn sweep_from(ode: &dyn Ode2, x0: f64, s0: State, grid: &[f64], out: &mut [Option<State>]) -> Result<()> {
    let (gmin, gmax) = (grid[0], grid[grid.len() - 1]);
    for (j, s) in taylor::real_run(ode, x0, gmax.max(x0), s0, grid)?.1 {
        out[j].get_or_insert(s);
    }
    for (j, s) in taylor::real_run(ode, x0, gmin.min(x0), s0, grid)?.1 {
        out[j].get_or_insert(s);
    }
    Ok(())
}

fn require_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return param("grid must be non-empty and strictly increasing");
    }
    Ok(())
}

/// States (ψ^r, ψ^r') of the regular solution at the grid points.
pub fn regular_states(profile: &dyn ShearProfile, alpha: f64, c: C64, grid: &[f64]) -> Result<Vec<State>> {
    require_increasing(grid)?;
    let series = critical_layer_series(profile, alpha, c)?;
    let ode = RayleighOde::new(profile, alpha, c);
    let yc = series.center;
    let half = 0.5 * series.radius;
    let mut out: Vec<Option<State>> =
        grid.iter().map(|&y| ((C64::new(y, 0.0) - yc).norm() <= half).then(|| series.eval(C64::new(y, 0.0)))).collect();
    if yc.im.abs() < half {
        // The disk meets the real axis in [xl, xr]; continue outward from both ends.
        let w = (half * half - yc.im * yc.im).sqrt();
        let (xl, xr) = (yc.re - w, yc.re + w);
        let (sl, sr) = (series.eval(C64::new(xl, 0.0)), series.eval(C64::new(xr, 0.0)));
        for (j, s) in taylor::real_run(&ode, xr, grid[grid.len() - 1].max(xr), sr, grid)?.1 {
            out[j].get_or_insert(s);
        }
        for (j, s) in taylor::real_run(&ode, xl, grid[0].min(xl), sl, grid)?.1 {
            out[j].get_or_insert(s);
        }
    } else {
        let start = yc - C64::new(0.0, half * yc.im.signum());
        let x0 = C64::new(yc.re, 0.0);
        let s0 = taylor::segment(&ode, start, x0, series.eval(start), &[])?.0;
        sweep_from(&ode, yc.re, s0, grid, &mut out)?;
    }
    Ok(out.into_iter().map(|s| s.expect("grid covered")).collect())
}

/// The solution holomorphic at the critical point, ψ^r(y_c) = 0, ∂ψ^r(y_c) = 1.
pub fn regular_solution(profile: &dyn ShearProfile, alpha: f64, c: C64, grid: &[f64]) -> Result<GridFunction> {
    let series = critical_layer_series(profile, alpha, c)?;
    let spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if series.radius < spacing {
        return Err(Error::Resolution(format!(
            "critical-layer series radius {:.3e} below grid spacing {spacing:.3e}",
            series.radius
        )));
    }
    let st = regular_states(profile, alpha, c, grid)?;
    Ok(states_to_grid(grid, &st, alpha).0)
}

/// ψ^s = ψ^r ∫_{y⋆}^y dz/ψ^r(z)², so that W(ψ^r, ψ^s) = 1.
///
/// Evaluated by continuing the ODE along the real axis from y⋆, which fixes the
/// branch of log(y − y_c) with its cut pointing away from the real axis.
pub fn singular_states(
    profile: &dyn ShearProfile,
    alpha: f64,
    c: C64,
    grid: &[f64],
    y_star: Option<f64>,
) -> Result<Vec<State>> {
    require_increasing(grid)?;
    let series = critical_layer_series(profile, alpha, c)?;
    let yc = series.center;
    if yc.im == 0.0 && yc.re >= grid[0] && yc.re <= grid[grid.len() - 1] {
        return Err(Error::Branch("critical point on the real integration path; give c a nonzero imaginary part".into()));
    }
    let ys = y_star.unwrap_or(yc.re + 0.5 * series.radius);
    if (C64::new(ys, 0.0) - yc).norm() < 1e-3 * series.radius {
        return param("y_star too close to the critical point");
    }
    let r = regular_states(profile, alpha, c, &[ys])?[0];
    if r[0].norm() < 1e-12 {
        return Err(Error::Breakdown("regular solution vanishes at y_star".into()));
    }
    let ode = RayleighOde::new(profile, alpha, c);
    let mut out = vec![None; grid.len()];
    sweep_from(&ode, ys, [C64::new(0.0, 0.0), 1.0 / r[0]], grid, &mut out)?;
    Ok(out.into_iter().map(|s| s.expect("grid covered")).collect())
}

pub fn singular_solution(
    profile: &dyn ShearProfile,
    alpha: f64,
    c: C64,
    grid: &[f64],
    y_star: Option<f64>,
) -> Result<GridFunction> {
    let st = singular_states(profile, alpha, c, grid, y_star)?;
    Ok(states_to_grid(grid, &st, alpha).0)
}

/// Decaying/growing pair with W(ψ₊, ψ₋) = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighBasis {
    pub alpha: f64,
    pub c: C64,
    pub psi_minus: GridFunction,
    pub dpsi_minus: GridFunction,
    pub psi_plus: GridFunction,
    pub dpsi_plus: GridFunction,
    /// (ψ₋(0), ∂ψ₋(0)).
    pub boundary_minus: (C64, C64),
    pub boundary_plus: (C64, C64),
    /// W(ψ₊, ψ₋) at the first grid point.
    pub wronskian: C64,
    /// max − min of |W| over the grid.
    pub wronskian_spread: f64,
    pub log_branch_cut: String,
}

/// Far-field check shared by the decaying solutions.
pub(crate) fn check_far_field(profile: &dyn ShearProfile, y_max: f64) -> Result<()> {
    let up = profile.u_plus();
    if up.is_finite() {
        let gap = (profile.eval(C64::new(y_max, 0.0)).re - up).abs();
        if gap > 1e-8 {
            return Err(Error::Truncation(format!("|U(Y_max) - U_+| = {gap:.2e} > 1e-8; increase Y_max")));
        }
    }
    Ok(())
}

fn check_path(ode: &RayleighOde, grid: &[f64]) -> Result<()> {
    if let Some(yc) = ode.critical() {
        if yc.im.abs() < 1e-13 && yc.re >= grid[0] && yc.re <= grid[grid.len() - 1] {
            return Err(Error::Domain(format!(
                "c = {} lies on the continuous spectrum; decaying solutions need Im c != 0",
                ode.c
            )));
        }
    }
    Ok(())
}

pub fn decaying_pair(profile: &dyn ShearProfile, alpha: f64, c: C64, grid: &[f64]) -> Result<RayleighBasis> {
    if !(alpha > 0.0) {
        return param("alpha must be positive");
    }
    require_increasing(grid)?;
    let y_max = grid[grid.len() - 1];
    check_far_field(profile, y_max)?;
    let ode = RayleighOde::new(profile, alpha, c);
    check_path(&ode, grid)?;
    let e = (-alpha * y_max).exp();
    let init = [C64::new(e, 0.0), C64::new(-alpha * e, 0.0)];
    let (wall_m, minus) = taylor::real_run(&ode, y_max, grid[0], init, grid)?;
    let mut sm = vec![[C64::new(0.0, 0.0); 2]; grid.len()];
    for (j, s) in minus {
        sm[j] = s;
    }
    // ψ₊ from the wall: free-case form −e^{αy}/(2α) when ψ₋(0) allows it,
    // otherwise the minimum-norm data with unit Wronskian.
    let (m0, m1) = (wall_m[0], wall_m[1]);
    let p_init = if m0.norm() >= 1e-2 * m1.norm().max(alpha) / alpha.max(1.0) {
        let p0 = C64::new(-0.5 / alpha, 0.0);
        [p0, (p0 * m1 - 1.0) / m0]
    } else {
        let n = m0.norm_sqr() + m1.norm_sqr();
        [m1.conj() / n, -m0.conj() / n]
    };
    let (_, plus) = taylor::real_run(&ode, grid[0], y_max, p_init, grid)?;
    let mut sp = vec![[C64::new(0.0, 0.0); 2]; grid.len()];
    for (j, s) in plus {
        sp[j] = s;
    }
    let w: Vec<C64> = sp.iter().zip(&sm).map(|(p, m)| p[0] * m[1] - p[1] * m[0]).collect();
    let (wmin, wmax) = w.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.norm()), hi.max(v.norm())));
    let (psi_minus, dpsi_minus) = states_to_grid(grid, &sm, alpha);
    let (psi_plus, dpsi_plus) = states_to_grid(grid, &sp, alpha);
    let cut = match ode.critical() {
        Some(yc) if yc.im >= 0.0 => format!("log(y - y_c) cut on {{y_c + i t, t >= 0}}, y_c = {yc}"),
        Some(yc) => format!("log(y - y_c) cut on {{y_c - i t, t >= 0}}, y_c = {yc}"),
        None => "no critical point".into(),
    };
    Ok(RayleighBasis {
        alpha,
        c,
        psi_minus,
        dpsi_minus,
        psi_plus,
        dpsi_plus,
        boundary_minus: (sm[0][0], sm[0][1]),
        boundary_plus: (sp[0][0], sp[0][1]),
        wronskian: w[0],
        wronskian_spread: wmax - wmin,
        log_branch_cut: cut,
    })
}

/// How the path from Y_max to the wall passes the critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallPath {
    /// Straight along the real axis (inviscid continuation for Im c > 0).
    RealAxis,
    /// Detour through the lower half-plane around y_c (viscous continuation, U'(y_c) > 0).
    Below,
}

/// (ψ₋(0), ∂ψ₋(0)) for ψ₋ = e^{−αy} at y_max.
pub fn decaying_wall_values(profile: &dyn ShearProfile, alpha: f64, c: C64, y_max: f64, path: WallPath) -> Result<State> {
    Ok(decaying_states(profile, alpha, c, y_max, &[0.0], path)?[0])
}

/// States of ψ₋ (ψ₋ = e^{−αy} at y_max) at increasing points below y_max.
///
/// With `WallPath::Below` and Im y_c < 0, points left of Re y_c are reached by
/// passing under y_c, so they carry the other branch of the logarithm.
pub fn decaying_states(
    profile: &dyn ShearProfile,
    alpha: f64,
    c: C64,
    y_max: f64,
    pts: &[f64],
    path: WallPath,
) -> Result<Vec<State>> {
    require_increasing(pts)?;
    if pts[pts.len() - 1] > y_max {
        return param("points must lie below y_max");
    }
    let ode = RayleighOde::new(profile, alpha, c);
    let e = (-alpha * y_max).exp();
    let init = [C64::new(e, 0.0), C64::new(-alpha * e, 0.0)];
    let mut out = vec![None; pts.len()];
    let yc = ode.critical();
    let detour = match (path, yc) {
        (WallPath::Below, Some(z)) => z.re > pts[0] && z.re < y_max,
        _ => false,
    };
    if !detour {
        check_path(&ode, &[pts[0], y_max])?;
        for (j, s) in taylor::real_run(&ode, y_max, pts[0], init, pts)?.1 {
            out[j] = Some(s);
        }
    } else {
        let yc = yc.expect("detour needs y_c");
        let r = 0.5 * yc.norm();
        let depth = (-yc.im).max(0.0) + r.max(1e-3).min(0.5 * profile.singularity_distance(yc));
        let right = yc.re + r;
        let s_right = if right < y_max {
            taylor::real_run(&ode, y_max, right, init, &[])?.0
        } else {
            taylor::segment(&ode, C64::new(y_max, 0.0), C64::new(right, 0.0), init, &[])?.0
        };
        let above: Vec<usize> = (0..pts.len()).filter(|&j| pts[j] >= yc.re).collect();
        if !above.is_empty() {
            let lo = pts[above[0]];
            if right < y_max {
                for (j, s) in taylor::real_run(&ode, y_max, lo, init, pts)?.1 {
                    out[j] = Some(s);
                }
            } else {
                for (j, s) in taylor::real_run(&ode, right, lo, s_right, pts)?.1 {
                    out[j] = Some(s);
                }
            }
        }
        let left = (yc.re - r).max(pts[0]);
        let s_left = taylor::polygon(
            &ode,
            &[C64::new(right, 0.0), C64::new(right, -depth), C64::new(left, -depth), C64::new(left, 0.0)],
            s_right,
        )?;
        let below: Vec<f64> = pts.iter().copied().filter(|&y| y < yc.re).collect();
        let top = below[below.len() - 1];
        for (j, s) in taylor::real_run(&ode, left, top.max(left), s_left, &below)?.1 {
            out[j].get_or_insert(s);
        }
        for (j, s) in taylor::real_run(&ode, left, pts[0].min(left), s_left, &below)?.1 {
            out[j].get_or_insert(s);
        }
    }
    Ok(out.into_iter().map(|s| s.expect("points covered")).collect())
}

/// States of ψ₊, ψ₋ at a few points, for pointwise Green evaluation.
fn pair_at(profile: &dyn ShearProfile, alpha: f64, c: C64, pts: &[f64]) -> Result<RayleighBasis> {
    let mut grid: Vec<f64> = pts.to_vec();
    grid.push(0.0);
    grid.push(crate::grid::Y_MAX);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    decaying_pair(profile, alpha, c, &grid)
}

fn lookup(b: &RayleighBasis, y: f64) -> (C64, C64) {
    let j = b.psi_minus.y.iter().position(|&t| t == y).expect("point on grid");
    (b.psi_minus.values[j], b.psi_plus.values[j])
}

/// G(x, y) = G_int + G_b, solving Ray_y G = δ_x with G(x, 0) = 0 and decay.
pub fn green_function(profile: &dyn ShearProfile, alpha: f64, c: C64, x: f64, y: f64) -> Result<C64> {
    if !(x > 0.0 && y >= 0.0) {
        return param("need x > 0 and y >= 0");
    }
    let b = pair_at(profile, alpha, c, &[x, y])?;
    green_from_basis(profile, &b, x, y)
}

fn green_from_basis(profile: &dyn ShearProfile, b: &RayleighBasis, x: f64, y: f64) -> Result<C64> {
    let m0 = b.boundary_minus.0;
    if m0.norm() < 1e-10 {
        return Err(Error::NearEigenvalue(format!("|psi_-(0)| = {:.2e} at c = {}", m0.norm(), b.c)));
    }
    let p0 = b.boundary_plus.0;
    let (mx, px) = lookup(b, x);
    let (my, py) = lookup(b, y);
    let den = profile.eval(C64::new(x, 0.0)) - b.c;
    let gi = if y > x { my * px } else { mx * py } / den;
    let gb = -p0 * my / m0 * mx / den;
    Ok(gi + gb)
}

/// ψ = ∫ G(x, ·) f(x) dx on the grid of f.
pub fn solve_rayleigh_bvp(profile: &dyn ShearProfile, alpha: f64, c: C64, f: &GridFunction) -> Result<GridFunction> {
    if c.im.abs() < 1e-6 {
        let up = profile.u_plus();
        let in_range = c.re >= profile.eval(C64::new(0.0, 0.0)).re.min(up) && c.re <= up.max(0.0);
        if in_range {
            return param("|Im c| < 1e-6 on the continuous spectrum; move c off the real axis");
        }
    }
    crate::grid::check_uniform(&f.y)?;
    let b = decaying_pair(profile, alpha, c, &f.y)?;
    Ok(apply_green(profile, &b, f)?.with_alpha(alpha))
}

/// Green quadrature against f with a precomputed basis on f's grid.
pub fn apply_green(profile: &dyn ShearProfile, b: &RayleighBasis, f: &GridFunction) -> Result<GridFunction> {
    let m0 = b.boundary_minus.0;
    if m0.norm() < 1e-10 {
        return Err(Error::NearEigenvalue(format!("|psi_-(0)| = {:.2e} at c = {}", m0.norm(), b.c)));
    }
    let y = &f.y;
    let n = y.len();
    let g: Vec<C64> = (0..n).map(|j| f.values[j] / (profile.eval(C64::new(y[j], 0.0)) - b.c)).collect();
    let left: Vec<C64> = (0..n).map(|j| b.psi_plus.values[j] * g[j]).collect();
    let right: Vec<C64> = (0..n).map(|j| b.psi_minus.values[j] * g[j]).collect();
    let cl = cumulative(y, &left);
    // Tail integrals ∫_y^Y accumulated from the far end.
    let yr: Vec<f64> = y.iter().rev().map(|t| -t).collect();
    let rr: Vec<C64> = right.iter().rev().copied().collect();
    let cr: Vec<C64> = cumulative(&yr, &rr).into_iter().rev().collect();
    let total = cr[0];
    let k = b.boundary_plus.0 / m0;
    let values = (0..n)
        .map(|j| b.psi_minus.values[j] * cl[j] + b.psi_plus.values[j] * cr[j] - k * b.psi_minus.values[j] * total)
        .collect();
    Ok(GridFunction::new(y.clone(), values))
}

/// Closed rectangle in the c-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }
    fn contains(&self, c: C64) -> bool {
        c.re >= self.re_min && c.re <= self.re_max && c.im >= self.im_min && c.im <= self.im_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub c: C64,
    /// |ψ₋(0, c)| / max|ψ₋|.
    pub residual: f64,
    pub winding: i64,
}

/// c ↦ ψ₋(0, c) with ψ₋ = e^{−αy} at Y_max.
pub fn wall_function(profile: &dyn ShearProfile, alpha: f64, c: C64) -> Result<C64> {
    Ok(decaying_wall_values(profile, alpha, c, crate::grid::Y_MAX, WallPath::RealAxis)?[0])
}

fn winding(profile: &dyn ShearProfile, alpha: f64, r: &Region, per_side: usize) -> Result<f64> {
    let k = r.corners();
    let pts: Vec<C64> = (0..4)
        .flat_map(|s| {
            let (a, b) = (k[s], k[(s + 1) % 4]);
            (0..per_side).map(move |j| a + (b - a) * (j as f64 / per_side as f64))
        })
        .collect();
    let vals: Vec<Result<C64>> = par::map(&pts, |&c| wall_function(profile, alpha, c));
    let vals: Vec<C64> = vals.into_iter().collect::<Result<_>>()?;
    let mut total = 0.0;
    for j in 0..vals.len() {
        let d = (vals[(j + 1) % vals.len()] / vals[j]).arg();
        if d.abs() > 1.0 {
            return Ok(f64::NAN);
        }
        total += d;
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}

/// Integer winding number of ψ₋(0, ·) around the rectangle, with adaptive doubling.
pub fn winding_number(profile: &dyn ShearProfile, alpha: f64, r: &Region, min_per_side: usize) -> Result<i64> {
    let mut n = min_per_side.max(16);
    let mut prev = winding(profile, alpha, r, n)?;
    for _ in 0..5 {
        n *= 2;
        let w = winding(profile, alpha, r, n)?;
        if w.is_finite() && prev.is_finite() && (w - prev).abs() < 0.1 && (w - w.round()).abs() < 0.1 {
            return Ok(w.round() as i64);
        }
        prev = w;
    }
    Err(Error::Contour(format!("winding number did not settle (last {prev:.3})")))
}

fn newton_wall(profile: &dyn ShearProfile, alpha: f64, mut c: C64, r: &Region) -> Option<C64> {
    for _ in 0..60 {
        let f = wall_function(profile, alpha, c).ok()?;
        let h = 1e-7 * c.norm().max(1.0);
        let fp = wall_function(profile, alpha, c + h).ok()?;
        let fm = wall_function(profile, alpha, c - h).ok()?;
        let d = -f / ((fp - fm) / (2.0 * h));
        c += d;
        if !r.contains(c) {
            return None;
        }
        if d.norm() < 1e-13 * c.norm().max(1.0) {
            return Some(c);
        }
    }
    None
}

fn isolate(profile: &dyn ShearProfile, alpha: f64, r: Region, w: i64, depth: usize, out: &mut Vec<C64>) -> Result<()> {
    if w <= 0 {
        return Ok(());
    }
    let mid = C64::new(0.5 * (r.re_min + r.re_max), 0.5 * (r.im_min + r.im_max));
    if w == 1 {
        if let Some(c) = newton_wall(profile, alpha, mid, &r) {
            out.push(c);
            return Ok(());
        }
    }
    if depth > 24 {
        out.push(mid);
        return Ok(());
    }
    let halves = if r.re_max - r.re_min >= r.im_max - r.im_min {
        [Region { re_max: mid.re, ..r }, Region { re_min: mid.re, ..r }]
    } else {
        [Region { im_max: mid.im, ..r }, Region { im_min: mid.im, ..r }]
    };
    let w0 = winding_number(profile, alpha, &halves[0], 128)?;
    isolate(profile, alpha, halves[0], w0, depth + 1, out)?;
    isolate(profile, alpha, halves[1], w - w0, depth + 1, out)
}

/// Zeros of c ↦ ψ₋(0, c) inside the rectangle (argument principle, then Newton).
pub fn point_spectrum(profile: &dyn ShearProfile, alpha: f64, region: Region) -> Result<Vec<Eigenvalue>> {
    if !(alpha > 0.0) || !(region.re_max > region.re_min) || !(region.im_max > region.im_min) {
        return param("need alpha > 0 and a non-degenerate region");
    }
    if region.im_min < 1e-4 {
        return param("region must lie at least 1e-4 above the real axis");
    }
    let w = winding_number(profile, alpha, &region, 512)?;
    let mut zeros = Vec::new();
    isolate(profile, alpha, region, w, 0, &mut zeros)?;
    let coarse = crate::grid::uniform(crate::grid::Y_MAX, 301);
    zeros
        .into_iter()
        .map(|c| {
            let b = decaying_pair(profile, alpha, c, &coarse)?;
            let residual = b.boundary_minus.0.norm() / b.psi_minus.max_norm();
            Ok(Eigenvalue { c, residual, winding: 1 })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    StableCertificate,
    Inconclusive,
}

/// Stable certificate iff U'' keeps one sign on a dense sample of [0, Y_max].
pub fn rayleigh_criterion(profile: &dyn ShearProfile) -> Criterion {
    let n = 20_000;
    let v: Vec<f64> = (0..=n).map(|j| profile.d2(C64::new(j as f64 * crate::grid::Y_MAX / n as f64, 0.0)).re).collect();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let pos = v.iter().any(|&x| x > tol);
    let neg = v.iter().any(|&x| x < -tol);
    if pos && neg {
        Criterion::Inconclusive
    } else {
        Criterion::StableCertificate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{Constant, ExpLayer};

    #[test]
    fn free_case_basis_is_exponential() {
        let p = Constant { value: 1.0 };
        let grid = crate::grid::uniform(30.0, 301);
        let b = decaying_pair(&p, 0.7, C64::new(0.3, 0.2), &grid).unwrap();
        for (j, &y) in grid.iter().enumerate() {
            let em = (-0.7 * y).exp();
            let ep = -(0.7 * y).exp() / 1.4;
            assert!((b.psi_minus.values[j] - em).norm() < 1e-12 * em.max(1e-3));
            assert!((b.psi_plus.values[j] - ep).norm() < 1e-12 * ep.abs());
        }
    }

    #[test]
    fn series_starts_linearly() {
        let p = ExpLayer { u_plus: 1.0 };
        let s = critical_layer_series(&p, 0.5, C64::new(0.3, 0.1)).unwrap();
        assert_eq!(s.coefficients[0], C64::new(0.0, 0.0));
        assert_eq!(s.coefficients[1], C64::new(1.0, 0.0));
        assert!(s.tail_estimate() < 1e-10);
    }
}
