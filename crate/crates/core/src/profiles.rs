//! Background shear profiles, critical points and the Dirichlet heat flow of the background.

use crate::grid::Y_MAX;
use crate::{param, Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Debug;
use std::io::{BufRead, Write};

/// Analytic shear profile U(y) on the half-line, with its complex extension.
pub trait ShearProfile: Debug + Send + Sync {
    fn name(&self) -> String;

    /// Taylor coefficients U^{(k)}(z)/k! for k = 0..=n.
    fn jet(&self, z: C64, n: usize) -> Vec<C64>;

    fn eval(&self, z: C64) -> C64 {
        self.jet(z, 0)[0]
    }
    fn d1(&self, z: C64) -> C64 {
        self.jet(z, 1)[1]
    }
    fn d2(&self, z: C64) -> C64 {
        2.0 * self.jet(z, 2)[2]
    }

    fn u_plus(&self) -> f64;

    /// Half-width of the strip around the real axis where the extension is trusted.
    fn analyticity_width(&self) -> f64;

    /// Distance from z to the nearest singularity of the extension (infinite for entire profiles).
    fn singularity_distance(&self, z: C64) -> f64;

    /// Imaginary period of U, if any. Zeros of U − c repeat with it.
    fn period(&self) -> Option<C64> {
        None
    }

    /// A zero of U − c near the real axis, without validation.
    fn preimage(&self, c: C64) -> Option<C64> {
        let seed = real_seed(self, c.re)?;
        newton_preimage(self, c, C64::new(seed, 0.0))
    }

    fn monotone(&self) -> bool {
        sample(self).iter().all(|&y| self.d1(C64::new(y, 0.0)).re > 0.0)
    }

    fn concave(&self) -> bool {
        sample(self).iter().skip(1).all(|&y| self.d2(C64::new(y, 0.0)).re <= 0.0)
    }
}

fn sample<P: ShearProfile + ?Sized>(_p: &P) -> Vec<f64> {
    (0..=3000).map(|j| j as f64 * Y_MAX / 3000.0).collect()
}

/// Real y with U(y) = target by bracketing on the real axis.
fn real_seed<P: ShearProfile + ?Sized>(p: &P, target: f64) -> Option<f64> {
    let f = |y: f64| p.eval(C64::new(y, 0.0)).re - target;
    let n = 600;
    let mut a = 0.0;
    let mut fa = f(a);
    if fa == 0.0 {
        return Some(0.0);
    }
    for j in 1..=n {
        let b = j as f64 * Y_MAX / n as f64;
        let fb = f(b);
        if fa * fb <= 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if f(lo) * f(m) <= 0.0 {
                    hi = m
                } else {
                    lo = m
                }
            }
            return Some(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    None
}

fn newton_preimage<P: ShearProfile + ?Sized>(p: &P, c: C64, mut z: C64) -> Option<C64> {
    for _ in 0..50 {
        let r = p.eval(z) - c;
        if r.norm() <= 1e-14 * c.norm().max(1.0) {
            return Some(z);
        }
        let d = p.d1(z);
        if d.norm() == 0.0 {
            return None;
        }
        z -= r / d;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
    }
    let r = (p.eval(z) - c).norm();
    (r <= 1e-12).then_some(z)
}

/// Coefficients of tanh about z0, from T' = 1 − T².
fn tanh_jet(z0: C64, n: usize) -> Vec<C64> {
    let mut t = vec![C64::new(0.0, 0.0); n + 1];
    t[0] = ctanh(z0);
    for k in 0..n {
        let mut s = C64::new(0.0, 0.0);
        for j in 0..=k {
            s += t[j] * t[k - j];
        }
        let one = if k == 0 { 1.0 } else { 0.0 };
        t[k + 1] = (one - s) / (k as f64 + 1.0);
    }
    t
}

/// Coefficients of e^{-s(z0+h)} in h.
fn exp_jet(s: C64, z0: C64, n: usize) -> Vec<C64> {
    let mut e = vec![C64::new(0.0, 0.0); n + 1];
    e[0] = (-s * z0).exp();
    for k in 1..=n {
        e[k] = e[k - 1] * (-s) / k as f64;
    }
    e
}

/// Distance from z to the lattice center + i(π/2 + kπ).
fn tanh_pole_distance(z: C64, center: f64) -> f64 {
    let t = z.im - PI / 2.0;
    let k = (t / PI).round();
    let dim = t - k * PI;
    (z.re - center).hypot(dim)
}

/// U = u₊·tanh(y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tanh {
    pub u_plus: f64,
}

/// Complex tanh that stays finite for large |Re z|.
pub fn ctanh(z: C64) -> C64 {
    if z.re < 0.0 {
        return -ctanh(-z);
    }
    let e = (-2.0 * z).exp();
    (1.0 - e) / (1.0 + e)
}

impl ShearProfile for Tanh {
    fn name(&self) -> String {
        "tanh".into()
    }
    fn jet(&self, z: C64, n: usize) -> Vec<C64> {
        tanh_jet(z, n).into_iter().map(|t| t * self.u_plus).collect()
    }
    fn eval(&self, z: C64) -> C64 {
        ctanh(z) * self.u_plus
    }
    fn d1(&self, z: C64) -> C64 {
        let t = ctanh(z);
        (1.0 - t * t) * self.u_plus
    }
    fn d2(&self, z: C64) -> C64 {
        let t = ctanh(z);
        -2.0 * t * (1.0 - t * t) * self.u_plus
    }
    fn u_plus(&self) -> f64 {
        self.u_plus
    }
    fn analyticity_width(&self) -> f64 {
        1.0
    }
    fn singularity_distance(&self, z: C64) -> f64 {
        tanh_pole_distance(z, 0.0)
    }
    fn period(&self) -> Option<C64> {
        Some(C64::new(0.0, PI))
    }
    fn preimage(&self, c: C64) -> Option<C64> {
        let w = c / self.u_plus;
        Some(0.5 * ((1.0 + w) / (1.0 - w)).ln())
    }
    fn monotone(&self) -> bool {
        self.u_plus > 0.0
    }
    fn concave(&self) -> bool {
        self.u_plus > 0.0
    }
}

/// U = u₊·(1 − e^{−y}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpLayer {
    pub u_plus: f64,
}

impl ShearProfile for ExpLayer {
    fn name(&self) -> String {
        "exp_layer".into()
    }
    fn jet(&self, z: C64, n: usize) -> Vec<C64> {
        let mut e: Vec<C64> = exp_jet(C64::new(1.0, 0.0), z, n).into_iter().map(|v| -v * self.u_plus).collect();
        e[0] += self.u_plus;
        e
    }
    fn eval(&self, z: C64) -> C64 {
        (1.0 - (-z).exp()) * self.u_plus
    }
    fn d1(&self, z: C64) -> C64 {
        (-z).exp() * self.u_plus
    }
    fn d2(&self, z: C64) -> C64 {
        -(-z).exp() * self.u_plus
    }
    fn u_plus(&self) -> f64 {
        self.u_plus
    }
    fn analyticity_width(&self) -> f64 {
        1.0
    }
    fn singularity_distance(&self, _z: C64) -> f64 {
        f64::INFINITY
    }
    fn period(&self) -> Option<C64> {
        Some(C64::new(0.0, 2.0 * PI))
    }
    fn preimage(&self, c: C64) -> Option<C64> {
        Some(-(1.0 - c / self.u_plus).ln())
    }
    fn monotone(&self) -> bool {
        self.u_plus > 0.0
    }
    fn concave(&self) -> bool {
        self.u_plus > 0.0
    }
}

/// U = tanh(y − 1) + tanh(1): a mixing layer shifted off the wall, inflected at y = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inflected;

impl ShearProfile for Inflected {
    fn name(&self) -> String {
        "inflected".into()
    }
    fn jet(&self, z: C64, n: usize) -> Vec<C64> {
        let mut t = tanh_jet(z - 1.0, n);
        // tanh(a) + tanh(b) = sinh(a + b)/(cosh a cosh b), exact at the wall.
        t[0] = z.sinh() / ((z - 1.0).cosh() * 1f64.cosh());
        t
    }
    fn u_plus(&self) -> f64 {
        1.0 + 1f64.tanh()
    }
    fn analyticity_width(&self) -> f64 {
        1.0
    }
    fn singularity_distance(&self, z: C64) -> f64 {
        tanh_pole_distance(z, 1.0)
    }
    fn period(&self) -> Option<C64> {
        Some(C64::new(0.0, PI))
    }
    fn preimage(&self, c: C64) -> Option<C64> {
        let w = c - 1f64.tanh();
        Some(1.0 + 0.5 * ((1.0 + w) / (1.0 - w)).ln())
    }
    fn monotone(&self) -> bool {
        true
    }
    fn concave(&self) -> bool {
        false
    }
}

/// U = slope·y. Unbounded, so `u_plus` is infinite; used for pure-transport tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub slope: f64,
}

impl ShearProfile for Linear {
    fn name(&self) -> String {
        "linear".into()
    }
    fn jet(&self, z: C64, n: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n + 1];
        v[0] = z * self.slope;
        if n >= 1 {
            v[1] = C64::new(self.slope, 0.0);
        }
        v
    }
    fn u_plus(&self) -> f64 {
        f64::INFINITY
    }
    fn analyticity_width(&self) -> f64 {
        f64::INFINITY
    }
    fn singularity_distance(&self, _z: C64) -> f64 {
        f64::INFINITY
    }
    fn preimage(&self, c: C64) -> Option<C64> {
        Some(c / self.slope)
    }
    fn monotone(&self) -> bool {
        self.slope > 0.0
    }
    fn concave(&self) -> bool {
        true
    }
}

/// U ≡ value. Violates U(0) = 0 on purpose: it is the free reference case where
/// Rayleigh's operator reduces to ∂² − α².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
}

impl ShearProfile for Constant {
    fn name(&self) -> String {
        "constant".into()
    }
    fn jet(&self, _z: C64, n: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n + 1];
        v[0] = C64::new(self.value, 0.0);
        v
    }
    fn u_plus(&self) -> f64 {
        self.value
    }
    fn analyticity_width(&self) -> f64 {
        f64::INFINITY
    }
    fn singularity_distance(&self, _z: C64) -> f64 {
        f64::INFINITY
    }
    fn preimage(&self, _c: C64) -> Option<C64> {
        None
    }
    fn monotone(&self) -> bool {
        false
    }
    fn concave(&self) -> bool {
        true
    }
}

/// U(y) = A(1 − e^{−μy}) + B(1 − e^{−νy}) with complex A, B, μ, ν such that U is
/// real on the real axis (B = Ā, ν = μ̄). Built by the cascade module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoExponential {
    pub amp: C64,
    pub rate: C64,
}

impl TwoExponential {
    fn parts(&self) -> [(C64, C64); 2] {
        [(self.amp, self.rate), (self.amp.conj(), self.rate.conj())]
    }
}

impl ShearProfile for TwoExponential {
    fn name(&self) -> String {
        "second_layer".into()
    }
    fn jet(&self, z: C64, n: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n + 1];
        for (a, m) in self.parts() {
            let e = exp_jet(m, z, n);
            for k in 0..=n {
                v[k] -= a * e[k];
            }
            v[0] += a;
        }
        v
    }
    fn u_plus(&self) -> f64 {
        2.0 * self.amp.re
    }
    fn analyticity_width(&self) -> f64 {
        1.0
    }
    fn singularity_distance(&self, _z: C64) -> f64 {
        f64::INFINITY
    }
}

pub fn builtin_profile(name: &str, u_plus: f64) -> Result<Box<dyn ShearProfile>> {
    if u_plus == 0.0 || !u_plus.is_finite() {
        return param("u_plus must be finite and nonzero");
    }
    match name {
        "tanh" => Ok(Box::new(Tanh { u_plus })),
        "exp_layer" => Ok(Box::new(ExpLayer { u_plus })),
        "inflected" => Ok(Box::new(Inflected)),
        _ => param(format!("unknown profile '{name}' (expected tanh, exp_layer or inflected)")),
    }
}

/// y_c with U(y_c) = c, to 1e-12.
pub fn critical_point(profile: &dyn ShearProfile, c: C64) -> Result<C64> {
    if c == C64::new(0.0, 0.0) {
        return Ok(c);
    }
    let w = profile.analyticity_width();
    let up = profile.u_plus();
    if !(c.re >= 0.0 && c.re < up) {
        return Err(Error::Domain(format!("Re c = {} outside [0, {up})", c.re)));
    }
    let seed = real_seed(profile, c.re).ok_or_else(|| Error::Domain("no real preimage of Re c".into()))?;
    let z = newton_preimage(profile, c, C64::new(seed, 0.0))
        .or_else(|| profile.preimage(c).and_then(|z0| newton_preimage(profile, c, z0)))
        .ok_or_else(|| Error::NoConvergence(format!("critical point for c = {c}")))?;
    if z.im.abs() > w {
        return Err(Error::Domain(format!("critical point {z} outside the analyticity strip")));
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeatScheme {
    CrankNicolson,
    Explicit,
}

/// Background velocity under the Dirichlet heat flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatState {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl HeatState {
    pub fn from_fn(y_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let grid = crate::grid::uniform(y_max, n);
        let mut values: Vec<f64> = grid.iter().map(|&y| f(y)).collect();
        values[0] = 0.0;
        HeatState { grid, values, time: 0.0 }
    }

    pub fn from_profile(profile: &dyn ShearProfile, y_max: f64, n: usize) -> Self {
        Self::from_fn(y_max, n, |y| profile.eval(C64::new(y, 0.0)).re)
    }

    /// ∫|∂_y U| dy by first differences.
    pub fn gradient_mass(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn write_csv(&self, out: &mut dyn Write, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        writeln!(out, "y,U")?;
        for (y, u) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{y:.12e},{u:.12e}")?;
        }
        Ok(())
    }

    /// Reads `y,U` rows; comment lines and a header row are skipped.
    pub fn read_csv(input: &mut dyn BufRead) -> Result<Self> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::Parameter(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with('y') {
                continue;
            }
            let mut it = t.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parameter(format!("bad row '{t}'")))
            };
            grid.push(parse(it.next())?);
            values.push(parse(it.next())?);
        }
        crate::grid::check_uniform(&grid)?;
        if values[0] != 0.0 {
            return param("U(0) must be 0");
        }
        Ok(HeatState { grid, values, time: 0.0 })
    }
}

/// Advances ∂_t U = ∂_y² U with U(0) = 0 and U(Y_max) clamped to its initial far value.
pub fn heat_evolve(state: HeatState, dt: f64, steps: usize, scheme: HeatScheme) -> Result<HeatState> {
    let h = crate::grid::check_uniform(&state.grid)?;
    if !(dt > 0.0) {
        return param("dt must be positive");
    }
    let r = dt / (h * h);
    let n = state.values.len();
    let mut u = state.values;
    let far = u[n - 1];
    match scheme {
        HeatScheme::Explicit => {
            if r > 0.5 {
                return param(format!("explicit heat step violates dt ≤ h²/2 (dt/h² = {r:.3})"));
            }
            let mut next = u.clone();
            for _ in 0..steps {
                for j in 1..n - 1 {
                    next[j] = u[j] + r * (u[j - 1] - 2.0 * u[j] + u[j + 1]);
                }
                std::mem::swap(&mut u, &mut next);
            }
        }
        HeatScheme::CrankNicolson => {
            // (1 + r/2 A) u^{n+1} = (1 − r/2 A) u^n on the interior, Thomas sweep.
            let m = n - 2;
            let (a, b) = (-0.5 * r, 1.0 + r);
            let mut cp = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for _ in 0..steps {
                for i in 0..m {
                    let j = i + 1;
                    rhs[i] = u[j] + 0.5 * r * (u[j - 1] - 2.0 * u[j] + u[j + 1]);
                }
                rhs[m - 1] -= a * far;
                cp[0] = a / b;
                rhs[0] /= b;
                for i in 1..m {
                    let den = b - a * cp[i - 1];
                    cp[i] = a / den;
                    rhs[i] = (rhs[i] - a * rhs[i - 1]) / den;
                }
                for i in (0..m - 1).rev() {
                    rhs[i] -= cp[i] * rhs[i + 1];
                }
                u[1..n - 1].copy_from_slice(&rhs);
            }
        }
    }
    u[0] = 0.0;
    u[n - 1] = far;
    Ok(HeatState { grid: state.grid, values: u, time: state.time + dt * steps as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_jet_matches_derivatives() {
        let p = Tanh { u_plus: 1.5 };
        let z = C64::new(0.4, 0.3);
        let j = p.jet(z, 3);
        assert!((j[1] - p.d1(z)).norm() < 1e-14);
        assert!((2.0 * j[2] - p.d2(z)).norm() < 1e-14);
        let t = z.tanh();
        let d3 = 1.5 * (-2.0) * (1.0 - t * t) * (1.0 - 3.0 * t * t);
        assert!((6.0 * j[3] - d3).norm() < 1e-13);
    }

    #[test]
    fn preimages_invert() {
        for p in [
            Box::new(Tanh { u_plus: 1.0 }) as Box<dyn ShearProfile>,
            Box::new(ExpLayer { u_plus: 1.0 }),
            Box::new(Inflected),
        ] {
            let c = C64::new(0.4, 0.07);
            let y = p.preimage(c).unwrap();
            assert!((p.eval(y) - c).norm() < 1e-13, "{}", p.name());
        }
    }

    #[test]
    fn unknown_profile_is_rejected() {
        assert!(builtin_profile("blasius", 1.0).unwrap_err().is_validation());
        assert!(builtin_profile("tanh", 0.0).is_err());
    }

    #[test]
    fn explicit_cfl() {
        let s = HeatState::from_fn(10.0, 101, |y| y.tanh());
        assert!(heat_evolve(s, 0.1, 1, HeatScheme::Explicit).is_err());
    }
}
