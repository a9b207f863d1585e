//! Complex Airy functions Ai, Bi, their derivatives, their first and second
//! repeated integrals, and the Tietjens function.
//!
//! Normalization of the repeated integrals:
//!
//! ```text
//! Ai(1,z) = -∫_z^∞ Ai(t) dt          Ai(2,z) = ∫_z^∞ (t - z) Ai(t) dt
//! Bi(1,z) =  ∫_0^z Bi(t) dt          Bi(2,z) = ∫_0^z (z - t) Bi(t) dt
//! ```
//!
//! so that d/dz Ai(2,z) = Ai(1,z) and d/dz Ai(1,z) = Ai(z), the Ai family decays in
//! |arg z| < π/3 and the Bi family vanishes at the origin.
//!
//! Evaluation: the Maclaurin series is summed in complex double-double arithmetic
//! while the cancellation it suffers, about exp(ζ(1 + cos(3θ/2))) with
//! ζ = (2/3)|z|^{3/2} and θ = arg z, stays below [`MACLAURIN_LOSS`]. Beyond that the
//! asymptotic expansions are used for |θ| ≤ 2π/3, and the connection formulas
//! through ωz and ω²z (ω = e^{2πi/3}) for larger |θ|. The asymptotic expansions of
//! the integrals only reach a relative accuracy of about e^{-ζ}; where they are not
//! yet accurate they are evaluated at ζ = [`INTEGRAL_ASYMPTOTIC_ZETA`] on the same
//! ray and continued inward with Taylor steps of the Airy system.

use crate::{Error, Result, C64};
use num_complex::Complex;
use std::f64::consts::PI;
use twofloat::TwoFloat;

type Cdd = Complex<TwoFloat>;

/// Ai(0) as a double-double (hi, lo).
const AI0: (f64, f64) = (0.3550280538878172, 2.05233632436212e-17);
/// −Ai'(0) as a double-double.
const MAIP0: (f64, f64) = (0.2588194037928068, -2.522243111610832e-17);
const THIRD: (f64, f64) = (0.3333333333333333, 1.850371707708594e-17);
const SQRT3: (f64, f64) = (1.7320508075688772, 1.0035084221806903e-16);

/// Ai(2, 0) = ∫_0^∞ t Ai(t) dt = −Ai'(0).
pub const AI2_AT_ZERO: f64 = 0.2588194037928068;

/// Largest admissible ζ·(1 + cos(3θ/2)) for the double-double Maclaurin sum.
pub const MACLAURIN_LOSS: f64 = 34.0;
/// Largest ζ for which the Maclaurin sum is attempted at all.
pub const MACLAURIN_ZETA: f64 = 60.0;
/// ζ beyond which the integrated asymptotic series are accurate to ~1e-14.
pub const INTEGRAL_ASYMPTOTIC_ZETA: f64 = 32.0;
/// Largest accepted |z|.
pub const MAX_ABS_Z: f64 = 1.0e4;

const LOG_OVERFLOW: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub value: C64,
    pub derivative: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryKind {
    Ai,
    Bi,
}

/// Function, derivative and both repeated integrals at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryFamily {
    pub f: C64,
    pub fp: C64,
    pub int1: C64,
    pub int2: C64,
}

fn dd(c: (f64, f64)) -> TwoFloat {
    TwoFloat::new_add(c.0, c.1)
}

fn cdd(z: C64) -> Cdd {
    Cdd::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn to_c64(z: Cdd) -> C64 {
    C64::new(z.re.hi() + z.re.lo(), z.im.hi() + z.im.lo())
}

fn scale(z: Cdd, s: TwoFloat) -> Cdd {
    Cdd::new(z.re * s, z.im * s)
}

fn cabs(z: Cdd) -> f64 {
    C64::new(z.re.hi(), z.im.hi()).norm()
}

fn omega() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

fn zeta_theta(z: C64) -> (f64, f64) {
    (2.0 / 3.0 * z.norm().powf(1.5), z.arg())
}

fn check_range(z: C64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite Airy argument {z}")));
    }
    if z.norm() > MAX_ABS_Z {
        return Err(Error::Range(format!("|z| = {} exceeds {MAX_ABS_Z}", z.norm())));
    }
    Ok(())
}

/// The Maclaurin building blocks: f, g, their derivatives, first and second integrals.
struct Pieces {
    f: Cdd,
    fp: Cdd,
    g: Cdd,
    gp: Cdd,
    i1f: Cdd,
    i1g: Cdd,
    i2f: Cdd,
    i2g: Cdd,
}

fn maclaurin(z: C64) -> Pieces {
    let zd = cdd(z);
    let z2 = zd * zd;
    let z3 = z2 * zd;
    let one = TwoFloat::from(1.0);
    let zero = Cdd::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
    // Terms are carried recursively so that no separate power of z or factorial
    // can overflow: tf = a_k z^{3k}, tg = b_k z^{3k+1}.
    let mut tf = Cdd::new(one, TwoFloat::from(0.0));
    let mut tg = zd;
    let mut s = Pieces { f: zero, fp: zero, g: zero, gp: zero, i1f: zero, i1g: zero, i2f: zero, i2g: zero };
    s.gp = tf;
    let mut biggest: f64 = 1.0;
    for k in 0..600usize {
        let kf = k as f64;
        if k > 0 {
            s.fp = s.fp + scale(tf * z2, one / (3.0 * kf - 1.0));
            s.gp = s.gp + scale(tg * z2, one / (3.0 * kf));
            tf = scale(tf * z3, one / ((3.0 * kf - 1.0) * (3.0 * kf)));
            tg = scale(tg * z3, one / ((3.0 * kf) * (3.0 * kf + 1.0)));
        }
        s.f = s.f + tf;
        s.g = s.g + tg;
        s.i1f = s.i1f + scale(tf * zd, one / (3.0 * kf + 1.0));
        s.i1g = s.i1g + scale(tg * zd, one / (3.0 * kf + 2.0));
        s.i2f = s.i2f + scale(tf * z2, one / ((3.0 * kf + 1.0) * (3.0 * kf + 2.0)));
        s.i2g = s.i2g + scale(tg * z2, one / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0)));
        let term = cabs(tf).max(cabs(tg)) * (1.0 + z.norm()).powi(2);
        biggest = biggest.max(term);
        if k > 2 && term < 1e-34 * biggest {
            break;
        }
    }
    s
}

fn maclaurin_ai(z: C64, pc: &Pieces) -> AiryFamily {
    let c1 = dd(AI0);
    let c2 = dd(MAIP0);
    let third = dd(THIRD);
    let zd = cdd(z);
    let combo = |u: Cdd, v: Cdd| scale(u, c1) - scale(v, c2);
    let ai1 = combo(pc.i1f, pc.i1g) - Cdd::new(third, TwoFloat::from(0.0));
    let ai2 = combo(pc.i2f, pc.i2g) + Cdd::new(c2, TwoFloat::from(0.0)) - scale(zd, third);
    AiryFamily {
        f: to_c64(combo(pc.f, pc.g)),
        fp: to_c64(combo(pc.fp, pc.gp)),
        int1: to_c64(ai1),
        int2: to_c64(ai2),
    }
}

fn maclaurin_bi(pc: &Pieces) -> AiryFamily {
    let c1 = dd(AI0);
    let c2 = dd(MAIP0);
    let r3 = dd(SQRT3);
    let combo = |u: Cdd, v: Cdd| to_c64(scale(scale(u, c1) + scale(v, c2), r3));
    AiryFamily {
        f: combo(pc.f, pc.g),
        fp: combo(pc.fp, pc.gp),
        int1: combo(pc.i1f, pc.i1g),
        int2: combo(pc.i2f, pc.i2g),
    }
}

/// Asymptotic Ai and Ai' for |arg z| < π, truncated at the smallest term.
fn ai_asymptotic(z: C64) -> Result<(C64, C64)> {
    let sz = z.sqrt();
    let xi = sz * z * (2.0 / 3.0);
    if -xi.re > LOG_OVERFLOW {
        return Err(Error::Range(format!("Ai({z}) overflows")));
    }
    let z14 = sz.sqrt();
    let inv = 1.0 / xi;
    let mut su = C64::new(1.0, 0.0);
    let mut sv = C64::new(1.0, 0.0);
    let mut u = 1.0f64;
    let mut pw = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        pw = -pw * inv;
        let tu = pw * u;
        let tv = pw * v;
        let size = tu.norm().max(tv.norm());
        if size > last {
            break;
        }
        su += tu;
        sv += tv;
        last = size;
        if size < 1e-17 {
            break;
        }
    }
    let pre = (-xi).exp() / (2.0 * PI.sqrt());
    Ok((pre / z14 * su, -pre * z14 * sv))
}

/// Integrated asymptotics for Ai(1,·) and Ai(2,·) in terms of Ai and Ai'.
fn integrals_asymptotic(z: C64, ai: C64, aip: C64) -> (C64, C64) {
    let iz = 1.0 / z;
    let iz3 = iz * iz * iz;
    let mut ck = 1.0f64;
    let mut zk = C64::new(1.0, 0.0); // z^{-3k}
    let mut int1 = aip * iz + ai * iz * iz;
    let mut int2 = ai * iz;
    let mut last = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        ck *= (3.0 * kf - 2.0) * (3.0 * kf - 1.0);
        zk *= iz3;
        let t2 = zk * ck * (aip + (3.0 * kf + 1.0) * ai * iz);
        let t1 = zk * ck * (aip * iz + (3.0 * kf + 1.0) * ai * iz * iz);
        let size = t1.norm() / int1.norm().max(1e-300) + t2.norm() / int2.norm().max(1e-300);
        if size > last {
            break;
        }
        int1 += t1;
        int2 += t2;
        last = size;
        if size < 1e-18 {
            break;
        }
    }
    (int1, int2)
}

/// Taylor continuation of (Ai, Ai', Ai(1,·), Ai(2,·)) from `at` to `to`.
fn continue_family(mut at: C64, mut s: AiryFamily, to: C64) -> AiryFamily {
    let mut coef = vec![C64::new(0.0, 0.0); 0];
    while (to - at).norm() > 0.0 {
        let radius = 1.5 / (at.norm().max(to.norm()).sqrt() + 1.0);
        let d = to - at;
        let h = if d.norm() > radius { d * (radius / d.norm()) } else { d };
        coef.clear();
        coef.push(s.f);
        coef.push(s.fp);
        let mut n = 0;
        // Ai'' = z Ai: a_{n+2} (n+2)(n+1) = z0 a_n + a_{n-1}.
        let hn = h.norm();
        loop {
            let prev = if n >= 1 { coef[n - 1] } else { C64::new(0.0, 0.0) };
            let next = (at * coef[n] + prev) / (((n + 2) * (n + 1)) as f64);
            coef.push(next);
            n += 1;
            let tail = coef[n + 1].norm() * hn.powi((n + 1) as i32);
            let head = coef[0].norm().max(coef[1].norm() * hn);
            if n > 6 && tail < 1e-18 * head {
                break;
            }
            if n > 120 {
                break;
            }
        }
        let mut f = C64::new(0.0, 0.0);
        let mut fp = C64::new(0.0, 0.0);
        let mut i1 = s.int1;
        let mut i2 = s.int2 + s.int1 * h;
        let mut hp = C64::new(1.0, 0.0); // h^m
        let mut hpm = C64::new(0.0, 0.0); // h^{m-1}
        for (m, c) in coef.iter().enumerate() {
            let mf = m as f64;
            fp += *c * mf * hpm;
            f += *c * hp;
            i1 += *c * hp * h / (mf + 1.0);
            i2 += *c * hp * h * h / ((mf + 1.0) * (mf + 2.0));
            hpm = hp;
            hp *= h;
        }
        s = AiryFamily { f, fp, int1: i1, int2: i2 };
        at += h;
    }
    s
}

fn ai_family_inner(z: C64) -> Result<AiryFamily> {
    let (zeta, theta) = zeta_theta(z);
    let kappa = 1.0 + (1.5 * theta).cos();
    if zeta <= MACLAURIN_ZETA && zeta * kappa <= MACLAURIN_LOSS {
        return Ok(maclaurin_ai(z, &maclaurin(z)));
    }
    if theta.abs() <= 2.0 * PI / 3.0 {
        let (ai, aip) = ai_asymptotic(z)?;
        if zeta >= INTEGRAL_ASYMPTOTIC_ZETA {
            let (int1, int2) = integrals_asymptotic(z, ai, aip);
            return Ok(AiryFamily { f: ai, fp: aip, int1, int2 });
        }
        let start = z * (INTEGRAL_ASYMPTOTIC_ZETA / zeta).powf(2.0 / 3.0);
        let (a0, ap0) = ai_asymptotic(start)?;
        let (i1, i2) = integrals_asymptotic(start, a0, ap0);
        let s0 = AiryFamily { f: a0, fp: ap0, int1: i1, int2: i2 };
        let mut out = continue_family(start, s0, z);
        out.f = ai;
        out.fp = aip;
        return Ok(out);
    }
    // Connection through the two rotated arguments, both within |arg| <= 2π/3.
    let w = omega();
    let w2 = w * w;
    let a = ai_family_inner(w * z)?;
    let b = ai_family_inner(w2 * z)?;
    Ok(AiryFamily {
        f: -w * a.f - w2 * b.f,
        fp: -w2 * a.fp - w * b.fp,
        int1: -1.0 - a.int1 - b.int1,
        int2: -z - w2 * a.int2 - w * b.int2,
    })
}

/// Evaluation branch, for seam checks between the series and the asymptotic side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Maclaurin,
    Asymptotic,
}

/// Ai family forced onto one branch (|arg z| ≤ 2π/3 for the asymptotic one).
pub fn airy_ai_family_on(z: C64, branch: Branch) -> Result<AiryFamily> {
    check_range(z)?;
    match branch {
        Branch::Maclaurin => finite(z, maclaurin_ai(z, &maclaurin(z))),
        Branch::Asymptotic => {
            if z.arg().abs() > 2.0 * PI / 3.0 {
                return Err(Error::Domain(format!("asymptotic branch needs |arg z| <= 2π/3, got {z}")));
            }
            let (ai, aip) = ai_asymptotic(z)?;
            let (int1, int2) = integrals_asymptotic(z, ai, aip);
            finite(z, AiryFamily { f: ai, fp: aip, int1, int2 })
        }
    }
}

/// Ai, Ai', Ai(1,·), Ai(2,·) at `z`.
pub fn airy_ai_family(z: C64) -> Result<AiryFamily> {
    check_range(z)?;
    let out = ai_family_inner(z)?;
    finite(z, out)
}

/// Bi, Bi', Bi(1,·), Bi(2,·) at `z`.
pub fn airy_bi_family(z: C64) -> Result<AiryFamily> {
    check_range(z)?;
    let (zeta, theta) = zeta_theta(z);
    let growth = zeta * (1.5 * theta).cos().abs();
    if growth > LOG_OVERFLOW {
        return Err(Error::Range(format!("Bi({z}) overflows")));
    }
    let loss = zeta * (1.0 - (1.5 * theta).cos().abs());
    if zeta <= MACLAURIN_ZETA && loss <= MACLAURIN_LOSS {
        return finite(z, maclaurin_bi(&maclaurin(z)));
    }
    // Bi(z) = e^{iπ/6} Ai(ωz) + e^{−iπ/6} Ai(ω̄z) and its integrated forms.
    let w = omega();
    let a = ai_family_inner(w * z)?;
    let b = ai_family_inner(w.conj() * z)?;
    let e1 = C64::from_polar(1.0, PI / 6.0);
    let e5 = C64::from_polar(1.0, 5.0 * PI / 6.0);
    let h = |v: C64, at: C64| v - AI2_AT_ZERO + at / 3.0;
    let out = AiryFamily {
        f: e1 * a.f + e1.conj() * b.f,
        fp: e5 * a.fp + e5.conj() * b.fp,
        int1: crate::I * (b.int1 - a.int1),
        int2: e5 * h(a.int2, w * z) + e5.conj() * h(b.int2, w.conj() * z),
    };
    finite(z, out)
}

fn finite(z: C64, f: AiryFamily) -> Result<AiryFamily> {
    let ok = [f.f, f.fp, f.int1, f.int2].iter().all(|v| v.re.is_finite() && v.im.is_finite());
    if ok {
        Ok(f)
    } else {
        Err(Error::Range(format!("Airy evaluation at {z} is not representable")))
    }
}

pub fn airy_ai(z: C64) -> Result<C64> {
    Ok(airy_ai_family(z)?.f)
}

pub fn airy_bi(z: C64) -> Result<C64> {
    Ok(airy_bi_family(z)?.f)
}

pub fn airy_ai_value(z: C64) -> Result<AiryValue> {
    let f = airy_ai_family(z)?;
    Ok(AiryValue { value: f.f, derivative: f.fp })
}

pub fn airy_bi_value(z: C64) -> Result<AiryValue> {
    let f = airy_bi_family(z)?;
    Ok(AiryValue { value: f.f, derivative: f.fp })
}

/// k-th repeated integral (k = 1 or 2) of Ai or Bi.
pub fn airy_repeated_integral(kind: AiryKind, k: u8, z: C64) -> Result<C64> {
    let fam = match kind {
        AiryKind::Ai => airy_ai_family(z)?,
        AiryKind::Bi => airy_bi_family(z)?,
    };
    match k {
        1 => Ok(fam.int1),
        2 => Ok(fam.int2),
        _ => Err(Error::Domain(format!("repeated integral order {k} not in {{1, 2}}"))),
    }
}

/// Ti(w) = Ai(2, w e^{−5iπ/6}) / (w e^{−5iπ/6} Ai(1, w e^{−5iπ/6})) for complex w.
pub fn tietjens_complex(w: C64) -> Result<C64> {
    let arg = w * C64::from_polar(1.0, -5.0 * PI / 6.0);
    let fam = airy_ai_family(arg)?;
    let den = arg * fam.int1;
    if den.norm() == 0.0 {
        return Err(Error::Domain(format!("Tietjens function singular at {w}")));
    }
    Ok(fam.int2 / den)
}

/// Tietjens function of a positive real argument.
pub fn tietjens(x: f64) -> Result<C64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Tietjens argument must be positive, got {x}")));
    }
    tietjens_complex(C64::new(x, 0.0))
}

/// Relative ODE residual |(f')' − z f| / max(1, |f|) of the returned pair, with the
/// outer derivative taken by a five-point central difference of step `h`.
pub fn ode_residual(kind: AiryKind, z: C64, h: f64) -> Result<f64> {
    let eval = |p: C64| -> Result<AiryValue> {
        match kind {
            AiryKind::Ai => airy_ai_value(p),
            AiryKind::Bi => airy_bi_value(p),
        }
    };
    let c = eval(z)?;
    let hh = C64::new(h, 0.0);
    let d = (eval(z - 2.0 * hh)?.derivative - 8.0 * eval(z - hh)?.derivative + 8.0 * eval(z + hh)?.derivative
        - eval(z + 2.0 * hh)?.derivative)
        / (12.0 * h);
    Ok((d - z * c.value).norm() / c.value.norm().max(1.0))
}
