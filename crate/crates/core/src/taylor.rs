//! Taylor-series integration of ψ'' = q(z)ψ along straight segments of the complex plane.
//!
//! The coefficient q is supplied as a local jet, so the solution jet follows from
//! the recurrence (k+2)(k+1)ψ_{k+2} = Σ_j q_j ψ_{k−j}. Steps stay inside a fixed
//! fraction of the local radius of convergence and are halved until the tail of
//! the series is below roundoff.

use crate::{Error, Result, C64};

pub const ORDER: usize = 32;
const SAFETY: f64 = 0.4;
const MAX_STEP: f64 = 1.0;
const TAIL_TOL: f64 = 1e-17;

pub trait Ode2: Sync {
    /// q^{(k)}(z)/k! for k = 0..=n.
    fn q_jet(&self, z: C64, n: usize) -> Vec<C64>;
    /// Lower bound on the distance from z to the nearest singularity of q.
    fn radius(&self, z: C64) -> f64;
}

/// Value and first derivative.
pub type State = [C64; 2];

fn solution_jet(q: &[C64], s: State) -> Vec<C64> {
    let n = q.len() + 1;
    let mut p = vec![C64::new(0.0, 0.0); n + 1];
    p[0] = s[0];
    p[1] = s[1];
    for k in 0..n - 1 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=k {
            acc += q[j] * p[k - j];
        }
        p[k + 2] = acc / ((k + 2) * (k + 1)) as f64;
    }
    p
}

/// Value and derivative of the series at offset h.
pub fn eval_jet(p: &[C64], h: C64) -> State {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for k in (0..p.len()).rev() {
        v = v * h + p[k];
        if k > 0 {
            d = d * h + p[k] * k as f64;
        }
    }
    [v, d]
}

fn tail(p: &[C64], h: f64) -> f64 {
    let n = p.len();
    (n - 4..n).map(|k| p[k].norm() * h.powi(k as i32)).fold(0.0, f64::max)
}

/// Integrates from a to b. `samples` are increasing parameters t ∈ [0, 1]; the
/// state at a + t(b − a) is returned for each.
pub fn segment(ode: &dyn Ode2, a: C64, b: C64, mut s: State, samples: &[f64]) -> Result<(State, Vec<State>)> {
    let len = (b - a).norm();
    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    while next < samples.len() && samples[next] <= 0.0 {
        out.push(s);
        next += 1;
    }
    if len == 0.0 {
        while out.len() < samples.len() {
            out.push(s);
        }
        return Ok((s, out));
    }
    let dir = (b - a) / len;
    let mut t = 0.0; // arc length travelled
    let mut steps = 0usize;
    while t < len {
        let z0 = a + dir * t;
        let q = ode.q_jet(z0, ORDER);
        let p = solution_jet(&q, s);
        let scale = s[0].norm().max(s[1].norm()).max(1e-300);
        let mut h = (SAFETY * ode.radius(z0)).min(MAX_STEP).min(len - t);
        let q0 = q[0].norm().sqrt();
        if q0 > 0.0 {
            h = h.min(4.0 / q0);
        }
        let mut halvings = 0;
        while tail(&p, h) > TAIL_TOL * scale * (1.0 + q0 * h).exp() {
            h *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::NoConvergence(format!("Taylor step collapsed near {z0}")));
            }
        }
        let t1 = if len - t - h < 1e-14 * len { len } else { t + h };
        while next < samples.len() && samples[next] * len <= t1 {
            out.push(eval_jet(&p, dir * (samples[next] * len - t)));
            next += 1;
        }
        s = eval_jet(&p, dir * (t1 - t));
        t = t1;
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::NoConvergence("too many Taylor steps".into()));
        }
        if !(s[0].re.is_finite() && s[0].im.is_finite() && s[1].re.is_finite() && s[1].im.is_finite()) {
            return Err(Error::Range(format!("solution overflow near {z0}")));
        }
    }
    while out.len() < samples.len() {
        out.push(s);
    }
    Ok((s, out))
}

/// Integrates along a polygon, returning only the final state.
pub fn polygon(ode: &dyn Ode2, vertices: &[C64], mut s: State) -> Result<State> {
    for w in vertices.windows(2) {
        s = segment(ode, w[0], w[1], s, &[])?.0;
    }
    Ok(s)
}

/// Integrates along the real axis from `from` to `to`, sampling at grid points
/// lying between them. Returns the final state and (grid index, state) pairs.
pub fn real_run(ode: &dyn Ode2, from: f64, to: f64, s: State, grid: &[f64]) -> Result<(State, Vec<(usize, State)>)> {
    let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
    let mut idx: Vec<usize> = (0..grid.len()).filter(|&j| grid[j] >= lo && grid[j] <= hi).collect();
    if from > to {
        idx.reverse();
    }
    let span = to - from;
    let ts: Vec<f64> = idx.iter().map(|&j| if span == 0.0 { 0.0 } else { (grid[j] - from) / span }).collect();
    let (end, states) = segment(ode, C64::new(from, 0.0), C64::new(to, 0.0), s, &ts)?;
    Ok((end, idx.into_iter().zip(states).collect()))
}

/// Series quotient b/a of two jets, a[0] ≠ 0.
pub fn divide(b: &[C64], a: &[C64]) -> Vec<C64> {
    let n = b.len();
    let mut r = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut acc = b[k];
        for j in 1..=k.min(a.len() - 1) {
            acc -= a[j] * r[k - j];
        }
        r[k] = acc / a[0];
    }
    r
}
