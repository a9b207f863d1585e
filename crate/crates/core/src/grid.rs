//! Half-line grids, sampled complex functions and the quadratures used on them.

use crate::{param, Result, C64};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Default far-field truncation.
pub const Y_MAX: f64 = 30.0;

pub fn uniform(y_max: f64, n: usize) -> Vec<f64> {
    let h = y_max / (n - 1) as f64;
    (0..n).map(|j| j as f64 * h).collect()
}

/// Spacing `h_fine` up to `fine_end`, then growing by 5% per cell up to `h_coarse`.
pub fn refined(y_max: f64, fine_end: f64, h_fine: f64, h_coarse: f64) -> Vec<f64> {
    let mut y = vec![0.0];
    let mut h = h_fine;
    loop {
        let last = y[y.len() - 1];
        if last >= fine_end {
            h = (h * 1.05).min(h_coarse.max(h_fine));
        }
        if y_max - last <= 1.5 * h {
            y.push(y_max);
            break;
        }
        y.push(last + h);
    }
    y
}

/// Complex samples on an increasing real grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub y: Vec<f64>,
    pub values: Vec<C64>,
    /// Wavenumber the samples belong to, when meaningful.
    pub alpha: Option<f64>,
}

impl GridFunction {
    pub fn new(y: Vec<f64>, values: Vec<C64>) -> Self {
        assert_eq!(y.len(), values.len());
        GridFunction { y, values, alpha: None }
    }

    pub fn zeros(y: &[f64]) -> Self {
        GridFunction::new(y.to_vec(), vec![C64::new(0.0, 0.0); y.len()])
    }

    pub fn from_fn(y: &[f64], f: impl Fn(f64) -> C64) -> Self {
        GridFunction::new(y.to_vec(), y.iter().map(|&t| f(t)).collect())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<C64> = self.values.iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect();
        trapezoid(&self.y, &sq).re.sqrt()
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let values = self.y.iter().zip(&self.values).map(|(&y, &v)| f(y, v)).collect();
        GridFunction { y: self.y.clone(), values, alpha: self.alpha }
    }

    pub fn scaled(&self, s: C64) -> Self {
        self.map(|_, v| v * s)
    }

    pub fn sub(&self, other: &GridFunction) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridFunction { y: self.y.clone(), values, alpha: self.alpha }
    }

    /// First derivative, fourth order on uniform grids (one-sided at the ends).
    pub fn derivative(&self) -> Self {
        GridFunction { y: self.y.clone(), values: d1(&self.y, &self.values), alpha: self.alpha }
    }

    pub fn second_derivative(&self) -> Self {
        GridFunction { y: self.y.clone(), values: d2(&self.y, &self.values), alpha: self.alpha }
    }

    /// CSV with a leading comment block and columns y, Re, Im.
    pub fn write_csv(&self, out: &mut dyn Write, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        writeln!(out, "y,Re,Im")?;
        for (y, v) in self.y.iter().zip(&self.values) {
            writeln!(out, "{y:.12e},{:.12e},{:.12e}", v.re, v.im)?;
        }
        Ok(())
    }
}

pub fn check_uniform(y: &[f64]) -> Result<f64> {
    if y.len() < 5 {
        return param("grid needs at least 5 points");
    }
    let h = y[1] - y[0];
    if !(h > 0.0) {
        return param("grid must be increasing");
    }
    for w in y.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return param("grid must be uniform");
        }
    }
    Ok(h)
}

fn step(y: &[f64]) -> f64 {
    (y[y.len() - 1] - y[0]) / (y.len() - 1) as f64
}

/// Fourth-order first derivative on a uniform grid.
pub fn d1(y: &[f64], f: &[C64]) -> Vec<C64> {
    let n = f.len();
    let h = step(y);
    let mut d = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        d[j] = if j >= 2 && j + 2 < n {
            (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h)
        } else if j < 2 {
            (-25.0 * f[j] + 48.0 * f[j + 1] - 36.0 * f[j + 2] + 16.0 * f[j + 3] - 3.0 * f[j + 4]) / (12.0 * h)
        } else {
            (25.0 * f[j] - 48.0 * f[j - 1] + 36.0 * f[j - 2] - 16.0 * f[j - 3] + 3.0 * f[j - 4]) / (12.0 * h)
        };
    }
    d
}

/// Fourth-order second derivative on a uniform grid.
pub fn d2(y: &[f64], f: &[C64]) -> Vec<C64> {
    let n = f.len();
    let h = step(y);
    let h2 = h * h;
    let mut d = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        d[j] = if j >= 2 && j + 2 < n {
            (-f[j - 2] + 16.0 * f[j - 1] - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) / (12.0 * h2)
        } else if j < 2 {
            (45.0 * f[j] - 154.0 * f[j + 1] + 214.0 * f[j + 2] - 156.0 * f[j + 3] + 61.0 * f[j + 4] - 10.0 * f[j + 5])
                / (12.0 * h2)
        } else {
            (45.0 * f[j] - 154.0 * f[j - 1] + 214.0 * f[j - 2] - 156.0 * f[j - 3] + 61.0 * f[j - 4] - 10.0 * f[j - 5])
                / (12.0 * h2)
        };
    }
    d
}

pub fn trapezoid(y: &[f64], f: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for j in 1..y.len() {
        s += (f[j] + f[j - 1]) * (0.5 * (y[j] - y[j - 1]));
    }
    s
}

/// Cumulative integral ∫_{y_0}^{y_j} f, fourth order on uniform grids.
///
/// Interior cells use the two-point rule with an end correction from cubic
/// interpolation through the four surrounding samples.
pub fn cumulative(y: &[f64], f: &[C64]) -> Vec<C64> {
    let n = f.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 4 {
        for j in 1..n {
            out[j] = out[j - 1] + (f[j] + f[j - 1]) * (0.5 * (y[j] - y[j - 1]));
        }
        return out;
    }
    let h = step(y);
    for j in 1..n {
        // Cell [j-1, j] with the 4-point stencil inside the grid.
        let k = (j as isize - 2).clamp(0, n as isize - 4) as usize;
        let s = (j - 1) - k; // position of the cell inside the stencil: 0, 1 or 2
        let w: [f64; 4] = match s {
            0 => [9.0, 19.0, -5.0, 1.0],
            1 => [-1.0, 13.0, 13.0, -1.0],
            _ => [1.0, -5.0, 19.0, 9.0],
        };
        let mut cell = C64::new(0.0, 0.0);
        for m in 0..4 {
            cell += f[k + m] * w[m];
        }
        out[j] = out[j - 1] + cell * (h / 24.0);
    }
    out
}

/// Composite Simpson weights (trapezoid on a trailing odd interval).
pub fn simpson_weights(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let h = step(y);
    let mut w = vec![0.0; n];
    let m = if (n - 1) % 2 == 0 { n } else { n - 1 };
    for j in (0..m - 1).step_by(2) {
        w[j] += h / 3.0;
        w[j + 1] += 4.0 * h / 3.0;
        w[j + 2] += h / 3.0;
    }
    if m < n {
        w[n - 2] += h / 2.0;
        w[n - 1] += h / 2.0;
    }
    w
}
