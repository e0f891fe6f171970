//! One-variable profiles `R(u)`, `S(v)` with derivative access.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformSpec {
    /// `Σ coeffs[k]·x^k`
    Polynomial { coeffs: Vec<f64> },
    /// `amplitude·cos²(π(x − center)/width)` on `|x − center| ≤ width/2`, else 0.
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Interpolating quintic spline through uniformly spaced samples.
    Sampled(QuinticSpline),
}

impl WaveformSpec {
    pub fn zero() -> Self {
        WaveformSpec::Polynomial { coeffs: vec![] }
    }

    pub fn polynomial(coeffs: &[f64]) -> Self {
        WaveformSpec::Polynomial {
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn bump(center: f64, width: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0) || !center.is_finite() || !amplitude.is_finite() {
            return Err(Error::Invalid(format!(
                "bump needs finite center/amplitude and positive width, got ({center}, {width}, {amplitude})"
            )));
        }
        Ok(WaveformSpec::Bump {
            center,
            width,
            amplitude,
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `order`-th derivative at `x`.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        match self {
            WaveformSpec::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(order).rev() {
                    let falling: f64 = (k - order + 1..=k).map(|m| m as f64).product();
                    acc = acc * x + c * falling;
                }
                acc
            }
            WaveformSpec::Bump {
                center,
                width,
                amplitude,
            } => {
                if (x - center).abs() > 0.5 * width {
                    return 0.0;
                }
                let k = 2.0 * PI / width;
                let phase = k * (x - center);
                if order == 0 {
                    0.5 * amplitude * (1.0 + phase.cos())
                } else {
                    0.5 * amplitude * k.powi(order as i32) * (phase + order as f64 * 0.5 * PI).cos()
                }
            }
            WaveformSpec::Sampled(s) => s.derivative(x, order),
        }
    }

    /// Closed support `[a, b]` when the profile vanishes outside it.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            WaveformSpec::Bump { center, width, .. } => {
                Some((center - 0.5 * width, center + 0.5 * width))
            }
            WaveformSpec::Polynomial { coeffs } if coeffs.iter().all(|c| *c == 0.0) => None,
            _ => None,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            WaveformSpec::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            WaveformSpec::Bump { amplitude, .. } => *amplitude == 0.0,
            WaveformSpec::Sampled(s) => s.values.iter().all(|c| *c == 0.0),
        }
    }

    /// Symbolic form in `var`, available for polynomials only.
    pub fn as_expr(&self, var: Var) -> Option<Expr> {
        match self {
            WaveformSpec::Polynomial { coeffs } => Some(Expr::polynomial(var, coeffs)),
            _ => None,
        }
    }

    pub fn scaled(&self, factor: f64) -> WaveformSpec {
        match self {
            WaveformSpec::Polynomial { coeffs } => WaveformSpec::Polynomial {
                coeffs: coeffs.iter().map(|c| c * factor).collect(),
            },
            WaveformSpec::Bump {
                center,
                width,
                amplitude,
            } => WaveformSpec::Bump {
                center: *center,
                width: *width,
                amplitude: amplitude * factor,
            },
            WaveformSpec::Sampled(s) => {
                let values: Vec<f64> = s.values.iter().map(|v| v * factor).collect();
                WaveformSpec::Sampled(QuinticSpline::new(s.x0, s.dx, values).expect("same layout"))
            }
        }
    }
}

/// Quintic B-spline interpolant on nodes `x0 + i·dx`. The two extra
/// coefficients at each end are fixed by vanishing sixth differences,
/// which makes the interpolant exact on quintic polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleTable", into = "SampleTable")]
pub struct QuinticSpline {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    /// `coeffs[k]` multiplies the B-spline centred on node `k − 2`.
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SampleTable {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl TryFrom<SampleTable> for QuinticSpline {
    type Error = Error;

    fn try_from(t: SampleTable) -> Result<Self> {
        QuinticSpline::new(t.x0, t.dx, t.values)
    }
}

impl From<QuinticSpline> for SampleTable {
    fn from(s: QuinticSpline) -> Self {
        SampleTable {
            x0: s.x0,
            dx: s.dx,
            values: s.values,
        }
    }
}

pub const MIN_SAMPLES: usize = 8;

impl QuinticSpline {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SAMPLES {
            return Err(Error::Invalid(format!(
                "spline needs at least {MIN_SAMPLES} samples, got {}",
                values.len()
            )));
        }
        if !(dx > 0.0) || !x0.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "spline samples must be finite with dx > 0".into(),
            ));
        }
        let coeffs = interpolation_coeffs(&values)?;
        Ok(QuinticSpline {
            x0,
            dx,
            values,
            coeffs,
        })
    }

    pub fn from_fn(x0: f64, x1: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = (x1 - x0) / (samples.max(2) - 1) as f64;
        let values = (0..samples).map(|i| f(x0 + i as f64 * dx)).collect();
        QuinticSpline::new(x0, dx, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Derivatives above the fifth vanish (piecewise).
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        if order > 5 {
            return 0.0;
        }
        let t = (x - self.x0) / self.dx;
        let k_lo = (t.floor() as i64 - 3).max(-2);
        let k_hi = (t.floor() as i64 + 3).min(self.values.len() as i64 + 1);
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            acc += self.coeffs[(k + 2) as usize] * bspline5(t - k as f64, order);
        }
        acc / self.dx.powi(order as i32)
    }
}

const BINOM6: [f64; 7] = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];

/// `order`-th derivative of the centred quintic B-spline (support `[-3, 3]`).
fn bspline5(t: f64, order: usize) -> f64 {
    if t <= -3.0 || t >= 3.0 {
        return 0.0;
    }
    let p = 5 - order as i32;
    let falling: f64 = (p + 1..=5).map(|m| m as f64).product();
    let mut acc = 0.0;
    for (j, b) in BINOM6.iter().enumerate() {
        let s = t + 3.0 - j as f64;
        if s > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * b * s.powi(p);
        }
    }
    acc * falling / 120.0
}

fn interpolation_coeffs(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    let m = n + 4;
    let mut rows: Vec<BandRow> = Vec::with_capacity(m);
    let sixth: Vec<f64> = BINOM6
        .iter()
        .enumerate()
        .map(|(j, b)| if j % 2 == 0 { *b } else { -*b })
        .collect();
    rows.push(BandRow::new(0, sixth.clone()));
    rows.push(BandRow::new(1, sixth.clone()));
    for i in 0..n {
        rows.push(BandRow::new(
            i,
            [1.0, 26.0, 66.0, 26.0, 1.0]
                .iter()
                .map(|x| x / 120.0)
                .collect(),
        ));
    }
    rows.push(BandRow::new(m - 8, sixth.clone()));
    rows.push(BandRow::new(m - 7, sixth));
    let mut rhs = vec![0.0; m];
    rhs[2..n + 2].copy_from_slice(values);
    solve_banded(rows, rhs, 6)
}

/// A sparse matrix row holding columns `start .. start + vals.len()`.
#[derive(Debug, Clone)]
struct BandRow {
    start: usize,
    vals: Vec<f64>,
}

impl BandRow {
    fn new(start: usize, vals: Vec<f64>) -> Self {
        BandRow { start, vals }
    }

    fn get(&self, c: usize) -> f64 {
        if c < self.start {
            0.0
        } else {
            self.vals.get(c - self.start).copied().unwrap_or(0.0)
        }
    }

    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    /// `self -= factor·other`, widening as needed.
    fn sub_scaled(&mut self, other: &BandRow, factor: f64) {
        if other.start < self.start {
            let pad = self.start - other.start;
            let mut v = vec![0.0; pad];
            v.extend_from_slice(&self.vals);
            self.vals = v;
            self.start = other.start;
        }
        if other.end() > self.end() {
            self.vals.resize(other.end() - self.start, 0.0);
        }
        for (k, x) in other.vals.iter().enumerate() {
            self.vals[other.start + k - self.start] -= factor * x;
        }
    }
}

/// Gaussian elimination with partial pivoting restricted to a band of
/// `kl` sub-diagonals.
fn solve_banded(mut rows: Vec<BandRow>, mut rhs: Vec<f64>, kl: usize) -> Result<Vec<f64>> {
    let m = rows.len();
    for k in 0..m {
        let last = (k + kl).min(m - 1);
        let p = (k..=last)
            .max_by(|&a, &b| rows[a].get(k).abs().total_cmp(&rows[b].get(k).abs()))
            .unwrap();
        if rows[p].get(k).abs() < 1e-300 {
            return Err(Error::Invalid("spline system is singular".into()));
        }
        rows.swap(k, p);
        rhs.swap(k, p);
        let pivot_row = rows[k].clone();
        let pivot = pivot_row.get(k);
        for i in k + 1..=last {
            let f = rows[i].get(k) / pivot;
            if f != 0.0 {
                rows[i].sub_scaled(&pivot_row, f);
                rhs[i] -= f * rhs[k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let row = &rows[k];
        let mut s = rhs[k];
        for c in k + 1..row.end().min(m) {
            s -= row.get(c) * x[c];
        }
        x[k] = s / row.get(k);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let p = WaveformSpec::polynomial(&[1.0, -2.0, 0.0, 3.0]);
        assert_eq!(p.value(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(p.derivative(2.0, 1), -2.0 + 36.0);
        assert_eq!(p.derivative(2.0, 3), 18.0);
        assert_eq!(p.derivative(2.0, 4), 0.0);
    }

    #[test]
    fn bump_shape() {
        let b = WaveformSpec::bump(0.5, 0.2, 2.0).unwrap();
        assert_eq!(b.value(0.5), 2.0);
        assert!(b.value(0.4).abs() < 1e-15);
        assert_eq!(b.value(0.7), 0.0);
        assert_eq!(b.support(), Some((0.4, 0.6)));
        // Finite-difference check of the first two derivatives inside the support.
        let h = 1e-5;
        for x in [0.43, 0.5, 0.58] {
            let d1 = (b.value(x + h) - b.value(x - h)) / (2.0 * h);
            assert!((d1 - b.derivative(x, 1)).abs() < 1e-6 * (1.0 + d1.abs()));
            let d2 = (b.derivative(x + h, 1) - b.derivative(x - h, 1)) / (2.0 * h);
            assert!((d2 - b.derivative(x, 2)).abs() < 1e-5 * (1.0 + d2.abs()));
        }
        assert!(WaveformSpec::bump(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn bspline_values() {
        assert!((bspline5(0.0, 0) - 66.0 / 120.0).abs() < 1e-15);
        assert!((bspline5(1.0, 0) - 26.0 / 120.0).abs() < 1e-15);
        assert!((bspline5(-2.0, 0) - 1.0 / 120.0).abs() < 1e-15);
        let total: f64 = (-3..=3).map(|k| bspline5(0.3 - k as f64, 0)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spline_reproduces_quintics() {
        let q = |x: f64| 1.0 - x + 2.0 * x.powi(3) - 0.5 * x.powi(5);
        let s = QuinticSpline::from_fn(-1.0, 1.0, 21, q).unwrap();
        for x in [-0.93, -0.2, 0.0, 0.41, 0.99] {
            assert!((s.derivative(x, 0) - q(x)).abs() < 1e-11, "x={x}");
            let d1 = -1.0 + 6.0 * x * x - 2.5 * x.powi(4);
            assert!((s.derivative(x, 1) - d1).abs() < 1e-9);
            let d4 = -60.0 * x;
            assert!((s.derivative(x, 4) - d4).abs() < 1e-6);
        }
    }

    #[test]
    fn spline_roundtrips_through_json() {
        let s = WaveformSpec::Sampled(QuinticSpline::from_fn(0.0, 1.0, 11, |x| x.sin()).unwrap());
        let text = serde_json::to_string(&s).unwrap();
        let back: WaveformSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
