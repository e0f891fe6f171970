//! Probabilistic zero testing.
//!
//! An expression is declared zero when it is small at every one of a fixed
//! set of quasi-random sample points. This is a test, not a decision
//! procedure: a nonzero expression that happens to vanish at all samples
//! is misclassified. The points come from a Halton sequence (bases 2, 3),
//! so results are reproducible.

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalPoint, Expr, ExprError};

pub const DEFAULT_TRIALS: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const MIN_TRIALS: usize = 8;

/// Rectangle to sample from, minus bands `|u − v − c| < margin` around
/// each singular line `u = v + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub u: [f64; 2],
    pub v: [f64; 2],
    #[serde(default)]
    pub singular_offsets: Vec<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.05
}

impl SampleDomain {
    pub fn rect(u: [f64; 2], v: [f64; 2]) -> Self {
        SampleDomain {
            u,
            v,
            singular_offsets: Vec::new(),
            margin: default_margin(),
        }
    }

    pub fn with_singular_lines(mut self, offsets: &[f64], margin: f64) -> Self {
        self.singular_offsets = offsets.to_vec();
        self.margin = margin;
        self
    }

    pub fn is_clear(&self, p: EvalPoint) -> bool {
        self.singular_offsets
            .iter()
            .all(|c| (p.u - p.v - c).abs() >= self.margin)
    }

    /// Up to `n` Halton points clear of the singular bands. Fewer are
    /// returned only when the bands cover nearly the whole rectangle.
    pub fn points(&self, n: usize) -> Vec<EvalPoint> {
        let mut out = Vec::with_capacity(n);
        let mut i = 1u64;
        let limit = 1000 * n as u64 + 1000;
        while out.len() < n && i < limit {
            let p = EvalPoint::new(
                self.u[0] + (self.u[1] - self.u[0]) * radical_inverse(i, 2),
                self.v[0] + (self.v[1] - self.v[0]) * radical_inverse(i, 3),
            );
            if self.is_clear(p) {
                out.push(p);
            }
            i += 1;
        }
        out
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    x
}

/// Sampling protocol: number of points and tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroTest {
    pub trials: usize,
    pub tol: f64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest {
            trials: DEFAULT_TRIALS,
            tol: DEFAULT_TOL,
        }
    }
}

impl ZeroTest {
    pub fn absolute(&self, e: &Expr, domain: &SampleDomain) -> Result<bool, ExprError> {
        is_zero(e, domain, self.trials, self.tol)
    }

    pub fn scaled(&self, e: &Expr, domain: &SampleDomain) -> Result<bool, ExprError> {
        is_zero_scaled(e, domain, self.trials, self.tol)
    }
}

/// `|e(p)| ≤ tol` at every regular sample point.
pub fn is_zero(
    e: &Expr,
    domain: &SampleDomain,
    trials: usize,
    tol: f64,
) -> Result<bool, ExprError> {
    sample(e, domain, trials, |val, _| val.abs() <= tol)
}

/// `|e(p)| ≤ tol·M(p)` at every regular sample point, where `M` is the
/// rounding-magnitude bound from [`Expr::eval_with_magnitude`]. Use this for
/// expressions whose terms are large and cancel.
pub fn is_zero_scaled(
    e: &Expr,
    domain: &SampleDomain,
    trials: usize,
    tol: f64,
) -> Result<bool, ExprError> {
    sample(e, domain, trials, |val, m| val.abs() <= tol * m)
}

fn sample(
    e: &Expr,
    domain: &SampleDomain,
    trials: usize,
    small: impl Fn(f64, f64) -> bool,
) -> Result<bool, ExprError> {
    if trials < MIN_TRIALS {
        return Err(ExprError::TooFewTrials(trials));
    }
    if e.is_literal_zero() {
        return Ok(true);
    }
    let mut regular = 0;
    for p in domain.points(trials) {
        match e.eval_with_magnitude(p) {
            Ok((val, m)) => {
                if !small(val, m) {
                    return Ok(false);
                }
                regular += 1;
            }
            Err(EvalError::SingularPoint { .. }) => {}
            Err(other) => return Err(ExprError::Eval(other)),
        }
    }
    if regular == 0 {
        return Err(ExprError::AllPointsSingular);
    }
    Ok(true)
}
