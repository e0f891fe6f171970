use std::collections::HashMap;

use thiserror::Error;

use super::{EvalPoint, Expr, Integral, Node};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("singular point at u={u}, v={v}: a denominator or logarithm argument vanishes")]
    SingularPoint { u: f64, v: f64 },
    #[error("variable {0} has no value at this evaluation")]
    UnboundVariable(&'static str),
}

/// Denominators and log arguments at or below this are treated as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;
const MEMO_MIN_SIZE: usize = 64;
const INTEGRAL_TOL: f64 = 1e-10;

impl Expr {
    /// Value at `p`. Fails on primed variables, which need [`Expr::eval_two_point`].
    pub fn eval(&self, p: EvalPoint) -> Result<f64, EvalError> {
        Ok(self.eval_with_magnitude(p)?.0)
    }

    /// Value together with a rounding-magnitude bound `M`: the computed
    /// value carries an absolute error of order `ε·M`. `M ≥ |value|`.
    pub fn eval_with_magnitude(&self, p: EvalPoint) -> Result<(f64, f64), EvalError> {
        self.eval_env([Some(p.u), Some(p.v), None, None])
    }

    /// Value of a two-point kernel at field point `p` and base point `base`.
    pub fn eval_two_point(&self, p: EvalPoint, base: EvalPoint) -> Result<f64, EvalError> {
        Ok(self
            .eval_env([Some(p.u), Some(p.v), Some(base.u), Some(base.v)])?
            .0)
    }

    pub(crate) fn eval_env(&self, env: [Option<f64>; 4]) -> Result<(f64, f64), EvalError> {
        let mut ev = Evaluator {
            env,
            memo: (self.tree_size() > MEMO_MIN_SIZE).then(HashMap::new),
        };
        ev.eval(self)
    }
}

struct Evaluator {
    env: [Option<f64>; 4],
    memo: Option<HashMap<usize, (f64, f64)>>,
}

impl Evaluator {
    fn singular(&self) -> EvalError {
        EvalError::SingularPoint {
            u: self.env[0].unwrap_or(f64::NAN),
            v: self.env[1].unwrap_or(f64::NAN),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<(f64, f64), EvalError> {
        let key = e.ptr_key();
        if e.tree_size() > 1 {
            if let Some(hit) = self.memo.as_ref().and_then(|m| m.get(&key)) {
                return Ok(*hit);
            }
        }
        let r = self.eval_node(e)?;
        if e.tree_size() > 1 {
            if let Some(m) = self.memo.as_mut() {
                m.insert(key, r);
            }
        }
        Ok(r)
    }

    fn eval_node(&mut self, e: &Expr) -> Result<(f64, f64), EvalError> {
        Ok(match e.node() {
            Node::Const(c) => (*c, c.abs()),
            Node::Var(x) => {
                let val = self.env[x.index()].ok_or(EvalError::UnboundVariable(x.name()))?;
                (val, val.abs())
            }
            Node::Sum(xs) => {
                let (mut s, mut m) = (0.0, 0.0);
                for x in xs {
                    let (a, ma) = self.eval(x)?;
                    s += a;
                    m += ma;
                }
                (s, m)
            }
            Node::Product(xs) => {
                let (mut p, mut m) = (1.0, 1.0);
                for x in xs {
                    let (a, ma) = self.eval(x)?;
                    p *= a;
                    m *= ma;
                }
                (p, m)
            }
            Node::Quotient(a, b) => {
                let (a, ma) = self.eval(a)?;
                let (b, mb) = self.eval(b)?;
                if b.abs() <= SINGULAR_THRESHOLD {
                    return Err(self.singular());
                }
                (a / b, (ma + a.abs() * mb / b.abs()) / b.abs())
            }
            Node::Power(b, n) => {
                let (b, mb) = self.eval(b)?;
                if *n < 0 && b.abs() <= SINGULAR_THRESHOLD {
                    return Err(self.singular());
                }
                let val = b.powi(*n);
                let m = if b == 0.0 {
                    mb.powi(*n)
                } else {
                    val.abs() * (n.unsigned_abs() as f64) * mb / b.abs()
                };
                (val, m)
            }
            Node::Exp(a) => {
                let (a, ma) = self.eval(a)?;
                let val = a.exp();
                (val, val * (1.0 + ma))
            }
            Node::LnAbs(a) => {
                let (a, ma) = self.eval(a)?;
                if a.abs() <= SINGULAR_THRESHOLD {
                    return Err(self.singular());
                }
                let val = a.abs().ln();
                (val, val.abs() + ma / a.abs())
            }
            Node::Sin(a) => {
                let (a, ma) = self.eval(a)?;
                let val = a.sin();
                (val, val.abs() + ma)
            }
            Node::Cos(a) => {
                let (a, ma) = self.eval(a)?;
                let val = a.cos();
                (val, val.abs() + ma)
            }
            Node::Abs(a) => {
                let (a, ma) = self.eval(a)?;
                (a.abs(), ma)
            }
            Node::Neg(a) => {
                let (a, ma) = self.eval(a)?;
                (-a, ma)
            }
            Node::Integral(int) => self.integral(int)?,
        })
    }

    fn integral(&mut self, int: &Integral) -> Result<(f64, f64), EvalError> {
        let slot = int.var.index();
        let upper = match int.upper {
            Some(x) => x,
            None => self.env[slot].ok_or(EvalError::UnboundVariable(int.var.name()))?,
        };
        let mut env = self.env;
        let mut inner = |s: f64| {
            env[slot] = Some(s);
            int.integrand.eval_env(env)
        };
        let val =
            quad::adaptive_simpson(|s| inner(s).map(|r| r.0), int.lower, upper, INTEGRAL_TOL)?;
        let mid = inner(0.5 * (int.lower + upper))?.1;
        Ok((val, val.abs() + (upper - int.lower).abs() * mid))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn point_values() {
        let w = parse("2/(v-u)^2").unwrap();
        assert_eq!(w.eval(EvalPoint::new(0.0, 1.0)).unwrap(), 2.0);
        assert!(matches!(
            w.eval(EvalPoint::new(1.0, 1.0)),
            Err(EvalError::SingularPoint { .. })
        ));
        assert_eq!(
            parse("exp(u*v)")
                .unwrap()
                .eval(EvalPoint::new(0.0, 7.0))
                .unwrap(),
            1.0
        );
        assert!(parse("ln(u)")
            .unwrap()
            .eval(EvalPoint::new(0.0, 1.0))
            .is_err());
    }

    #[test]
    fn primed_variables_need_a_base() {
        let k = parse("exp(u*v - u'*v')").unwrap();
        assert_eq!(
            k.eval(EvalPoint::new(1.0, 1.0)),
            Err(EvalError::UnboundVariable("u'"))
        );
        let val = k
            .eval_two_point(EvalPoint::new(0.5, 0.5), EvalPoint::new(1.0, 1.0))
            .unwrap();
        assert!((val - (-0.75f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn magnitude_dominates_value() {
        let e = parse("u - v + 3*u*v/(v - u)").unwrap();
        let (val, m) = e.eval_with_magnitude(EvalPoint::new(0.3, 0.9)).unwrap();
        assert!(m >= val.abs());
    }

    #[test]
    fn numeric_integral() {
        let e = parse("integral_u(exp(-u^2), 0)").unwrap();
        // ∫_0^1 e^{-s²} ds
        let val = e.eval(EvalPoint::new(1.0, 0.0)).unwrap();
        assert!((val - 0.746_824_132_812_427).abs() < 1e-10);
    }
}
