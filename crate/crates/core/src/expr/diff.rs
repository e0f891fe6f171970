use std::collections::HashMap;

use super::{Expr, Node, Var};

impl Expr {
    /// Exact partial derivative.
    pub fn diff(&self, var: Var) -> Expr {
        Differ::new(var).diff(self)
    }

    /// `∂_u ∂_v` of the expression.
    pub fn diff_uv(&self) -> Expr {
        self.diff(Var::U).diff(Var::V)
    }

    /// `∂_var ln|self|`, split across products, quotients and powers so that
    /// `ln|j|` of a product never materialises the full `j'/j`.
    pub fn dlog(&self, var: Var) -> Expr {
        Differ::new(var).dlog(self)
    }
}

// Memo keys are node addresses. Only nodes reachable from the input are
// ever keyed, so every address stays live for the whole call.
struct Differ {
    var: Var,
    memo: HashMap<usize, Expr>,
    log_memo: HashMap<usize, Expr>,
}

impl Differ {
    fn new(var: Var) -> Self {
        Differ {
            var,
            memo: HashMap::new(),
            log_memo: HashMap::new(),
        }
    }

    fn diff(&mut self, e: &Expr) -> Expr {
        if !e.depends_on(self.var) {
            return Expr::zero();
        }
        if let Some(d) = self.memo.get(&e.ptr_key()) {
            return d.clone();
        }
        let d = match e.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(x) => {
                if *x == self.var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| self.diff(x)).collect::<Vec<_>>()),
            Node::Product(xs) => {
                let mut terms = Vec::new();
                for i in 0..xs.len() {
                    let di = self.diff(&xs[i]);
                    if di.is_literal_zero() {
                        continue;
                    }
                    let mut fs = xs.clone();
                    fs[i] = di;
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Quotient(a, b) => {
                let da = self.diff(a);
                if !b.depends_on(self.var) {
                    Expr::div(da, b.clone())
                } else {
                    // (a' − q·b')/b keeps the denominator at b under repeated differentiation.
                    let db = self.diff(b);
                    let qdb = Expr::mul(e.clone(), db);
                    if da.is_literal_zero() {
                        Expr::neg(Expr::div(qdb, b.clone()))
                    } else {
                        Expr::div(Expr::sub(da, qdb), b.clone())
                    }
                }
            }
            Node::Power(b, n) => Expr::product([
                Expr::constant(*n as f64),
                Expr::powi(b.clone(), n - 1),
                self.diff(b),
            ]),
            Node::Exp(a) => Expr::mul(e.clone(), self.diff(a)),
            Node::LnAbs(a) => self.dlog(a),
            Node::Sin(a) => Expr::mul(Expr::cos(a.clone()), self.diff(a)),
            Node::Cos(a) => Expr::neg(Expr::mul(Expr::sin(a.clone()), self.diff(a))),
            Node::Abs(a) => Expr::div(Expr::mul(self.diff(a), e.clone()), a.clone()),
            Node::Neg(a) => Expr::neg(self.diff(a)),
            Node::Integral(int) => {
                if int.var == self.var {
                    // Only reachable with a free upper limit.
                    int.integrand.clone()
                } else {
                    Expr::integral(self.diff(&int.integrand), int.var, int.lower, int.upper)
                }
            }
        };
        self.memo.insert(e.ptr_key(), d.clone());
        d
    }

    fn dlog(&mut self, e: &Expr) -> Expr {
        if !e.depends_on(self.var) {
            return Expr::zero();
        }
        if let Some(d) = self.log_memo.get(&e.ptr_key()) {
            return d.clone();
        }
        let d = match e.node() {
            Node::Product(xs) => Expr::sum(xs.iter().map(|x| self.dlog(x)).collect::<Vec<_>>()),
            Node::Quotient(a, b) => Expr::sub(self.dlog(a), self.dlog(b)),
            Node::Power(b, n) => Expr::scale(*n as f64, self.dlog(b)),
            Node::Exp(a) => self.diff(a),
            Node::Neg(a) | Node::Abs(a) => self.dlog(a),
            _ => Expr::div(self.diff(e), e.clone()),
        };
        self.log_memo.insert(e.ptr_key(), d.clone());
        d
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, EvalPoint};
    use super::*;

    fn at(e: &Expr, u: f64, v: f64) -> f64 {
        e.eval(EvalPoint::new(u, v)).unwrap()
    }

    #[test]
    fn log_of_distance() {
        let d = parse("ln(abs(v-u))").unwrap().diff(Var::U);
        let want = parse("-1/(v-u)").unwrap();
        for (u, v) in [(0.1, 0.7), (0.9, 0.2), (-3.0, 4.0)] {
            assert!((at(&d, u, v) - at(&want, u, v)).abs() < 1e-14);
        }
    }

    #[test]
    fn constants_vanish() {
        assert!(parse("3.5").unwrap().diff(Var::U).is_literal_zero());
        assert!(parse("exp(v)").unwrap().diff(Var::U).is_literal_zero());
    }

    #[test]
    fn multipole_log_mixed_partial() {
        let d = parse("ln(2/(v-u)^2)").unwrap().diff_uv();
        let want = parse("-2/(v-u)^2").unwrap();
        for (u, v) in [(0.1, 0.7), (0.3, 0.31), (2.0, -1.0)] {
            let (a, b) = (at(&d, u, v), at(&want, u, v));
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn integral_node_derivatives() {
        let e = parse("integral_u(exp(u*v), 0)").unwrap();
        let du = e.diff(Var::U);
        assert!((at(&du, 0.5, 0.3) - (0.15f64).exp()).abs() < 1e-14);
        let dv = e.diff(Var::V);
        // ∫_0^u s e^{sv} ds at v=0 is u²/2.
        assert!((at(&dv, 0.8, 0.0) - 0.32).abs() < 1e-9);
    }

    #[test]
    fn abs_derivative_is_sign() {
        let d = parse("abs(u-v)").unwrap().diff(Var::U);
        assert_eq!(at(&d, 1.0, 0.0), 1.0);
        assert_eq!(at(&d, 0.0, 1.0), -1.0);
    }
}
