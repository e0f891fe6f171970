//! Antiderivatives from a small table, with a quadrature-backed fallback.
//!
//! Closed forms cover var-free factors, polynomials in the integration
//! variable, integer powers of linear forms (including the logarithmic
//! case) and exp/sin/cos of linear forms. Linear forms must have a numeric,
//! nonzero slope; a symbolic slope would put a removable singularity in the
//! result. Anything else becomes an [`Node::Integral`] node.

use super::{Expr, Node, Var};

const MAX_DEGREE: usize = 32;

/// `G` with `∂_var G = e` and `G = 0` on `var = lower`.
pub fn antiderivative(e: &Expr, var: Var, lower: f64) -> Expr {
    let f = primitive(e, var, lower);
    Expr::sub(f.clone(), f.substitute(var, lower))
}

fn primitive(e: &Expr, var: Var, lower: f64) -> Expr {
    let x = Expr::var(var);
    if !e.depends_on(var) {
        return Expr::mul(e.clone(), x);
    }
    let fallback = || Expr::integral(e.clone(), var, lower, None);
    match e.node() {
        Node::Sum(xs) => Expr::sum(
            xs.iter()
                .map(|t| primitive(t, var, lower))
                .collect::<Vec<_>>(),
        ),
        Node::Neg(a) => Expr::neg(primitive(a, var, lower)),
        Node::Product(xs) => {
            let (free, dep): (Vec<Expr>, Vec<Expr>) =
                xs.iter().cloned().partition(|f| !f.depends_on(var));
            if !free.is_empty() {
                return Expr::mul(
                    Expr::product(free),
                    primitive(&Expr::product(dep), var, lower),
                );
            }
            polynomial_primitive(e, var).unwrap_or_else(fallback)
        }
        Node::Quotient(a, b) => {
            if !b.depends_on(var) {
                return Expr::div(primitive(a, var, lower), b.clone());
            }
            if !a.depends_on(var) {
                let (base, n) = match b.node() {
                    Node::Power(base, n) => (base, -*n),
                    _ => (b, -1),
                };
                if let Some(p) = linear_power_primitive(base, n, var) {
                    return Expr::mul(a.clone(), p);
                }
            }
            fallback()
        }
        Node::Power(b, n) => linear_power_primitive(b, *n, var)
            .or_else(|| polynomial_primitive(e, var))
            .unwrap_or_else(fallback),
        Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
            let Some((slope, _)) = linear(a, var) else {
                return fallback();
            };
            let p = match e.node() {
                Node::Exp(_) => e.clone(),
                Node::Sin(_) => Expr::neg(Expr::cos(a.clone())),
                _ => Expr::sin(a.clone()),
            };
            Expr::scale(1.0 / slope, p)
        }
        _ => polynomial_primitive(e, var).unwrap_or_else(fallback),
    }
}

/// Primitive of `b^n` for linear `b` with numeric slope.
fn linear_power_primitive(b: &Expr, n: i32, var: Var) -> Option<Expr> {
    let (slope, _) = linear(b, var)?;
    Some(if n == -1 {
        Expr::scale(1.0 / slope, Expr::ln_abs(b.clone()))
    } else {
        Expr::scale(1.0 / (slope * (n + 1) as f64), Expr::powi(b.clone(), n + 1))
    })
}

fn polynomial_primitive(e: &Expr, var: Var) -> Option<Expr> {
    let coeffs = poly_coeffs(e, var)?;
    Some(Expr::sum(coeffs.into_iter().enumerate().map(|(k, c)| {
        Expr::product([
            c,
            Expr::constant(1.0 / (k + 1) as f64),
            Expr::powi(Expr::var(var), k as i32 + 1),
        ])
    })))
}

/// `(slope, intercept)` when `e = slope·var + intercept` with numeric nonzero slope.
fn linear(e: &Expr, var: Var) -> Option<(f64, Expr)> {
    let c = poly_coeffs(e, var)?;
    if c.len() != 2 {
        return None;
    }
    let slope = c[1].as_const()?;
    (slope != 0.0 && slope.is_finite()).then(|| (slope, c[0].clone()))
}

/// Coefficients (free of `var`) of `e` as a polynomial in `var`.
pub(crate) fn poly_coeffs(e: &Expr, var: Var) -> Option<Vec<Expr>> {
    if !e.depends_on(var) {
        return Some(vec![e.clone()]);
    }
    let out = match e.node() {
        Node::Var(_) => vec![Expr::zero(), Expr::one()],
        Node::Sum(xs) => {
            let mut acc: Vec<Expr> = Vec::new();
            for x in xs {
                acc = add(&acc, &poly_coeffs(x, var)?);
            }
            acc
        }
        Node::Neg(a) => poly_coeffs(a, var)?.into_iter().map(Expr::neg).collect(),
        Node::Product(xs) => {
            let mut acc = vec![Expr::one()];
            for x in xs {
                acc = mul(&acc, &poly_coeffs(x, var)?)?;
            }
            acc
        }
        Node::Power(b, n) if *n > 0 => {
            let base = poly_coeffs(b, var)?;
            let mut acc = vec![Expr::one()];
            for _ in 0..*n {
                acc = mul(&acc, &base)?;
            }
            acc
        }
        Node::Quotient(a, b) if !b.depends_on(var) => poly_coeffs(a, var)?
            .into_iter()
            .map(|c| Expr::div(c, b.clone()))
            .collect(),
        _ => return None,
    };
    Some(trim(out))
}

fn trim(mut c: Vec<Expr>) -> Vec<Expr> {
    while c.len() > 1 && c.last().is_some_and(Expr::is_literal_zero) {
        c.pop();
    }
    c
}

fn add(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => Expr::add(x.clone(), y.clone()),
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => unreachable!(),
        })
        .collect()
}

fn mul(a: &[Expr], b: &[Expr]) -> Option<Vec<Expr>> {
    if a.len() + b.len() > MAX_DEGREE + 2 {
        return None;
    }
    let mut out = vec![Vec::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j].push(Expr::mul(x.clone(), y.clone()));
        }
    }
    Some(out.into_iter().map(Expr::sum).collect())
}

#[cfg(test)]
mod tests {
    use super::super::{parse, EvalPoint};
    use super::*;

    fn check(text: &str, var: Var, lower: f64, closed: bool) {
        let e = parse(text).unwrap();
        let g = antiderivative(&e, var, lower);
        assert_eq!(
            !format!("{g}").contains("integral_"),
            closed,
            "{text} -> {g}"
        );
        for (u, v) in [(0.3, 0.9), (-0.7, 0.2), (0.55, -0.4)] {
            let p = EvalPoint::new(u, v);
            let d = g.diff(var).eval(p).unwrap();
            let want = e.eval(p).unwrap();
            assert!(
                (d - want).abs() < 1e-9 * (1.0 + want.abs()),
                "{text}: {d} vs {want}"
            );
        }
        let mut at_lower = EvalPoint::new(0.4, 0.6);
        match var {
            Var::U => at_lower.u = lower,
            _ => at_lower.v = lower,
        }
        assert!(g.eval(at_lower).unwrap().abs() < 1e-12);
    }

    #[test]
    fn table_entries() {
        check("0", Var::U, 0.0, true);
        check("v", Var::U, -1.0, true);
        check("u", Var::V, -1.0, true);
        check("cos(u)*cos(v)", Var::U, -1.0, true);
        check("-sin(u)*sin(v)", Var::V, -1.0, true);
        check("3*u^2*v - u + 2", Var::U, 0.5, true);
        check("(2*u - v)^3", Var::U, 0.0, true);
        check("1/(v - u + 3)", Var::U, 0.0, true);
        check("2/(v - u + 3)^2", Var::U, 0.0, true);
        check("exp(2*u + v)", Var::U, 0.0, true);
    }

    #[test]
    fn fallback_is_numeric() {
        check("exp(u*v)", Var::U, 0.0, false);
        check("sin(u^2)", Var::U, -1.0, false);
    }
}
