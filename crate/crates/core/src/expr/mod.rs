//! Symbolic expressions in the null coordinates `u`, `v`.
//!
//! Expressions are immutable, reference-counted trees (DAGs once
//! differentiated, since derivatives share subtrees with their source).
//! Construction always goes through the folding constructors on [`Expr`],
//! which collapse constant subtrees and the usual 0/1 identities. Nothing
//! more clever than that is attempted; equality questions are answered by
//! sampling (see [`zero`]).

mod diff;
mod eval;
mod integrate;
mod parse;
pub mod zero;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use eval::EvalError;
pub use integrate::antiderivative;
pub use zero::{is_zero, is_zero_scaled, SampleDomain, ZeroTest};

/// A coordinate symbol. `BaseU`/`BaseV` are the primed coordinates of a
/// two-point kernel such as the Riemann function; they print as `u'`, `v'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    U,
    V,
    BaseU,
    BaseV,
}

impl Var {
    pub(crate) fn index(self) -> usize {
        match self {
            Var::U => 0,
            Var::V => 1,
            Var::BaseU => 2,
            Var::BaseV => 3,
        }
    }

    fn bit(self) -> u8 {
        1 << self.index()
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::V => "v",
            Var::BaseU => "u'",
            Var::BaseV => "v'",
        }
    }

    /// The primed counterpart of `u`/`v` (identity on primed symbols).
    pub fn primed(self) -> Var {
        match self {
            Var::U => Var::BaseU,
            Var::V => Var::BaseV,
            other => other,
        }
    }
}

/// A point in null coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub u: f64,
    pub v: f64,
}

impl EvalPoint {
    pub fn new(u: f64, v: f64) -> Self {
        EvalPoint { u, v }
    }
}

/// `∫_lower^{upper or var} integrand(var → s) ds`, holding the other
/// coordinates fixed. Used when no closed-form antiderivative is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub integrand: Expr,
    pub var: Var,
    pub lower: f64,
    /// `None` means the upper limit is the current value of `var`.
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Power(Expr, i32),
    Exp(Expr),
    /// `ln|x|`
    LnAbs(Expr),
    Sin(Expr),
    Cos(Expr),
    Abs(Expr),
    Neg(Expr),
    Integral(Integral),
}

struct Inner {
    node: Node,
    vars: u8,
    size: usize,
}

#[derive(Clone)]
pub struct Expr(Arc<Inner>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected one of {expected:?}, found {found}")]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("literal zero denominator at byte {offset}")]
    ZeroDenominator { offset: usize },
    #[error("every sampled point was singular")]
    AllPointsSingular,
    #[error("zero test needs at least 8 trials, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        let (vars, size) = match &node {
            Node::Const(_) => (0, 1),
            Node::Var(v) => (v.bit(), 1),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().fold((0u8, 1usize), |(m, s), x| {
                (m | x.0.vars, s.saturating_add(x.0.size))
            }),
            Node::Quotient(a, b) => (a.0.vars | b.0.vars, 1 + a.0.size.saturating_add(b.0.size)),
            Node::Power(a, _)
            | Node::Exp(a)
            | Node::LnAbs(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Abs(a)
            | Node::Neg(a) => (a.0.vars, a.0.size.saturating_add(1)),
            Node::Integral(int) => {
                let mut vars = int.integrand.0.vars & !int.var.bit();
                if int.upper.is_none() {
                    vars |= int.var.bit();
                }
                (vars, int.integrand.0.size.saturating_add(1))
            }
        };
        Expr(Arc::new(Inner { node, vars, size }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Tree size counting shared subtrees once per occurrence (saturating).
    pub fn tree_size(&self) -> usize {
        self.0.size
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.0.vars & var.bit() != 0
    }

    /// True if the expression mentions `u'` or `v'`.
    pub fn is_two_point(&self) -> bool {
        self.depends_on(Var::BaseU) || self.depends_on(Var::BaseV)
    }

    pub(crate) fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_literal_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_literal_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    // ---- folding constructors -------------------------------------------

    pub fn constant(c: f64) -> Expr {
        // -0.0 prints as "-0"; normalise it away.
        Expr::from_node(Node::Const(if c == 0.0 { 0.0 } else { c }))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::from_node(Node::Var(v))
    }

    pub fn u() -> Expr {
        Expr::var(Var::U)
    }

    pub fn v() -> Expr {
        Expr::var(Var::V)
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        let mut constant = 0.0;
        let mut const_slot: Option<usize> = None;
        let mut push = |t: Expr, out: &mut Vec<Expr>| match t.node() {
            Node::Const(c) => {
                constant += c;
                if const_slot.is_none() {
                    const_slot = Some(out.len());
                    out.push(Expr::zero());
                }
            }
            _ => out.push(t),
        };
        for t in terms {
            if let Node::Sum(inner) = t.node() {
                for x in inner {
                    push(x.clone(), &mut out);
                }
            } else {
                push(t, &mut out);
            }
        }
        if let Some(slot) = const_slot {
            if constant == 0.0 {
                out.remove(slot);
            } else {
                out[slot] = Expr::constant(constant);
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Sum(out)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        fn absorb(f: &Expr, coeff: &mut f64, out: &mut Vec<Expr>) {
            match f.node() {
                Node::Const(c) => *coeff *= c,
                Node::Neg(inner) => {
                    *coeff = -*coeff;
                    absorb(inner, coeff, out);
                }
                Node::Product(inner) => inner.iter().for_each(|x| absorb(x, coeff, out)),
                _ => out.push(f.clone()),
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        let mut coeff = 1.0;
        for f in factors {
            absorb(&f, &mut coeff, &mut out);
        }
        if coeff == 0.0 {
            return Expr::zero();
        }
        if out.is_empty() {
            return Expr::constant(coeff);
        }
        // Sign lives in a Neg wrapper; the product keeps a positive coefficient.
        if coeff.abs() != 1.0 {
            out.insert(0, Expr::constant(coeff.abs()));
        }
        let body = if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::from_node(Node::Product(out))
        };
        if coeff < 0.0 {
            Expr::neg(body)
        } else {
            body
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::sum([a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::sum([a, Expr::neg(b)])
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::product([a, b])
    }

    pub fn scale(c: f64, a: Expr) -> Expr {
        Expr::product([Expr::constant(c), a])
    }

    /// Quotient `a / b`. A literal zero denominator is a construction bug.
    pub fn div(a: Expr, b: Expr) -> Expr {
        debug_assert!(!b.is_literal_zero(), "literal zero denominator");
        if a.is_literal_zero() {
            return Expr::zero();
        }
        if b.is_literal_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let q = x / y;
            if q.is_finite() && y != 0.0 {
                return Expr::constant(q);
            }
        }
        if let Some(y) = b.as_const() {
            if y == -1.0 {
                return Expr::neg(a);
            }
        }
        if let Node::Neg(inner) = a.node() {
            return Expr::neg(Expr::div(inner.clone(), b));
        }
        Expr::from_node(Node::Quotient(a, b))
    }

    pub fn recip(a: Expr) -> Expr {
        Expr::div(Expr::one(), a)
    }

    pub fn neg(a: Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::from_node(Node::Neg(a)),
        }
    }

    pub fn powi(base: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return base;
        }
        match base.node() {
            Node::Const(c) => {
                let p = c.powi(n);
                if p.is_finite() && *c != 0.0 {
                    return Expr::constant(p);
                }
                if *c == 0.0 && n > 0 {
                    return Expr::zero();
                }
            }
            Node::Power(inner, m) => {
                if let Some(k) = m.checked_mul(n) {
                    return Expr::powi(inner.clone(), k);
                }
            }
            _ => {}
        }
        Expr::from_node(Node::Power(base, n))
    }

    fn fold_unary(a: Expr, f: fn(f64) -> f64, wrap: fn(Expr) -> Node) -> Expr {
        if let Some(c) = a.as_const() {
            let y = f(c);
            if y.is_finite() {
                return Expr::constant(y);
            }
        }
        Expr::from_node(wrap(a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::fold_unary(a, f64::exp, Node::Exp)
    }

    pub fn ln_abs(a: Expr) -> Expr {
        if let Node::Abs(inner) = a.node() {
            return Expr::ln_abs(inner.clone());
        }
        if let Some(c) = a.as_const() {
            if c != 0.0 {
                return Expr::constant(c.abs().ln());
            }
        }
        Expr::from_node(Node::LnAbs(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::fold_unary(a, f64::sin, Node::Sin)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::fold_unary(a, f64::cos, Node::Cos)
    }

    pub fn abs(a: Expr) -> Expr {
        match a.node() {
            Node::Abs(_) => a,
            Node::Neg(inner) => Expr::abs(inner.clone()),
            _ => Expr::fold_unary(a, f64::abs, Node::Abs),
        }
    }

    pub fn integral(integrand: Expr, var: Var, lower: f64, upper: Option<f64>) -> Expr {
        if integrand.is_literal_zero() {
            return Expr::zero();
        }
        if upper == Some(lower) {
            return Expr::zero();
        }
        Expr::from_node(Node::Integral(Integral {
            integrand,
            var,
            lower,
            upper,
        }))
    }

    /// Rebuild the tree through the folding constructors.
    pub fn simplify(&self) -> Expr {
        self.map_children(&|e| e.simplify())
    }

    fn map_children(&self, f: &dyn Fn(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Sum(xs) => Expr::sum(xs.iter().map(f)),
            Node::Product(xs) => Expr::product(xs.iter().map(f)),
            Node::Quotient(a, b) => Expr::div(f(a), f(b)),
            Node::Power(a, n) => Expr::powi(f(a), *n),
            Node::Exp(a) => Expr::exp(f(a)),
            Node::LnAbs(a) => Expr::ln_abs(f(a)),
            Node::Sin(a) => Expr::sin(f(a)),
            Node::Cos(a) => Expr::cos(f(a)),
            Node::Abs(a) => Expr::abs(f(a)),
            Node::Neg(a) => Expr::neg(f(a)),
            Node::Integral(int) => Expr::integral(f(&int.integrand), int.var, int.lower, int.upper),
        }
    }

    /// Replace `var` by the constant `value`.
    pub fn substitute(&self, var: Var, value: f64) -> Expr {
        if !self.depends_on(var) {
            return self.clone();
        }
        match self.node() {
            Node::Var(x) if *x == var => Expr::constant(value),
            Node::Integral(int) if int.var == var => {
                // Only the free upper limit can mention `var`.
                Expr::integral(int.integrand.clone(), var, int.lower, Some(value))
            }
            _ => self.map_children(&|e| e.substitute(var, value)),
        }
    }

    /// Rename `u → u'`, `v → v'`.
    pub fn to_base_point(&self) -> Expr {
        self.rename(&|x| x.primed())
    }

    fn rename(&self, f: &dyn Fn(Var) -> Var) -> Expr {
        match self.node() {
            Node::Var(x) => Expr::var(f(*x)),
            Node::Integral(int) => {
                Expr::integral(int.integrand.rename(f), f(int.var), int.lower, int.upper)
            }
            _ => self.map_children(&|e| e.rename(f)),
        }
    }

    /// Nested-call rendering, e.g. `quotient(2, power(sum(v, neg(u)), 2))`.
    pub fn structure(&self) -> String {
        let list = |xs: &[Expr]| {
            xs.iter()
                .map(Expr::structure)
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self.node() {
            Node::Const(c) => format!("{c}"),
            Node::Var(x) => x.name().to_string(),
            Node::Sum(xs) => format!("sum({})", list(xs)),
            Node::Product(xs) => format!("product({})", list(xs)),
            Node::Quotient(a, b) => format!("quotient({}, {})", a.structure(), b.structure()),
            Node::Power(a, n) => format!("power({}, {n})", a.structure()),
            Node::Exp(a) => format!("exp({})", a.structure()),
            Node::LnAbs(a) => format!("ln_abs({})", a.structure()),
            Node::Sin(a) => format!("sin({})", a.structure()),
            Node::Cos(a) => format!("cos({})", a.structure()),
            Node::Abs(a) => format!("abs({})", a.structure()),
            Node::Neg(a) => format!("neg({})", a.structure()),
            Node::Integral(int) => format!(
                "integral_{}({}, {}, {:?})",
                int.var.name(),
                int.integrand.structure(),
                int.lower,
                int.upper
            ),
        }
    }

    /// Polynomial `Σ c_k x^k` in `var` with constant coefficients.
    pub fn polynomial(var: Var, coeffs: &[f64]) -> Expr {
        Expr::sum(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(k, c)| Expr::scale(*c, Expr::powi(Expr::var(var), k as i32))),
        )
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse(s)
    }
}

/// Parse an expression in the coefficient grammar.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    parse::parse(text)
}

// ---- printing -------------------------------------------------------------

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Sum(_) => PREC_SUM,
        Node::Product(_) | Node::Quotient(..) => PREC_PRODUCT,
        Node::Neg(_) => PREC_UNARY,
        Node::Const(c) if *c < 0.0 => PREC_UNARY,
        Node::Power(..) => 4,
        _ => PREC_ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(x) => f.write_str(x.name()),
            Node::Sum(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    let (negated, body) = match x.node() {
                        Node::Neg(inner) => (true, inner.clone()),
                        Node::Const(c) if *c < 0.0 => (true, Expr::constant(-c)),
                        _ => (false, x.clone()),
                    };
                    match (i, negated) {
                        (0, false) => write_at(f, &body, PREC_SUM + 1)?,
                        (0, true) => {
                            f.write_str("-")?;
                            write_at(f, &body, PREC_PRODUCT)?
                        }
                        (_, false) => {
                            f.write_str(" + ")?;
                            write_at(f, &body, PREC_SUM + 1)?
                        }
                        (_, true) => {
                            f.write_str(" - ")?;
                            write_at(f, &body, PREC_PRODUCT)?
                        }
                    }
                }
                Ok(())
            }
            Node::Product(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    // Left-associative: only the first factor may be a bare quotient.
                    let min = if i == 0 { PREC_PRODUCT } else { PREC_UNARY };
                    write_at(f, x, min)?;
                }
                Ok(())
            }
            Node::Quotient(a, b) => {
                write_at(f, a, PREC_PRODUCT)?;
                f.write_str("/")?;
                write_at(f, b, PREC_UNARY)
            }
            Node::Power(a, n) => {
                write_at(f, a, PREC_ATOM)?;
                write!(f, "^{n}")
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::LnAbs(a) => write!(f, "ln(abs({a}))"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Abs(a) => write!(f, "abs({a})"),
            // `-a*b` re-parses as `(-a)*b`, which folds back to the same node.
            Node::Neg(a) => {
                f.write_str("-")?;
                write_at(f, a, PREC_PRODUCT)
            }
            Node::Integral(int) => {
                let name = match int.var {
                    Var::U => "integral_u",
                    Var::V => "integral_v",
                    Var::BaseU => "integral_up",
                    Var::BaseV => "integral_vp",
                };
                write!(f, "{name}({}, {}", int.integrand, int.lower)?;
                if let Some(up) = int.upper {
                    write!(f, ", {up}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}
