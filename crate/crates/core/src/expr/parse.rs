//! Recursive-descent parser for the coefficient grammar (see `docs/grammar.md`).

use super::{Expr, ExprError, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, start));
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lexeme = &text[start..i];
            let value: f64 = lexeme.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: vec!["number".into()],
                found: format!("`{lexeme}`"),
            })?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
            {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(ExprError::Syntax {
                offset: start,
                expected: vec!["number".into(), "identifier".into(), "operator".into()],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

const FUNCTIONS: &[&str] = &["exp", "ln", "sin", "cos", "abs"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::add(acc, rhs);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::sub(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = Expr::mul(acc, rhs);
                }
                Tok::Slash => {
                    self.bump();
                    let offset = self.offset();
                    let rhs = self.unary()?;
                    if rhs.is_literal_zero() {
                        return Err(ExprError::ZeroDenominator { offset });
                    }
                    acc = Expr::div(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let n = self.exponent()?;
        if *self.peek() == Tok::Caret {
            // a^b^c is ambiguous enough to refuse outright.
            return self.fail(&["`*`", "`/`", "`+`", "`-`", "`)`", "end of input"]);
        }
        Ok(Expr::powi(base, n))
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        let parens = *self.peek() == Tok::LParen;
        if parens {
            self.bump();
        }
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        let n = match self.peek() {
            Tok::Num(x) if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 => *x as i32,
            _ => return self.fail(&["integer"]),
        };
        self.bump();
        if parens {
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(if negative { -n } else { n })
    }

    fn signed_number(&mut self) -> Result<f64, ExprError> {
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        match self.peek() {
            Tok::Num(x) => {
                let x = *x;
                self.bump();
                Ok(if negative { -x } else { x })
            }
            _ => self.fail(&["number"]),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        if !matches!(self.peek(), Tok::Num(_) | Tok::LParen | Tok::Ident(_)) {
            return self.fail(&["number", "identifier", "`(`", "`-`"]);
        }
        match self.bump() {
            Tok::Num(x) => Ok(Expr::constant(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            _ => unreachable!(),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        let var = match name.as_str() {
            "u" => Some(Var::U),
            "v" => Some(Var::V),
            "u'" => Some(Var::BaseU),
            "v'" => Some(Var::BaseV),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Expr::var(v));
        }
        let integral_var = match name.as_str() {
            "integral_u" => Some(Var::U),
            "integral_v" => Some(Var::V),
            "integral_up" => Some(Var::BaseU),
            "integral_vp" => Some(Var::BaseV),
            _ => None,
        };
        if let Some(var) = integral_var {
            self.expect(Tok::LParen, "`(`")?;
            let integrand = self.expr()?;
            self.expect(Tok::Comma, "`,`")?;
            let lower = self.signed_number()?;
            let upper = if *self.peek() == Tok::Comma {
                self.bump();
                Some(self.signed_number()?)
            } else {
                None
            };
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::integral(integrand, var, lower, upper));
        }
        if !FUNCTIONS.contains(&name.as_str()) {
            return Err(ExprError::UnknownIdentifier { name, offset });
        }
        self.expect(Tok::LParen, "`(`")?;
        let arg = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(match name.as_str() {
            "exp" => Expr::exp(arg),
            "ln" => Expr::ln_abs(arg),
            "sin" => Expr::sin(arg),
            "cos" => Expr::cos(arg),
            _ => Expr::abs(arg),
        })
    }
}

pub(super) fn parse(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn structures() {
        assert_eq!(parse("0").unwrap().structure(), "0");
        assert_eq!(
            parse("2/(v-u)^2").unwrap().structure(),
            "quotient(2, power(sum(v, neg(u)), 2))"
        );
        assert_eq!(parse("exp(u*v)").unwrap().structure(), "exp(product(u, v))");
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-u^2").unwrap().structure(), "neg(power(u, 2))");
        assert_eq!(
            parse("u-v-u").unwrap().structure(),
            "sum(u, neg(v), neg(u))"
        );
        assert_eq!(
            parse("u/v/u").unwrap().structure(),
            "quotient(quotient(u, v), u)"
        );
        assert_eq!(parse("u^-2").unwrap().structure(), "power(u, -2)");
        assert_eq!(parse("u^(-2)").unwrap().structure(), "power(u, -2)");
        assert_eq!(parse("ln(abs(u))").unwrap(), parse("ln(u)").unwrap());
    }

    #[test]
    fn errors() {
        match parse("u + * v") {
            Err(ExprError::Syntax {
                offset, expected, ..
            }) => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number".to_string()));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse("2*x"),
            Err(ExprError::UnknownIdentifier {
                name: "x".into(),
                offset: 2
            })
        );
        assert_eq!(parse("u/0"), Err(ExprError::ZeroDenominator { offset: 2 }));
        assert!(matches!(
            parse("u^2^3"),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(parse("u^1.5"), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse("(u"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("exp u"),
            Err(ExprError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse(""),
            Err(ExprError::Syntax { offset: 0, .. })
        ));
    }

    #[test]
    fn rational_literals_fold() {
        assert_eq!(parse("1/4").unwrap().as_const(), Some(0.25));
        assert_eq!(parse("3/2*u").unwrap().structure(), "product(1.5, u)");
    }

    #[test]
    fn integrals_and_primes() {
        let e = parse("integral_u(exp(u*v), 0) + u'").unwrap();
        assert!(e.depends_on(Var::U) && e.depends_on(Var::V) && e.depends_on(Var::BaseU));
        let fixed = parse("integral_u(u, 0, 1)").unwrap();
        assert!(!fixed.depends_on(Var::U));
    }
}
