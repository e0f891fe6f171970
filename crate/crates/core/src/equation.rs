//! The equation `φ_uv + U φ_u + V φ_v + W φ = 0`, its factor transforms,
//! normal forms and the characteristic-propagation test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{antiderivative, is_zero_scaled, EvalPoint, Expr, SampleDomain, Var, ZeroTest};

/// Closed rectangle in the `(u, v)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Rect {
    pub fn new(u: [f64; 2], v: [f64; 2]) -> Result<Rect> {
        let r = Rect { u, v };
        r.validate()?;
        Ok(r)
    }

    pub fn unit() -> Rect {
        Rect {
            u: [0.0, 1.0],
            v: [0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |a: [f64; 2]| a[0].is_finite() && a[1].is_finite() && a[1] > a[0];
        if ok(self.u) && ok(self.v) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("rectangle {self:?} has no area")))
        }
    }

    pub fn lower_left(&self) -> EvalPoint {
        EvalPoint::new(self.u[0], self.v[0])
    }

    pub fn contains(&self, p: EvalPoint) -> bool {
        (self.u[0]..=self.u[1]).contains(&p.u) && (self.v[0]..=self.v[1]).contains(&p.v)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        let tol = 1e-12 * (1.0 + self.u[1].abs().max(self.v[1].abs()));
        other.u[0] >= self.u[0] - tol
            && other.u[1] <= self.u[1] + tol
            && other.v[0] >= self.v[0] - tol
            && other.v[1] <= self.v[1] + tol
    }

    /// Shrink each side inward by `frac` of its length.
    pub fn shrunk(&self, frac: f64) -> Rect {
        let du = frac * (self.u[1] - self.u[0]);
        let dv = frac * (self.v[1] - self.v[0]);
        Rect {
            u: [self.u[0] + du, self.u[1] - du],
            v: [self.v[0] + dv, self.v[1] - dv],
        }
    }

    /// Range of `u − v` over the rectangle.
    fn difference_range(&self) -> (f64, f64) {
        (self.u[0] - self.v[1], self.u[1] - self.v[0])
    }
}

/// The line `u = v + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularLine {
    pub offset: f64,
}

pub const DEFAULT_MARGIN: f64 = 0.05;
/// Sampling for classification uses the domain shrunk by this fraction per side.
pub const SAMPLE_SHRINK: f64 = 0.05;

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveEquation {
    #[serde(rename = "U")]
    pub coef_u: Expr,
    #[serde(rename = "V")]
    pub coef_v: Expr,
    #[serde(rename = "W")]
    pub coef_w: Expr,
    pub domain: Rect,
    #[serde(default)]
    pub singular_lines: Vec<SingularLine>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl WaveEquation {
    pub fn new(coef_u: Expr, coef_v: Expr, coef_w: Expr, domain: Rect) -> Result<Self> {
        let eq = WaveEquation {
            coef_u,
            coef_v,
            coef_w,
            domain,
            singular_lines: Vec::new(),
            margin: DEFAULT_MARGIN,
        };
        eq.validate()?;
        Ok(eq)
    }

    pub fn parse(u: &str, v: &str, w: &str, domain: Rect) -> Result<Self> {
        WaveEquation::new(
            crate::expr::parse(u)?,
            crate::expr::parse(v)?,
            crate::expr::parse(w)?,
            domain,
        )
    }

    pub fn with_singular_lines(mut self, offsets: &[f64], margin: f64) -> Result<Self> {
        self.singular_lines = offsets
            .iter()
            .map(|&offset| SingularLine { offset })
            .collect();
        self.margin = margin;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Invalid(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        for (name, c) in [
            ("U", &self.coef_u),
            ("V", &self.coef_v),
            ("W", &self.coef_w),
        ] {
            if c.is_two_point() {
                return Err(Error::Invalid(format!(
                    "coefficient {name} mentions u' or v'"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let eq: WaveEquation = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("equation file: {e}")))?;
        eq.validate()?;
        Ok(eq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("equation serializes")
    }

    /// Lower-left corner of the domain: the lower limit of the factor-transform integrals.
    pub fn base_point(&self) -> EvalPoint {
        self.domain.lower_left()
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.singular_lines.iter().map(|l| l.offset).collect()
    }

    /// Sampling region for zero tests.
    pub fn sample_domain(&self) -> SampleDomain {
        let r = self.domain.shrunk(SAMPLE_SHRINK);
        SampleDomain::rect(r.u, r.v).with_singular_lines(&self.offsets(), self.margin)
    }

    /// First singular line whose margin band meets `rect`.
    pub fn singular_line_meeting(&self, rect: &Rect) -> Option<SingularLine> {
        let (lo, hi) = rect.difference_range();
        self.singular_lines
            .iter()
            .copied()
            .find(|l| l.offset > lo - self.margin && l.offset < hi + self.margin)
    }

    /// Rejects rectangles outside the domain or touching a singular band.
    pub fn check_work_rect(&self, rect: &Rect) -> Result<()> {
        rect.validate()?;
        if !self.domain.contains_rect(rect) {
            return Err(Error::Invalid(format!(
                "rectangle {rect:?} is not inside the domain {:?}",
                self.domain
            )));
        }
        if let Some(l) = self.singular_line_meeting(rect) {
            return Err(Error::SingularPath { offset: l.offset });
        }
        Ok(())
    }

    /// `(U, V, W)` at a point.
    pub fn coefficients_at(&self, p: EvalPoint) -> Result<(f64, f64, f64)> {
        Ok((
            self.coef_u.eval(p)?,
            self.coef_v.eval(p)?,
            self.coef_w.eval(p)?,
        ))
    }

    /// `φ_uv + Uφ_u + Vφ_v + Wφ` for a symbolic `φ`.
    pub fn apply(&self, phi: &Expr) -> Expr {
        let pu = phi.diff(Var::U);
        Expr::sum([
            pu.diff(Var::V),
            Expr::mul(self.coef_u.clone(), pu),
            Expr::mul(self.coef_v.clone(), phi.diff(Var::V)),
            Expr::mul(self.coef_w.clone(), phi.clone()),
        ])
    }

    /// `∂_uU − ∂_vV`
    pub fn integrability_defect(&self) -> Expr {
        Expr::sub(self.coef_u.diff(Var::U), self.coef_v.diff(Var::V))
    }

    /// `∂_uU + UV − W`
    pub fn balance_defect(&self) -> Expr {
        Expr::sum([
            self.coef_u.diff(Var::U),
            Expr::mul(self.coef_u.clone(), self.coef_v.clone()),
            Expr::neg(self.coef_w.clone()),
        ])
    }

    /// Always false: in two dimensions the Green function has an interior term.
    pub fn hp_verdict(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorTransform {
    /// `∫_{base.u}^u V(s, v) ds`
    pub sigma: Expr,
    /// `∫_{base.v}^v U(u, s) ds`
    pub tau: Expr,
    /// Potential with `∂_vΛ = U`, `∂_uΛ = V`; present only when `∂_uU = ∂_vV`.
    pub lambda: Option<Expr>,
    pub base_point: EvalPoint,
}

pub fn factor_transforms(eq: &WaveEquation, base: EvalPoint) -> Result<FactorTransform> {
    factor_transforms_with(eq, base, ZeroTest::default())
}

pub fn factor_transforms_with(
    eq: &WaveEquation,
    base: EvalPoint,
    test: ZeroTest,
) -> Result<FactorTransform> {
    let crossing = eq.singular_line_meeting(&eq.domain);
    for c in [&eq.coef_u, &eq.coef_v] {
        if let (Some(l), false) = (crossing, c.is_literal_zero()) {
            return Err(Error::SingularPath { offset: l.offset });
        }
    }
    let sigma = antiderivative(&eq.coef_v, Var::U, base.u);
    let tau = antiderivative(&eq.coef_u, Var::V, base.v);
    let integrable = is_zero_scaled(
        &eq.integrability_defect(),
        &eq.sample_domain(),
        test.trials,
        test.tol,
    )
    .map_err(|e| Error::from_zero_test(e, "integrability"))?;
    let lambda = integrable.then(|| {
        // τ alone misses a function of u; the corner leg σ(u, v_b) restores ∂_uΛ = V.
        Expr::add(tau.clone(), sigma.substitute(Var::V, base.v))
    });
    Ok(FactorTransform {
        sigma,
        tau,
        lambda,
        base_point: base,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalForm {
    pub j0: Expr,
    pub j1: Expr,
    pub l0: Expr,
    pub l_minus1: Expr,
    pub transforms: FactorTransform,
}

pub fn normal_form(eq: &WaveEquation) -> Result<NormalForm> {
    let ft = factor_transforms(eq, eq.base_point())?;
    Ok(normal_form_from(eq, ft))
}

pub(crate) fn normal_form_from(eq: &WaveEquation, ft: FactorTransform) -> NormalForm {
    let (u, v, w) = (&eq.coef_u, &eq.coef_v, &eq.coef_w);
    let uv = Expr::mul(u.clone(), v.clone());
    let j0 = Expr::exp(Expr::sub(ft.tau.clone(), ft.sigma.clone()));
    let l0 = Expr::exp(Expr::sub(ft.sigma.clone(), ft.tau.clone()));
    let j_source = Expr::sum([v.diff(Var::V), uv.clone(), Expr::neg(w.clone())]);
    let l_source = Expr::sum([u.diff(Var::U), uv, Expr::neg(w.clone())]);
    NormalForm {
        j1: Expr::mul(j_source, j0.clone()),
        l_minus1: Expr::mul(l_source, l0.clone()),
        j0,
        l0,
        transforms: ft,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CppVerdict {
    /// `∂_uU = ∂_vV`
    pub integrability_holds: bool,
    /// `∂_uU + UV − W = 0`
    pub balance_holds: bool,
    pub is_cpp: bool,
    pub lambda: Option<Expr>,
}

pub fn classify_cpp(eq: &WaveEquation) -> Result<CppVerdict> {
    classify_cpp_with(eq, ZeroTest::default())
}

pub fn classify_cpp_with(eq: &WaveEquation, test: ZeroTest) -> Result<CppVerdict> {
    let dom = eq.sample_domain();
    let zero = |e: &Expr, what: &str| {
        is_zero_scaled(e, &dom, test.trials, test.tol)
            .map_err(|err| Error::from_zero_test(err, what))
    };
    let integrability_holds = zero(&eq.integrability_defect(), "integrability")?;
    let balance_holds = zero(&eq.balance_defect(), "balance")?;
    let is_cpp = integrability_holds && balance_holds;
    let lambda = if is_cpp {
        let ft = factor_transforms_with(eq, eq.base_point(), test)?;
        let lambda = ft.lambda.ok_or_else(|| {
            Error::IndeterminateTermination(
                "integrability passed but no potential was built".into(),
            )
        })?;
        check_potential(eq, &lambda, &dom);
        Some(lambda)
    } else {
        None
    };
    Ok(CppVerdict {
        integrability_holds,
        balance_holds,
        is_cpp,
        lambda,
    })
}

fn check_potential(eq: &WaveEquation, lambda: &Expr, dom: &SampleDomain) {
    let du = Expr::sub(lambda.diff(Var::U), eq.coef_v.clone());
    let dv = Expr::sub(lambda.diff(Var::V), eq.coef_u.clone());
    for p in dom.points(16) {
        for (name, e) in [("∂_uΛ − V", &du), ("∂_vΛ − U", &dv)] {
            if let Ok(r) = e.eval(p) {
                if r.abs() > 1e-8 {
                    log::warn!("potential check {name} = {r:e} at ({}, {})", p.u, p.v);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(u: &str, v: &str, w: &str) -> WaveEquation {
        WaveEquation::parse(u, v, w, Rect::new([-1.0, 1.0], [-1.0, 1.0]).unwrap()).unwrap()
    }

    fn close(a: &Expr, b: f64, p: EvalPoint) {
        let x = a.eval(p).unwrap();
        assert!((x - b).abs() < 1e-12, "{a} = {x}, want {b}");
    }

    #[test]
    fn trivial_normal_form() {
        let nf = normal_form(&eq("0", "0", "0")).unwrap();
        assert!(nf.j0.is_literal_one() && nf.l0.is_literal_one());
        assert!(nf.j1.is_literal_zero() && nf.l_minus1.is_literal_zero());
        assert!(nf.transforms.sigma.is_literal_zero() && nf.transforms.tau.is_literal_zero());
    }

    #[test]
    fn klein_gordon_normal_form() {
        let nf = normal_form(&eq("0", "0", "1")).unwrap();
        let p = EvalPoint::new(0.2, 0.3);
        close(&nf.j0, 1.0, p);
        close(&nf.j1, -1.0, p);
        close(&nf.l_minus1, -1.0, p);
    }

    #[test]
    fn potential_for_product() {
        let e = WaveEquation::parse("u", "v", "1 + u*v", Rect::unit()).unwrap();
        let ft = factor_transforms(&e, EvalPoint::new(0.0, 0.0)).unwrap();
        for (u, v) in [(0.3, 0.8), (0.9, 0.1)] {
            let p = EvalPoint::new(u, v);
            close(&ft.sigma, u * v, p);
            close(&ft.tau, u * v, p);
            close(ft.lambda.as_ref().unwrap(), u * v, p);
        }
    }

    #[test]
    fn potential_with_offset_base() {
        // Λ = sin(u)cos(v) from a base away from the origin.
        let e = eq("-sin(u)*sin(v)", "cos(u)*cos(v)", "0");
        let base = EvalPoint::new(-1.0, -1.0);
        let ft = factor_transforms(&e, base).unwrap();
        let lam = ft.lambda.unwrap();
        for p in e.sample_domain().points(10) {
            close(&Expr::sub(lam.diff(Var::U), e.coef_v.clone()), 0.0, p);
            close(&Expr::sub(lam.diff(Var::V), e.coef_u.clone()), 0.0, p);
        }
    }

    #[test]
    fn cpp_verdicts() {
        assert!(classify_cpp(&eq("0", "0", "0")).unwrap().is_cpp);
        let kg = classify_cpp(&eq("0", "0", "1")).unwrap();
        assert!(kg.integrability_holds && !kg.balance_holds && !kg.is_cpp && kg.lambda.is_none());
        let nonint = classify_cpp(&eq("u", "0", "0")).unwrap();
        assert!(!nonint.integrability_holds);
        assert!(!eq("0", "0", "0").hp_verdict());
    }

    #[test]
    fn singular_paths() {
        let m = WaveEquation::parse("1/(v-u)", "0", "0", Rect::unit())
            .unwrap()
            .with_singular_lines(&[0.0], 0.05)
            .unwrap();
        assert_eq!(
            factor_transforms(&m, m.base_point()),
            Err(Error::SingularPath { offset: 0.0 })
        );
        let quiet = WaveEquation::parse("0", "0", "2/(v-u)^2", Rect::unit())
            .unwrap()
            .with_singular_lines(&[0.0], 0.05)
            .unwrap();
        assert!(factor_transforms(&quiet, quiet.base_point()).is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let e = eq("u", "v", "1 + u*v");
        let back = WaveEquation::from_json(&e.to_json()).unwrap();
        assert_eq!(e, back);
        let text = r#"{"U":"0","V":"0","W":"2/(v-u)^2","domain":{"u":[0,1],"v":[0,1]},"singular_lines":[{"offset":0}]}"#;
        let m = WaveEquation::from_json(text).unwrap();
        assert_eq!(m.singular_lines, vec![SingularLine { offset: 0.0 }]);
        assert_eq!(m.margin, DEFAULT_MARGIN);
        assert!(WaveEquation::from_json(
            r#"{"U":"x","V":"0","W":"0","domain":{"u":[0,1],"v":[0,1]}}"#
        )
        .is_err());
    }
}
