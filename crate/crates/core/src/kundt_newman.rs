//! Kundt–Newman substitution sequences, exact progressing-wave solutions
//! and their amplitude equations.

use serde::Serialize;

use crate::equation::{classify_cpp, normal_form, FactorTransform, WaveEquation};
use crate::error::{Error, Result};
use crate::expr::{is_zero_scaled, EvalError, EvalPoint, Expr, SampleDomain, Var, ZeroTest};
use crate::residual::{NamedResidual, ResidualStats};
use crate::waveform::WaveformSpec;

pub const DEFAULT_K_MAX: usize = 8;
/// Sample points for residual checks.
pub const RESIDUAL_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum TerminationStatus {
    DoubleTerminating,
    NonTerminating {
        k_max: usize,
    },
    /// A chain element changes sign inside a connected part of the domain.
    Indeterminate {
        chain: String,
        index: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubstitutionSequence {
    /// `j_0, j_1, …`, ending with the first zero when the chain terminates.
    pub j_chain: Vec<Expr>,
    /// `l_0, l_{-1}, …`, ending with the first zero when the chain terminates.
    pub l_chain: Vec<Expr>,
    /// Largest `k` with `j_k ≠ 0` when `j_{k+1} = 0`.
    pub k1: Option<usize>,
    /// Smallest `k` with `l_k ≠ 0` when `l_{k-1} = 0`; never positive.
    pub k2: Option<i64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub status: TerminationStatus,
    pub k_max: usize,
    /// `j_k·l_k = 1` checked across the two chains.
    pub reciprocity: Vec<NamedResidual>,
    #[serde(skip)]
    pub transforms: FactorTransform,
}

impl SubstitutionSequence {
    pub fn is_double_terminating(&self) -> bool {
        self.status == TerminationStatus::DoubleTerminating
    }
}

enum ChainEnd {
    Zero(usize),
    Exhausted,
    SignChange(usize),
}

/// Connected piece of the sample domain: the number of singular lines
/// `u = v + c` with `u − v > c`.
fn piece(p: EvalPoint, offsets: &[f64]) -> usize {
    offsets.iter().filter(|&&c| p.u - p.v > c).count()
}

fn changes_sign(e: &Expr, points: &[EvalPoint], offsets: &[f64]) -> Result<bool> {
    let mut seen: Vec<(usize, f64)> = Vec::new();
    for &p in points {
        let x = match e.eval(p) {
            Ok(x) => x,
            Err(EvalError::SingularPoint { .. }) => continue,
            Err(other) => return Err(other.into()),
        };
        if x == 0.0 {
            continue;
        }
        let k = piece(p, offsets);
        match seen.iter().find(|(q, _)| *q == k) {
            Some((_, s)) if s.signum() != x.signum() => return Ok(true),
            Some(_) => {}
            None => seen.push((k, x)),
        }
    }
    Ok(false)
}

/// `x_{k+1} = x_k·(x_k/x_{k−1} − ∂_a∂_b ln|x_k|)` from `(first, second)`.
fn build_chain(
    first: Expr,
    second: Expr,
    outer: Var,
    inner: Var,
    k_max: usize,
    eq: &WaveEquation,
    test: ZeroTest,
    name: &str,
) -> Result<(Vec<Expr>, ChainEnd)> {
    let dom: SampleDomain = eq.sample_domain();
    let points = dom.points(test.trials);
    let offsets = eq.offsets();
    let is_zero = |e: &Expr, k: usize| {
        is_zero_scaled(e, &dom, test.trials, test.tol)
            .map_err(|err| Error::from_zero_test(err, &format!("{name}_{k}")))
    };
    let mut chain = vec![first];
    let mut next = second;
    for k in 1..=k_max {
        if is_zero(&next, k)? {
            chain.push(Expr::zero());
            return Ok((chain, ChainEnd::Zero(k - 1)));
        }
        chain.push(next);
        let cur = &chain[k];
        if changes_sign(cur, &points, &offsets)? {
            return Ok((chain, ChainEnd::SignChange(k)));
        }
        if k == k_max {
            break;
        }
        let prev = &chain[k - 1];
        let curvature = cur.dlog(inner).diff(outer);
        next = Expr::mul(
            cur.clone(),
            Expr::sub(Expr::div(cur.clone(), prev.clone()), curvature),
        );
    }
    Ok((chain, ChainEnd::Exhausted))
}

pub fn build_sequence(eq: &WaveEquation, k_max: usize) -> Result<SubstitutionSequence> {
    build_sequence_with(eq, k_max, ZeroTest::default())
}

pub fn build_sequence_with(
    eq: &WaveEquation,
    k_max: usize,
    test: ZeroTest,
) -> Result<SubstitutionSequence> {
    if k_max == 0 {
        return Err(Error::Invalid("k_max must be at least 1".into()));
    }
    let nf = normal_form(eq)?;
    let (j, l) = rayon::join(
        || {
            build_chain(
                nf.j0.clone(),
                nf.j1.clone(),
                Var::V,
                Var::U,
                k_max,
                eq,
                test,
                "j",
            )
        },
        || {
            build_chain(
                nf.l0.clone(),
                nf.l_minus1.clone(),
                Var::U,
                Var::V,
                k_max,
                eq,
                test,
                "l",
            )
        },
    );
    let (j_chain, j_end) = j?;
    let (l_chain, l_end) = l?;
    let reciprocity = reciprocity_residuals(eq, &j_chain, &l_chain)?;

    let k1 = match j_end {
        ChainEnd::Zero(k) => Some(k),
        _ => None,
    };
    let k2 = match l_end {
        ChainEnd::Zero(k) => Some(-(k as i64)),
        _ => None,
    };
    let status = match (&j_end, &l_end) {
        (ChainEnd::SignChange(k), _) => TerminationStatus::Indeterminate {
            chain: "j".into(),
            index: *k as i64,
        },
        (_, ChainEnd::SignChange(k)) => TerminationStatus::Indeterminate {
            chain: "l".into(),
            index: -(*k as i64),
        },
        (ChainEnd::Zero(_), ChainEnd::Zero(_)) => TerminationStatus::DoubleTerminating,
        _ => TerminationStatus::NonTerminating { k_max },
    };
    let n = match (k1, k2) {
        (Some(a), Some(b)) => Some(a.max((-b) as usize)),
        _ => None,
    };
    Ok(SubstitutionSequence {
        j_chain,
        l_chain,
        k1,
        k2,
        n,
        status,
        k_max,
        reciprocity,
        transforms: nf.transforms,
    })
}

/// `j_0·l_0 − 1`, and `j_{−1}·l_{−1} = 1`, `j_1·l_1 = 1` with the missing
/// members continued one step past the start of each chain.
fn reciprocity_residuals(eq: &WaveEquation, j: &[Expr], l: &[Expr]) -> Result<Vec<NamedResidual>> {
    let (j0, j1, l0, lm1) = (&j[0], &j[1], &l[0], &l[1]);
    let at_zero = Expr::sub(Expr::mul(j0.clone(), l0.clone()), Expr::one());
    // j_{−1} = j_0 / (j_1/j_0 + ∂²ln|j_0|), so j_{−1}·l_{−1} = 1 reads:
    let at_minus_one = Expr::sum([
        Expr::mul(j0.clone(), lm1.clone()),
        Expr::neg(Expr::div(j1.clone(), j0.clone())),
        Expr::neg(j0.dlog(Var::U).diff(Var::V)),
    ]);
    let at_plus_one = Expr::sum([
        Expr::mul(l0.clone(), j1.clone()),
        Expr::neg(Expr::div(lm1.clone(), l0.clone())),
        Expr::neg(l0.dlog(Var::V).diff(Var::U)),
    ]);
    let pts = eq.sample_domain().points(RESIDUAL_POINTS);
    [
        ("product_at_zero", at_zero),
        ("product_at_minus_one", at_minus_one),
        ("product_at_plus_one", at_plus_one),
    ]
    .into_iter()
    .map(|(name, e)| residual_of(name, &e, &pts))
    .collect()
}

fn residual_of(name: &str, e: &Expr, pts: &[EvalPoint]) -> Result<NamedResidual> {
    let mut vals = Vec::with_capacity(pts.len());
    for &p in pts {
        match e.eval(p) {
            Ok(x) => vals.push(x),
            Err(EvalError::SingularPoint { .. }) => {}
            Err(other) => return Err(other.into()),
        }
    }
    Ok(NamedResidual {
        name: name.to_string(),
        stats: ResidualStats::from_values(vals),
    })
}

/// Coefficients of `R^{(i)}(u)` and `S^{(i)}(v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Amplitudes {
    pub f: Vec<Expr>,
    pub g: Vec<Expr>,
}

impl Amplitudes {
    pub fn order(&self) -> usize {
        self.f.len().max(self.g.len()).saturating_sub(1)
    }

    fn padded(mut self) -> Self {
        let n = self.f.len().max(self.g.len());
        self.f.resize(n, Expr::zero());
        self.g.resize(n, Expr::zero());
        self
    }

    /// Coefficients of `R^{(k)}` and `S^{(k)}` in `L[φ]`, `k = 0..=N+1`.
    pub fn operator_coefficients(&self, eq: &WaveEquation) -> (Vec<Expr>, Vec<Expr>) {
        let (cu, cv, cw) = (&eq.coef_u, &eq.coef_v, &eq.coef_w);
        let n = self.order();
        let at = |xs: &[Expr], k: usize| xs.get(k).cloned().unwrap_or_else(Expr::zero);
        let body = |a: &Expr| {
            let au = a.diff(Var::U);
            Expr::sum([
                au.diff(Var::V),
                Expr::mul(cu.clone(), au),
                Expr::mul(cv.clone(), a.diff(Var::V)),
                Expr::mul(cw.clone(), a.clone()),
            ])
        };
        let mut fr = Vec::new();
        let mut gs = Vec::new();
        for k in 0..=n + 1 {
            let (fk, gk) = (at(&self.f, k), at(&self.g, k));
            let mut f_terms = vec![body(&fk)];
            let mut g_terms = vec![body(&gk)];
            if k > 0 {
                let (fp, gp) = (at(&self.f, k - 1), at(&self.g, k - 1));
                f_terms.push(fp.diff(Var::V));
                f_terms.push(Expr::mul(cu.clone(), fp));
                g_terms.push(gp.diff(Var::U));
                g_terms.push(Expr::mul(cv.clone(), gp));
            }
            fr.push(Expr::sum(f_terms));
            gs.push(Expr::sum(g_terms));
        }
        (fr, gs)
    }
}

/// `φ = Σ f_i R^{(i)}(u) + Σ g_i S^{(i)}(v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressingWave {
    pub order: usize,
    pub amplitudes: Amplitudes,
    pub r: WaveformSpec,
    pub s: WaveformSpec,
}

impl ProgressingWave {
    pub fn new(amplitudes: Amplitudes, r: WaveformSpec, s: WaveformSpec) -> Self {
        let amplitudes = amplitudes.padded();
        ProgressingWave {
            order: amplitudes.order(),
            amplitudes,
            r,
            s,
        }
    }

    pub fn evaluate(&self, p: EvalPoint) -> Result<f64> {
        let mut sum = 0.0;
        for (i, (f, g)) in self.amplitudes.f.iter().zip(&self.amplitudes.g).enumerate() {
            if !f.is_literal_zero() {
                sum += f.eval(p)? * self.r.derivative(p.u, i);
            }
            if !g.is_literal_zero() {
                sum += g.eval(p)? * self.s.derivative(p.v, i);
            }
        }
        Ok(sum)
    }

    /// Symbolic field; only for polynomial waveforms.
    pub fn to_expr(&self) -> Option<Expr> {
        let mut r = self.r.as_expr(Var::U)?;
        let mut s = self.s.as_expr(Var::V)?;
        let mut terms = Vec::new();
        for (f, g) in self.amplitudes.f.iter().zip(&self.amplitudes.g) {
            terms.push(Expr::mul(f.clone(), r.clone()));
            terms.push(Expr::mul(g.clone(), s.clone()));
            r = r.diff(Var::U);
            s = s.diff(Var::V);
        }
        Some(Expr::sum(terms))
    }

    /// Coefficient residuals of `L[φ]` at `points`, one per derivative order.
    pub fn operator_residuals(
        &self,
        eq: &WaveEquation,
        points: &[EvalPoint],
    ) -> Result<Vec<NamedResidual>> {
        let (fr, gs) = self.amplitudes.operator_coefficients(eq);
        let mut out = Vec::new();
        for (k, e) in fr.iter().enumerate() {
            out.push(residual_of(
                &format!("coefficient_of_r_derivative_{k}"),
                e,
                points,
            )?);
        }
        for (k, e) in gs.iter().enumerate() {
            out.push(residual_of(
                &format!("coefficient_of_s_derivative_{k}"),
                e,
                points,
            )?);
        }
        Ok(out)
    }
}

/// Nested derivative `(1/x_1)∂((x_1/x_2)∂(…(x_top·W)…))` expanded into
/// coefficients of `W, W', …`.
fn nested_amplitudes(chain: &[Expr], top: usize, var: Var) -> Vec<Expr> {
    let mut a = vec![Expr::one()];
    for k in (0..top).rev() {
        let weight = chain[k + 1].dlog(var);
        let mut next = Vec::with_capacity(a.len() + 1);
        for i in 0..=a.len() {
            let mut terms = Vec::new();
            if let Some(ai) = a.get(i) {
                terms.push(ai.diff(var));
                terms.push(Expr::mul(ai.clone(), weight.clone()));
            }
            if i > 0 {
                terms.push(a[i - 1].clone());
            }
            next.push(Expr::sum(terms));
        }
        a = next;
    }
    a
}

/// Amplitudes of the general solution of a double-terminating sequence.
pub fn exact_amplitudes(seq: &SubstitutionSequence) -> Result<Amplitudes> {
    let (k1, k2) = match (seq.k1, seq.k2, &seq.status) {
        (Some(a), Some(b), TerminationStatus::DoubleTerminating) => (a, (-b) as usize),
        _ => return Err(Error::NotTerminating),
    };
    let ft = &seq.transforms;
    let g_weight = Expr::exp(Expr::neg(ft.sigma.clone()));
    let f_weight = Expr::exp(Expr::neg(ft.tau.clone()));
    let (g_raw, f_raw) = rayon::join(
        || nested_amplitudes(&seq.j_chain, k1, Var::V),
        || nested_amplitudes(&seq.l_chain, k2, Var::U),
    );
    Ok(Amplitudes {
        f: f_raw
            .into_iter()
            .map(|c| Expr::mul(f_weight.clone(), c))
            .collect(),
        g: g_raw
            .into_iter()
            .map(|c| Expr::mul(g_weight.clone(), c))
            .collect(),
    }
    .padded())
}

pub fn exact_solution(
    seq: &SubstitutionSequence,
    r: WaveformSpec,
    s: WaveformSpec,
) -> Result<ProgressingWave> {
    Ok(ProgressingWave::new(exact_amplitudes(seq)?, r, s))
}

/// `φ = e^{−Λ}(r(u) + s(v))` for an equation with the characteristic
/// propagation property.
pub fn build_pw0(eq: &WaveEquation, r: WaveformSpec, s: WaveformSpec) -> Result<ProgressingWave> {
    let verdict = classify_cpp(eq)?;
    let lambda = match verdict.lambda {
        Some(l) if verdict.is_cpp => l,
        _ => return Err(Error::NotCpp),
    };
    let weight = Expr::exp(Expr::neg(lambda));
    Ok(ProgressingWave::new(
        Amplitudes {
            f: vec![weight.clone()],
            g: vec![weight],
        },
        r,
        s,
    ))
}

/// Residuals of the amplitude equations at `points`.
///
/// Order 0: `f_0` and `g_0` solve the equation, `∂_v f_0 + U f_0 = 0`,
/// `∂_u g_0 + V g_0 = 0`. Higher order: the system in the v-normal form
/// `∂_v(j_0 ∂_u ψ) − j_1 ψ = 0` for `ψ = e^σ φ`, collected by derivative
/// order of `R` and `S`.
pub fn verify_amplitude_equations(
    amps: &Amplitudes,
    eq: &WaveEquation,
    points: &[EvalPoint],
) -> Result<Vec<NamedResidual>> {
    let n = amps.order();
    let (cu, cv) = (&eq.coef_u, &eq.coef_v);
    let mut named: Vec<(String, Expr)> = Vec::new();
    if n == 0 {
        let (f0, g0) = (&amps.f[0], &amps.g[0]);
        named.push(("f0_solves_equation".into(), eq.apply(f0)));
        named.push(("g0_solves_equation".into(), eq.apply(g0)));
        named.push((
            "f0_transport_in_v".into(),
            Expr::add(f0.diff(Var::V), Expr::mul(cu.clone(), f0.clone())),
        ));
        named.push((
            "g0_transport_in_u".into(),
            Expr::add(g0.diff(Var::U), Expr::mul(cv.clone(), g0.clone())),
        ));
    } else {
        let nf = normal_form(eq)?;
        let (j0, j1) = (&nf.j0, &nf.j1);
        let lift = Expr::exp(nf.transforms.sigma.clone());
        let f: Vec<Expr> = amps
            .f
            .iter()
            .map(|a| Expr::mul(lift.clone(), a.clone()))
            .collect();
        let g: Vec<Expr> = amps
            .g
            .iter()
            .map(|a| Expr::mul(lift.clone(), a.clone()))
            .collect();
        let core = |a: &Expr| {
            Expr::sub(
                Expr::mul(j0.clone(), a.diff(Var::U)).diff(Var::V),
                Expr::mul(j1.clone(), a.clone()),
            )
        };
        for i in 0..=n {
            let mut fe = core(&f[i]);
            let mut ge = core(&g[i]);
            if i > 0 {
                fe = Expr::add(fe, Expr::mul(j0.clone(), f[i - 1].clone()).diff(Var::V));
                ge = Expr::add(ge, Expr::mul(j0.clone(), g[i - 1].diff(Var::U)));
            }
            named.push((format!("f{i}_normal_form"), fe));
            named.push((format!("g{i}_normal_form"), ge));
        }
        named.push((
            format!("f{n}_top_order"),
            Expr::mul(j0.clone(), f[n].clone()).diff(Var::V),
        ));
        named.push((format!("g{n}_top_order"), g[n].diff(Var::U)));
    }
    named
        .iter()
        .map(|(name, e)| residual_of(name, e, points))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::Rect;

    fn eq(u: &str, v: &str, w: &str) -> WaveEquation {
        WaveEquation::parse(u, v, w, Rect::new([-1.0, 1.0], [-1.0, 1.0]).unwrap()).unwrap()
    }

    fn multipole(l: u32) -> WaveEquation {
        let w = format!("{}/(v-u)^2", l * (l + 1));
        WaveEquation::parse("0", "0", &w, Rect::unit())
            .unwrap()
            .with_singular_lines(&[0.0], 0.05)
            .unwrap()
    }

    fn max_of(rs: &[NamedResidual]) -> f64 {
        rs.iter().map(|r| r.stats.max).fold(0.0, f64::max)
    }

    #[test]
    fn trivial_terminates_at_once() {
        let s = build_sequence(&eq("0", "0", "0"), 8).unwrap();
        assert_eq!((s.k1, s.k2, s.n), (Some(0), Some(0), Some(0)));
        assert!(s.is_double_terminating());
        let pw = exact_solution(
            &s,
            WaveformSpec::polynomial(&[0.0, 0.0, 1.0]),
            WaveformSpec::polynomial(&[0.0, 1.0]),
        )
        .unwrap();
        let p = EvalPoint::new(0.3, 0.7);
        assert!((pw.evaluate(p).unwrap() - (0.09 + 0.7)).abs() < 1e-15);
    }

    #[test]
    fn klein_gordon_does_not_terminate() {
        let s = build_sequence(&eq("0", "0", "1"), 8).unwrap();
        assert_eq!(s.status, TerminationStatus::NonTerminating { k_max: 8 });
        assert_eq!(s.j_chain.len(), 9);
        let p = EvalPoint::new(0.1, 0.2);
        for (k, j) in s.j_chain.iter().enumerate() {
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(j.eval(p).unwrap(), want);
        }
        assert_eq!(exact_amplitudes(&s), Err(Error::NotTerminating));
    }

    #[test]
    fn multipole_one_amplitudes() {
        let s = build_sequence(&multipole(1), 8).unwrap();
        assert_eq!((s.k1, s.k2, s.n), (Some(1), Some(-1), Some(1)));
        let a = exact_amplitudes(&s).unwrap();
        for p in multipole(1).sample_domain().points(32) {
            let r = p.v - p.u;
            assert!((a.f[0].eval(p).unwrap() - 2.0 / r).abs() < 1e-12);
            assert!((a.f[1].eval(p).unwrap() - 1.0).abs() < 1e-12);
            assert!((a.g[0].eval(p).unwrap() + 2.0 / r).abs() < 1e-12);
            assert!((a.g[1].eval(p).unwrap() - 1.0).abs() < 1e-12);
        }
        let pts = multipole(1).sample_domain().points(RESIDUAL_POINTS);
        assert!(max_of(&verify_amplitude_equations(&a, &multipole(1), &pts).unwrap()) < 1e-10);
    }

    #[test]
    fn reciprocity_holds() {
        for e in [eq("u", "v", "1 + u*v"), eq("v", "u*u", "u"), multipole(2)] {
            let s = build_sequence(&e, 3).unwrap();
            assert!(max_of(&s.reciprocity) < 1e-9, "{:?}", s.reciprocity);
        }
    }

    #[test]
    fn exact_waves_solve_the_equation() {
        let r = WaveformSpec::polynomial(&[1.0, -1.0, 0.5, 2.0, 0.0, 1.0]);
        let sv = WaveformSpec::polynomial(&[0.0, 3.0, 0.0, -1.0, 1.0]);
        for e in [
            multipole(2),
            multipole(3),
            eq("v", "u", "u*v"),
            eq("u", "v", "1 + u*v"),
        ] {
            let s = build_sequence(&e, 8).unwrap();
            let pw = exact_solution(&s, r.clone(), sv.clone()).unwrap();
            let phi = pw.to_expr().unwrap();
            let residual = e.apply(&phi);
            let pts = e.sample_domain().points(40);
            for p in &pts {
                let (val, m) = residual.eval_with_magnitude(*p).unwrap();
                assert!(val.abs() <= 1e-8 * m.max(1.0), "{val} at {p:?}");
                assert!(
                    (phi.eval(*p).unwrap() - pw.evaluate(*p).unwrap()).abs() < 1e-9 * m.max(1.0)
                );
            }
            let (fr, gs) = pw.amplitudes.operator_coefficients(&e);
            for (c, p) in fr
                .iter()
                .chain(&gs)
                .flat_map(|c| pts.iter().map(move |p| (c, p)))
            {
                let (val, m) = c.eval_with_magnitude(*p).unwrap();
                assert!(val.abs() <= 1e-10 * m.max(1.0), "{val} at {p:?}");
            }
        }
    }

    #[test]
    fn sign_change_is_indeterminate() {
        let s = build_sequence(&eq("0", "0", "u - v"), 8).unwrap();
        assert!(matches!(s.status, TerminationStatus::Indeterminate { .. }));
        assert_eq!(s.n, None);
    }

    #[test]
    fn pw0_for_product_potential() {
        let e = eq("u", "v", "1 + u*v");
        let pw = build_pw0(
            &e,
            WaveformSpec::polynomial(&[0.0, 1.0]),
            WaveformSpec::zero(),
        )
        .unwrap();
        let p = EvalPoint::new(0.4, -0.3);
        // Λ is fixed up to a constant by the base point (−1, −1).
        let lam = |q: EvalPoint| q.u * q.v - 1.0;
        assert!((pw.evaluate(p).unwrap() - p.u * (-lam(p)).exp()).abs() < 1e-12);
        let pts = e.sample_domain().points(RESIDUAL_POINTS);
        let rs = verify_amplitude_equations(&pw.amplitudes, &e, &pts).unwrap();
        assert!(max_of(&rs) < 1e-12, "{rs:?}");
        assert_eq!(
            build_pw0(
                &eq("0", "0", "1"),
                WaveformSpec::zero(),
                WaveformSpec::zero()
            ),
            Err(Error::NotCpp)
        );
    }
}
