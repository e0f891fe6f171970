//! Canonical equations with their known closed forms.

use std::sync::OnceLock;

use serde::Serialize;

use crate::equation::{Rect, WaveEquation};
use crate::error::{Error, Result};
use crate::expr::{EvalPoint, Expr, SampleDomain, Var};
use crate::kundt_newman::{Amplitudes, RESIDUAL_POINTS};
use crate::residual::{NamedResidual, ResidualStats};
use crate::riemann::adjoint_operator;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownForms {
    /// `Δ(u, v; u', v')`
    pub riemann: Option<Expr>,
    /// Amplitudes of the general solution.
    pub general_solution: Option<Amplitudes>,
    pub pw_order: Option<usize>,
    pub cpp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegistryEntry {
    pub name: String,
    pub eq: WaveEquation,
    pub known: KnownForms,
    /// Default rectangle for solver runs, inside the domain and clear of
    /// singular bands. Characteristic data live on its lower and left edges.
    pub work_rect: Rect,
}

/// Relative tolerance for closed-form residuals.
const CLOSED_FORM_TOL: f64 = 1e-8;

fn square(a: f64, b: f64) -> Rect {
    Rect {
        u: [a, b],
        v: [a, b],
    }
}

pub fn trivial() -> RegistryEntry {
    RegistryEntry {
        name: "trivial".into(),
        eq: WaveEquation::new(Expr::zero(), Expr::zero(), Expr::zero(), square(-2.0, 2.0))
            .expect("valid"),
        known: KnownForms {
            riemann: Some(Expr::one()),
            general_solution: Some(Amplitudes {
                f: vec![Expr::one()],
                g: vec![Expr::one()],
            }),
            pw_order: Some(0),
            cpp: true,
        },
        work_rect: Rect::unit(),
    }
}

/// `φ_uv + μ²φ = 0`.
pub fn klein_gordon(mu: f64) -> RegistryEntry {
    RegistryEntry {
        name: format!("klein_gordon_{mu}"),
        eq: WaveEquation::new(
            Expr::zero(),
            Expr::zero(),
            Expr::constant(mu * mu),
            square(-2.0, 2.0),
        )
        .expect("valid"),
        known: KnownForms {
            riemann: None,
            general_solution: None,
            pw_order: None,
            cpp: mu == 0.0,
        },
        work_rect: Rect::unit(),
    }
}

fn distance() -> Expr {
    Expr::sub(Expr::v(), Expr::u())
}

/// `W = l(l+1)/(v−u)²` on the unit square, singular along `u = v`.
pub fn multipole(l: u32) -> RegistryEntry {
    let c = (l * (l + 1)) as f64;
    let w = Expr::scale(c, Expr::powi(distance(), -2));
    let eq = WaveEquation::new(Expr::zero(), Expr::zero(), w, Rect::unit())
        .and_then(|e| e.with_singular_lines(&[0.0], 0.05))
        .expect("valid");
    RegistryEntry {
        name: format!("multipole_{l}"),
        eq,
        known: KnownForms {
            riemann: Some(legendre(l, multipole_argument())),
            general_solution: Some(multipole_amplitudes(l)),
            pw_order: Some(l as usize),
            cpp: l == 0,
        },
        work_rect: Rect {
            u: [0.5, 1.0],
            v: [0.0, 0.4],
        },
    }
}

/// `f_{l−k} = (l+k)!/(k!(l−k)!)·(v−u)^{−k}`, `g_{l−k} = (−1)^k f_{l−k}`.
pub fn multipole_amplitudes(l: u32) -> Amplitudes {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut f = vec![Expr::zero(); l as usize + 1];
    let mut g = vec![Expr::zero(); l as usize + 1];
    for k in 0..=l {
        let c = fact(l + k) / (fact(k) * fact(l - k));
        let term = Expr::scale(c, Expr::powi(distance(), -(k as i32)));
        let i = (l - k) as usize;
        g[i] = if k % 2 == 0 {
            term.clone()
        } else {
            Expr::neg(term.clone())
        };
        f[i] = term;
    }
    Amplitudes { f, g }
}

/// `1 − 2(u−u')(v−v')/((v−u)(v'−u'))`
fn multipole_argument() -> Expr {
    let du = Expr::sub(Expr::u(), Expr::var(Var::BaseU));
    let dv = Expr::sub(Expr::v(), Expr::var(Var::BaseV));
    let r = distance();
    let r_base = r.to_base_point();
    Expr::sub(
        Expr::one(),
        Expr::div(Expr::scale(2.0, Expr::mul(du, dv)), Expr::mul(r, r_base)),
    )
}

/// Legendre polynomial `P_l(z)` by the three-term recurrence.
fn legendre(l: u32, z: Expr) -> Expr {
    let (mut prev, mut cur) = (Expr::one(), z.clone());
    if l == 0 {
        return prev;
    }
    for n in 1..l {
        let n = n as f64;
        let next = Expr::sub(
            Expr::scale(
                (2.0 * n + 1.0) / (n + 1.0),
                Expr::mul(z.clone(), cur.clone()),
            ),
            Expr::scale(n / (n + 1.0), prev),
        );
        prev = cur;
        cur = next;
    }
    cur
}

/// `U = ∂_vΛ`, `V = ∂_uΛ`, `W = ∂_u∂_vΛ + ∂_uΛ·∂_vΛ`.
pub fn lambda_family(
    name: &str,
    lambda: Expr,
    domain: Rect,
    work_rect: Rect,
) -> Result<RegistryEntry> {
    let lu = lambda.diff(Var::U);
    let lv = lambda.diff(Var::V);
    let w = Expr::add(lu.diff(Var::V), Expr::mul(lu.clone(), lv.clone()));
    let eq = WaveEquation::new(lv, lu, w, domain)?;
    let weight = Expr::exp(Expr::neg(lambda.clone()));
    Ok(RegistryEntry {
        name: name.into(),
        eq,
        known: KnownForms {
            riemann: Some(Expr::exp(Expr::sub(lambda.clone(), lambda.to_base_point()))),
            general_solution: Some(Amplitudes {
                f: vec![weight.clone()],
                g: vec![weight],
            }),
            pw_order: Some(0),
            cpp: true,
        },
        work_rect,
    })
}

fn build() -> Vec<RegistryEntry> {
    let mut out = vec![trivial(), klein_gordon(1.0)];
    out.extend((0..=4).map(multipole));
    let uv = Expr::mul(Expr::u(), Expr::v());
    let sincos = Expr::mul(Expr::sin(Expr::u()), Expr::cos(Expr::v()));
    for (name, lam) in [("lambda_uv", uv), ("lambda_sincos", sincos)] {
        out.push(lambda_family(name, lam, square(-2.0, 2.0), Rect::unit()).expect("valid"));
    }
    for e in &out {
        let rs = e.verify().expect("closed forms evaluate");
        assert!(
            rs.is_empty(),
            "{}: closed form fails its residual check: {rs:?}",
            e.name
        );
    }
    out
}

/// All entries. Closed forms are checked once, on first use.
pub fn registry() -> &'static [RegistryEntry] {
    static REGISTRY: OnceLock<Vec<RegistryEntry>> = OnceLock::new();
    REGISTRY.get_or_init(build)
}

pub fn lookup(name: &str) -> Option<&'static RegistryEntry> {
    let name = name.strip_prefix("registry:").unwrap_or(name);
    registry().iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    registry().iter().map(|e| e.name.as_str()).collect()
}

/// The residual over `env` if `|val| > tol·max(M, 1)` anywhere.
fn scaled_residual(
    name: &str,
    e: &Expr,
    env: &[[Option<f64>; 4]],
) -> Result<Option<NamedResidual>> {
    let mut vals = Vec::with_capacity(env.len());
    let mut bad = false;
    for p in env {
        let (val, m) = e.eval_env(*p)?;
        bad |= val.abs() > CLOSED_FORM_TOL * m.max(1.0);
        vals.push(val);
    }
    Ok(bad.then(|| NamedResidual {
        name: name.into(),
        stats: ResidualStats::from_values(vals),
    }))
}

impl RegistryEntry {
    pub fn sample_domain(&self) -> SampleDomain {
        self.eq.sample_domain()
    }

    /// Residual checks of the closed forms. Returns the failing ones.
    pub fn verify(&self) -> Result<Vec<NamedResidual>> {
        let pts = self.sample_domain().points(RESIDUAL_POINTS);
        let single: Vec<[Option<f64>; 4]> = pts
            .iter()
            .map(|p| [Some(p.u), Some(p.v), None, None])
            .collect();
        let mut failures = Vec::new();
        if let Some(delta) = &self.known.riemann {
            // Pair each field point with a later sample point as the base.
            let pairs: Vec<[Option<f64>; 4]> = pts
                .iter()
                .zip(pts.iter().rev())
                .filter(|(p, b)| {
                    self.eq
                        .singular_line_meeting(&pair_rect(**p, **b))
                        .is_none()
                })
                .map(|(p, b)| [Some(p.u), Some(p.v), Some(b.u), Some(b.v)])
                .collect();
            failures.extend(scaled_residual(
                "riemann_adjoint",
                &adjoint_operator(&self.eq, delta),
                &pairs,
            )?);
            let diag: Vec<[Option<f64>; 4]> = pts
                .iter()
                .map(|p| [Some(p.u), Some(p.v), Some(p.u), Some(p.v)])
                .collect();
            failures.extend(scaled_residual(
                "riemann_at_coincidence",
                &Expr::sub(delta.clone(), Expr::one()),
                &diag,
            )?);
        }
        if let Some(amps) = &self.known.general_solution {
            if self.known.pw_order != Some(amps.order()) {
                return Err(Error::Invalid(format!(
                    "{}: amplitudes have order {}, entry says {:?}",
                    self.name,
                    amps.order(),
                    self.known.pw_order
                )));
            }
            let (fr, gs) = amps.operator_coefficients(&self.eq);
            for (k, c) in fr.iter().enumerate() {
                failures.extend(scaled_residual(
                    &format!("coefficient_of_r_derivative_{k}"),
                    c,
                    &single,
                )?);
            }
            for (k, c) in gs.iter().enumerate() {
                failures.extend(scaled_residual(
                    &format!("coefficient_of_s_derivative_{k}"),
                    c,
                    &single,
                )?);
            }
        }
        Ok(failures)
    }
}

fn pair_rect(p: EvalPoint, b: EvalPoint) -> Rect {
    Rect {
        u: [p.u.min(b.u), p.u.max(b.u)],
        v: [p.v.min(b.v), p.v.max(b.v)],
    }
}

/// `φ = (2/u0²)·uv/(v−u)·[θ(u−u0) + c] + δ(u−u0)`: the multipole `l = 1`
/// field of a pulse `R(u) = (u²/u0²)·[θ(u−u0) + c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSolution {
    pub u0: f64,
    pub c: f64,
    /// Weight of the `δ(u − u0)` term, which is never sampled.
    pub delta_weight: f64,
}

pub fn multipole_l1_delta_solution(u0: f64, c: f64) -> Result<DeltaSolution> {
    if !(u0 > 0.0 && u0.is_finite() && c.is_finite()) {
        return Err(Error::Invalid(format!(
            "need u0 > 0 and finite c, got ({u0}, {c})"
        )));
    }
    Ok(DeltaSolution {
        u0,
        c,
        delta_weight: 1.0,
    })
}

impl DeltaSolution {
    /// Smooth part at `p`; the step is taken as 1 on `u > u0`, 0 on `u < u0`
    /// and ½ on the line.
    pub fn smooth_part(&self, p: EvalPoint) -> f64 {
        let step = if p.u > self.u0 {
            1.0
        } else if p.u < self.u0 {
            0.0
        } else {
            0.5
        };
        2.0 / (self.u0 * self.u0) * p.u * p.v / (p.v - p.u) * (step + self.c)
    }

    /// Smooth part on one side of `u = u0` as an expression.
    pub fn smooth_expr(&self, beyond: bool) -> Expr {
        let weight = 2.0 / (self.u0 * self.u0) * (if beyond { 1.0 } else { 0.0 } + self.c);
        Expr::scale(
            weight,
            Expr::div(Expr::mul(Expr::u(), Expr::v()), distance()),
        )
    }
}
