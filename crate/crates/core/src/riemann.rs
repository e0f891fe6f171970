//! Riemann function `Δ(u, v; u', v')` of the advanced Green function.
//!
//! `Δ` solves the adjoint equation
//! `Δ_uv − (UΔ)_u − (VΔ)_v + WΔ = 0` below and to the left of the base
//! point, with `Δ(u, v') = exp(−∫_u^{u'} V(s, v') ds)`,
//! `Δ(u', v) = exp(−∫_v^{v'} U(u', s) ds)` and `Δ(u', v') = 1`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equation::{classify_cpp, Rect, WaveEquation};
use crate::error::{Error, Result};
use crate::expr::{EvalError, EvalPoint, Expr, Var};
use crate::grid::{Axis, Field, FieldKind};
use crate::quad;
use crate::residual::ResidualStats;
use crate::solver::box_march;

/// Absolute tolerance of the boundary quadratures.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Mesh on `[lower.u, u'] × [lower.v, v']`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannGrid {
    pub lower: EvalPoint,
    pub n_u: usize,
    pub n_v: usize,
}

impl RiemannGrid {
    pub fn axes(&self, base: EvalPoint) -> Result<(Axis, Axis)> {
        Ok((
            Axis::new(self.lower.u, base.u, self.n_u)?,
            Axis::new(self.lower.v, base.v, self.n_v)?,
        ))
    }

    pub fn rect(&self, base: EvalPoint) -> Result<Rect> {
        Rect::new([self.lower.u, base.u], [self.lower.v, base.v])
    }
}

/// `Δ(u_i, v_j; u', v')` for a fixed base point. The last node on each
/// axis is the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannField {
    pub base: EvalPoint,
    pub field: Field,
}

impl RiemannField {
    pub fn h_u(&self) -> f64 {
        self.field.first.step()
    }

    pub fn h_v(&self) -> f64 {
        self.field.second.step()
    }

    pub fn corner(&self) -> f64 {
        let (n, m) = self.field.values.dim();
        self.field.values[[n - 1, m - 1]]
    }
}

/// `exp(−∫_x^{x'} c ds)` at every node, with `x'` the last node.
fn boundary_row(coef: &Expr, axis: &Axis, at: impl Fn(f64) -> EvalPoint) -> Result<Vec<f64>> {
    let n = axis.nodes();
    if coef.is_literal_zero() {
        return Ok(vec![1.0; n]);
    }
    // Integrate from the base end outward so each node gets ∫_{x'}^{x} = −∫_x^{x'}.
    let xs: Vec<f64> = (0..n).rev().map(|i| axis.node(i)).collect();
    let acc = quad::cumulative(|s| coef.eval(at(s)), &xs, BOUNDARY_TOL)?;
    let mut out = vec![0.0; n];
    for (k, a) in acc.into_iter().enumerate() {
        out[n - 1 - k] = a.exp();
    }
    out[n - 1] = 1.0;
    Ok(out)
}

/// Numerical Riemann function by the characteristic box scheme.
///
/// The march runs away from the base point in the reversed coordinates
/// `ũ = u' − u`, `ṽ = v' − v`, where the adjoint reads
/// `Δ_ũṽ + UΔ_ũ + VΔ_ṽ + (W − ∂_uU − ∂_vV)Δ = 0`.
pub fn riemann_numeric(
    eq: &WaveEquation,
    base: EvalPoint,
    grid: &RiemannGrid,
) -> Result<RiemannField> {
    eq.check_work_rect(&grid.rect(base)?)?;
    let (ua, va) = grid.axes(base)?;
    let (nu, nv) = (ua.cells, va.cells);
    let (hu, hv) = (ua.step(), va.step());

    let on_top = boundary_row(&eq.coef_v, &ua, |s| EvalPoint::new(s, base.v))?;
    let on_right = boundary_row(&eq.coef_u, &va, |s| EvalPoint::new(base.u, s))?;

    let w_tilde = Expr::sum([
        eq.coef_w.clone(),
        Expr::neg(eq.coef_u.diff(Var::U)),
        Expr::neg(eq.coef_v.diff(Var::V)),
    ]);
    let centre = |a: usize, b: usize| {
        EvalPoint::new(
            base.u - (a as f64 + 0.5) * hu,
            base.v - (b as f64 + 0.5) * hv,
        )
    };

    let mut rev = Array2::zeros((nu + 1, nv + 1));
    for a in 0..=nu {
        rev[[a, 0]] = on_top[nu - a];
    }
    for b in 0..=nv {
        rev[[0, b]] = on_right[nv - b];
    }
    rev[[0, 0]] = 1.0;
    box_march(
        &mut rev,
        hu,
        hv,
        |a, b| {
            let p = centre(a, b);
            Ok((eq.coef_u.eval(p)?, eq.coef_v.eval(p)?, w_tilde.eval(p)?))
        },
        |a, b| {
            let p = centre(a, b);
            (p.u, p.v)
        },
    )?;

    let mut field = Field::zeros(FieldKind::Null, ua, va);
    for i in 0..=nu {
        for j in 0..=nv {
            field.values[[i, j]] = rev[[nu - i, nv - j]];
        }
    }
    Ok(RiemannField { base, field })
}

/// Riemann functions for several base points, computed concurrently.
pub fn riemann_numeric_many(
    eq: &WaveEquation,
    jobs: &[(EvalPoint, RiemannGrid)],
) -> Vec<Result<RiemannField>> {
    jobs.par_iter()
        .map(|(base, grid)| riemann_numeric(eq, *base, grid))
        .collect()
}

/// `exp(Λ(u, v) − Λ(u', v'))` for equations with the characteristic
/// propagation property.
pub fn riemann_closed_form_cpp(eq: &WaveEquation) -> Result<Expr> {
    let verdict = classify_cpp(eq)?;
    match verdict.lambda {
        Some(lambda) if verdict.is_cpp => {
            Ok(Expr::exp(Expr::sub(lambda.clone(), lambda.to_base_point())))
        }
        _ => Err(Error::NotCpp),
    }
}

/// `Δ_uv − (UΔ)_u − (VΔ)_v + WΔ` for a symbolic two-point kernel.
pub fn adjoint_operator(eq: &WaveEquation, delta: &Expr) -> Expr {
    Expr::sum([
        delta.diff_uv(),
        Expr::neg(Expr::mul(eq.coef_u.clone(), delta.clone()).diff(Var::U)),
        Expr::neg(Expr::mul(eq.coef_v.clone(), delta.clone()).diff(Var::V)),
        Expr::mul(eq.coef_w.clone(), delta.clone()),
    ])
}

/// `Δ_uv − WΔ`, which vanishes for the closed form of a CPP equation.
pub fn reduced_adjoint_operator(eq: &WaveEquation, delta: &Expr) -> Expr {
    Expr::sub(delta.diff_uv(), Expr::mul(eq.coef_w.clone(), delta.clone()))
}

/// Residual of a symbolic kernel at pairs `(field point, base point)`.
pub fn two_point_residual(
    op: &Expr,
    pairs: &[(EvalPoint, EvalPoint)],
) -> Result<ResidualStats, EvalError> {
    let vals = pairs
        .iter()
        .map(|(p, b)| op.eval_two_point(*p, *b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResidualStats::from_values(vals))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointReport {
    /// Centered-difference residual of the adjoint equation at interior nodes.
    pub adjoint: ResidualStats,
    /// Residual of `Δ_uv − WΔ`, present for CPP equations.
    pub cpp_reduced: Option<ResidualStats>,
    pub corner: f64,
}

/// Interior finite-difference residuals of a computed field.
pub fn verify_adjoint(eq: &WaveEquation, rf: &RiemannField) -> Result<AdjointReport> {
    let f = &rf.field;
    let (nu, nv) = (f.first.cells, f.second.cells);
    let (hu, hv) = (rf.h_u(), rf.h_v());
    let d = &f.values;
    let at = |i: usize, j: usize| EvalPoint::new(f.first.node(i), f.second.node(j));
    let coefs = Array2::from_shape_fn((nu + 1, nv + 1), |(i, j)| eq.coefficients_at(at(i, j)));
    let mut cu = Array2::zeros((nu + 1, nv + 1));
    let mut cv = Array2::zeros((nu + 1, nv + 1));
    let mut cw = Array2::zeros((nu + 1, nv + 1));
    for ((i, j), c) in coefs.indexed_iter() {
        let (a, b, w) = c.clone()?;
        cu[[i, j]] = a;
        cv[[i, j]] = b;
        cw[[i, j]] = w;
    }
    let cpp = classify_cpp(eq).map(|v| v.is_cpp).unwrap_or(false);
    let mut full = Vec::new();
    let mut reduced = Vec::new();
    for i in 1..nu {
        for j in 1..nv {
            let d_uv = (d[[i + 1, j + 1]] - d[[i + 1, j - 1]] - d[[i - 1, j + 1]]
                + d[[i - 1, j - 1]])
                / (4.0 * hu * hv);
            let ud_u =
                (cu[[i + 1, j]] * d[[i + 1, j]] - cu[[i - 1, j]] * d[[i - 1, j]]) / (2.0 * hu);
            let vd_v =
                (cv[[i, j + 1]] * d[[i, j + 1]] - cv[[i, j - 1]] * d[[i, j - 1]]) / (2.0 * hv);
            let wd = cw[[i, j]] * d[[i, j]];
            full.push(d_uv - ud_u - vd_v + wd);
            if cpp {
                reduced.push(d_uv - wd);
            }
        }
    }
    Ok(AdjointReport {
        adjoint: ResidualStats::from_values(full),
        cpp_reduced: cpp.then(|| ResidualStats::from_values(reduced)),
        corner: rf.corner(),
    })
}

/// The quadrant `{u ≤ u', v ≤ v'}` carrying the advanced Green function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenSupport {
    pub base: EvalPoint,
}

impl GreenSupport {
    pub fn contains(&self, p: EvalPoint) -> bool {
        p.u <= self.base.u && p.v <= self.base.v
    }
}

/// `Δ·θ(u'−u)·θ(v'−v)` sampled from a computed field.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvancedGreen {
    pub riemann: RiemannField,
}

impl AdvancedGreen {
    pub fn support(&self) -> GreenSupport {
        GreenSupport {
            base: self.riemann.base,
        }
    }

    /// Exactly 0 outside the support; `None` inside the support but off the grid.
    pub fn value(&self, p: EvalPoint) -> Option<f64> {
        if !self.support().contains(p) {
            return Some(0.0);
        }
        self.riemann.field.interpolate(p.u, p.v)
    }
}
