//! Leapfrog solver for the `(t, x)` form
//! `φ_tt − φ_xx + (U+V)φ_t + (V−U)φ_x + Wφ = 0`, with `u = (t−x)/2`, `v = (t+x)/2`.

use serde::{Deserialize, Serialize};

use super::goursat::check_aligned;
use super::PIVOT_FLOOR;
use crate::equation::WaveEquation;
use crate::error::{Error, Result};
use crate::expr::EvalPoint;
use crate::grid::{Axis, Field, FieldKind};
use crate::waveform::WaveformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyGrid {
    /// Time axis; `t.lo` is the data line.
    pub t: Axis,
    pub x: Axis,
}

impl CauchyGrid {
    pub fn cfl(&self) -> f64 {
        self.t.step() / self.x.step()
    }

    pub fn refined(&self) -> CauchyGrid {
        CauchyGrid {
            t: self.t.refined(),
            x: self.x.refined(),
        }
    }
}

pub(crate) fn null_point(t: f64, x: f64) -> EvalPoint {
    EvalPoint::new(0.5 * (t - x), 0.5 * (t + x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub t0: f64,
    /// `φ(t₀, x_j)`
    pub phi0: Vec<f64>,
    /// `∂_tφ(t₀, x_j)`
    pub phi1: Vec<f64>,
}

impl CauchyData {
    pub fn from_waveforms(
        grid: &CauchyGrid,
        phi0: &WaveformSpec,
        phi1: &WaveformSpec,
    ) -> Result<Self> {
        for w in [phi0, phi1] {
            check_aligned(&grid.x, w)?;
            if let Some((a, b)) = w.support() {
                if a <= grid.x.lo || b >= grid.x.hi {
                    return Err(Error::Invalid(format!(
                        "support [{a}, {b}] is not strictly inside [{}, {}]",
                        grid.x.lo, grid.x.hi
                    )));
                }
            }
        }
        let xs = grid.x.coords();
        Ok(CauchyData {
            t0: grid.t.lo,
            phi0: xs.iter().map(|&x| phi0.value(x)).collect(),
            phi1: xs.iter().map(|&x| phi1.value(x)).collect(),
        })
    }
}

/// Explicit three-level scheme, Dirichlet zero at both ends of the x-range.
/// The first step is a second-order Taylor step with `φ_tt` taken from the
/// equation.
pub fn solve_cauchy(eq: &WaveEquation, data: &CauchyData, grid: &CauchyGrid) -> Result<Field> {
    let ratio = grid.cfl();
    if ratio > 1.0 + 1e-12 {
        return Err(Error::CflViolation { ratio });
    }
    let nx = grid.x.nodes();
    if data.phi0.len() != nx || data.phi1.len() != nx {
        return Err(Error::Invalid(format!(
            "data has {} / {} samples, grid has {nx} nodes",
            data.phi0.len(),
            data.phi1.len()
        )));
    }
    if (data.t0 - grid.t.lo).abs() > 1e-12 {
        return Err(Error::Invalid(
            "data line is not the first time level".into(),
        ));
    }
    // u − v = −x, so the line u = v + c is the vertical line x = −c.
    for l in &eq.singular_lines {
        if -l.offset > grid.x.lo - eq.margin && -l.offset < grid.x.hi + eq.margin {
            return Err(Error::SingularPath { offset: l.offset });
        }
    }
    let (dt, dx) = (grid.t.step(), grid.x.step());
    let xs = grid.x.coords();
    let mut field = Field::zeros(FieldKind::SpaceTime, grid.t, grid.x);

    // (U+V, V−U, W) at time level n.
    let coeffs_at = |t: f64| -> Result<Vec<(f64, f64, f64)>> {
        xs.iter()
            .map(|&x| {
                let (cu, cv, cw) = eq.coefficients_at(null_point(t, x))?;
                Ok((cu + cv, cv - cu, cw))
            })
            .collect()
    };
    let spatial = |phi: &[f64], j: usize, q: f64, w: f64| {
        let lap = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (dx * dx);
        let grad = (phi[j + 1] - phi[j - 1]) / (2.0 * dx);
        lap - q * grad - w * phi[j]
    };

    let mut prev: Vec<f64> = data.phi0.clone();
    prev[0] = 0.0;
    prev[nx - 1] = 0.0;
    field
        .values
        .row_mut(0)
        .assign(&ndarray::ArrayView1::from(&prev));
    if grid.t.cells == 0 {
        return Ok(field);
    }

    let c0 = coeffs_at(grid.t.lo)?;
    let mut cur = vec![0.0; nx];
    for j in 1..nx - 1 {
        let (p, q, w) = c0[j];
        let phi_tt = spatial(&prev, j, q, w) - p * data.phi1[j];
        cur[j] = prev[j] + dt * data.phi1[j] + 0.5 * dt * dt * phi_tt;
    }
    field
        .values
        .row_mut(1)
        .assign(&ndarray::ArrayView1::from(&cur));

    for n in 1..grid.t.cells {
        let t = grid.t.node(n);
        let c = coeffs_at(t)?;
        let mut next = vec![0.0; nx];
        for j in 1..nx - 1 {
            let (p, q, w) = c[j];
            let pivot = 1.0 + 0.5 * p * dt;
            if pivot.abs() < PIVOT_FLOOR {
                let e = null_point(t, xs[j]);
                return Err(Error::UnstableCell {
                    u: e.u,
                    v: e.v,
                    pivot,
                });
            }
            let rhs =
                2.0 * cur[j] - (1.0 - 0.5 * p * dt) * prev[j] + dt * dt * spatial(&cur, j, q, w);
            next[j] = rhs / pivot;
        }
        field
            .values
            .row_mut(n + 1)
            .assign(&ndarray::ArrayView1::from(&next));
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::Rect;

    fn grid(nt: usize, t1: f64, nx: usize) -> CauchyGrid {
        CauchyGrid {
            t: Axis::new(0.0, t1, nt).unwrap(),
            x: Axis::new(-2.0, 2.0, nx).unwrap(),
        }
    }

    fn trivial() -> WaveEquation {
        WaveEquation::parse(
            "0",
            "0",
            "0",
            Rect::new([-10.0, 10.0], [-10.0, 10.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn displacement_splits_exactly_at_unit_cfl() {
        let g = grid(100, 1.0, 400);
        let bump = WaveformSpec::bump(0.0, 0.4, 1.0).unwrap();
        let d = CauchyData::from_waveforms(&g, &bump, &WaveformSpec::zero()).unwrap();
        let f = solve_cauchy(&trivial(), &d, &g).unwrap();
        let n = 100;
        for j in 0..=400 {
            let x = g.x.node(j);
            let want = 0.5 * (bump.value(x - 1.0) + bump.value(x + 1.0));
            assert!((f.values[[n, j]] - want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn cfl_is_enforced() {
        let g = grid(10, 1.0, 100);
        let d = CauchyData {
            t0: 0.0,
            phi0: vec![0.0; 101],
            phi1: vec![0.0; 101],
        };
        assert!(matches!(
            solve_cauchy(&trivial(), &d, &g),
            Err(Error::CflViolation { .. })
        ));
    }
}
