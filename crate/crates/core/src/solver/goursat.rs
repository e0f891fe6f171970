use serde::{Deserialize, Serialize};

use super::box_march;
use crate::equation::{Rect, WaveEquation};
use crate::error::{Error, Result};
use crate::expr::EvalPoint;
use crate::grid::{Axis, Field, FieldKind};
use crate::waveform::WaveformSpec;

/// Tensor grid in null coordinates. Data live on `v = v.lo` and `u = u.lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullGrid {
    pub u: Axis,
    pub v: Axis,
}

impl NullGrid {
    pub fn new(rect: Rect, n_u: usize, n_v: usize) -> Result<NullGrid> {
        Ok(NullGrid {
            u: Axis::new(rect.u[0], rect.u[1], n_u)?,
            v: Axis::new(rect.v[0], rect.v[1], n_v)?,
        })
    }

    pub fn rect(&self) -> Rect {
        Rect {
            u: [self.u.lo, self.u.hi],
            v: [self.v.lo, self.v.hi],
        }
    }

    pub fn refined(&self) -> NullGrid {
        NullGrid {
            u: self.u.refined(),
            v: self.v.refined(),
        }
    }

    pub fn corner(&self) -> EvalPoint {
        EvalPoint::new(self.u.lo, self.v.lo)
    }
}

/// Data on the two characteristics through the grid corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicData {
    /// `φ(u_i, v_0)`, on the line of constant `v`.
    pub along_u: Vec<f64>,
    /// `φ(u_0, v_j)`, on the line of constant `u`.
    pub along_v: Vec<f64>,
    pub corner: f64,
}

const CORNER_TOL: f64 = 1e-12;

impl CharacteristicData {
    pub fn new(along_u: Vec<f64>, along_v: Vec<f64>) -> Result<Self> {
        let corner = *along_u
            .first()
            .ok_or_else(|| Error::Invalid("empty characteristic data".into()))?;
        let d = CharacteristicData {
            along_u,
            along_v,
            corner,
        };
        d.check_compatible()?;
        Ok(d)
    }

    pub fn check_compatible(&self) -> Result<()> {
        let (a, b) = match (self.along_u.first(), self.along_v.first()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(Error::Invalid("empty characteristic data".into())),
        };
        let scale = 1.0 + self.corner.abs();
        if (a - self.corner).abs() > CORNER_TOL * scale
            || (b - self.corner).abs() > CORNER_TOL * scale
        {
            return Err(Error::Invalid(format!(
                "corner mismatch: along u {a}, along v {b}, corner {}",
                self.corner
            )));
        }
        Ok(())
    }

    /// Data `φ(u, v₀) = r(u)`, `φ(u₀, v) = s(v)`. Bump supports must sit on grid nodes.
    pub fn from_waveforms(grid: &NullGrid, r: &WaveformSpec, s: &WaveformSpec) -> Result<Self> {
        check_aligned(&grid.u, r)?;
        check_aligned(&grid.v, s)?;
        let along_u = grid.u.coords().iter().map(|&u| r.value(u)).collect();
        let along_v = grid.v.coords().iter().map(|&v| s.value(v)).collect();
        CharacteristicData::new(along_u, along_v)
    }

    /// Restriction of a known solution to the two characteristics.
    pub fn from_solution(
        grid: &NullGrid,
        mut phi: impl FnMut(EvalPoint) -> Result<f64>,
    ) -> Result<Self> {
        let along_u = grid
            .u
            .coords()
            .iter()
            .map(|&u| phi(EvalPoint::new(u, grid.v.lo)))
            .collect::<Result<Vec<_>>>()?;
        let along_v = grid
            .v
            .coords()
            .iter()
            .map(|&v| phi(EvalPoint::new(grid.u.lo, v)))
            .collect::<Result<Vec<_>>>()?;
        let corner = along_u[0];
        let d = CharacteristicData {
            along_u,
            along_v,
            corner,
        };
        d.check_compatible()?;
        Ok(d)
    }

    pub fn scaled_sum(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let mix = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| a * s + b * t).collect();
        CharacteristicData {
            along_u: mix(&x.along_u, &y.along_u),
            along_v: mix(&x.along_v, &y.along_v),
            corner: a * x.corner + b * y.corner,
        }
    }
}

pub(crate) fn check_aligned(axis: &Axis, w: &WaveformSpec) -> Result<()> {
    if let Some((a, b)) = w.support() {
        for edge in [a, b] {
            let inside = edge > axis.lo && edge < axis.hi;
            if inside && axis.node_index(edge).is_none() {
                return Err(Error::SupportNotAligned { edge });
            }
        }
    }
    Ok(())
}

/// Box-scheme solution of the characteristic problem on `grid`.
pub fn solve_goursat(
    eq: &WaveEquation,
    data: &CharacteristicData,
    grid: &NullGrid,
) -> Result<Field> {
    eq.check_work_rect(&grid.rect())?;
    data.check_compatible()?;
    if data.along_u.len() != grid.u.nodes() || data.along_v.len() != grid.v.nodes() {
        return Err(Error::Invalid(format!(
            "data has {}x{} samples, grid has {}x{} nodes",
            data.along_u.len(),
            data.along_v.len(),
            grid.u.nodes(),
            grid.v.nodes()
        )));
    }
    let mut field = Field::zeros(FieldKind::Null, grid.u, grid.v);
    for (i, x) in data.along_u.iter().enumerate() {
        field.values[[i, 0]] = *x;
    }
    for (j, x) in data.along_v.iter().enumerate() {
        field.values[[0, j]] = *x;
    }
    field.values[[0, 0]] = data.corner;
    let (hu, hv) = (grid.u.step(), grid.v.step());
    let centre = |i: usize, j: usize| {
        EvalPoint::new(
            grid.u.lo + (i as f64 + 0.5) * hu,
            grid.v.lo + (j as f64 + 0.5) * hv,
        )
    };
    box_march(
        &mut field.values,
        hu,
        hv,
        |i, j| eq.coefficients_at(centre(i, j)),
        |i, j| {
            let p = centre(i, j);
            (p.u, p.v)
        },
    )?;
    Ok(field)
}
