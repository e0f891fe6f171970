//! Characteristic (Goursat) and Cauchy solvers.

mod cauchy;
mod convergence;
mod goursat;

pub use cauchy::{solve_cauchy, CauchyData, CauchyGrid};
pub use convergence::{convergence_order, Convergence};
pub use goursat::{solve_goursat, CharacteristicData, NullGrid};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Pivots below this abort the march.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Coefficients `(B, C, D)` of `φ_xy + Bφ_x + Cφ_y + Dφ = 0` at a cell centre.
pub(crate) type CellCoeffs = (f64, f64, f64);

/// Box-scheme march of `φ_xy + Bφ_x + Cφ_y + Dφ = 0` over increasing
/// indices. Row 0 and column 0 of `values` hold the data. Each cell
/// `(i, j) → (i+1, j+1)` uses the cross difference for `φ_xy`, edge
/// averages for the first derivatives and the corner average for `φ`,
/// with coefficients from `coeffs(i, j)` at the cell centre.
pub(crate) fn box_march(
    values: &mut Array2<f64>,
    hx: f64,
    hy: f64,
    mut coeffs: impl FnMut(usize, usize) -> Result<CellCoeffs>,
    mut where_is: impl FnMut(usize, usize) -> (f64, f64),
) -> Result<()> {
    let (nx, ny) = values.dim();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let (b, c, d) = coeffs(i, j)?;
            let b = 0.5 * b * hy;
            let c = 0.5 * c * hx;
            let d = 0.25 * d * hx * hy;
            let pivot = 1.0 + b + c + d;
            if pivot.abs() < PIVOT_FLOOR {
                let (u, v) = where_is(i, j);
                return Err(Error::UnstableCell { u, v, pivot });
            }
            let p0 = values[[i, j]];
            let p1 = values[[i + 1, j]];
            let p2 = values[[i, j + 1]];
            values[[i + 1, j + 1]] =
                ((1.0 + b - c - d) * p2 + (1.0 - b + c - d) * p1 - (1.0 - b - c + d) * p0) / pivot;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_march_is_second_order() {
        // φ_xy + φ = 0 with φ(x,0) = φ(0,y) = 1 has φ = J0(2√(xy)).
        let j0 = |z: f64| {
            let (mut term, mut sum, mut k) = (1.0f64, 1.0, 1.0);
            while term.abs() > 1e-18 {
                term *= -z / (k * k);
                sum += term;
                k += 1.0;
            }
            sum
        };
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut a = Array2::zeros((n + 1, n + 1));
            a.row_mut(0).fill(1.0);
            a.column_mut(0).fill(1.0);
            box_march(&mut a, h, h, |_, _| Ok((0.0, 0.0, 1.0)), |_, _| (0.0, 0.0)).unwrap();
            (a[[n, n]] - j0(1.0)).abs()
        };
        let ratio = err(32) / err(64);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn vanishing_pivot_is_reported() {
        let mut a = Array2::zeros((3, 3));
        let r = box_march(
            &mut a,
            1.0,
            1.0,
            |_, _| Ok((-2.0, 0.0, 0.0)),
            |i, j| (i as f64, j as f64),
        );
        assert!(matches!(r, Err(Error::UnstableCell { .. })));
    }
}
