use serde::Serialize;

use crate::error::Result;
use crate::grid::Field;

/// Observed order from three nested solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Convergence {
    Observed {
        order: f64,
        coarse_diff: f64,
        fine_diff: f64,
    },
    /// Successive differences are at round-off: the scheme is exact for this problem.
    ExactScheme { coarse_diff: f64 },
}

impl Convergence {
    pub fn order(&self) -> Option<f64> {
        match self {
            Convergence::Observed { order, .. } => Some(*order),
            Convergence::ExactScheme { .. } => None,
        }
    }
}

/// `log2(‖φ_h − φ_{h/2}‖ / ‖φ_{h/2} − φ_{h/4}‖)` in the max norm on the
/// coarse nodes.
pub fn convergence_order(coarse: &Field, mid: &Field, fine: &Field) -> Result<Convergence> {
    let m = coarse.restrict_from(mid)?;
    let f = coarse.restrict_from(fine)?;
    let scale = coarse.max_abs().max(1e-300);
    let d1 = (&coarse.values - &m)
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
    let d2 = (&m - &f).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    // Round-off in a march of n cells grows roughly like n·ε.
    let cells = fine.first.cells.max(fine.second.cells) as f64;
    let floor = 1e3 * f64::EPSILON * scale * cells;
    if d1 <= floor || d2 <= floor {
        return Ok(Convergence::ExactScheme { coarse_diff: d1 });
    }
    Ok(Convergence::Observed {
        order: (d1 / d2).log2(),
        coarse_diff: d1,
        fine_diff: d2,
    })
}
