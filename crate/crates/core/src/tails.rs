//! Tail measurement: propagate compact-support data and look at the field
//! where no null ray from the support arrives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equation::WaveEquation;
use crate::error::{Error, Result};
use crate::grid::{Axis, Field};
use crate::solver::{
    solve_cauchy, solve_goursat, CauchyData, CauchyGrid, CharacteristicData, NullGrid,
};
use crate::waveform::WaveformSpec;

/// Margin around the strip edges, in cells.
pub const MARGIN_CELLS: usize = 2;
/// Multiple of the truncation estimate used as the default tolerance.
pub const TOL_FACTOR: f64 = 10.0;
/// Tolerances never go below this.
pub const TOL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRegion {
    /// `{u > u_edge + m_u, v > v_edge + m_v}`
    GoursatStrip {
        u_edge: f64,
        v_edge: f64,
        margin_u: f64,
        margin_v: f64,
    },
    /// `{t − t0 > (x − a) + m, t − t0 > (b − x) + m}`, minus points whose
    /// past reaches the x-boundaries.
    CauchyConeInterior {
        t0: f64,
        a: f64,
        b: f64,
        margin: f64,
        x_lo: f64,
        x_hi: f64,
    },
}

impl TailRegion {
    /// Membership of the grid point `(first, second)`: `(u, v)` or `(t, x)`.
    pub fn contains(&self, p: f64, q: f64) -> bool {
        match *self {
            TailRegion::GoursatStrip {
                u_edge,
                v_edge,
                margin_u,
                margin_v,
            } => p > u_edge + margin_u && q > v_edge + margin_v,
            TailRegion::CauchyConeInterior {
                t0,
                a,
                b,
                margin,
                x_lo,
                x_hi,
            } => {
                let s = p - t0;
                s > (q - a) + margin && s > (b - q) + margin && s < q - x_lo && s < x_hi - q
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    TailFree,
    Tailed,
    /// Nonzero but constant over the late region.
    ConstantPlateau,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub region: TailRegion,
    pub region_nodes: usize,
    /// Max `|φ|` over the region.
    pub sup_tail: f64,
    /// `Σ φ²·cell area` over the region.
    pub energy_tail: f64,
    pub sup_total: f64,
    pub verdict: TailVerdict,
    pub tol: f64,
    /// `(4/3)·max|φ_h − φ_{h/2}|` on the coarse nodes.
    pub truncation_estimate: f64,
    /// Max minus min of `φ` over the later half of the region.
    pub late_drift: Option<f64>,
}

/// Support of a compactly supported profile; `None` for the zero profile.
fn compact_support(w: &WaveformSpec) -> Result<Option<(f64, f64)>> {
    if w.is_identically_zero() {
        return Ok(None);
    }
    w.support()
        .map(Some)
        .ok_or_else(|| Error::Invalid("tail measurement needs compactly supported data".into()))
}

/// Bump whose support is `[node(first), node(first + cells)]`.
pub fn bump_on_nodes(
    axis: &Axis,
    first: usize,
    cells: usize,
    amplitude: f64,
) -> Result<WaveformSpec> {
    if cells == 0 || first + cells > axis.cells {
        return Err(Error::Invalid(format!(
            "bump over nodes {first}..{} does not fit {} cells",
            first + cells,
            axis.cells
        )));
    }
    let (a, b) = (axis.node(first), axis.node(first + cells));
    WaveformSpec::bump(0.5 * (a + b), b - a, amplitude)
}

fn truncation_estimate(coarse: &Field, fine: &Field) -> Result<f64> {
    let f = coarse.restrict_from(fine)?;
    let d = (&coarse.values - &f)
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(4.0 / 3.0 * d)
}

struct Metrics {
    nodes: usize,
    sup: f64,
    energy: f64,
    drift: f64,
}

fn region_metrics(field: &Field, region: &TailRegion) -> Metrics {
    let cell = field.first.step() * field.second.step();
    let mut m = Metrics {
        nodes: 0,
        sup: 0.0,
        energy: 0.0,
        drift: 0.0,
    };
    let mut first_min = f64::INFINITY;
    let mut first_max = f64::NEG_INFINITY;
    for i in 0..field.first.nodes() {
        for j in 0..field.second.nodes() {
            if region.contains(field.first.node(i), field.second.node(j)) {
                let x = field.values[[i, j]];
                m.nodes += 1;
                m.sup = m.sup.max(x.abs());
                m.energy += x * x * cell;
                first_min = first_min.min(i as f64);
                first_max = first_max.max(i as f64);
            }
        }
    }
    if m.nodes > 0 {
        let late = 0.5 * (first_min + first_max);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in (late.ceil() as usize)..field.first.nodes() {
            for j in 0..field.second.nodes() {
                if region.contains(field.first.node(i), field.second.node(j)) {
                    lo = lo.min(field.values[[i, j]]);
                    hi = hi.max(field.values[[i, j]]);
                }
            }
        }
        m.drift = hi - lo;
    }
    m
}

fn resolve_tol(tol: Option<f64>, estimate: f64) -> Result<f64> {
    match tol {
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(Error::Invalid(format!(
            "tolerance must be positive, got {t}"
        ))),
        None => Ok((TOL_FACTOR * estimate).max(TOL_FLOOR)),
    }
}

/// Tail of the characteristic problem with data `r` on `v = v0` and `s` on
/// `u = u0`. Both profiles must be compactly supported and vanish at the corner.
/// `tol = None` uses ten times the truncation estimate.
pub fn measure_goursat_tail(
    eq: &WaveEquation,
    r: &WaveformSpec,
    s: &WaveformSpec,
    grid: &NullGrid,
    tol: Option<f64>,
) -> Result<TailReport> {
    let (ru, sv) = (compact_support(r)?, compact_support(s)?);
    let data = CharacteristicData::from_waveforms(grid, r, s)?;
    if data.corner != 0.0 {
        return Err(Error::Invalid(format!(
            "corner value must vanish, got {}",
            data.corner
        )));
    }
    let region = TailRegion::GoursatStrip {
        u_edge: ru.map_or(grid.u.lo, |(_, b)| b),
        v_edge: sv.map_or(grid.v.lo, |(_, d)| d),
        margin_u: MARGIN_CELLS as f64 * grid.u.step(),
        margin_v: MARGIN_CELLS as f64 * grid.v.step(),
    };
    let fine_grid = grid.refined();
    let fine_data = CharacteristicData::from_waveforms(&fine_grid, r, s)?;
    let (coarse, fine) = rayon::join(
        || solve_goursat(eq, &data, grid),
        || solve_goursat(eq, &fine_data, &fine_grid),
    );
    let (coarse, fine) = (coarse?, fine?);
    let estimate = truncation_estimate(&coarse, &fine)?;
    let m = region_metrics(&coarse, &region);
    if m.nodes == 0 {
        return Err(Error::RegionEmpty);
    }
    let tol = resolve_tol(tol, estimate)?;
    Ok(TailReport {
        region,
        region_nodes: m.nodes,
        sup_tail: m.sup,
        energy_tail: m.energy,
        sup_total: coarse.max_abs(),
        verdict: if m.sup <= tol {
            TailVerdict::TailFree
        } else {
            TailVerdict::Tailed
        },
        tol,
        truncation_estimate: estimate,
        late_drift: None,
    })
}

/// Tail of the Cauchy problem with `φ = phi0`, `∂_tφ = phi1` at `t = t.lo`.
/// A field that is nonzero but flat over the later half of the region is
/// reported as [`TailVerdict::ConstantPlateau`].
pub fn measure_cauchy_tail(
    eq: &WaveEquation,
    phi0: &WaveformSpec,
    phi1: &WaveformSpec,
    grid: &CauchyGrid,
    tol: Option<f64>,
) -> Result<TailReport> {
    let supports: Vec<(f64, f64)> = [compact_support(phi0)?, compact_support(phi1)?]
        .into_iter()
        .flatten()
        .collect();
    if supports.is_empty() {
        return Err(Error::Invalid("Cauchy data are identically zero".into()));
    }
    let a = supports.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let b = supports
        .iter()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let region = TailRegion::CauchyConeInterior {
        t0: grid.t.lo,
        a,
        b,
        margin: MARGIN_CELLS as f64 * grid.x.step().max(grid.t.step()),
        x_lo: grid.x.lo,
        x_hi: grid.x.hi,
    };
    let data = CauchyData::from_waveforms(grid, phi0, phi1)?;
    let fine_grid = grid.refined();
    let fine_data = CauchyData::from_waveforms(&fine_grid, phi0, phi1)?;
    let (coarse, fine) = rayon::join(
        || solve_cauchy(eq, &data, grid),
        || solve_cauchy(eq, &fine_data, &fine_grid),
    );
    let (coarse, fine) = (coarse?, fine?);
    let estimate = truncation_estimate(&coarse, &fine)?;
    let m = region_metrics(&coarse, &region);
    if m.nodes == 0 {
        return Err(Error::RegionEmpty);
    }
    let tol = resolve_tol(tol, estimate)?;
    let verdict = if m.sup <= tol {
        TailVerdict::TailFree
    } else if m.drift <= tol {
        TailVerdict::ConstantPlateau
    } else {
        TailVerdict::Tailed
    };
    Ok(TailReport {
        region,
        region_nodes: m.nodes,
        sup_tail: m.sup,
        energy_tail: m.energy,
        sup_total: coarse.max_abs(),
        verdict,
        tol,
        truncation_estimate: estimate,
        late_drift: Some(m.drift),
    })
}

/// Goursat tail reports for several data placements, computed concurrently.
pub fn sweep_goursat_tails(
    eq: &WaveEquation,
    grid: &NullGrid,
    placements: &[(WaveformSpec, WaveformSpec)],
    tol: Option<f64>,
) -> Vec<Result<TailReport>> {
    placements
        .par_iter()
        .map(|(r, s)| measure_goursat_tail(eq, r, s, grid, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::Rect;

    fn eq(u: &str, v: &str, w: &str) -> WaveEquation {
        WaveEquation::parse(u, v, w, Rect::new([-2.0, 2.0], [-2.0, 2.0]).unwrap()).unwrap()
    }

    fn unit(n: usize) -> NullGrid {
        NullGrid::new(Rect::unit(), n, n).unwrap()
    }

    #[test]
    fn trivial_goursat_is_tail_free() {
        let g = unit(64);
        let r = bump_on_nodes(&g.u, 8, 13, 1.0).unwrap();
        let s = bump_on_nodes(&g.v, 20, 10, 1.0).unwrap();
        let rep = measure_goursat_tail(&eq("0", "0", "0"), &r, &s, &g, None).unwrap();
        assert_eq!(rep.verdict, TailVerdict::TailFree);
        assert!(rep.sup_tail <= 1e-12);
        assert!(rep.sup_tail <= rep.sup_total);
    }

    #[test]
    fn klein_gordon_goursat_is_tailed() {
        let g = unit(64);
        let r = bump_on_nodes(&g.u, 6, 13, 1.0).unwrap();
        let rep =
            measure_goursat_tail(&eq("0", "0", "1"), &r, &WaveformSpec::zero(), &g, None).unwrap();
        assert_eq!(rep.verdict, TailVerdict::Tailed);
        assert!(rep.sup_tail > 1e-2, "{rep:?}");
    }

    #[test]
    fn metrics_scale_with_amplitude() {
        let g = unit(32);
        let e = eq("0", "0", "1");
        let r = bump_on_nodes(&g.u, 4, 8, 1.0).unwrap();
        let a = measure_goursat_tail(&e, &r, &WaveformSpec::zero(), &g, Some(1e-6)).unwrap();
        let b = measure_goursat_tail(&e, &r.scaled(3.0), &WaveformSpec::zero(), &g, Some(1e-6))
            .unwrap();
        assert!((b.sup_tail - 3.0 * a.sup_tail).abs() <= 1e-12 * b.sup_tail);
        assert!((b.energy_tail - 9.0 * a.energy_tail).abs() <= 1e-12 * b.energy_tail);
    }

    #[test]
    fn nonzero_corner_and_empty_region_are_refused() {
        let g = unit(16);
        let late = bump_on_nodes(&g.u, 10, 6, 1.0).unwrap();
        assert_eq!(
            measure_goursat_tail(&eq("0", "0", "0"), &late, &WaveformSpec::zero(), &g, None),
            Err(Error::RegionEmpty)
        );
        let poly = WaveformSpec::polynomial(&[0.0, 1.0]);
        assert!(
            measure_goursat_tail(&eq("0", "0", "0"), &poly, &WaveformSpec::zero(), &g, None)
                .is_err()
        );
    }

    fn cauchy_grid() -> CauchyGrid {
        CauchyGrid {
            t: Axis::new(0.0, 1.5, 150).unwrap(),
            x: Axis::new(-2.0, 2.0, 400).unwrap(),
        }
    }

    #[test]
    fn cauchy_displacement_and_velocity() {
        let g = cauchy_grid();
        let bump = bump_on_nodes(&g.x, 180, 40, 1.0).unwrap();
        let zero = WaveformSpec::zero();
        let free = measure_cauchy_tail(&eq("0", "0", "0"), &bump, &zero, &g, None).unwrap();
        assert_eq!(free.verdict, TailVerdict::TailFree);
        assert!(free.sup_tail <= 1e-10);
        let plateau = measure_cauchy_tail(&eq("0", "0", "0"), &zero, &bump, &g, None).unwrap();
        assert_eq!(plateau.verdict, TailVerdict::ConstantPlateau, "{plateau:?}");
        // ½∫cos² over a width of 0.4 is 0.1.
        assert!((plateau.sup_tail - 0.1).abs() < 1e-3);
        let kg = measure_cauchy_tail(&eq("0", "0", "1"), &bump, &zero, &g, None).unwrap();
        assert_eq!(kg.verdict, TailVerdict::Tailed);
    }
}
