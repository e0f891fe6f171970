//! Reference values computed without the library's machinery.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tailwave::expr::EvalPoint;

/// `J0(2√z) = Σ (−z)^k/(k!)²` and its first two z-derivatives.
pub fn bessel_series(z: f64) -> (f64, f64, f64) {
    let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let mut c = 1.0; // (−1)^k/(k!)²
    for k in 0..80 {
        let kf = k as f64;
        f += c * z.powi(k);
        if k >= 1 {
            d1 += c * kf * z.powi(k - 1);
        }
        if k >= 2 {
            d2 += c * kf * (kf - 1.0) * z.powi(k - 2);
        }
        c *= -1.0 / ((kf + 1.0) * (kf + 1.0));
        if c.abs() < 1e-300 {
            break;
        }
    }
    (f, d1, d2)
}

/// Riemann function of `φ_uv + φ = 0` with base `(bu, bv)`.
pub fn klein_gordon_riemann(u: f64, v: f64, bu: f64, bv: f64) -> f64 {
    bessel_series((bu - u) * (bv - v)).0
}

/// Uniform points in `[u0,u1]×[v0,v1]` with `|u − v| ≥ gap` when `gap > 0`.
pub fn random_points(seed: u64, n: usize, u: [f64; 2], v: [f64; 2], gap: f64) -> Vec<EvalPoint> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = EvalPoint::new(rng.random_range(u[0]..u[1]), rng.random_range(v[0]..v[1]));
        if gap <= 0.0 || (p.u - p.v).abs() >= gap {
            out.push(p);
        }
    }
    out
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Max absolute difference of a sampled field from `f` at its nodes.
pub fn max_error(field: &tailwave::grid::Field, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut m = 0.0f64;
    for i in 0..field.first.nodes() {
        for j in 0..field.second.nodes() {
            let d = field.values[[i, j]] - f(field.first.node(i), field.second.node(j));
            m = m.max(d.abs());
        }
    }
    m
}
