use serde::Serialize;

/// Max and RMS of a residual sampled at `points` locations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct ResidualStats {
    pub max: f64,
    pub rms: f64,
    pub points: usize,
}

impl ResidualStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut max, mut sq, mut n) = (0.0f64, 0.0, 0usize);
        for r in values {
            max = max.max(r.abs());
            sq += r * r;
            n += 1;
        }
        ResidualStats {
            max,
            rms: if n > 0 { (sq / n as f64).sqrt() } else { 0.0 },
            points: n,
        }
    }
}

/// A residual with a descriptive name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedResidual {
    pub name: String,
    pub stats: ResidualStats,
}
