//! Uniform grids and sampled fields.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cells + 1` equally spaced nodes on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Axis> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::Invalid(format!("axis [{lo}, {hi}] is empty")));
        }
        if cells == 0 {
            return Err(Error::Invalid("axis needs at least one cell".into()));
        }
        Ok(Axis { lo, hi, cells })
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64 / self.cells as f64)
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.node(i)).collect()
    }

    /// Same interval, twice the cells.
    pub fn refined(&self) -> Axis {
        Axis {
            cells: 2 * self.cells,
            ..*self
        }
    }

    /// Index of the node at `x`, if `x` is a node to within a small fraction of a cell.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.lo) / self.step();
        let i = t.round();
        ((t - i).abs() <= 1e-9 && i >= 0.0 && i <= self.cells as f64).then_some(i as usize)
    }

    /// Cell index `i` and fraction `s ∈ [0,1]` with `x = node(i) + s·step`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if x < self.lo || x > self.hi {
            return None;
        }
        let t = (x - self.lo) / self.step();
        let i = (t.floor() as usize).min(self.cells - 1);
        Some((i, t - i as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Axes are `u` (first) and `v` (second).
    Null,
    /// Axes are `t` (first) and `x` (second).
    SpaceTime,
}

/// Node values on a tensor grid, indexed `[first, second]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub kind: FieldKind,
    pub first: Axis,
    pub second: Axis,
    pub values: Array2<f64>,
}

impl Field {
    pub fn zeros(kind: FieldKind, first: Axis, second: Axis) -> Field {
        Field {
            kind,
            first,
            second,
            values: Array2::zeros((first.nodes(), second.nodes())),
        }
    }

    pub fn from_fn(
        kind: FieldKind,
        first: Axis,
        second: Axis,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Field {
        let values = Array2::from_shape_fn((first.nodes(), second.nodes()), |(i, j)| {
            f(first.node(i), second.node(j))
        });
        Field {
            kind,
            first,
            second,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self.kind {
            FieldKind::Null => ("u", "v"),
            FieldKind::SpaceTime => ("t", "x"),
        }
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, a: f64, b: f64) -> Option<f64> {
        let (i, s) = self.first.locate(a)?;
        let (j, t) = self.second.locate(b)?;
        let v = &self.values;
        Some(
            (1.0 - s) * (1.0 - t) * v[[i, j]]
                + s * (1.0 - t) * v[[i + 1, j]]
                + (1.0 - s) * t * v[[i, j + 1]]
                + s * t * v[[i + 1, j + 1]],
        )
    }

    /// Values of a `2^k`-times refined field at this field's nodes.
    pub fn restrict_from(&self, fine: &Field) -> Result<Array2<f64>> {
        let ri = fine.first.cells / self.first.cells;
        let rj = fine.second.cells / self.second.cells;
        if ri * self.first.cells != fine.first.cells
            || rj * self.second.cells != fine.second.cells
            || fine.first.lo != self.first.lo
            || fine.second.lo != self.second.lo
            || fine.first.hi != self.first.hi
            || fine.second.hi != self.second.hi
        {
            return Err(Error::Invalid("grids are not nested".into()));
        }
        Ok(Array2::from_shape_fn(self.values.dim(), |(i, j)| {
            fine.values[[ri * i, rj * j]]
        }))
    }

    /// CSV with first-axis coordinates across the header row and
    /// second-axis coordinates down the first column.
    pub fn to_csv(&self) -> String {
        let (a, b) = self.axis_names();
        let mut out = String::new();
        write!(out, "{b}\\{a}").unwrap();
        for x in self.first.coords() {
            write!(out, ",{x:?}").unwrap();
        }
        out.push('\n');
        for j in 0..self.second.nodes() {
            write!(out, "{:?}", self.second.node(j)).unwrap();
            for i in 0..self.first.nodes() {
                write!(out, ",{:?}", self.values[[i, j]]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        if path.as_os_str().is_empty() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "empty output path",
            ));
        }
        std::fs::write(path, self.to_csv())
    }
}
