//! Flags, config-file overrides and the resolved run configuration.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use tailwave::equation::{Rect, WaveEquation};
use tailwave::kundt_newman::DEFAULT_K_MAX;
use tailwave::registry::lookup;
use tailwave::waveform::WaveformSpec;

use crate::CliError;

pub const REGISTRY_PREFIX: &str = "registry:";
pub const DEFAULT_CELLS: usize = 64;
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Riemann,
    Solve,
    Kn,
    Tail,
    Registry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Characteristic data on two null lines.
    #[default]
    Goursat,
    /// Data at `t = t0`, leapfrog in `(t, x)`.
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn waveform(&self) -> Result<WaveformSpec, CliError> {
        Ok(WaveformSpec::bump(self.center, self.width, self.amplitude)?)
    }
}

fn numbers<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", p.len()))
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    numbers::<2>(s)
}

fn parse_rect(s: &str) -> Result<[f64; 4], String> {
    numbers::<4>(s)
}

fn parse_bump(s: &str) -> Result<Bump, String> {
    let [center, width, amplitude] = numbers::<3>(s)?;
    Ok(Bump {
        center,
        width,
        amplitude,
    })
}

/// Settings that may come from flags or a JSON config file. Flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// Equation JSON file or `registry:<name>`
    #[arg(long = "eq", value_name = "EQ")]
    pub eq: Option<String>,
    /// Riemann base point `u,v`
    #[arg(long, value_parser = parse_pair, value_name = "U,V")]
    pub base: Option<[f64; 2]>,
    /// Cells per axis
    #[arg(long)]
    pub n: Option<usize>,
    /// Cells along u (or t)
    #[arg(long)]
    pub nu: Option<usize>,
    /// Cells along v (or x)
    #[arg(long)]
    pub nv: Option<usize>,
    /// Working rectangle `u0,u1,v0,v1` (or `t0,t1,x0,x1` in cauchy mode)
    #[arg(long, value_parser = parse_rect, value_name = "A0,A1,B0,B1")]
    pub rect: Option<[f64; 4]>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// R(u) in goursat mode, φ(t0, x) in cauchy mode
    #[arg(long, value_parser = parse_bump, value_name = "CENTER,WIDTH,AMPLITUDE")]
    pub bump: Option<Bump>,
    /// S(v) in goursat mode, ∂_tφ(t0, x) in cauchy mode
    #[arg(long, value_parser = parse_bump, value_name = "CENTER,WIDTH,AMPLITUDE")]
    pub bump2: Option<Bump>,
    /// Longest substitution chain to try
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Tail tolerance; default is ten times the truncation estimate
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV grid path
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl Overrides {
    /// Fill every unset field from `other`.
    pub fn or(self, other: Overrides) -> Overrides {
        Overrides {
            eq: self.eq.or(other.eq),
            base: self.base.or(other.base),
            n: self.n.or(other.n),
            nu: self.nu.or(other.nu),
            nv: self.nv.or(other.nv),
            rect: self.rect.or(other.rect),
            mode: self.mode.or(other.mode),
            bump: self.bump.or(other.bump),
            bump2: self.bump2.or(other.bump2),
            kmax: self.kmax.or(other.kmax),
            tol: self.tol.or(other.tol),
            out: self.out.or(other.out),
            csv: self.csv.or(other.csv),
        }
    }

    pub fn from_file(path: &Path) -> Result<Overrides, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

/// Everything a run depends on, echoed into its report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub equation: Option<String>,
    pub mode: Mode,
    pub n_first: usize,
    pub n_second: usize,
    /// `[u0, u1, v0, v1]`, or `[t0, t1, x0, x1]` in cauchy mode.
    pub rect: Option<[f64; 4]>,
    pub base: Option<[f64; 2]>,
    pub bump: Option<Bump>,
    pub bump2: Option<Bump>,
    pub k_max: usize,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// An equation together with its default working rectangle.
pub struct LoadedEquation {
    pub eq: WaveEquation,
    pub work_rect: Rect,
}

impl RunConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<RunConfig, CliError> {
        let n = o.n.unwrap_or(DEFAULT_CELLS);
        let cfg = RunConfig {
            command,
            equation: o.eq,
            mode: o.mode.unwrap_or_default(),
            n_first: o.nu.unwrap_or(n),
            n_second: o.nv.unwrap_or(n),
            rect: o.rect,
            base: o.base,
            bump: o.bump,
            bump2: o.bump2,
            k_max: o.kmax.unwrap_or(DEFAULT_K_MAX),
            tol: o.tol,
            out: o.out,
            csv: o.csv,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, cells) in [("nu", self.n_first), ("nv", self.n_second)] {
            if cells < MIN_CELLS {
                return Err(CliError::Validation(format!(
                    "{name} = {cells} is below {MIN_CELLS}"
                )));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Validation(format!(
                    "tolerance must be positive, got {t}"
                )));
            }
        }
        if self.k_max == 0 {
            return Err(CliError::Validation("kmax must be at least 1".into()));
        }
        if self.equation.is_none() && self.command != Command::Registry {
            return Err(CliError::Validation("no equation given".into()));
        }
        Ok(())
    }

    pub fn load_equation(&self) -> Result<LoadedEquation, CliError> {
        let source = self
            .equation
            .as_deref()
            .ok_or_else(|| CliError::Validation("no equation given".into()))?;
        if let Some(name) = source.strip_prefix(REGISTRY_PREFIX) {
            let entry = lookup(name)
                .ok_or_else(|| CliError::Validation(format!("unknown registry entry {name:?}")))?;
            return Ok(LoadedEquation {
                eq: entry.eq.clone(),
                work_rect: entry.work_rect,
            });
        }
        let text =
            std::fs::read_to_string(source).map_err(|e| CliError::io(Path::new(source), e))?;
        let eq = WaveEquation::from_json(&text)?;
        let work_rect = eq.domain;
        Ok(LoadedEquation { eq, work_rect })
    }

    /// The `--rect` override or `fallback`.
    pub fn rect_or(&self, fallback: Rect) -> Result<Rect, CliError> {
        match self.rect {
            Some([a0, a1, b0, b1]) => Ok(Rect::new([a0, a1], [b0, b1])?),
            None => Ok(fallback),
        }
    }
}
