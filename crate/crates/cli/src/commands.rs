//! One function per subcommand. Each returns a serializable result and,
//! where there is one, the grid for `--csv`.

use serde::Serialize;
use serde_json::Value;
use tailwave::equation::{classify_cpp, Rect, WaveEquation};
use tailwave::expr::{EvalPoint, Expr};
use tailwave::grid::{Axis, Field};
use tailwave::kundt_newman::{build_sequence, exact_amplitudes, Amplitudes, TerminationStatus};
use tailwave::registry::{lookup, registry};
use tailwave::residual::NamedResidual;
use tailwave::riemann::{
    riemann_closed_form_cpp, riemann_numeric, verify_adjoint, AdjointReport, RiemannGrid,
};
use tailwave::solver::{
    solve_cauchy, solve_goursat, CauchyData, CauchyGrid, CharacteristicData, NullGrid,
};
use tailwave::tails::{measure_cauchy_tail, measure_goursat_tail, TailReport};
use tailwave::waveform::WaveformSpec;

use crate::config::{Command, Mode, RunConfig, REGISTRY_PREFIX};
use crate::{CliError, EXIT_INDETERMINATE, EXIT_OK};

pub struct Output {
    pub result: Value,
    pub field: Option<Field>,
    pub status: u8,
}

impl Output {
    fn new(result: impl Serialize, field: Option<Field>) -> Output {
        Output {
            result: serde_json::to_value(result).expect("result serializes"),
            field,
            status: EXIT_OK,
        }
    }
}

pub fn dispatch(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command {
        Command::Classify => classify(cfg),
        Command::Riemann => riemann(cfg),
        Command::Solve => solve(cfg),
        Command::Kn => kn(cfg),
        Command::Tail => tail(cfg),
        Command::Registry => list_registry(cfg),
    }
}

/// `t ∈ [0, 1]`, `x ∈ [−1, 1]`.
const DEFAULT_CAUCHY_RECT: [f64; 4] = [0.0, 1.0, -1.0, 1.0];

#[derive(Serialize)]
struct ClassifyResult {
    is_cpp: bool,
    hp: bool,
    integrability_holds: bool,
    balance_holds: bool,
    lambda: Option<Expr>,
    riemann_closed_form: Option<Expr>,
}

fn classify(cfg: &RunConfig) -> Result<Output, CliError> {
    let eq = cfg.load_equation()?.eq;
    let v = classify_cpp(&eq)?;
    let riemann_closed_form = if v.is_cpp {
        Some(riemann_closed_form_cpp(&eq)?)
    } else {
        None
    };
    Ok(Output::new(
        ClassifyResult {
            is_cpp: v.is_cpp,
            hp: eq.hp_verdict(),
            integrability_holds: v.integrability_holds,
            balance_holds: v.balance_holds,
            lambda: v.lambda,
            riemann_closed_form,
        },
        None,
    ))
}

#[derive(Serialize)]
struct RiemannResult {
    base: EvalPoint,
    lower: EvalPoint,
    h_u: f64,
    h_v: f64,
    corner: f64,
    min: f64,
    max: f64,
    max_abs_deviation_from_one: f64,
    /// Against the registry's or the CPP closed form, when one exists.
    closed_form_max_error: Option<f64>,
    adjoint: AdjointReport,
}

fn known_riemann(source: Option<&str>, eq: &WaveEquation) -> Result<Option<Expr>, CliError> {
    if let Some(entry) = source
        .and_then(|s| s.strip_prefix(REGISTRY_PREFIX))
        .and_then(lookup)
    {
        if entry.known.riemann.is_some() {
            return Ok(entry.known.riemann.clone());
        }
    }
    match riemann_closed_form_cpp(eq) {
        Ok(e) => Ok(Some(e)),
        Err(tailwave::Error::NotCpp) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn riemann(cfg: &RunConfig) -> Result<Output, CliError> {
    let loaded = cfg.load_equation()?;
    let rect = cfg.rect_or(loaded.work_rect)?;
    let lower = rect.lower_left();
    let base = match cfg.base {
        Some([u, v]) => EvalPoint::new(u, v),
        None => EvalPoint::new(rect.u[1], rect.v[1]),
    };
    if !(base.u > lower.u && base.v > lower.v) {
        return Err(CliError::Validation(format!(
            "base point ({}, {}) must lie above and right of ({}, {})",
            base.u, base.v, lower.u, lower.v
        )));
    }
    let grid = RiemannGrid {
        lower,
        n_u: cfg.n_first,
        n_v: cfg.n_second,
    };
    let rf = riemann_numeric(&loaded.eq, base, &grid)?;
    let adjoint = verify_adjoint(&loaded.eq, &rf)?;
    let f = &rf.field;
    let closed_form_max_error = match known_riemann(cfg.equation.as_deref(), &loaded.eq)? {
        Some(delta) => {
            let mut worst = 0.0f64;
            for i in 0..f.first.nodes() {
                for j in 0..f.second.nodes() {
                    let p = EvalPoint::new(f.first.node(i), f.second.node(j));
                    let exact = delta
                        .eval_two_point(p, base)
                        .map_err(tailwave::Error::from)?;
                    worst = worst.max((f.values[[i, j]] - exact).abs());
                }
            }
            Some(worst)
        }
        None => None,
    };
    let result = RiemannResult {
        base,
        lower,
        h_u: rf.h_u(),
        h_v: rf.h_v(),
        corner: rf.corner(),
        min: f.values.iter().copied().fold(f64::INFINITY, f64::min),
        max: f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_abs_deviation_from_one: f.values.iter().fold(0.0f64, |m, x| m.max((x - 1.0).abs())),
        closed_form_max_error,
        adjoint,
    };
    Ok(Output::new(result, Some(rf.field)))
}

fn waveform(b: Option<crate::config::Bump>) -> Result<WaveformSpec, CliError> {
    b.map_or(Ok(WaveformSpec::zero()), |b| b.waveform())
}

fn null_grid(cfg: &RunConfig, eq: &WaveEquation, fallback: Rect) -> Result<NullGrid, CliError> {
    let rect = cfg.rect_or(fallback)?;
    eq.check_work_rect(&rect)?;
    Ok(NullGrid::new(rect, cfg.n_first, cfg.n_second)?)
}

fn cauchy_grid(cfg: &RunConfig) -> Result<CauchyGrid, CliError> {
    let [t0, t1, x0, x1] = cfg.rect.unwrap_or(DEFAULT_CAUCHY_RECT);
    Ok(CauchyGrid {
        t: Axis::new(t0, t1, cfg.n_first)?,
        x: Axis::new(x0, x1, cfg.n_second)?,
    })
}

#[derive(Serialize)]
struct SolveResult {
    mode: Mode,
    steps: [f64; 2],
    /// `dt/dx`, cauchy mode only.
    cfl: Option<f64>,
    sup_total: f64,
    /// Value at the last node of both axes.
    far_corner: f64,
}

fn solve_field(
    cfg: &RunConfig,
    eq: &WaveEquation,
    work_rect: Rect,
) -> Result<(Field, Option<f64>), CliError> {
    let (a, b) = (waveform(cfg.bump)?, waveform(cfg.bump2)?);
    match cfg.mode {
        Mode::Goursat => {
            let grid = null_grid(cfg, eq, work_rect)?;
            let data = CharacteristicData::from_waveforms(&grid, &a, &b)?;
            Ok((solve_goursat(eq, &data, &grid)?, None))
        }
        Mode::Cauchy => {
            let grid = cauchy_grid(cfg)?;
            let data = CauchyData::from_waveforms(&grid, &a, &b)?;
            Ok((solve_cauchy(eq, &data, &grid)?, Some(grid.cfl())))
        }
    }
}

fn solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let loaded = cfg.load_equation()?;
    let (field, cfl) = solve_field(cfg, &loaded.eq, loaded.work_rect)?;
    let (n, m) = field.values.dim();
    let result = SolveResult {
        mode: cfg.mode,
        steps: [field.first.step(), field.second.step()],
        cfl,
        sup_total: field.max_abs(),
        far_corner: field.values[[n - 1, m - 1]],
    };
    Ok(Output::new(result, Some(field)))
}

#[derive(Serialize)]
struct TailResult {
    mode: Mode,
    #[serde(flatten)]
    report: TailReport,
}

fn tail(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.bump.is_none() && cfg.bump2.is_none() {
        return Err(CliError::Validation(
            "tail needs --bump and/or --bump2".into(),
        ));
    }
    let loaded = cfg.load_equation()?;
    let (a, b) = (waveform(cfg.bump)?, waveform(cfg.bump2)?);
    let report = match cfg.mode {
        Mode::Goursat => {
            let grid = null_grid(cfg, &loaded.eq, loaded.work_rect)?;
            measure_goursat_tail(&loaded.eq, &a, &b, &grid, cfg.tol)?
        }
        Mode::Cauchy => measure_cauchy_tail(&loaded.eq, &a, &b, &cauchy_grid(cfg)?, cfg.tol)?,
    };
    let field = match cfg.csv {
        Some(_) => Some(solve_field(cfg, &loaded.eq, loaded.work_rect)?.0),
        None => None,
    };
    Ok(Output::new(
        TailResult {
            mode: cfg.mode,
            report,
        },
        field,
    ))
}

#[derive(Serialize)]
struct IndeterminateAt<'a> {
    chain: &'a str,
    index: i64,
}

#[derive(Serialize)]
struct KnResult<'a> {
    status: &'static str,
    #[serde(rename = "N")]
    n: Option<usize>,
    k1: Option<usize>,
    k2: Option<i64>,
    k_max: usize,
    indeterminate_at: Option<IndeterminateAt<'a>>,
    j_chain: &'a [Expr],
    l_chain: &'a [Expr],
    reciprocity: &'a [NamedResidual],
    /// Coefficients of `R^{(i)}` and `S^{(i)}` in the general solution.
    amplitudes: Option<Amplitudes>,
}

fn kn(cfg: &RunConfig) -> Result<Output, CliError> {
    let eq = cfg.load_equation()?.eq;
    let seq = build_sequence(&eq, cfg.k_max)?;
    let (status, indeterminate_at) = match &seq.status {
        TerminationStatus::DoubleTerminating => ("DoubleTerminating", None),
        TerminationStatus::NonTerminating { .. } => ("NonTerminating", None),
        TerminationStatus::Indeterminate { chain, index } => (
            "Indeterminate",
            Some(IndeterminateAt {
                chain,
                index: *index,
            }),
        ),
    };
    let amplitudes = if seq.is_double_terminating() {
        Some(exact_amplitudes(&seq)?)
    } else {
        None
    };
    let indeterminate = indeterminate_at.is_some();
    let mut out = Output::new(
        KnResult {
            status,
            n: seq.n,
            k1: seq.k1,
            k2: seq.k2,
            k_max: seq.k_max,
            indeterminate_at,
            j_chain: &seq.j_chain,
            l_chain: &seq.l_chain,
            reciprocity: &seq.reciprocity,
            amplitudes,
        },
        None,
    );
    if indeterminate {
        out.status = EXIT_INDETERMINATE;
    }
    Ok(out)
}

#[derive(Serialize)]
struct EntrySummary<'a> {
    name: &'a str,
    #[serde(rename = "U")]
    coef_u: &'a Expr,
    #[serde(rename = "V")]
    coef_v: &'a Expr,
    #[serde(rename = "W")]
    coef_w: &'a Expr,
    cpp: bool,
    pw_order: Option<usize>,
    work_rect: Rect,
}

#[derive(Serialize)]
struct EntryDetail<'a> {
    entry: &'a tailwave::registry::RegistryEntry,
    /// Closed-form checks that exceeded their tolerance; empty when all hold.
    closed_form_failures: Vec<NamedResidual>,
}

fn list_registry(cfg: &RunConfig) -> Result<Output, CliError> {
    let Some(source) = cfg.equation.as_deref() else {
        let list: Vec<EntrySummary> = registry()
            .iter()
            .map(|e| EntrySummary {
                name: &e.name,
                coef_u: &e.eq.coef_u,
                coef_v: &e.eq.coef_v,
                coef_w: &e.eq.coef_w,
                cpp: e.known.cpp,
                pw_order: e.known.pw_order,
                work_rect: e.work_rect,
            })
            .collect();
        return Ok(Output::new(list, None));
    };
    let name = source.strip_prefix(REGISTRY_PREFIX).unwrap_or(source);
    let entry = lookup(name)
        .ok_or_else(|| CliError::Validation(format!("unknown registry entry {name:?}")))?;
    let closed_form_failures = entry.verify()?;
    Ok(Output::new(
        EntryDetail {
            entry,
            closed_form_failures,
        },
        None,
    ))
}
