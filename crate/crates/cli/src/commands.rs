use airykdv_core::asymptotics::{
    self, default_t_samples, kpz_deep_tail, kpz_point, regime_i_u, regime_ii_u, regime_iii_v_small_x,
};
use airykdv_core::observables::observe_with;
use airykdv_core::painleve2::{solve_hm, tail_constant, y_sq_from_determinant, HM_DOMAIN, HM_GRID};
use airykdv_core::residuals::{run_suite, STANDARD_POINTS, STANDARD_Z};
use airykdv_core::{
    classify, CheckKind, DiscretizedOperator, ErrorKind, FdScheme, MathConstants, Regime, ResidualReport, Resolution,
    SigmaWeight, TwOracle, VModel,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::args::{CheckArg, Cli, Command, Common, Format, GridArgs, ModelArg};
use crate::table::{Cell, Table, SCHEMA_VERSION};

/// Largest grid a single run will evaluate.
const MAX_POINTS: usize = 1_000_000;
const TAIL_CONSTANT_TOL: f64 = 2e-2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] airykdv_core::Error),
    #[error("cannot write {0}: {1}")]
    Io(String, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Numerical => 3,
            },
            CliError::Io(..) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub struct Outcome {
    pub text: String,
    pub tolerance_failed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, tolerance_failed: false }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Det => det(c),
        Command::Scan => scan(c),
        Command::Check { kind } => check(c, *kind),
        Command::Tw => tw(c),
        Command::P2 => p2(c),
        Command::TailConstant => tail(c),
        Command::Kpz => kpz(c),
        Command::VEstimate { model } => v_estimate(c, *model),
    }
}

fn sigma(c: &Common) -> Result<SigmaWeight> {
    match &c.sigma {
        None => Ok(SigmaWeight::step(c.gamma)?),
        Some(spec) => {
            let text = match spec.strip_prefix('@') {
                Some(path) => {
                    std::fs::read_to_string(path).map_err(|e| config(format!("cannot read sigma file {path}: {e}")))?
                }
                None => spec.clone(),
            };
            Ok(SigmaWeight::from_json(&text)?)
        }
    }
}

fn resolution(c: &Common) -> Result<Resolution> {
    let mut res = Resolution::default();
    if let Some(n) = c.nodes {
        res.n_per_panel = n;
    }
    if let Some(p) = c.panels {
        res.subdivide = p;
    }
    res.validate()?;
    Ok(res)
}

fn axis(
    name: &str,
    single: Option<f64>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
) -> Result<Option<Vec<f64>>> {
    let check_finite = |flag: &str, v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(config(format!("--{flag} must be finite")))
        }
    };
    match (single, from, to, step) {
        (None, None, None, None) => Ok(None),
        (Some(v), None, None, None) => Ok(Some(vec![check_finite(name, v)?])),
        (Some(_), ..) => {
            Err(config(format!("--{name} cannot be combined with --{name}-from/--{name}-to/--{name}-step")))
        }
        (None, Some(a), Some(b), Some(h)) => {
            let (a, b) = (check_finite(&format!("{name}-from"), a)?, check_finite(&format!("{name}-to"), b)?);
            if !(a < b) {
                return Err(config(format!("--{name}-from {a} must be below --{name}-to {b}")));
            }
            if !(h > 0.0 && h.is_finite()) {
                return Err(config(format!("--{name}-step {h} must be positive")));
            }
            let count = ((b - a) / h * (1.0 + 1e-12)).floor();
            if count >= MAX_POINTS as f64 {
                return Err(config(format!("{name} range has more than {MAX_POINTS} points")));
            }
            Ok(Some((0..=count as usize).map(|i| a + i as f64 * h).collect()))
        }
        _ => Err(config(format!("--{name}-from, --{name}-to and --{name}-step must be given together"))),
    }
}

fn xs(g: &GridArgs) -> Result<Option<Vec<f64>>> {
    axis("x", g.x, g.x_from, g.x_to, g.x_step)
}

fn ts(g: &GridArgs) -> Result<Option<Vec<f64>>> {
    let t = axis("t", g.t, g.t_from, g.t_to, g.t_step)?;
    if let Some(bad) = t.iter().flatten().find(|&&v| v <= 0.0) {
        return Err(config(format!("t = {bad} must be positive")));
    }
    Ok(t)
}

fn ss(g: &GridArgs) -> Result<Option<Vec<f64>>> {
    axis("s", g.s, g.s_from, g.s_to, g.s_step)
}

fn required(values: Option<Vec<f64>>, name: &str) -> Result<Vec<f64>> {
    values.ok_or_else(|| config(format!("missing --{name} or --{name}-from/--{name}-to/--{name}-step")))
}

fn single(values: Option<Vec<f64>>, name: &str) -> Result<f64> {
    match values.as_deref() {
        Some([v]) => Ok(*v),
        Some(_) => Err(config(format!("this command takes a single --{name}"))),
        None => Err(config(format!("missing --{name}"))),
    }
}

/// Row-major cartesian product, first axis outer.
fn product(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn render(c: &Common, default: Format, table: &Table, flat: bool, extra: Map<String, Value>) -> String {
    match c.format.unwrap_or(default) {
        Format::Csv => table.to_csv(),
        Format::Json if flat => table.to_json_object(extra),
        Format::Json => table.to_json_document(extra),
    }
}

fn sigma_meta(s: &SigmaWeight) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("sigma".into(), json!(s.label()));
    m
}

fn det(c: &Common) -> Result<Outcome> {
    let (s, res) = (sigma(c)?, resolution(c)?);
    let x = single(xs(&c.grid)?, "x")?;
    let t = single(ts(&c.grid)?, "t")?;
    let o = observe_with(&s, x, t, &FdScheme::default_for(t), &res)?;
    let mut table = Table::new("det", &["x", "t", "log_q", "q", "u", "p", "phi_sq_int", "u_trace", "p_trace", "nodes"]);
    table.push(vec![
        x.into(),
        t.into(),
        o.log_q.into(),
        o.q_det.into(),
        o.u.into(),
        o.p.into(),
        o.phi_sq_int.into(),
        o.u_trace.into(),
        o.p_trace.into(),
        Cell::Int(o.grid.nodes),
    ]);
    Ok(Outcome::ok(render(c, Format::Json, &table, true, sigma_meta(&s))))
}

fn asymptotic_u(s: &SigmaWeight, regime: Regime, x: f64, t: f64) -> Result<Option<f64>> {
    Ok(match regime {
        Regime::Singular => Some(regime_i_u(x, t)),
        Regime::PainleveII => Some(regime_ii_u(x, t, s.gamma())?),
        Regime::Profile => Some(regime_iii_v_small_x(s, x)?),
        Regime::Outside => None,
    })
}

fn scan(c: &Common) -> Result<Outcome> {
    let (s, res) = (sigma(c)?, resolution(c)?);
    let points = product(&required(xs(&c.grid)?, "x")?, &required(ts(&c.grid)?, "t")?);
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(x, t)| -> Result<Vec<Cell>> {
            let o = observe_with(&s, x, t, &FdScheme::default_for(t), &res)?;
            let regime = classify(x, t, c.m, c.k);
            let asym = asymptotic_u(&s, regime, x, t)?;
            Ok(vec![
                x.into(),
                t.into(),
                o.log_q.into(),
                o.u.into(),
                Cell::Text(regime.label().into()),
                asym.into(),
                asym.map(|a| o.u - a).into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("scan", &["x", "t", "log_q", "u", "regime", "asym_value", "gap"]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut extra = sigma_meta(&s);
    extra.insert("M".into(), json!(c.m));
    extra.insert("K".into(), json!(c.k));
    Ok(Outcome::ok(render(c, Format::Csv, &table, false, extra)))
}

fn check_kinds(kind: CheckArg) -> Vec<CheckKind> {
    match kind {
        CheckArg::Kdv => vec![CheckKind::Kdv],
        CheckArg::Schrodinger => vec![CheckKind::Schrodinger],
        CheckArg::Idpii => vec![CheckKind::Idpii],
        CheckArg::Evolution => vec![CheckKind::Evolution],
        CheckArg::Mkdv => vec![CheckKind::Mkdv],
        CheckArg::PhiIdentity => vec![CheckKind::PhiIdentity],
        CheckArg::Cylkdv => vec![CheckKind::Cylkdv],
        CheckArg::All => CheckKind::ALL.to_vec(),
    }
}

fn check(c: &Common, kind: CheckArg) -> Result<Outcome> {
    let (s, res) = (sigma(c)?, resolution(c)?);
    if let Some(tol) = c.tol {
        if !(tol > 0.0) {
            return Err(config(format!("--tol {tol} must be positive")));
        }
    }
    let points = match (xs(&c.grid)?, ts(&c.grid)?) {
        (None, None) => STANDARD_POINTS.to_vec(),
        (Some(x), Some(t)) => product(&x, &t),
        _ => return Err(config("check needs both x and t, or neither for the standard point set")),
    };
    let reports = run_suite(&s, &points, &STANDARD_Z, &check_kinds(kind), FdScheme::default_for, &res)?;
    let tolerance =
        |r: &ResidualReport| c.tol.unwrap_or_else(|| CheckKind::parse(&r.name).map_or(0.0, CheckKind::tolerance));
    let failed = reports.iter().any(|r| !r.passes(tolerance(r)));
    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => reports
            .iter()
            .map(|r| {
                let mut r = r.clone();
                let tol = tolerance(&r);
                r.meta["tolerance"] = json!(tol);
                r.meta["pass"] = json!(r.passes(tol));
                r.meta["schema_version"] = json!(SCHEMA_VERSION);
                r.to_json_line() + "\n"
            })
            .collect(),
        Format::Csv => {
            let mut table =
                Table::new("check", &["name", "x", "t", "z", "raw", "scale", "normalized", "tolerance", "pass"]);
            for r in &reports {
                let tol = tolerance(r);
                let field = |k: &str| r.meta.get(k).and_then(Value::as_f64);
                table.push(vec![
                    Cell::Text(r.name.clone()),
                    field("x").into(),
                    field("t").into(),
                    field("z").into(),
                    r.raw.into(),
                    r.scale.into(),
                    r.normalized.into(),
                    tol.into(),
                    Cell::Flag(r.passes(tol)),
                ]);
            }
            table.to_csv()
        }
    };
    if failed {
        eprintln!("airykdv: at least one residual exceeds its tolerance");
    }
    Ok(Outcome { text, tolerance_failed: failed })
}

fn tw(c: &Common) -> Result<Outcome> {
    let mut oracle = TwOracle::default();
    if let Some(n) = c.nodes {
        if n == 0 || n > airykdv_core::quadrature::MAX_GAUSS_NODES {
            return Err(config(format!("--nodes {n} out of range")));
        }
        oracle.nodes_per_panel = n;
    }
    let s_values = required(ss(&c.grid)?, "s")?;
    let values: Vec<f64> = s_values.par_iter().map(|&s| oracle.f(s, c.gamma)).collect::<airykdv_core::Result<_>>()?;
    let mut table = Table::new("tw", &["s", "F_TW"]);
    for (&s, &f) in s_values.iter().zip(&values) {
        table.push(vec![s.into(), f.into()]);
    }
    let mut extra = Map::new();
    extra.insert("gamma".into(), json!(c.gamma));
    Ok(Outcome::ok(render(c, Format::Csv, &table, false, extra)))
}

fn p2(c: &Common) -> Result<Outcome> {
    let s_values = match ss(&c.grid)? {
        Some(v) => v,
        None => axis("s", None, Some(-6.0), Some(4.0), Some(0.5))?.unwrap_or_default(),
    };
    let hm = if c.gamma == 1.0 { Some(solve_hm(HM_DOMAIN, HM_GRID)?) } else { None };
    let fd = FdScheme::default_for(1.0);
    let det_values: Vec<f64> =
        s_values.par_iter().map(|&s| y_sq_from_determinant(c.gamma, s, &fd)).collect::<airykdv_core::Result<_>>()?;
    let mut table = Table::new("p2", &["s", "y_sq_bvp", "y_sq_det", "gap"]);
    for (&s, &det) in s_values.iter().zip(&det_values) {
        let bvp = hm.as_ref().and_then(|h| h.eval(s)).map(|y| y * y);
        table.push(vec![s.into(), bvp.into(), det.into(), bvp.map(|b| b - det).into()]);
    }
    let mut extra = Map::new();
    extra.insert("gamma".into(), json!(c.gamma));
    Ok(Outcome::ok(render(c, Format::Csv, &table, false, extra)))
}

fn tail(c: &Common) -> Result<Outcome> {
    let g = &c.grid;
    if g.s.is_some() || g.s_step.is_some() {
        return Err(config("tail-constant takes the two gaps as --s-from and --s-to"));
    }
    let tol = c.tol.unwrap_or(TAIL_CONSTANT_TOL);
    let k = tail_constant(g.s_from.unwrap_or(6.0), g.s_to.unwrap_or(8.0))?;
    let reference = MathConstants::TW_TAIL_CONSTANT;
    let error = (k.extrapolated - reference).abs();
    let pass = error <= tol;
    let mut table =
        Table::new("tail-constant", &["s1", "s2", "raw1", "raw2", "extrapolated", "reference", "error", "pass"]);
    table.push(vec![
        k.s[0].into(),
        k.s[1].into(),
        k.raw[0].into(),
        k.raw[1].into(),
        k.extrapolated.into(),
        reference.into(),
        error.into(),
        Cell::Flag(pass),
    ]);
    let mut extra = Map::new();
    extra.insert("tolerance".into(), json!(tol));
    Ok(Outcome { text: render(c, Format::Json, &table, true, extra), tolerance_failed: !pass })
}

fn kpz(c: &Common) -> Result<Outcome> {
    let res = resolution(c)?;
    let grid = product(&required(ss(&c.grid)?, "s")?, &required(ts(&c.grid)?, "t")?);
    let weight = SigmaWeight::kpz();
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .map(|&(s, big_t)| -> Result<Vec<Cell>> {
            let (x, t) = kpz_point(s, big_t);
            let log_q = DiscretizedOperator::build(&weight, x, t, &res)?.log_det();
            let tail = kpz_deep_tail(x, t).ok();
            Ok(vec![
                s.into(),
                big_t.into(),
                x.into(),
                t.into(),
                log_q.into(),
                log_q.exp().into(),
                tail.into(),
                tail.map(|d| log_q - d).into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("kpz", &["s", "T", "x", "t", "log_q", "q", "deep_tail", "gap"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Outcome::ok(render(c, Format::Csv, &table, false, Map::new())))
}

fn v_estimate(c: &Common, model: ModelArg) -> Result<Outcome> {
    let (s, res) = (sigma(c)?, resolution(c)?);
    let model = match model {
        ModelArg::Linear => VModel::Linear,
        ModelArg::Cubic => VModel::Cubic,
        ModelArg::StepControl => VModel::StepControl,
    };
    let x_values = required(xs(&c.grid)?, "x")?;
    let t_override = ts(&c.grid)?.map(|mut t| {
        t.sort_by(|a, b| b.total_cmp(a));
        t
    });
    let rows: Vec<Vec<Cell>> = x_values
        .par_iter()
        .map(|&x| -> Result<Vec<Cell>> {
            let samples = t_override.clone().unwrap_or_else(|| default_t_samples(x));
            let e = asymptotics::v_estimate(&s, x, &samples, model, &res)?;
            Ok(vec![x.into(), e.v_hat.into(), e.model_residual.into(), regime_iii_v_small_x(&s, x)?.into()])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("v-estimate", &["x", "v_hat", "model_residual", "v_small_x"]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut extra = sigma_meta(&s);
    extra.insert("model".into(), json!(model));
    Ok(Outcome::ok(render(c, Format::Json, &table, false, extra)))
}
