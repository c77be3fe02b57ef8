use std::fmt::Write as _;
use std::path::PathBuf;

use ncquant::chart::CoordKind;
use ncquant::expr::{parse_with_constants, Point, ScalarExpr};
use ncquant::poisson::{bracket, PoissonBivector};
use ncquant::quantize::{
    dirac_convergence, dirac_residual, hamiltonian_operator, mode_spectrum, spectrum, AffineObservable, GridSpec, Level,
    PhaseSpace, QuantizationParams,
};
use ncquant::so3::{aa_point, coalgebra_point, sample_chart_points, sample_coalgebra_points, So3Model};
use ncquant::verify::{run_verify, VerifyConfig, VerifyError, DIRAC_LADDER};
use ncquant::Chart;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::config::{CliError, Format, Settings};

/// Rendered report plus the exit code it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub code: u8,
}

impl Outcome {
    fn new(body: String, pass: bool) -> Self {
        Outcome { body, code: if pass { 0 } else { CliError::CHECK_FAILED } }
    }
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 output")
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{:<w$}", c, w = *w)).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::usage(e)
}

pub fn cmd_verify(s: &Settings) -> Result<Outcome, CliError> {
    let config = VerifyConfig {
        seed: s.seed,
        lambda: s.lambda.clone(),
        kmax: s.kmax,
        grid_points: s.grid_n,
        grid_half_width: s.grid_l,
        inertia: s.inertia,
    };
    let report = run_verify(&config).map_err(|e| match e {
        VerifyError::Config(_) => usage(e),
        other => CliError::failed(other),
    })?;
    let rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|(name, c)| vec![name.clone(), c.pass.to_string(), format!("{:e}", c.residual), format!("{:e}", c.tolerance)])
        .collect();
    let header = ["check", "pass", "residual", "tolerance"];
    let body = if s.pretty {
        let mut t = table(&header, &rows);
        writeln!(t, "seed {}: {}", report.seed, if report.all_pass() { "all checks pass" } else { "FAILED" }).unwrap();
        t
    } else {
        match s.format {
            Format::Json => json(&report),
            Format::Csv => csv_text(&header, rows),
        }
    };
    Ok(Outcome::new(body, report.all_pass()))
}

/// Named Poisson structures available to `bracket`.
pub const STRUCTURES: [&str; 3] = ["so3-liepoisson", "so3-aa", "canonical"];

fn structure(name: &str, inertia: f64) -> Result<PoissonBivector, CliError> {
    let model = So3Model::new(inertia).map_err(usage)?;
    match name {
        "so3-liepoisson" => Ok(model.lie_poisson),
        "so3-aa" => Ok(model.aa_bivector),
        "canonical" => Ok(PhaseSpace::canonical().bivector()),
        other => Err(usage(format!("unknown structure `{}`; expected one of {}", other, STRUCTURES.join(", ")))),
    }
}

/// Parses `name=value,name=value`.
fn parse_point(src: &str, chart: &Chart) -> Result<Point, CliError> {
    let mut p = Point::new();
    for part in src.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| usage(format!("expected name=value, got `{}`", part)))?;
        let name = name.trim();
        if !chart.contains(name) {
            return Err(usage(format!("`{}` is not a coordinate of the chart", name)));
        }
        let value: f64 = value.trim().parse().map_err(|_| usage(format!("bad number in `{}`", part)))?;
        p.insert(name.to_string(), value);
    }
    Ok(p)
}

fn random_points(structure: &str, chart: &Chart, rng: &mut ChaCha8Rng, count: usize) -> Vec<Point> {
    match structure {
        "so3-liepoisson" => sample_coalgebra_points(rng, count).into_iter().map(coalgebra_point).collect(),
        "so3-aa" => sample_chart_points(rng, count).into_iter().map(|[r, x1, g, a]| aa_point(r, x1, g, a)).collect(),
        _ => (0..count)
            .map(|_| {
                chart
                    .coords()
                    .iter()
                    .map(|c| {
                        let v = match c.kind {
                            CoordKind::Periodic { period } => rng.gen_range(0.0..period),
                            _ => rng.gen_range(-2.0..2.0),
                        };
                        (c.name.clone(), v)
                    })
                    .collect()
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct BracketArgs {
    pub f: String,
    pub g: String,
    pub structure: Option<String>,
    pub bivector: Option<PathBuf>,
    pub at: Vec<String>,
    pub samples: usize,
}

#[derive(Serialize)]
struct Sample {
    point: Point,
    value: f64,
}

#[derive(Serialize)]
struct BracketReport {
    structure: String,
    f: String,
    g: String,
    bracket: String,
    seed: u64,
    samples: Vec<Sample>,
}

pub fn cmd_bracket(s: &Settings, a: &BracketArgs) -> Result<Outcome, CliError> {
    let (name, w) = match &a.bivector {
        Some(path) => {
            let doc = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read bivector {}: {}", path.display(), e)))?;
            (path.display().to_string(), PoissonBivector::from_json(&doc).map_err(usage)?)
        }
        None => {
            let name = a.structure.clone().unwrap_or_else(|| STRUCTURES[0].to_string());
            let w = structure(&name, s.inertia)?;
            (name, w)
        }
    };
    let chart = w.chart().clone();
    let constants = [("I", s.inertia)];
    let f = parse_with_constants(&a.f, &chart, &constants).map_err(usage)?;
    let g = parse_with_constants(&a.g, &chart, &constants).map_err(usage)?;
    let b = bracket(&f, &g, &w).map_err(usage)?;
    let points = if a.at.is_empty() {
        random_points(&name, &chart, &mut ChaCha8Rng::seed_from_u64(s.seed), a.samples)
    } else {
        a.at.iter().map(|p| parse_point(p, &chart)).collect::<Result<_, _>>()?
    };
    let samples = points
        .into_iter()
        .map(|point| Ok(Sample { value: b.evaluate(&point).map_err(usage)?, point }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let report =
        BracketReport { structure: name, f: f.to_string(), g: g.to_string(), bracket: b.to_string(), seed: s.seed, samples };
    let names: Vec<&str> = chart.names().collect();
    let rows = report.samples.iter().map(|smp| {
        names
            .iter()
            .map(|n| smp.point.get(*n).map_or(String::new(), |v| format!("{:?}", v)))
            .chain([format!("{:?}", smp.value)])
            .collect::<Vec<_>>()
    });
    let header: Vec<&str> = names.iter().copied().chain(["value"]).collect();
    let body = if s.pretty {
        let mut t = format!("{{{}, {}}} = {}\n\n", report.f, report.g, report.bracket);
        t += &table(&header, &rows.collect::<Vec<_>>());
        t
    } else {
        match s.format {
            Format::Json => json(&report),
            Format::Csv => csv_text(&header, rows),
        }
    };
    Ok(Outcome::new(body, true))
}

/// Phase spaces available to `spectrum` and `dirac`.
pub fn phase_space(name: &str) -> Result<PhaseSpace, CliError> {
    match name {
        "so3" => Ok(PhaseSpace::so3()),
        "canonical" => Ok(PhaseSpace::canonical()),
        other => Err(usage(format!("unknown phase space `{}`; expected so3 or canonical", other))),
    }
}

/// Parameters on the pairs mentioned by `exprs`, with `λ` broadcast when a
/// single value is given.
fn params_for(s: &Settings, ps: &PhaseSpace, exprs: &[&ScalarExpr], points: usize) -> Result<QuantizationParams, CliError> {
    let names: Vec<String> = exprs.iter().flat_map(|e| e.coordinates()).collect();
    let ps = ps.restrict(names.iter().map(String::as_str));
    let rank = ps.torus_rank();
    let lambda = match s.lambda.len() {
        1 => vec![s.lambda[0]; rank],
        n if n == rank => s.lambda.clone(),
        n => return Err(usage(format!("expected 1 or {} lambda values, got {}", rank, n))),
    };
    let grid = vec![GridSpec { half_width: s.grid_l, points }; ps.line_pairs().count()];
    QuantizationParams::new(ps, lambda, s.kmax, grid).map_err(usage)
}

#[derive(Debug, Clone, Default)]
pub struct SpectrumArgs {
    pub hamiltonian: Option<String>,
    pub phase_space: Option<String>,
    pub matrix_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SpectrumRow {
    k: Value,
    value: f64,
    mult: usize,
}

#[derive(Serialize)]
struct SpectrumReport {
    params: QuantizationParams,
    observable: String,
    spectrum: Vec<Level>,
    rows: Vec<SpectrumRow>,
}

/// Default spectrum observable: the spherical top.
pub const DEFAULT_HAMILTONIAN: &str = "0.5*I*r^2";

pub fn cmd_spectrum(s: &Settings, a: &SpectrumArgs) -> Result<Outcome, CliError> {
    let ps = phase_space(a.phase_space.as_deref().unwrap_or("so3"))?;
    let src = a.hamiltonian.as_deref().unwrap_or(DEFAULT_HAMILTONIAN);
    let h = parse_with_constants(src, &ps.chart(), &[("I", s.inertia)]).map_err(usage)?;
    let params = params_for(s, &ps, &[&h], s.grid_n)?;
    let op = hamiltonian_operator(&h, &params).map_err(usage)?;
    if let Some(path) = &a.matrix_out {
        std::fs::write(path, op.to_csv()).map_err(|e| usage(format!("cannot write {}: {}", path.display(), e)))?;
    }
    let levels = spectrum(&op, None).map_err(CliError::failed)?;
    let rank = params.phase_space.torus_rank();
    let rows: Vec<SpectrumRow> = mode_spectrum(&op)
        .map_err(CliError::failed)?
        .into_iter()
        .map(|l| SpectrumRow {
            k: if rank == 1 { Value::from(l.mode[0]) } else { Value::from(l.mode) },
            value: l.value,
            mult: l.mult,
        })
        .collect();
    let report = SpectrumReport { params, observable: h.to_string(), spectrum: levels, rows };
    let k_text = |k: &Value| match k {
        Value::Array(v) => v.iter().map(Value::to_string).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    };
    let cells: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![k_text(&r.k), format!("{:?}", r.value), r.mult.to_string()])
        .collect();
    let header = ["k", "value", "mult"];
    let body = if s.pretty {
        let mut t = format!("H = {}\n\n", report.observable);
        t += &table(&header, &cells);
        t += "\nlevels:\n";
        for l in &report.spectrum {
            writeln!(t, "  {:?} x{}", l.value, l.mult).unwrap();
        }
        t
    } else {
        match s.format {
            Format::Json => json(&report),
            Format::Csv => csv_text(&header, cells),
        }
    };
    Ok(Outcome::new(body, true))
}

#[derive(Debug, Clone, Default)]
pub struct DiracArgs {
    pub f: String,
    pub g: String,
    pub ladder: Option<Vec<usize>>,
    pub phase_space: Option<String>,
}

#[derive(Serialize)]
struct DiracOutput {
    f: String,
    g: String,
    bracket: String,
    seed: u64,
    points: Vec<usize>,
    spacings: Vec<f64>,
    residuals: Vec<f64>,
    order: Option<f64>,
    exact: bool,
    pass: bool,
}

/// Fitted orders at or above this pass.
pub const MIN_ORDER: f64 = 1.8;

pub fn cmd_dirac(s: &Settings, a: &DiracArgs) -> Result<Outcome, CliError> {
    let ps = phase_space(a.phase_space.as_deref().unwrap_or("canonical"))?;
    let chart = ps.chart();
    let f_expr = parse_with_constants(&a.f, &chart, &[("I", s.inertia)]).map_err(usage)?;
    let g_expr = parse_with_constants(&a.g, &chart, &[("I", s.inertia)]).map_err(usage)?;
    let params = params_for(s, &ps, &[&f_expr, &g_expr], s.grid_n)?;
    let f = AffineObservable::from_expr(&f_expr, &params.phase_space).map_err(usage)?;
    let g = AffineObservable::from_expr(&g_expr, &params.phase_space).map_err(usage)?;
    let bracket = f.bracket(&g).map_err(usage)?.to_expr().to_string();
    let ladder = a.ladder.clone().unwrap_or_else(|| DIRAC_LADDER.to_vec());
    if ladder.len() < 2 && !params.grid.is_empty() {
        return Err(usage("the grid ladder needs at least two resolutions"));
    }
    let out = if params.grid.is_empty() {
        let r = dirac_residual(&f, &g, &params, s.seed).map_err(usage)?;
        let residual = r.residual.max(r.column_sum);
        DiracOutput {
            f: f_expr.to_string(),
            g: g_expr.to_string(),
            bracket,
            seed: s.seed,
            points: vec![],
            spacings: vec![],
            residuals: vec![residual],
            order: None,
            exact: residual < 1e-12,
            pass: residual < 1e-12,
        }
    } else {
        let c = dirac_convergence(&f, &g, &params, &ladder, s.seed).map_err(usage)?;
        let order = c.order.is_finite().then_some(c.order);
        DiracOutput {
            f: f_expr.to_string(),
            g: g_expr.to_string(),
            bracket,
            seed: s.seed,
            pass: c.exact || order.is_some_and(|o| o >= MIN_ORDER),
            points: c.points,
            spacings: c.spacings,
            residuals: c.residuals,
            order,
            exact: c.exact,
        }
    };
    let header = ["n", "h", "residual"];
    let cells: Vec<Vec<String>> = out
        .residuals
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                out.points.get(i).map_or(String::new(), usize::to_string),
                out.spacings.get(i).map_or(String::new(), |h| format!("{:?}", h)),
                format!("{:e}", r),
            ]
        })
        .collect();
    let body = if s.pretty {
        let mut t = format!("[{}^, {}^] + i ({})^\n\n", out.f, out.g, out.bracket);
        t += &table(&header, &cells);
        let order = out.order.map_or("n/a".to_string(), |o| format!("{:.3}", o));
        writeln!(t, "\norder {}, {}", order, if out.pass { "pass" } else { "FAILED" }).unwrap();
        t
    } else {
        match s.format {
            Format::Json => json(&out),
            Format::Csv => csv_text(&header, cells),
        }
    };
    Ok(Outcome::new(body, out.pass))
}
