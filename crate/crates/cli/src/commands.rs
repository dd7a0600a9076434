use gtd_core::geometry::{base_metric, representation_change, representation_reconstruct, MetricSpec};
use gtd_core::homogeneity::{detect_weights, euler_residual, is_strictly_homogeneous, Status};
use gtd_core::scan::{scan_grid, ScanRow};
use gtd_core::{Error, ExecMode, Point, ThermoSystem, WeightAssignment};
use serde_json::{json, Map, Value};

use crate::input::{self, DETECTION_SAMPLES};
use crate::render::{self, format_sig, SIG_DIGITS};
use crate::{CliError, Common, Format, Outcome, ScanArgs, EXIT_CHECK_FAILED, EXIT_NO_HOMOGENEITY, EXIT_OK, SCHEMA_VERSION};

/// The Euler audit passes when every relative residual is at most this.
pub const EULER_TOL: f64 = 1e-10;
/// Cross-construction residuals must stay below this when c3 holds.
pub const CONSISTENCY_TOL: f64 = 1e-9;

const EULER_SAMPLES: usize = 100;
const POINT_SAMPLES: usize = 10;

pub fn analyze(c: &Common) -> Result<Outcome, CliError> {
    let sys = input::system(c)?;
    let samples = c.samples.unwrap_or(DETECTION_SAMPLES);
    let report = detect_weights(&sys, samples, c.seed)?;
    let powers = report.canonical.as_ref().map(|w| named(&sys, w.normalized().powers()));
    let weights = report.canonical.as_ref().map(|w| named(&sys, w.normalized().weights()));
    let mut doc = header("analyze", &sys);
    doc.insert("samples".into(), samples.into());
    doc.insert("seed".into(), c.seed.into());
    doc.insert("status".into(), report.status.as_str().into());
    doc.insert("null_dimension".into(), report.null_dimension.into());
    doc.insert("powers".into(), powers.unwrap_or(Value::Null));
    doc.insert("weights".into(), weights.unwrap_or(Value::Null));
    doc.insert("strictly_homogeneous".into(), is_strictly_homogeneous(&report).into());
    doc.insert("max_euler_residual".into(), report.max_euler_residual.into());
    doc.insert("max_scaling_residual".into(), report.max_scaling_residual.into());
    doc.insert("singular_values".into(), json!(report.singular_values));
    doc.insert("null_basis".into(), json!(report.basis));
    if let Some(note) = &report.note {
        doc.insert("note".into(), note.as_str().into());
    }
    let code = if report.status == Status::None {
        EXIT_NO_HOMOGENEITY
    } else {
        EXIT_OK
    };
    finish(c, Format::Text, Value::Object(doc), code, None)
}

pub fn euler(c: &Common) -> Result<Outcome, CliError> {
    let sys = input::system(c)?;
    let (w, source) = input::weights(&sys, c)?;
    let pts = input::points(&sys, c, EULER_SAMPLES)?;
    let mut rows = Vec::with_capacity(pts.len());
    let mut csv = csv_header(&sys, &["potential", "beta_potential", "euler_sum", "residual"]);
    let mut worst = 0.0_f64;
    for pt in &pts {
        let phi = sys.evaluate(pt)?;
        let e = sys.coordinates(pt)?;
        let i = sys.intensives(pt)?;
        let sum: f64 = e.iter().zip(&i).zip(w.weights()).map(|((e, i), q)| q * e * i).sum();
        let residual = euler_residual(&sys, &w, pt)?;
        worst = worst.max(residual);
        csv_row(&mut csv, c, &e, &[phi, w.beta() * phi, sum], Some(residual), None);
        rows.push(json!({
            "point": point_doc(&sys, pt),
            "potential": phi,
            "intensives": named_by(sys.intensive_names(), &i),
            "beta_potential": w.beta() * phi,
            "euler_sum": sum,
            "residual": residual,
        }));
    }
    let passed = worst <= EULER_TOL;
    let mut doc = header("euler", &sys);
    doc.insert("weights".into(), weights_doc(&sys, &w, source));
    doc.insert("tolerance".into(), EULER_TOL.into());
    doc.insert("max_residual".into(), worst.into());
    doc.insert("passed".into(), passed.into());
    doc.insert("points".into(), Value::Array(rows));
    let code = if passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    finish(c, Format::Text, Value::Object(doc), code, Some(csv))
}

pub fn metric(c: &Common) -> Result<Outcome, CliError> {
    let sys = input::system(c)?;
    let spec = input::spec(&sys, c)?;
    let pts = input::points(&sys, c, POINT_SAMPLES)?;
    let mut rows = Vec::with_capacity(pts.len());
    for pt in &pts {
        let g = base_metric(&sys, &spec, pt)?;
        rows.push(json!({
            "point": point_doc(&sys, pt),
            "potential": sys.evaluate(pt)?,
            "intensives": named_by(sys.intensive_names(), &sys.intensives(pt)?),
            "g_phi": g.rows(),
            "symmetric": g.is_symmetric(),
            "asymmetry": g.asymmetry(),
            "determinant": g.determinant(),
        }));
    }
    let mut doc = header("metric", &sys);
    doc.insert("spec".into(), spec_doc(&spec));
    doc.insert("points".into(), Value::Array(rows));
    finish(c, Format::Text, Value::Object(doc), EXIT_OK, None)
}

pub fn repchange(c: &Common) -> Result<Outcome, CliError> {
    let sys = input::system(c)?;
    let (w, source) = input::weights(&sys, c)?;
    let spec = input::spec(&sys, c)?;
    let rep = input::rep(&sys, c)?;
    let pts = input::points(&sys, c, POINT_SAMPLES)?;
    let c3 = spec.satisfies_c3();
    let mut worst = 0.0_f64;
    let mut rows = Vec::with_capacity(pts.len());
    for pt in &pts {
        let rc = representation_change(&sys, &spec, &w, rep, pt)?;
        let mut residuals = Map::new();
        for (name, r) in rc.consistency_residuals() {
            residuals.insert(name.into(), r.into());
        }
        let reconstruction = match representation_reconstruct(&sys, &spec, &w, rep, pt) {
            Ok(r) => {
                residuals.insert("reconstruction".into(), r.off_proportionality.into());
                json!({
                    "coordinates": r.coordinates,
                    "intensives": r.intensives,
                    "powers": named_by(&r.coordinates, r.weights.powers()),
                    "euler_residual": r.euler_residual,
                    "scalar": r.scalar,
                    "off_proportionality": r.off_proportionality,
                    "implied_factor": r.implied_factor,
                    "factor_deviation": r.factor_deviation,
                    "condition": r.condition,
                })
            }
            Err(e @ (Error::IllConditioned { .. } | Error::DegenerateConformal(_))) => json!({ "error": e.to_string() }),
            Err(e) => return Err(e.into()),
        };
        let point_worst = residuals.values().filter_map(Value::as_f64).fold(0.0, f64::max);
        worst = worst.max(point_worst);
        let mut row = Map::new();
        row.insert("point".into(), point_doc(&sys, pt));
        row.insert("g_phi".into(), json!(rc.base.rows()));
        row.insert("induced_c1".into(), json!(rc.c1.rows()));
        row.insert("induced_c2".into(), json!(rc.c2.rows()));
        row.insert("c1_c2_difference".into(), rc.c1_c2_difference.into());
        row.insert("factor_c4".into(), rc.c4.factor.into());
        row.insert("c4_residual".into(), rc.c4.residual.into());
        if let Some(b) = &rc.beta1 {
            row.insert("factor_c5".into(), b.factor_c5.into());
            row.insert("factor_c6".into(), b.factor_c6.into());
        }
        if let Some(f7) = rc.c7 {
            row.insert("factor_c7".into(), f7.into());
        }
        row.insert("reconstruction".into(), reconstruction);
        row.insert("residuals".into(), Value::Object(residuals));
        rows.push(Value::Object(row));
    }
    // Without c3 the constructions legitimately differ; that is the report.
    let passed = !c3 || worst <= CONSISTENCY_TOL;
    let mut doc = header("repchange", &sys);
    doc.insert("weights".into(), weights_doc(&sys, &w, source));
    doc.insert("spec".into(), spec_doc(&spec));
    doc.insert("representation".into(), sys.variables()[rep].as_str().into());
    doc.insert("c3".into(), c3.into());
    doc.insert("tolerance".into(), CONSISTENCY_TOL.into());
    doc.insert("max_residual".into(), worst.into());
    doc.insert("passed".into(), passed.into());
    doc.insert("points".into(), Value::Array(rows));
    let code = if passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    finish(c, Format::Text, Value::Object(doc), code, None)
}

pub fn scan(s: &ScanArgs) -> Result<Outcome, CliError> {
    let c = &s.common;
    let sys = input::system(c)?;
    let (w, source) = input::weights(&sys, c)?;
    let spec = input::spec(&sys, c)?;
    let rep = input::rep(&sys, c)?;
    let [x, y] = &s.grid[..] else {
        return Err(CliError::input("scan needs exactly two --grid axes"));
    };
    let (x, y) = (input::axis(&sys, x)?, input::axis(&sys, y)?);
    let fixed = match &c.points[..] {
        [] if sys.arity() == 2 => vec![0.0; 2],
        [] => return Err(CliError::input("scan needs --point for the variables off the grid")),
        [p] => sys.coordinates(&input::point(&sys, p)?)?,
        _ => return Err(CliError::input("scan takes at most one --point")),
    };
    let rows = scan_grid(&sys, &spec, &w, rep, &fixed, &x, &y, ExecMode::default())?;

    let mut csv = csv_header(&sys, &["factor", "det_g_phi", "det_induced", "c1_c2_residual", "c4_residual", "status"]);
    for r in &rows {
        csv_row(&mut csv, c, &r.coordinates, &cells(r), None, Some(&r.status));
    }
    let axis_doc = |a: &gtd_core::scan::Axis| {
        json!({ "variable": sys.variables()[a.variable], "lo": a.lo, "hi": a.hi, "count": a.count })
    };
    let mut doc = header("scan", &sys);
    doc.insert("weights".into(), weights_doc(&sys, &w, source));
    doc.insert("spec".into(), spec_doc(&spec));
    doc.insert("representation".into(), sys.variables()[rep].as_str().into());
    doc.insert("grid".into(), json!([axis_doc(&x), axis_doc(&y)]));
    doc.insert(
        "rows".into(),
        rows.iter()
            .map(|r| {
                json!({
                    "point": named(&sys, &r.coordinates),
                    "factor": r.factor,
                    "det_g_phi": r.det_g_phi,
                    "det_induced": r.det_induced,
                    "c1_c2_residual": r.c1_c2_residual,
                    "c4_residual": r.c4_residual,
                    "status": r.status,
                })
            })
            .collect(),
    );
    finish(c, Format::Csv, Value::Object(doc), EXIT_OK, Some(csv))
}

fn cells(r: &ScanRow) -> [f64; 5] {
    [r.factor, r.det_g_phi, r.det_induced, r.c1_c2_residual, r.c4_residual]
}

fn finish(c: &Common, default: Format, doc: Value, code: u8, csv: Option<String>) -> Result<Outcome, CliError> {
    // Tabular commands render text as a rounded table.
    let body = match (c.format.unwrap_or(default), csv) {
        (Format::Json, _) => render::json(&doc),
        (Format::Text, Some(csv)) if default == Format::Csv => csv,
        (Format::Text, _) => render::text(&doc),
        (Format::Csv, Some(csv)) => csv,
        (Format::Csv, None) => return Err(CliError::input("csv output is available for euler and scan only")),
    };
    Ok(Outcome { code, body })
}

fn header(command: &str, sys: &ThermoSystem) -> Map<String, Value> {
    let mut doc = Map::new();
    doc.insert("schema_version".into(), SCHEMA_VERSION.into());
    doc.insert("command".into(), command.into());
    doc.insert(
        "system".into(),
        json!({
            "name": sys.name(),
            "potential": sys.potential_symbol(),
            "variables": sys.variables(),
            "parameters": sys.parameters(),
        }),
    );
    doc
}

fn named(sys: &ThermoSystem, values: &[f64]) -> Value {
    named_by(sys.variables(), values)
}

fn named_by(names: &[String], values: &[f64]) -> Value {
    Value::Object(names.iter().cloned().zip(values.iter().map(|v| json!(v))).collect())
}

fn point_doc(sys: &ThermoSystem, pt: &Point) -> Value {
    named(sys, &sys.coordinates(pt).unwrap_or_default())
}

fn weights_doc(sys: &ThermoSystem, w: &WeightAssignment, source: &str) -> Value {
    json!({
        "source": source,
        "beta": w.beta(),
        "powers": named(sys, w.powers()),
        "normalized_powers": named(sys, w.normalized().powers()),
    })
}

fn spec_doc(spec: &MetricSpec) -> Value {
    json!({
        "chi": format!("{:?}", spec.chi_kind()).to_lowercase(),
        "lambda": spec.lambda(),
        "xi": spec.xi(),
        "c3": spec.satisfies_c3(),
    })
}

fn csv_header(sys: &ThermoSystem, columns: &[&str]) -> String {
    let mut head: Vec<&str> = sys.variables().iter().map(String::as_str).collect();
    head.extend_from_slice(columns);
    format!("{}\n", head.join(","))
}

/// Full precision, or rounded when text was explicitly requested.
fn csv_row(out: &mut String, c: &Common, coords: &[f64], values: &[f64], last: Option<f64>, status: Option<&str>) {
    let cell = |x: &f64| {
        if c.format == Some(Format::Text) {
            format_sig(*x, SIG_DIGITS)
        } else {
            render::full(*x)
        }
    };
    let mut fields: Vec<String> = coords.iter().chain(values).chain(last.iter()).map(cell).collect();
    fields.extend(status.map(str::to_string));
    out.push_str(&fields.join(","));
    out.push('\n');
}
