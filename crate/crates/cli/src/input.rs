use std::fs;

use gtd_core::geometry::{Chi, MetricSpec};
use gtd_core::homogeneity::{detect_weights, Status};
use gtd_core::scan::Axis;
use gtd_core::{ExecMode, Point, ThermoSystem, WeightAssignment};
use serde_json::Value;

use crate::{ChiArg, CliError, Common, EXIT_NO_HOMOGENEITY};

/// Samples used when weights have to be detected for another command.
pub const DETECTION_SAMPLES: usize = 32;

pub fn system(c: &Common) -> Result<ThermoSystem, CliError> {
    let params = pairs(&c.params, "--param")?;
    match (&c.system, &c.file) {
        (Some(name), None) => builtin(name, &params),
        (None, Some(path)) => {
            let bytes = fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let loaded = if params.is_empty() {
                ThermoSystem::load_system(&bytes)
            } else {
                with_params(&bytes, &params)
            };
            loaded.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
        }
        _ => Err(CliError::input("give exactly one of --system or --file")),
    }
}

fn builtin(name: &str, params: &[(String, f64)]) -> Result<ThermoSystem, CliError> {
    match name {
        "kerr-newman" | "kn" => {
            if let Some((k, _)) = params.first() {
                return Err(CliError::input(format!("kerr-newman has no parameter `{k}`")));
            }
            Ok(ThermoSystem::kerr_newman())
        }
        "rn" | "reissner-nordstrom" => {
            let mut d = None;
            for (k, v) in params {
                if k != "d" {
                    return Err(CliError::input(format!("rn takes only the parameter d, not `{k}`")));
                }
                d = Some(*v);
            }
            let d = d.ok_or_else(|| CliError::input("rn needs --param d=<dimension>"))?;
            if d.fract() != 0.0 || !(4.0..=f64::from(u32::MAX)).contains(&d) {
                return Err(CliError::input(format!("d must be an integer >= 4, got {d}")));
            }
            Ok(ThermoSystem::reissner_nordstrom_d(d as u32)?)
        }
        other => Err(CliError::input(format!("unknown system `{other}` (expected kerr-newman or rn)"))),
    }
}

/// Reloads a system file with `parameters` entries overridden.
fn with_params(bytes: &[u8], params: &[(String, f64)]) -> gtd_core::Result<ThermoSystem> {
    let mut doc: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(_) => return ThermoSystem::load_system(bytes),
    };
    if let Some(obj) = doc.as_object_mut() {
        let table = obj.entry("parameters").or_insert_with(|| Value::Object(Default::default()));
        if let Some(table) = table.as_object_mut() {
            for (k, v) in params {
                table.insert(k.clone(), (*v).into());
            }
        }
    }
    ThermoSystem::load_system(doc.to_string().as_bytes())
}

/// Parses `a=1,b=2` lists, possibly spread over repeated flags.
pub fn pairs(items: &[String], flag: &str) -> Result<Vec<(String, f64)>, CliError> {
    let mut out = Vec::new();
    for item in items {
        for part in item.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("{flag}: expected NAME=VALUE, got `{part}`")))?;
            out.push((k.trim().to_string(), number(v, flag)?));
        }
    }
    Ok(out)
}

fn number(text: &str, flag: &str) -> Result<f64, CliError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("{flag}: `{}` is not a number", text.trim())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::input(format!("{flag}: `{}` is not finite", text.trim())))
    }
}

pub fn list(text: &str, flag: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let values = text.split(',').map(|v| number(v, flag)).collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(CliError::input(format!("{flag}: expected {n} values, got {}", values.len())));
    }
    Ok(values)
}

/// Maps one `VAR=V,...` flag onto the system's variables.
pub fn point(sys: &ThermoSystem, text: &str) -> Result<Point, CliError> {
    let given = pairs(std::slice::from_ref(&text.to_string()), "--point")?;
    for (k, _) in &given {
        if sys.var_index(k).is_err() {
            return Err(CliError::input(format!("--point: `{k}` is not a variable of {}", sys.name())));
        }
    }
    let pt = Point::new(given)?;
    if pt.len() != sys.arity() {
        let missing: Vec<_> = sys.variables().iter().filter(|v| pt.get(v).is_none()).cloned().collect();
        return Err(CliError::input(format!("--point: missing {}", missing.join(", "))));
    }
    Ok(pt)
}

/// Explicit points, or `samples` seeded points when none are given.
pub fn points(sys: &ThermoSystem, c: &Common, default_samples: usize) -> Result<Vec<Point>, CliError> {
    if c.points.is_empty() {
        let count = c.samples.unwrap_or(default_samples);
        if count == 0 {
            return Err(CliError::input("--samples must be positive"));
        }
        Ok(sys.sample_points(count, c.seed, ExecMode::default())?)
    } else {
        c.points.iter().map(|p| point(sys, p)).collect()
    }
}

/// Weights by precedence: supplied, declared, detected.
pub fn weights(sys: &ThermoSystem, c: &Common) -> Result<(WeightAssignment, &'static str), CliError> {
    if let Some(text) = &c.powers {
        let given = pairs(std::slice::from_ref(text), "--powers")?;
        let mut powers = vec![None; sys.arity()];
        for (k, v) in given {
            let idx = sys
                .var_index(&k)
                .map_err(|_| CliError::input(format!("--powers: `{k}` is not a variable")))?;
            if powers[idx].replace(v).is_some() {
                return Err(CliError::input(format!("--powers: `{k}` given twice")));
            }
        }
        let powers = powers
            .into_iter()
            .zip(sys.variables())
            .map(|(p, v)| p.ok_or_else(|| CliError::input(format!("--powers: missing `{v}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let w = WeightAssignment::for_system(sys, c.beta.unwrap_or(1.0), &powers)?;
        return Ok((w, "supplied"));
    }
    if c.beta.is_some() {
        return Err(CliError::input("--beta needs --powers"));
    }
    if let Some(w) = sys.declared_weights() {
        return Ok((w.clone(), "declared"));
    }
    let count = DETECTION_SAMPLES.max(sys.arity() + 3);
    let report = detect_weights(sys, count, c.seed)?;
    match report.canonical {
        Some(w) if report.status != Status::None => Ok((w, "detected")),
        _ => Err(CliError {
            code: EXIT_NO_HOMOGENEITY,
            message: format!(
                "no quasi-homogeneity weights found for {} (status {})",
                sys.name(),
                report.status.as_str()
            ),
        }),
    }
}

pub fn spec(sys: &ThermoSystem, c: &Common) -> Result<MetricSpec, CliError> {
    let n = sys.arity();
    let chi = match c.chi {
        ChiArg::Delta => Chi::Delta,
        ChiArg::Eta => Chi::Eta,
    };
    let xi = match &c.xi {
        Some(t) => list(t, "--xi", n)?,
        None => vec![1.0; n],
    };
    let lambda = match &c.lambda {
        Some(t) => list(t, "--lambda", n)?,
        None => MetricSpec::unit(n, chi).lambda().to_vec(),
    };
    Ok(MetricSpec::new(lambda, chi, xi)?)
}

pub fn rep(sys: &ThermoSystem, c: &Common) -> Result<usize, CliError> {
    match &c.rep {
        Some(name) => sys
            .var_index(name)
            .map_err(|_| CliError::input(format!("--rep: `{name}` is not a variable of {}", sys.name()))),
        None => Ok(0),
    }
}

pub fn axis(sys: &ThermoSystem, text: &str) -> Result<Axis, CliError> {
    let bad = || CliError::input(format!("--grid: expected VAR=LO:HI:N, got `{text}`"));
    let (var, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, count] = parts[..] else { return Err(bad()) };
    let variable = sys
        .var_index(var.trim())
        .map_err(|_| CliError::input(format!("--grid: `{}` is not a variable", var.trim())))?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(CliError::input("--grid: N must be positive"));
    }
    Ok(Axis {
        variable,
        lo: number(lo, "--grid")?,
        hi: number(hi, "--grid")?,
        count,
    })
}
