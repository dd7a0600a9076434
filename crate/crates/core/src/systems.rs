//! Thermodynamic systems: a potential over ordered extensive variables.
//!
//! Two black-hole systems are built in ([`ThermoSystem::kerr_newman`] and
//! [`ThermoSystem::reissner_nordstrom_d`]); anything else comes from a JSON
//! system file:
//!
//! ```json
//! {
//!   "name": "rn-like",
//!   "potential": "S^D/2 + Q^2/(4*D*S^D)",
//!   "variables": ["S", "Q"],
//!   "parameters": {"D": 0.5},
//!   "weights": {"beta": 1, "powers": {"S": 0.5, "Q": 1}},
//!   "domain": {"S": [0.5, 2]}
//! }
//! ```
//!
//! `weights` and `domain` are optional. Two further optional keys name the
//! potential (`"symbol"`) and the intensives (`"intensives": {"S": "T"}`).

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::expr::{evaluate_hessian, parse, Expression, Params, Point, Symbols};
use crate::homogeneity::{euler_residual, WeightAssignment};

/// Sampling box used for half-open or unbounded domains.
pub const DEFAULT_SAMPLE_RANGE: (f64, f64) = (0.5, 2.0);

/// Points with |Φ| below this are rejected by the sampler.
pub const MIN_SAMPLED_POTENTIAL: f64 = 1e-10;

/// Declared weights must satisfy the Euler identity to this relative residual.
pub const DECLARED_WEIGHTS_TOL: f64 = 1e-10;

const VALIDATION_POINTS: usize = 20;
const VALIDATION_SEED: u64 = 0x5eed;

/// Open interval `(lo, hi)` for one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const POSITIVE: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    /// Closed box actually sampled for this domain.
    pub fn sampling_range(&self) -> (f64, f64) {
        let (a, b) = DEFAULT_SAMPLE_RANGE;
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo.max(0.0) + a, self.lo.max(0.0) + b),
            (false, true) => (self.hi.min(0.0) - b, self.hi.min(0.0) - a),
            (false, false) => (a, b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThermoSystem {
    name: String,
    potential_symbol: String,
    variables: Vec<String>,
    intensive_names: Vec<String>,
    parameters: Params,
    expression: Expression,
    declared_weights: Option<WeightAssignment>,
    domain: Vec<Interval>,
    gradient: Vec<Expression>,
    second: Vec<Vec<Expression>>,
}

impl PartialEq for ThermoSystem {
    fn eq(&self, other: &Self) -> bool {
        // derivative tables are functions of the remaining fields
        self.name == other.name
            && self.potential_symbol == other.potential_symbol
            && self.variables == other.variables
            && self.intensive_names == other.intensive_names
            && self.parameters == other.parameters
            && self.expression == other.expression
            && self.declared_weights == other.declared_weights
            && self.domain == other.domain
    }
}

/// Builder-style description consumed by [`ThermoSystem::new`].
#[derive(Debug, Clone)]
pub struct SystemDef {
    pub name: String,
    pub potential_symbol: String,
    pub potential: String,
    pub variables: Vec<String>,
    pub intensive_names: Option<Vec<String>>,
    pub parameters: Params,
    pub weights: Option<(f64, Vec<f64>)>,
    pub domain: Option<Vec<Interval>>,
}

impl SystemDef {
    pub fn new(name: &str, potential: &str, variables: &[&str]) -> Self {
        SystemDef {
            name: name.to_string(),
            potential_symbol: "Phi".to_string(),
            potential: potential.to_string(),
            variables: variables.iter().map(|v| v.to_string()).collect(),
            intensive_names: None,
            parameters: Params::new(),
            weights: None,
            domain: None,
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn weights(mut self, beta: f64, powers: &[f64]) -> Self {
        self.weights = Some((beta, powers.to_vec()));
        self
    }

    pub fn symbol(mut self, symbol: &str) -> Self {
        self.potential_symbol = symbol.to_string();
        self
    }

    pub fn intensives(mut self, names: &[&str]) -> Self {
        self.intensive_names = Some(names.iter().map(|v| v.to_string()).collect());
        self
    }

    pub fn build(self) -> Result<ThermoSystem> {
        ThermoSystem::new(self)
    }
}

impl ThermoSystem {
    pub fn new(def: SystemDef) -> Result<Self> {
        let SystemDef {
            name,
            potential_symbol,
            potential,
            variables,
            intensive_names,
            parameters,
            weights,
            domain,
        } = def;

        if variables.is_empty() {
            return Err(Error::Validation("variable list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !seen.insert(v.as_str()) {
                return Err(Error::Validation(format!("duplicate variable `{v}`")));
            }
            if parameters.contains_key(v) {
                return Err(Error::Validation(format!(
                    "`{v}` is both a variable and a parameter"
                )));
            }
        }
        if let Some((k, v)) = parameters.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("parameter `{k}` = {v} is not finite")));
        }
        let intensive_names = match intensive_names {
            Some(names) if names.len() != variables.len() => {
                return Err(Error::Validation(format!(
                    "{} intensive names for {} variables",
                    names.len(),
                    variables.len()
                )))
            }
            Some(names) => names,
            None => variables.iter().map(|v| format!("I_{v}")).collect(),
        };
        let domain = match domain {
            Some(d) if d.len() != variables.len() => {
                return Err(Error::Validation("domain does not match variables".into()))
            }
            Some(d) => d,
            None => vec![Interval::POSITIVE; variables.len()],
        };
        for (v, iv) in variables.iter().zip(&domain) {
            if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo >= iv.hi {
                return Err(Error::Validation(format!(
                    "empty domain ({}, {}) for `{v}`",
                    iv.lo, iv.hi
                )));
            }
        }

        let symbols = Symbols::new(variables.iter().cloned(), parameters.keys().cloned());
        let expression = parse(&potential, &symbols)?;
        let gradient: Vec<Expression> = variables
            .iter()
            .map(|v| expression.differentiate(v))
            .collect();
        let second = gradient
            .iter()
            .map(|d| variables.iter().map(|v| d.differentiate(v)).collect())
            .collect();

        let declared_weights = weights
            .map(|(beta, powers)| WeightAssignment::new(beta, variables.clone(), powers))
            .transpose()?;

        let sys = ThermoSystem {
            name,
            potential_symbol,
            variables,
            intensive_names,
            parameters,
            expression,
            declared_weights: None,
            domain,
            gradient,
            second,
        };
        match declared_weights {
            None => Ok(sys),
            Some(w) => {
                sys.validate_weights(&w)?;
                Ok(ThermoSystem {
                    declared_weights: Some(w),
                    ..sys
                })
            }
        }
    }

    fn validate_weights(&self, w: &WeightAssignment) -> Result<()> {
        let points = self.sample_points(VALIDATION_POINTS, VALIDATION_SEED, ExecMode::Sequential)?;
        let mut worst = 0.0_f64;
        for pt in &points {
            worst = worst.max(euler_residual(self, w, pt)?);
        }
        if worst > DECLARED_WEIGHTS_TOL {
            return Err(Error::Validation(format!(
                "declared weights violate the Euler identity (max relative residual {worst:.3e} > {DECLARED_WEIGHTS_TOL:e})"
            )));
        }
        Ok(())
    }

    /// Kerr–Newman mass M(S, J, Q) with β = 1 weights p̄ = (1/2, 1/2, 1).
    pub fn kerr_newman() -> ThermoSystem {
        SystemDef::new(
            "kerr-newman",
            "sqrt(2*S + (J^2 + Q^4/4)/(8*S) + Q^2/2)",
            &["S", "J", "Q"],
        )
        .symbol("M")
        .intensives(&["T", "Omega", "phi"])
        .weights(1.0, &[0.5, 0.5, 1.0])
        .build()
        .expect("built-in Kerr-Newman system is valid")
    }

    /// d-dimensional Reissner–Nordström mass M(S, Q), D = (d-3)/(d-2),
    /// with β = 1 weights p̄ = (D, 1).
    pub fn reissner_nordstrom_d(d: u32) -> Result<ThermoSystem> {
        if d < 4 {
            return Err(Error::Validation(format!(
                "Reissner-Nordstrom dimension must be at least 4, got {d}"
            )));
        }
        let dd = (f64::from(d) - 3.0) / (f64::from(d) - 2.0);
        SystemDef::new(
            &format!("reissner-nordstrom-d{d}"),
            "S^D/2 + Q^2/(4*D*S^D)",
            &["S", "Q"],
        )
        .symbol("M")
        .intensives(&["T", "phi"])
        .param("d", f64::from(d))
        .param("D", dd)
        .weights(1.0, &[dd, 1.0])
        .build()
    }

    /// Parses and validates a JSON system file.
    pub fn load_system(contents: &[u8]) -> Result<ThermoSystem> {
        let file: SystemFile = serde_json::from_slice(contents).map_err(|e| {
            Error::SystemFile(e.to_string())
        })?;
        file.into_system()
    }

    pub fn to_json(&self) -> String {
        let file = SystemFile::from_system(self);
        serde_json::to_string_pretty(&file).expect("system file serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn potential_symbol(&self) -> &str {
        &self.potential_symbol
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn intensive_names(&self) -> &[String] {
        &self.intensive_names
    }

    pub fn parameters(&self) -> &Params {
        &self.parameters
    }

    pub fn expression(&self) -> &Expression {
        &self.expression
    }

    pub fn derivative_expressions(&self) -> &[Expression] {
        &self.gradient
    }

    pub fn declared_weights(&self) -> Option<&WeightAssignment> {
        self.declared_weights.as_ref()
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownIdentifier(name.to_string()))
    }

    /// Point from values in variable order.
    pub fn point(&self, values: &[f64]) -> Result<Point> {
        Point::from_ordered(&self.variables, values)
    }

    pub fn coordinates(&self, pt: &Point) -> Result<Vec<f64>> {
        pt.ordered(&self.variables)
    }

    pub fn evaluate(&self, pt: &Point) -> Result<f64> {
        self.expression.evaluate(pt, &self.parameters)
    }

    /// I_a = ∂Φ/∂E^a in variable order.
    pub fn intensives(&self, pt: &Point) -> Result<Vec<f64>> {
        self.gradient
            .iter()
            .map(|g| g.evaluate(pt, &self.parameters))
            .collect()
    }

    pub fn intensives_map(&self, pt: &Point) -> Result<BTreeMap<String, f64>> {
        Ok(self
            .variables
            .iter()
            .cloned()
            .zip(self.intensives(pt)?)
            .collect())
    }

    /// Symmetrized Hessian in variable order.
    pub fn hessian(&self, pt: &Point) -> Result<Vec<Vec<f64>>> {
        evaluate_hessian(&self.second, pt, &self.parameters)
    }

    /// Deterministic pseudo-random interior points.
    ///
    /// Candidate `k` is drawn from ChaCha stream `k` of `seed`; candidates
    /// whose potential or intensives fail to evaluate, or with
    /// |Φ| < [`MIN_SAMPLED_POTENTIAL`], are skipped. The accepted points are
    /// the first `count` valid candidates in index order, so the result does
    /// not depend on `mode`.
    pub fn sample_points(&self, count: usize, seed: u64, mode: ExecMode) -> Result<Vec<Point>> {
        const MAX_CANDIDATES_PER_POINT: usize = 200;
        let budget = count.max(1) * MAX_CANDIDATES_PER_POINT;
        let mut accepted = Vec::with_capacity(count);
        let mut start = 0;
        while accepted.len() < count && start < budget {
            let batch = (2 * (count - accepted.len())).max(16).min(budget - start);
            let candidates = map_indexed(mode, batch, |k| self.candidate(seed, (start + k) as u64));
            accepted.extend(candidates.into_iter().flatten().take(count - accepted.len()));
            start += batch;
        }
        if accepted.is_empty() && count > 0 {
            return Err(Error::Sampling(format!(
                "no valid point among {budget} candidates for `{}`",
                self.name
            )));
        }
        if accepted.len() < count {
            return Err(Error::Sampling(format!(
                "only {} of {count} requested points are in the domain of `{}`",
                accepted.len(),
                self.name
            )));
        }
        Ok(accepted)
    }

    fn candidate(&self, seed: u64, index: u64) -> Option<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let values: Vec<f64> = self
            .domain
            .iter()
            .map(|iv| {
                let (lo, hi) = iv.sampling_range();
                rng.random_range(lo..hi)
            })
            .collect();
        let pt = self.point(&values).ok()?;
        let phi = self.evaluate(&pt).ok()?;
        if phi.abs() < MIN_SAMPLED_POTENTIAL {
            return None;
        }
        self.intensives(&pt).ok()?;
        Some(pt)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    beta: f64,
    powers: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    potential: String,
    variables: Vec<String>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intensives: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<WeightsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<BTreeMap<String, [f64; 2]>>,
}

impl SystemFile {
    fn into_system(self) -> Result<ThermoSystem> {
        let known: BTreeSet<&str> = self.variables.iter().map(String::as_str).collect();
        let check_keys = |what: &str, keys: Vec<&String>| -> Result<()> {
            match keys.into_iter().find(|k| !known.contains(k.as_str())) {
                Some(k) => Err(Error::Validation(format!("{what} names unknown variable `{k}`"))),
                None => Ok(()),
            }
        };

        let weights = match &self.weights {
            None => None,
            Some(w) => {
                check_keys("weights.powers", w.powers.keys().collect())?;
                let powers = self
                    .variables
                    .iter()
                    .map(|v| {
                        w.powers.get(v).copied().ok_or_else(|| {
                            Error::Validation(format!("weights.powers is missing `{v}`"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Some((w.beta, powers))
            }
        };
        let intensive_names = match &self.intensives {
            None => None,
            Some(map) => {
                check_keys("intensives", map.keys().collect())?;
                Some(
                    self.variables
                        .iter()
                        .map(|v| map.get(v).cloned().unwrap_or_else(|| format!("I_{v}")))
                        .collect(),
                )
            }
        };
        let domain = match &self.domain {
            None => None,
            Some(map) => {
                check_keys("domain", map.keys().collect())?;
                Some(
                    self.variables
                        .iter()
                        .map(|v| match map.get(v) {
                            Some([lo, hi]) => Interval { lo: *lo, hi: *hi },
                            None => Interval::POSITIVE,
                        })
                        .collect(),
                )
            }
        };

        ThermoSystem::new(SystemDef {
            name: self.name,
            potential_symbol: self.symbol.unwrap_or_else(|| "Phi".to_string()),
            potential: self.potential,
            variables: self.variables,
            intensive_names,
            parameters: self.parameters,
            weights,
            domain,
        })
    }

    fn from_system(sys: &ThermoSystem) -> SystemFile {
        let default_intensives = sys
            .variables
            .iter()
            .zip(&sys.intensive_names)
            .all(|(v, i)| *i == format!("I_{v}"));
        let domain: BTreeMap<String, [f64; 2]> = sys
            .variables
            .iter()
            .zip(&sys.domain)
            .filter(|(_, iv)| iv.lo.is_finite() && iv.hi.is_finite())
            .map(|(v, iv)| (v.clone(), [iv.lo, iv.hi]))
            .collect();
        SystemFile {
            name: sys.name.clone(),
            symbol: Some(sys.potential_symbol.clone()),
            potential: sys.expression.to_string(),
            variables: sys.variables.clone(),
            parameters: sys.parameters.clone(),
            intensives: (!default_intensives).then(|| {
                sys.variables
                    .iter()
                    .cloned()
                    .zip(sys.intensive_names.iter().cloned())
                    .collect()
            }),
            weights: sys.declared_weights.as_ref().map(|w| WeightsFile {
                beta: w.beta(),
                powers: sys
                    .variables
                    .iter()
                    .cloned()
                    .zip(w.powers().iter().copied())
                    .collect(),
            }),
            domain: (!domain.is_empty()).then_some(domain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kerr_newman_at_unit_entropy() {
        let kn = ThermoSystem::kerr_newman();
        let m = kn.evaluate(&kn.point(&[1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!((m - 2f64.sqrt()).abs() < 1e-15);
        assert!(kn.domain()[0].lo >= 0.0);
        assert!(kn.declared_weights().is_some());
    }

    #[test]
    fn reissner_nordstrom_d4_values() {
        let rn = ThermoSystem::reissner_nordstrom_d(4).unwrap();
        let pt = rn.point(&[1.0, 0.5]).unwrap();
        assert!((rn.evaluate(&pt).unwrap() - 0.625).abs() < 1e-15);
        let i = rn.intensives(&pt).unwrap();
        assert!((i[0] - 0.1875).abs() < 1e-15);
        assert!((i[1] - 0.5).abs() < 1e-15);
        // extremal point
        let i = rn.intensives(&rn.point(&[1.0, 1.0]).unwrap()).unwrap();
        assert!(i[0].abs() < 1e-15);
    }

    #[test]
    fn reissner_nordstrom_rejects_low_dimension() {
        assert!(ThermoSystem::reissner_nordstrom_d(3).is_err());
        assert!(ThermoSystem::reissner_nordstrom_d(11).is_ok());
    }

    #[test]
    fn file_round_trip_reproduces_builtins() {
        let kn = ThermoSystem::kerr_newman();
        let back = ThermoSystem::load_system(kn.to_json().as_bytes()).unwrap();
        assert_eq!(back, kn);
        let rn = ThermoSystem::reissner_nordstrom_d(7).unwrap();
        let back = ThermoSystem::load_system(rn.to_json().as_bytes()).unwrap();
        assert_eq!(back, rn);
    }

    #[test]
    fn wrong_declared_weights_are_rejected() {
        let text = r#"{"name": "kn", "potential": "sqrt(2*S + (J^2 + Q^4/4)/(8*S) + Q^2/2)",
            "variables": ["S", "J", "Q"],
            "weights": {"beta": 1, "powers": {"S": 1, "J": 1, "Q": 1}}}"#;
        let err = ThermoSystem::load_system(text.as_bytes()).unwrap_err();
        assert!(matches!(&err, Error::Validation(m) if m.contains("Euler")), "{err}");
    }

    #[test]
    fn duplicate_variables_are_rejected() {
        let text = r#"{"name": "x", "potential": "S*S", "variables": ["S", "S"]}"#;
        let err = ThermoSystem::load_system(text.as_bytes()).unwrap_err();
        assert!(matches!(&err, Error::Validation(m) if m.contains("duplicate")), "{err}");
    }

    #[test]
    fn malformed_files_report_location() {
        let err = ThermoSystem::load_system(b"{\"name\": \"x\",\n \"potential\": }").unwrap_err();
        assert!(matches!(&err, Error::SystemFile(m) if m.contains("line 2")), "{err}");
        let text = r#"{"name": "x", "potential": "S +", "variables": ["S"]}"#;
        assert!(matches!(
            ThermoSystem::load_system(text.as_bytes()),
            Err(Error::Syntax { .. })
        ));
        let text = r#"{"name": "x", "potential": "S", "variables": ["S"], "extra": 1}"#;
        assert!(ThermoSystem::load_system(text.as_bytes()).is_err());
        let text = r#"{"name": "x", "potential": "S*a", "variables": ["S"], "parameters": {"S": 1}}"#;
        assert!(ThermoSystem::load_system(text.as_bytes()).is_err());
    }

    #[test]
    fn custom_domain_is_sampled() {
        let text = r#"{"name": "x", "potential": "log(S)", "variables": ["S"], "domain": {"S": [3, 4]}}"#;
        let sys = ThermoSystem::load_system(text.as_bytes()).unwrap();
        let pts = sys.sample_points(30, 1, ExecMode::Sequential).unwrap();
        assert!(pts.iter().all(|p| (3.0..4.0).contains(&p.get("S").unwrap())));
    }

    #[test]
    fn sampling_is_deterministic_across_modes() {
        let kn = ThermoSystem::kerr_newman();
        let a = kn.sample_points(40, 9, ExecMode::Sequential).unwrap();
        let b = kn.sample_points(40, 9, ExecMode::Parallel).unwrap();
        assert_eq!(a, b);
        let c = kn.sample_points(40, 10, ExecMode::Sequential).unwrap();
        assert_ne!(a, c);
        for p in &a {
            for (_, v) in p.iter() {
                assert!((0.5..2.0).contains(&v));
            }
        }
    }

    #[test]
    fn sampler_skips_points_outside_domain() {
        // log(S - 1) is only defined for S > 1 inside [0.5, 2]
        let sys = SystemDef::new("half", "log(S - 1)", &["S"]).build().unwrap();
        let pts = sys.sample_points(25, 3, ExecMode::Sequential).unwrap();
        assert!(pts.iter().all(|p| p.get("S").unwrap() > 1.0));
        let never = SystemDef::new("never", "sqrt(0 - S)", &["S"]).build().unwrap();
        assert!(matches!(
            never.sample_points(5, 3, ExecMode::Sequential),
            Err(Error::Sampling(_))
        ));
    }
}
