//! Quasi-homogeneity of potentials.
//!
//! Φ is quasi-homogeneous of degree β with powers p_a when it is homogeneous
//! of degree β in E′^a = (E^a)^{p_a}, i.e.
//! Φ(λ^{q_1}E¹, …, λ^{q_n}Eⁿ) = λ^β Φ(E) with weights q_a = 1/p_a. The
//! infinitesimal form is the generalized Euler identity
//! βΦ = Σ_a q_a E^a ∂Φ/∂E^a, which is linear in (q, β): detection samples it
//! at many points and takes the null space of the resulting matrix.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::expr::Point;
use crate::linalg::{dot, norm, null_space, reject};
use crate::systems::ThermoSystem;

/// Relative singular-value cutoff for the null space.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-10;
/// Finite-λ residual a detected assignment must stay under.
pub const SCALING_VERIFY_TOL: f64 = 1e-8;
/// λ values used to verify detected weights.
pub const VERIFY_LAMBDAS: [f64; 3] = [0.5, 2.0, 10.0];
/// Guard in the denominator of [`euler_residual`].
pub const RESIDUAL_FLOOR: f64 = 1e-300;
/// Tolerance for deciding that all weights can be made equal.
pub const EQUAL_WEIGHTS_TOL: f64 = 1e-8;
/// Null spaces whose β-direction has squared norm below this carry
/// zero-degree vectors only.
const ZERO_DEGREE_TOL: f64 = 1e-16;

/// Degree β and per-variable powers p_a (with q_a = 1/p_a).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    beta: f64,
    variables: Vec<String>,
    powers: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightAssignment {
    pub fn new(beta: f64, variables: Vec<String>, powers: Vec<f64>) -> Result<Self> {
        if !beta.is_finite() || beta == 0.0 {
            return Err(Error::InvalidWeights(format!("degree must be finite and nonzero, got {beta}")));
        }
        if variables.len() != powers.len() {
            return Err(Error::InvalidWeights(format!(
                "{} powers for {} variables",
                powers.len(),
                variables.len()
            )));
        }
        if let Some((v, p)) = variables
            .iter()
            .zip(&powers)
            .find(|(_, p)| !p.is_finite() || **p == 0.0)
        {
            return Err(Error::InvalidWeights(format!("power of `{v}` must be finite and nonzero, got {p}")));
        }
        let weights = powers.iter().map(|p| 1.0 / p).collect();
        Ok(WeightAssignment {
            beta,
            variables,
            powers,
            weights,
        })
    }

    /// Builds the assignment from weights q_a instead of powers.
    pub fn from_weights(beta: f64, variables: Vec<String>, weights: &[f64]) -> Result<Self> {
        if let Some(q) = weights.iter().find(|q| !q.is_finite() || **q == 0.0) {
            return Err(Error::InvalidWeights(format!("weight {q} has no finite power")));
        }
        Self::new(beta, variables, weights.iter().map(|q| 1.0 / q).collect())
    }

    pub fn for_system(sys: &ThermoSystem, beta: f64, powers: &[f64]) -> Result<Self> {
        Self::new(beta, sys.variables().to_vec(), powers.to_vec())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Weights q_a = 1/p_a.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn power(&self, var: &str) -> Option<f64> {
        let i = self.variables.iter().position(|v| v == var)?;
        Some(self.powers[i])
    }

    pub fn powers_map(&self) -> BTreeMap<String, f64> {
        self.variables
            .iter()
            .cloned()
            .zip(self.powers.iter().copied())
            .collect()
    }

    /// Degree-one form: β′ = 1, p̄_a = β p_a.
    pub fn normalized(&self) -> WeightAssignment {
        if self.beta == 1.0 {
            return self.clone();
        }
        let powers: Vec<f64> = self.powers.iter().map(|p| self.beta * p).collect();
        WeightAssignment::new(1.0, self.variables.clone(), powers)
            .expect("nonzero degree times nonzero powers")
    }

    /// Homogeneity in (E^a)^{γ p_a} of degree β/γ.
    pub fn rescaled(&self, gamma: f64) -> Result<WeightAssignment> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidWeights(format!("rescaling factor must be positive, got {gamma}")));
        }
        WeightAssignment::new(
            self.beta / gamma,
            self.variables.clone(),
            self.powers.iter().map(|p| p * gamma).collect(),
        )
    }

    fn check_system(&self, sys: &ThermoSystem) -> Result<()> {
        if self.variables != sys.variables() {
            return Err(Error::Dimension(format!(
                "weights over {:?} do not match system variables {:?}",
                self.variables,
                sys.variables()
            )));
        }
        Ok(())
    }
}

/// Free-function form of [`WeightAssignment::normalized`].
pub fn normalize_degree(w: &WeightAssignment) -> WeightAssignment {
    w.normalized()
}

/// Free-function form of [`WeightAssignment::rescaled`].
pub fn rescale_weights(w: &WeightAssignment, gamma: f64) -> Result<WeightAssignment> {
    w.rescaled(gamma)
}

/// I_a = ∂Φ/∂E^a at `pt`, keyed by variable.
pub fn intensives(sys: &ThermoSystem, pt: &Point) -> Result<BTreeMap<String, f64>> {
    sys.intensives_map(pt)
}

/// |Σ_a (E^a/p_a) I_a − βΦ| / max(|βΦ|, 1e-300).
pub fn euler_residual(sys: &ThermoSystem, w: &WeightAssignment, pt: &Point) -> Result<f64> {
    w.check_system(sys)?;
    let e = sys.coordinates(pt)?;
    let phi = sys.evaluate(pt)?;
    let i = sys.intensives(pt)?;
    let lhs: f64 = e
        .iter()
        .zip(&i)
        .zip(w.weights())
        .map(|((e, i), q)| q * e * i)
        .sum();
    let rhs = w.beta() * phi;
    Ok((lhs - rhs).abs() / rhs.abs().max(RESIDUAL_FLOOR))
}

/// |Φ(λ^{q_a}E^a) − λ^β Φ(E)| / |λ^β Φ(E)|.
pub fn scaling_residual(sys: &ThermoSystem, w: &WeightAssignment, lambda: f64, pt: &Point) -> Result<f64> {
    w.check_system(sys)?;
    raw_scaling_residual(sys, w.weights(), w.beta(), lambda, pt)
}

fn raw_scaling_residual(sys: &ThermoSystem, q: &[f64], beta: f64, lambda: f64, pt: &Point) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidWeights(format!("scaling factor must be positive, got {lambda}")));
    }
    let e = sys.coordinates(pt)?;
    let scaled: Vec<f64> = e.iter().zip(q).map(|(e, q)| lambda.powf(*q) * e).collect();
    let lhs = sys.evaluate(&sys.point(&scaled)?)?;
    let rhs = lambda.powf(beta) * sys.evaluate(pt)?;
    Ok((lhs - rhs).abs() / rhs.abs().max(RESIDUAL_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Unique,
    Degenerate,
    None,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Unique => "unique",
            Status::Degenerate => "degenerate",
            Status::None => "none",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HomogeneityReport {
    pub status: Status,
    /// Dimension of the numerical null space, as measured.
    pub null_dimension: usize,
    /// Degree-one assignment; absent for status none or when every null
    /// vector has zero degree.
    pub canonical: Option<WeightAssignment>,
    /// Null-space basis in (q_1, …, q_n, β) coordinates.
    pub basis: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub max_euler_residual: f64,
    pub max_scaling_residual: f64,
    /// Present when verification downgraded the status, or when only
    /// zero-degree null vectors exist.
    pub note: Option<String>,
    pub variables: Vec<String>,
}

pub fn detect_weights(sys: &ThermoSystem, sample_count: usize, seed: u64) -> Result<HomogeneityReport> {
    detect_weights_with(sys, sample_count, seed, ExecMode::default())
}

pub fn detect_weights_with(
    sys: &ThermoSystem,
    sample_count: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<HomogeneityReport> {
    let n = sys.arity();
    if sample_count < n + 3 {
        return Err(Error::Sampling(format!(
            "need at least {} samples for {n} variables, got {sample_count}",
            n + 3
        )));
    }
    let points = sys.sample_points(sample_count, seed, mode)?;
    let rows = map_indexed(mode, points.len(), |k| constraint_row(sys, &points[k]));
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;

    let ns = null_space(&rows, n + 1, SINGULAR_VALUE_CUTOFF);
    let dim = ns.basis.len();
    let mut report = HomogeneityReport {
        status: match dim {
            0 => Status::None,
            1 => Status::Unique,
            _ => Status::Degenerate,
        },
        null_dimension: dim,
        canonical: None,
        basis: ns.basis,
        singular_values: ns.singular_values,
        max_euler_residual: f64::NAN,
        max_scaling_residual: f64::NAN,
        note: None,
        variables: sys.variables().to_vec(),
    };
    if dim == 0 {
        return Ok(report);
    }

    // Minimum-norm null vector with β = 1: v = N b / |b|², b = Nᵀ e_β.
    let b: Vec<f64> = report.basis.iter().map(|v| v[n]).collect();
    let bb = dot(&b, &b);
    let candidates: Vec<(Vec<f64>, f64)> = if bb > ZERO_DEGREE_TOL {
        let mut v = vec![0.0; n + 1];
        for (coef, basis) in b.iter().zip(&report.basis) {
            for (x, y) in v.iter_mut().zip(basis) {
                *x += coef / bb * y;
            }
        }
        match WeightAssignment::from_weights(1.0, sys.variables().to_vec(), &v[..n]) {
            Ok(w) => report.canonical = Some(w),
            Err(e) => report.note = Some(format!("no canonical assignment: {e}")),
        }
        vec![(v[..n].to_vec(), 1.0)]
    } else {
        report.note = Some("every null vector has zero degree; no canonical assignment".into());
        report
            .basis
            .iter()
            .map(|v| (v[..n].to_vec(), v[n]))
            .collect()
    };

    let euler = map_indexed(mode, points.len(), |k| {
        candidates
            .iter()
            .map(|(q, beta)| raw_euler_residual(sys, q, *beta, &points[k]))
            .try_fold(0.0_f64, |m, r| r.map(|r| m.max(r)))
    });
    report.max_euler_residual = euler.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);

    // Scaled points may leave the domain; those are skipped.
    let scaling = map_indexed(mode, points.len(), |k| {
        let mut worst = None::<f64>;
        for (q, beta) in &candidates {
            for lambda in VERIFY_LAMBDAS {
                if let Ok(r) = raw_scaling_residual(sys, q, *beta, lambda, &points[k]) {
                    worst = Some(worst.map_or(r, |w| w.max(if r.is_nan() { f64::INFINITY } else { r })));
                }
            }
        }
        worst
    });
    let scaling: Vec<f64> = scaling.into_iter().flatten().collect();
    if scaling.is_empty() {
        report.status = Status::None;
        report.canonical = None;
        report.note = Some("no scaled verification point could be evaluated".into());
        return Ok(report);
    }
    report.max_scaling_residual = scaling.into_iter().fold(0.0, f64::max);
    if !(report.max_scaling_residual <= SCALING_VERIFY_TOL) {
        report.status = Status::None;
        report.canonical = None;
        report.note = Some(format!(
            "finite scaling check failed (max residual {:.3e} > {SCALING_VERIFY_TOL:e})",
            report.max_scaling_residual
        ));
    }
    Ok(report)
}

/// [E¹I₁, …, EⁿIₙ, −Φ] at `pt`.
fn constraint_row(sys: &ThermoSystem, pt: &Point) -> Result<Vec<f64>> {
    let e = sys.coordinates(pt)?;
    let i = sys.intensives(pt)?;
    let mut row: Vec<f64> = e.iter().zip(&i).map(|(e, i)| e * i).collect();
    row.push(-sys.evaluate(pt)?);
    // Row scaling leaves the null space unchanged.
    let r = norm(&row);
    if r > 0.0 {
        row.iter_mut().for_each(|x| *x /= r);
    }
    Ok(row)
}

fn raw_euler_residual(sys: &ThermoSystem, q: &[f64], beta: f64, pt: &Point) -> Result<f64> {
    let e = sys.coordinates(pt)?;
    let i = sys.intensives(pt)?;
    let terms: Vec<f64> = e.iter().zip(&i).zip(q).map(|((e, i), q)| q * e * i).collect();
    let phi = sys.evaluate(pt)?;
    let scale = (beta * phi).abs().max(terms.iter().map(|t| t.abs()).sum::<f64>());
    Ok((terms.iter().sum::<f64>() - beta * phi).abs() / scale.max(RESIDUAL_FLOOR))
}

/// True iff the null space contains a vector with all q_a equal and
/// nonzero, i.e. Φ is homogeneous in the ordinary sense.
pub fn is_strictly_homogeneous(report: &HomogeneityReport) -> bool {
    if report.status == Status::None || report.basis.is_empty() {
        return false;
    }
    let n = report.variables.len();
    let mut u = vec![1.0; n + 1];
    u[n] = 0.0;
    let mut e = vec![0.0; n + 1];
    e[n] = 1.0;
    let a = reject(&u, &report.basis);
    let b = reject(&e, &report.basis);
    let bb = dot(&b, &b);
    let s = if bb > 0.0 { -dot(&a, &b) / bb } else { 0.0 };
    let miss: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
    let mut target = u;
    target[n] = s;
    norm(&miss) <= EQUAL_WEIGHTS_TOL * norm(&target)
}
