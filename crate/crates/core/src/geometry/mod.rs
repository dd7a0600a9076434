//! Conformal metric family and its representation changes.
//!
//! The base metric on the equilibrium manifold is
//!
//! ```text
//! g^Φ = (ξ_a I_a E^a) Λ_c χ_c dE^c ⊗ dI_c,   dI_c = H_cm dE^m
//! ```
//!
//! with H the Hessian of Φ and diagonal Λ, χ, ξ. Passing to the E^(i)
//! representation gives the induced metric g^{E^(i)}, assembled here in two
//! arrangements ([`induced_metric_c1`], [`induced_metric_c2`]) that agree
//! only when Λ_a χ_a is the same for every a ([`check_constraint_c3`]). Under
//! that constraint g^{E^(i)} is conformal to g^Φ and the factor has closed
//! forms ([`conformal_factor_c4`], [`induced_metric_beta1`],
//! [`conformal_factor_twovar_c7`]).
//!
//! Components are stored un-symmetrized: row a, column b is the coefficient
//! of dE^a ⊗ dE^b.

mod reconstruct;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::homogeneity::WeightAssignment;
use crate::linalg::{asymmetry, max_abs, relative_difference, to_matrix};
use crate::systems::ThermoSystem;

pub use reconstruct::{representation_reconstruct, Reconstruction, MAX_CONDITION};

/// A form is symmetric when max|g_ab − g_ba| ≤ this × max|g|.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// |I_(i)| ≤ this × (1 + |Φ|/|E^(i)|) makes the representation singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Relative size below which a conformal prefactor counts as zero.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chi {
    /// δ = diag[1, …, 1]
    Delta,
    /// η = diag[−1, 1, …, 1]
    Eta,
}

impl Chi {
    pub fn diagonal(self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| if self == Chi::Eta && k == 0 { -1.0 } else { 1.0 })
            .collect()
    }
}

/// Diagonal constants Λ_a, χ_a, ξ_a selecting a member of the metric family.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    lambda: Vec<f64>,
    chi_kind: Chi,
    chi: Vec<f64>,
    xi: Vec<f64>,
}

impl MetricSpec {
    pub fn new(lambda: Vec<f64>, chi: Chi, xi: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != xi.len() {
            return Err(Error::InvalidSpec(format!(
                "{} Λ values and {} ξ values",
                lambda.len(),
                xi.len()
            )));
        }
        if lambda.iter().chain(&xi).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("non-finite coefficient".into()));
        }
        let chi_values = chi.diagonal(lambda.len());
        Ok(MetricSpec {
            lambda,
            chi_kind: chi,
            chi: chi_values,
            xi,
        })
    }

    /// Builds a spec from an explicit χ diagonal, which must be δ or η.
    pub fn from_chi_diagonal(lambda: Vec<f64>, chi: &[f64], xi: Vec<f64>) -> Result<Self> {
        let n = chi.len();
        let kind = if chi == Chi::Delta.diagonal(n).as_slice() {
            Chi::Delta
        } else if chi == Chi::Eta.diagonal(n).as_slice() {
            Chi::Eta
        } else {
            return Err(Error::InvalidSpec(format!(
                "χ must be δ or η = diag[-1, 1, …], got {chi:?}"
            )));
        };
        if n != lambda.len() {
            return Err(Error::InvalidSpec("χ does not match Λ".into()));
        }
        MetricSpec::new(lambda, kind, xi)
    }

    /// Λ = ξ = 1 with χ = δ; Λ_1 = −1 for χ = η so that the spec stays
    /// admissible.
    pub fn unit(n: usize, chi: Chi) -> Self {
        let mut lambda = vec![1.0; n];
        if chi == Chi::Eta {
            lambda[0] = -1.0;
        }
        MetricSpec::new(lambda, chi, vec![1.0; n]).expect("unit spec is valid")
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn chi_kind(&self) -> Chi {
        self.chi_kind
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn arity(&self) -> usize {
        self.lambda.len()
    }

    /// Λ_a χ_a for each a.
    fn products(&self) -> Vec<f64> {
        self.lambda.iter().zip(&self.chi).map(|(l, c)| l * c).collect()
    }

    /// Λ_i χ_i = Λ_j χ_j for all pairs.
    pub fn satisfies_c3(&self) -> bool {
        let p = self.products();
        let first = p[0];
        p.iter()
            .all(|x| (x - first).abs() <= 4.0 * f64::EPSILON * x.abs().max(first.abs()))
    }

    pub fn unit_xi(&self) -> bool {
        self.xi.iter().all(|x| *x == 1.0)
    }
}

/// Free-function form of [`MetricSpec::satisfies_c3`].
pub fn check_constraint_c3(spec: &MetricSpec) -> bool {
    spec.satisfies_c3()
}

/// Metric components in the dE^a ⊗ dE^b basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    labels: Vec<String>,
    matrix: DMatrix<f64>,
    asymmetry: f64,
}

impl BilinearForm {
    pub fn new(labels: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{}x{} components for {} labels",
                matrix.nrows(),
                matrix.ncols(),
                labels.len()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite metric component".into()));
        }
        let asym = asymmetry(&matrix);
        Ok(BilinearForm {
            labels,
            matrix,
            asymmetry: asym,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn component(&self, a: usize, b: usize) -> f64 {
        self.matrix[(a, b)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Measured max|g_ab − g_ba| / max|g|.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry <= SYMMETRY_TOL
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn scaled(&self, s: f64) -> BilinearForm {
        BilinearForm {
            labels: self.labels.clone(),
            matrix: &self.matrix * s,
            asymmetry: self.asymmetry,
        }
    }

    /// max|A − B| / max(max|A|, max|B|).
    pub fn relative_difference(&self, other: &BilinearForm) -> f64 {
        relative_difference(&self.matrix, &other.matrix)
    }
}

/// Scalar prefactor relating two forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalReport {
    pub factor: f64,
    /// max|g^{E^(i)} − factor·g^Φ| / max|g^{E^(i)}|.
    pub residual: f64,
    pub c3_satisfied: bool,
}

/// Quantities at one point shared by every construction.
#[derive(Debug, Clone)]
pub(crate) struct LocalData {
    pub e: Vec<f64>,
    pub phi: f64,
    pub i: Vec<f64>,
    pub h: DMatrix<f64>,
}

impl LocalData {
    pub fn at(sys: &ThermoSystem, pt: &Point) -> Result<Self> {
        Ok(LocalData {
            e: sys.coordinates(pt)?,
            phi: sys.evaluate(pt)?,
            i: sys.intensives(pt)?,
            h: to_matrix(&sys.hessian(pt)?),
        })
    }

    /// C = Σ_a ξ_a I_a E^a, rejected when it vanishes.
    pub fn prefactor(&self, xi: &[f64]) -> Result<f64> {
        let terms: Vec<f64> = xi
            .iter()
            .zip(&self.i)
            .zip(&self.e)
            .map(|((x, i), e)| x * i * e)
            .collect();
        let c: f64 = terms.iter().sum();
        let size: f64 = terms.iter().map(|t| t.abs()).sum();
        if c == 0.0 || c.abs() <= DEGENERATE_TOL * size {
            return Err(Error::DegenerateConformal(format!(
                "ξ_a I_a E^a = {c:e} vanishes"
            )));
        }
        Ok(c)
    }

    pub fn check_representation(&self, sys: &ThermoSystem, rep: usize) -> Result<()> {
        let ii = self.i[rep];
        let threshold = SINGULAR_TOL * (1.0 + self.phi.abs() / self.e[rep].abs());
        if !(ii.abs() > threshold) {
            return Err(Error::SingularRepresentation {
                variable: sys.variables()[rep].clone(),
                intensive: sys.intensive_names()[rep].clone(),
                value: ii,
            });
        }
        Ok(())
    }
}

fn check_arity(sys: &ThermoSystem, spec: &MetricSpec) -> Result<()> {
    if spec.arity() != sys.arity() {
        return Err(Error::Dimension(format!(
            "metric spec has {} entries, system `{}` has {} variables",
            spec.arity(),
            sys.name(),
            sys.arity()
        )));
    }
    Ok(())
}

fn check_weights(sys: &ThermoSystem, w: &WeightAssignment) -> Result<()> {
    if w.variables() != sys.variables() {
        return Err(Error::Dimension(format!(
            "weights over {:?} do not match system variables {:?}",
            w.variables(),
            sys.variables()
        )));
    }
    Ok(())
}

fn base_from(sys: &ThermoSystem, spec: &MetricSpec, d: &LocalData) -> Result<BilinearForm> {
    let c = d.prefactor(spec.xi())?;
    let lc = spec.products();
    let n = sys.arity();
    let g = DMatrix::from_fn(n, n, |a, b| c * lc[a] * d.h[(a, b)]);
    BilinearForm::new(sys.variables().to_vec(), g)
}

/// g^Φ with components C · Λ_a χ_a · H_ab, C = Σ ξ_a I_a E^a.
pub fn base_metric(sys: &ThermoSystem, spec: &MetricSpec, pt: &Point) -> Result<BilinearForm> {
    check_arity(sys, spec)?;
    base_from(sys, spec, &LocalData::at(sys, pt)?)
}

/// ξ_i E^i/p_i + Σ_{j≠i} (ξ_i/p_i − ξ_j β) I_j E^j / I_i
fn first_factor(spec: &MetricSpec, w: &WeightAssignment, rep: usize, d: &LocalData) -> f64 {
    let xi = spec.xi();
    let p_i = w.powers()[rep];
    let beta = w.beta();
    let ii = d.i[rep];
    let mut f = xi[rep] * d.e[rep] / p_i;
    for j in (0..d.e.len()).filter(|j| *j != rep) {
        f += (xi[rep] / p_i - xi[j] * beta) * d.i[j] * d.e[j] / ii;
    }
    f
}

fn c1_bracket(spec: &MetricSpec, rep: usize, d: &LocalData) -> DMatrix<f64> {
    let n = d.e.len();
    let lc = spec.products();
    let ii = d.i[rep];
    let mut b = DMatrix::zeros(n, n);
    for m in 0..n {
        // −Λ_i χ_i (1/I_i) dE^i ⊗ dI_i
        b[(rep, m)] += -lc[rep] / ii * d.h[(rep, m)];
        for j in (0..n).filter(|j| *j != rep) {
            // −Λ_i χ_i (I_j/I_i²) dE^j ⊗ dI_i and +Λ_j χ_j (I_j/I_i²) dE^j ⊗ dI_i,
            // summed together since they cancel under c3
            let cross = -lc[rep] * d.i[j] / (ii * ii) * d.h[(rep, m)]
                + lc[j] * d.i[j] / (ii * ii) * d.h[(rep, m)];
            // −Λ_j χ_j (1/I_i) dE^j ⊗ dI_j
            b[(j, m)] += cross + -lc[j] / ii * d.h[(j, m)];
        }
    }
    b
}

fn c2_bracket(spec: &MetricSpec, rep: usize, d: &LocalData) -> DMatrix<f64> {
    let n = d.e.len();
    let lc = spec.products();
    let ii = d.i[rep];
    let mut b = DMatrix::zeros(n, n);
    // −Σ_k (Λ_k χ_k / I_i) dI_k ⊗ dE^k
    for k in 0..n {
        for m in 0..n {
            b[(m, k)] += -lc[k] / ii * d.h[(k, m)];
        }
    }
    // Σ_{j≠i} (Λ_j χ_j − Λ_i χ_i) (I_j/I_i²) dE^j ⊗ dI_i
    for j in (0..n).filter(|j| *j != rep) {
        for m in 0..n {
            b[(j, m)] += (lc[j] - lc[rep]) * d.i[j] / (ii * ii) * d.h[(rep, m)];
        }
    }
    b
}

fn prepare(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<LocalData> {
    check_arity(sys, spec)?;
    check_weights(sys, w)?;
    if rep >= sys.arity() {
        return Err(Error::Dimension(format!("representation index {rep} out of range")));
    }
    let data = LocalData::at(sys, pt)?;
    data.check_representation(sys, rep)?;
    Ok(data)
}

fn induced_from(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    d: &LocalData,
    bracket: fn(&MetricSpec, usize, &LocalData) -> DMatrix<f64>,
) -> Result<BilinearForm> {
    let scale = first_factor(spec, w, rep, d) / w.beta();
    BilinearForm::new(sys.variables().to_vec(), bracket(spec, rep, d) * scale)
}

/// Induced metric g^{E^(i)} in the dE^(i) ⊗ dI arrangement.
pub fn induced_metric_c1(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<BilinearForm> {
    let d = prepare(sys, spec, w, rep, pt)?;
    induced_from(sys, spec, w, rep, &d, c1_bracket)
}

/// Induced metric g^{E^(i)} in the dI_k ⊗ dE^c arrangement.
pub fn induced_metric_c2(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<BilinearForm> {
    let d = prepare(sys, spec, w, rep, pt)?;
    induced_from(sys, spec, w, rep, &d, c2_bracket)
}

fn c4_from(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    d: &LocalData,
) -> Result<(ConformalReport, BilinearForm, BilinearForm)> {
    let c = d.prefactor(spec.xi())?;
    let factor = -first_factor(spec, w, rep, d) / (w.beta() * d.i[rep] * c);
    let base = base_from(sys, spec, d)?;
    let induced = induced_from(sys, spec, w, rep, d, c1_bracket)?;
    let scale = max_abs(induced.matrix());
    let residual = if scale == 0.0 {
        max_abs(&(base.matrix() * factor))
    } else {
        max_abs(&(induced.matrix() - base.matrix() * factor)) / scale
    };
    Ok((
        ConformalReport {
            factor,
            residual,
            c3_satisfied: spec.satisfies_c3(),
        },
        base,
        induced,
    ))
}

/// −(1/(β I_i)) [ξ_i E^i/p_i + Σ_{j≠i} (ξ_i/p_i − ξ_j β) I_j E^j/I_i] (ξ_a I_a E^a)^{-1},
/// with the residual of g^{E^(i)} against factor × g^Φ.
pub fn conformal_factor_c4(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<ConformalReport> {
    let d = prepare(sys, spec, w, rep, pt)?;
    Ok(c4_from(sys, spec, w, rep, &d)?.0)
}

/// Degree-one, unit-ξ specialization of the conformal factor.
#[derive(Debug, Clone)]
pub struct Beta1Metric {
    /// Factor from the p̄-bracket form.
    pub factor_c5: f64,
    /// Factor from the Φ-numerator form.
    pub factor_c6: f64,
    /// |c5 − c6| / max(|c5|, |c6|).
    pub disagreement: f64,
    /// factor_c5 × g^Φ.
    pub metric: BilinearForm,
}

/// Induced metric for β = 1 and ξ ≡ 1 under c3, with the factor
/// evaluated both as
/// −[E^i/(p̄_i I_i) + (1/p̄_i − 1) Σ_{j≠i} I_jE^j/I_i²] / (I_aE^a)
/// and as
/// −[Φ − Σ_{j≠i} I_jE^j + Σ_{j≠i} (1/p̄_i − 1/p̄_j) I_jE^j] / (I_i² I_aE^a).
pub fn induced_metric_beta1(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    pbar: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<Beta1Metric> {
    if !spec.unit_xi() {
        return Err(Error::InvalidSpec("degree-one form needs ξ ≡ 1".into()));
    }
    if !spec.satisfies_c3() {
        return Err(Error::InvalidSpec("degree-one form needs Λ_a χ_a constant".into()));
    }
    if pbar.beta() != 1.0 {
        return Err(Error::InvalidWeights(format!(
            "degree-one form needs β = 1, got {}",
            pbar.beta()
        )));
    }
    let d = &prepare(sys, spec, pbar, rep, pt)?;
    let pb = pbar.powers();
    let ii = d.i[rep];
    let total: f64 = d.i.iter().zip(&d.e).map(|(i, e)| i * e).sum();
    if total == 0.0 {
        return Err(Error::DegenerateConformal("I_a E^a vanishes".into()));
    }
    let others: Vec<usize> = (0..d.e.len()).filter(|j| *j != rep).collect();
    let sum_others: f64 = others.iter().map(|j| d.i[*j] * d.e[*j]).sum();

    let factor_c5 = -(d.e[rep] / (pb[rep] * ii) + (1.0 / pb[rep] - 1.0) * sum_others / (ii * ii)) / total;
    let correction: f64 = others
        .iter()
        .map(|j| (1.0 / pb[rep] - 1.0 / pb[*j]) * d.i[*j] * d.e[*j])
        .sum();
    let factor_c6 = -(d.phi - sum_others + correction) / (ii * ii * total);
    let disagreement = (factor_c5 - factor_c6).abs() / factor_c5.abs().max(factor_c6.abs());
    let metric = base_from(sys, spec, d)?.scaled(factor_c5);
    Ok(Beta1Metric {
        factor_c5,
        factor_c6,
        disagreement,
        metric,
    })
}

/// −(1/T²)[1/p̄_S − YZ/(TS + YZ)] for a two-variable potential M(S, Z),
/// where `rep` selects S and Y = ∂M/∂Z.
pub fn conformal_factor_twovar_c7(sys: &ThermoSystem, pbar_s: f64, rep: usize, pt: &Point) -> Result<f64> {
    if sys.arity() != 2 {
        return Err(Error::Dimension(format!(
            "two-variable factor needs exactly two variables, `{}` has {}",
            sys.name(),
            sys.arity()
        )));
    }
    if rep > 1 {
        return Err(Error::Dimension(format!("representation index {rep} out of range")));
    }
    if pbar_s == 0.0 || !pbar_s.is_finite() {
        return Err(Error::InvalidWeights(format!("p̄ = {pbar_s} is not usable")));
    }
    let d = LocalData::at(sys, pt)?;
    d.check_representation(sys, rep)?;
    let z = 1 - rep;
    let t = d.i[rep];
    let ts = t * d.e[rep];
    let yz = d.i[z] * d.e[z];
    if ts + yz == 0.0 {
        return Err(Error::DegenerateConformal("TS + YZ vanishes".into()));
    }
    Ok(-(1.0 / (t * t)) * (1.0 / pbar_s - yz / (ts + yz)))
}

/// Everything the representation-change commands report at one point.
#[derive(Debug, Clone)]
pub struct RepChange {
    pub base: BilinearForm,
    pub c1: BilinearForm,
    pub c2: BilinearForm,
    pub c4: ConformalReport,
    /// max|c1 − c2| / max(|c1|, |c2|)
    pub c1_c2_difference: f64,
    /// Present when ξ ≡ 1 and c3 holds.
    pub beta1: Option<Beta1Metric>,
    /// Present for two-variable systems with ξ ≡ 1 and c3.
    pub c7: Option<f64>,
}

impl RepChange {
    /// Consistency residuals that must vanish under c3.
    pub fn consistency_residuals(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("c1_c2", self.c1_c2_difference),
            ("c4", self.c4.residual),
        ];
        if let Some(b) = &self.beta1 {
            out.push(("c5_c6", b.disagreement));
            out.push(("c4_c5", rel(self.c4.factor, b.factor_c5)));
        }
        if let Some(f7) = self.c7 {
            out.push(("c4_c7", rel(self.c4.factor, f7)));
        }
        out
    }
}

pub(crate) fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Computes every construction at one point, evaluating Φ and its
/// derivatives once.
pub fn representation_change(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<RepChange> {
    let d = &prepare(sys, spec, w, rep, pt)?;
    let (c4, base, c1) = c4_from(sys, spec, w, rep, d)?;
    let c2 = induced_from(sys, spec, w, rep, d, c2_bracket)?;
    let c1_c2_difference = c1.relative_difference(&c2);
    let (beta1, c7) = if spec.unit_xi() && spec.satisfies_c3() {
        let pbar = w.normalized();
        let b = induced_metric_beta1(sys, spec, &pbar, rep, pt)?;
        let c7 = if sys.arity() == 2 {
            Some(conformal_factor_twovar_c7(sys, pbar.powers()[rep], rep, pt)?)
        } else {
            None
        };
        (Some(b), c7)
    } else {
        (None, None)
    };
    Ok(RepChange {
        base,
        c1,
        c2,
        c4,
        c1_c2_difference,
        beta1,
        c7,
    })
}
