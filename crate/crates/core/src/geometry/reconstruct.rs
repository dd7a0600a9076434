//! Independent route to the E^(i) representation.
//!
//! Solving the first law for E^(i) makes Ψ = E^(i) a potential in the
//! coordinates Y = (Φ in slot i, E^j elsewhere):
//!
//! ```text
//! dE^(i) = (1/I_i) dΦ − Σ_{j≠i} (I_j/I_i) dE^j
//! ```
//!
//! Its Hessian follows from differentiating Ψ(Y(E)) = E^(i) twice:
//! Jᵀ H̃ J = −Ĩ_Φ H with J = ∂Y/∂E. The same metric family is built in Y
//! and pulled back to dE coordinates through J, giving a form that should be
//! conformal to the induced metric without using any of its closed forms.

use nalgebra::{DMatrix, DVector};

use super::{c4_from, check_arity, check_weights, induced_from, c1_bracket, rel, BilinearForm, LocalData, MetricSpec};
use crate::error::{Error, Result};
use crate::expr::Point;
use crate::homogeneity::WeightAssignment;
use crate::linalg::{condition_number, off_proportionality};
use crate::systems::ThermoSystem;

/// Jacobians with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Pulled-back metric of the E^(i) representation.
    pub form: BilinearForm,
    /// Labels of the representation coordinates (the potential's symbol in
    /// slot i).
    pub coordinates: Vec<String>,
    /// Ψ's gradient in the representation coordinates.
    pub intensives: Vec<f64>,
    /// Degree-one weights of Ψ over the representation coordinates.
    pub weights: WeightAssignment,
    /// Euler residual of Ψ with those weights.
    pub euler_residual: f64,
    /// Least-squares s with form ≈ s · g^{E^(i)}.
    pub scalar: f64,
    /// max|form − s·g^{E^(i)}| / max|form|.
    pub off_proportionality: f64,
    /// Conformal factor against g^Φ implied by this route (s × c4 factor).
    pub implied_factor: f64,
    pub c4_factor: f64,
    /// |implied − c4| / max(|implied|, |c4|); recorded, not enforced.
    pub factor_deviation: f64,
    pub condition: f64,
}

pub fn representation_reconstruct(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    pt: &Point,
) -> Result<Reconstruction> {
    check_arity(sys, spec)?;
    check_weights(sys, w)?;
    let n = sys.arity();
    if rep >= n {
        return Err(Error::Dimension(format!("representation index {rep} out of range")));
    }
    let d = LocalData::at(sys, pt)?;
    d.check_representation(sys, rep)?;

    // J = ∂Y/∂E: row i is the gradient of Φ, the other rows are unit vectors.
    let jac = DMatrix::from_fn(n, n, |r, c| {
        if r == rep {
            d.i[c]
        } else if r == c {
            1.0
        } else {
            0.0
        }
    });
    let condition = condition_number(&jac);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let lu = jac.clone().lu();
    let jt_lu = jac.transpose().lu();
    let singular = || Error::IllConditioned {
        condition: f64::INFINITY,
    };

    // Jᵀ Ĩ = e_i
    let mut unit = DVector::zeros(n);
    unit[rep] = 1.0;
    let tilde_i = jt_lu.solve(&unit).ok_or_else(singular)?;

    // H̃ = −Ĩ_Φ J^{-T} H J^{-1}
    let j_inv = lu.try_inverse().ok_or_else(singular)?;
    let h_tilde = j_inv.transpose() * &d.h * &j_inv * (-tilde_i[rep]);

    let mut y = d.e.clone();
    y[rep] = d.phi;
    let c_tilde: f64 = spec
        .xi()
        .iter()
        .zip(tilde_i.iter())
        .zip(&y)
        .map(|((x, i), y)| x * i * y)
        .sum();
    if c_tilde == 0.0 {
        return Err(Error::DegenerateConformal(
            "prefactor of the reconstructed representation vanishes".into(),
        ));
    }
    let lc: Vec<f64> = spec.lambda().iter().zip(spec.chi()).map(|(l, c)| l * c).collect();
    let g_tilde = DMatrix::from_fn(n, n, |a, b| c_tilde * lc[a] * h_tilde[(a, b)]);
    let pulled = jac.transpose() * g_tilde * &jac;
    let form = BilinearForm::new(sys.variables().to_vec(), pulled)?;

    // Ψ has degree q_i; Φ carries weight β, E^j keep q_j.
    let q = w.weights();
    let mut rep_q: Vec<f64> = q.to_vec();
    rep_q[rep] = w.beta();
    let rep_q: Vec<f64> = rep_q.iter().map(|x| x / q[rep]).collect();
    let mut coordinates = sys.variables().to_vec();
    coordinates[rep] = sys.potential_symbol().to_string();
    let weights = WeightAssignment::from_weights(1.0, coordinates.clone(), &rep_q)?;
    let euler_lhs: f64 = rep_q
        .iter()
        .zip(&y)
        .zip(tilde_i.iter())
        .map(|((q, y), i)| q * y * i)
        .sum();
    let psi = d.e[rep];
    let euler_residual = (euler_lhs - psi).abs() / psi.abs().max(f64::MIN_POSITIVE);

    let induced = induced_from(sys, spec, w, rep, &d, c1_bracket)?;
    let (scalar, off) = off_proportionality(form.matrix(), induced.matrix());
    let c4 = c4_from(sys, spec, w, rep, &d)?.0;
    let implied_factor = scalar * c4.factor;

    Ok(Reconstruction {
        form,
        coordinates,
        intensives: tilde_i.iter().copied().collect(),
        weights,
        euler_residual,
        scalar,
        off_proportionality: off,
        implied_factor,
        c4_factor: c4.factor,
        factor_deviation: rel(implied_factor, c4.factor),
        condition,
    })
}
