//! Rectangular grid scans of the representation change.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::geometry::{representation_change, MetricSpec};
use crate::homogeneity::WeightAssignment;
use crate::systems::ThermoSystem;

/// `count` evenly spaced values of one variable over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub variable: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, k: usize) -> f64 {
        if self.count <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// Coordinates in variable order.
    pub coordinates: Vec<f64>,
    pub factor: f64,
    pub det_g_phi: f64,
    pub det_induced: f64,
    pub c1_c2_residual: f64,
    pub c4_residual: f64,
    /// `ok`, `singular:<intensive>` or `error:<reason>`.
    pub status: String,
}

/// Evaluates every cell of `x × y`, row-major with `x` outermost. Variables
/// not on an axis take their value from `fixed` (variable order).
#[allow(clippy::too_many_arguments)]
pub fn scan_grid(
    sys: &ThermoSystem,
    spec: &MetricSpec,
    w: &WeightAssignment,
    rep: usize,
    fixed: &[f64],
    x: &Axis,
    y: &Axis,
    mode: ExecMode,
) -> Result<Vec<ScanRow>> {
    let n = sys.arity();
    if fixed.len() != n {
        return Err(Error::Dimension(format!("{} fixed values for {n} variables", fixed.len())));
    }
    for axis in [x, y] {
        if axis.variable >= n || axis.count == 0 || !(axis.lo.is_finite() && axis.hi.is_finite()) {
            return Err(Error::Validation(format!("bad scan axis {axis:?}")));
        }
    }
    if x.variable == y.variable {
        return Err(Error::Validation("scan axes must be different variables".into()));
    }
    let cells = x.count * y.count;
    Ok(map_indexed(mode, cells, |k| {
        let mut coords = fixed.to_vec();
        coords[x.variable] = x.value(k / y.count);
        coords[y.variable] = y.value(k % y.count);
        cell(sys, spec, w, rep, coords)
    }))
}

fn cell(sys: &ThermoSystem, spec: &MetricSpec, w: &WeightAssignment, rep: usize, coords: Vec<f64>) -> ScanRow {
    let result = sys
        .point(&coords)
        .and_then(|pt| representation_change(sys, spec, w, rep, &pt));
    match result {
        Ok(rc) => ScanRow {
            coordinates: coords,
            factor: rc.c4.factor,
            det_g_phi: rc.base.determinant(),
            det_induced: rc.c1.determinant(),
            c1_c2_residual: rc.c1_c2_difference,
            c4_residual: rc.c4.residual,
            status: "ok".to_string(),
        },
        Err(e) => {
            let status = match e {
                Error::SingularRepresentation { intensive, .. } => format!("singular:{intensive}"),
                other => format!("error:{other}").replace([',', '\n', '"'], ";"),
            };
            ScanRow {
                coordinates: coords,
                factor: f64::NAN,
                det_g_phi: f64::NAN,
                det_induced: f64::NAN,
                c1_c2_residual: f64::NAN,
                c4_residual: f64::NAN,
                status,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chi;

    fn rn4() -> (ThermoSystem, MetricSpec, WeightAssignment) {
        let sys = ThermoSystem::reissner_nordstrom_d(4).unwrap();
        let w = sys.declared_weights().unwrap().clone();
        (sys, MetricSpec::unit(2, Chi::Delta), w)
    }

    #[test]
    fn grid_order_and_singular_cells() {
        let (sys, spec, w) = rn4();
        let x = Axis { variable: 0, lo: 0.25, hi: 1.0, count: 2 };
        let y = Axis { variable: 1, lo: 0.5, hi: 1.0, count: 2 };
        let rows = scan_grid(&sys, &spec, &w, 0, &[0.0, 0.0], &x, &y, ExecMode::Sequential).unwrap();
        let coords: Vec<_> = rows.iter().map(|r| r.coordinates.clone()).collect();
        assert_eq!(coords, vec![vec![0.25, 0.5], vec![0.25, 1.0], vec![1.0, 0.5], vec![1.0, 1.0]]);
        // Q² = 2D S^{2D} = S for d = 4
        assert_eq!(rows[0].status, "singular:T");
        assert_eq!(rows[3].status, "singular:T");
        assert!(rows[0].factor.is_nan());
        assert_eq!(rows[2].status, "ok");
        assert!((rows[2].factor + 2560.0 / 63.0).abs() < 1e-12);
    }

    #[test]
    fn modes_agree() {
        let (sys, spec, w) = rn4();
        let x = Axis { variable: 0, lo: 0.5, hi: 2.0, count: 32 };
        let y = Axis { variable: 1, lo: 0.1, hi: 0.9, count: 32 };
        let a = scan_grid(&sys, &spec, &w, 0, &[0.0, 0.0], &x, &y, ExecMode::Sequential).unwrap();
        let b = scan_grid(&sys, &spec, &w, 0, &[0.0, 0.0], &x, &y, ExecMode::Parallel).unwrap();
        assert_eq!(a.len(), 1024);
        for (r, s) in a.iter().zip(&b) {
            assert_eq!(r.status, s.status);
            assert_eq!(r.factor.to_bits(), s.factor.to_bits());
        }
    }

    #[test]
    fn bad_axes_rejected() {
        let (sys, spec, w) = rn4();
        let x = Axis { variable: 0, lo: 0.5, hi: 2.0, count: 3 };
        assert!(scan_grid(&sys, &spec, &w, 0, &[0.0, 0.0], &x, &x, ExecMode::Sequential).is_err());
        let y = Axis { variable: 1, lo: 0.5, hi: 2.0, count: 0 };
        assert!(scan_grid(&sys, &spec, &w, 0, &[0.0, 0.0], &x, &y, ExecMode::Sequential).is_err());
    }
}
