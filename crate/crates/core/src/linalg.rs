//! Small dense helpers on top of nalgebra: SVD null spaces, conditioning,
//! and the residual measures used to compare bilinear forms.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Orthonormal basis vectors of the numerical null space.
    pub basis: Vec<Vec<f64>>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
}

/// Numerical null space of the `rows` matrix: right singular vectors whose
/// singular value is at most `rel_cutoff * σ_max`.
pub fn null_space(rows: &[Vec<f64>], ncols: usize, rel_cutoff: f64) -> NullSpace {
    // Zero rows leave the null space unchanged and make the SVD produce a
    // full set of right singular vectors.
    let nrows = rows.len().max(ncols);
    let mut a = DMatrix::<f64>::zeros(nrows, ncols);
    for (i, r) in rows.iter().enumerate() {
        for (j, x) in r.iter().enumerate() {
            a[(i, j)] = *x;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut pairs: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, s)| (*s, v_t.row(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = pairs.first().map_or(0.0, |p| p.0);
    let singular_values = pairs.iter().map(|p| p.0).collect();
    let basis = pairs
        .into_iter()
        .filter(|(s, _)| smax == 0.0 || *s <= rel_cutoff * smax)
        .map(|(_, v)| v)
        .collect();
    NullSpace {
        basis,
        singular_values,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Component of `v` orthogonal to the span of the orthonormal `basis`.
pub fn reject(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for b in basis {
        let c = dot(&r, b);
        for (x, y) in r.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
    r
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// max|A - B| / max(max|A|, max|B|); zero for two zero matrices.
pub fn relative_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = max_abs(a).max(max_abs(b));
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(a - b)) / scale
}

/// Least-squares scalar `s` minimising |A - sB| and the residual
/// max|A - sB| / max|A|.
pub fn off_proportionality(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let bb = b.dot(b);
    let s = if bb == 0.0 { 0.0 } else { a.dot(b) / bb };
    let scale = max_abs(a);
    if scale == 0.0 {
        return (s, if max_abs(b) == 0.0 { 0.0 } else { f64::INFINITY });
    }
    (s, max_abs(&(a - b * s)) / scale)
}

/// max|A - Aᵀ| / max|A|.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(a - a.transpose())) / scale
}

/// 2-norm condition number σ_max / σ_min (infinite when singular).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |m, x| m.max(*x));
    let min = sv.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
