//! Small dense helpers on `&[f64]` vectors. Dimensions here never exceed a few
//! dozen, so everything is plain loops plus nalgebra for SVD.

use nalgebra::DMatrix;

use crate::error::{LmcfError, Result};

/// Relative threshold below which a frame or Jacobian is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Modified Gram-Schmidt (two passes) with respect to an arbitrary inner product.
///
/// Fails with `DegenerateFrame` when some vector retains less than `RANK_TOL`
/// of the largest input norm after orthogonalization.
pub fn gram_orthonormalize<F>(vectors: &[Vec<f64>], inner: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let scale = vectors
        .iter()
        .map(|v| inner(v, v).max(0.0).sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(LmcfError::DegenerateFrame(
            "zero or non-finite frame".into(),
        ));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                let c = inner(&w, e);
                axpy(-c, e, &mut w);
            }
        }
        let nw = inner(&w, &w).max(0.0).sqrt();
        if nw < RANK_TOL * scale {
            return Err(LmcfError::DegenerateFrame(format!(
                "vector {j} is dependent on its predecessors (residual {:.3e})",
                nw / scale
            )));
        }
        out.push(scaled(1.0 / nw, &w));
    }
    Ok(out)
}

/// Euclidean Gram-Schmidt that silently drops dependent vectors.
pub fn orthonormal_span(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 {
        return out;
    }
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                let c = dot(&w, e);
                axpy(-c, e, &mut w);
            }
        }
        let nw = norm(&w);
        if nw > 1e-13 * scale {
            out.push(scaled(1.0 / nw, &w));
        }
    }
    out
}

/// Removes the components of `v` along an orthonormal family.
pub fn project_off(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut w = v.to_vec();
    for e in basis {
        let c = dot(&w, e);
        axpy(-c, e, &mut w);
    }
    w
}

pub fn to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Singular values of the matrix whose rows are given, descending.
pub fn singular_values(rows: &[Vec<f64>], ncols: usize) -> Vec<f64> {
    let m = to_matrix(rows, ncols);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal basis of the null space of the matrix with the given rows.
pub fn null_space(rows: &[Vec<f64>], ncols: usize) -> Vec<Vec<f64>> {
    // Null space of J equals the orthogonal complement of its row space.
    let row_basis = orthonormal_span(rows);
    let mut candidates = Vec::with_capacity(ncols);
    for j in 0..ncols {
        let mut e = vec![0.0; ncols];
        e[j] = 1.0;
        candidates.push(project_off(&e, &row_basis));
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    // Pick the largest remaining components first for conditioning.
    let mut order: Vec<usize> = (0..ncols).collect();
    order.sort_by(|&a, &b| norm(&candidates[b]).total_cmp(&norm(&candidates[a])));
    for j in order {
        if out.len() + row_basis.len() >= ncols {
            break;
        }
        let mut w = project_off(&candidates[j], &out);
        w = project_off(&w, &out);
        let nw = norm(&w);
        if nw > 1e-8 {
            out.push(scaled(1.0 / nw, &w));
        }
    }
    out
}

/// Minimum-norm solution `x = J^T (J J^T)^{-1} r` of `J x = r` for a full-row-rank J.
pub fn min_norm_solve(rows: &[Vec<f64>], ncols: usize, r: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let g = dot(&rows[i], &rows[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(r);
    let y = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let svd = gram.svd(true, true);
            svd.solve(&rhs, RANK_TOL)
                .map_err(|e| LmcfError::DegenerateFrame(e.to_string()))?
        }
    };
    let mut x = vec![0.0; ncols];
    for i in 0..m {
        axpy(y[i], &rows[i], &mut x);
    }
    Ok(x)
}
