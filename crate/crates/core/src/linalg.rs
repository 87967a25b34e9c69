//! Small dense kernels shared by the subspace, GDS and Karcher code:
//! sorted SVD / eigen-decompositions with deterministic signs, Gram–Schmidt
//! with a drop threshold, and orthonormal completion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Components with magnitude at or below this are skipped when choosing the
/// sign of a column.
pub const SIGN_EPS: f64 = 1e-12;

/// Singular values below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// Flips each column so that its first component with magnitude above
/// [`SIGN_EPS`] is positive.
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        if let Some(&first) = col.iter().find(|v| v.abs() > SIGN_EPS) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Sweeps of the Jacobi SVD before giving up.
const JACOBI_MAX_SWEEPS: usize = 80;

/// Applies the rotation `[c s; -s c]` to columns `p < q` of a column-major
/// buffer with `rows` rows.
fn rotate(data: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*xp, *xq);
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// One-sided Jacobi on a tall matrix: returns `(A V, V)` with mutually
/// orthogonal columns in `A V` (to `sqrt(rows) · EPSILON`). Columns below `EPSILON · ‖A‖_F` are left
/// alone; they carry only rounding noise.
fn jacobi_columns(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n) = a.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    let floor = (f64::EPSILON * a.norm()).powi(2);
    let tol = (m as f64).sqrt() * f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let data = a.as_slice();
                    let (cp, cq) = (&data[p * m..(p + 1) * m], &data[q * m..(q + 1) * m]);
                    cp.iter().zip(cq).fold((0.0, 0.0, 0.0), |(x, y, z), (u, w)| (x + u * u, y + w * w, z + u * w))
                };
                if alpha <= floor || beta <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(a.as_mut_slice(), m, p, q, c, s);
                rotate(v.as_mut_slice(), n, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((a, v));
        }
    }
    Err(Error::Numerical("Jacobi SVD did not converge".into()))
}

/// Thin SVD `m = U diag(sigma) Vᵀ` by one-sided Jacobi rotations, with
/// `r = min(rows, cols)` columns in `U` and `V`, `sigma` non-increasing and
/// sign-fixed left vectors. Left vectors of (numerically) zero singular
/// values complete an orthonormal set.
///
/// Used instead of the bidiagonal SVD, which loses accuracy on exactly
/// rank-deficient inputs.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix contains non-finite entries".into()));
    }
    let (rows, cols) = m.shape();
    if rows < cols {
        let (v, sigma, u) = thin_svd(&m.transpose())?;
        let (mut u, mut v) = (u, v);
        sign_fix_pair(&mut u, &mut v);
        return Ok((u, sigma, v));
    }
    let r = cols;
    if r == 0 {
        return Ok((DMatrix::zeros(rows, 0), DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let (av, v) = jacobi_columns(m.clone())?;
    let norms: Vec<f64> = av.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma = DVector::from_iterator(r, order.iter().map(|&i| norms[i]));
    let floor = sigma[0] * (rows.max(cols) as f64) * f64::EPSILON;
    let kept = if sigma[0] > 0.0 { sigma.iter().filter(|&&s| s > floor).count() } else { 0 };
    let mut u = DMatrix::zeros(rows, r);
    for (j, &i) in order.iter().take(kept).enumerate() {
        u.set_column(j, &(av.column(i) / norms[i]));
    }
    if kept < r {
        let full = complete_to(&gram_schmidt(&u.columns(0, kept).into_owned(), 0.0), r);
        u.columns_mut(kept, r - kept).copy_from(&full.columns(kept, r - kept));
    }
    let mut v = v.select_columns(order.iter());
    sign_fix_pair(&mut u, &mut v);
    Ok((u, sigma, v))
}

/// Sign-fixes the columns of `u` and flips the matching columns of `v`.
fn sign_fix_pair(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        if let Some(&first) = u.column(j).iter().find(|x| x.abs() > SIGN_EPS) {
            if first < 0.0 {
                u.column_mut(j).neg_mut();
                v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Thin SVD with singular values in non-increasing order and sign-fixed left
/// vectors. Returns `(U, sigma)`; `U` has `min(rows, cols)` columns.
pub fn left_singular(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (u, sigma, _) = thin_svd(m)?;
    Ok((u, sigma))
}

/// Singular values only, non-increasing.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    match thin_svd(m) {
        Ok((_, sigma, _)) => sigma,
        Err(_) => {
            let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            DVector::from_vec(s)
        }
    }
}

/// Numerical rank of a non-increasing spectrum of singular values.
pub fn numerical_rank(sigma: &DVector<f64>) -> usize {
    match sigma.iter().next() {
        Some(&top) if top > 0.0 => sigma.iter().filter(|&&s| s > RANK_RTOL * top).count(),
        _ => 0,
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in descending
/// order (ties keep the solver's original index order) and sign-fixed vectors.
pub fn symmetric_eigen_desc(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix contains non-finite entries".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigen-decomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // stable sort: equal eigenvalues stay in index order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = eig.eigenvectors.select_columns(order.iter());
    fix_column_signs(&mut vecs);
    Ok((vals, vecs))
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Columns whose residual norm falls to `drop_tol` or below are discarded, so
/// the output may have fewer columns than the input.
pub fn gram_schmidt(cols: &DMatrix<f64>, drop_tol: f64) -> DMatrix<f64> {
    let n = cols.nrows();
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(cols.ncols());
    for col in cols.column_iter() {
        let mut v: DVector<f64> = col.into_owned();
        for _ in 0..2 {
            for q in &kept {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            kept.push(v / norm);
        }
    }
    if kept.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&kept)
    }
}

/// Extends an orthonormal `n x r` basis to a full `n x n` orthogonal matrix.
/// Candidates are the standard basis vectors, taken greedily by largest
/// residual so the appended columns stay well conditioned.
pub fn orthonormal_completion(basis: &DMatrix<f64>) -> DMatrix<f64> {
    complete_to(basis, basis.nrows())
}

/// Extends an orthonormal `n x r` basis to `n x total` orthonormal columns
/// (`r <= total <= n`), choosing candidates as [`orthonormal_completion`] does.
pub fn complete_to(basis: &DMatrix<f64>, total: usize) -> DMatrix<f64> {
    let n = basis.nrows();
    let total = total.min(n);
    let mut q = basis.clone();
    while q.ncols() < total {
        // ‖(I − QQᵀ) e_j‖² = 1 − ‖row j of Q‖²; take the first largest
        let mut best = (0, f64::NEG_INFINITY);
        for (j, row) in q.row_iter().enumerate() {
            let r = 1.0 - row.norm_squared();
            if r > best.1 {
                best = (j, r);
            }
        }
        let mut v = DVector::zeros(n);
        v[best.0] = 1.0;
        for _ in 0..2 {
            v -= &q * (q.transpose() * &v);
        }
        let k = q.ncols();
        q = q.insert_column(k, 0.0);
        q.set_column(k, &(&v / v.norm()));
    }
    q
}

/// Max-abs deviation of `mᵀm` from the identity.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let k = g.nrows();
    (g - DMatrix::<f64>::identity(k, k)).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_descending_and_sign_fixed() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = symmetric_eigen_desc(&m).unwrap();
        assert_eq!(vals.as_slice(), &[3.0, 2.0, 1.0]);
        for col in vecs.column_iter() {
            let first = col.iter().find(|v| v.abs() > SIGN_EPS).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn gram_schmidt_drops_dependent_columns() {
        let m = DMatrix::from_column_slice(3, 3, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let q = gram_schmidt(&m, 1e-10);
        assert_eq!(q.ncols(), 2);
        assert!(orthonormality_error(&q) < 1e-14);
    }

    #[test]
    fn completion_is_orthogonal() {
        let v = DMatrix::from_column_slice(4, 1, &[0.5, 0.5, 0.5, 0.5]);
        let full = orthonormal_completion(&v);
        assert_eq!(full.shape(), (4, 4));
        assert!(orthonormality_error(&full) < 1e-14);
        assert_eq!(full.column(0), v.column(0));
    }

    #[test]
    fn left_singular_sorted() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 5.0, 0.0]);
        let (u, s) = left_singular(&m).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
        assert!((u[(1, 0)] - 1.0).abs() < 1e-14);
    }

    fn recompose(u: &DMatrix<f64>, s: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        u * DMatrix::from_diagonal(s) * v.transpose()
    }

    #[test]
    fn thin_svd_on_exact_rank_one() {
        // a rank-1 residual from the Grassmann log that the bidiagonal SVD
        // recomposes with a 3e-2 error
        let m = DMatrix::from_column_slice(
            3,
            2,
            &[
                0.09241270250235922,
                -0.05394403605058751,
                -0.23828026619576292,
                -0.22339900092505482,
                0.13040462439953965,
                0.5760200921180831,
            ],
        );
        let (u, s, v) = thin_svd(&m).unwrap();
        assert!((recompose(&u, &s, &v) - &m).amax() < 1e-15);
        let exact = (m.transpose() * &m).trace().sqrt();
        assert!((s[0] - exact).abs() < 1e-15);
        assert!(s[1] < 1e-15);
        assert!(orthonormality_error(&u) < 1e-15 && orthonormality_error(&v) < 1e-15);
    }

    #[test]
    fn thin_svd_shapes_and_accuracy() {
        let tall = DMatrix::from_fn(7, 4, |i, j| ((i * 5 + j * 3) % 7) as f64 - 2.5 + 0.1 * (i * j) as f64);
        for m in [tall.clone(), tall.transpose(), DMatrix::zeros(3, 2)] {
            let (u, s, v) = thin_svd(&m).unwrap();
            let r = m.nrows().min(m.ncols());
            assert_eq!((u.shape(), s.len(), v.shape()), ((m.nrows(), r), r, (m.ncols(), r)));
            assert!((recompose(&u, &s, &v) - &m).amax() < 1e-13);
            assert!(orthonormality_error(&u) < 1e-13 && orthonormality_error(&v) < 1e-13);
            assert!(s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
