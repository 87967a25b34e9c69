//! Classical (Torgerson) multidimensional scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct MdsResult {
    /// `n × k` coordinates.
    pub coords: DMatrix<f64>,
    /// Leading `min(k, n)` eigenvalues of the centred Gram matrix, unclipped.
    pub eigenvalues: DVector<f64>,
    /// Share of absolute eigenvalue mass on negative eigenvalues; zero for
    /// exactly Euclidean input.
    pub negative_mass: f64,
}

/// Embeds a distance matrix into `k` dimensions via `B = −½ J D² J`.
/// Negative eigenvalues are clipped to zero; eigenvector signs are fixed so
/// the first significant entry is positive. Columns past `n` are zero.
pub fn classical_mds(d: &DMatrix<f64>, k: usize) -> Result<MdsResult> {
    if !d.is_square() || d.nrows() == 0 {
        return Err(Error::Shape(format!("distance matrix is {}x{}", d.nrows(), d.ncols())));
    }
    if k == 0 {
        return Err(Error::Config("embedding dimension must be at least 1".into()));
    }
    let n = d.nrows();
    let asym = (d - d.transpose()).abs().max();
    if asym > 1e-9 {
        return Err(Error::Shape(format!("distance matrix asymmetric by {asym:e}")));
    }
    if let Some(i) = (0..n).find(|&i| d[(i, i)].abs() > 1e-12) {
        return Err(Error::Shape(format!("diagonal entry {i} is {} instead of 0", d[(i, i)])));
    }
    let sq = d.map(|v| v * v);
    let row_means: DVector<f64> = sq.column_mean();
    let col_means = sq.row_mean();
    let grand = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - col_means[j] + grand));
    let (vals, vecs) = linalg::symmetric_eigen_desc(&b)?;
    let total: f64 = vals.iter().map(|v| v.abs()).sum();
    let negative: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let used = k.min(n);
    let mut coords = DMatrix::zeros(n, k);
    for c in 0..used {
        let s = vals[c].max(0.0).sqrt();
        for i in 0..n {
            coords[(i, c)] = vecs[(i, c)] * s;
        }
    }
    Ok(MdsResult {
        coords,
        eigenvalues: vals.rows(0, used).into_owned(),
        negative_mass: if total > 0.0 { negative / total } else { 0.0 },
    })
}

/// Euclidean distances between the rows of `coords`.
pub fn embedded_distances(coords: &DMatrix<f64>) -> DMatrix<f64> {
    let n = coords.nrows();
    DMatrix::from_fn(n, n, |i, j| (coords.row(i) - coords.row(j)).norm())
}
