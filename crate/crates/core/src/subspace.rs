//! Linear subspaces as points on a Grassmann manifold.
//!
//! A [`Subspace`] is stored as a column-orthonormal basis. Bases come from the
//! raw (uncentered) SVD of an unfolding; no mean is subtracted. Dimension
//! selection uses the cumulative energy of the autocorrelation eigenvalues,
//! i.e. the squared singular values of the unfolding.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::UnfoldedMatrix;

/// Tolerance on `basisᵀ·basis = I` accepted by [`Subspace::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Slack used when comparing a cumulative energy ratio against `mu`.
const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a column-orthonormal basis, rejecting anything that is not
    /// orthonormal within [`ORTHONORMAL_TOL`].
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.nrows() == 0 {
            return Err(Error::Degenerate("subspace basis has no columns".into()));
        }
        if basis.ncols() > basis.nrows() {
            return Err(Error::Dimension(format!(
                "{} basis vectors exceed ambient dimension {}",
                basis.ncols(),
                basis.nrows()
            )));
        }
        let err = linalg::orthonormality_error(&basis);
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::Numerical(format!(
                "basis is not orthonormal (max deviation {err:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes arbitrary spanning columns (Gram–Schmidt, dependent
    /// columns dropped).
    pub fn span(columns: &DMatrix<f64>) -> Result<Self> {
        let scale = columns.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        let q = linalg::gram_schmidt(columns, 1e-10 * scale.max(f64::MIN_POSITIVE));
        Self::new(q)
    }

    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        debug_assert!(linalg::orthonormality_error(&basis) <= ORTHONORMAL_TOL);
        Self { basis }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// The orthogonal projector `U Uᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// The subspace spanned by the first `k` basis vectors.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(Error::Dimension(format!(
                "cannot truncate a {}-dimensional subspace to {k}",
                self.dim()
            )));
        }
        Ok(Self {
            basis: self.basis.columns(0, k).into_owned(),
        })
    }
}

/// Free-function form of [`Subspace::projector`].
pub fn projector(p: &Subspace) -> DMatrix<f64> {
    p.projector()
}

/// Max-abs difference between the projectors of two subspaces.
pub fn projector_distance(p: &Subspace, q: &Subspace) -> f64 {
    (p.projector() - q.projector()).amax()
}

/// Autocorrelation eigenvalues `λ_1 ≥ λ_2 ≥ … ≥ 0` of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    values: Vec<f64>,
}

impl EnergySpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Numerical("spectrum values must be finite and non-negative".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Numerical("spectrum must be non-increasing".into()));
        }
        Ok(Self { values })
    }

    /// Squares singular values into autocorrelation eigenvalues.
    pub fn from_singular_values(sigma: &[f64]) -> Result<Self> {
        Self::new(sigma.iter().map(|s| s * s).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// How many leading basis vectors to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimPolicy {
    Fixed(usize),
    /// Smallest `K` whose cumulative energy ratio reaches `mu`.
    Energy(f64),
}

/// Smallest `K` with `Σ_{k≤K} λ_k / Σ_k λ_k ≥ mu`.
pub fn select_dim(spectrum: &EnergySpectrum, mu: f64) -> Result<usize> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Config(format!("energy fraction {mu} is outside (0, 1]")));
    }
    let total = spectrum.total();
    if !(total > 0.0) {
        return Err(Error::Degenerate("spectrum has no positive energy".into()));
    }
    let mut cum = 0.0;
    for (k, &v) in spectrum.values().iter().enumerate() {
        cum += v;
        if cum / total >= mu - ENERGY_SLACK {
            return Ok(k + 1);
        }
    }
    Ok(spectrum.values().len())
}

/// Leading left-singular subspace of a raw unfolding.
pub fn basis_from_unfolding(matrix: &UnfoldedMatrix, policy: DimPolicy) -> Result<Subspace> {
    basis_from_matrix(&matrix.matrix, policy)
}

/// Leading left-singular subspace of any matrix (columns are the samples).
/// The spectrum is truncated at the numerical rank before energy selection.
pub fn basis_from_matrix(matrix: &DMatrix<f64>, policy: DimPolicy) -> Result<Subspace> {
    let (u, sigma) = leading_spectrum(matrix)?;
    let rank = linalg::numerical_rank(&sigma);
    let k = match policy {
        DimPolicy::Fixed(k) => k,
        DimPolicy::Energy(mu) => {
            let spec = EnergySpectrum::from_singular_values(&sigma.as_slice()[..rank])?;
            select_dim(&spec, mu)?
        }
    };
    if k == 0 {
        return Err(Error::Config("subspace dimension must be at least 1".into()));
    }
    if k > rank {
        return Err(Error::RankDeficient { requested: k, rank });
    }
    Ok(Subspace::from_orthonormal(u.columns(0, k).into_owned()))
}

/// Energy-selected dimension of a matrix without building the basis.
pub fn energy_dim(matrix: &DMatrix<f64>, mu: f64) -> Result<usize> {
    let sigma = linalg::singular_values(matrix);
    if sigma.iter().all(|&s| s == 0.0) {
        return Err(Error::Degenerate("all-zero matrix spans no subspace".into()));
    }
    let rank = linalg::numerical_rank(&sigma);
    select_dim(&EnergySpectrum::from_singular_values(&sigma.as_slice()[..rank])?, mu)
}

fn leading_spectrum(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if matrix.is_empty() || matrix.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all-zero matrix spans no subspace".into()));
    }
    linalg::left_singular(matrix)
}

/// Canonical correlations and principal angles between two subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpectrum {
    /// Cosines in `[0, 1]`, non-increasing.
    pub correlations: Vec<f64>,
    /// Angles in `[0, π/2]`, non-decreasing.
    pub angles: Vec<f64>,
}

impl AngleSpectrum {
    pub fn count(&self) -> usize {
        self.angles.len()
    }

    pub fn mean_angle(&self) -> f64 {
        if self.angles.is_empty() {
            return 0.0;
        }
        self.angles.iter().sum::<f64>() / self.angles.len() as f64
    }

    /// `sqrt(Σ θ_k²)`.
    pub fn norm(&self) -> f64 {
        self.angles.iter().map(|t| t * t).sum::<f64>().sqrt()
    }
}

/// Principal angles between `p` and `q`, smallest first.
///
/// Correlations are the singular values of `U_Pᵀ U_Q` clamped to `[0, 1]`.
/// Angles whose cosine exceeds `1/√2` are taken from the sines (singular
/// values of the residual of the smaller basis against the larger one) since
/// `acos` loses all precision near 1; larger angles use `acos` directly.
pub fn principal_angles(p: &Subspace, q: &Subspace, count: Option<usize>) -> Result<AngleSpectrum> {
    if p.ambient_dim() != q.ambient_dim() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            p.ambient_dim(),
            q.ambient_dim()
        )));
    }
    let full = p.dim().min(q.dim());
    let count = count.unwrap_or(full);
    if count > full {
        return Err(Error::Dimension(format!(
            "{count} angles requested but the subspaces have dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    // `big` has at least as many columns as `small`
    let (big, small) = if p.dim() >= q.dim() { (p, q) } else { (q, p) };
    let cross = big.basis().transpose() * small.basis();
    let cosines = linalg::singular_values(&cross);
    let residual = small.basis() - big.basis() * &cross;
    let sines = linalg::singular_values(&residual);

    let mut angles: Vec<f64> = (0..full)
        .map(|k| {
            let c = cosines[k].clamp(0.0, 1.0);
            if c * c >= 0.5 {
                sines[full - 1 - k].clamp(0.0, 1.0).asin()
            } else {
                c.acos()
            }
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.truncate(count);
    let correlations = cosines.iter().take(count).map(|c| c.clamp(0.0, 1.0)).collect();
    Ok(AngleSpectrum {
        correlations,
        angles,
    })
}

/// Mean of the first `count` principal angles (all of them when `None`).
pub fn mean_canonical_angle(p: &Subspace, q: &Subspace, count: Option<usize>) -> Result<f64> {
    Ok(principal_angles(p, q, count)?.mean_angle())
}

/// Grassmann geodesic distance `sqrt(Σ θ_k²)` over all `min(dim P, dim Q)` angles.
pub fn geodesic_distance(p: &Subspace, q: &Subspace) -> Result<f64> {
    Ok(principal_angles(p, q, None)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    fn cols(n: usize, vs: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_columns(&vs.iter().map(|v| DVector::from_column_slice(&v[..n])).collect::<Vec<_>>())
    }

    fn r3_pair() -> (Subspace, Subspace) {
        let p = Subspace::new(cols(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])).unwrap();
        let q = Subspace::new(cols(3, &[&[1.0, 0.0, 0.0], &[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]])).unwrap();
        (p, q)
    }

    #[test]
    fn r3_angles_analytic() {
        let (p, q) = r3_pair();
        let a = principal_angles(&p, &q, None).unwrap();
        assert!(a.angles[0].abs() < 1e-12);
        assert!((a.angles[1] - FRAC_PI_4).abs() < 1e-12);
        assert!((mean_canonical_angle(&p, &q, Some(2)).unwrap() - FRAC_PI_8).abs() < 1e-12);
        assert!((geodesic_distance(&p, &q).unwrap() - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn identical_and_orthogonal() {
        let (p, _) = r3_pair();
        let a = principal_angles(&p, &p, None).unwrap();
        assert!(a.angles.iter().all(|t| t.abs() < 1e-12));
        assert_eq!(geodesic_distance(&p, &p).unwrap(), 0.0);
        let e1 = Subspace::new(cols(2, &[&[1.0, 0.0]])).unwrap();
        let e2 = Subspace::new(cols(2, &[&[0.0, 1.0]])).unwrap();
        assert!((geodesic_distance(&e1, &e2).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((mean_canonical_angle(&e1, &e2, None).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let (p, _) = r3_pair();
        let e1 = Subspace::new(cols(2, &[&[1.0, 0.0]])).unwrap();
        assert!(matches!(principal_angles(&p, &e1, None), Err(Error::Dimension(_))));
        assert!(geodesic_distance(&p, &e1).is_err());
        assert!(principal_angles(&p, &p, Some(3)).is_err());
    }

    #[test]
    fn select_dim_examples() {
        let s = EnergySpectrum::new(vec![9.0, 1.0]).unwrap();
        assert_eq!(select_dim(&s, 0.9).unwrap(), 1);
        assert_eq!(select_dim(&s, 1.0).unwrap(), 2);
        let flat = EnergySpectrum::new(vec![1.0; 4]).unwrap();
        assert_eq!(select_dim(&flat, 0.9).unwrap(), 4);
        assert_eq!(select_dim(&flat, 0.75).unwrap(), 3);
        let zero = EnergySpectrum::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(select_dim(&zero, 0.5), Err(Error::Degenerate(_))));
        assert!(select_dim(&s, 0.0).is_err());
    }

    #[test]
    fn basis_from_unfolding_examples() {
        let m = UnfoldedMatrix {
            mode: 0,
            matrix: cols(3, &[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]),
        };
        let s = basis_from_unfolding(&m, DimPolicy::Fixed(1)).unwrap();
        assert_eq!(s.basis().column(0).as_slice(), &[1.0, 0.0, 0.0]);

        let id = UnfoldedMatrix {
            mode: 0,
            matrix: DMatrix::identity(4, 4),
        };
        assert_eq!(basis_from_unfolding(&id, DimPolicy::Energy(0.9)).unwrap().dim(), 4);

        let zero = UnfoldedMatrix {
            mode: 0,
            matrix: DMatrix::zeros(3, 3),
        };
        assert!(matches!(basis_from_unfolding(&zero, DimPolicy::Fixed(1)), Err(Error::Degenerate(_))));
        assert!(matches!(
            basis_from_unfolding(&m, DimPolicy::Fixed(3)),
            Err(Error::RankDeficient { requested: 3, rank: 2 })
        ));
    }

    #[test]
    fn projector_examples() {
        let e1 = Subspace::new(cols(2, &[&[1.0, 0.0]])).unwrap();
        assert_eq!(e1.projector(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let (p, _) = r3_pair();
        assert!((p.projector().trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_clamped() {
        // nearly-identical basis whose singular values may round above 1
        let b = cols(3, &[&[1.0, 1e-16, 0.0], &[0.0, 1.0, 0.0]]);
        let p = Subspace::new(b).unwrap();
        let a = principal_angles(&p, &p, None).unwrap();
        assert!(a.correlations.iter().all(|&c| c <= 1.0));
    }

    #[test]
    fn unequal_dimensions() {
        let p = Subspace::new(DMatrix::identity(4, 3)).unwrap();
        let q = Subspace::new(cols(4, &[&[0.0, 0.0, 0.0, 1.0]])).unwrap();
        let a = principal_angles(&p, &q, None).unwrap();
        assert_eq!(a.count(), 1);
        assert!((a.angles[0] - FRAC_PI_2).abs() < 1e-12);
        let b = principal_angles(&q, &p, None).unwrap();
        assert_eq!(a, b);
    }
}
