//! Per-mode generalized difference subspace.
//!
//! The mode Gram matrix is the average of the class projectors. Its leading
//! eigenvectors carry what the classes share; the GDS keeps the tail
//! `φ_α..φ_β` and subspaces are re-expressed in that frame.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::subspace::Subspace;

/// Eigenvalues above this count towards the rank of a mode Gram matrix.
pub const GRAM_RANK_TOL: f64 = 1e-10;

/// Default Gram–Schmidt drop threshold for [`project_onto_gds`].
pub const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeGram {
    pub mode: usize,
    pub matrix: DMatrix<f64>,
    pub class_count: usize,
}

/// `G = (1/m) Σ_j U_j U_jᵀ` over one subspace per class.
pub fn mode_gram(class_subspaces: &[Subspace], mode: usize) -> Result<ModeGram> {
    if class_subspaces.len() < 2 {
        return Err(Error::Degenerate(format!(
            "mode Gram matrix needs at least 2 class subspaces, got {}",
            class_subspaces.len()
        )));
    }
    let n = class_subspaces[0].ambient_dim();
    if let Some(bad) = class_subspaces.iter().find(|s| s.ambient_dim() != n) {
        return Err(Error::Dimension(format!(
            "class subspaces live in ambient dimensions {n} and {}",
            bad.ambient_dim()
        )));
    }
    let mut g = DMatrix::zeros(n, n);
    for s in class_subspaces {
        g += s.projector();
    }
    g /= class_subspaces.len() as f64;
    Ok(ModeGram {
        mode,
        matrix: g,
        class_count: class_subspaces.len(),
    })
}

/// Eigen-structure of a mode Gram matrix together with the retained range
/// `alpha..=beta` (1-based, inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct GdsBasis {
    pub mode: usize,
    /// All eigenvectors, columns ordered by descending eigenvalue.
    pub eigvecs: DMatrix<f64>,
    pub eigvals: DVector<f64>,
    pub alpha: usize,
    pub beta: usize,
    pub rank: usize,
    /// Columns `φ_alpha ..= φ_beta`.
    pub basis: DMatrix<f64>,
}

impl GdsBasis {
    pub fn width(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Same eigen-structure with a different retained range.
    pub fn with_range(&self, alpha: usize, beta: Option<usize>) -> Result<GdsBasis> {
        Self::from_eigen(self.mode, self.eigvecs.clone(), self.eigvals.clone(), alpha, beta)
    }

    /// Rebuilds from a stored eigen-decomposition; used by the model reader.
    pub fn from_eigen(
        mode: usize,
        eigvecs: DMatrix<f64>,
        eigvals: DVector<f64>,
        alpha: usize,
        beta: Option<usize>,
    ) -> Result<GdsBasis> {
        if !eigvecs.is_square() || eigvecs.nrows() != eigvals.len() {
            return Err(Error::Shape(format!(
                "eigenvector matrix {}x{} does not match {} eigenvalues",
                eigvecs.nrows(),
                eigvecs.ncols(),
                eigvals.len()
            )));
        }
        let rank = eigvals.iter().filter(|&&v| v > GRAM_RANK_TOL).count();
        let beta = beta.unwrap_or(rank);
        if alpha == 0 {
            return Err(Error::Config("alpha is 1-based and must be at least 1".into()));
        }
        if alpha > rank {
            return Err(Error::Config(format!("alpha {alpha} exceeds Gram rank {rank}")));
        }
        if alpha > beta {
            return Err(Error::Config(format!("alpha {alpha} is greater than beta {beta}")));
        }
        if beta > rank {
            return Err(Error::Config(format!("beta {beta} exceeds Gram rank {rank}")));
        }
        let basis = eigvecs.columns(alpha - 1, beta - alpha + 1).into_owned();
        Ok(GdsBasis {
            mode,
            eigvecs,
            eigvals,
            alpha,
            beta,
            rank,
            basis,
        })
    }
}

/// Eigen-decomposes `gram` and keeps `φ_alpha ..= φ_beta` (1-based;
/// `beta` defaults to the rank). A single retained vector
/// (`alpha == beta`) is allowed.
pub fn gds_from_gram(gram: &ModeGram, alpha: usize, beta: Option<usize>) -> Result<GdsBasis> {
    let (vals, vecs) = linalg::symmetric_eigen_desc(&gram.matrix)?;
    GdsBasis::from_eigen(gram.mode, vecs, vals, alpha, beta)
}

/// `orth(Dᵀ U)`: coordinates of the subspace in the GDS frame,
/// orthonormalized by Gram–Schmidt. Vectors whose residual falls to `tol` or
/// below are dropped; the basis columns of `subspace` have unit norm so `tol`
/// is relative to the largest input vector.
pub fn project_onto_gds(gds: &GdsBasis, subspace: &Subspace, tol: f64) -> Result<Subspace> {
    if gds.ambient_dim() != subspace.ambient_dim() {
        return Err(Error::Dimension(format!(
            "GDS of mode {} lives in dimension {}, subspace in {}",
            gds.mode,
            gds.ambient_dim(),
            subspace.ambient_dim()
        )));
    }
    let coords = gds.basis.transpose() * subspace.basis();
    let q = linalg::gram_schmidt(&coords, tol);
    if q.ncols() == 0 {
        return Err(Error::ProjectionCollapse(format!(
            "subspace is orthogonal to the GDS of mode {} within {tol:e}",
            gds.mode
        )));
    }
    Subspace::new(q)
}
