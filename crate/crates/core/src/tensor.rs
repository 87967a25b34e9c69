//! Dense n-mode tensors, mode-k unfolding and folding, mode products, and a
//! full-rank higher-order SVD.
//!
//! Storage is canonical row-major (last index fastest). Unfolding follows the
//! Kolda–Bader convention: for mode `k`, entry `(i_k, j)` holds
//! `T[i_1, .., i_n]` with `j = Σ_{m≠k} i_m · J_m` and
//! `J_m = Π_{l<m, l≠k} I_l` (zero-based indices), so among the remaining
//! modes the earliest one varies fastest along the columns.
//!
//! Modes are zero-based throughout the library API.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest supported number of modes.
pub const MAX_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?} (expected {len})",
                data.len(),
                dims
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index in canonical order.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_len(&dims)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            advance(&mut idx, &dims);
        }
        Ok(Self { dims, data })
    }

    /// Outer product `v_1 ⊗ v_2 ⊗ … ⊗ v_n`.
    pub fn outer(vectors: &[Vec<f64>]) -> Result<Self> {
        let dims: Vec<usize> = vectors.iter().map(Vec::len).collect();
        Self::from_fn(dims, |idx| {
            idx.iter()
                .zip(vectors)
                .map(|(&i, v)| v[i])
                .product()
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        if idx.len() != self.dims.len() || idx.iter().zip(&self.dims).any(|(&i, &d)| i >= d) {
            return None;
        }
        let flat = idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i);
        Some(self.data[flat])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.ndim() {
            return Err(Error::ModeOutOfRange {
                mode,
                ndim: self.ndim(),
            });
        }
        Ok(())
    }

    pub fn unfold(&self, mode: usize) -> Result<UnfoldedMatrix> {
        self.check_mode(mode)?;
        let rows = self.dims[mode];
        let cols = self.len() / rows;
        let mults = column_multipliers(&self.dims, mode);
        let mut m = DMatrix::zeros(rows, cols);
        let mut idx = vec![0usize; self.ndim()];
        for &v in &self.data {
            let col: usize = idx.iter().zip(&mults).map(|(&i, &j)| i * j).sum();
            m[(idx[mode], col)] = v;
            advance(&mut idx, &self.dims);
        }
        Ok(UnfoldedMatrix { mode, matrix: m })
    }

    /// `T ×_mode factor`: every mode-`mode` fiber is multiplied by `factor`.
    pub fn mode_multiply(&self, factor: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
        self.check_mode(mode)?;
        if factor.ncols() != self.dims[mode] {
            return Err(Error::Dimension(format!(
                "factor has {} columns but mode {mode} has extent {}",
                factor.ncols(),
                self.dims[mode]
            )));
        }
        let unfolded = self.unfold(mode)?;
        let mut dims = self.dims.clone();
        dims[mode] = factor.nrows();
        fold(&(factor * &unfolded.matrix), mode, &dims)
    }

    /// Full-rank higher-order SVD: one square orthogonal factor per mode and
    /// the core `S = T ×_1 U_1ᵀ ⋯ ×_n U_nᵀ`.
    pub fn hosvd(&self) -> Result<HosvdDecomposition> {
        let mut factors = Vec::with_capacity(self.ndim());
        for mode in 0..self.ndim() {
            let x = self.unfold(mode)?.matrix;
            let (u, sigma) = linalg::left_singular(&x)?;
            let rank = linalg::numerical_rank(&sigma);
            let leading = u.columns(0, rank).into_owned();
            factors.push(linalg::orthonormal_completion(&leading));
        }
        let mut core = self.clone();
        for (mode, u) in factors.iter().enumerate() {
            core = core.mode_multiply(&u.transpose(), mode)?;
        }
        Ok(HosvdDecomposition { core, factors })
    }

    /// Tensor with the index order along `mode` reversed.
    pub fn reversed_along(&self, mode: usize) -> Result<DenseTensor> {
        self.check_mode(mode)?;
        let extent = self.dims[mode];
        let mut src = vec![0usize; self.ndim()];
        DenseTensor::from_fn(self.dims.clone(), |idx| {
            src.copy_from_slice(idx);
            src[mode] = extent - 1 - idx[mode];
            self.get(&src).expect("index in range")
        })
    }
}

/// A mode-k unfolding: `I_k` rows, `Π_{j≠k} I_j` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedMatrix {
    pub mode: usize,
    pub matrix: DMatrix<f64>,
}

impl UnfoldedMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn fold(&self, dims: &[usize]) -> Result<DenseTensor> {
        fold(&self.matrix, self.mode, dims)
    }
}

/// Inverse of [`DenseTensor::unfold`].
pub fn fold(matrix: &DMatrix<f64>, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    let len = checked_len(dims)?;
    if mode >= dims.len() {
        return Err(Error::ModeOutOfRange {
            mode,
            ndim: dims.len(),
        });
    }
    if matrix.nrows() != dims[mode] || matrix.nrows() * matrix.ncols() != len {
        return Err(Error::Shape(format!(
            "{}x{} matrix cannot fold at mode {mode} into dims {:?}",
            matrix.nrows(),
            matrix.ncols(),
            dims
        )));
    }
    let mults = column_multipliers(dims, mode);
    let mut data = Vec::with_capacity(len);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..len {
        let col: usize = idx.iter().zip(&mults).map(|(&i, &j)| i * j).sum();
        data.push(matrix[(idx[mode], col)]);
        advance(&mut idx, dims);
    }
    Ok(DenseTensor {
        dims: dims.to_vec(),
        data,
    })
}

#[derive(Debug, Clone)]
pub struct HosvdDecomposition {
    pub core: DenseTensor,
    pub factors: Vec<DMatrix<f64>>,
}

impl HosvdDecomposition {
    /// `S ×_1 U_1 ×_2 U_2 ⋯ ×_n U_n`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut t = self.core.clone();
        for (mode, u) in self.factors.iter().enumerate() {
            t = t.mode_multiply(u, mode)?;
        }
        Ok(t)
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.len() < 2 || dims.len() > MAX_MODES {
        return Err(Error::InvalidTensor(format!(
            "expected between 2 and {MAX_MODES} modes, got {}",
            dims.len()
        )));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidTensor(format!("extent of mode {pos} is zero")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidTensor(format!("element count of dims {dims:?} overflows")))
}

/// `J_m = Π_{l<m, l≠mode} I_l`, with `J_mode = 0`.
fn column_multipliers(dims: &[usize], mode: usize) -> Vec<usize> {
    let mut mults = vec![0usize; dims.len()];
    let mut acc = 1usize;
    for (m, &d) in dims.iter().enumerate() {
        if m == mode {
            continue;
        }
        mults[m] = acc;
        acc *= d;
    }
    mults
}

/// Odometer increment, last index fastest.
fn advance(idx: &mut [usize], dims: &[usize]) {
    for m in (0..idx.len()).rev() {
        idx[m] += 1;
        if idx[m] < dims[m] {
            return;
        }
        idx[m] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_tensor(dims: &[usize]) -> DenseTensor {
        let len: usize = dims.iter().product();
        DenseTensor::new(dims.to_vec(), (1..=len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn unfold_2x2x2_by_hand() {
        // T[i1,i2,i3] = 1 + 4 i1 + 2 i2 + i3; mode-0 column j = i2 + 2 i3
        let t = seq_tensor(&[2, 2, 2]);
        let u = t.unfold(0).unwrap();
        let expected = DMatrix::from_row_slice(2, 4, &[1.0, 3.0, 2.0, 4.0, 5.0, 7.0, 6.0, 8.0]);
        assert_eq!(u.matrix, expected);
    }

    #[test]
    fn unfold_other_modes_by_hand() {
        let t = seq_tensor(&[2, 2, 2]);
        // mode 1: j = i1 + 2 i3
        let u1 = t.unfold(1).unwrap().matrix;
        assert_eq!(u1, DMatrix::from_row_slice(2, 4, &[1.0, 5.0, 2.0, 6.0, 3.0, 7.0, 4.0, 8.0]));
        // mode 2: j = i1 + 2 i2
        let u2 = t.unfold(2).unwrap().matrix;
        assert_eq!(u2, DMatrix::from_row_slice(2, 4, &[1.0, 5.0, 3.0, 7.0, 2.0, 6.0, 4.0, 8.0]));
    }

    #[test]
    fn fold_hand_matrix() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 3.0, 2.0, 4.0, 5.0, 7.0, 6.0, 8.0]);
        let t = fold(&m, 0, &[2, 2, 2]).unwrap();
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn fold_rejects_bad_dims() {
        let m = DMatrix::<f64>::zeros(2, 4);
        assert!(matches!(fold(&m, 0, &[2, 2, 3]), Err(Error::Shape(_))));
        assert!(fold(&m, 1, &[2, 2, 2]).is_ok());
        assert!(matches!(fold(&m, 0, &[3, 2, 2]), Err(Error::Shape(_))));
    }

    #[test]
    fn unfold_mode_out_of_range() {
        let t = seq_tensor(&[2, 3]);
        assert!(matches!(t.unfold(2), Err(Error::ModeOutOfRange { mode: 2, ndim: 2 })));
    }

    #[test]
    fn invariants_enforced() {
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::new(vec![4], vec![0.0; 4]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn mode_multiply_identity_and_scale() {
        let t = seq_tensor(&[2, 3, 4]);
        for mode in 0..3 {
            let n = t.dims()[mode];
            let id = DMatrix::<f64>::identity(n, n);
            assert_eq!(t.mode_multiply(&id, mode).unwrap(), t);
            assert_eq!(t.mode_multiply(&(id * 2.0), mode).unwrap(), t.scaled(2.0));
        }
        let wrong = DMatrix::<f64>::zeros(3, 5);
        assert!(matches!(t.mode_multiply(&wrong, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn mode_multiply_changes_extent() {
        let t = seq_tensor(&[2, 3, 4]);
        let a = DMatrix::from_fn(5, 3, |i, j| (i + 2 * j) as f64);
        let r = t.mode_multiply(&a, 1).unwrap();
        assert_eq!(r.dims(), &[2, 5, 4]);
        // entry check against the definition
        let mut expect = 0.0;
        for j in 0..3 {
            expect += a[(4, j)] * t.get(&[1, j, 2]).unwrap();
        }
        assert_eq!(r.get(&[1, 4, 2]).unwrap(), expect);
    }

    #[test]
    fn hosvd_zero_tensor() {
        let t = DenseTensor::zeros(vec![3, 2, 4]).unwrap();
        let h = t.hosvd().unwrap();
        assert!(h.core.data().iter().all(|&v| v == 0.0));
        for u in &h.factors {
            assert!(linalg::orthonormality_error(u) < 1e-12);
        }
        assert_eq!(h.reconstruct().unwrap(), t);
    }

    #[test]
    fn reversal_is_an_involution() {
        let t = seq_tensor(&[2, 3, 4]);
        let r = t.reversed_along(2).unwrap();
        assert_eq!(r.get(&[0, 0, 0]), t.get(&[0, 0, 3]));
        assert_eq!(r.reversed_along(2).unwrap(), t);
    }
}
