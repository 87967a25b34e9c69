//! Seeded synthetic tensors with planted per-mode class structure.
//!
//! Random stream: `ChaCha8Rng::seed_from_u64(seed)`. A uniform draw is
//! `(next_u64 >> 11) · 2⁻⁵³`; a standard normal takes two uniforms
//! `u1, u2` and returns `sqrt(−2 ln(1 − u1)) · cos(2π u2)`. Matrices are
//! filled row-major.
//!
//! Draw order: for every mode in turn, the planted bases; then the samples,
//! class by class. Per sample: the `r^n` core (`r = shared + class_dim`,
//! canonical order), then for every mode the `r × r` mixing matrix `M_k`
//! followed by the `I_k × r` noise `E_k`.
//!
//! Planted bases for mode `k` (extent `I`): when `shared + m·class_dim ≤ I`
//! one `I × (shared + m·class_dim)` Gaussian block is orthonormalized by
//! modified Gram–Schmidt and cut into the shared block and the `m` class
//! blocks, so all blocks are mutually orthogonal. Otherwise the shared
//! block comes from its own Gaussian draw and each class block from a
//! Gaussian draw orthogonalized against the shared block only.
//!
//! A sample of class `j` is `C ×_1 F_1 ⋯ ×_n F_n` with
//! `F_k = B_jk M_k + σ · sqrt(r / I_k) · E_k` and `B_jk = [shared | class_j]`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::linalg::gram_schmidt;
use crate::tensor::DenseTensor;

use super::{write_tensor, DatasetManifest, ManifestEntry, Split};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub dims: Vec<usize>,
    pub shared_dim: usize,
    pub class_dim: usize,
    pub within_noise: f64,
    pub seed: u64,
    /// Leading fraction of each class assigned to the train split.
    pub train_frac: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            samples_per_class: 10,
            dims: vec![12, 12, 12],
            shared_dim: 1,
            class_dim: 2,
            within_noise: 0.15,
            seed: 7,
            train_frac: 0.7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.classes < 1 || self.samples_per_class < 1 {
            return bad("need at least one class and one sample per class".into());
        }
        if !(2..=crate::tensor::MAX_MODES).contains(&self.dims.len()) {
            return bad(format!("{} modes requested, supported 2..={}", self.dims.len(), crate::tensor::MAX_MODES));
        }
        if self.class_dim == 0 {
            return bad("class_dim must be at least 1".into());
        }
        let r = self.shared_dim + self.class_dim;
        if let Some(&d) = self.dims.iter().find(|&&d| d < r) {
            return bad(format!("shared_dim + class_dim = {r} exceeds extent {d}"));
        }
        if !(self.within_noise >= 0.0 && self.within_noise.is_finite()) {
            return bad(format!("within-class noise {} must be finite and non-negative", self.within_noise));
        }
        if !(0.0..=1.0).contains(&self.train_frac) {
            return bad(format!("train fraction {} is outside [0, 1]", self.train_frac));
        }
        Ok(())
    }

    /// Train-split size of one class.
    pub fn train_count(&self) -> usize {
        ((self.train_frac * self.samples_per_class as f64).round() as usize).min(self.samples_per_class)
    }
}

/// Planted orthonormal blocks of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedMode {
    pub shared: DMatrix<f64>,
    pub class_blocks: Vec<DMatrix<f64>>,
}

impl PlantedMode {
    /// `[shared | class_j]`.
    pub fn class_basis(&self, j: usize) -> DMatrix<f64> {
        let s = self.shared.ncols();
        let c = self.class_blocks[j].ncols();
        let mut b = DMatrix::zeros(self.shared.nrows(), s + c);
        b.columns_mut(0, s).copy_from(&self.shared);
        b.columns_mut(s, c).copy_from(&self.class_blocks[j]);
        b
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub spec: SynthSpec,
    /// Class-major sample order.
    pub dataset: Dataset,
    pub splits: Vec<Split>,
    pub planted: Vec<PlantedMode>,
}

impl SynthData {
    pub fn split(&self, split: Split) -> Dataset {
        let idx: Vec<usize> = (0..self.splits.len()).filter(|&i| self.splits[i] == split).collect();
        self.dataset.subset(&idx)
    }

    /// Writes `c{j}_s{i}.nmt` tensors plus `manifest.txt` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<DatasetManifest> {
        let per = self.spec.samples_per_class;
        let mut entries = Vec::with_capacity(self.dataset.len());
        for (n, (s, &label)) in self.dataset.samples.iter().zip(&self.dataset.labels).enumerate() {
            let name = format!("c{label}_s{}.nmt", n % per);
            write_tensor(&dir.join(&name), &s.tensor)?;
            entries.push(ManifestEntry {
                path: name.into(),
                label,
                split: self.splits[n],
            });
        }
        let mut manifest = DatasetManifest::new(self.spec.dims.clone(), self.dataset.class_names.clone(), entries)?;
        manifest.write(&dir.join("manifest.txt"))?;
        manifest.root = dir.to_path_buf();
        Ok(manifest)
    }
}

/// The generator's random stream (see the module docs for the exact draws).
pub struct SynthRng(ChaCha8Rng);

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Standard normal matrix, filled row-major.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.normal();
            }
        }
        m
    }
}

fn orthonormal(cols: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = gram_schmidt(cols, 1e-10);
    if q.ncols() != cols.ncols() {
        return Err(Error::Numerical("random block lost rank during orthonormalization".into()));
    }
    Ok(q)
}

fn plant_mode(rng: &mut SynthRng, extent: usize, spec: &SynthSpec) -> Result<PlantedMode> {
    let (s, c, m) = (spec.shared_dim, spec.class_dim, spec.classes);
    if s + m * c <= extent {
        let q = orthonormal(&rng.matrix(extent, s + m * c))?;
        return Ok(PlantedMode {
            shared: q.columns(0, s).into_owned(),
            class_blocks: (0..m).map(|j| q.columns(s + j * c, c).into_owned()).collect(),
        });
    }
    let shared = if s > 0 {
        orthonormal(&rng.matrix(extent, s))?
    } else {
        DMatrix::zeros(extent, 0)
    };
    let mut class_blocks = Vec::with_capacity(m);
    for _ in 0..m {
        let g = rng.matrix(extent, c);
        let g = &g - &shared * (shared.transpose() * &g);
        class_blocks.push(orthonormal(&g)?);
    }
    Ok(PlantedMode { shared, class_blocks })
}

/// One sample `C ×_1 F_1 ⋯ ×_n F_n` around per-mode orthonormal bases of a
/// common width `r`, with `F_k = B_k M_k + noise · sqrt(r / I_k) · E_k`.
pub fn mixed_sample(rng: &mut SynthRng, bases: &[DMatrix<f64>], noise: f64) -> Result<DenseTensor> {
    let r = bases.first().map_or(0, |b| b.ncols());
    if r == 0 || bases.iter().any(|b| b.ncols() != r) {
        return Err(Error::Shape("mixing bases need one common, positive width".into()));
    }
    let mut t = DenseTensor::from_fn(vec![r; bases.len()], |_| rng.normal())?;
    for (k, b) in bases.iter().enumerate() {
        let mix = rng.matrix(r, r);
        let e = rng.matrix(b.nrows(), r);
        let scale = noise * (r as f64 / b.nrows() as f64).sqrt();
        t = t.mode_multiply(&(b * mix + e * scale), k)?;
    }
    Ok(t)
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = SynthRng::new(spec.seed);
    let planted = spec
        .dims
        .iter()
        .map(|&d| plant_mode(&mut rng, d, spec))
        .collect::<Result<Vec<_>>>()?;
    let train = spec.train_count();
    let mut samples = Vec::with_capacity(spec.classes * spec.samples_per_class);
    let mut labels = Vec::with_capacity(samples.capacity());
    let mut splits = Vec::with_capacity(samples.capacity());
    for j in 0..spec.classes {
        let bases: Vec<DMatrix<f64>> = planted.iter().map(|p| p.class_basis(j)).collect();
        for i in 0..spec.samples_per_class {
            let t = mixed_sample(&mut rng, &bases, spec.within_noise)?;
            samples.push(Sample::new(t));
            labels.push(j);
            splits.push(if i < train { Split::Train } else { Split::Test });
        }
    }
    let mut dataset = Dataset::new(samples, labels)?;
    dataset.class_names = (0..spec.classes).map(|j| format!("class{j}")).collect();
    Ok(SynthData {
        spec: spec.clone(),
        dataset,
        splits,
        planted,
    })
}
