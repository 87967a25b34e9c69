//! In-memory labeled samples. A sample is a tensor plus optional per-mode
//! feature matrices that stand in for the corresponding unfoldings.

use std::borrow::Cow;
use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tensor: DenseTensor,
    /// Mode index → feature matrix used instead of that mode's unfolding.
    pub replacements: BTreeMap<usize, DMatrix<f64>>,
}

impl Sample {
    pub fn new(tensor: DenseTensor) -> Self {
        Self {
            tensor,
            replacements: BTreeMap::new(),
        }
    }

    pub fn with_replacement(mut self, mode: usize, features: DMatrix<f64>) -> Result<Self> {
        if mode >= self.tensor.ndim() {
            return Err(Error::ModeOutOfRange {
                mode,
                ndim: self.tensor.ndim(),
            });
        }
        self.replacements.insert(mode, features);
        Ok(self)
    }

    /// The matrix whose column space represents this sample in `mode`.
    pub fn mode_matrix(&self, mode: usize) -> Result<Cow<'_, DMatrix<f64>>> {
        match self.replacements.get(&mode) {
            Some(m) => Ok(Cow::Borrowed(m)),
            None => Ok(Cow::Owned(self.tensor.unfold(mode)?.matrix)),
        }
    }

    /// Ambient dimension of `mode`: feature rows when replaced, else the extent.
    pub fn mode_rows(&self, mode: usize) -> Result<usize> {
        match self.replacements.get(&mode) {
            Some(m) => Ok(m.nrows()),
            None => self.tensor.dims().get(mode).copied().ok_or(Error::ModeOutOfRange {
                mode,
                ndim: self.tensor.ndim(),
            }),
        }
    }
}

impl From<DenseTensor> for Sample {
    fn from(tensor: DenseTensor) -> Self {
        Sample::new(tensor)
    }
}

/// Labeled samples with dense class ids `0..m`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, labels: Vec<usize>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        let m = labels.iter().max().map_or(0, |&l| l + 1);
        Ok(Self {
            samples,
            labels,
            class_names: (0..m).map(|j| format!("class{j}")).collect(),
        })
    }

    pub fn from_tensors(tensors: Vec<DenseTensor>, labels: Vec<usize>) -> Result<Self> {
        Self::new(tensors.into_iter().map(Sample::new).collect(), labels)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of classes `m` (largest label + 1, or the named classes if more).
    pub fn class_count(&self) -> usize {
        let from_labels = self.labels.iter().max().map_or(0, |&l| l + 1);
        from_labels.max(self.class_names.len())
    }

    /// Per-class sample counts `m_j`.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Sub-dataset at the given positions, keeping class names.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}
