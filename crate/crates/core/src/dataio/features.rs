//! Precomputed feature matrices that stand in for selected mode unfoldings.

use std::path::{Path, PathBuf};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::{read_matrix, DatasetManifest, Split};

/// Feature files for one mode, aligned with the manifest entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureReplacement {
    /// Zero-based mode whose unfolding is replaced.
    pub mode: usize,
    /// Required row count of every matrix.
    pub feature_dim: usize,
    pub files: Vec<PathBuf>,
}

impl FeatureReplacement {
    /// One file per manifest entry, found in `dir` under the entry's file
    /// name (matrices are stored as 2-mode NMT1 tensors).
    pub fn from_dir(mode: usize, feature_dim: usize, dir: &Path, manifest: &DatasetManifest) -> Self {
        let files = manifest
            .entries
            .iter()
            .map(|e| dir.join(e.path.file_name().unwrap_or(e.path.as_os_str())))
            .collect();
        Self {
            mode,
            feature_dim,
            files,
        }
    }
}

/// Loads `split` of the manifest and attaches the replacement matrices.
pub fn ingest_feature_modes(
    manifest: &DatasetManifest,
    split: Option<Split>,
    replacements: &[FeatureReplacement],
) -> Result<Dataset> {
    let mut data = manifest.load_dataset(split)?;
    let idx = manifest.indices(split);
    for r in replacements {
        if r.mode >= manifest.dims.len() {
            return Err(Error::ModeOutOfRange {
                mode: r.mode,
                ndim: manifest.dims.len(),
            });
        }
        if r.files.len() != manifest.entries.len() {
            return Err(Error::Manifest(format!(
                "mode {} has {} feature files for {} manifest entries",
                r.mode + 1,
                r.files.len(),
                manifest.entries.len()
            )));
        }
        for (sample, &i) in data.samples.iter_mut().zip(&idx) {
            let path = &r.files[i];
            let m = read_matrix(path)?;
            if m.nrows() != r.feature_dim {
                return Err(Error::Dimension(format!(
                    "mode {} features in {}: expected {} rows, found {}",
                    r.mode + 1,
                    path.display(),
                    r.feature_dim,
                    m.nrows()
                )));
            }
            sample.replacements.insert(r.mode, m);
        }
    }
    Ok(data)
}
