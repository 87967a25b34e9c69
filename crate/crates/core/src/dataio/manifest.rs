//! Plain-text dataset manifests.
//!
//! ```text
//! # dims: 12x12x12
//! # classes: walk,run,jump
//! walk/0.nmt,0,train
//! run/0.nmt,1,test
//! ```
//!
//! Paths are relative to the manifest's directory; labels are class ids.
//! The `classes` header is optional and names the classes in id order.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};

use super::{read_file, read_tensor, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Manifest(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// As written in the manifest (relative to `root` unless absolute).
    pub path: PathBuf,
    pub label: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Directory that relative entry paths resolve against.
    pub root: PathBuf,
    pub dims: Vec<usize>,
    pub class_names: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(dims: Vec<usize>, class_names: Vec<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Self {
            root: PathBuf::from("."),
            dims,
            class_names,
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let mut dims = None;
        let mut class_names = Vec::new();
        let mut entries = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let at = |msg: String| Error::Manifest(format!("line {}: {msg}", no + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    match key.trim() {
                        "dims" => {
                            let d = value
                                .trim()
                                .split('x')
                                .map(|s| s.trim().parse::<usize>())
                                .collect::<std::result::Result<Vec<_>, _>>()
                                .map_err(|_| at(format!("bad dims `{}`", value.trim())))?;
                            dims = Some(d);
                        }
                        "classes" => class_names = value.split(',').map(|s| s.trim().to_string()).collect(),
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [path, label, split] = fields[..] else {
                return Err(at(format!("expected `path,label,split`, got {} fields", fields.len())));
            };
            let label = label.parse().map_err(|_| at(format!("label `{label}` is not a class id")))?;
            let split = split.parse().map_err(|e: Error| at(e.to_string()))?;
            entries.push(ManifestEntry {
                path: PathBuf::from(path),
                label,
                split,
            });
        }
        let dims = dims.ok_or_else(|| Error::Manifest("missing `# dims:` header".into()))?;
        let m = Self {
            root: root.to_path_buf(),
            dims,
            class_names,
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Manifest(format!("{} is not UTF-8", path.display())))?;
        let root = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Self::parse(&text, &root)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=crate::tensor::MAX_MODES).contains(&self.dims.len()) || self.dims.contains(&0) {
            return Err(Error::Manifest(format!("invalid dims {:?}", self.dims)));
        }
        if self.entries.is_empty() {
            return Err(Error::Manifest("manifest lists no tensors".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.path) {
                return Err(Error::Manifest(format!("duplicate path {}", e.path.display())));
            }
        }
        let m = self.class_count();
        let sizes = self.class_sizes();
        if let Some(j) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::Manifest(format!(
                "labels are not dense: class {j} of 0..{} has no entries",
                m - 1
            )));
        }
        if !self.class_names.is_empty() && self.class_names.len() != m {
            return Err(Error::Manifest(format!(
                "{} class names for {m} labelled classes",
                self.class_names.len()
            )));
        }
        Ok(())
    }

    /// `m`: number of classes.
    pub fn class_count(&self) -> usize {
        self.entries.iter().map(|e| e.label + 1).max().unwrap_or(0)
    }

    /// `m_j`: entries per class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count()];
        for e in &self.entries {
            sizes[e.label] += 1;
        }
        sizes
    }

    /// `v`: total entry count.
    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn names(&self) -> Vec<String> {
        if self.class_names.is_empty() {
            (0..self.class_count()).map(|j| format!("class{j}")).collect()
        } else {
            self.class_names.clone()
        }
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Indices of the entries in `split` (all entries for `None`).
    pub fn indices(&self, split: Option<Split>) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| split.is_none_or(|s| self.entries[i].split == s))
            .collect()
    }

    /// Reads the tensors of `split` and checks them against the header dims.
    pub fn load_dataset(&self, split: Option<Split>) -> Result<Dataset> {
        let idx = self.indices(split);
        let mut samples = Vec::with_capacity(idx.len());
        for &i in &idx {
            let e = &self.entries[i];
            let t = read_tensor(&self.resolve(e))?;
            if t.dims() != self.dims.as_slice() {
                return Err(Error::Dimension(format!(
                    "{} has dims {:?}, manifest declares {:?}",
                    e.path.display(),
                    t.dims(),
                    self.dims
                )));
            }
            samples.push(Sample::new(t));
        }
        Ok(Dataset {
            samples,
            labels: idx.iter().map(|&i| self.entries[i].label).collect(),
            class_names: self.names(),
        })
    }

    pub fn to_text(&self) -> String {
        let dims = self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
        let mut out = format!("# dims: {dims}\n");
        if !self.class_names.is_empty() {
            let _ = writeln!(out, "# classes: {}", self.class_names.join(","));
        }
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.path.display(), e.label, e.split.as_str());
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}
