//! Training and classification over product-Grassmann points.
//!
//! `fit` fixes one subspace dimension per mode, builds raw sample points,
//! optionally projects them onto per-mode GDS ranges chosen by Fisher-score
//! search, derives mode weights, and keeps everything needed to classify new
//! tensors with the weighted geodesic distance.

mod config;
mod search;

pub use config::*;
pub use search::*;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::fisher::{class_means, fisher_mode_with_means, nmode_fisher, ClassMeans, FisherReport, NModeFisher};
use crate::gds::{mode_gram, project_onto_gds, GdsBasis};
use crate::manifold::{mode_weights, weighted_distance, ProductPoint, WeightVector};
use crate::subspace::{basis_from_matrix, energy_dim, mean_canonical_angle, DimPolicy, Subspace};

/// Groups per-sample items by class id, keeping sample order inside a class.
pub fn group_by_class<T: Clone>(items: &[T], labels: &[usize], class_count: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new(); class_count];
    for (item, &l) in items.iter().zip(labels) {
        out[l].push(item.clone());
    }
    out
}

/// Selected modes (zero-based) for data with `ndim` modes.
pub fn resolve_modes(config: &PipelineConfig, ndim: usize) -> Result<Vec<usize>> {
    if config.modes.is_empty() {
        return Ok((0..ndim).collect());
    }
    if let Some(&m) = config.modes.iter().find(|&&m| m >= ndim) {
        return Err(Error::ModeOutOfRange { mode: m, ndim });
    }
    Ok(config.modes.clone())
}

/// Raw product point of one sample with fixed per-mode dimensions.
pub fn point_with_dims(sample: &Sample, modes: &[usize], dims: &[usize], label: Option<usize>) -> Result<ProductPoint> {
    let parts = modes
        .iter()
        .zip(dims)
        .map(|(&mode, &k)| basis_from_matrix(&*sample.mode_matrix(mode)?, DimPolicy::Fixed(k)))
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(parts, label)
}

/// Raw product point of one sample under `config`: the configured per-mode
/// dimensions when given, else each mode's own energy-selected dimension.
pub fn extract_sample_point(sample: &Sample, config: &PipelineConfig) -> Result<ProductPoint> {
    let modes = resolve_modes(config, sample.tensor.ndim())?;
    let dims = match &config.per_mode_dims {
        Some(d) if d.len() != modes.len() => {
            return Err(Error::Config(format!("{} dims for {} modes", d.len(), modes.len())))
        }
        Some(d) => d.clone(),
        None => modes
            .iter()
            .map(|&m| energy_dim(&*sample.mode_matrix(m)?, config.energy_mu))
            .collect::<Result<_>>()?,
    };
    point_with_dims(sample, &modes, &dims, None)
}

/// Everything `classify` needs, plus training diagnostics.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    /// Training configuration with `modes` resolved.
    pub config: PipelineConfig,
    pub tensor_dims: Vec<usize>,
    /// Rows of each selected mode's matrix (extent, or feature dimension).
    pub mode_ambient: Vec<usize>,
    /// Raw subspace dimension per selected mode.
    pub mode_dims: Vec<usize>,
    pub angle_counts: Vec<usize>,
    /// One GDS per selected mode for the GDS methods.
    pub gds: Option<Vec<GdsBasis>>,
    pub weights: WeightVector,
    pub references: Vec<ProductPoint>,
    /// Per-class Karcher means of the (projected) training parts.
    pub class_means: Vec<ProductPoint>,
    pub class_names: Vec<String>,
    /// Fisher diagnostics of the raw training points.
    pub fisher_raw: NModeFisher,
    /// Fisher diagnostics of the points the classifier uses.
    pub fisher: NModeFisher,
    pub search_trace: Vec<SearchStep>,
    /// Mean canonical angle between class subspaces per mode, before and
    /// after GDS projection. NaN after means some class fell outside the GDS.
    pub class_angles: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: usize,
    /// Per-class distance (nearest reference or class mean); infinite for
    /// classes without references.
    pub class_scores: Vec<f64>,
    /// Index of the nearest reference for the `nn` classifier.
    pub nearest: Option<usize>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` for classes absent from the evaluated set.
    pub per_class_recall: Vec<Option<f64>>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
    /// Mean of (nearest wrong-class score − true-class score).
    pub mean_margin: f64,
    pub predictions: Vec<Classification>,
}

fn check_training_set(dataset: &Dataset) -> Result<usize> {
    if dataset.is_empty() {
        return Err(Error::Degenerate("training set is empty".into()));
    }
    if dataset.labels.len() != dataset.samples.len() {
        return Err(Error::Shape("labels do not match samples".into()));
    }
    let m = dataset.class_count();
    if m < 2 {
        return Err(Error::Degenerate(format!("training needs at least 2 classes, got {m}")));
    }
    if let Some(j) = dataset.class_sizes().iter().position(|&n| n == 0) {
        return Err(Error::Degenerate(format!("class {j} has no training samples")));
    }
    let dims = dataset.samples[0].tensor.dims().to_vec();
    if let Some((i, s)) = dataset.samples.iter().enumerate().find(|(_, s)| s.tensor.dims() != dims) {
        return Err(Error::Dimension(format!(
            "sample {i} has dims {:?}, expected {dims:?}",
            s.tensor.dims()
        )));
    }
    Ok(m)
}

/// Lower median of the per-sample energy-selected dimensions.
fn median_dim(mut ks: Vec<usize>) -> usize {
    ks.sort_unstable();
    ks[(ks.len() - 1) / 2]
}

fn per_mode_means(parts: &[Vec<Subspace>], labels: &[usize], m: usize, config: &PipelineConfig) -> Result<Vec<ClassMeans>> {
    parts
        .par_iter()
        .map(|p| class_means(&group_by_class(p, labels, m), config.karcher))
        .collect()
}

fn fisher_of(
    modes: &[usize],
    parts: &[Vec<Subspace>],
    means: &[ClassMeans],
    labels: &[usize],
    m: usize,
) -> Result<NModeFisher> {
    let reports = parts
        .iter()
        .zip(means)
        .zip(modes)
        .map(|((p, mn), &mode)| fisher_mode_with_means(mode, &group_by_class(p, labels, m), mn))
        .collect::<Result<Vec<FisherReport>>>()?;
    nmode_fisher(&reports)
}

/// Transposes `points[sample].parts[mode]` into `parts[mode][sample]`.
fn by_mode(points: &[ProductPoint]) -> Vec<Vec<Subspace>> {
    let n = points.first().map_or(0, |p| p.modes());
    (0..n).map(|i| points.iter().map(|p| p.parts[i].clone()).collect()).collect()
}

pub fn fit(dataset: &Dataset, config: &PipelineConfig) -> Result<TrainedModel> {
    config.validate()?;
    let m = check_training_set(dataset)?;
    let tensor_dims = dataset.samples[0].tensor.dims().to_vec();
    let modes = resolve_modes(config, tensor_dims.len())?;
    let labels = &dataset.labels;

    let mut mode_ambient = Vec::with_capacity(modes.len());
    for &mode in &modes {
        let rows = dataset.samples[0].mode_rows(mode)?;
        for (i, s) in dataset.samples.iter().enumerate() {
            if s.mode_rows(mode)? != rows {
                return Err(Error::Dimension(format!(
                    "sample {i}: mode {} has {} rows, expected {rows}",
                    mode + 1,
                    s.mode_rows(mode)?
                )));
            }
        }
        mode_ambient.push(rows);
    }

    let mode_dims: Vec<usize> = match &config.per_mode_dims {
        Some(d) if d.len() != modes.len() => {
            return Err(Error::Config(format!("{} dims for {} modes", d.len(), modes.len())))
        }
        Some(d) => d.clone(),
        None => modes
            .iter()
            .map(|&mode| {
                let ks = dataset
                    .samples
                    .par_iter()
                    .map(|s| energy_dim(&*s.mode_matrix(mode)?, config.energy_mu))
                    .collect::<Result<Vec<_>>>()?;
                Ok(median_dim(ks))
            })
            .collect::<Result<_>>()?,
    };
    log::debug!("per-mode subspace dims {mode_dims:?}");

    let raw_points = dataset
        .samples
        .par_iter()
        .zip(labels.par_iter())
        .map(|(s, &l)| point_with_dims(s, &modes, &mode_dims, Some(l)))
        .collect::<Result<Vec<_>>>()?;
    let raw_parts = by_mode(&raw_points);
    let raw_means = per_mode_means(&raw_parts, labels, m, config)?;
    let fisher_raw = fisher_of(&modes, &raw_parts, &raw_means, labels, m)?;

    let mut class_angles = None;
    let (gds, references, parts, means, trace) = if config.method.uses_gds() {
        let grams = modes
            .par_iter()
            .map(|&mode| {
                let class_subspaces = (0..m)
                    .map(|j| {
                        let blocks = dataset
                            .samples
                            .iter()
                            .zip(labels)
                            .filter(|(_, &l)| l == j)
                            .map(|(s, _)| s.mode_matrix(mode).map(|c| c.into_owned()))
                            .collect::<Result<Vec<_>>>()?;
                        let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
                        let mut joined = DMatrix::zeros(blocks[0].nrows(), cols);
                        let mut at = 0;
                        for b in &blocks {
                            joined.columns_mut(at, b.ncols()).copy_from(b);
                            at += b.ncols();
                        }
                        basis_from_matrix(&joined, DimPolicy::Energy(config.class_energy()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((mode_gram(&class_subspaces, mode)?, class_subspaces))
            })
            .collect::<Result<Vec<_>>>()?;
        let (grams, class_subspaces): (Vec<_>, Vec<_>) = grams.into_iter().unzip();
        let sel = optimize_gds_dims(&grams, &raw_parts, labels, m, config)?;
        log::info!("GDS ranges {:?}, F_n {}", sel.ranges, sel.fisher.score);
        let angles = class_subspaces
            .iter()
            .zip(&sel.bases)
            .map(|(classes, basis)| {
                let before = mean_pairwise_angle(classes)?;
                let after = classes
                    .iter()
                    .map(|c| project_onto_gds(basis, c, 1e-10))
                    .collect::<Result<Vec<_>>>()
                    .and_then(|p| mean_pairwise_angle(&p))
                    .unwrap_or(f64::NAN);
                Ok((before, after))
            })
            .collect::<Result<Vec<_>>>()?;
        log::info!("class angles before/after GDS {angles:?}");
        class_angles = Some(angles);
        let refs = (0..dataset.len())
            .map(|i| ProductPoint::new(sel.projected.iter().map(|p| p[i].clone()).collect(), Some(labels[i])))
            .collect::<Result<Vec<_>>>()?;
        let means = per_mode_means(&sel.projected, labels, m, config)?;
        (Some(sel.bases), refs, sel.projected, means, sel.trace)
    } else {
        (None, raw_points, raw_parts, raw_means, Vec::new())
    };
    let fisher = if gds.is_some() {
        fisher_of(&modes, &parts, &means, labels, m)?
    } else {
        fisher_raw.clone()
    };

    let part_dims: Vec<usize> = parts.iter().map(|p| p.iter().map(Subspace::dim).min().unwrap_or(0)).collect();
    let angle_counts = match &config.angle_counts {
        Some(a) if a.len() != modes.len() => {
            return Err(Error::Config(format!("{} angle counts for {} modes", a.len(), modes.len())))
        }
        Some(a) => {
            if let Some(pos) = (0..a.len()).find(|&i| a[i] > part_dims[i]) {
                return Err(Error::Config(format!(
                    "{} angles requested for mode {} whose subspaces have dimension {}",
                    a[pos],
                    modes[pos] + 1,
                    part_dims[pos]
                )));
            }
            a.clone()
        }
        None => part_dims,
    };

    let weights = match config.weight_mode() {
        WeightMode::Uniform => WeightVector::uniform(modes.len()),
        WeightMode::Fisher => mode_weights(&fisher.per_mode.iter().map(|r| r.score).collect::<Vec<_>>())?,
    };

    let class_means = (0..m)
        .map(|j| ProductPoint::new(means.iter().map(|mn| mn.class_means[j].clone()).collect(), Some(j)))
        .collect::<Result<Vec<_>>>()?;

    let mut class_names = dataset.class_names.clone();
    class_names.resize_with(m, String::new);
    for (j, name) in class_names.iter_mut().enumerate() {
        if name.is_empty() {
            *name = format!("class{j}");
        }
    }

    Ok(TrainedModel {
        config: PipelineConfig {
            modes,
            ..config.clone()
        },
        tensor_dims,
        mode_ambient,
        mode_dims,
        angle_counts,
        gds,
        weights,
        references,
        class_means,
        class_names,
        fisher_raw,
        fisher,
        search_trace: trace,
        class_angles,
    })
}

/// Mean canonical angle averaged over all pairs of subspaces.
fn mean_pairwise_angle(classes: &[Subspace]) -> Result<f64> {
    let mut sum = 0.0;
    let mut pairs = 0;
    for (a, p) in classes.iter().enumerate() {
        for q in &classes[a + 1..] {
            sum += mean_canonical_angle(p, q, None)?;
            pairs += 1;
        }
    }
    Ok(if pairs == 0 { 0.0 } else { sum / pairs as f64 })
}

impl TrainedModel {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn modes(&self) -> &[usize] {
        &self.config.modes
    }

    /// Point of `sample` in the model's representation: raw subspaces of the
    /// model's dims, projected onto the GDS when the model has one.
    pub fn transform(&self, sample: &Sample) -> Result<ProductPoint> {
        if sample.tensor.dims() != self.tensor_dims.as_slice() {
            return Err(Error::Dimension(format!(
                "tensor dims {:?} do not match the model's {:?}",
                sample.tensor.dims(),
                self.tensor_dims
            )));
        }
        for (&mode, &rows) in self.modes().iter().zip(&self.mode_ambient) {
            let got = sample.mode_rows(mode)?;
            if got != rows {
                return Err(Error::Dimension(format!(
                    "mode {} has {got} rows, the model expects {rows}",
                    mode + 1
                )));
            }
        }
        let raw = point_with_dims(sample, self.modes(), &self.mode_dims, None)?;
        let Some(gds) = &self.gds else {
            return Ok(raw);
        };
        let parts = raw
            .parts
            .iter()
            .zip(gds)
            .map(|(s, g)| {
                let p = project_onto_gds(g, s, self.config.projection_tol)?;
                if p.dim() < s.dim().min(g.width()) {
                    return Err(Error::ProjectionCollapse(format!(
                        "query keeps {} of {} directions in the GDS of mode {}",
                        p.dim(),
                        s.dim().min(g.width()),
                        g.mode + 1
                    )));
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        ProductPoint::new(parts, None)
    }

    /// Weighted distance between two points in the model's representation.
    pub fn distance(&self, a: &ProductPoint, b: &ProductPoint) -> Result<f64> {
        weighted_distance(a, b, &self.weights, &self.angle_counts, self.config.angle_metric)
    }

    pub fn classify_point(&self, point: &ProductPoint) -> Result<Classification> {
        let m = self.class_count();
        let mut class_scores = vec![f64::INFINITY; m];
        let mut nearest = None;
        match self.config.classifier {
            Classifier::Nn => {
                let dists = self
                    .references
                    .par_iter()
                    .map(|r| self.distance(point, r))
                    .collect::<Result<Vec<_>>>()?;
                let mut best = f64::INFINITY;
                for (i, (r, d)) in self.references.iter().zip(&dists).enumerate() {
                    let l = r.label.unwrap_or(0);
                    if *d < class_scores[l] {
                        class_scores[l] = *d;
                    }
                    if *d < best {
                        best = *d;
                        nearest = Some(i);
                    }
                }
            }
            Classifier::ClassKarcher => {
                for (j, c) in self.class_means.iter().enumerate() {
                    class_scores[j] = self.distance(point, c)?;
                }
            }
        }
        let mut label = 0;
        for j in 1..m {
            if class_scores[j] < class_scores[label] {
                label = j;
            }
        }
        // the nearest reference is reported within the winning class
        if let Some(i) = nearest {
            if self.references[i].label != Some(label) {
                nearest = None;
            }
        }
        Ok(Classification {
            label,
            distance: class_scores[label],
            class_scores,
            nearest,
        })
    }

    pub fn classify(&self, sample: &Sample) -> Result<Classification> {
        self.classify_point(&self.transform(sample)?)
    }

    pub fn evaluate(&self, dataset: &Dataset) -> Result<Metrics> {
        if dataset.is_empty() {
            return Err(Error::Degenerate("evaluation set is empty".into()));
        }
        let m = self.class_count();
        if let Some(&l) = dataset.labels.iter().find(|&&l| l >= m) {
            return Err(Error::Dimension(format!("label {l} is outside the model's {m} classes")));
        }
        let predictions = dataset
            .samples
            .par_iter()
            .map(|s| self.classify(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(metrics_from(predictions, &dataset.labels, m))
    }

    /// Pairwise distances between points, computed row-parallel.
    pub fn pairwise_distances(&self, points: &[ProductPoint]) -> Result<DMatrix<f64>> {
        pairwise(points, |a, b| self.distance(a, b))
    }
}

/// Symmetric distance matrix from the upper triangle of `dist`.
pub fn pairwise(points: &[ProductPoint], dist: impl Fn(&ProductPoint, &ProductPoint) -> Result<f64> + Sync) -> Result<DMatrix<f64>> {
    let n = points.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| dist(&points[i], &points[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            d[(i, i + 1 + off)] = v;
            d[(i + 1 + off, i)] = v;
        }
    }
    Ok(d)
}

pub fn metrics_from(predictions: Vec<Classification>, labels: &[usize], m: usize) -> Metrics {
    let mut confusion = vec![vec![0usize; m]; m];
    let mut margins = Vec::new();
    for (p, &t) in predictions.iter().zip(labels) {
        confusion[t][p.label] += 1;
        let other = p
            .class_scores
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != t)
            .map(|(_, &s)| s)
            .fold(f64::INFINITY, f64::min);
        let margin = other - p.class_scores[t];
        if margin.is_finite() {
            margins.push(margin);
        }
    }
    let correct: usize = (0..m).map(|j| confusion[j][j]).sum();
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[j] as f64 / n as f64)
        })
        .collect();
    let mean_margin = if margins.is_empty() {
        f64::NAN
    } else {
        margins.iter().sum::<f64>() / margins.len() as f64
    };
    Metrics {
        accuracy: correct as f64 / labels.len() as f64,
        per_class_recall,
        confusion,
        mean_margin,
        predictions,
    }
}
