//! Tensor classification on products of Grassmann manifolds.
//!
//! Every mode of a tensor is represented by the leading left-singular
//! subspace of its unfolding, so a tensor becomes a point on a product of
//! Grassmann manifolds. Per-mode generalized difference subspaces (GDS)
//! remove directions shared between classes, the n-mode Fisher score picks
//! how much of each GDS to keep and how to weight the modes, and a weighted
//! geodesic distance drives nearest-neighbour classification.
//!
//! ```
//! use ngds::{fit, generate_synthetic, Method, PipelineConfig, Split, SynthSpec};
//!
//! let spec = SynthSpec { dims: vec![6, 6, 6], samples_per_class: 4, classes: 2, ..SynthSpec::default() };
//! let data = generate_synthetic(&spec).unwrap();
//! let model = fit(&data.split(Split::Train), &PipelineConfig::with_method(Method::Pgm)).unwrap();
//! let metrics = model.evaluate(&data.split(Split::Test)).unwrap();
//! assert!(metrics.accuracy >= 0.0);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod dataset;
pub mod error;
pub mod fisher;
pub mod gds;
pub mod linalg;
pub mod manifold;
pub mod mds;
pub mod pipeline;
pub mod subspace;
pub mod tensor;

pub use dataio::{
    generate_synthetic, ingest_feature_modes, read_model, read_tensor, write_model, write_tensor, DatasetManifest,
    FeatureReplacement, Split, SynthData, SynthSpec,
};
pub use dataset::{Dataset, Sample};
pub use error::{Error, Result};
pub use fisher::{fisher_mode, karcher_mean, nmode_fisher, FisherReport, FisherStatus, KarcherOptions, NModeFisher};
pub use gds::{gds_from_gram, mode_gram, project_onto_gds, GdsBasis, ModeGram};
pub use manifold::{mode_weights, weighted_distance, weighted_geodesic, AngleMetric, ProductPoint, WeightVector};
pub use mds::{classical_mds, MdsResult};
pub use pipeline::{
    extract_sample_point, fit, optimize_gds_dims, Classification, Classifier, Method, Metrics, PipelineConfig,
    SearchStrategy, TrainedModel, WeightMode,
};
pub use subspace::{
    basis_from_unfolding, geodesic_distance, mean_canonical_angle, principal_angles, select_dim, DimPolicy,
    EnergySpectrum, Subspace,
};
pub use tensor::{DenseTensor, HosvdDecomposition, UnfoldedMatrix};
