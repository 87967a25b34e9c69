//! Samples as points on a product of Grassmann manifolds, and the weighted
//! geodesic distance between them.

use crate::error::{Error, Result};
use crate::subspace::{principal_angles, Subspace};

/// One subspace per selected mode, in the pipeline's mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub parts: Vec<Subspace>,
    pub label: Option<usize>,
}

impl ProductPoint {
    pub fn new(parts: Vec<Subspace>, label: Option<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Degenerate("product point needs at least one part".into()));
        }
        Ok(Self { parts, label })
    }

    pub fn modes(&self) -> usize {
        self.parts.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
}

impl WeightVector {
    /// All weights 1: the plain product-manifold distance.
    pub fn uniform(modes: usize) -> Self {
        Self {
            weights: vec![1.0; modes],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `w_i = F_i / Σ F_i`.
pub fn mode_weights(scores: &[f64]) -> Result<WeightVector> {
    if scores.is_empty() {
        return Err(Error::Degenerate("no mode scores to normalize".into()));
    }
    if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite() || **s < 0.0) {
        return Err(Error::DegenerateFisher(format!(
            "mode {i} has Fisher score {s}; resolve degenerate modes before weighting"
        )));
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateFisher("Fisher scores sum to zero".into()));
    }
    Ok(WeightVector {
        weights: scores.iter().map(|s| s / total).collect(),
    })
}

/// Per-mode angle summary fed into the product distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleMetric {
    /// Mean canonical angle over the configured count.
    #[default]
    Mean,
    /// `sqrt(Σ θ_k²)` over the configured count.
    FullSpectrum,
}

impl AngleMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            AngleMetric::Mean => "mean",
            AngleMetric::FullSpectrum => "full-spectrum",
        }
    }
}

/// `ρ = sqrt(Σ_i (w_i θ̄_i)²)` with `θ̄_i` the mean of the first
/// `angle_counts[i]` principal angles between the mode-`i` parts.
pub fn weighted_geodesic(
    a: &ProductPoint,
    b: &ProductPoint,
    weights: &WeightVector,
    angle_counts: &[usize],
) -> Result<f64> {
    weighted_distance(a, b, weights, angle_counts, AngleMetric::Mean)
}

pub fn weighted_distance(
    a: &ProductPoint,
    b: &ProductPoint,
    weights: &WeightVector,
    angle_counts: &[usize],
    metric: AngleMetric,
) -> Result<f64> {
    let n = a.modes();
    if b.modes() != n || weights.len() != n || angle_counts.len() != n {
        return Err(Error::Dimension(format!(
            "mode counts disagree: {} vs {} parts, {} weights, {} angle counts",
            n,
            b.modes(),
            weights.len(),
            angle_counts.len()
        )));
    }
    let mut acc = 0.0;
    for (i, &count) in angle_counts.iter().enumerate().take(n) {
        let spec = principal_angles(&a.parts[i], &b.parts[i], Some(count))?;
        let theta = match metric {
            AngleMetric::Mean => spec.mean_angle(),
            AngleMetric::FullSpectrum => spec.norm(),
        };
        let term = weights.weights[i] * theta;
        acc += term * term;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn axis(n: usize, i: usize) -> Subspace {
        let mut m = DMatrix::zeros(n, 1);
        m[(i, 0)] = 1.0;
        Subspace::new(m).unwrap()
    }

    #[test]
    fn weights_from_fisher_scores() {
        // per-mode Fisher scores 0.57, 0.41, 0.46
        let w = mode_weights(&[0.57, 0.41, 0.46]).unwrap();
        let expect = [0.3958, 0.2847, 0.3194];
        for (g, e) in w.weights.iter().zip(expect) {
            assert!((g - e).abs() < 1e-4, "{g} vs {e}");
        }
        assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let eq = mode_weights(&[2.0, 2.0, 2.0]).unwrap();
        assert!(eq.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn weight_errors() {
        assert!(mode_weights(&[0.0, 0.0]).is_err());
        assert!(mode_weights(&[1.0, f64::INFINITY]).is_err());
        assert!(mode_weights(&[1.0, -1.0]).is_err());
        assert!(mode_weights(&[]).is_err());
    }

    #[test]
    fn orthogonal_three_modes() {
        let a = ProductPoint::new(vec![axis(2, 0), axis(3, 0), axis(4, 0)], None).unwrap();
        let b = ProductPoint::new(vec![axis(2, 1), axis(3, 1), axis(4, 1)], None).unwrap();
        let w = WeightVector {
            weights: vec![1.0 / 3.0; 3],
        };
        let rho = weighted_geodesic(&a, &b, &w, &[1, 1, 1]).unwrap();
        assert!((rho - PI / (2.0 * 3f64.sqrt())).abs() < 1e-12);
        assert_eq!(weighted_geodesic(&a, &a, &w, &[1, 1, 1]).unwrap(), 0.0);
        let plain = weighted_geodesic(&a, &b, &WeightVector::uniform(3), &[1, 1, 1]).unwrap();
        assert!((plain - (3.0 * (PI / 2.0).powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mismatches() {
        let a = ProductPoint::new(vec![axis(2, 0), axis(3, 0)], None).unwrap();
        let b = ProductPoint::new(vec![axis(2, 1)], None).unwrap();
        assert!(weighted_geodesic(&a, &b, &WeightVector::uniform(2), &[1, 1]).is_err());
        assert!(weighted_geodesic(&a, &a, &WeightVector::uniform(2), &[1, 2]).is_err());
        assert!(ProductPoint::new(vec![], None).is_err());
    }
}
