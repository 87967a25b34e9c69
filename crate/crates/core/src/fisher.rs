//! Karcher means on the Grassmann manifold and the n-mode Fisher score.
//!
//! The between-class term averages the geodesic distance from each class
//! mean to the mean of the class means; the within-class term averages the
//! distance from every sample to its class mean. The n-mode score averages
//! both terms over modes before dividing.

use log::{debug, warn};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::subspace::{geodesic_distance, Subspace};

/// Variability terms at or below this are treated as zero.
pub const FISHER_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KarcherOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KarcherMean {
    pub mean: Subspace,
    pub iterations: usize,
    /// Frobenius norm of the averaged log map at the returned point.
    pub tangent_norm: f64,
    pub converged: bool,
}

/// Grassmann logarithm `Log_base(target)`, valid for principal angles up to
/// and including π/2 (Procrustes-aligned variant).
pub fn grassmann_log(base: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cross = target.transpose() * base;
    let (q, _, r) = linalg::thin_svd(&cross)?;
    let aligned = target * (q * r.transpose());
    let horizontal = &aligned - base * (base.transpose() * &aligned);
    let (mut scaled, sines, v) = linalg::thin_svd(&horizontal)?;
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= sines[k].clamp(0.0, 1.0).asin();
    }
    Ok(scaled * v.transpose())
}

/// Grassmann exponential `Exp_base(tangent)`, re-orthonormalized.
pub fn grassmann_exp(base: &DMatrix<f64>, tangent: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (mut usin, sigma, v) = linalg::thin_svd(tangent)?;
    let p = v.ncols();
    let mut vcos = base * &v;
    for k in 0..p {
        vcos.column_mut(k).scale_mut(sigma[k].cos());
        usin.column_mut(k).scale_mut(sigma[k].sin());
    }
    let moved = (vcos + usin) * v.transpose();
    let q = linalg::gram_schmidt(&moved, 1e-12);
    if q.ncols() != p {
        return Err(Error::Numerical("Grassmann exp lost rank".into()));
    }
    Ok(q)
}

/// Intrinsic mean of equal-dimension subspaces.
///
/// Starts from the leading eigenvectors of the averaged projectors and takes
/// full Karcher steps (mean of log maps, then exp) until the mean tangent
/// norm drops below `opts.tol`. If `max_iter` is reached the best iterate by
/// summed squared distance is returned with `converged = false`.
pub fn karcher_mean(subspaces: &[Subspace], opts: KarcherOptions) -> Result<KarcherMean> {
    let first = subspaces
        .first()
        .ok_or_else(|| Error::Degenerate("Karcher mean of an empty set".into()))?;
    let (n, k) = (first.ambient_dim(), first.dim());
    if let Some(bad) = subspaces.iter().find(|s| s.ambient_dim() != n || s.dim() != k) {
        return Err(Error::Dimension(format!(
            "Karcher mean inputs must share shape {n}x{k}, found {}x{}",
            bad.ambient_dim(),
            bad.dim()
        )));
    }
    if subspaces.len() == 1 {
        return Ok(KarcherMean {
            mean: first.clone(),
            iterations: 0,
            tangent_norm: 0.0,
            converged: true,
        });
    }

    let mut avg = DMatrix::zeros(n, n);
    for s in subspaces {
        avg += s.projector();
    }
    avg /= subspaces.len() as f64;
    let (_, vecs) = linalg::symmetric_eigen_desc(&avg)?;
    let mut current = vecs.columns(0, k).into_owned();

    let cost = |y: &DMatrix<f64>| -> Result<f64> {
        let ys = Subspace::from_orthonormal(y.clone());
        subspaces
            .iter()
            .map(|s| geodesic_distance(&ys, s).map(|d| d * d))
            .sum()
    };

    // Gradient steps along the averaged log map. A step that raises the cost
    // is halved: near the cut locus the log map jumps and a full step can
    // overshoot.
    let mut c = cost(&current)?;
    let mut best = (c, current.clone(), f64::INFINITY);
    for iter in 0..=opts.max_iter {
        let mut tangent = DMatrix::zeros(n, k);
        for s in subspaces {
            tangent += grassmann_log(&current, s.basis())?;
        }
        tangent /= subspaces.len() as f64;
        let norm = tangent.norm();
        if c <= best.0 {
            best = (c, current.clone(), norm);
        }
        if norm < opts.tol {
            return Ok(KarcherMean {
                mean: Subspace::from_orthonormal(current),
                iterations: iter,
                tangent_norm: norm,
                converged: true,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let mut step = 1.0;
        loop {
            let next = grassmann_exp(&current, &(&tangent * step))?;
            let nc = cost(&next)?;
            if nc <= c || step < 1e-3 {
                current = next;
                c = nc;
                break;
            }
            step *= 0.5;
        }
    }
    if best.2 > opts.tol.sqrt() {
        warn!(
            "Karcher mean stopped after {} iterations with tangent norm {:e}",
            opts.max_iter, best.2
        );
    } else {
        debug!("Karcher mean reached tangent norm {:e} after {} iterations", best.2, opts.max_iter);
    }
    Ok(KarcherMean {
        mean: Subspace::from_orthonormal(best.1),
        iterations: opts.max_iter,
        tangent_norm: best.2,
        converged: false,
    })
}

/// How a Fisher ratio should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherStatus {
    Finite,
    /// Within-class spread is zero while classes are apart: perfectly separable.
    Infinite,
    /// Both terms vanish: nothing to separate.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    pub mode: usize,
    pub between: f64,
    pub within: f64,
    /// `between / within`; `+∞` or NaN per `status`.
    pub score: f64,
    pub status: FisherStatus,
}

impl FisherReport {
    /// Ratio with explicit degenerate-case flags.
    pub fn from_terms(mode: usize, between: f64, within: f64) -> Self {
        let (score, status) = ratio(between, within);
        Self {
            mode,
            between,
            within,
            score,
            status,
        }
    }

    /// Builds the report from raw distances: class-mean-to-global-mean
    /// distances (one per class) and sample-to-class-mean distances (one per
    /// sample).
    pub fn from_distances(mode: usize, between_dists: &[f64], within_dists: &[f64]) -> Result<Self> {
        if between_dists.is_empty() || within_dists.is_empty() {
            return Err(Error::Degenerate("Fisher terms need at least one distance each".into()));
        }
        let between = between_dists.iter().sum::<f64>() / between_dists.len() as f64;
        let within = within_dists.iter().sum::<f64>() / within_dists.len() as f64;
        Ok(Self::from_terms(mode, between, within))
    }

    pub fn is_finite(&self) -> bool {
        self.status == FisherStatus::Finite
    }
}

fn ratio(between: f64, within: f64) -> (f64, FisherStatus) {
    if within > FISHER_ZERO_TOL {
        (between / within, FisherStatus::Finite)
    } else if between > FISHER_ZERO_TOL {
        (f64::INFINITY, FisherStatus::Infinite)
    } else {
        (f64::NAN, FisherStatus::Indeterminate)
    }
}

/// Per-class Karcher means plus the mean of those means.
#[derive(Debug, Clone)]
pub struct ClassMeans {
    pub class_means: Vec<Subspace>,
    pub global_mean: Subspace,
}

pub fn class_means(subspaces_by_class: &[Vec<Subspace>], opts: KarcherOptions) -> Result<ClassMeans> {
    if subspaces_by_class.len() < 2 {
        return Err(Error::Degenerate(format!(
            "Fisher score needs at least 2 classes, got {}",
            subspaces_by_class.len()
        )));
    }
    if let Some(j) = subspaces_by_class.iter().position(Vec::is_empty) {
        return Err(Error::Degenerate(format!("class {j} has no subspaces")));
    }
    let class_means = subspaces_by_class
        .iter()
        .map(|c| karcher_mean(c, opts).map(|k| k.mean))
        .collect::<Result<Vec<_>>>()?;
    let global_mean = karcher_mean(&class_means, opts)?.mean;
    Ok(ClassMeans {
        class_means,
        global_mean,
    })
}

/// Fisher report for one mode given the per-class sample subspaces.
pub fn fisher_mode(mode: usize, subspaces_by_class: &[Vec<Subspace>], opts: KarcherOptions) -> Result<FisherReport> {
    let means = class_means(subspaces_by_class, opts)?;
    fisher_mode_with_means(mode, subspaces_by_class, &means)
}

/// [`fisher_mode`] with the Karcher means already computed.
pub fn fisher_mode_with_means(
    mode: usize,
    subspaces_by_class: &[Vec<Subspace>],
    means: &ClassMeans,
) -> Result<FisherReport> {
    if means.class_means.len() != subspaces_by_class.len() {
        return Err(Error::Shape(format!(
            "{} class means for {} classes",
            means.class_means.len(),
            subspaces_by_class.len()
        )));
    }
    let between = means
        .class_means
        .iter()
        .map(|kj| geodesic_distance(kj, &means.global_mean))
        .collect::<Result<Vec<_>>>()?;
    let mut within = Vec::new();
    for (class, kj) in subspaces_by_class.iter().zip(&means.class_means) {
        for s in class {
            within.push(geodesic_distance(s, kj)?);
        }
    }
    FisherReport::from_distances(mode, &between, &within)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NModeFisher {
    pub per_mode: Vec<FisherReport>,
    pub between: f64,
    pub within: f64,
    pub score: f64,
    pub status: FisherStatus,
}

/// Averages the between and within terms over modes, then divides.
pub fn nmode_fisher(reports: &[FisherReport]) -> Result<NModeFisher> {
    if reports.is_empty() {
        return Err(Error::Degenerate("n-mode Fisher score of zero modes".into()));
    }
    let n = reports.len() as f64;
    let between = reports.iter().map(|r| r.between).sum::<f64>() / n;
    let within = reports.iter().map(|r| r.within).sum::<f64>() / n;
    let (score, status) = ratio(between, within);
    Ok(NModeFisher {
        per_mode: reports.to_vec(),
        between,
        within,
        score,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::projector_distance;

    fn line(deg: f64) -> Subspace {
        let t = deg.to_radians();
        Subspace::new(DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()])).unwrap()
    }

    #[test]
    fn karcher_fixed_point_and_singleton() {
        let s = Subspace::span(&DMatrix::from_column_slice(4, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0])).unwrap();
        let k = karcher_mean(&[s.clone(), s.clone(), s.clone()], KarcherOptions::default()).unwrap();
        assert!(geodesic_distance(&k.mean, &s).unwrap() <= 1e-10);
        assert!(k.converged);
        let k1 = karcher_mean(std::slice::from_ref(&s), KarcherOptions::default()).unwrap();
        assert!(geodesic_distance(&k1.mean, &s).unwrap() <= 1e-10);
        assert!(karcher_mean(&[], KarcherOptions::default()).is_err());
    }

    #[test]
    fn karcher_bisects_symmetric_lines() {
        // oracle: brute-force minimisation of summed squared line-angle
        // distances over a fine grid of candidate lines
        let (a, b) = (20.0, 70.0);
        let k = karcher_mean(&[line(a), line(b)], KarcherOptions::default()).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        let steps = 180_000;
        for i in 0..steps {
            let deg = i as f64 * 180.0 / steps as f64;
            let d = |x: f64| {
                let diff = (deg - x).rem_euclid(180.0);
                diff.min(180.0 - diff).to_radians()
            };
            let c = d(a).powi(2) + d(b).powi(2);
            if c < best.0 {
                best = (c, deg);
            }
        }
        assert!((best.1 - 45.0).abs() < 1e-2);
        assert!(geodesic_distance(&k.mean, &line(45.0)).unwrap() <= 1e-8);
    }

    #[test]
    fn karcher_iterates_off_the_initial_guess() {
        // three lines, asymmetric: projector mean is not the Karcher mean
        let inputs = [line(0.0), line(10.0), line(60.0)];
        let k = karcher_mean(&inputs, KarcherOptions::default()).unwrap();
        assert!(k.converged);
        // on the circle of lines the Karcher mean is the arithmetic mean here
        assert!(geodesic_distance(&k.mean, &line(70.0 / 3.0)).unwrap() < 1e-8);
    }

    #[test]
    fn karcher_dimension_mismatch() {
        let a = line(0.0);
        let b = Subspace::new(DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            karcher_mean(&[a, b], KarcherOptions::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn planar_two_class_score_is_eight() {
        let classes = vec![vec![line(0.0), line(10.0)], vec![line(80.0), line(90.0)]];
        let r = fisher_mode(0, &classes, KarcherOptions::default()).unwrap();
        assert!((r.between - 40f64.to_radians()).abs() < 1e-9);
        assert!((r.within - 5f64.to_radians()).abs() < 1e-9);
        assert!((r.score - 8.0).abs() < 1e-9);
        assert_eq!(r.status, FisherStatus::Finite);
    }

    #[test]
    fn degenerate_fisher_flags() {
        let sep = vec![vec![line(0.0), line(0.0)], vec![line(90.0), line(90.0)]];
        let r = fisher_mode(0, &sep, KarcherOptions::default()).unwrap();
        assert_eq!(r.status, FisherStatus::Infinite);
        assert!(r.score.is_infinite());
        assert!((r.between - std::f64::consts::FRAC_PI_4).abs() < 1e-9);

        let same = vec![vec![line(30.0), line(30.0)], vec![line(30.0)]];
        let r = fisher_mode(0, &same, KarcherOptions::default()).unwrap();
        assert_eq!(r.status, FisherStatus::Indeterminate);
        assert!(fisher_mode(0, &same[..1], KarcherOptions::default()).is_err());
    }

    #[test]
    fn nmode_examples() {
        let one = FisherReport::from_terms(0, 2.0, 0.5);
        assert_eq!(nmode_fisher(&[one]).unwrap().score, 4.0);
        let r = nmode_fisher(&[FisherReport::from_terms(0, 2.0, 1.0), FisherReport::from_terms(1, 4.0, 1.0)]).unwrap();
        assert_eq!(r.score, 3.0);
        assert!(nmode_fisher(&[]).is_err());
    }

    #[test]
    fn log_exp_roundtrip() {
        let base = line(10.0);
        let target = line(55.0);
        let t = grassmann_log(base.basis(), target.basis()).unwrap();
        assert!((t.norm() - 45f64.to_radians()).abs() < 1e-12);
        let back = grassmann_exp(base.basis(), &t).unwrap();
        let back = Subspace::new(back).unwrap();
        assert!(projector_distance(&back, &target) < 1e-12);
        // orthogonal target: angle π/2 is still handled
        let t = grassmann_log(line(0.0).basis(), line(90.0).basis()).unwrap();
        assert!((t.norm() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
