//! Properties of the GDS, Karcher mean, Fisher score, weighted distance and
//! MDS layers on small random instances.

use nalgebra::{DMatrix, DVector};
use ngds::fisher::{karcher_mean, FisherReport};
use ngds::gds::ModeGram;
use ngds::linalg::{gram_schmidt, orthonormality_error, singular_values};
use ngds::mds::embedded_distances;
use ngds::subspace::projector_distance;
use ngds::*;
use proptest::prelude::*;

fn gaussianish(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn subspace(n: usize, k: usize) -> impl Strategy<Value = Subspace> {
    gaussianish(n, k).prop_filter_map("rank deficient", move |m| Subspace::span(&m).ok().filter(|s| s.dim() == k))
}

/// Subspaces clustered near a base point, so Karcher means are well posed.
fn cluster(n: usize, k: usize, count: usize) -> impl Strategy<Value = Vec<Subspace>> {
    (subspace(n, k), prop::collection::vec(gaussianish(n, k), count)).prop_map(|(base, noise)| {
        noise
            .into_iter()
            .map(|e| Subspace::span(&(base.basis() + e * 0.2)).unwrap())
            .collect()
    })
}

proptest! {
    #[test]
    fn gram_eigenvalues_in_unit_interval(ps in prop::collection::vec(subspace(5, 2), 2..5)) {
        let g = mode_gram(&ps, 0).unwrap();
        prop_assert!((&g.matrix - g.matrix.transpose()).abs().max() <= 1e-10);
        let gds = gds_from_gram(&g, 1, None).unwrap();
        prop_assert!(gds.eigvals.iter().all(|&v| (-1e-10..=1.0 + 1e-10).contains(&v)));
        prop_assert!(gds.eigvals.as_slice().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(orthonormality_error(&gds.basis) <= 1e-8);
    }

    #[test]
    fn projection_preserves_subspaces_in_range(ps in prop::collection::vec(subspace(6, 2), 2..4), alpha in 1usize..3, mix in gaussianish(6, 1)) {
        let g = mode_gram(&ps, 0).unwrap();
        let gds = gds_from_gram(&g, alpha, None).unwrap();
        // a line inside span(D): map back from GDS coordinates and compare
        let coords = gds.basis.transpose() * &mix;
        prop_assume!(coords.norm() > 1e-3);
        let inside = Subspace::span(&(&gds.basis * &coords)).unwrap();
        let projected = project_onto_gds(&gds, &inside, 1e-10).unwrap();
        let back = Subspace::span(&(&gds.basis * projected.basis())).unwrap();
        prop_assert!(projector_distance(&back, &inside) <= 1e-10);
    }

    #[test]
    fn gram_schmidt_matches_svd_rank(m in gaussianish(5, 4), drop in 0usize..4) {
        let mut m = m;
        if drop > 0 {
            // make the last column a combination of the others
            let comb = m.column(0) * 0.5 - m.column(1) * 0.25;
            m.set_column(3, &comb);
        }
        let q = gram_schmidt(&m, 1e-10);
        let s = singular_values(&m);
        let rank = s.iter().filter(|&&v| v > 1e-9 * s[0]).count();
        prop_assert_eq!(q.ncols(), rank);
        prop_assert!(orthonormality_error(&q) <= 1e-10);
        // q spans the columns of m
        let resid = &m - &q * (q.transpose() * &m);
        prop_assert!(resid.abs().max() <= 1e-9);
    }

    #[test]
    fn karcher_permutation_invariant(set in cluster(5, 2, 4)) {
        let opts = KarcherOptions::default();
        let a = karcher_mean(&set, opts).unwrap();
        let mut rev = set.clone();
        rev.reverse();
        rev.swap(0, 2);
        let b = karcher_mean(&rev, opts).unwrap();
        prop_assert!(projector_distance(&a.mean, &b.mean) <= 1e-8);
    }

    #[test]
    fn karcher_lies_between_inputs(set in cluster(4, 2, 3)) {
        let mean = karcher_mean(&set, KarcherOptions::default()).unwrap().mean;
        let mut max_pair: f64 = 0.0;
        for a in &set {
            for b in &set {
                max_pair = max_pair.max(geodesic_distance(a, b).unwrap());
            }
        }
        let max_to_mean = set.iter().map(|s| geodesic_distance(s, &mean).unwrap()).fold(0.0, f64::max);
        prop_assert!(max_to_mean <= max_pair + 1e-8);
    }

    #[test]
    fn fisher_scale_invariant(b in prop::collection::vec(0.01f64..2.0, 2..5), w in prop::collection::vec(0.01f64..2.0, 2..9), c in 0.001f64..1000.0) {
        let r = FisherReport::from_distances(0, &b, &w).unwrap();
        let scale = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        let s = FisherReport::from_distances(0, &scale(&b), &scale(&w)).unwrap();
        prop_assert!((r.score - s.score).abs() <= 1e-12 * r.score.max(1.0));
        let n1 = nmode_fisher(&[r, r]).unwrap();
        let n2 = nmode_fisher(&[s, s]).unwrap();
        prop_assert!((n1.score - n2.score).abs() <= 1e-12 * n1.score.max(1.0));
    }

    #[test]
    fn weighted_distance_symmetric_and_scaled(
        a in (subspace(4, 2), subspace(5, 2)),
        b in (subspace(4, 2), subspace(5, 2)),
        q in (subspace(4, 2), subspace(5, 2)),
        w in (0.05f64..1.0, 0.05f64..1.0),
        c in 0.1f64..10.0,
    ) {
        let pa = ProductPoint::new(vec![a.0, a.1], Some(0)).unwrap();
        let pb = ProductPoint::new(vec![b.0, b.1], Some(1)).unwrap();
        let pq = ProductPoint::new(vec![q.0, q.1], None).unwrap();
        let wv = WeightVector { weights: vec![w.0, w.1] };
        let wc = WeightVector { weights: vec![w.0 * c, w.1 * c] };
        let counts = [2, 2];
        let ab = weighted_geodesic(&pa, &pb, &wv, &counts).unwrap();
        let ba = weighted_geodesic(&pb, &pa, &wv, &counts).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(weighted_geodesic(&pa, &pa, &wv, &counts).unwrap() <= 1e-10);
        // scaling every weight scales every distance and keeps the ranking
        let (qa, qb) = (weighted_geodesic(&pq, &pa, &wv, &counts).unwrap(), weighted_geodesic(&pq, &pb, &wv, &counts).unwrap());
        let (ca, cb) = (weighted_geodesic(&pq, &pa, &wc, &counts).unwrap(), weighted_geodesic(&pq, &pb, &wc, &counts).unwrap());
        prop_assert!((ca - c * qa).abs() <= 1e-12 * (1.0 + ca));
        prop_assert!((cb - c * qb).abs() <= 1e-12 * (1.0 + cb));
        if (qa - qb).abs() > 1e-9 {
            prop_assert_eq!(qa < qb, ca < cb);
        }
    }

    #[test]
    fn single_mode_distance_is_mean_angle(p in subspace(5, 3), q in subspace(5, 3)) {
        let a = ProductPoint::new(vec![p.clone()], None).unwrap();
        let b = ProductPoint::new(vec![q.clone()], None).unwrap();
        let rho = weighted_geodesic(&a, &b, &WeightVector::uniform(1), &[3]).unwrap();
        prop_assert_eq!(rho, mean_canonical_angle(&p, &q, Some(3)).unwrap());
    }

    #[test]
    fn mds_permutation_invariant(pts in gaussianish(6, 2), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let d = embedded_distances(&pts);
        let dp = DMatrix::from_fn(6, 6, |i, j| d[(perm[i], perm[j])]);
        let e = embedded_distances(&classical_mds(&d, 2).unwrap().coords);
        let ep = embedded_distances(&classical_mds(&dp, 2).unwrap().coords);
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!((ep[(i, j)] - e[(perm[i], perm[j])]).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn weights_from_quoted_scores_sum_to_one() {
    let w = mode_weights(&[0.62, 0.57, 0.66]).unwrap();
    assert!((w.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    assert!(w.weights.iter().all(|&x| x >= 0.0));
}

#[test]
fn gram_of_identical_subspaces_is_their_projector() {
    let p = Subspace::new(DMatrix::from_column_slice(3, 1, &[0.0, 0.6, 0.8])).unwrap();
    let g = mode_gram(&[p.clone(), p.clone(), p.clone()], 0).unwrap();
    assert!((g.matrix - p.projector()).abs().max() < 1e-15);
}

#[test]
fn gds_basis_rejects_invalid_ranges() {
    let g = ModeGram {
        mode: 0,
        matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.5, 0.0])),
        class_count: 2,
    };
    assert!(gds_from_gram(&g, 4, None).is_err());
    assert!(gds_from_gram(&g, 0, None).is_err());
    assert!(gds_from_gram(&g, 3, Some(2)).is_err());
    assert_eq!(gds_from_gram(&g, 3, Some(3)).unwrap().width(), 1);
}
