mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::{brute_fuzziness_score, random_matrix, rng, streaming_covariance, two_block_graph};
use netboot::embed::{Embedding, EmbeddingMethod, Scaling};
use netboot::uncertainty::{
    adjacency_sq_distances, fuzziness_matrix, fuzziness_score, node_uncertainty_from, perplexity_scan,
    tsne_layout, tsne_run, uncertainty_from_embedding, FuzzinessMatrix, Layout2D, LayoutSource,
    NodeUncertainty, TsneConfig,
};

fn stacked(pos: DMatrix<f64>, samples: usize) -> Embedding {
    Embedding::new(pos, EmbeddingMethod::Uase, Scaling::SqrtSigma, samples).unwrap()
}

fn random_uncertainty(n: usize, d: usize, seed: u64) -> NodeUncertainty {
    let mut r = rng(seed);
    let means = DMatrix::from_fn(n, d, |_, _| r.random::<f64>() * 4.0);
    let covariances = (0..n)
        .map(|_| {
            let l = DMatrix::from_fn(d, d, |_, _| r.random::<f64>() - 0.5);
            &l * l.transpose() + DMatrix::identity(d, d) * 0.05
        })
        .collect();
    NodeUncertainty {
        means,
        covariances,
        b_used: 10,
    }
}

fn random_pairs(n: usize, p: f64, seed: u64) -> FuzzinessMatrix {
    let mut r = rng(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if r.random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        pairs.push((0, 1));
    }
    FuzzinessMatrix::from_pairs(n, pairs, 3.0).unwrap()
}

#[test]
fn covariance_matches_streaming_oracle() {
    for seed in 0..20 {
        let (n, samples, d) = (5, 11, 3);
        let y = random_matrix(n * samples, d, seed);
        let unc = uncertainty_from_embedding(&stacked(y.clone(), samples)).unwrap();
        assert_eq!(unc.b_used, 10);
        for i in 0..n {
            let (mean, cov) = streaming_covariance(&y, samples, i);
            for c in 0..d {
                assert!((unc.means[(i, c)] - mean[c]).abs() < 1e-10);
            }
            assert!((&unc.covariances[i] - cov).abs().max() < 1e-10);
        }
    }
}

#[test]
fn joint_embedding_of_identical_copies_has_zero_spread() {
    let a = two_block_graph(40, 0.6, 0.1, 3);
    let copies = vec![a.clone(), a.clone(), a.clone()];
    let (y, unc) = node_uncertainty_from(&a, &copies, 2).unwrap();
    assert_eq!(y.blocks(), 4);
    assert_eq!(unc.b_used, 3);
    for c in &unc.covariances {
        assert!(c.abs().max() < 1e-10);
    }
}

#[test]
fn empty_replicate_list_is_rejected() {
    let a = two_block_graph(20, 0.6, 0.1, 3);
    let none: Vec<netboot::AdjacencyMatrix> = Vec::new();
    assert!(node_uncertainty_from(&a, &none, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn covariances_are_symmetric_psd(n in 1usize..6, samples in 2usize..8, d in 1usize..5, seed in any::<u64>()) {
        let y = random_matrix(n * samples, d, seed) * 3.0;
        let unc = uncertainty_from_embedding(&stacked(y, samples)).unwrap();
        for c in &unc.covariances {
            prop_assert!((c - c.transpose()).abs().max() < 1e-12);
            let eig = SymmetricEigen::new(c.clone());
            prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fuzziness_matrix_is_symmetric_and_reflexive(n in 2usize..25, d in 1usize..4, thr in 0.0f64..6.0, seed in any::<u64>()) {
        let unc = random_uncertainty(n, d, seed);
        let f = fuzziness_matrix(&unc, thr).unwrap();
        for i in 0..n {
            prop_assert!(f.get(i, i));
            for j in 0..n {
                prop_assert_eq!(f.get(i, j), f.get(j, i));
            }
        }
    }

    #[test]
    fn raising_the_threshold_only_adds_pairs(n in 2usize..25, d in 1usize..4, t in 0.5f64..4.0, seed in any::<u64>()) {
        let unc = random_uncertainty(n, d, seed);
        let lo = fuzziness_matrix(&unc, t).unwrap();
        let hi = fuzziness_matrix(&unc, t * 1.5).unwrap();
        for (i, j) in lo.pairs() {
            prop_assert!(hi.get(i, j));
        }
    }

    #[test]
    fn score_is_invariant_under_rigid_motions(n in 3usize..30, angle in 0.0f64..6.3, flip in any::<bool>(), seed in any::<u64>()) {
        let pos = random_matrix(n, 2, seed);
        let f = random_pairs(n, 0.4, seed ^ 1);
        let base = fuzziness_score(&Layout2D::from_raw(pos.clone(), LayoutSource::External), &f).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let sign = if flip { -1.0 } else { 1.0 };
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, sign * s, sign * c]);
        let moved = &pos * rot.transpose();
        let score = fuzziness_score(&Layout2D::from_raw(moved, LayoutSource::External), &f).unwrap();
        prop_assert!((score - base).abs() <= 1e-10 * (1.0 + base));
    }

    #[test]
    fn score_is_invariant_under_relabeling(n in 3usize..30, seed in any::<u64>()) {
        let pos = random_matrix(n, 2, seed);
        let f = random_pairs(n, 0.4, seed ^ 1);
        let base = fuzziness_score(&Layout2D::from_raw(pos.clone(), LayoutSource::External), &f).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng(seed ^ 2));
        // node i moves to slot perm[i]
        let mut moved = DMatrix::<f64>::zeros(n, 2);
        for i in 0..n {
            moved.row_mut(perm[i]).copy_from(&pos.row(i));
        }
        let pairs: Vec<(usize, usize)> = f
            .pairs()
            .map(|(i, j)| (perm[i].min(perm[j]), perm[i].max(perm[j])))
            .collect();
        let g = FuzzinessMatrix::from_pairs(n, pairs, 3.0).unwrap();
        let score = fuzziness_score(&Layout2D::from_raw(moved, LayoutSource::External), &g).unwrap();
        prop_assert!((score - base).abs() <= 1e-10 * (1.0 + base));
    }
}

#[test]
fn score_matches_brute_force_on_random_layouts() {
    for seed in 0..25 {
        let n = 20;
        let pos = random_matrix(n, 2, seed);
        let f = random_pairs(n, 0.3, seed + 100);
        let layout = Layout2D::from_raw(pos.clone(), LayoutSource::External);
        let got = fuzziness_score(&layout, &f).unwrap();
        let want = brute_fuzziness_score(&pos, &|i, j| f.get(i, j));
        assert!((got - want).abs() < 1e-10, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn score_needs_a_pair_and_matching_size() {
    let layout = Layout2D::standardized(random_matrix(6, 2, 1), LayoutSource::External).unwrap();
    let none = FuzzinessMatrix::from_pairs(6, [], 3.0).unwrap();
    assert!(fuzziness_score(&layout, &none).is_err());
    let wrong = FuzzinessMatrix::from_pairs(5, [(0, 1)], 3.0).unwrap();
    assert!(fuzziness_score(&layout, &wrong).is_err());
}

#[test]
fn mahalanobis_overlap_against_closed_form() {
    // Node 0 has variance 4 along x and 0.25 along y; node 1 is isotropic.
    let cov0 = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25]));
    let cov1 = DMatrix::<f64>::identity(2, 2);
    for (dx, dy) in [(2.5, 0.0), (0.0, 1.4), (5.0, 0.0), (1.0, 1.0)] {
        let unc = NodeUncertainty {
            means: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, dx, dy]),
            covariances: vec![cov0.clone(), cov1.clone()],
            b_used: 5,
        };
        let from0 = (dx * dx / 4.0 + dy * dy / 0.25_f64).sqrt();
        let from1 = (dx * dx + dy * dy).sqrt();
        let f = fuzziness_matrix(&unc, 2.0).unwrap();
        assert_eq!(f.get(0, 1), from0 <= 2.0 && from1 <= 2.0, "({dx}, {dy})");
    }
}

#[test]
fn standardized_layouts_have_unit_moments() {
    for seed in 0..10 {
        let raw = random_matrix(50, 2, seed) * 7.0 + DMatrix::from_element(50, 2, 3.0);
        let l = Layout2D::standardized(raw, LayoutSource::External).unwrap();
        for col in l.positions().column_iter() {
            let mean = col.mean();
            let sd = (col.map(|x| (x - mean).powi(2)).sum() / 50.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
    }
}

/// Perceptron with bias; returns the training error after convergence or
/// the epoch limit.
fn perceptron_errors(x: &DMatrix<f64>, labels: &[f64]) -> usize {
    let mut w = [0.0f64; 3];
    for _ in 0..10_000 {
        let mut mistakes = 0;
        for i in 0..x.nrows() {
            let f = w[0] * x[(i, 0)] + w[1] * x[(i, 1)] + w[2];
            if labels[i] * f <= 0.0 {
                w[0] += labels[i] * x[(i, 0)];
                w[1] += labels[i] * x[(i, 1)];
                w[2] += labels[i];
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return 0;
        }
    }
    (0..x.nrows())
        .filter(|&i| labels[i] * (w[0] * x[(i, 0)] + w[1] * x[(i, 1)] + w[2]) <= 0.0)
        .count()
}

#[test]
fn tsne_separates_two_far_blocks() {
    let n = 100;
    let labels: Vec<f64> = (0..n).map(|i| if i < n / 2 { -1.0 } else { 1.0 }).collect();
    for seed in 0..5 {
        let a = two_block_graph(n, 0.9, 0.01, 500 + seed);
        let layout = tsne_layout(&a, 15.0, seed, 1000).unwrap();
        assert_eq!(perceptron_errors(layout.positions(), &labels), 0, "seed {seed}");
    }
}

#[test]
fn tsne_kl_settles_after_exaggeration() {
    let a = two_block_graph(80, 0.7, 0.1, 9);
    let cfg = TsneConfig {
        perplexity: 10.0,
        iterations: 800,
        learning_rate: Some(1.0),
        record_kl: true,
        ..TsneConfig::default()
    };
    let run = tsne_run(&adjacency_sq_distances(&a), &cfg, 4).unwrap();
    let tail = &run.kl_history[cfg.iterations - 100..];
    for w in tail.windows(2) {
        assert!(w[1] <= w[0] + 1e-6, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn tsne_is_deterministic_per_seed() {
    let a = two_block_graph(40, 0.7, 0.1, 2);
    let l1 = tsne_layout(&a, 8.0, 11, 300).unwrap();
    let l2 = tsne_layout(&a, 8.0, 11, 300).unwrap();
    assert_eq!(l1, l2);
    let l3 = tsne_layout(&a, 8.0, 12, 300).unwrap();
    assert_ne!(l1, l3);
}

#[test]
fn tsne_rejects_bad_perplexity() {
    let a = two_block_graph(20, 0.7, 0.1, 2);
    assert!(tsne_layout(&a, 1.0, 0, 10).is_err());
    assert!(tsne_layout(&a, 20.0, 0, 10).is_err());
    let tiny = two_block_graph(3, 0.7, 0.1, 2);
    assert!(tsne_layout(&tiny, 1.5, 0, 10).is_err());
}

#[test]
fn perplexity_scan_contract() {
    let a = two_block_graph(40, 0.7, 0.1, 5);
    let f = random_pairs(40, 0.1, 6);
    let cfg = TsneConfig {
        iterations: 300,
        ..TsneConfig::default()
    };
    let one = perplexity_scan(&a, &f, &[7.0], 3, &cfg).unwrap();
    assert_eq!(one.points.len(), 1);
    assert_eq!(one.best_perplexity(), 7.0);

    let s1 = perplexity_scan(&a, &f, &[12.0, 4.0, 8.0], 3, &cfg).unwrap();
    let s2 = perplexity_scan(&a, &f, &[12.0, 4.0, 8.0], 3, &cfg).unwrap();
    assert_eq!(s1, s2);
    let ps: Vec<f64> = s1.points.iter().map(|p| p.0).collect();
    assert_eq!(ps, vec![4.0, 8.0, 12.0]);
    let min = s1.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    assert_eq!(s1.points[s1.argmin].1, min);
    assert!(perplexity_scan(&a, &f, &[], 3, &cfg).is_err());
}
