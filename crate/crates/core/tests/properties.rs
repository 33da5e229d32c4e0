mod common;

use std::collections::HashSet;

use common::{random_graph, words};
use gri_core::corpus::{PairGenerator, Vocabulary};
use gri_core::embeddings::Embeddings;
use gri_core::gcn::GcnParams;
use gri_core::isoloss::{gri_loss, l2_loss, procrustes_loss, procrustes_solve};
use gri_core::isometry::{eigenvector_similarity, knn_graph, laplacian, pearson_isometry};
use gri_core::lexicon::SeedPair;
use gri_core::linalg::{sym_eig, sym_eigvals, Matrix};
use gri_core::mapeval::{align_embeddings, p_at_1, preprocess};
use gri_core::semgraph::{normalize_adjacency, SemanticGraph};
use gri_core::synth::random_orthogonal;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute force over 1800 rotation angles, each with and without a reflection.
fn grid_min_2d(um: &Matrix, v: &Matrix) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..1800 {
        let t = k as f64 * std::f64::consts::TAU / 1800.0;
        let (c, s) = (t.cos(), t.sin());
        for w in [[[c, -s], [s, c]], [[c, s], [s, -c]]] {
            let w = Matrix::from_rows(&w).unwrap();
            best = best.min(um.matmul(&w).sub(v).frobenius_norm() / um.rows() as f64);
        }
    }
    best
}

fn components(adj: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn procrustes_is_orthogonal_and_beats_identity(seed in any::<u64>(), n in 1usize..20, d in 1usize..8) {
        let mut r = rng(seed);
        let um = Matrix::random_uniform(n, d, 1.0, &mut r);
        let v = Matrix::random_uniform(n, d, 1.0, &mut r);
        prop_assert!(procrustes_solve(&um, &v).unwrap().w.orthogonality_error() < 1e-8);
        prop_assert!(procrustes_loss(&um, &v).unwrap() <= l2_loss(&um, &v).unwrap() + 1e-12);
    }

    #[test]
    fn procrustes_matches_grid_in_2d(seed in any::<u64>(), n in 2usize..10) {
        let mut r = rng(seed);
        let um = Matrix::random_uniform(n, 2, 1.0, &mut r);
        let v = Matrix::random_uniform(n, 2, 1.0, &mut r);
        prop_assert!(procrustes_loss(&um, &v).unwrap() <= grid_min_2d(&um, &v) + 1e-6);
    }

    #[test]
    fn procrustes_recovers_rotation(seed in any::<u64>(), d in 1usize..8) {
        let mut r = rng(seed);
        let um = Matrix::random_uniform(3 * d + 2, d, 1.0, &mut r);
        let rot = random_orthogonal(d, &mut r).unwrap();
        let w = procrustes_solve(&um, &um.matmul(&rot)).unwrap().w;
        prop_assert!(w.sub(&rot).max_abs() < 1e-8);
        prop_assert!(procrustes_loss(&um, &um.matmul(&rot)).unwrap() < 1e-8);
    }

    #[test]
    fn gri_loss_is_monotone(a in 0.01f64..0.99, x in -5.0f64..5.0, y in -5.0f64..5.0, dx in 0.001f64..3.0) {
        prop_assert!(gri_loss(x + dx, y, a) > gri_loss(x, y, a));
        prop_assert!(gri_loss(x, y + dx, a) > gri_loss(x, y, a));
    }

    #[test]
    fn graph_is_order_independent(seed in any::<u64>(), n in 2usize..30) {
        let mut r = rng(seed);
        let w = words(n, "w");
        let e = Embeddings::new(w.clone(), Matrix::random_uniform(n, 4, 1.0, &mut r)).unwrap();
        let mut shuffled = w.clone();
        shuffled.shuffle(&mut r);
        let a = SemanticGraph::build(&w, &e, 0.4).unwrap().word_edges();
        let b = SemanticGraph::build(&shuffled, &e, 0.4).unwrap().word_edges();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn raising_threshold_prunes(seed in any::<u64>(), n in 2usize..30, t1 in 0.05f64..0.95, dt in 0.0f64..0.5) {
        let mut r = rng(seed);
        let w = words(n, "w");
        let e = Embeddings::new(w.clone(), Matrix::random_uniform(n, 3, 1.0, &mut r)).unwrap();
        let low: HashSet<(String, String)> = SemanticGraph::build(&w, &e, t1).unwrap().word_edges().into_iter().map(|x| (x.0, x.1)).collect();
        let high = SemanticGraph::build(&w, &e, t1 + dt).unwrap().word_edges();
        for (a, b, weight) in high {
            prop_assert!(weight >= t1 + dt);
            prop_assert!(low.contains(&(a, b)));
        }
    }

    #[test]
    fn gcn_is_permutation_equivariant(seed in any::<u64>(), n in 1usize..15) {
        let mut r = rng(seed);
        let (_, adj) = random_graph(n, 3, 0.4, &mut r);
        let params = GcnParams::new(adj.clone(), 4, 3, &mut r);
        let u = Matrix::random_uniform(n, 4, 1.0, &mut r);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let permuted = GcnParams::from_weights(adj.permuted(&order), params.w0.clone(), params.w1.clone()).unwrap();
        let um = params.forward(&u).unwrap().0;
        let um_p = permuted.forward(&u.select_rows(&order)).unwrap().0;
        prop_assert!(um_p.sub(&um.select_rows(&order)).max_abs() < 1e-12);
    }

    #[test]
    fn gcn_is_linear_under_fixed_mask(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let (_, adj) = random_graph(n, 3, 0.4, &mut r);
        let params = GcnParams::new(adj, 3, 4, &mut r);
        let u = Matrix::random_uniform(n, 3, 1.0, &mut r);
        let delta = Matrix::random_uniform(n, 3, 1.0, &mut r);
        let (um, tape) = params.forward(&u).unwrap();
        let mask = tape.pre_activation().map(|x| if x > 0.0 { 1.0 } else { 0.0 });
        prop_assume!(tape.pre_activation().data().iter().all(|x| x.abs() > 1e-4));
        let a = params.adjacency();
        let masked = a.apply(&a.apply(&delta).matmul(&params.w0).hadamard(&mask)).matmul(&params.w1);
        let eps = 1e-7;
        let mut shifted = u.clone();
        shifted.add_scaled(&delta, eps);
        let diff = params.forward(&shifted).unwrap().0.sub(&um);
        prop_assert!(diff.sub(&masked.scale(eps)).max_abs() < 1e-9);
    }

    #[test]
    fn keep_probabilities_and_pair_ids_are_valid(seed in any::<u64>(), t in 0.0f64..0.1, window in 1usize..6) {
        let mut r = rng(seed);
        let lines: Vec<String> = (0..30)
            .map(|_| (0..r.gen_range(1..15)).map(|_| format!("x{}", r.gen_range(0..12))).collect::<Vec<_>>().join(" "))
            .collect();
        let vocab = Vocabulary::build(lines.iter(), 2).unwrap();
        for p in vocab.keep_probabilities(t) {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        let gen = PairGenerator::new(&vocab, window, t).unwrap();
        let mut a = rng(seed ^ 1);
        let mut b = rng(seed ^ 1);
        for line in &lines {
            let ids = vocab.encode(line);
            let pairs = gen.generate(&ids, &mut a);
            prop_assert_eq!(&pairs, &gen.generate(&ids, &mut b));
            for p in pairs {
                prop_assert!((p.center as usize) < vocab.len() && (p.context as usize) < vocab.len());
            }
        }
    }

    #[test]
    fn preprocess_gives_unit_rows(seed in any::<u64>(), n in 2usize..40, d in 2usize..8) {
        let mut r = rng(seed);
        let e = Embeddings::new(words(n, "w"), Matrix::random_uniform(n, d, 1.0, &mut r)).unwrap();
        let p = preprocess(&e).unwrap();
        for i in 0..n {
            prop_assert!((gri_core::linalg::norm(p.matrix().row(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn p_at_1_is_invariant_to_target_rotation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n, d) = (60, 5);
        let src = Embeddings::new(words(n, "s"), Matrix::random_uniform(n, d, 1.0, &mut r)).unwrap();
        let noisy = src.matrix().add(&Matrix::random_uniform(n, d, 0.6, &mut r));
        let trg = Embeddings::new(words(n, "t"), noisy).unwrap();
        let rot = random_orthogonal(d, &mut r).unwrap();
        let trg_rot = trg.with_matrix(trg.matrix().matmul(&rot)).unwrap();
        let pairs: Vec<SeedPair> = (0..n).map(|i| SeedPair::new(format!("s{i}"), format!("t{i}"))).collect();
        let score = |t: &Embeddings| {
            let (s, t) = (preprocess(&src).unwrap(), preprocess(t).unwrap());
            let m = align_embeddings(&s, &t, &pairs[..30]).unwrap();
            p_at_1(&m.map_source(&s).unwrap(), &m.map_target(&t).unwrap(), &pairs[30..]).unwrap().p_at_1
        };
        let (a, b) = (score(&trg), score(&trg_rot));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_invariant_to_rotation_and_scale(seed in any::<u64>(), s1 in 0.1f64..10.0, s2 in 0.1f64..10.0) {
        let mut r = rng(seed);
        let u = Matrix::random_uniform(25, 4, 1.0, &mut r);
        let v = u.add(&Matrix::random_uniform(25, 4, 0.5, &mut r));
        let base = pearson_isometry(&u, &v).unwrap();
        let ru = random_orthogonal(4, &mut r).unwrap();
        let rv = random_orthogonal(4, &mut r).unwrap();
        let moved = pearson_isometry(&u.matmul(&ru).scale(s1), &v.matmul(&rv).scale(s2)).unwrap();
        prop_assert!((base - moved).abs() < 1e-9);
        prop_assert!((pearson_isometry(&u, &u.matmul(&ru)).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigsim_is_symmetric_and_zero_on_self(seed in any::<u64>(), n in 4usize..40, k in 1usize..4) {
        let mut r = rng(seed);
        let u = Matrix::random_uniform(n, 3, 1.0, &mut r);
        let v = Matrix::random_uniform(n, 3, 1.0, &mut r);
        let uv = eigenvector_similarity(&u, &v, k).unwrap();
        let vu = eigenvector_similarity(&v, &u, k).unwrap();
        prop_assert!((uv.score - vu.score).abs() < 1e-9);
        prop_assert!(uv.score >= 0.0);
        prop_assert_eq!(eigenvector_similarity(&u, &u, k).unwrap().score, 0.0);
    }

    #[test]
    fn laplacian_kernel_counts_components(seed in any::<u64>(), n in 4usize..40, k in 1usize..3) {
        let mut r = rng(seed);
        let e = Matrix::random_uniform(n, 3, 1.0, &mut r);
        let g = knn_graph(&e, k).unwrap();
        let l = laplacian(&g);
        for i in 0..n {
            prop_assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
        }
        let lam = sym_eigvals(&l).unwrap();
        prop_assert!(lam[0].abs() < 1e-9);
        prop_assert_eq!(lam.iter().filter(|x| x.abs() < 1e-9).count(), components(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn normalized_adjacency_spectral_radius(seed in any::<u64>(), n in 2usize..=200, thr in 0.1f64..0.9) {
        let mut r = rng(seed);
        let (_, adj) = random_graph(n, 4, thr, &mut r);
        let dense = adj.to_dense();
        prop_assert!(dense.max_asymmetry().unwrap() < 1e-12);
        let lam = sym_eig(&dense).unwrap().eigenvalues;
        prop_assert!(lam.iter().all(|&x| (-1.0 - 1e-9..=1.0 + 1e-9).contains(&x)));
    }
}

#[test]
fn normalized_adjacency_spectral_radius_at_200_nodes() {
    let mut r = rng(77);
    let (g, adj) = random_graph(200, 4, 0.3, &mut r);
    assert!(!g.edges().is_empty());
    let lam = sym_eigvals(&adj.to_dense()).unwrap();
    assert!(lam.iter().all(|x| x.abs() <= 1.0 + 1e-9));
    assert!(normalize_adjacency(&g).nnz() > 200);
}

#[test]
fn word2vec_round_trip_preserves_nearest_neighbours() {
    let mut r = rng(5);
    let n = 10_000;
    let e = Embeddings::new(words(n, "w"), Matrix::random_uniform(n, 8, 1.0, &mut r)).unwrap();
    let mut buf = Vec::new();
    e.write_word2vec_to(&mut buf).unwrap();
    let back = Embeddings::parse_word2vec(buf.as_slice(), std::path::Path::new("<memory>")).unwrap();
    assert_eq!(back.words(), e.words());
    assert!(back.matrix().sub(e.matrix()).max_abs() <= 5e-7);

    // nearest neighbour by cosine for a sample of queries
    let nn = |m: &Matrix, q: usize| {
        let unit: Vec<f64> = m.row(q).to_vec();
        let mut best = (f64::NEG_INFINITY, 0);
        for j in (0..m.rows()).filter(|&j| j != q) {
            let row = m.row(j);
            let c = gri_core::linalg::dot(&unit, row) / gri_core::linalg::norm(row);
            if c > best.0 {
                best = (c, j);
            }
        }
        best.1
    };
    for q in (0..n).step_by(50) {
        assert_eq!(nn(e.matrix(), q), nn(back.matrix(), q), "query {q}");
    }
}
