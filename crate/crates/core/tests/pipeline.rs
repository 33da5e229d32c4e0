mod common;

use common::words;
use gri_core::embeddings::Embeddings;
use gri_core::isoloss::procrustes_solve;
use gri_core::isometry::{eigenvector_similarity, isometry_report, pearson_isometry};
use gri_core::lexicon::{SeedLexicon, SeedPair, Split};
use gri_core::linalg::{norm, Matrix};
use gri_core::mapeval::{align, evaluate, neighbor_errors, p_at_1, preprocess};
use gri_core::synth::{random_orthogonal, rotated_spaces};
use gri_core::GriError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn first(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn identical_spaces_map_onto_each_other() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = Matrix::random_uniform(50, 6, 1.0, &mut rng);
    let seeds: Vec<(usize, usize)> = (0..25).map(|i| (i, i)).collect();
    let m = align(&u, &u, &seeds).unwrap();
    // end to end: source row i lands exactly where target row i lands
    assert!(u.matmul(&m.src_transform).sub(&u.matmul(&m.trg_transform)).max_abs() < 1e-6);
}

#[test]
fn rotated_space_is_recovered_on_seeds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = Matrix::random_uniform(60, 5, 1.0, &mut rng);
    let r = random_orthogonal(5, &mut rng).unwrap();
    let v = u.matmul(&r);
    let seeds: Vec<(usize, usize)> = (0..30).map(|i| (i, i)).collect();
    let m = align(&u, &v, &seeds).unwrap();
    let idx = first(30);
    let mapped_u = u.select_rows(&idx).matmul(&m.src_transform);
    let mapped_v = v.select_rows(&idx).matmul(&m.trg_transform);
    assert!(mapped_u.sub(&mapped_v).max_abs() < 1e-6);
    assert!(m.src_rotation.orthogonality_error() < 1e-8);
    assert!(m.trg_rotation.orthogonality_error() < 1e-8);
}

#[test]
fn whitened_pipeline_residual_not_above_plain_procrustes() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let x = Matrix::random_uniform(10, 4, 1.0, &mut rng);
        let z = Matrix::random_uniform(10, 4, 1.0, &mut rng);
        let seeds: Vec<(usize, usize)> = (0..10).map(|i| (i, i)).collect();
        let m = align(&x, &z, &seeds).unwrap();
        let mapped = x.matmul(&m.src_transform).sub(&z.matmul(&m.trg_transform)).frobenius_norm();
        let plain = x.matmul(&procrustes_solve(&x, &z).unwrap().w).sub(&z).frobenius_norm();
        assert!(mapped <= plain, "seed {seed}: {mapped} > {plain}");
    }
}

#[test]
fn rotation_with_noise_retrieves_translations() {
    let data = rotated_spaces(200, 16, 0.01, 3).unwrap();
    let lex = SeedLexicon::split_ordered(data.pairs.clone(), 100, 150).unwrap();
    let (_, report) = evaluate(&data.source, &data.target, &lex, Split::Test).unwrap();
    assert_eq!(report.n_queries, 50);
    assert!(report.p_at_1 >= 0.95, "{}", report.p_at_1);
}

#[test]
fn preprocess_fixed_points() {
    // centrally symmetric sets stay centered after re-normalization
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let half = Matrix::random_uniform(10, 5, 1.0, &mut rng);
    let both = Matrix::from_fn(20, 5, |i, j| if i < 10 { half[(i, j)] } else { -half[(i - 10, j)] });
    let e = Embeddings::new(words(20, "w"), both).unwrap();
    let once = preprocess(&e).unwrap();
    let twice = preprocess(&once).unwrap();
    assert!(twice.matrix().sub(once.matrix()).max_abs() < 1e-9);
    for i in 0..20 {
        assert!((norm(once.matrix().row(i)) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn p_at_1_counts_and_errors() {
    let src = Embeddings::new(words(3, "s"), Matrix::identity(3)).unwrap();
    let trg = Embeddings::new(words(3, "t"), Matrix::identity(3)).unwrap();
    let pairs = vec![SeedPair::new("s0", "t0"), SeedPair::new("s1", "t2"), SeedPair::new("s9", "t1")];
    let r = p_at_1(&src, &trg, &pairs).unwrap();
    assert_eq!(r.correct as f64 / (r.n_queries - r.oov_queries) as f64, r.p_at_1);
    assert_eq!(r.p_at_1, 0.5);
    let nb = neighbor_errors(&r, &trg, 2);
    assert_eq!((nb.errors, nb.within_k), (1, 1));
    assert!(matches!(p_at_1(&src, &trg, &[]), Err(GriError::EmptyTestSet)));
}

#[test]
fn self_evaluation_is_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = Matrix::random_uniform(40, 6, 1.0, &mut rng);
    let e = Embeddings::new(words(40, "w"), m).unwrap();
    let pairs: Vec<SeedPair> = (0..40).map(|i| SeedPair::new(format!("w{i}"), format!("w{i}"))).collect();
    let lex = SeedLexicon::split_ordered(pairs, 20, 40).unwrap();
    assert_eq!(evaluate(&e, &e, &lex, Split::Test).unwrap().1.p_at_1, 1.0);
}

#[test]
fn isometry_report_on_rotated_spaces() {
    let data = rotated_spaces(80, 8, 0.0, 6).unwrap();
    let r = isometry_report(&data.source, &data.target, &data.pairs, 1000, 10).unwrap();
    assert_eq!(r.n_seeds_used, 80);
    assert!((r.pearson_r - 1.0).abs() < 1e-9);
    assert!(r.eigsim < 1e-9);
    assert!(r.k_used > 0);
    let few = isometry_report(&data.source, &data.target, &data.pairs, 30, 10).unwrap();
    assert_eq!(few.n_seeds_used, 30);
}

#[test]
fn isometry_degenerate_inputs() {
    let u = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
    assert!(matches!(pearson_isometry(&u, &u), Err(GriError::UndefinedCorrelation { .. })));
    let v = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
    assert!(eigenvector_similarity(&v, &v, 3).is_err());
}
