use pmbo::multiindex::{MultiIndex, MultiIndexSet};
use pmbo::sampling::{random_uniform_points, GeneratingNodes};
use pmbo::surrogate::{bootstrap_fit, design_matrix, fit, fit_with_fallback, SampleSet};
use pmbo::trace::Origin;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(seed: u64, dim: usize, size: usize) -> MultiIndexSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = MultiIndexSet::from_indices(vec![MultiIndex::zero(dim)]).unwrap();
    while set.len() < size {
        let f = set.frontier();
        set.insert(f[rng.random_range(0..f.len())].clone()).unwrap();
    }
    set
}

fn samples(points: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> SampleSet {
    let mut s = SampleSet::new(points[0].len());
    for p in points {
        s.push(p.clone(), f(p), Origin::Seed).unwrap();
    }
    s
}

fn le(a: &MultiIndex, b: &MultiIndex) -> bool {
    a.exponents().iter().zip(b.exponents()).all(|(x, y)| x <= y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn newton_basis_is_triangular_on_unisolvent_nodes(seed in any::<u64>(), dim in 1usize..4, size in 1usize..30) {
        let set = random_set(seed, dim, size);
        let nodes = GeneratingNodes::default();
        let points: Vec<Vec<f64>> = set.iter().map(|a| nodes.node_for_index(a).unwrap()).collect();
        let d = design_matrix(&points, &set, &nodes).unwrap();
        for (i, beta) in set.iter().enumerate() {
            for (j, alpha) in set.iter().enumerate() {
                if !le(alpha, beta) {
                    prop_assert_eq!(d[(i, j)], 0.0);
                }
            }
            prop_assert!(d[(i, i)] != 0.0);
        }
    }

    #[test]
    fn fit_is_affine_equivariant(seed in any::<u64>(), dim in 1usize..4, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        prop_assume!(a.abs() > 1e-3);
        let set = random_set(seed, dim, 10);
        let nodes = GeneratingNodes::default();
        let pts = random_uniform_points(dim, 30, seed ^ 1);
        let f = |x: &[f64]| x.iter().map(|v| (3.0 * v).sin()).sum::<f64>();
        let q = fit(&samples(&pts, f), &set, &nodes, 0.0).unwrap();
        let q2 = fit(&samples(&pts, |x| a * f(x) + b), &set, &nodes, 0.0).unwrap();
        for x in random_uniform_points(dim, 20, seed ^ 2) {
            prop_assert!((q2.evaluate(&x) - (a * q.evaluate(&x) + b)).abs() <= 1e-10);
        }
    }

    #[test]
    fn more_samples_than_basis_fit_without_ridge(seed in any::<u64>(), dim in 1usize..4, size in 1usize..20) {
        let set = random_set(seed, dim, size);
        let pts = random_uniform_points(dim, size * 2, seed);
        let s = samples(&pts, |x| x.iter().sum());
        prop_assert!(fit(&s, &set, &GeneratingNodes::default(), 0.0).is_ok());
    }

    #[test]
    fn bootstrap_variance_is_non_negative(seed in any::<u64>(), dim in 1usize..4, b in 1usize..10) {
        let set = random_set(seed, dim, 8);
        let pts = random_uniform_points(dim, 20, seed);
        let s = samples(&pts, |x| x.iter().map(|v| v * v).sum());
        let e = bootstrap_fit(&s, &set, &GeneratingNodes::default(), b, seed, 0.0).unwrap();
        prop_assert_eq!(e.len(), b);
        for x in random_uniform_points(dim, 10, seed ^ 3) {
            let (mean, var) = e.mean_var(&x);
            prop_assert!(var >= 0.0);
            prop_assert!(mean.is_finite());
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions(seed in any::<u64>(), dim in 1usize..4) {
        let set = random_set(seed, dim, 12);
        let pts = random_uniform_points(dim, 25, seed);
        let q = fit_with_fallback(&samples(&pts, |x| x[0].exp()), &set, &GeneratingNodes::default(), 0.0).unwrap();
        let back: pmbo::surrogate::PolynomialSurrogate =
            serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        prop_assert_eq!(&back, &q);
    }
}

#[test]
fn bad_json_is_rejected() {
    let not_closed = r#"{"dimension":1,"multi_indices":[[0],[2]],"generating_nodes":[1.0,-1.0,0.0],"coefficients":[1.0,2.0]}"#;
    assert!(serde_json::from_str::<pmbo::surrogate::PolynomialSurrogate>(not_closed).is_err());
    let wrong_len = r#"{"dimension":1,"multi_indices":[[0],[1]],"generating_nodes":[1.0,-1.0],"coefficients":[1.0]}"#;
    assert!(serde_json::from_str::<pmbo::surrogate::PolynomialSurrogate>(wrong_len).is_err());
}
