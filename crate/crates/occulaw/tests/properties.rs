//! Randomized invariants, complementing the fixed-value unit tests.

mod common;

use common::uniform;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

use occulaw::cli::{plane_to_barycentric, simplex_to_plane};
use occulaw::core::{burn_in_threshold, transition_kernel, GeneratorMatrix, MultiIndex};
use occulaw::moments::{
    dirichlet_moment, multiset_permutations, theta_generator, ThetaParams, DEFAULT_DEGREE_CAP,
};
use occulaw::oracle::exact_occupation_law;
use occulaw::simulate::replica_seed;
use occulaw::spectral::{contraction_coefficient, stationary_distribution};

fn generator_strategy(m: usize) -> impl Strategy<Value = GeneratorMatrix> {
    proptest::collection::vec(0.05f64..3.0, m * (m - 1)).prop_map(move |rates| {
        let mut entries = Array2::zeros((m, m));
        let mut it = rates.into_iter();
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                if i != j {
                    let v = it.next().unwrap();
                    entries[[i, j]] = v;
                    row_sum += v;
                }
            }
            entries[[i, i]] = -row_sum;
        }
        GeneratorMatrix::validate(&entries).unwrap()
    })
}

fn theta_strategy(m: usize) -> impl Strategy<Value = ThetaParams> {
    proptest::collection::vec(0.1f64..6.0, m).prop_map(|t| ThetaParams::new(t).unwrap())
}

proptest! {
    #[test]
    fn generator_json_round_trip(g in (2usize..=5).prop_flat_map(generator_strategy)) {
        let back = GeneratorMatrix::from_json_str(&g.to_json_string()).unwrap();
        prop_assert_eq!(g.entries(), back.entries());
    }

    #[test]
    fn kernel_is_stochastic_for_any_time(
        g in (2usize..=5).prop_flat_map(generator_strategy),
        zeta in 0.2f64..2.5,
        n in 1u64..100_000,
    ) {
        let p = transition_kernel(&g, zeta, n);
        for i in 0..g.dim() {
            let mut row = 0.0;
            for j in 0..g.dim() {
                prop_assert!(p.entry(i, j) >= 0.0);
                row += p.entry(i, j);
            }
            prop_assert!((row - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn first_kernel_past_threshold_is_not_identity(
        g in (2usize..=4).prop_flat_map(generator_strategy),
        zeta in 0.3f64..2.0,
    ) {
        let n = burn_in_threshold(&g, zeta) + 1;
        let p = transition_kernel(&g, zeta, n);
        let off_mass: f64 = (0..g.dim())
            .map(|i| 1.0 - p.entry(i, i))
            .sum();
        prop_assert!(off_mass > 0.0);
    }

    #[test]
    fn stationary_is_positive_null_vector(
        g in (2usize..=5).prop_flat_map(generator_strategy),
    ) {
        let nu = stationary_distribution(&g).unwrap();
        prop_assert!((nu.sum() - 1.0).abs() <= 1e-12);
        let image = nu.dot(g.entries());
        for i in 0..g.dim() {
            prop_assert!(nu[i] > 0.0);
            prop_assert!(image[i].abs() <= 1e-12);
        }
    }

    #[test]
    fn contraction_is_in_unit_interval(
        g in (2usize..=4).prop_flat_map(generator_strategy),
        n in 1u64..10_000,
    ) {
        let p = transition_kernel(&g, 1.0, n);
        let c = contraction_coefficient(&p);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn dirichlet_moments_shrink_with_degree(
        theta in (2usize..=4).prop_flat_map(theta_strategy),
        i in 0usize..4,
        degree in 1u32..6,
    ) {
        let m = theta.len();
        let i = i % m;
        let low = dirichlet_moment(&theta, &MultiIndex::axis(m, i, degree)).unwrap();
        let high = dirichlet_moment(&theta, &MultiIndex::axis(m, i, degree + 1)).unwrap();
        prop_assert!(low > 0.0 && low < 1.0);
        prop_assert!(high < low);
    }

    #[test]
    fn multiset_permutations_cover_factorial(
        gamma in proptest::collection::vec(0u32..4, 2..4)
            .prop_filter("positive degree", |g| g.iter().sum::<u32>() >= 1
                && g.iter().sum::<u32>() <= DEFAULT_DEGREE_CAP),
    ) {
        let gamma = MultiIndex::new(gamma).unwrap();
        let perms = multiset_permutations(&gamma, DEFAULT_DEGREE_CAP).unwrap();
        let multiplicity = perms.multiplicity;
        let count = perms.count() as f64;
        let factorial: f64 = (1..=gamma.total()).map(f64::from).product();
        prop_assert!((count * multiplicity - factorial).abs() <= 1e-9);
    }

    #[test]
    fn plane_map_round_trips(raw in proptest::collection::vec(0.01f64..1.0, 3)) {
        let s: f64 = raw.iter().sum();
        let p = [raw[0] / s, raw[1] / s, raw[2] / s];
        let xy = simplex_to_plane(&p).unwrap();
        let back = plane_to_barycentric(xy.x, xy.y);
        for (a, b) in p.iter().zip(back.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn replica_seeds_are_stable_and_spread(master in any::<u64>()) {
        let a = replica_seed(master, 0);
        prop_assert_eq!(a, replica_seed(master, 0));
        for r in 1u64..16 {
            prop_assert_ne!(a, replica_seed(master, r));
        }
    }

    #[test]
    fn exact_law_is_a_probability_law(
        g in (2usize..=3).prop_flat_map(generator_strategy),
        zeta in 0.5f64..1.5,
        n in 2u64..40,
    ) {
        let law = exact_occupation_law(&g, zeta, &uniform(g.dim()), n).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() <= 1e-12);
        for (counts, &p) in &law.support {
            prop_assert!(p >= 0.0);
            prop_assert_eq!(counts.iter().sum::<u32>() as u64, n);
        }
        let marginal = law.marginal_counts(0);
        prop_assert!((marginal.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn burn_in_threshold_examples() {
    let g = common::g_left();
    // max |G(i,i)| = 3: thresholds 3, 9, 2 for zeta = 1, 1/2, 2
    assert_eq!(burn_in_threshold(&g, 1.0), 3);
    assert_eq!(burn_in_threshold(&g, 0.5), 9);
    assert_eq!(burn_in_threshold(&g, 2.0), 2);
}

#[test]
fn theta_generator_matches_dirichlet_stationary() {
    let theta = ThetaParams::new(vec![0.7, 1.3, 2.0]).unwrap();
    let g = theta_generator(&theta).unwrap();
    let nu = stationary_distribution(&g).unwrap();
    let bar = theta.theta_bar();
    for (i, &t) in theta.theta().iter().enumerate() {
        assert!((nu[i] - t / bar).abs() < 1e-12);
    }
    let expected = Array1::from_vec(vec![0.7 / 4.0, 1.3 / 4.0, 2.0 / 4.0]);
    for i in 0..3 {
        assert!((nu[i] - expected[i]).abs() < 1e-12);
    }
}
