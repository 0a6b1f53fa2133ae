//! Randomized structural properties of the tree transport, the mirror-descent
//! step and the embedding.

mod common;

use gpmd::frt::frt_embed;
use gpmd::mts::{delta_map, md_step, CondState, PotentialParams};
use gpmd::transport::{optimal_coupling, tree_wasserstein, LeafDistribution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn dist(rng: &mut ChaCha8Rng, n: usize) -> LeafDistribution {
    LeafDistribution::new(random_distribution(rng, n, 0.3)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wasserstein_is_a_metric(seed in any::<u64>(), n in 1usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_hst(&mut rng, n, 3.0);
        let (a, b, c) = (dist(&mut rng, n), dist(&mut rng, n), dist(&mut rng, n));
        let ab = tree_wasserstein(&tree, &a, &b).unwrap();
        let ba = tree_wasserstein(&tree, &b, &a).unwrap();
        let ac = tree_wasserstein(&tree, &a, &c).unwrap();
        let cb = tree_wasserstein(&tree, &c, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(tree_wasserstein(&tree, &a, &a).unwrap().abs() <= 1e-15);
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn coupling_is_feasible_and_optimal(seed in any::<u64>(), n in 1usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_hst(&mut rng, n, 4.0);
        let (a, b) = (dist(&mut rng, n), dist(&mut rng, n));
        let coupling = optimal_coupling(&tree, &a, &b).unwrap();
        prop_assert!(coupling.entries().iter().all(|e| e.2 >= 0.0));
        for (x, y) in coupling.row_marginals().iter().zip(a.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in coupling.column_marginals().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let w = tree_wasserstein(&tree, &a, &b).unwrap();
        prop_assert!((coupling.tree_cost(&tree).unwrap() - w).abs() <= 1e-12);
    }

    #[test]
    fn md_step_stays_in_the_polytope(seed in any::<u64>(), n in 2usize..24, kappa in 1.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_hst(&mut rng, n, 5.0);
        let params = PotentialParams::new(&tree, kappa).unwrap();
        let mut q = CondState::uniform(&tree);
        for _ in 0..5 {
            let costs: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.0..3.0)).collect();
            q = md_step(&tree, &params, &q, &costs).unwrap().0;
            for u in 0..tree.n_vertices() {
                let ch = tree.children(u);
                if ch.is_empty() {
                    continue;
                }
                let s: f64 = ch.iter().map(|&c| q.as_slice()[c]).sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
                prop_assert!(ch.iter().all(|&c| q.as_slice()[c] >= 0.0));
            }
            let leaves = delta_map(&tree, &q).leaf_probs(&tree);
            prop_assert!((leaves.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_costs_leave_the_state_unchanged(seed in any::<u64>(), n in 2usize..24, c in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_hst(&mut rng, n, 5.0);
        let params = PotentialParams::new(&tree, 1.0).unwrap();
        let q0 = CondState::uniform(&tree);
        let (q, _) = md_step(&tree, &params, &q0, &vec![c; n]).unwrap();
        for (a, b) in q.as_slice().iter().zip(q0.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn frt_dominates_the_metric(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let metric = random_metric(&mut rng, n);
        let tree = frt_embed(&metric, 5.0, seed).unwrap();
        prop_assert_eq!(tree.n_leaves(), n);
        for i in 0..n {
            for j in 0..n {
                let dt = tree.tree_distance(i, j).unwrap();
                prop_assert!(dt >= metric.dist(i, j) * (1.0 - 1e-12));
                prop_assert!((dt - tree.tree_distance(j, i).unwrap()).abs() <= 1e-12);
            }
        }
    }
}
