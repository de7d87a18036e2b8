//! Property tests for the structural invariants that hold for arbitrary
//! inputs rather than specific scenarios.

mod common;

use proptest::prelude::*;

use parapc::{correlations, fisher_z_test, partition_edges, split_batches, Dataset, FisherZ};

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (2usize..6, 5usize..40).prop_flat_map(|(p, n)| {
        proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, n), p).prop_filter_map(
            "columns need variance",
            move |cols| {
                let names = (0..p).map(|j| format!("c{j}")).collect();
                let d = Dataset::from_columns(names, cols).ok()?;
                correlations(&d).ok().map(|_| d)
            },
        )
    })
}

proptest! {
    #[test]
    fn correlations_are_permutation_equivariant(
        d in dataset_strategy(),
        seed in 0u64..1000,
    ) {
        let p = d.p();
        let mut perm: Vec<usize> = (0..p).collect();
        // cheap deterministic shuffle
        let mut state = seed;
        for i in (1..p).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let base = correlations(&d).unwrap();
        let permuted = correlations(&d.with_permuted_columns(&perm)).unwrap();
        for i in 0..p {
            for j in 0..p {
                prop_assert_eq!(permuted.r(i, j), base.r(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn correlations_are_affine_invariant(
        d in dataset_strategy(),
        scale in 0.01f64..100.0,
        offset in -100.0f64..100.0,
        col in 0usize..6,
    ) {
        let p = d.p();
        let col = col % p;
        let rescaled: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                let c = d.column(j).to_vec();
                if j == col {
                    c.into_iter().map(|v| scale * v + offset).collect()
                } else {
                    c
                }
            })
            .collect();
        let d2 = Dataset::from_columns(d.names().to_vec(), rescaled).unwrap();
        let base = correlations(&d).unwrap();
        let scaled = correlations(&d2).unwrap();
        for i in 0..p {
            for j in 0..p {
                prop_assert!((scaled.r(i, j) - base.r(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fisher_test_is_symmetric_in_its_pair(
        d in dataset_strategy(),
        pick in 0usize..100,
    ) {
        let p = d.p();
        let x = pick % p;
        let y = (pick / p + x + 1) % p;
        if x == y { return Ok(()); }
        let cond: Vec<usize> = (0..p).filter(|&v| v != x && v != y).take(1).collect();
        if d.n() < cond.len() + 4 { return Ok(()); }
        let corr = correlations(&d).unwrap();
        let a = fisher_z_test(&corr, x, y, &cond, 0.05).unwrap();
        let b = fisher_z_test(&corr, y, x, &cond, 0.05).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn batches_concatenate_back(
        items in proptest::collection::vec(0usize..1000, 0..60),
        batch in 1usize..20,
    ) {
        let batches = split_batches(&items, batch);
        prop_assert!(batches.iter().rev().skip(1).all(|b| b.len() == batch));
        if let Some(last) = batches.last() {
            prop_assert!(last.len() <= batch && !last.is_empty());
        }
        let rejoined: Vec<usize> = batches.concat();
        prop_assert_eq!(rejoined, items);
    }

    #[test]
    fn partitions_are_contiguous_and_even(
        items in proptest::collection::vec(0usize..1000, 0..60),
        workers in 1usize..10,
    ) {
        let parts = partition_edges(&items, workers);
        prop_assert_eq!(parts.len(), workers);
        let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        let max = *sizes.iter().max().unwrap();
        let min = *sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1);
        let rejoined: Vec<usize> = parts.concat();
        prop_assert_eq!(rejoined, items);
    }

    #[test]
    fn scripted_oracle_defaults_to_dependent(
        x in 0usize..6,
        y in 0usize..6,
        z in proptest::collection::vec(0usize..6, 0..3),
    ) {
        prop_assume!(x != y && !z.contains(&x) && !z.contains(&y));
        let oracle = parapc::ScriptedOracle::new([]);
        prop_assert!(!oracle.independent(x, y, &z));
    }
}

#[test]
fn correlations_match_brute_force_on_fixed_seed_normals() {
    // three independent standard-normal columns: off-diagonals stay small
    // and agree with the naive two-pass Pearson oracle
    let model = parapc::random_weights(parapc::random_dag(3, 0.0, 123), 124);
    let data = parapc::sample_sem(&model, 100, 125);
    let corr = correlations(&data).unwrap();
    for i in 0..3 {
        for j in i + 1..3 {
            let brute = common::brute_pearson(data.column(i), data.column(j));
            assert!((corr.r(i, j) - brute).abs() < 1e-12);
            assert!(corr.r(i, j).abs() < 0.35, "r({i},{j}) = {}", corr.r(i, j));
        }
    }
}

#[test]
fn fisher_dependence_is_preserved_under_shared_correlation() {
    // same rho at growing n keeps or strengthens a dependent verdict
    let corr_small = parapc::CorrelationMatrix::new(vec![1.0, 0.4, 0.4, 1.0], 2, 30).unwrap();
    let corr_large = parapc::CorrelationMatrix::new(vec![1.0, 0.4, 0.4, 1.0], 2, 3000).unwrap();
    let small = FisherZ::new(corr_small);
    let large = FisherZ::new(corr_large);
    use parapc::CiTest;
    let ps = small.test(0, 1, &[], 0.05).unwrap();
    let pl = large.test(0, 1, &[], 0.05).unwrap();
    assert!(!ps.independent);
    assert!(!pl.independent);
    assert!(pl.statistic.unwrap() > ps.statistic.unwrap());
}
