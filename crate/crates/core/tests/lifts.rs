use std::collections::HashSet;

use proptest::prelude::*;
use treespec::cover::dos_moment;
use treespec::eigen::{empirical_moment, sym_eigenvalues};
use treespec::graph::named;
use treespec::lifts::{sample_lift, LiftInstance};
use treespec::rng::{substream_seed, XorShiftStar};
use treespec::{Graph, GraphBuilder};

mod common;

#[test]
fn substream_seed_golden_values() {
    assert_eq!(substream_seed(0, 0), 0);
    // First output of SplitMix64 seeded with 0.
    assert_eq!(substream_seed(0, 1), 0xE220_A839_7B1D_CDAF);
    assert_eq!(substream_seed(7, 3), substream_seed(7, 3));
}

#[test]
fn substream_seeds_do_not_collide() {
    for seed in [0u64, 1, 0xDEAD_BEEF] {
        let seen: HashSet<u64> = (0..100_000u64).map(|i| substream_seed(seed, i)).collect();
        assert_eq!(seen.len(), 100_000);
    }
}

#[test]
fn generator_samplers() {
    let mut rng = XorShiftStar::new(substream_seed(42, 0));
    for d in [1usize, 2, 7, 64] {
        let mut p = rng.permutation(d);
        p.sort_unstable();
        assert_eq!(p, (0..d).collect::<Vec<_>>());
    }
    for d in [2usize, 8, 100] {
        let m = rng.perfect_matching(d);
        for s in 0..d {
            assert_ne!(m[s], s);
            assert_eq!(m[m[s]], s);
        }
    }
    let mut counts = [0usize; 3];
    for _ in 0..30_000 {
        counts[rng.below(3) as usize] += 1;
    }
    assert!(
        counts.iter().all(|&c| (9_000..11_000).contains(&c)),
        "{counts:?}"
    );
}

#[test]
fn trivial_lift_is_the_base() {
    let g = GraphBuilder::new(3)
        .potential(2, 1.0)
        .edge(0, 1, 1.0)
        .edge(1, 2, 2.0)
        .whole_loop(0, 0.5)
        .build()
        .unwrap();
    assert_eq!(sample_lift(&g, 1, 9).unwrap(), g);
}

#[test]
fn odd_lifts_of_half_loops_are_rejected() {
    let g = named::bouquet::<f64>(0, 3);
    assert!(sample_lift(&g, 3, 0).is_err());
    assert!(sample_lift(&g, 0, 0).is_err());
    assert_eq!(sample_lift(&g, 4, 0).unwrap().n(), 4);
}

#[test]
fn lift_is_deterministic() {
    let g = named::complete::<f64>(4);
    let a = LiftInstance::sample(&g, 50, 123).unwrap();
    let b = LiftInstance::sample(&g, 50, 123).unwrap();
    assert_eq!(a, b);
    let c = LiftInstance::sample(&g, 50, 124).unwrap();
    assert_ne!(a.permutations, c.permutations);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let single = pool.install(|| sample_lift(&g, 50, 123).unwrap());
    assert_eq!(single, a.graph());
}

#[test]
fn whole_loop_fixed_points_become_loops() {
    let g = named::bouquet::<f64>(1, 0);
    let inst = LiftInstance::sample(&g, 40, 5).unwrap();
    let fixed = inst.permutations[0]
        .iter()
        .enumerate()
        .filter(|&(s, &t)| s == t)
        .count();
    let lift = inst.graph();
    assert_eq!(lift.whole_loops().len(), fixed);
    assert_eq!(lift.edges().len(), 40 - fixed);
}

#[test]
fn k4_fourth_moment_over_seeds() {
    let g = named::complete::<f64>(4);
    let mean: f64 = (0..20u64)
        .map(|seed| {
            let lift = sample_lift(&g, 200, seed).unwrap();
            empirical_moment(&sym_eigenvalues(&lift.dense_operator()).unwrap(), 4)
        })
        .sum::<f64>()
        / 20.0;
    assert!((mean - 15.0).abs() < 0.5, "mean fourth moment {mean}");
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

#[test]
fn lift_moments_approach_tree_moments() {
    let g = GraphBuilder::new(2)
        .potential(0, 0.5)
        .edge(0, 1, 1.0)
        .edge(0, 1, 0.7)
        .whole_loop(1, 0.4)
        .build()
        .unwrap();
    for k in [2u32, 4, 6] {
        let limit: f64 = dos_moment(&g, k).unwrap();
        let errors: Vec<f64> = [50usize, 100, 200, 400]
            .iter()
            .map(|&d| {
                median(
                    (0..15u64)
                        .map(|seed| {
                            let lift = sample_lift(&g, d, 1000 + seed).unwrap();
                            let s = sym_eigenvalues(&lift.dense_operator()).unwrap();
                            (empirical_moment(&s, k) - limit).abs()
                        })
                        .collect(),
                )
            })
            .collect();
        println!("k={k}: {errors:?}");
        assert!(errors[3] < 0.5 * errors[0], "k={k}: {errors:?}");
        let scaled: Vec<f64> = errors
            .iter()
            .zip([50.0, 100.0, 200.0, 400.0])
            .map(|(e, d)| e * d)
            .collect();
        let bound = 4.0 * scaled[0].max(limit.abs() * 0.05);
        assert!(
            scaled.iter().all(|&s| s <= bound),
            "k={k}: d * error = {scaled:?}"
        );
    }
}

fn edge_weight(g: &Graph) -> f64 {
    g.edges().iter().map(|e| e.a).sum::<f64>() + g.whole_loops().iter().map(|l| l.a).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lifts_preserve_degrees_and_coefficients(g in common::arb_graph(), half_d in 1usize..6, seed in any::<u64>()) {
        let d = 2 * half_d;
        let inst = LiftInstance::sample(&g, d, seed).unwrap();
        for p in &inst.permutations {
            let mut q = p.clone();
            q.sort_unstable();
            prop_assert_eq!(q, (0..d).collect::<Vec<_>>());
        }
        for m in &inst.matchings {
            for s in 0..d {
                prop_assert!(m[s] != s && m[m[s]] == s);
            }
        }
        let lift = inst.graph();
        prop_assert_eq!(lift.n(), g.n() * d);
        let base = g.degree_profile().deg;
        let deg = lift.degree_profile().deg;
        for v in 0..lift.n() {
            prop_assert_eq!(deg[v], base[v / d]);
            prop_assert_eq!(lift.b()[v], g.b()[v / d]);
        }
        // Each sheet of a non-loop edge or whole-loop yields one lift edge or
        // loop; each half-loop yields d/2 edges.
        let half: f64 = g.half_loops().iter().map(|l| l.a).sum();
        let expected = edge_weight(&g) * d as f64 + half * half_d as f64;
        prop_assert!((edge_weight(&lift) - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }
}
