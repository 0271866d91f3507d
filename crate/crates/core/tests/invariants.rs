use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use cyclestat::free_group::for_each_cyclically_reduced;
use cyclestat::graph::MultiGraph;
use cyclestat::linalg;
use cyclestat::walks::{exact_cycle_distribution, finite_group_cycle_distribution, FiniteGroup, FiniteGroupLabeling};
use cyclestat::zeta::{
    conjugacy_class_count, cycle_counts_from_det, entropy_solve, euler_product, primitive_cycle_census, series_cc,
    series_h, series_h_expanded, trace_powers, zeta_det,
};

fn rotation_orbits(r: usize, m: usize) -> usize {
    let mut seen = HashSet::new();
    for_each_cyclically_reduced(r, m, |w| {
        let min = (0..m).map(|s| w[s..].iter().chain(&w[..s]).copied().collect::<Vec<i32>>()).min().unwrap();
        seen.insert(min);
    })
    .unwrap();
    seen.len()
}

#[test]
fn conjugacy_counts_rank_three() {
    for m in 1..=6 {
        assert_eq!(conjugacy_class_count(3, m).unwrap(), BigInt::from(rotation_orbits(3, m)), "m={m}");
    }
}

#[test]
fn growth_series_agree() {
    for k in 2..=5 {
        assert_eq!(series_h(k, 24).unwrap(), series_h_expanded(k, 24).unwrap());
        let cc = series_cc(k, 24).unwrap();
        for r in 1..=24 {
            assert_eq!(cc.coeff(r), BigRational::from_integer(conjugacy_class_count(k, r).unwrap()));
        }
    }
}

fn connected_graph(bits: &[bool], n: usize) -> Option<MultiGraph> {
    let mut adj = vec![vec![0u32; n]; n];
    let mut it = bits.iter();
    for i in 0..n {
        for j in i + 1..n {
            if *it.next().unwrap() {
                adj[i][j] = 1;
                adj[j][i] = 1;
            }
        }
    }
    let g = MultiGraph::from_adjacency(false, adj).ok()?;
    g.is_connected().then_some(g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn euler_product_matches_determinant(bits in proptest::collection::vec(any::<bool>(), 10)) {
        if let Some(g) = connected_graph(&bits, 5) {
            let mut det = zeta_det(&g);
            det.resize(6, BigInt::from(0));
            prop_assert_eq!(euler_product(&primitive_cycle_census(&g, 5), 5), det[..6].to_vec());
        }
    }

    #[test]
    fn log_derivative_counts_closed_walks(bits in proptest::collection::vec(any::<bool>(), 15)) {
        if let Some(g) = connected_graph(&bits, 6) {
            let n = cycle_counts_from_det(&zeta_det(&g), 12).unwrap();
            let t = trace_powers(&g, 12);
            prop_assert_eq!(&n[1..], &t[1..]);
        }
    }

    #[test]
    fn cycle_distribution_total_is_trace(f in proptest::collection::vec(-3i64..=3, 4), n in 1usize..14) {
        let g = MultiGraph::complete(4);
        let d = exact_cycle_distribution(&g, &f, n).unwrap();
        prop_assert_eq!(d.total(), trace_powers(&g, n)[n].clone());
    }

    #[test]
    fn cyclic_labels_fold_the_sum(f in proptest::collection::vec(0i64..5, 4), n in 1usize..12) {
        let g = MultiGraph::complete(4);
        let lab = FiniteGroupLabeling::new(FiniteGroup::cyclic(5).unwrap(), f.iter().map(|&x| x as usize).collect()).unwrap();
        let counts = finite_group_cycle_distribution(&g, &lab, n).unwrap().counts;
        prop_assert_eq!(counts, exact_cycle_distribution(&g, &f, n).unwrap().fold_mod(5));
    }

    #[test]
    fn entropy_is_homogeneous(f in proptest::collection::vec(0.05f64..1.0, 3), scale in 0.2f64..5.0) {
        let a = linalg::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 0.0]]);
        let s = entropy_solve(&a, &f).unwrap();
        let scaled: Vec<f64> = f.iter().map(|x| x * scale).collect();
        let t = entropy_solve(&a, &scaled).unwrap();
        prop_assert!((t * scale - s).abs() < 1e-9 * s.max(1.0));
        let rho = linalg::spectral_radius(&cyclestat::zeta::weighted_matrix(&a, &f, s));
        prop_assert!((rho - 1.0).abs() < 1e-10);
    }
}
