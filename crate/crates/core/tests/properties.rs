use num_complex::Complex64;
use proptest::prelude::*;

use ordsearch::oracle::{f_of, find_kd, sigma_kd, OrderedOracle, Permutation};
use ordsearch::pebble::{build_covered_tree, validate_covering, PebbledTree};
use ordsearch::search::{oracle_prime_op, run_search, u1_apply, u1_inverse_apply, u2_op, Record};
use ordsearch::sim::{
    inner_product, project_query_index, BasisLabel, PureState, Schema, ALGEBRA_TOL, IDLE_QUERY,
};

fn tree_labels(pt: &PebbledTree) -> Vec<BasisLabel> {
    let n = pt.tree().n_leaves() as u32;
    let mut out = Vec::new();
    for node in 0..=pt.tree().len() as u32 {
        for color in 0..=pt.colors() as u32 {
            for bit in 0..=2 {
                for query in (0..n).chain([IDLE_QUERY]) {
                    out.push(BasisLabel::new(Schema::Tree, vec![node, color, bit, query]).unwrap());
                }
            }
        }
    }
    out
}

fn assert_orthonormal(images: &[PureState]) {
    for (a, x) in images.iter().enumerate() {
        for (b, y) in images.iter().enumerate() {
            let want = if a == b { 1.0 } else { 0.0 };
            let got = inner_product(x, y).unwrap();
            assert!(
                (got - Complex64::new(want, 0.0)).norm() < ALGEBRA_TOL,
                "Gram[{a}][{b}] = {got}"
            );
        }
    }
}

#[test]
fn tree_operators_are_isometries_on_their_domains() {
    for n in (2..=16).step_by(2) {
        let pt = build_covered_tree(n).unwrap();
        let labels = tree_labels(&pt);
        let u2 = u2_op(&pt);
        let domain: Vec<_> = labels.iter().filter(|l| u2.in_domain(l)).cloned().collect();
        assert!(!domain.is_empty());
        u2.check_isometry(&domain, ALGEBRA_TOL).unwrap();
        for f in 0..n {
            let op = oracle_prime_op(&pt, &OrderedOracle::with_answer(n, f).unwrap());
            let domain: Vec<_> = labels.iter().filter(|l| op.in_domain(l)).cloned().collect();
            op.check_isometry(&domain, ALGEBRA_TOL).unwrap();
        }
        let images: Vec<(PureState, PureState)> = labels
            .iter()
            .filter_map(|l| {
                let s = PureState::basis(l.clone());
                u1_apply(&pt, &s).ok().map(|img| (s, img))
            })
            .collect();
        assert!(!images.is_empty());
        assert_orthonormal(
            &images
                .iter()
                .map(|(_, img)| img.clone())
                .collect::<Vec<_>>(),
        );
        for (s, img) in &images {
            let back = u1_inverse_apply(&pt, img).unwrap();
            assert!(back.sub(s).unwrap().norm() < ALGEBRA_TOL);
        }
    }
}

#[test]
fn tampered_covering_is_detected() {
    let pt = build_covered_tree(16).unwrap();
    let mut cert = pt.to_certificate();
    let donor = cert
        .nodes
        .iter()
        .position(|n| !n.pebbles.is_empty())
        .unwrap();
    cert.nodes[donor].pebbles.pop();
    let broken = PebbledTree::from_certificate(&cert).unwrap();
    let report = validate_covering(&broken);
    assert!(!report.is_valid());
    assert!(!report.cond_a);
    assert_ne!(cert.hash(), pt.to_certificate().hash());
}

fn oracle() -> impl Strategy<Value = OrderedOracle> {
    (1usize..=40)
        .prop_flat_map(|n| (0..n).prop_map(move |f| OrderedOracle::with_answer(n, f).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_is_exact(x in oracle()) {
        let out = run_search(&x, Record::Nothing).unwrap();
        prop_assert_eq!(out.index, f_of(&x));
        prop_assert!(out.probability >= 1.0 - 1e-9);
    }

    #[test]
    fn query_projections_partition_the_state(x in oracle()) {
        let out = run_search(&x, Record::Queries).unwrap();
        for s in &out.query_states {
            let parts: f64 = (0..x.len() as i64).map(|i| project_query_index(s, i).unwrap().norm_sqr()).sum();
            let idle: f64 = s.terms().filter(|(l, _)| l.query_index().is_some_and(|q| q as usize >= x.len()))
                .map(|(_, a)| a.norm_sqr()).sum();
            prop_assert!((parts + idle - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn intermediate_overlaps_obey_cauchy_schwarz(f in 0usize..12, g in 0usize..12) {
        let x = OrderedOracle::with_answer(12, f).unwrap();
        let y = OrderedOracle::with_answer(12, g).unwrap();
        let (a, b) = (run_search(&x, Record::Queries).unwrap(), run_search(&y, Record::Queries).unwrap());
        for (sx, sy) in a.query_states.iter().zip(&b.query_states) {
            prop_assert!(inner_product(sx, sy).unwrap().norm() <= sx.norm() * sy.norm() + 1e-12);
        }
        if f == g {
            prop_assert!((inner_product(&a.final_state, &b.final_state).unwrap().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cycle_shifts_are_recovered(images in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(), k in 0usize..5, d in 1usize..6) {
        prop_assume!(k + d <= 5);
        let sigma = Permutation::new(images).unwrap();
        let tau = sigma_kd(&sigma, k, d).unwrap();
        prop_assert_eq!(find_kd(&sigma, &tau), Some((k, d)));
    }
}
