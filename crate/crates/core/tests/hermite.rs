use nclt_core::hermite::*;
use nclt_core::numerics::GaussHermite;
use nclt_core::scalar::ratio;
use num_rational::BigRational;
use proptest::prelude::*;

fn rational_terms(d: usize, raw: &[(Vec<usize>, i64)]) -> Vec<(Vec<usize>, BigRational)> {
    raw.iter().map(|(i, c)| (i[..d].to_vec(), ratio(*c, 3))).collect()
}

#[test]
fn hermite_polynomials_match_recurrence_values() {
    // H_4(x) = x⁴ − 6x² + 3, H_5(x) = x⁵ − 10x³ + 15x
    for &x in &[-2.5, -1.0, 0.0, 0.5, 3.0] {
        assert!((hermite_poly::<f64>(4, x) - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-12);
        assert!((hermite_poly::<f64>(5, x) - (x.powi(5) - 10.0 * x.powi(3) + 15.0 * x)).abs() < 1e-11);
    }
    assert_eq!(hermite_poly(3, ratio(1, 2)), ratio(1, 8) - ratio(3, 2));
}

#[test]
fn second_moment_matches_product_quadrature() {
    let gh = GaussHermite::new(20);
    let h = HermiteExpansion::new(2, 3, vec![(vec![3, 0], 0.7), (vec![2, 1], -1.2), (vec![0, 3], 0.4)]).unwrap();
    let quad = gh.expect_pair(0.0, |x, y| h.eval(&[x, y]).unwrap().powi(2));
    assert!((h.as_product().second_moment() - quad).abs() < 1e-9);
}

#[test]
fn cross_moment_matches_correlated_quadrature() {
    let gh = GaussHermite::new(24);
    let h = ProductHermite::from_terms(1, vec![(vec![2], 1.0), (vec![3], 0.5), (vec![4], -0.25)]).unwrap();
    for &r in &[-0.8, -0.2, 0.35, 0.9] {
        let quad = gh.expect_pair(r, |x, y| h.eval(&[x]).unwrap() * h.eval(&[y]).unwrap());
        assert!((h.cross_moment_diagonal(&[r]).unwrap() - quad).abs() < 1e-9, "r = {r}");
    }
}

#[test]
fn malformed_expansions_are_rejected() {
    assert!(HermiteExpansion::<f64>::new(2, 2, vec![(vec![2, 1], 1.0)]).is_err());
    assert!(TailExpansion::<f64>::new(2, 2, vec![(vec![1, 1], 1.0)]).is_err());
    assert!(IndexMaps::multi_of(&[1, 0], 2).is_err());
    assert!(IndexMaps::multi_of(&[0, 2], 2).is_err());
    assert!(IndexMaps::new(0, 2).is_err());
}

#[test]
fn tail_bound_rejects_large_correlation() {
    let h1 = TailExpansion::new(1, 1, vec![(vec![2], 1.0)]).unwrap();
    assert!(tail_moment_check(&h1, &[vec![1.1]]).is_err());
}

#[test]
fn json_round_trip() {
    let h = HermiteExpansion::new(2, 2, vec![(vec![2, 0], 1.0), (vec![1, 1], -0.5)]).unwrap();
    assert_eq!(HermiteExpansion::from_json(&h.to_json()).unwrap(), h);
}

proptest! {
    #[test]
    fn index_maps_are_mutually_inverse(k in 1usize..6, d in 1usize..4) {
        let maps = IndexMaps::new(k, d).unwrap();
        for multi in &maps.multi_indices {
            prop_assert_eq!(multi.iter().sum::<usize>(), k);
            let seq = IndexMaps::sequence_of(multi);
            prop_assert_eq!(seq.len(), k);
            prop_assert_eq!(&IndexMaps::multi_of(&seq, d).unwrap(), multi);
        }
    }

    #[test]
    fn basis_changes_round_trip_exactly(
        raw in prop::collection::vec((prop::collection::vec(0usize..4, 2), -9i64..9), 1..6),
    ) {
        let h = ProductHermite::from_terms(2, rational_terms(2, &raw)).unwrap();
        let p = hermite_to_monomial(&h, DEFAULT_DEGREE_CAP).unwrap();
        let back = monomial_to_hermite(&p, DEFAULT_DEGREE_CAP).unwrap();
        for (idx, c) in h.terms() {
            prop_assert_eq!(back.coefficient(idx), c.clone());
        }
        for (idx, c) in back.terms() {
            prop_assert_eq!(h.coefficient(idx), c.clone());
        }
    }

    #[test]
    fn full_correlation_gives_second_moment(
        raw in prop::collection::vec((prop::collection::vec(0usize..4, 2), -9i64..9), 1..6),
    ) {
        let h = ProductHermite::from_terms(2, rational_terms(2, &raw)).unwrap();
        let one = vec![ratio(1, 1), ratio(1, 1)];
        prop_assert_eq!(h.cross_moment_diagonal(&one).unwrap(), h.second_moment());
    }

    #[test]
    fn tail_bound_holds_exactly(a in -10i64..=10, b in -10i64..=10, c1 in -5i64..5, c2 in -5i64..5) {
        let h1 = TailExpansion::new(2, 2, vec![(vec![3, 0], ratio(c1, 2)), (vec![1, 3], ratio(c2, 3))]).unwrap();
        let r = vec![vec![ratio(a, 10), ratio(0, 1)], vec![ratio(0, 1), ratio(b, 10)]];
        let rep = tail_moment_check(&h1, &r).unwrap();
        prop_assert!(rep.holds);
        prop_assert!(rep.lhs <= rep.bound);
    }
}

#[test]
fn scalar_aliases_agree() {
    let terms = vec![(vec![2, 1], 2i64), (vec![0, 3], -1)];
    let exact = nclt_core::ExactExpansion::new(2, 3, terms.iter().map(|(i, c)| (i.clone(), ratio(*c, 1)))).unwrap();
    let real = nclt_core::Expansion::new(2, 3, terms.iter().map(|(i, c)| (i.clone(), *c as f64))).unwrap();
    let single = nclt_core::SingleExpansion::new(2, 3, terms.iter().map(|(i, c)| (i.clone(), *c as f32))).unwrap();
    let r = [0.5, -0.25];
    let e = exact.cross_moment_diagonal(&[ratio(1, 2), ratio(-1, 4)]).unwrap();
    let x = real.cross_moment_diagonal(&r).unwrap();
    let s = single.cross_moment_diagonal(&[0.5f32, -0.25]).unwrap();
    assert_eq!(num_traits::ToPrimitive::to_f64(&e).unwrap(), x);
    assert!((s as f64 - x).abs() < 1e-5);
}
