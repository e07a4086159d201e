use approx::assert_relative_eq;
use gls_tail::moments::{gls_norm_on_grid, MomentOracle};
use gls_tail::psi::{
    combine, dominance_constant, log_spaced, make_doob_factor, make_power, CombineMode, GeneratingFunction,
    PDomain,
};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = GeneratingFunction> {
    let full = PDomain::full();
    prop_oneof![
        (0.25f64..8.0).prop_map(move |m| make_power(m, full).unwrap()),
        (0.1f64..10.0).prop_map(move |c| GeneratingFunction::constant(c, full).unwrap()),
        Just(make_doob_factor(PDomain::above(1.0).unwrap()).unwrap()),
        (0.5f64..4.0, 0.1f64..5.0).prop_map(move |(m, c)| {
            combine(&[make_power(m, full).unwrap()], CombineMode::Scale(c)).unwrap()
        }),
        (1.0f64..6.0).prop_map(move |m| {
            let pts: Vec<(f64, f64)> = log_spaced(1.0, 64.0, 9)
                .unwrap()
                .into_iter()
                .map(|p| (p, p.powf(1.0 / m)))
                .collect();
            GeneratingFunction::from_table(&pts).unwrap()
        }),
    ]
}

fn interior_grid(g: &GeneratingFunction) -> Vec<f64> {
    g.domain().log_grid(64, 1e3).unwrap()
}

proptest! {
    #[test]
    fn positive_and_deterministic(g in family()) {
        for p in interior_grid(&g) {
            let v = g.eval(p);
            prop_assert!(v > 0.0 && v.is_finite(), "{} at {p}: {v}", g.tag());
            prop_assert_eq!(v.to_bits(), g.eval(p).to_bits());
            prop_assert_eq!(v.to_bits(), g.try_eval(p).unwrap().to_bits());
        }
    }

    #[test]
    fn product_commutes_and_associates(a in family(), b in family(), c in family()) {
        let ab = combine(&[a.clone(), b.clone()], CombineMode::Product).unwrap();
        let ba = combine(&[b.clone(), a.clone()], CombineMode::Product).unwrap();
        let ab_c = combine(&[ab.clone(), c.clone()], CombineMode::Product).unwrap();
        let bc = combine(&[b, c.clone()], CombineMode::Product).unwrap();
        let a_bc = combine(&[a, bc], CombineMode::Product).unwrap();
        for p in interior_grid(&ab_c) {
            assert_relative_eq!(ab.eval(p), ba.eval(p), max_relative = 1e-12);
            assert_relative_eq!(ab_c.eval(p), a_bc.eval(p), max_relative = 1e-12);
        }
    }

    #[test]
    fn self_dominance_is_exactly_one(g in family(), n in 2usize..300) {
        prop_assert_eq!(dominance_constant(&g, &g, n).unwrap().value, 1.0);
    }

    #[test]
    fn dominance_transfers_to_norms(a in family(), b in family(), sigma in 0.1f64..5.0) {
        // ν₁ ≤ C ν₂ on the grid gives ||ζ||_{ν₂} ≤ C ||ζ||_{ν₁} on the same grid
        let c = dominance_constant(&a, &b, 128).unwrap().value;
        let domain = a.domain().intersect(b.domain()).unwrap();
        let grid = domain.log_grid(128, 1e3).unwrap();
        let oracle = MomentOracle::normal(sigma).unwrap();
        let n1 = gls_norm_on_grid(&oracle, &a, &grid).unwrap().value;
        let n2 = gls_norm_on_grid(&oracle, &b, &grid).unwrap().value;
        prop_assert!(n2 <= c * n1 * (1.0 + 1e-12), "{n2} > {c} * {n1}");
    }

    #[test]
    fn pointwise_min_is_below_each_part(a in family(), b in family()) {
        let m = combine(&[a.clone(), b.clone()], CombineMode::PointwiseMin).unwrap();
        for p in interior_grid(&m) {
            prop_assert!(m.eval(p) <= a.eval(p) && m.eval(p) <= b.eval(p));
        }
    }
}

#[test]
fn domain_display_and_intersection() {
    let a = PDomain::from(1.0).unwrap();
    let b = PDomain::open(2.0, 8.0).unwrap();
    assert_eq!(a.to_string(), "[1, inf)");
    let i = a.intersect(&b).unwrap();
    assert_eq!(i, b);
    assert!(PDomain::closed(1.0, 2.0).unwrap().intersect(&PDomain::closed(3.0, 4.0).unwrap()).is_err());
}
