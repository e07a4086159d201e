use approx::assert_relative_eq;
use gls_tail::moments::{
    empirical_moment, empirical_tail, gls_norm, natural_function, EmpiricalSample, MomentOracle,
};
use gls_tail::psi::{make_power, PDomain};
use proptest::collection::vec;
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        vec(-100.0f64..100.0, 1..300),
        vec(0.0f64..1e-3, 1..50),
        vec(prop_oneof![Just(0.0), 0.5f64..2.0, 1e3f64..1e6], 2..100),
    ]
}

fn has_nonzero(v: &[f64]) -> bool {
    v.iter().any(|&x| x != 0.0)
}

proptest! {
    #[test]
    fn empirical_moments_are_lyapunov_monotone(values in sample()) {
        let s = EmpiricalSample::from_outcomes(values).unwrap();
        let mut last = 0.0;
        for k in 0..60 {
            let p = 1.0 + 0.5 * k as f64;
            let m = empirical_moment(&s, p).unwrap().value;
            prop_assert!(m >= last * (1.0 - 1e-9), "p={p}: {m} < {last}");
            last = m;
        }
    }

    #[test]
    fn empirical_moment_scales(values in sample(), c in 1e-3f64..1e3, p in 1.0f64..30.0) {
        let s = EmpiricalSample::from_outcomes(values).unwrap();
        let base = empirical_moment(&s, p).unwrap().value;
        let scaled = empirical_moment(&s.scaled(c).unwrap(), p).unwrap().value;
        assert_relative_eq!(scaled, c * base, max_relative = 1e-12);
    }

    #[test]
    fn empirical_tail_is_nonincreasing_and_strict(values in sample()) {
        let s = EmpiricalSample::from_outcomes(values).unwrap();
        let mut last = 1.0;
        for &t in s.values() {
            let v = empirical_tail(&s, t).value;
            let above = s.values().iter().filter(|&&x| x > t).count();
            prop_assert_eq!(v, above as f64 / s.len() as f64);
            prop_assert!(v <= last);
            last = v;
        }
        prop_assert_eq!(empirical_tail(&s, s.max()).value, 0.0);
    }

    #[test]
    fn natural_function_has_unit_norm(values in sample()) {
        prop_assume!(has_nonzero(&values));
        let o = MomentOracle::from_sample(EmpiricalSample::from_outcomes(values).unwrap());
        let kappa = natural_function(&o, PDomain::closed(1.0, 24.0).unwrap()).unwrap();
        let n = gls_norm(&o, &kappa, 64).unwrap().value;
        prop_assert!((n - 1.0).abs() <= 1e-12, "{n}");
    }

    #[test]
    fn gls_norm_is_homogeneous(sigma in 0.1f64..10.0, c in 1e-3f64..1e3, m in 0.5f64..4.0) {
        let kappa = make_power(m, PDomain::closed(1.0, 50.0).unwrap()).unwrap();
        let o = MomentOracle::normal(sigma).unwrap();
        let base = gls_norm(&o, &kappa, 64).unwrap();
        let scaled = gls_norm(&o.scaled(c).unwrap(), &kappa, 64).unwrap();
        assert_relative_eq!(scaled.value, c * base.value, max_relative = 1e-12);
        prop_assert_eq!(scaled.argmax_p, base.argmax_p);
    }
}

#[test]
fn analytic_oracles_are_lyapunov_monotone() {
    let oracles = [
        MomentOracle::normal(1.0).unwrap(),
        MomentOracle::exponential(0.5).unwrap(),
        MomentOracle::uniform(2.0).unwrap(),
        MomentOracle::rademacher(),
    ];
    let grid = PDomain::closed(1.0, 500.0).unwrap().log_grid(200, 1e3).unwrap();
    for o in &oracles {
        for w in grid.windows(2) {
            assert!(o.eval(w[1]) >= o.eval(w[0]), "{} at {}", o.label(), w[1]);
        }
    }
}

#[test]
fn normal_sample_matches_closed_form() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let draws: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let s = EmpiricalSample::from_outcomes(draws).unwrap();
    let exact = MomentOracle::normal(1.0).unwrap();
    for p in [1.0, 2.0, 4.0] {
        let est = empirical_moment(&s, p).unwrap();
        assert!((est.value - exact.eval(p)).abs() <= 4.0 * est.stderr, "p={p}: {est:?}");
    }
}

#[test]
fn sample_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let s = EmpiricalSample::from_outcomes([3.0, -1.5, 0.25, 1e-300]).unwrap();
    s.write_csv(&path).unwrap();
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("value\n"));
    assert_eq!(EmpiricalSample::load_csv(&path).unwrap().values(), s.values());
}
