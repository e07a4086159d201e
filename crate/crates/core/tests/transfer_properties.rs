use std::sync::Arc;

use approx::assert_relative_eq;
use gls_tail::harness::{simulate_martingale, IncrementLaw, SimulationConfig};
use gls_tail::moments::{empirical_moment, MomentOracle};
use gls_tail::psi::{log_spaced, make_power, PDomain};
use gls_tail::transfer::{
    build_psi_function, infimum_over_slice, power_transfer, psi_from_kernel, tau_linear, InfimumConfig,
    KernelForm, RSlice, TransferKernel,
};
use proptest::prelude::*;

fn oracle() -> impl Strategy<Value = MomentOracle> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|s| MomentOracle::normal(s).unwrap()),
        (0.2f64..4.0).prop_map(|r| MomentOracle::exponential(r).unwrap()),
        (0.1f64..3.0).prop_map(|a| MomentOracle::uniform(a).unwrap()),
        (0.5f64..4.0).prop_map(|m| MomentOracle::from_fn("p^(1/m)", f64::INFINITY, move |p| p.powf(1.0 / m))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_below_p0(eta in oracle(), p0 in 1.5f64..8.0) {
        let k = TransferKernel::doob().with_p0(p0).unwrap();
        let grid = log_spaced(1.0, 2.0 * p0, 40).unwrap();
        let psi = build_psi_function(&k, &eta, &grid).unwrap();
        let at_p0 = psi_from_kernel(&k, &eta, p0).unwrap().value;
        for &p in grid.iter().filter(|&&p| p <= p0) {
            prop_assert_eq!(psi.eval(p), at_p0);
        }
    }

    #[test]
    fn doob_dominates_lyapunov_oracles(eta in oracle(), p in 1.0001f64..100.0) {
        let k = TransferKernel::doob();
        let v = psi_from_kernel(&k, &eta, p).unwrap();
        prop_assert!(v.value >= eta.eval(p), "{} < {}", v.value, eta.eval(p));
    }

    #[test]
    fn finer_r_grid_never_raises_infimum(a in 0.5f64..5.0, b in 0.1f64..3.0, n in 8usize..120) {
        // bumpy objective with several local minima on [1, 50]
        let f = |r: f64| (r - a * 7.0).powi(2).sqrt() + b * (3.0 * r.ln()).sin() + 5.0;
        let slice = RSlice::Interval(PDomain::closed(1.0, 50.0).unwrap());
        let scan = |size| InfimumConfig { r_grid_size: size, golden_iters: 0, ..InfimumConfig::default() };
        let coarse = infimum_over_slice(&slice, f, &scan(n), 1.0).unwrap();
        let fine = infimum_over_slice(&slice, f, &scan(2 * n - 1), 1.0).unwrap();
        prop_assert!(fine.value <= coarse.value);
        let refined = infimum_over_slice(&slice, f, &InfimumConfig { r_grid_size: n, ..InfimumConfig::default() }, 1.0)
            .unwrap();
        prop_assert!(refined.value <= coarse.value);
    }

    #[test]
    fn power_transfer_with_unit_alpha_is_linear(m in 0.5f64..4.0, c in 0.1f64..10.0, p in 1.0f64..40.0) {
        let beta = make_power(m, PDomain::full()).unwrap();
        let v = move |p: f64, r: f64| c * p / r;
        let slice = RSlice::Interval(PDomain::closed(p, 2.0 * p).unwrap());
        let lin = tau_linear(v, &beta, p, &slice).unwrap();
        let pow = power_transfer(v, 1.0, &beta, p, &slice).unwrap();
        assert_relative_eq!(lin.value, pow.value, max_relative = 1e-12);
    }
}

#[test]
fn builtin_kernels_are_monotone_in_z() {
    TransferKernel::doob().check_z_monotone(2000, 1).unwrap();
    TransferKernel::bdg().check_z_monotone(2000, 2).unwrap();
}

#[test]
fn decreasing_kernel_is_rejected() {
    let k = TransferKernel::new(
        "bad",
        PDomain::from(1.0).unwrap(),
        Arc::new(|p| RSlice::Points(vec![p])),
        KernelForm::General(Arc::new(|_, _, z| 1.0 / (1.0 + z))),
        None,
    )
    .unwrap();
    assert!(k.check_z_monotone(100, 3).is_err());
}

#[test]
fn all_infinite_slice_is_fatal_partial_is_skipped() {
    let eta = MomentOracle::from_fn("finite below 3", 3.0, |_| 1.0);
    let k = TransferKernel::new(
        "two-point",
        PDomain::from(1.0).unwrap(),
        Arc::new(|p| RSlice::Points(vec![p, p + 5.0])),
        KernelForm::Linear(Arc::new(|_, _| 2.0)),
        None,
    )
    .unwrap();
    let ok = psi_from_kernel(&k, &eta, 2.0).unwrap();
    assert!(ok.finite);
    assert_eq!((ok.value, ok.argmin_r), (2.0, 2.0));
    assert!(build_psi_function(&k, &eta, &[4.0]).is_err());
}

/// Simulated (ξ, η) = (M*, ξ_n): the transferred bound covers the
/// empirical moments of M* up to three standard errors.
#[test]
fn end_to_end_transfer_soundness() {
    for law in [IncrementLaw::Gaussian { sigma: 1.0 }, IncrementLaw::Uniform { half_width: 2.0 }] {
        let batch = simulate_martingale(&SimulationConfig {
            n_steps: 32,
            n_trials: 20_000,
            law,
            seed: 99,
            parallel: true,
        })
        .unwrap();
        let eta = MomentOracle::from_sample(batch.terminal.clone());
        let k = TransferKernel::doob().with_p0(2.0).unwrap();
        let grid = log_spaced(1.0, 8.0, 48).unwrap();
        let psi = build_psi_function(&k, &eta, &grid).unwrap();
        for p in [2.0, 4.0, 6.0, 8.0] {
            let lhs = empirical_moment(&batch.running_max, p).unwrap();
            let bound = psi.eval(p) * (1.0 + 3.0 * lhs.stderr / lhs.value);
            assert!(lhs.value <= bound, "{law:?} p={p}: {} > {bound}", lhs.value);
        }
    }
}
