use cw_core::analysis::{classify_blowup_set, g_lambda};
use cw_core::grid::{grid_with_intervals, is_mirror_symmetric, snapped_intervals};
use cw_core::{
    build_grid, compute_h, compute_tau, make_initial, regrid, run, step, validate, InitialData,
    RunOptions, SimParams, SolutionState,
};
use cw_verify::InvariantChecker;
use proptest::prelude::*;

/// Admissible `(p, q)` with `q` strictly inside its range.
fn exponents() -> impl Strategy<Value = (f64, f64)> {
    (1.1f64..5.0, 0.0f64..0.95).prop_map(|(p, s)| (p, 1.0 + s * (2.0 * p / (p + 1.0) - 1.0)))
}

/// Symmetric, nonnegative profile nondecreasing towards the middle.
fn bump(k: usize, peak: f64, shape: &[f64]) -> Vec<f64> {
    let m = k / 2;
    let mut u = vec![0.0; k + 1];
    let mut acc = 0.0;
    for j in 1..=m {
        acc += shape[(j - 1) % shape.len()];
        u[j] = acc;
    }
    for j in 1..=m {
        u[j] = (u[j] * (peak / acc)).min(peak);
    }
    u[m] = peak;
    for j in 1..m {
        u[k - j] = u[j];
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tau_and_h_shrink_as_the_norm_grows((p, q) in exponents(), a in 1e-3f64..1e8, f in 1.0f64..1e3) {
        let pr = SimParams { p, q, ..Default::default() };
        let b = a * f;
        prop_assert!(compute_tau(&pr, b).unwrap() <= compute_tau(&pr, a).unwrap());
        prop_assert!(compute_h(&pr, b).unwrap() <= compute_h(&pr, a).unwrap());
        prop_assert!(compute_tau(&pr, a).unwrap() <= pr.tau);
        prop_assert!(compute_h(&pr, a).unwrap() <= pr.h);
    }

    #[test]
    fn grids_are_even_uniform_and_no_coarser_than_asked(h in 1e-4f64..2.0) {
        let g = build_grid::<f64>(h).unwrap();
        let k = g.intervals();
        prop_assert_eq!(k % 2, 0);
        prop_assert_eq!(k, snapped_intervals(h).unwrap());
        prop_assert!(g.h() <= h * (1.0 + 1e-12));
        prop_assert_eq!(g.nodes().len(), k + 1);
        prop_assert_eq!(g.nodes()[0], -1.0);
        prop_assert_eq!(g.nodes()[k], 1.0);
        prop_assert_eq!(g.x(g.mid()), 0.0);
        for j in 1..=k {
            prop_assert!(g.nodes()[j] > g.nodes()[j - 1]);
        }
    }

    #[test]
    fn regrid_keeps_symmetry_order_and_peak(
        half in 2usize..20,
        factor in 1usize..5,
        peak in 0.1f64..1e6,
        shape in prop::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let k = 2 * half;
        prop_assume!(shape.iter().sum::<f64>() > 0.0);
        let u = bump(k, peak, &shape);
        let coarse = grid_with_intervals::<f64>(k);
        let fine = grid_with_intervals::<f64>(k * factor);
        let s = regrid(&SolutionState::initial(u.clone()), &coarse, &fine).unwrap();
        let v = &s.u;
        let kf = fine.intervals();
        prop_assert!(is_mirror_symmetric(v));
        prop_assert_eq!(v[0], 0.0);
        prop_assert_eq!(v[kf], 0.0);
        prop_assert_eq!(v[fine.mid()], peak);
        for j in 1..=fine.mid() {
            prop_assert!(v[j] >= v[j - 1]);
        }
        // Nodes shared with the coarse grid keep their values.
        for j in 0..=k {
            prop_assert_eq!(v[j * factor], u[j]);
        }
    }

    #[test]
    fn step_preserves_symmetry_sign_and_shape(
        (p, q) in exponents(),
        half in 1usize..16,
        peak in 1e-3f64..1e4,
        tau in 1e-3f64..0.5,
        shape in prop::collection::vec(0.01f64..1.0, 1..6),
    ) {
        let k = 2 * half;
        let pr = SimParams { p, q, tau, h: 2.0 / k as f64, ..Default::default() };
        let g = grid_with_intervals::<f64>(k);
        let u = bump(k, peak, &shape);
        let r = step(&SolutionState::initial(u), &g, &pr).unwrap();
        let v = &r.next.u;
        let m = g.mid();
        let tol = 1e-10 * v[m].max(1.0);
        for j in 0..=m {
            prop_assert!((v[j] - v[k - j]).abs() <= tol);
            prop_assert!(v[j] >= 0.0);
        }
        for j in 1..=m {
            prop_assert!(v[j] >= v[j - 1]);
        }
        prop_assert_eq!(v[0], 0.0);
        prop_assert_eq!(v[k], 0.0);
    }

    #[test]
    fn sine_bump_is_exactly_symmetric(half in 1usize..200, lambda in 1e-3f64..1e6) {
        let k = 2 * half;
        let pr = SimParams { lambda, h: 2.0 / k as f64, ..Default::default() };
        let g = grid_with_intervals::<f64>(k);
        let s = make_initial(&pr, &InitialData::sine(lambda), &g).unwrap();
        prop_assert!(is_mirror_symmetric(&s.u));
        prop_assert_eq!(s.u[g.mid()], lambda);
    }

    #[test]
    fn validation_is_total(
        p in prop::num::f64::ANY,
        q in prop::num::f64::ANY,
        tau in prop::num::f64::ANY,
        h in prop::num::f64::ANY,
        lambda in prop::num::f64::ANY,
        blow_threshold in prop::num::f64::ANY,
    ) {
        let pr = SimParams { p, q, tau, h, lambda, blow_threshold, ..Default::default() };
        let report = validate(&pr);
        if [p, q, tau, h, lambda, blow_threshold].iter().any(|v| v.is_nan()) {
            prop_assert!(!report.is_ok());
        }
    }

    #[test]
    fn g_scales_as_a_power_of_lambda(p in 1.1f64..6.0, lambda in 1e-2f64..1e4, c in 1.1f64..10.0) {
        let ratio = g_lambda(p, c * lambda) / g_lambda(p, lambda);
        let want = c.powf(1.0 - p);
        prop_assert!((ratio / want - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_are_reproducible_and_clean(lambda in 5.0f64..50.0, q in 1.0f64..1.2) {
        let pr = SimParams { p: 3.0, q, lambda, blow_threshold: 1e8, ..Default::default() };
        let pr = pr.with_h(pr.fixed_grid_h());
        let init = InitialData::sine(lambda);
        let (out_a, hist_a) = run(&pr, &init, RunOptions::default()).unwrap();
        let (out_b, hist_b) = run(&pr, &init, RunOptions::default()).unwrap();
        prop_assert_eq!(&out_a, &out_b);
        prop_assert_eq!(&hist_a, &hist_b);
        let mut check = InvariantChecker::default();
        check.check_history(&hist_a);
        prop_assert!(check.ok(), "{}", check.summary());
        let a = classify_blowup_set(&hist_a, &pr).unwrap();
        let b = classify_blowup_set(&hist_b, &pr).unwrap();
        prop_assert_eq!(a, b);
    }
}
