use num_complex::Complex64;
use proptest::prelude::*;

use lmcf_core::ale::{
    act_g, chart_inverse, level_residual, local_chart, mu_g, polygon_floor, quotient_metric_raw,
    sigma, solve_level, AleParams, Sheet, SubtorusAction,
};
use lmcf_core::flat::{shrinker_alpha_c, FlatModel, ShrinkerModel};
use lmcf_core::flow::{integrate_flow, FlatSlice, IntegratorConfig, DRIFT_BUDGET};
use lmcf_core::singularity::{component_census, peak_index};

fn params(n: usize) -> impl Strategy<Value = AleParams> {
    (prop::collection::vec(0.2f64..2.5, n), -2.0f64..2.0)
        .prop_map(|(alpha, h0)| AleParams::new(alpha, h0).unwrap())
}

fn sheet() -> impl Strategy<Value = Sheet> {
    (0usize..4).prop_map(|i| Sheet::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solve_level_round_trips(p in (1usize..5).prop_flat_map(params), fy in 0.0f64..1.0, dx in 0.0f64..3.0, s in sheet()) {
        let h = p.h();
        let y = -h[p.n()] - 1.0 + fy * (h[p.n()] - h[0] + 2.0);
        let x = polygon_floor(&p, y) + dx;
        let q = solve_level(&p, x, y, s).unwrap();
        let (x2, y2) = mu_g(&p, q.rep()).unwrap();
        prop_assert!((x2 - x).abs() < 1e-9 && (y2 - y).abs() < 1e-9);
        prop_assert!(level_residual(&p, q.rep()) < 1e-9);
        // Real representatives are fixed by the involution.
        prop_assert_eq!(sigma(q.rep()).to_real(), q.rep().to_real());
    }

    #[test]
    fn torus_action_preserves_moment(p in (1usize..4).prop_flat_map(params), y in -1.0f64..0.5, dx in 0.1f64..2.0, t0 in 0.0f64..6.3, t1 in 0.0f64..6.3) {
        let x = polygon_floor(&p, y) + dx;
        let q = solve_level(&p, x, y, Sheet::PP).unwrap();
        let moved = act_g(q.rep(), Complex64::from_polar(1.0, t0), Complex64::from_polar(1.0, t1));
        let (x2, y2) = mu_g(&p, &moved).unwrap();
        prop_assert!((x2 - x).abs() < 1e-9 && (y2 - y).abs() < 1e-9);
        prop_assert!(level_residual(&p, &moved) < 1e-9);
    }

    #[test]
    fn chart_inverts(n in 1usize..4, k0 in 0usize..4, r1 in 0.01f64..0.8, r2 in 0.01f64..0.8, a1 in 0.0f64..6.3, a2 in 0.0f64..6.3) {
        prop_assume!(k0 <= n);
        let p = AleParams::unit(n).unwrap();
        let (u1, u2) = (Complex64::from_polar(r1, a1), Complex64::from_polar(r2, a2));
        let q = chart_inverse(&p, k0, u1, u2).unwrap();
        let (v1, v2) = local_chart(&p, k0, q.rep()).unwrap();
        prop_assert!((v1 - u1).norm() < 1e-8 && (v2 - u2).norm() < 1e-8);
    }

    #[test]
    fn quotient_metric_is_symmetric(p in (1usize..4).prop_flat_map(params), y in -1.0f64..0.5, dx in 0.1f64..2.0,
                                    v in prop::collection::vec(-1.0f64..1.0, 16), w in prop::collection::vec(-1.0f64..1.0, 16)) {
        let x = polygon_floor(&p, y) + dx;
        let q = solve_level(&p, x, y, Sheet::PM).unwrap();
        let d = p.real_len();
        let (v, w) = (&v[..d], &w[..d]);
        let g = |a: &[f64], b: &[f64]| quotient_metric_raw(q.rep(), a, b).unwrap();
        prop_assert!((g(v, w) - g(w, v)).abs() < 1e-12);
        prop_assert!(g(v, v) >= -1e-14);
    }

    #[test]
    fn peak_index_lies_in_its_window(n in 1usize..6, a in 1i64..7, b in -40i64..0) {
        prop_assume!(b > -(n as i64 + 1) * a && b % a != 0);
        let m0 = peak_index(n, a, b).unwrap() as i64;
        // n + b/a < m0 < n + 1 + b/a, multiplied through by a > 0.
        prop_assert!(n as i64 * a + b < m0 * a && m0 * a < (n as i64 + 1) * a + b);
    }

    #[test]
    fn census_partitions_the_sheets(n in 1usize..5, a in 1i64..4, b in -12i64..6, c in -20.0f64..20.0) {
        let Ok(act) = SubtorusAction::new(a, b, n) else { return Ok(()) };
        let p = AleParams::unit(n).unwrap();
        if let Ok(census) = component_census(&p, act, c) {
            let mut all: Vec<Sheet> = census.components.concat();
            all.sort_by_key(|s| s.index());
            prop_assert_eq!(all, Sheet::ALL.to_vec());
            prop_assert!(census.count == 1 || census.count == 2);
            prop_assert!(census.components.iter().all(|g| g.len() == 4 / census.count));
        }
    }

    #[test]
    fn shrinker_alpha_sign(l in prop::collection::vec(prop_oneof![-5i64..0, 1i64..6], 2..4), c in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0]) {
        let m = ShrinkerModel::new(l.clone()).unwrap();
        let alpha = shrinker_alpha_c(&m, c).unwrap();
        let sum: i64 = l.iter().sum();
        prop_assert_eq!(alpha, -(sum as f64) / (2.0 * c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn drift_law_on_random_shrinker_seeds(theta in 0.1f64..1.4, c in 0.5f64..2.0) {
        let f = FlatSlice::new(FlatModel::Shrinker(ShrinkerModel::new(vec![1, 2]).unwrap()));
        let FlatModel::Shrinker(m) = &f.model else { unreachable!() };
        let seed = m.level_point(c, &[theta]).unwrap();
        let tr = integrate_flow(&f, &[seed], c, 0.2, &IntegratorConfig::default()).unwrap();
        prop_assert!(tr.max_drift() < DRIFT_BUDGET);
        tr.check_invariants().unwrap();
    }
}
