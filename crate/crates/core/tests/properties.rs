use proptest::prelude::*;

use resolvent_asym::barriers::{radial_barriers, EnhancedBarriers};
use resolvent_asym::experiments::format_number;
use resolvent_asym::geometry::{DomainOracle, TouchingBallConfig};
use resolvent_asym::params::{Exponent, ProblemParams};
use resolvent_asym::qmeans::{q_mean, Profile, QMeanQuery};
use resolvent_asym::quadrature::QuadratureConfig;
use resolvent_asym::radial::{RadialGeometry, RadialSolution};
use resolvent_asym::special_fn::f_exact;

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![(1.2f64..8.0).prop_map(Exponent::Finite), Just(Exponent::Infinity)]
}

fn disc_query(q: f64, xi: f64) -> (DomainOracle, QMeanQuery) {
    let domain = DomainOracle::ball(2, 1.0).unwrap();
    let cfg = TouchingBallConfig::new(&domain, &[0.5, 0.0]).unwrap();
    (domain, QMeanQuery::new(cfg, Exponent::Finite(q), xi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn f_is_decreasing_and_log_convex(alpha in -0.9f64..3.0, log_sigma in -3.0f64..3.0) {
        let cfg = QuadratureConfig::default();
        let s = 10f64.powf(log_sigma);
        let h = 0.05 * s;
        let lf = |x: f64| f_exact(x, alpha, &cfg).unwrap().ln();
        let (a, b, c) = (lf(s - h), lf(s), lf(s + h));
        prop_assert!(c < b && b < a);
        prop_assert!(a + c - 2.0 * b >= -1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn barriers_are_ordered_and_decreasing(p in exponent(), dim in 2usize..5, r_i in 0.3f64..2.0, r_e in 0.3f64..2.0, t in 0.0f64..30.0) {
        let b = EnhancedBarriers::new(ProblemParams::new(dim, p, 0.1).unwrap(), r_i, r_e).unwrap();
        let (u, v) = (b.enhanced_u(t).unwrap().ln(), b.enhanced_v(t).unwrap().ln());
        prop_assert!(u <= v + 1e-9, "U {u} > V {v}");
        prop_assert!(u <= 1e-12 && v <= 1e-12);
        let dt = 0.1;
        prop_assert!(b.enhanced_u(t + dt).unwrap().ln() <= u + 1e-12);
        prop_assert!(b.enhanced_v(t + dt).unwrap().ln() <= v + 1e-12);
    }

    #[test]
    fn radial_solution_is_sandwiched(p in exponent(), dim in 2usize..4, eps in 0.02f64..0.5, frac in 0.0f64..1.0, exterior in any::<bool>()) {
        let geometry = if exterior {
            RadialGeometry::Exterior { radius: 1.0 }
        } else {
            RadialGeometry::Ball { radius: 1.0 }
        };
        let params = ProblemParams::new(dim, p, eps).unwrap();
        let sol = RadialSolution::new(params, geometry).unwrap();
        let b = radial_barriers(params, geometry).unwrap();
        let d = 0.999 * frac;
        let tau = params.tau(d);
        let log_u = sol.log_u_at_distance(d).unwrap();
        prop_assert!(log_u <= 1e-12);
        prop_assert!(b.enhanced_u(tau).unwrap().ln() <= log_u + 1e-9);
        prop_assert!(log_u <= b.enhanced_v(tau).unwrap().ln() + 1e-9);
        prop_assert!(sol.log_u_at_distance(d + 1e-3).unwrap() < log_u);
    }

    #[test]
    fn nearest_point_is_idempotent(theta in 0.0f64..std::f64::consts::TAU, frac in 0.05f64..0.9) {
        let domain = DomainOracle::ellipsoid(vec![2.0, 1.0]).unwrap();
        let x = [frac * 2.0 * theta.cos(), frac * theta.sin()];
        let (d, y) = domain.distance_and_nearest(&x).unwrap();
        prop_assert!((d - domain.distance(&x).unwrap()).abs() < 1e-12);
        // moving towards y along the segment keeps the same projection
        let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
        let (d_mid, y_mid) = domain.distance_and_nearest(&mid).unwrap();
        prop_assert!((d_mid - 0.5 * d).abs() < 1e-8, "{d_mid} vs {}", 0.5 * d);
        prop_assert!((y_mid[0] - y[0]).hypot(y_mid[1] - y[1]) < 1e-6);
    }

    #[test]
    fn csv_numbers_round_trip(x in prop::num::f64::NORMAL) {
        let s = format_number(x);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(format_number(back), s);
        prop_assert!(((back - x) / x).abs() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn qmean_translates_and_scales(q in 1.5f64..4.0, c in -2.0f64..2.0, k in 0.2f64..5.0, xi in 0.005f64..0.1) {
        let (domain, query) = disc_query(q, xi);
        let base = q_mean(&domain, &query, &Profile::Exponential).unwrap().mu;
        let shifted = q_mean(&domain, &query, &Profile::custom(move |t| (-t).exp() + c)).unwrap().mu;
        let scaled = q_mean(&domain, &query, &Profile::custom(move |t| k * (-t).exp())).unwrap().mu;
        prop_assert!((shifted - base - c).abs() < 1e-8 * (1.0 + c.abs()), "{shifted} vs {base} + {c}");
        prop_assert!((scaled - k * base).abs() < 1e-8 * k * base.max(1e-6));
    }

    #[test]
    fn qmean_preserves_order(q in 1.5f64..4.0, a in 0.3f64..3.0, gap in 0.01f64..1.0, xi in 0.005f64..0.1) {
        let (domain, query) = disc_query(q, xi);
        let lower = q_mean(&domain, &query, &Profile::custom(move |t| (-(a + gap) * t).exp())).unwrap();
        let upper = q_mean(&domain, &query, &Profile::custom(move |t| (-a * t).exp())).unwrap();
        prop_assert!(lower.mu <= upper.mu);
        let c = 0.37;
        let fixed = q_mean(&domain, &query, &Profile::Constant(c)).unwrap();
        prop_assert!((fixed.mu - c).abs() < 1e-14);
    }
}
