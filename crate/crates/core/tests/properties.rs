//! Property tests for the invariants that hold across whole parameter
//! ranges rather than at hand-picked points.

use proptest::prelude::*;

use mest::distributions::{Family, FrechetParams, GevParams, GpParams, NormalParams};
use mest::estimator::BoxDomain;
use mest::numerics::{shape_expm1, shape_log1p};

fn prob() -> impl Strategy<Value = f64> {
    (1e-6f64..1.0 - 1e-6).prop_filter("open interval", |p| *p > 0.0 && *p < 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn shape_transforms_invert(xi in -0.95f64..2.0, z in -10.0f64..10.0) {
        prop_assume!(1.0 + xi * z > 1e-12);
        let w = shape_log1p(xi, z);
        let back = shape_expm1(xi, w);
        prop_assert!((back - z).abs() <= 1e-8 * (1.0 + z.abs()));
    }

    #[test]
    fn gev_quantile_cdf_round_trip(
        mu in -3.0f64..3.0,
        sigma in 0.1f64..4.0,
        xi in -0.95f64..2.0,
        p in prob(),
    ) {
        let member = GevParams::new(mu, sigma, xi).unwrap();
        let y = member.quantile(p).unwrap();
        prop_assert!(member.in_support(y), "quantile left the support: {y}");
        prop_assert!(member.log_pdf(y) > f64::NEG_INFINITY);
        prop_assert!((member.cdf(y) - p).abs() < 1e-8);
    }

    #[test]
    fn gp_quantile_cdf_round_trip(
        a in 0.1f64..4.0,
        xi in -0.95f64..2.0,
        p in prob(),
    ) {
        let member = GpParams::new(a, xi).unwrap();
        let y = member.quantile(p).unwrap();
        prop_assert!(member.in_support(y));
        prop_assert!((member.cdf(y) - p).abs() < 1e-8);
    }

    #[test]
    fn frechet_quantile_cdf_round_trip(
        tau in 0.1f64..4.0,
        alpha in 0.2f64..5.0,
        p in prob(),
    ) {
        let member = FrechetParams::new(tau, alpha).unwrap();
        let y = member.quantile(p).unwrap();
        prop_assert!(y > 0.0);
        prop_assert!((member.cdf(y) - p).abs() < 1e-9);
    }

    #[test]
    fn support_indicator_matches_log_density(
        mu in -3.0f64..3.0,
        sigma in 0.1f64..4.0,
        xi in -0.95f64..2.0,
        y in -50.0f64..50.0,
    ) {
        let member = GevParams::new(mu, sigma, xi).unwrap();
        let finite = member.log_pdf(y) > f64::NEG_INFINITY;
        prop_assert_eq!(finite, member.in_support(y));
        let c = member.cdf(y);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn normal_log_density_is_always_finite(
        mean in -5.0f64..5.0,
        sd in 0.1f64..5.0,
        y in -100.0f64..100.0,
    ) {
        let member = NormalParams::new(mean, sd).unwrap();
        prop_assert!(member.log_pdf(y).is_finite());
    }

    #[test]
    fn box_clip_lands_inside(
        lo0 in -5.0f64..0.0,
        hi0 in 0.5f64..5.0,
        lo1 in -5.0f64..0.0,
        hi1 in 0.5f64..5.0,
        x in -20.0f64..20.0,
        y in -20.0f64..20.0,
    ) {
        let domain = BoxDomain::new(vec![lo0, lo1], vec![hi0, hi1]).unwrap();
        let mut eta = vec![x, y];
        domain.clip(&mut eta);
        prop_assert!(domain.contains(&eta));
        for k in 2..=5 {
            for point in domain.lattice(k) {
                prop_assert!(domain.contains(&point));
            }
        }
    }

    #[test]
    fn cdf_is_monotone_in_y(
        a in 0.1f64..4.0,
        xi in -0.95f64..2.0,
        y1 in 0.0f64..30.0,
        y2 in 0.0f64..30.0,
    ) {
        let member = GpParams::new(a, xi).unwrap();
        let (lo, hi) = (y1.min(y2), y1.max(y2));
        prop_assert!(member.cdf(hi) >= member.cdf(lo) - 1e-12);
    }
}
