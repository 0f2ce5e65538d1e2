use dbarstrip::damping::{build_damping_closed_form, DampingConfig};
use dbarstrip::exec::Exec;
use dbarstrip::geometry::GeneralizedStrip;
use dbarstrip::numerics::{GridFunction, StripGrid};
use dbarstrip::runge::{pole_push, PushConfig};
use dbarstrip::weights::WeightFunction;
use dbarstrip::C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn power_log_weights_are_nondecreasing(a in 0.1f64..2.0, b in 0.0f64..2.0, t in 0.0f64..1e3, dt in 0.0f64..10.0) {
        let w = WeightFunction::power_log(a, b);
        prop_assert!(w.eval(t + dt) >= w.eval(t));
    }

    #[test]
    fn grid_csv_round_trip(x in -5.0f64..5.0, y in -5.0f64..5.0, s in 1e-3f64..1e3) {
        let g = StripGrid::new(&GeneralizedStrip::horizontal(1.0), 0.5, 1.0, 0.25, 5).unwrap();
        let f = GridFunction::from_fn(&g, "f", Exec::Sequential, |z| (z + C64::new(x, y)) * s / 3.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv_to(&mut buf).unwrap();
        prop_assert_eq!(GridFunction::read_csv_from(&buf[..]).unwrap(), f);
    }

    #[test]
    fn damping_normalized_at_origin(a in 0.2f64..0.9, h in 0.5f64..2.0) {
        let q = build_damping_closed_form(&WeightFunction::power(a), h, &DampingConfig::default()).unwrap();
        let p0 = q.p(C64::new(0.0, 0.0));
        prop_assert!((p0 - 1.0).norm() < 1e-12);
    }

    #[test]
    fn vertical_push_within_tolerance(x in -3.0f64..3.0, y in 1.2f64..3.0, lift in 0.1f64..2.0, up in any::<bool>()) {
        let k = GeneralizedStrip::horizontal(1.0);
        let s = if up { 1.0 } else { -1.0 };
        let (alpha, beta) = (C64::new(x, s * y), C64::new(x, s * (y + lift)));
        let p = pole_push(alpha, beta, &k, 1e-6, &PushConfig::default()).unwrap();
        prop_assert!(p.certified <= 1e-6);
        for i in 0..41 {
            let xi = C64::new(x - 10.0 + 0.5 * i as f64, if i % 2 == 0 { 1.0 } else { -1.0 });
            let err = (1.0 / (xi - alpha) - p.rational.eval(xi)).norm();
            prop_assert!(err <= 1e-6, "error {err:e} at {xi}");
        }
    }
}
