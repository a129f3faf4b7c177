use std::f64::consts::PI;

use proptest::prelude::*;

use nlfreq::analysis::{l2_inner, unwrap_phase, wrap_phase};
use nlfreq::lti::{lti_reference_response, random_stable_siso};
use nlfreq::model::{harmonic_generator, HarmonicStart, ParamPoint, PlantModel, Range};
use nlfreq::multi::{common_period, rational_approximation, MultiInputSpec, Tone};
use nlfreq::ode::IntegratorSettings;
use nlfreq::sweep::evaluate_point;

fn is_multiple_of_two_pi(d: f64) -> bool {
    let k = (d / (2.0 * PI)).round();
    (d - 2.0 * PI * k).abs() < 1e-9
}

proptest! {
    #[test]
    fn wrapped_phase_lies_in_half_open_interval(theta in -50.0f64..50.0) {
        let w = wrap_phase(theta);
        prop_assert!(w > -PI && w <= PI);
        prop_assert!(is_multiple_of_two_pi(theta - w));
    }

    #[test]
    fn unwrapped_steps_never_exceed_pi(raw in prop::collection::vec(-PI..PI, 1..40)) {
        let out = unwrap_phase(&raw);
        prop_assert_eq!(out.len(), raw.len());
        for pair in out.windows(2) {
            prop_assert!((pair[1] - pair[0]).abs() <= PI + 1e-12);
        }
        for (a, b) in raw.iter().zip(&out) {
            prop_assert!(is_multiple_of_two_pi(a - b));
        }
    }

    #[test]
    fn exact_ratios_are_recovered_in_lowest_terms(p in 1u64..64, q in 1u64..64) {
        let (a, b) = rational_approximation(p as f64 / q as f64, 64, 1e-9).unwrap();
        prop_assert_eq!(a * q, b * p);
        prop_assert!(b <= q);
    }

    #[test]
    fn common_period_is_a_multiple_of_every_tone(base in 0.1f64..5.0, ratios in prop::collection::vec((1u64..8, 1u64..8), 1..4)) {
        let mut tones = vec![Tone::scalar(ParamPoint::new(base, 1.0).unwrap(), 1.0, 1)];
        for (p, q) in &ratios {
            let varpi = base * *p as f64 / *q as f64;
            tones.push(Tone::scalar(ParamPoint::new(varpi, 1.0).unwrap(), 1.0, 1));
        }
        let spec = MultiInputSpec::new(tones).unwrap();
        let gen = harmonic_generator(HarmonicStart::Sine);
        let t_a = common_period(&spec, &gen).unwrap();
        for tone in &spec.tones {
            let cycles = t_a / gen.period(&tone.omega);
            prop_assert!((cycles - cycles.round()).abs() < 1e-6, "{} cycles", cycles);
        }
    }

    #[test]
    fn range_margin_sign_matches_membership(lo in -10.0f64..10.0, width in 0.0f64..10.0, v in -25.0f64..25.0) {
        let range = Range::new(lo, lo + width);
        prop_assert_eq!(range.margin(v) >= 0.0, range.contains(v));
    }

    #[test]
    fn l2_inner_is_symmetric_and_positive(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..64), period in 0.1f64..10.0) {
        let (f, g): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert_eq!(l2_inner(&f, &g, period).unwrap(), l2_inner(&g, &f, period).unwrap());
        prop_assert!(l2_inner(&f, &f, period).unwrap() >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_lti_response_has_unit_radius(n in 1usize..5, seed in any::<u64>(), varpi in 0.05f64..5.0, a_u in 0.1f64..3.0) {
        let lti = random_stable_siso(n, seed);
        let plant = PlantModel::from_realization(&lti);
        let gen = harmonic_generator(HarmonicStart::Sine);
        let w = ParamPoint::new(varpi, a_u).unwrap();
        let settings = IntegratorSettings { max_periods: 20_000, ..Default::default() };
        let (_, sample) = evaluate_point(&plant, &gen, &w, &settings).unwrap();
        prop_assert!(sample.radius > 0.0 && sample.radius <= 1.0 + 1e-9);
        prop_assert!((sample.radius - 1.0).abs() < 1e-6);
        let reference = lti_reference_response(&lti, &w).unwrap();
        prop_assert!((sample.alpha / reference.alpha - 1.0).abs() < 1e-6);

        // a linear plant's gain does not depend on the amplitude
        let doubled = ParamPoint::new(varpi, 2.0 * a_u).unwrap();
        let (_, twice) = evaluate_point(&plant, &gen, &doubled, &settings).unwrap();
        prop_assert!((twice.alpha / sample.alpha - 1.0).abs() < 1e-7);
    }
}
