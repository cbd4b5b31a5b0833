use lapse_core::dist::{substream, StreamTag};
use lapse_core::model::{context_lapse, step_aoi, step_error};
use lapse_core::{DistSpec, IncrementDist, WeightDist};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn gaussian_first_draw_anchor() {
    // ChaCha8, seed 42, user 0, increment stream, ziggurat standard normal.
    let mut rng = substream(42, 0, StreamTag::Increment);
    let d = IncrementDist::new(DistSpec::standard_gaussian()).unwrap();
    assert_eq!(d.sample(&mut rng).to_bits(), 4603751418695550544);
}

#[test]
fn gaussian_moments_over_a_million_draws() {
    let sigma = 2.0;
    let d = IncrementDist::new(DistSpec::Gaussian { sigma }).unwrap();
    let mut rng = substream(1, 0, StreamTag::Increment);
    let n = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let a = d.sample(&mut rng);
        s1 += a;
        s2 += a * a;
    }
    let mean = s1 / n as f64;
    let m2 = s2 / n as f64;
    assert!(mean.abs() <= 5.0 * sigma / 1e3, "mean {mean}");
    assert!((m2 / d.second_moment() - 1.0).abs() <= 0.02, "m2 {m2}");
}

#[test]
fn two_level_weight_frequency() {
    let w = WeightDist::new(DistSpec::two_level_weights()).unwrap();
    let mut rng = substream(2, 0, StreamTag::Weight);
    let n = 1_000_000;
    let nines = (0..n).filter(|_| w.sample(&mut rng) == 9.0).count();
    let freq = nines as f64 / n as f64;
    assert!((freq - 0.05).abs() <= 0.002, "freq {freq}");
}

#[test]
fn conditional_second_moment_given_age() {
    // Five undelivered slots after a delivery: Q is a sum of five increments.
    let d = IncrementDist::new(DistSpec::standard_gaussian()).unwrap();
    let mut rng = substream(3, 0, StreamTag::Increment);
    let traces = 100_000;
    let mut sum = 0.0;
    for _ in 0..traces {
        let (mut q, mut aoi) = (rng.random_range(-10.0..10.0), 3u64);
        // delivery, then no deliveries until the age reaches 5
        q = step_error(q, d.sample(&mut rng), true);
        aoi = step_aoi(aoi, true);
        while aoi < 5 {
            q = step_error(q, d.sample(&mut rng), false);
            aoi = step_aoi(aoi, false);
        }
        sum += q * q;
    }
    let m = sum / traces as f64;
    assert!((m / (5.0 * d.second_moment()) - 1.0).abs() <= 0.03, "E[Q^2 | age 5] = {m}");
}

proptest! {
    #[test]
    fn no_delivery_telescopes(increments in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let mut q = 0.0;
        for &a in &increments {
            q = step_error(q, a, false);
        }
        let total: f64 = increments.iter().sum();
        prop_assert!((q - total).abs() <= 1e-9);
    }

    #[test]
    fn unit_increments_reduce_lapse_to_age(pattern in prop::collection::vec(any::<bool>(), 1..500)) {
        let (mut q, mut aoi) = (0.0f64, 0u64);
        for &delivered in &pattern {
            // identity lapse with unit weight
            prop_assert_eq!(q, aoi as f64);
            q = step_error(q, 1.0, delivered);
            aoi = step_aoi(aoi, delivered);
        }
        prop_assert_eq!(q, aoi as f64);
    }

    #[test]
    fn lapse_is_even_in_error(w in 0.1f64..10.0, q in -100.0f64..100.0) {
        prop_assert_eq!(context_lapse(w, q), context_lapse(w, -q));
        prop_assert!(context_lapse(w, q) >= 0.0);
    }
}
