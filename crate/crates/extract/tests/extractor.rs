use std::time::Instant;

use cvqrng_core::BitString;
use cvqrng_extract::gf2::{best_base, has_hardware_clmul, schoolbook_portable};
use cvqrng_extract::security::{leftover_hash_bound, statistical_distance, verify_epsilon_security, Source};
use cvqrng_extract::toeplitz::toeplitz_with_base;
use cvqrng_extract::{toeplitz_fast, toeplitz_naive, ToeplitzSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[test]
fn fast_equals_naive_on_random_instances() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let sizes = [64usize, 1000, 4096];
    for t in 0..1000 {
        let n = sizes[t % 3];
        let m = rng.random_range(1..=n);
        let spec = ToeplitzSpec::random(n, m, rng.random()).unwrap();
        let x = BitString::random(&mut rng, n);
        let naive = toeplitz_naive(&x, &spec).unwrap();
        assert_eq!(toeplitz_fast(&x, &spec).unwrap(), naive, "instance {t}, n={n}, m={m}");
        if t % 10 == 0 {
            assert_eq!(toeplitz_with_base(&x, &spec, schoolbook_portable).unwrap(), naive);
        }
    }
}

#[test]
fn security_bound_holds_on_enumerated_instances() {
    for (n, m, k) in [(8, 2, 8.0), (8, 4, 4.0), (10, 3, 5.5), (12, 4, 7.0), (16, 4, 8.0), (16, 2, 3.0)] {
        let check = verify_epsilon_security(n, m, k).unwrap();
        assert!(check.holds(), "n={n} m={m} k={k}: {check:?}");
        assert!(check.sources >= 4);
    }
}

#[test]
fn security_examples() {
    let uniform = Source::flat("uniform", (0..256).collect());
    let d = statistical_distance(8, 2, &uniform).unwrap();
    assert!(d <= leftover_hash_bound(2, 8.0) && d < 0.01);

    let d = statistical_distance(8, 1, &Source::point_mass(0b1010_0101)).unwrap();
    assert!(d <= leftover_hash_bound(1, 0.0));

    let check = verify_epsilon_security(8, 4, 4.0).unwrap();
    assert!((check.bound - 0.5).abs() < 1e-15);
    assert!(check.distance <= check.bound);
}

#[test]
fn full_size_block_within_time_budget() {
    let spec = ToeplitzSpec::random(2_000_000, 656_000, 11).unwrap();
    let x = BitString::random(&mut ChaCha20Rng::seed_from_u64(12), 2_000_000);
    let t = Instant::now();
    let out = toeplitz_fast(&x, &spec).unwrap();
    let secs = t.elapsed().as_secs_f64();
    assert_eq!(out.len(), 656_000);
    println!("2e6 x 656e3 Toeplitz: {secs:.3} s (hardware clmul: {})", has_hardware_clmul());
    assert!(secs < 5.0, "{secs} s");
    // Spot-check output rows against the definition.
    for i in [0usize, 1, 327_999, 655_999] {
        let row = (0..spec.n_in()).fold(false, |acc, j| acc ^ (spec.entry(i, j) & x.get(j)));
        assert_eq!(out.get(i), row, "row {i}");
    }
}

#[test]
fn fast_path_throughput_gain() {
    let n = 1usize << 20;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let x = BitString::random(&mut rng, n);

    let small = ToeplitzSpec::random(n, 64, 6).unwrap();
    let t = Instant::now();
    let reference = toeplitz_naive(&x, &small).unwrap();
    let naive_rate = (n * 64) as f64 / t.elapsed().as_secs_f64();
    assert_eq!(toeplitz_fast(&x, &small).unwrap(), reference);

    let big = ToeplitzSpec::random(n, n / 4, 7).unwrap();
    let t = Instant::now();
    toeplitz_with_base(&x, &big, best_base()).unwrap();
    let fast_rate = (n * (n / 4)) as f64 / t.elapsed().as_secs_f64();
    let gain = fast_rate / naive_rate;
    println!("naive {naive_rate:.3e} entries/s, fast {fast_rate:.3e} entries/s, gain {gain:.0}x");
    assert!(gain >= 50.0, "gain {gain}");
}
