use ncrw::bessel::{
    scaled_bessel_i, signed_bessel_i, tail_radius, transition_probability, transition_probability_cosine,
    transition_probability_quadrature, DEFAULT_TAIL_EPS,
};
use proptest::prelude::*;

/// Law of the jump count convolved with the binomial law of the discrete
/// walk, built by the Pascal recursion rather than any closed form.
fn poissonized(t: f64, d: i64) -> f64 {
    let width = 400usize;
    let mid = width as i64 / 2;
    let mut dist = vec![0.0; width + 1];
    dist[mid as usize] = 1.0;
    let mut poisson = (-t).exp();
    let mut total = 0.0;
    for j in 0..width / 2 {
        if let Ok(idx) = usize::try_from(mid + d) {
            total += poisson * dist.get(idx).copied().unwrap_or(0.0);
        }
        if j as f64 > t && poisson < 1e-300 {
            break;
        }
        let mut next = vec![0.0; width + 1];
        for i in 1..width {
            next[i] = 0.5 * (dist[i - 1] + dist[i + 1]);
        }
        dist = next;
        poisson *= t / (j + 1) as f64;
    }
    total
}

#[test]
fn three_routes_agree() {
    for &t in &[0.5, 1.0, 2.0, 5.0, 10.0] {
        for d in 0..=30 {
            let closed = transition_probability(t, 0, d).unwrap();
            let fourier = transition_probability_quadrature(t, 0, d, 1e-13).unwrap();
            let poisson = poissonized(t, d);
            assert!((closed - fourier).abs() < 1e-12, "t={t} d={d}: {closed} vs {fourier}");
            assert!((closed - poisson).abs() < 1e-12, "t={t} d={d}: {closed} vs {poisson}");
            assert!((fourier - poisson).abs() < 1e-12);
        }
    }
}

#[test]
fn poissonized_fixed_value() {
    assert!((poissonized(1.0, 0) - 0.4657596075936404).abs() < 1e-15);
    assert!((transition_probability(2.0, 0, 1).unwrap() - poissonized(2.0, 1)).abs() < 1e-12);
}

#[test]
fn cosine_rewrite_matches_fourier_form() {
    for &t in &[0.5, 1.0, 3.0] {
        for d in -6..=6 {
            let a = transition_probability_quadrature(t, 0, d, 1e-13).unwrap();
            let b = transition_probability_cosine(t, 0, d, 1e-13).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn normalization() {
    for &t in &[0.5, 1.0, 2.0, 5.0] {
        let r = tail_radius(t, DEFAULT_TAIL_EPS).unwrap() as i64;
        let total: f64 = (-r..=r).map(|y| transition_probability(t, 0, y).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10, "{t}: {total}");
    }
}

#[test]
fn semigroup() {
    for &(s, t) in &[(0.5f64, 0.5), (1.0, 2.0)] {
        let r = tail_radius(s.max(t), DEFAULT_TAIL_EPS).unwrap() as i64 + 5;
        for y in -4..=4 {
            let lhs: f64 = (-r..=r)
                .map(|z| transition_probability(s, 0, z).unwrap() * transition_probability(t, z, y).unwrap())
                .sum();
            let rhs = transition_probability(s + t, 0, y).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}

#[test]
fn initial_condition() {
    assert_eq!(transition_probability(0.0, 5, 5).unwrap(), 1.0);
    assert_eq!(transition_probability(0.0, 5, 6).unwrap(), 0.0);
    assert_eq!(transition_probability_quadrature(0.0, 0, 0, 1e-13).unwrap(), 1.0);
    assert!(transition_probability(-1.0, 0, 0).is_err());
}

#[test]
fn extreme_arguments_stay_finite() {
    for &(n, t) in &[(0u64, 1e4), (10_000, 1e4), (10_000, 10.0), (500, 1e3)] {
        let v = scaled_bessel_i(n, t).unwrap();
        assert!(v.is_finite() && (0.0..=1.0).contains(&v), "{n},{t}: {v}");
    }
}

proptest! {
    #[test]
    fn symmetric_in_endpoints(t in 0.0f64..30.0, x in -50i64..50, y in -50i64..50) {
        prop_assert_eq!(transition_probability(t, x, y).unwrap(), transition_probability(t, y, x).unwrap());
    }

    #[test]
    fn signed_parity(n in 0u64..40, t in 0.0f64..50.0) {
        let plus = signed_bessel_i(n, t).unwrap();
        let minus = signed_bessel_i(n, -t).unwrap();
        if n % 2 == 0 {
            prop_assert_eq!(minus, plus);
        } else {
            prop_assert_eq!(minus, -plus);
        }
    }

    #[test]
    fn unit_interval(n in 0u64..2000, t in 0.0f64..5000.0) {
        let v = scaled_bessel_i(n, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }
}
