use ncrw::bessel::{tail_radius, transition_probability, DEFAULT_TAIL_EPS};
use ncrw::linalg::Matrix;
use ncrw::martingale::{
    discrete_martingale, esscher_weight, lagrange_basis, lattice_basis, lattice_martingale, martingale_polynomial,
    s_transform_exponential, vandermonde, FiniteConfiguration, LatticeSpec, MartingalePolynomials,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window(t: f64) -> i64 {
    tail_radius(t, DEFAULT_TAIL_EPS).unwrap() as i64 + 3
}

#[test]
fn martingale_property_of_polynomials() {
    for &t in &[0.5, 1.0, 2.0] {
        let r = window(t);
        for u in -2i64..=2 {
            for n in 0..=8 {
                let mean: f64 = (u - r..=u + r)
                    .map(|y| transition_probability(t, u, y).unwrap() * martingale_polynomial(n, t, y as f64).unwrap())
                    .sum();
                let want = (u as f64).powi(n as i32);
                assert!((mean - want).abs() < 1e-8, "t={t} u={u} n={n}: {mean}");
            }
        }
    }
}

#[test]
fn exponential_s_transform() {
    for &t in &[0.5, 1.0, 2.0, 5.0] {
        for &alpha in &[-1.0, -0.6, -0.25, 0.0, 0.25, 0.5, 1.0] {
            for x in [-3, 0, 4] {
                let s = s_transform_exponential(alpha, t, x, DEFAULT_TAIL_EPS).unwrap();
                let want = (-t * (f64::cosh(alpha) - 1.0)).exp();
                assert!((s - want).abs() < 1e-10, "t={t} α={alpha} x={x}: {s} vs {want}");
            }
        }
    }
}

#[test]
fn generating_function_consistency() {
    let table = MartingalePolynomials::shared();
    let factorial = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    for &alpha in &[-0.5f64, -0.25, 0.25, 0.5, 1.0] {
        for &t in &[0.5, 1.0, 2.0] {
            for x in -3..=3 {
                let x = x as f64;
                let partial: f64 = (0..=12)
                    .map(|n| table.eval(n, t, x).unwrap() * alpha.powi(n as i32) / factorial(n))
                    .sum();
                let exact = esscher_weight(alpha, t, x).unwrap();
                // Coefficients of m_n(-t, |x|) dominate those of m_n(t, x), so the
                // tail of that series bounds the truncation error.
                let a = alpha.abs();
                let majorant_partial: f64 =
                    (0..=12).map(|n| table.eval(n, -t, x.abs()).unwrap() * a.powi(n as i32) / factorial(n)).sum();
                let bound = (a * x.abs() + t * (a.cosh() - 1.0)).exp() - majorant_partial;
                assert!(
                    (partial - exact).abs() <= bound + 1e-12,
                    "α={alpha} t={t} x={x}: {} > {bound}",
                    (partial - exact).abs()
                );
            }
        }
    }
}

#[test]
fn determinant_identity_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2019);
    for _ in 0..100 {
        let n = rng.random_range(1..=5);
        let mut sites: Vec<i64> = Vec::new();
        while sites.len() < n {
            let s = rng.random_range(-10..=10);
            if !sites.contains(&s) {
                sites.push(s);
            }
        }
        sites.sort_unstable();
        let xi = FiniteConfiguration::new(sites.clone()).unwrap();
        let z: Vec<i64> = (0..n).map(|_| rng.random_range(-15..=15)).collect();
        let m = Matrix::from_fn(n, |j, k| lagrange_basis(&xi, k, z[j] as f64).unwrap());
        let u: Vec<f64> = sites.iter().map(|&v| v as f64).collect();
        let zf: Vec<f64> = z.iter().map(|&v| v as f64).collect();
        let ratio = vandermonde(&zf) / vandermonde(&u);
        let det = m.determinant();
        assert!(
            (det - ratio).abs() <= 1e-10 * ratio.abs().max(1e-300) || (ratio == 0.0 && det.abs() < 1e-10),
            "{sites:?} {z:?}: {det} vs {ratio}"
        );
    }
}

#[test]
fn vandermonde_matches_monomial_determinant() {
    let u = [-3.0f64, -1.0, 0.0, 2.0, 7.0];
    let m = Matrix::from_fn(5, |j, k| u[j].powi(k as i32));
    let v = vandermonde(&u);
    assert!((m.determinant() - v).abs() < 1e-12 * v.abs());
}

#[test]
fn lagrange_basis_tends_to_sinc() {
    let a = LatticeSpec::new(2).unwrap();
    let mut previous = f64::INFINITY;
    for l in [10, 20, 40, 80] {
        let xi = FiniteConfiguration::lattice_window(a, l).unwrap();
        let k = xi.index_of(2).unwrap();
        let err = (-5..=5)
            .map(|z| (lagrange_basis(&xi, k, z as f64 + 0.5).unwrap() - lattice_basis(a, 1, z as f64 + 0.5)).abs())
            .fold(0.0, f64::max);
        assert!(err < previous, "L={l}: {err} >= {previous}");
        previous = err;
    }
}

#[test]
fn discrete_martingale_mean() {
    let xi = FiniteConfiguration::new(vec![-2, 0, 3]).unwrap();
    for &t in &[0.5, 1.5] {
        let r = window(t);
        for (j, &u) in xi.sites().iter().enumerate() {
            for k in 0..xi.len() {
                let mean: f64 = (u - r..=u + r)
                    .map(|y| {
                        transition_probability(t, u, y).unwrap() * discrete_martingale(&xi, k, t, y, DEFAULT_TAIL_EPS).unwrap()
                    })
                    .sum();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((mean - want).abs() < 1e-8, "t={t} j={j} k={k}: {mean}");
            }
        }
    }
}

#[test]
fn lattice_martingale_mean() {
    let a = LatticeSpec::new(2).unwrap();
    let t = 0.8;
    let r = window(t);
    for j in -1i64..=1 {
        for k in -1i64..=1 {
            let u = 2 * j;
            let mean: f64 = (u - r..=u + r)
                .map(|y| transition_probability(t, u, y).unwrap() * lattice_martingale(a, k, t, y, 1e-13).unwrap())
                .sum();
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((mean - want).abs() < 1e-8, "j={j} k={k}: {mean}");
        }
    }
}

proptest! {
    #[test]
    fn polynomial_transform_reproduces_martingale(n in 0usize..=8, t in 0.0f64..3.0, x in -10i64..10) {
        let direct = ncrw::martingale::s_transform(&ncrw::martingale::Polynomial::monomial(n), t, x, DEFAULT_TAIL_EPS).unwrap();
        let poly = martingale_polynomial(n, t, x as f64).unwrap();
        prop_assert!((direct - poly).abs() <= 1e-9 * poly.abs().max(1.0));
    }

    #[test]
    fn martingale_at_time_zero_is_kronecker(sites in proptest::collection::btree_set(-20i64..20, 1..6)) {
        let sites: Vec<i64> = sites.into_iter().collect();
        let xi = FiniteConfiguration::new(sites.clone()).unwrap();
        for (j, &u) in sites.iter().enumerate() {
            for k in 0..sites.len() {
                let m = discrete_martingale(&xi, k, 0.0, u, DEFAULT_TAIL_EPS).unwrap();
                prop_assert_eq!(m, if j == k { 1.0 } else { 0.0 });
            }
        }
    }
}
