//! Correlation kernels of the noncolliding walk.
//!
//! Three initial conditions are supported: a finite configuration, the
//! equidistant lattice `aZ`, and the stationary process at density `ρ`.
//! Kernels are only defined up to a factor `f(t, y)/f(s, x)`; the canonical
//! [`Gauge::Probability`] builds every term from genuine transition
//! probabilities, while [`Gauge::Paper`] multiplies it by `e^{s-t}` and gives
//! the compact Bessel-product form.

use std::f64::consts::PI;

use crate::bessel::{scaled_bessel_i, tail_radius};
use crate::error::{ensure_time, Error, Result};
use crate::martingale::{lattice_martingale, s_transform, FiniteConfiguration, LagrangeBasis, LatticeSpec};
use crate::quadrature;
use crate::Tolerances;

/// Above this value of `t(1 - cos(π/a))` the lattice kernel switches from the
/// direct `j`-sum (which cancels terms of that exponential size) to the
/// Fourier form.
pub const LATTICE_DIRECT_MAX_EXPONENT: f64 = 6.0;

/// A point `(t, x)` of `[0, ∞) × Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: i64,
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: i64) -> Result<Self> {
        ensure_time("SpaceTimePoint", t)?;
        Ok(Self { t, x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Gauge {
    /// `Σ_j p(s,x|u_j) ℳ^{u_j}(t,y) - 1(s>t) p(s-t,x|y)`.
    #[default]
    Probability,
    /// The probability-gauge kernel times `e^{s-t}`.
    Paper,
}

impl Gauge {
    /// Factor converting a probability-gauge value into this gauge.
    pub fn factor(self, s: f64, t: f64) -> f64 {
        match self {
            Gauge::Probability => 1.0,
            Gauge::Paper => (s - t).exp(),
        }
    }
}

impl std::str::FromStr for Gauge {
    type Err = Error;

    /// `prob` or `paper`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prob" => Ok(Gauge::Probability),
            "paper" => Ok(Gauge::Paper),
            _ => Err(Error::invalid("Gauge", format!("expected prob or paper, got {s:?}"))),
        }
    }
}

impl std::fmt::Display for Gauge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Gauge::Probability => "prob",
            Gauge::Paper => "paper",
        })
    }
}

/// Particle density of the stationary process, `0 < ρ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density(f64);

impl Density {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid("Density", format!("density must lie in (0, 1), got {rho}")));
        }
        Ok(Self(rho))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelVariant {
    Finite(FiniteConfiguration),
    Lattice(LatticeSpec),
    Stationary(Density),
}

impl std::str::FromStr for KernelVariant {
    type Err = Error;

    /// `finite:u1,u2,...`, `lattice:a` or `stationary:rho`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::invalid("KernelVariant", msg);
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("expected finite:u1,u2,... | lattice:a | stationary:rho, got {s:?}")))?;
        match kind {
            "finite" => {
                let sites = rest
                    .split(',')
                    .map(|v| v.trim().parse::<i64>().map_err(|e| bad(format!("site {v:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(KernelVariant::Finite(FiniteConfiguration::new(sites)?))
            }
            "lattice" => {
                let a = rest.trim().parse::<i64>().map_err(|e| bad(format!("spacing {rest:?}: {e}")))?;
                Ok(KernelVariant::Lattice(LatticeSpec::new(a)?))
            }
            "stationary" => {
                let rho = rest.trim().parse::<f64>().map_err(|e| bad(format!("density {rest:?}: {e}")))?;
                Ok(KernelVariant::Stationary(Density::new(rho)?))
            }
            _ => Err(bad(format!("unknown kernel kind {kind:?}"))),
        }
    }
}

/// Which kernel to evaluate, and in which gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    pub gauge: Gauge,
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, gauge: Gauge) -> Self {
        Self { variant, gauge }
    }

    pub fn eval(&self, p: SpaceTimePoint, q: SpaceTimePoint, tol: &Tolerances) -> Result<f64> {
        match &self.variant {
            KernelVariant::Finite(xi) => kernel_finite(xi, p, q, self.gauge, tol),
            KernelVariant::Lattice(a) => kernel_lattice(*a, p, q, self.gauge, tol),
            KernelVariant::Stationary(rho) => {
                ensure_time("kernel_stationary", p.t)?;
                ensure_time("kernel_stationary", q.t)?;
                kernel_stationary_gauged(*rho, q.t - p.t, q.x - p.x, self.gauge, tol)
            }
        }
    }

    /// Binds tolerances so the spec can be used wherever a [`Kernel`] is expected.
    pub fn with_tolerances(&self, tol: Tolerances) -> SpecKernel<'_> {
        SpecKernel { spec: self, tol }
    }
}

/// Anything that evaluates `K(p, q)`.
pub trait Kernel {
    fn eval(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> Result<f64>;
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> Result<f64> {
        (**self).eval(p, q)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpecKernel<'a> {
    pub spec: &'a KernelSpec,
    pub tol: Tolerances,
}

impl Kernel for SpecKernel<'_> {
    fn eval(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> Result<f64> {
        self.spec.eval(p, q, &self.tol)
    }
}

fn check_points(operation: &'static str, p: SpaceTimePoint, q: SpaceTimePoint) -> Result<()> {
    ensure_time(operation, p.t)?;
    ensure_time(operation, q.t)
}

/// `-1(s>t) p(s-t, x|y)`, the backward-propagation correction.
fn backward_term(p: SpaceTimePoint, q: SpaceTimePoint) -> Result<f64> {
    if p.t > q.t {
        Ok(-scaled_bessel_i(p.x.abs_diff(q.x), p.t - q.t)?)
    } else {
        Ok(0.0)
    }
}

/// Kernel for a finite initial configuration `ξ`.
///
/// Evaluated as the single combined sum `Σ_j p(s,x|u_j) 𝒮[Φ^{u_j}](t,y)`.
pub fn kernel_finite(
    xi: &FiniteConfiguration,
    p: SpaceTimePoint,
    q: SpaceTimePoint,
    gauge: Gauge,
    tol: &Tolerances,
) -> Result<f64> {
    check_points("kernel_finite", p, q)?;
    let mut total = 0.0;
    for (j, &u) in xi.sites().iter().enumerate() {
        let weight = scaled_bessel_i(p.x.abs_diff(u), p.t)?;
        if weight == 0.0 {
            continue;
        }
        let basis = LagrangeBasis::new(xi, j)?;
        total += weight * s_transform(&basis, q.t, q.x, tol.tail)?;
    }
    total += backward_term(p, q)?;
    Ok(total * gauge.factor(p.t, q.t))
}

/// Kernel for the equidistant configuration `aZ`.
///
/// Uses the direct sum `Σ_j p(s,x|aj) ℳ̂^{aj}(t,y)` while its cancellation is
/// mild and the Fourier form otherwise; see [`kernel_lattice_direct`] and
/// [`kernel_lattice_spectral`].
pub fn kernel_lattice(
    a: LatticeSpec,
    p: SpaceTimePoint,
    q: SpaceTimePoint,
    gauge: Gauge,
    tol: &Tolerances,
) -> Result<f64> {
    let exponent = q.t * (1.0 - (PI / a.spacing() as f64).cos());
    if exponent <= LATTICE_DIRECT_MAX_EXPONENT {
        kernel_lattice_direct(a, p, q, gauge, tol)
    } else {
        kernel_lattice_spectral(a, p, q, gauge, tol)
    }
}

/// `Σ_j p(s,x|aj) ℳ̂^{aj}(t,y) - 1(s>t) p(s-t,x|y)`, with the `j`-sum
/// truncated where `p(s, x|aj)` drops below the tail tolerance.
pub fn kernel_lattice_direct(
    a: LatticeSpec,
    p: SpaceTimePoint,
    q: SpaceTimePoint,
    gauge: Gauge,
    tol: &Tolerances,
) -> Result<f64> {
    check_points("kernel_lattice", p, q)?;
    let spacing = a.spacing();
    let radius = tail_radius(p.t, tol.tail)? as i64;
    let j_lo = (p.x - radius).div_euclid(spacing) + i64::from((p.x - radius).rem_euclid(spacing) != 0);
    let j_hi = (p.x + radius).div_euclid(spacing);
    let mut total = 0.0;
    for j in j_lo..=j_hi {
        let weight = scaled_bessel_i(p.x.abs_diff(spacing * j), p.t)?;
        if weight == 0.0 {
            continue;
        }
        total += weight * lattice_martingale(a, j, q.t, q.x, tol.quad)?;
    }
    total += backward_term(p, q)?;
    Ok(total * gauge.factor(p.t, q.t))
}

/// Lattice kernel after collapsing the `j`-sum with the Dirac comb: the sum
/// of the stationary part [`stationary_part`] and the remainder
/// [`remainder_part`], minus the backward term.
pub fn kernel_lattice_spectral(
    a: LatticeSpec,
    p: SpaceTimePoint,
    q: SpaceTimePoint,
    gauge: Gauge,
    tol: &Tolerances,
) -> Result<f64> {
    check_points("kernel_lattice", p, q)?;
    let g = stationary_part(a, q.t - p.t, q.x - p.x, tol)?;
    let r = remainder_part(a, p, q, tol)?;
    Ok((g + r + backward_term(p, q)?) * gauge.factor(p.t, q.t))
}

/// `𝒢(dt, dx) = (1/2πa) ∫_{-π}^{π} e^{iλ dx/a + dt(1 - cos(λ/a))} dλ`.
pub fn stationary_part(a: LatticeSpec, dt: f64, dx: i64, tol: &Tolerances) -> Result<f64> {
    let af = a.spacing() as f64;
    let n = dx as f64;
    // Even integrand: integrate over [0, π] and double.
    let v = quadrature::integrate(0.0, PI, tol.quad, |l| {
        (l * n / af).cos() * (dt * (1.0 - (l / af).cos())).exp()
    })?;
    Ok(v / (PI * af))
}

/// Range of `θ` for the comb shift `m`: `[2πm - π, 2πm + π] ∩ [-aπ, aπ]`.
pub(crate) fn shift_interval(a: i64, m: i64) -> Option<(f64, f64)> {
    let lo = (2.0 * m as f64 - 1.0) * PI;
    let hi = ((2.0 * m as f64 + 1.0) * PI).min(a as f64 * PI);
    (hi > lo).then_some((lo, hi))
}

/// Remainder `R(s,x;t,y)`: the contribution of the nonzero comb shifts,
/// i.e. `θ` in the annulus `π < |θ| <= aπ` paired with `λ = 2πm - θ`.
///
/// The `±m` pieces are complex conjugates, so only `m >= 1` is integrated.
pub fn remainder_part(a: LatticeSpec, p: SpaceTimePoint, q: SpaceTimePoint, tol: &Tolerances) -> Result<f64> {
    let spacing = a.spacing();
    let af = spacing as f64;
    let (s, x, t, y) = (p.t, p.x as f64, q.t, q.x as f64);
    let mut total = 0.0;
    for m in 1.. {
        let Some((lo, hi)) = shift_interval(spacing, m) else { break };
        let shift = 2.0 * PI * m as f64;
        total += quadrature::integrate(lo, hi, tol.quad, |theta| {
            let lambda = shift - theta;
            let phase = (theta * x + lambda * y) / af;
            let exponent = -s * (1.0 - (theta / af).cos()) + t * (1.0 - (lambda / af).cos());
            phase.cos() * exponent.exp()
        })?;
    }
    Ok(total / (PI * af))
}

/// Equal-time sine kernel `sin(ρπn)/(πn)`, equal to `ρ` at `n = 0`.
pub fn sine_kernel(rho: Density, n: i64) -> f64 {
    if n == 0 {
        rho.value()
    } else {
        let nf = n as f64;
        (rho.value() * PI * nf).sin() / (PI * nf)
    }
}

/// Stationary kernel in its compact form:
/// `∫_0^ρ cos(uπ dx) e^{-dt cos uπ} du` for `dt > 0`, the sine kernel for
/// `dt = 0`, and `-∫_ρ^1 cos(uπ dx) e^{-dt cos uπ} du` for `dt < 0`, where
/// `dt = t - s` and `dx = y - x`. This is the [`Gauge::Paper`] form.
pub fn kernel_stationary(rho: Density, dt: f64, dx: i64, tol: &Tolerances) -> Result<f64> {
    kernel_stationary_gauged(rho, dt, dx, Gauge::Paper, tol)
}

/// Stationary kernel in either gauge. In [`Gauge::Probability`] the
/// integrand carries `e^{dt(1 - cos uπ)}`, which stays bounded for `dt < 0`.
pub fn kernel_stationary_gauged(rho: Density, dt: f64, dx: i64, gauge: Gauge, tol: &Tolerances) -> Result<f64> {
    if !dt.is_finite() {
        return Err(Error::invalid("kernel_stationary", format!("time lag must be finite, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(sine_kernel(rho, dx));
    }
    let n = dx as f64;
    let shift = match gauge {
        Gauge::Probability => dt,
        Gauge::Paper => 0.0,
    };
    let integrand = |u: f64| (u * PI * n).cos() * (shift - dt * (u * PI).cos()).exp();
    let r = rho.value();
    if dt > 0.0 {
        quadrature::integrate(0.0, r, tol.quad, integrand)
    } else {
        quadrature::integrate(r, 1.0, tol.quad, integrand).map(|v| -v)
    }
}

/// `(p, q) ↦ f(q)/f(p) · K(p, q)` for a strictly positive weight `f`.
#[derive(Debug, Clone, Copy)]
pub struct GaugeTransform<K, F> {
    pub inner: K,
    pub weight: F,
}

impl<K: Kernel, F: Fn(SpaceTimePoint) -> f64> Kernel for GaugeTransform<K, F> {
    fn eval(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> Result<f64> {
        let fp = (self.weight)(p);
        let fq = (self.weight)(q);
        if !(fp > 0.0 && fq > 0.0 && fp.is_finite() && fq.is_finite()) {
            return Err(Error::invalid(
                "gauge_transform",
                format!("weight must be positive and finite, got {fp} and {fq}"),
            ));
        }
        Ok(fq / fp * self.inner.eval(p, q)?)
    }
}

pub fn gauge_transform<K: Kernel, F: Fn(SpaceTimePoint) -> f64>(inner: K, weight: F) -> GaugeTransform<K, F> {
    GaugeTransform { inner, weight }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::signed_bessel_i;
    use crate::martingale::{discrete_martingale_by_expansion, lagrange_basis, MartingalePolynomials};

    #[test]
    fn parses_spec_strings() {
        assert_eq!(
            "finite:-1, 2".parse::<KernelVariant>().unwrap(),
            KernelVariant::Finite(FiniteConfiguration::new(vec![-1, 2]).unwrap())
        );
        assert_eq!("lattice:3".parse::<KernelVariant>().unwrap(), KernelVariant::Lattice(LatticeSpec::new(3).unwrap()));
        assert_eq!(
            "stationary:0.25".parse::<KernelVariant>().unwrap(),
            KernelVariant::Stationary(Density::new(0.25).unwrap())
        );
        for bad in ["finite:2,0", "finite:", "lattice:0", "stationary:1", "sine:0.5", "lattice"] {
            assert!(bad.parse::<KernelVariant>().is_err(), "{bad}");
        }
        assert_eq!("paper".parse::<Gauge>().unwrap(), Gauge::Paper);
        assert_eq!(Gauge::Probability.to_string(), "prob");
        assert!("Paper".parse::<Gauge>().is_err());
    }

    fn pt(t: f64, x: i64) -> SpaceTimePoint {
        SpaceTimePoint::new(t, x).unwrap()
    }

    fn cfg(s: &[i64]) -> FiniteConfiguration {
        FiniteConfiguration::new(s.to_vec()).unwrap()
    }

    /// The two-piece Bessel-product form with unscaled `I_n`, summed over
    /// `w` in a fixed wide window.
    fn split_form(xi: &FiniteConfiguration, p: SpaceTimePoint, q: SpaceTimePoint) -> f64 {
        let i = |n: i64, z: f64| signed_bessel_i(n.unsigned_abs(), z).unwrap();
        let mut first = 0.0;
        let mut second = 0.0;
        for (j, &u) in xi.sites().iter().enumerate() {
            first += i(p.x - u, p.t) * i(q.x - u, -q.t);
            for w in q.x - 60..=q.x + 60 {
                if xi.contains(w) {
                    continue;
                }
                second += i(p.x - u, p.t) * i(q.x - w, -q.t) * lagrange_basis(xi, j, w as f64).unwrap();
            }
        }
        let back = if p.t > q.t { i(p.x - q.x, p.t - q.t) } else { 0.0 };
        first + second - back
    }

    #[test]
    fn initial_collapse() {
        let tol = Tolerances::default();
        let xi = cfg(&[0, 2]);
        for x in -3..5 {
            for y in -3..5 {
                let k = kernel_finite(&xi, pt(0.0, x), pt(0.0, y), Gauge::Probability, &tol).unwrap();
                if x == y {
                    assert_eq!(k, if xi.contains(x) { 1.0 } else { 0.0 });
                } else if !xi.contains(x) {
                    assert_eq!(k, 0.0);
                }
            }
        }
    }

    #[test]
    fn combined_sum_matches_expansion_route() {
        let tol = Tolerances::default();
        let xi = cfg(&[0, 2]);
        let table = MartingalePolynomials::shared();
        for x in -2..4 {
            for y in -2..4 {
                let k = kernel_finite(&xi, pt(1.0, x), pt(1.0, y), Gauge::Probability, &tol).unwrap();
                let mut oracle = 0.0;
                for (j, &u) in xi.sites().iter().enumerate() {
                    oracle += scaled_bessel_i(x.abs_diff(u), 1.0).unwrap()
                        * discrete_martingale_by_expansion(table, &xi, j, 1.0, y).unwrap();
                }
                assert!((k - oracle).abs() < 1e-9, "({x},{y}): {k} vs {oracle}");
            }
        }
    }

    #[test]
    fn paper_gauge_matches_split_form() {
        let tol = Tolerances::default();
        let xi = cfg(&[-2, 0, 3]);
        for &(s, t) in &[(0.5, 1.0), (1.0, 0.5), (0.7, 0.7), (1.5, 0.2)] {
            for x in -3..4 {
                for y in -3..4 {
                    let k = kernel_finite(&xi, pt(s, x), pt(t, y), Gauge::Paper, &tol).unwrap();
                    let oracle = split_form(&xi, pt(s, x), pt(t, y));
                    assert!((k - oracle).abs() < 1e-10 * oracle.abs().max(1.0), "{s},{x};{t},{y}: {k} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn gauges_differ_by_exponential() {
        let tol = Tolerances::default();
        let xi = cfg(&[0, 2]);
        let p = pt(0.3, 1);
        let q = pt(1.1, 0);
        let prob = kernel_finite(&xi, p, q, Gauge::Probability, &tol).unwrap();
        let paper = kernel_finite(&xi, p, q, Gauge::Paper, &tol).unwrap();
        assert!((paper - prob * (0.3f64 - 1.1).exp()).abs() < 1e-15);
    }

    #[test]
    fn lattice_initial_values() {
        let tol = Tolerances::default();
        let a = LatticeSpec::new(2).unwrap();
        for x in -4..5 {
            let k = kernel_lattice(a, pt(0.0, x), pt(0.0, x), Gauge::Probability, &tol).unwrap();
            let want = if x % 2 == 0 { 1.0 } else { 0.0 };
            assert!((k - want).abs() < 1e-13, "{x}: {k}");
        }
    }

    #[test]
    fn lattice_routes_agree() {
        let tol = Tolerances::default();
        for a in [2, 3] {
            let a = LatticeSpec::new(a).unwrap();
            for &(s, t) in &[(0.5, 0.5), (0.2, 1.3), (1.4, 0.6), (2.0, 2.0)] {
                for x in -2..3 {
                    for y in -2..3 {
                        let d = kernel_lattice_direct(a, pt(s, x), pt(t, y), Gauge::Probability, &tol).unwrap();
                        let f = kernel_lattice_spectral(a, pt(s, x), pt(t, y), Gauge::Probability, &tol).unwrap();
                        assert!((d - f).abs() < 1e-10, "a={a:?} {s},{x};{t},{y}: {d} vs {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn stationary_examples() {
        let tol = Tolerances::default();
        let half = Density::new(0.5).unwrap();
        assert_eq!(kernel_stationary(half, 0.0, 0, &tol).unwrap(), 0.5);
        assert_eq!(kernel_stationary(half, 0.0, 1, &tol).unwrap(), 1.0 / PI);
        assert!(sine_kernel(half, 2).abs() < 1e-16);
        let third = Density::new(1.0 / 3.0).unwrap();
        assert_eq!(sine_kernel(third, 1), (PI / 3.0).sin() / PI);
        assert!(Density::new(1.0).is_err());
        assert!(Density::new(0.0).is_err());
    }

    #[test]
    fn stationary_lambda_route() {
        let tol = Tolerances::default();
        let half = Density::new(0.5).unwrap();
        // (1/2π)∫_{-ρπ}^{ρπ} e^{iλ dx + dt(1 - cos λ)} dλ · e^{-dt}
        let (dt, dx) = (0.7, 2);
        let lam = quadrature::integrate(0.0, 0.5 * PI, 1e-14, |l| {
            (l * dx as f64).cos() * (dt * (1.0 - l.cos())).exp()
        })
        .unwrap()
            / PI
            * (-dt).exp();
        let k = kernel_stationary(half, dt, dx, &tol).unwrap();
        assert!((k - lam).abs() < 1e-10);
    }

    #[test]
    fn gauge_transform_examples() {
        let tol = Tolerances::default();
        let spec = KernelSpec::new(KernelVariant::Finite(cfg(&[0, 2])), Gauge::Probability);
        let paper = KernelSpec::new(KernelVariant::Finite(cfg(&[0, 2])), Gauge::Paper);
        let k = spec.with_tolerances(tol);
        let identity = gauge_transform(k, |_| 1.0);
        let to_paper = gauge_transform(k, |p: SpaceTimePoint| (-p.t).exp());
        let (p, q) = (pt(0.4, 1), pt(1.2, 2));
        assert_eq!(identity.eval(p, q).unwrap(), k.eval(p, q).unwrap());
        let lhs = to_paper.eval(p, q).unwrap();
        let rhs = paper.eval(p, q, &tol).unwrap();
        assert!((lhs - rhs).abs() < 1e-15 * rhs.abs().max(1.0));
        let bad = gauge_transform(k, |_| -1.0);
        assert!(bad.eval(p, q).is_err());
    }
}
