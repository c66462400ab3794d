//! Martingales of the continuous-time walk: the Esscher weight, the
//! fundamental martingale polynomials, the signed Bessel-weighted lattice
//! transform that maps polynomials to martingales, Lagrange basis polynomials
//! on a configuration and their sinc limit on an equidistant lattice.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_rational::Ratio;

use crate::bessel::{scaled_bessel_i_seq, tail_radius, MAX_RADIUS};
use crate::error::{ensure_finite, ensure_time, Error, Result};
use crate::quadrature;

/// Highest polynomial degree in the shared coefficient table.
pub const DEFAULT_MAX_DEGREE: usize = 12;

/// Largest degree whose rational coefficients fit in `i128`.
const MAX_EXACT_DEGREE: usize = 24;

/// Sinc arguments below this use a truncated Taylor series.
const SINC_SERIES_BELOW: f64 = 1e-4;

/// Initial configuration without multiple points: `u_1 < u_2 < … < u_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteConfiguration {
    sites: Vec<i64>,
}

impl FiniteConfiguration {
    pub fn new(sites: Vec<i64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("FiniteConfiguration", "need at least one site"));
        }
        if let Some(w) = sites.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "FiniteConfiguration",
                format!("sites must be strictly increasing, found {} then {}", w[0], w[1]),
            ));
        }
        Ok(Self { sites })
    }

    /// `aZ ∩ [-L, L]`.
    pub fn lattice_window(spacing: LatticeSpec, half_width: i64) -> Result<Self> {
        let a = spacing.spacing();
        let k_max = half_width.div_euclid(a);
        Self::new((-k_max..=k_max).map(|k| a * k).collect())
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: i64) -> bool {
        self.sites.binary_search(&x).is_ok()
    }

    /// Index of `x` among the sites, if occupied.
    pub fn index_of(&self, x: i64) -> Option<usize> {
        self.sites.binary_search(&x).ok()
    }

    pub fn min(&self) -> i64 {
        self.sites[0]
    }

    pub fn max(&self) -> i64 {
        self.sites[self.sites.len() - 1]
    }
}

/// Equidistant spacing `a >= 2` of the infinite configuration `aZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec(i64);

impl LatticeSpec {
    pub fn new(a: i64) -> Result<Self> {
        if a < 2 {
            return Err(Error::invalid(
                "LatticeSpec",
                format!("spacing must be >= 2, got {a} (a = 1 fills Z and nothing moves)"),
            ));
        }
        Ok(Self(a))
    }

    pub fn spacing(self) -> i64 {
        self.0
    }

    /// Particle density `1/a`.
    pub fn density(self) -> f64 {
        1.0 / self.0 as f64
    }
}

/// `G_α(t, x) = exp(αx - t(cosh α - 1))`.
pub fn esscher_weight(alpha: f64, t: f64, x: f64) -> Result<f64> {
    ensure_finite("esscher_weight", "alpha", alpha)?;
    ensure_time("esscher_weight", t)?;
    Ok((alpha * x - t * (alpha.cosh() - 1.0)).exp())
}

/// Coefficient table for the martingale polynomials
/// `m_n(t, x) = Σ_j C(n, j) x^j μ_{n-j}(t)` where `μ_k(t) = m_k(t, 0)` is
/// `k!` times the `α^k` Taylor coefficient of `exp(-t(cosh α - 1))`.
#[derive(Debug, Clone)]
pub struct MartingalePolynomials {
    /// `moments[k][p]` is the coefficient of `t^p` in `μ_k(t)`.
    moments: Vec<Vec<f64>>,
    binomial: Vec<Vec<f64>>,
}

impl MartingalePolynomials {
    /// Builds the table by exact rational expansion up to `max_degree`.
    pub fn new(max_degree: usize) -> Result<Self> {
        if max_degree > MAX_EXACT_DEGREE {
            return Err(Error::TooLarge {
                operation: "MartingalePolynomials::new",
                size: max_degree,
                limit: MAX_EXACT_DEGREE,
            });
        }
        type Q = Ratio<i128>;
        let d = max_degree;
        let zero = Q::from_integer(0);
        let one = Q::from_integer(1);

        // cosh α - 1 truncated at α^d.
        let mut fact = vec![one; d + 1];
        for k in 1..=d {
            fact[k] = fact[k - 1] * Q::from_integer(k as i128);
        }
        let mut cosh_m1 = vec![zero; d + 1];
        for k in (2..=d).step_by(2) {
            cosh_m1[k] = one / fact[k];
        }

        // moments[k][p] = k! (-1)^p / p! [α^k] (cosh α - 1)^p
        let mut moments_q = vec![vec![zero; d / 2 + 1]; d + 1];
        let mut power = vec![zero; d + 1];
        power[0] = one;
        for p in 0..=d / 2 {
            let sign = if p % 2 == 0 { one } else { -one };
            for k in 0..=d {
                if power[k] != zero {
                    moments_q[k][p] = sign * fact[k] * power[k] / fact[p];
                }
            }
            let mut next = vec![zero; d + 1];
            for (i, &pi) in power.iter().enumerate() {
                if pi == zero {
                    continue;
                }
                for (j, &cj) in cosh_m1.iter().enumerate().take(d + 1 - i) {
                    if cj != zero {
                        next[i + j] += pi * cj;
                    }
                }
            }
            power = next;
        }

        let to_f64 = |q: &Q| *q.numer() as f64 / *q.denom() as f64;
        let moments = moments_q
            .iter()
            .map(|row| row.iter().map(to_f64).collect())
            .collect();
        let mut binomial = vec![vec![0.0; d + 1]; d + 1];
        for n in 0..=d {
            binomial[n][0] = 1.0;
            for j in 1..=n {
                binomial[n][j] = binomial[n - 1][j - 1] + if j < n { binomial[n - 1][j] } else { 0.0 };
            }
        }
        Ok(Self { moments, binomial })
    }

    /// Shared table of degree [`DEFAULT_MAX_DEGREE`].
    pub fn shared() -> &'static Self {
        static TABLE: OnceLock<MartingalePolynomials> = OnceLock::new();
        TABLE.get_or_init(|| Self::new(DEFAULT_MAX_DEGREE).expect("default degree is in range"))
    }

    pub fn max_degree(&self) -> usize {
        self.moments.len() - 1
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.max_degree() {
            return Err(Error::TooLarge {
                operation: "martingale_polynomial",
                size: n,
                limit: self.max_degree(),
            });
        }
        Ok(())
    }

    /// `μ_k(t) = m_k(t, 0)`; vanishes for odd `k`.
    pub fn moment(&self, k: usize, t: f64) -> Result<f64> {
        self.check_degree(k)?;
        Ok(horner(&self.moments[k], t))
    }

    /// Coefficients `c_n^{(j)}(t)`, `j = 0..=n`, of `m_n(t, ·)` in powers of `x`.
    pub fn coefficients(&self, n: usize, t: f64) -> Result<Vec<f64>> {
        self.check_degree(n)?;
        Ok((0..=n)
            .map(|j| self.binomial[n][j] * horner(&self.moments[n - j], t))
            .collect())
    }

    /// `m_n(t, x)`. Any real `t` is accepted since the coefficients are
    /// polynomials; negative `t` gives the majorant series used in bounds.
    pub fn eval(&self, n: usize, t: f64, x: f64) -> Result<f64> {
        let c = self.coefficients(n, t)?;
        Ok(horner(&c, x))
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `m_n(t, x)` from the shared table; `n` at most [`DEFAULT_MAX_DEGREE`].
pub fn martingale_polynomial(n: usize, t: f64, x: f64) -> Result<f64> {
    ensure_time("martingale_polynomial", t)?;
    ensure_finite("martingale_polynomial", "x", x)?;
    MartingalePolynomials::shared().eval(n, t, x)
}

/// A function on `Z` together with an outward growth envelope, so the
/// signed Bessel-weighted sums in [`s_transform`] can be truncated safely.
pub trait LatticeFunction {
    fn value(&self, w: i64) -> f64;

    /// For the two sites `center ± r`, returns `(bound, ratio)` such that
    /// `|f(center ± r')| <= bound * ratio^(r' - r)` for every `r' >= r`, with
    /// `ratio` itself non-increasing in `r`. `None` while no such bound is
    /// available yet (the sum then keeps going).
    fn envelope(&self, center: i64, r: u64) -> Option<(f64, f64)>;
}

/// Polynomial in the monomial basis, `Σ_k c_k w^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

impl LatticeFunction for Polynomial {
    fn value(&self, w: i64) -> f64 {
        horner(&self.coeffs, w as f64)
    }

    fn envelope(&self, center: i64, r: u64) -> Option<(f64, f64)> {
        let z = (center.unsigned_abs() + r).max(1) as f64;
        let bound = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * z + c.abs());
        let ratio = (1.0 + 1.0 / z).powi(self.degree() as i32);
        Some((bound, ratio))
    }
}

/// `w ↦ e^{α(w - center)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialTilt {
    pub alpha: f64,
    pub center: i64,
}

impl LatticeFunction for ExponentialTilt {
    fn value(&self, w: i64) -> f64 {
        (self.alpha * (w - self.center) as f64).exp()
    }

    fn envelope(&self, center: i64, r: u64) -> Option<(f64, f64)> {
        let reach = (center - self.center).unsigned_abs() + r;
        Some(((self.alpha.abs() * reach as f64).exp(), self.alpha.abs().exp()))
    }
}

/// Lagrange basis polynomial `Φ_ξ^{u_k}` of a finite configuration.
#[derive(Debug, Clone, Copy)]
pub struct LagrangeBasis<'a> {
    config: &'a FiniteConfiguration,
    k: usize,
}

impl<'a> LagrangeBasis<'a> {
    pub fn new(config: &'a FiniteConfiguration, k: usize) -> Result<Self> {
        if k >= config.len() {
            return Err(Error::invalid(
                "lagrange_basis",
                format!("index {k} out of range for {} sites", config.len()),
            ));
        }
        Ok(Self { config, k })
    }

    pub fn eval(&self, z: f64) -> f64 {
        let sites = self.config.sites();
        let uk = sites[self.k] as f64;
        sites
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != self.k)
            .map(|(_, &uj)| (z - uj as f64) / (uk - uj as f64))
            .product()
    }

    /// Taylor coefficients of `h ↦ Φ(y + h)`, lowest order first.
    pub fn taylor_at(&self, y: f64) -> Vec<f64> {
        let sites = self.config.sites();
        let uk = sites[self.k] as f64;
        let mut poly = vec![1.0];
        for (j, &uj) in sites.iter().enumerate() {
            if j == self.k {
                continue;
            }
            let scale = 1.0 / (uk - uj as f64);
            let shift = (y - uj as f64) * scale;
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c * shift;
                next[i + 1] += c * scale;
            }
            poly = next;
        }
        poly
    }
}

impl LatticeFunction for LagrangeBasis<'_> {
    fn value(&self, w: i64) -> f64 {
        self.eval(w as f64)
    }

    fn envelope(&self, center: i64, r: u64) -> Option<(f64, f64)> {
        let right = center + r as i64;
        let left = center - r as i64;
        let gap_right = right - self.config.max();
        let gap_left = self.config.min() - left;
        if gap_right < 1 || gap_left < 1 {
            return None;
        }
        // Outside the hull |Φ| grows monotonically, with one-step ratio at most
        // (1 + 1/distance)^{N-1}.
        let bound = self.eval(right as f64).abs().max(self.eval(left as f64).abs());
        let gap = gap_right.min(gap_left) as f64;
        Some((bound, (1.0 + 1.0 / gap).powi(self.config.len() as i32 - 1)))
    }
}

/// `Φ_ξ^{u_k}(z) = Π_{j≠k} (z - u_j)/(u_k - u_j)`, with `k` zero-based.
pub fn lagrange_basis(config: &FiniteConfiguration, k: usize, z: f64) -> Result<f64> {
    Ok(LagrangeBasis::new(config, k)?.eval(z))
}

/// `e^t Σ_w I_{|w-x|}(-t) f(w)`.
///
/// Written as `e^{2t} Σ_r (-1)^r ĩ_r(t) [f(x+r) + f(x-r)]` and truncated once
/// the envelope of the remaining terms drops below `eps`. The alternating
/// weights cancel down to `O(1)` from terms of size up to `e^{2t}`, so absolute
/// accuracy degrades like `ε_mach e^{2t}` for large `t`.
pub fn s_transform<F: LatticeFunction + ?Sized>(f: &F, t: f64, x: i64, eps: f64) -> Result<f64> {
    ensure_time("s_transform", t)?;
    if t == 0.0 {
        return Ok(f.value(x));
    }
    let gauge = (2.0 * t).exp();
    let mut cap = (tail_radius(t, eps.min(1e-16))? as usize + 32).next_power_of_two();
    let mut weights = scaled_bessel_i_seq(cap + 1, t)?;
    let mut sum = Neumaier::default();
    let mut r = 0u64;
    loop {
        if r as usize >= cap {
            if cap as u64 >= MAX_RADIUS {
                return Err(Error::NonConvergence {
                    operation: "s_transform",
                    parameter: "radius",
                    limit: cap as f64,
                });
            }
            cap *= 2;
            weights = scaled_bessel_i_seq(cap + 1, t)?;
        }
        let wr = weights[r as usize];
        let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
        let pair = if r == 0 {
            f.value(x)
        } else {
            f.value(x + r as i64) + f.value(x - r as i64)
        };
        sum.add(sign * wr * pair);

        if let Some((bound, growth)) = f.envelope(x, r) {
            let next = weights[r as usize + 1];
            let bessel_ratio = if wr > 0.0 { next / wr } else { 0.0 };
            let q = bessel_ratio * growth;
            if q <= 0.5 && 2.0 * gauge * wr * bound < eps {
                break;
            }
        }
        r += 1;
    }
    Ok(gauge * sum.total())
}

/// `𝒮[e^{α(W - x)} | (t, x)]`, which equals `1/ψ_{V(t)}(iα) = exp(-t(cosh α - 1))`.
pub fn s_transform_exponential(alpha: f64, t: f64, x: i64, eps: f64) -> Result<f64> {
    ensure_finite("s_transform_exponential", "alpha", alpha)?;
    s_transform(&ExponentialTilt { alpha, center: x }, t, x, eps)
}

/// `ℳ_ξ^{u_k}(t, y) = 𝒮[Φ_ξ^{u_k}(W) | (t, y)]` by direct truncated summation.
pub fn discrete_martingale(config: &FiniteConfiguration, k: usize, t: f64, y: i64, eps: f64) -> Result<f64> {
    let basis = LagrangeBasis::new(config, k)?;
    s_transform(&basis, t, y, eps)
}

/// `ℳ_ξ^{u_k}(t, y)` by expanding `Φ_ξ^{u_k}` in powers of `(w - y)` and
/// mapping each power to `m_n(t, 0)`. Exact up to rounding; limited to
/// `N - 1 <= table degree`.
pub fn discrete_martingale_by_expansion(
    table: &MartingalePolynomials,
    config: &FiniteConfiguration,
    k: usize,
    t: f64,
    y: i64,
) -> Result<f64> {
    ensure_time("discrete_martingale_by_expansion", t)?;
    let basis = LagrangeBasis::new(config, k)?;
    let taylor = basis.taylor_at(y as f64);
    if taylor.len() - 1 > table.max_degree() {
        return Err(Error::TooLarge {
            operation: "discrete_martingale_by_expansion",
            size: taylor.len() - 1,
            limit: table.max_degree(),
        });
    }
    let mut total = 0.0;
    for (n, &c) in taylor.iter().enumerate().step_by(2) {
        total += c * table.moment(n, t)?;
    }
    Ok(total)
}

/// `h(x) = Π_{j<k} (x_k - x_j)`.
pub fn vandermonde(x: &[f64]) -> f64 {
    let mut prod = 1.0;
    for k in 1..x.len() {
        for j in 0..k {
            prod *= x[k] - x[j];
        }
    }
    prod
}

/// Normalised sinc `sin(πu)/(πu)`.
pub fn sinc_pi(u: f64) -> f64 {
    let arg = PI * u;
    if arg.abs() < SINC_SERIES_BELOW {
        let a2 = arg * arg;
        1.0 - a2 / 6.0 + a2 * a2 / 120.0 - a2 * a2 * a2 / 5040.0
    } else {
        arg.sin() / arg
    }
}

/// `Φ̂_{aZ}^{ak}(z) = sin(π(z/a - k)) / (π(z/a - k))`.
pub fn lattice_basis(spacing: LatticeSpec, k: i64, z: f64) -> f64 {
    sinc_pi(z / spacing.spacing() as f64 - k as f64)
}

/// `ℳ̂_{aZ}^{ak}(t, y) = (1/2π) ∫_{-π}^{π} e^{iλ(y/a - k)} e^{t(1 - cos(λ/a))} dλ`.
///
/// The imaginary part integrates an odd function and must vanish; it is
/// computed on the same nodes and checked against `1e-12`.
pub fn lattice_martingale(spacing: LatticeSpec, k: i64, t: f64, y: i64, tol: f64) -> Result<f64> {
    ensure_time("lattice_martingale", t)?;
    let a = spacing.spacing() as f64;
    let c = y as f64 / a - k as f64;
    let envelope = |lambda: f64| (t * (1.0 - (lambda / a).cos())).exp();
    let re = quadrature::integrate(-PI, PI, tol, |l| (l * c).cos() * envelope(l))?;
    let im = quadrature::integrate(-PI, PI, tol, |l| (l * c).sin() * envelope(l))?;
    if im.abs() > 1e-12 * re.abs().max(1.0) {
        return Err(Error::NonConvergence {
            operation: "lattice_martingale",
            parameter: "imaginary part",
            limit: im.abs(),
        });
    }
    Ok(re / (2.0 * PI))
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, v: f64) {
        let s = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - s) + v;
        } else {
            self.comp += (v - s) + self.sum;
        }
        self.sum = s;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
