//! Exponentially scaled modified Bessel functions of integer order and the
//! transition probability of the continuous-time simple symmetric walk.
//!
//! Everything here works with `ĩ_n(t) = e^{-t} I_n(t)`, which lies in `[0, 1]`
//! for `t >= 0` and never overflows. Small arguments use the power series
//! directly; large arguments use Miller's backward recurrence normalised by
//! `ĩ_0 + 2 Σ_{k>=1} ĩ_k = 1`.

use num_complex::Complex64 as Complex;

use crate::error::{ensure_finite, ensure_time, Error, Result};
use crate::quadrature;

/// Arguments up to this value are summed from the power series.
const SERIES_MAX_T: f64 = 20.0;

/// Relative size below which series terms are dropped.
const SERIES_REL_EPS: f64 = 1e-18;

/// Rescaling threshold for the backward recurrence.
const RESCALE_ABOVE: f64 = 1e200;

/// Default cutoff for lattice sums weighted by `ĩ_n(t)`.
pub const DEFAULT_TAIL_EPS: f64 = 1e-16;

/// Hard cap on truncation radii so a bad tolerance cannot loop forever.
pub const MAX_RADIUS: u64 = 1 << 22;

/// `e^{-t} I_n(t)` for `t >= 0`.
pub fn scaled_bessel_i(n: u64, t: f64) -> Result<f64> {
    ensure_time("scaled_bessel_i", t)?;
    if t == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if t <= SERIES_MAX_T {
        Ok(series_scaled(n, t))
    } else {
        let seq = miller_scaled_seq(n as usize, t);
        Ok(seq[n as usize])
    }
}

/// `ĩ_0(t), …, ĩ_{n_max}(t)` in one pass.
pub fn scaled_bessel_i_seq(n_max: usize, t: f64) -> Result<Vec<f64>> {
    ensure_time("scaled_bessel_i_seq", t)?;
    if t == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    if t <= SERIES_MAX_T {
        Ok((0..=n_max as u64).map(|n| series_scaled(n, t)).collect())
    } else {
        Ok(miller_scaled_seq(n_max, t))
    }
}

/// `I_n(z)` for any real `z`, using the parity `I_n(-z) = (-1)^n I_n(z)`.
///
/// The result is unscaled; for `|z|` beyond roughly 700 it overflows and an
/// error is returned. Kernel code should work with the scaled form instead.
pub fn signed_bessel_i(n: u64, z: f64) -> Result<f64> {
    ensure_finite("signed_bessel_i", "z", z)?;
    let magnitude = scaled_bessel_i(n, z.abs())? * z.abs().exp();
    if !magnitude.is_finite() {
        return Err(Error::invalid(
            "signed_bessel_i",
            format!("I_{n}({z}) overflows double precision"),
        ));
    }
    Ok(if z < 0.0 && n % 2 == 1 { -magnitude } else { magnitude })
}

/// `p(t, y | x) = e^{-t} I_{|y-x|}(t)`.
pub fn transition_probability(t: f64, x: i64, y: i64) -> Result<f64> {
    ensure_time("transition_probability", t)?;
    scaled_bessel_i(y.abs_diff(x), t)
}

/// `p(t, y | x)` from its Fourier integral, evaluated with the periodic
/// trapezoidal rule on `n_nodes` equispaced nodes.
pub fn transition_probability_trapezoid(t: f64, x: i64, y: i64, n_nodes: usize) -> Result<f64> {
    ensure_time("transition_probability_quadrature", t)?;
    if n_nodes < 4 {
        return Err(Error::invalid(
            "transition_probability_quadrature",
            format!("need at least 4 nodes, got {n_nodes}"),
        ));
    }
    let d = (y - x) as f64;
    Ok(quadrature::periodic_trapezoid(n_nodes, |k| {
        (k * d).cos() * (-(1.0 - k.cos()) * t).exp()
    }) / (2.0 * std::f64::consts::PI))
}

/// `p(t, y | x)` from its Fourier integral, doubling the node count until two
/// successive trapezoidal sums differ by less than `tol`.
pub fn transition_probability_quadrature(t: f64, x: i64, y: i64, tol: f64) -> Result<f64> {
    ensure_time("transition_probability_quadrature", t)?;
    // Start above the frequency so the first sums are not aliased.
    let d = y.abs_diff(x) as usize;
    let mut n = (2 * (d + 16)).next_power_of_two();
    let mut prev = transition_probability_trapezoid(t, x, y, n)?;
    while n < 1 << 20 {
        n *= 2;
        let next = transition_probability_trapezoid(t, x, y, n)?;
        if (next - prev).abs() < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        operation: "transition_probability_quadrature",
        parameter: "nodes",
        limit: n as f64,
    })
}

/// `p(t, y | x) = ∫_0^1 cos(uπ(y - x)) e^{-(1 - cos uπ) t} du` by Gauss-Legendre.
pub fn transition_probability_cosine(t: f64, x: i64, y: i64, tol: f64) -> Result<f64> {
    ensure_time("transition_probability_cosine", t)?;
    let n = (y - x) as f64;
    quadrature::integrate(0.0, 1.0, tol, |u| {
        let a = std::f64::consts::PI * u;
        (a * n).cos() * (-(1.0 - a.cos()) * t).exp()
    })
}

/// `ψ_{V(t)}(z) = exp(t (cos z - 1))`.
pub fn characteristic_function(t: f64, z: Complex) -> Result<Complex> {
    ensure_time("characteristic_function", t)?;
    ensure_finite("characteristic_function", "Re z", z.re)?;
    ensure_finite("characteristic_function", "Im z", z.im)?;
    Ok(((z.cos() - Complex::new(1.0, 0.0)) * t).exp())
}

/// Largest `n` with `ĩ_n(t) >= eps`, i.e. the half-width of the window that
/// carries all non-negligible lattice weight at time `t`.
pub fn tail_radius(t: f64, eps: f64) -> Result<u64> {
    ensure_time("tail_radius", t)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("tail_radius", format!("eps must lie in (0, 1), got {eps}")));
    }
    if t == 0.0 {
        return Ok(0);
    }
    let start = t.ceil() + 10.0;
    if start >= MAX_RADIUS as f64 {
        return Err(Error::NonConvergence {
            operation: "tail_radius",
            parameter: "radius",
            limit: MAX_RADIUS as f64,
        });
    }
    let mut guess = (start as usize).max(16);
    loop {
        let seq = scaled_bessel_i_seq(guess, t)?;
        // ĩ_n is decreasing in n for fixed t.
        if let Some(first_below) = seq.iter().position(|&v| v < eps) {
            return Ok(first_below.saturating_sub(1) as u64);
        }
        if guess as u64 >= MAX_RADIUS {
            return Err(Error::NonConvergence {
                operation: "tail_radius",
                parameter: "radius",
                limit: guess as f64,
            });
        }
        guess = (guess * 2).min(MAX_RADIUS as usize);
    }
}

/// Table of `ĩ_0(t), …, ĩ_R(t)` with `R` the tail radius, for repeated
/// lattice sums at a fixed time.
#[derive(Debug, Clone)]
pub struct ScaledBesselTable {
    t: f64,
    values: Vec<f64>,
}

impl ScaledBesselTable {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        let radius = tail_radius(t, eps)?;
        Ok(Self {
            t,
            values: scaled_bessel_i_seq(radius as usize, t)?,
        })
    }

    /// Table covering orders `0..=n_max` regardless of magnitude.
    pub fn with_len(t: f64, n_max: usize) -> Result<Self> {
        Ok(Self {
            t,
            values: scaled_bessel_i_seq(n_max, t)?,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn radius(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    /// `ĩ_n(t)`, zero beyond the stored radius.
    pub fn get(&self, n: u64) -> f64 {
        self.values.get(n as usize).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn series_scaled(n: u64, t: f64) -> f64 {
    let half = 0.5 * t;
    let mut prefactor = (-t).exp();
    for k in 1..=n {
        prefactor *= half / k as f64;
        if prefactor == 0.0 {
            return 0.0;
        }
    }
    let q = half * half;
    let nf = n as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut l = 0.0;
    loop {
        l += 1.0;
        term *= q / (l * (nf + l));
        sum += term;
        if term < SERIES_REL_EPS * sum {
            break;
        }
    }
    prefactor * sum
}

/// Starting order for the backward recurrence. The contamination from the
/// dominant solution at order `n` behaves like `exp(-(K^2 - n^2)/t)` for
/// large `t`, and like `(t/2K)^{2K}` for small `t`.
fn miller_start(n_max: usize, t: f64) -> usize {
    let n = n_max as f64;
    let large_t = (n * n + 80.0 * t).sqrt().ceil() as usize;
    (n_max + 30).max(large_t + 30)
}

pub(crate) fn miller_scaled_seq(n_max: usize, t: f64) -> Vec<f64> {
    debug_assert!(t > 0.0);
    let start = miller_start(n_max, t);
    let mut out = vec![0.0; n_max + 1];
    let mut above = 0.0; // f_{k+1}
    let mut current = 1e-280; // f_k
    let mut norm = 0.0;
    let two_over_t = 2.0 / t;
    for k in (1..=start).rev() {
        if k <= n_max {
            out[k] = current;
        }
        norm += 2.0 * current;
        let below = above + two_over_t * k as f64 * current;
        above = current;
        current = below;
        if current.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            current *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(k) {
                *v *= s;
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in &mut out {
        *v /= norm;
    }
    out
}
