//! Quadrature rules: the periodic trapezoidal rule for 2π-periodic integrands
//! and Gauss-Legendre with node doubling for smooth integrands on an interval.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Sum of `f` over `n` equispaced nodes on `[-π, π)`, times the spacing.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let h = 2.0 * PI / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        sum += f(-PI + j as f64 * h);
    }
    sum * h
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of `P_n` by Newton iteration from the Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f` with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Nodes mapped onto `[a, b]`.
    pub fn mapped_nodes(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes.iter().map(move |x| mid + half * x)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule sizes used by [`integrate`]: 16, 32, ..., 2048 nodes.
const LEVELS: usize = 8;

fn rule(level: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    &RULES.get_or_init(|| (0..LEVELS).map(|l| GaussLegendre::new(16 << l)).collect())[level]
}

/// Number of nodes at each doubling level.
pub fn level_nodes(level: usize) -> usize {
    16 << level
}

/// `∫_a^b f` by Gauss-Legendre, doubling the node count until successive
/// estimates differ by less than `tol * max(1, |estimate|)`.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> Result<f64> {
    integrate_from(0, a, b, tol, f).map(|(v, _)| v)
}

/// As [`integrate`], also reporting the level that converged.
pub fn integrate_from<F: Fn(f64) -> f64>(
    first_level: usize,
    a: f64,
    b: f64,
    tol: f64,
    f: F,
) -> Result<(f64, usize)> {
    if a == b {
        return Ok((0.0, first_level));
    }
    let mut prev = rule(first_level).integrate(a, b, &f);
    for level in first_level + 1..LEVELS {
        let next = rule(level).integrate(a, b, &f);
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return Ok((next, level));
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        operation: "gauss_legendre",
        parameter: "nodes",
        limit: level_nodes(LEVELS - 1) as f64,
    })
}

/// Nodes of the rule at `level` mapped onto `[a, b]`.
pub fn nodes_at_level(level: usize, a: f64, b: f64) -> Vec<f64> {
    rule(level.min(LEVELS - 1)).mapped_nodes(a, b).collect()
}
