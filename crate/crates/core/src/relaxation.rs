//! Relaxation of the lattice-started process towards the stationary one.
//!
//! After a time shift `τ` the kernel of the process started from `aZ`
//! approaches the stationary kernel at density `1/a`. The difference is
//! exactly the remainder `R` of the Fourier decomposition, which is what the
//! gap functions here measure.

use crate::error::{ensure_time, Error, Result};
use crate::kernels::{
    kernel_lattice, kernel_stationary_gauged, remainder_part, shift_interval, Density, Gauge, SpaceTimePoint,
};
use crate::martingale::LatticeSpec;
use crate::quadrature;
use crate::Tolerances;

/// Density `1/a` of the lattice start.
pub fn lattice_density(a: LatticeSpec) -> Density {
    Density::new(a.density()).expect("1/a lies in (0, 1) for a >= 2")
}

fn shifted(t: f64, tau: f64, x: i64) -> Result<SpaceTimePoint> {
    ensure_time("relaxation_gap", tau)?;
    SpaceTimePoint::new(t + tau, x)
}

/// `K_{aZ}(s+τ, x; t+τ, y)` and `K_{1/a}(t-s, y-x)`, both in the probability gauge.
pub fn relaxation_pair(a: LatticeSpec, s: f64, x: i64, t: f64, y: i64, tau: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    let p = shifted(s, tau, x)?;
    let q = shifted(t, tau, y)?;
    let lattice = kernel_lattice(a, p, q, Gauge::Probability, tol)?;
    let stationary = kernel_stationary_gauged(lattice_density(a), t - s, y - x, Gauge::Probability, tol)?;
    Ok((lattice, stationary))
}

/// `|K_{aZ}(s+τ, x; t+τ, y) - K_{1/a}(t-s, y-x)|`.
pub fn relaxation_gap(a: LatticeSpec, s: f64, x: i64, t: f64, y: i64, tau: f64, tol: &Tolerances) -> Result<f64> {
    let (lattice, stationary) = relaxation_pair(a, s, x, t, y, tau, tol)?;
    Ok((lattice - stationary).abs())
}

/// The remainder `R(s, x; t, y)` from the nonzero comb shifts.
pub fn remainder_term(a: LatticeSpec, s: f64, x: i64, t: f64, y: i64, tol: &Tolerances) -> Result<f64> {
    let p = SpaceTimePoint::new(s, x)?;
    let q = SpaceTimePoint::new(t, y)?;
    remainder_part(a, p, q, tol)
}

/// A quadrature node of the remainder integral with its damping factor
/// `e^{cos(θ/a) - cos(λ/a)}`, `λ = 2πm - θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingNode {
    pub shift: i64,
    pub theta: f64,
    pub lambda: f64,
    pub factor: f64,
}

/// Damping factors at the Gauss-Legendre nodes of the given refinement
/// level on every shift interval of the annulus, `m = ±1, ±2, …`.
pub fn remainder_damping_nodes(a: LatticeSpec, level: usize) -> Vec<DampingNode> {
    let spacing = a.spacing();
    let af = spacing as f64;
    let mut nodes = Vec::new();
    for m in 1.. {
        let Some((lo, hi)) = shift_interval(spacing, m) else { break };
        for sign in [1.0, -1.0] {
            let shift = sign * 2.0 * std::f64::consts::PI * m as f64;
            for theta in quadrature::nodes_at_level(level, lo, hi) {
                let theta = sign * theta;
                let lambda = shift - theta;
                nodes.push(DampingNode {
                    shift: if sign > 0.0 { m } else { -m },
                    theta,
                    lambda,
                    factor: ((theta / af).cos() - (lambda / af).cos()).exp(),
                });
            }
        }
    }
    nodes
}

/// One cell of a relaxation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationCell {
    pub tau: f64,
    pub dt: f64,
    pub dx: i64,
    pub lattice_value: f64,
    pub stationary_value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationReport {
    pub a: LatticeSpec,
    /// Site `x` of the earlier point; the later one is `x + dx`.
    pub origin: i64,
    pub displacements: Vec<(f64, i64)>,
    pub tau_grid: Vec<f64>,
    /// Row-major: `cells[i * displacements.len() + j]` is `(tau_grid[i], displacements[j])`.
    pub cells: Vec<RelaxationCell>,
}

impl RelaxationReport {
    pub fn cell(&self, tau_index: usize, displacement_index: usize) -> &RelaxationCell {
        &self.cells[tau_index * self.displacements.len() + displacement_index]
    }

    /// Gaps of one displacement along the τ grid.
    pub fn column(&self, displacement_index: usize) -> Vec<f64> {
        (0..self.tau_grid.len()).map(|i| self.cell(i, displacement_index).gap).collect()
    }

    /// Largest gap over displacements, per τ.
    pub fn max_gaps(&self) -> Vec<f64> {
        self.cells
            .chunks(self.displacements.len().max(1))
            .map(|row| row.iter().map(|c| c.gap).fold(0.0, f64::max))
            .collect()
    }

    /// Whether each column is non-increasing over the τ values `>= from_tau`.
    pub fn non_increasing_from(&self, from_tau: f64) -> Vec<bool> {
        (0..self.displacements.len())
            .map(|j| {
                let tail: Vec<f64> = self
                    .tau_grid
                    .iter()
                    .zip(self.column(j))
                    .filter(|(tau, _)| **tau >= from_tau)
                    .map(|(_, g)| g)
                    .collect();
                tail.windows(2).all(|w| w[1] <= w[0])
            })
            .collect()
    }
}

/// Gap table over `tau_grid × displacements`, with the earlier point at
/// site `origin` and time `max(0, -dt) + τ`.
pub fn relaxation_sweep(
    a: LatticeSpec,
    origin: i64,
    displacements: &[(f64, i64)],
    tau_grid: &[f64],
    tol: &Tolerances,
) -> Result<RelaxationReport> {
    if tau_grid.is_empty() || displacements.is_empty() {
        return Err(Error::invalid("relaxation_sweep", "empty grid"));
    }
    for &tau in tau_grid {
        ensure_time("relaxation_sweep", tau)?;
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("relaxation_sweep", "tau grid must be strictly increasing"));
    }
    for &(dt, _) in displacements {
        if !dt.is_finite() {
            return Err(Error::invalid("relaxation_sweep", format!("time lag must be finite, got {dt}")));
        }
    }
    let jobs: Vec<(f64, f64, i64)> = tau_grid
        .iter()
        .flat_map(|&tau| displacements.iter().map(move |&(dt, dx)| (tau, dt, dx)))
        .collect();
    let cell = |&(tau, dt, dx): &(f64, f64, i64)| -> Result<RelaxationCell> {
        let s = (-dt).max(0.0);
        let (lattice_value, stationary_value) = relaxation_pair(a, s, origin, s + dt, origin + dx, tau, tol)?;
        Ok(RelaxationCell {
            tau,
            dt,
            dx,
            lattice_value,
            stationary_value,
            gap: (lattice_value - stationary_value).abs(),
        })
    };
    #[cfg(feature = "parallel")]
    let cells = {
        use rayon::prelude::*;
        jobs.par_iter().map(cell).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let cells = jobs.iter().map(cell).collect::<Result<Vec<_>>>()?;
    Ok(RelaxationReport {
        a,
        origin,
        displacements: displacements.to_vec(),
        tau_grid: tau_grid.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::sine_kernel;

    fn two() -> LatticeSpec {
        LatticeSpec::new(2).unwrap()
    }

    #[test]
    fn initial_gap_at_odd_site() {
        let tol = Tolerances::default();
        let g = relaxation_gap(two(), 0.0, 1, 0.0, 1, 0.0, &tol).unwrap();
        assert!((g - 0.5).abs() < 1e-13, "{g}");
    }

    #[test]
    fn gap_is_remainder() {
        let tol = Tolerances::default();
        for &(s, x, t, y, tau) in &[(0.0, 0, 0.0, 1, 3.0), (0.5, 1, 1.5, -2, 2.0), (1.2, 0, 0.3, 2, 5.0), (0.0, 1, 0.0, 1, 12.0)] {
            let g = relaxation_gap(two(), s, x, t, y, tau, &tol).unwrap();
            let r = remainder_term(two(), s + tau, x, t + tau, y, &tol).unwrap();
            assert!((g - r.abs()).abs() < 1e-8, "{g} vs {r}");
        }
    }

    #[test]
    fn damping_below_one() {
        for a in [2, 3, 5] {
            let nodes = remainder_damping_nodes(LatticeSpec::new(a).unwrap(), 3);
            assert!(!nodes.is_empty());
            assert!(nodes.iter().all(|n| n.factor < 1.0));
        }
    }

    #[test]
    fn sweep_trend_and_limit() {
        let tol = Tolerances::default();
        let disp: Vec<(f64, i64)> = (0..6).map(|dx| (0.0, dx)).collect();
        let taus = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let report = relaxation_sweep(two(), 0, &disp, &taus, &tol).unwrap();
        assert!(report.non_increasing_from(4.0).iter().all(|&b| b));
        let three = LatticeSpec::new(3).unwrap();
        let report = relaxation_sweep(three, 0, &disp, &[64.0], &tol).unwrap();
        for (j, &(_, dx)) in disp.iter().enumerate() {
            let c = report.cell(0, j);
            assert!((c.stationary_value - sine_kernel(lattice_density(three), dx)).abs() < 1e-15);
            assert!(c.gap < 1e-2, "dx={dx}: {}", c.gap);
        }
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        let tol = Tolerances::default();
        assert!(relaxation_sweep(two(), 0, &[(0.0, 0)], &[2.0, 1.0], &tol).is_err());
        assert!(relaxation_sweep(two(), 0, &[], &[1.0], &tol).is_err());
    }
}
