//! Path sampling for independent continuous-time walks and two unbiased
//! estimators of expectations under the noncolliding process: the
//! h-transform (surviving paths weighted by `h(V(T))/h(u)`) and the
//! determinantal martingale weight `det[ℳ^{u_k}(T, V_j(T))]` on
//! unconditioned paths.
//!
//! Sample `i` draws from a ChaCha8 stream `(seed, i)`, and sums are taken in
//! sample order, so results do not depend on the number of worker threads.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::correlations::{CorrelationEntry, CorrelationTable, MultiTimePointSet};
use crate::error::{ensure_time, Error, Result};
use crate::linalg::Matrix;
use crate::martingale::{discrete_martingale, vandermonde, FiniteConfiguration};
use crate::Tolerances;

/// Samples processed per parallel batch.
const BATCH: usize = 4096;

/// Trajectory of one walk on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub start: i64,
    pub jump_times: Vec<f64>,
    pub steps: Vec<i8>,
    pub horizon: f64,
}

impl WalkPath {
    /// Right-continuous position at time `t`.
    pub fn position(&self, t: f64) -> i64 {
        let n = self.jump_times.partition_point(|&s| s <= t);
        self.start + self.steps[..n].iter().map(|&s| i64::from(s)).sum::<i64>()
    }

    pub fn end(&self) -> i64 {
        self.position(self.horizon)
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }
}

/// Unit-rate Poisson jump times on `(0, horizon]` with uniform `±1` steps.
pub fn sample_walk<R: Rng + ?Sized>(start: i64, horizon: f64, rng: &mut R) -> Result<WalkPath> {
    ensure_time("sample_walk", horizon)?;
    let mut jump_times = Vec::new();
    let mut steps = Vec::new();
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap;
        if t > horizon {
            break;
        }
        jump_times.push(t);
        steps.push(if rng.random_bool(0.5) { 1 } else { -1 });
    }
    Ok(WalkPath {
        start,
        jump_times,
        steps,
        horizon,
    })
}

/// `N` independent walks started from an ordered configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkEnsemble {
    pub initial: FiniteConfiguration,
    pub paths: Vec<WalkPath>,
    pub seed: u64,
}

impl WalkEnsemble {
    pub fn sample<R: Rng + ?Sized>(initial: &FiniteConfiguration, horizon: f64, seed: u64, rng: &mut R) -> Result<Self> {
        let paths = initial
            .sites()
            .iter()
            .map(|&u| sample_walk(u, horizon, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            initial: initial.clone(),
            paths,
            seed,
        })
    }

    pub fn positions(&self, t: f64) -> Vec<i64> {
        self.paths.iter().map(|p| p.position(t)).collect()
    }
}

/// First jump time at which neighbouring walks are no longer strictly
/// ordered, or `None` if the order survives up to the horizon. Jumps at
/// identical times are applied in walk order.
pub fn exit_time(ensemble: &WalkEnsemble) -> Result<Option<f64>> {
    let paths = &ensemble.paths;
    let Some(first) = paths.first() else { return Ok(None) };
    if paths.iter().any(|p| p.horizon != first.horizon) {
        return Err(Error::invalid("exit_time", "paths have different horizons"));
    }
    let mut events: Vec<(f64, usize, i8)> = paths
        .iter()
        .enumerate()
        .flat_map(|(j, p)| p.jump_times.iter().zip(&p.steps).map(move |(&t, &s)| (t, j, s)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut x: Vec<i64> = paths.iter().map(|p| p.start).collect();
    for (t, j, s) in events {
        x[j] += i64::from(s);
        let below = j > 0 && x[j - 1] >= x[j];
        let above = j + 1 < x.len() && x[j] >= x[j + 1];
        if below || above {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Bounded functionals of the unlabeled multi-time configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    One,
    /// Number of walks at site `x` at time `t`.
    Count { t: f64, x: i64 },
    Product(Vec<Functional>),
    Sum(Vec<Functional>),
    Scaled(f64, Box<Functional>),
}

impl Functional {
    /// `Π Count(t, x)` over the points, whose mean is the correlation function.
    pub fn correlation(pts: &MultiTimePointSet) -> Self {
        Functional::Product(pts.points().into_iter().map(|p| Functional::Count { t: p.t, x: p.x }).collect())
    }

    pub fn max_time(&self) -> f64 {
        match self {
            Functional::One => 0.0,
            Functional::Count { t, .. } => *t,
            Functional::Product(fs) | Functional::Sum(fs) => fs.iter().map(Functional::max_time).fold(0.0, f64::max),
            Functional::Scaled(_, f) => f.max_time(),
        }
    }

    pub fn eval(&self, paths: &[WalkPath]) -> f64 {
        match self {
            Functional::One => 1.0,
            Functional::Count { t, x } => paths.iter().filter(|p| p.position(*t) == *x).count() as f64,
            Functional::Product(fs) => fs.iter().map(|f| f.eval(paths)).product(),
            Functional::Sum(fs) => fs.iter().map(|f| f.eval(paths)).sum(),
            Functional::Scaled(c, f) => c * f.eval(paths),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// `(Σ|w|)² / Σw²` over the path weights.
    pub effective_samples: f64,
}

impl EstimatorResult {
    /// `(mean - target) / std_error`; zero when both the error and the
    /// deviation vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    HTransform,
    Dmr,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(Estimator::HTransform),
            "dmr" => Ok(Estimator::Dmr),
            _ => Err(Error::invalid("Estimator", format!("expected h or dmr, got {s}"))),
        }
    }
}

/// `ℳ_ξ^{u_k}(T, y)` tabulated over the sites a walk reaches with
/// non-negligible probability, computed on demand outside that range.
struct MartingaleCache {
    config: FiniteConfiguration,
    horizon: f64,
    eps: f64,
    lo: i64,
    values: Vec<Vec<f64>>,
}

impl MartingaleCache {
    fn new(config: &FiniteConfiguration, horizon: f64, eps: f64) -> Result<Self> {
        let reach = (horizon + 10.0 * horizon.sqrt() + 20.0).ceil() as i64;
        let lo = config.min() - reach;
        let hi = config.max() + reach;
        let values = (0..config.len())
            .map(|k| (lo..=hi).map(|y| discrete_martingale(config, k, horizon, y, eps)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            config: config.clone(),
            horizon,
            eps,
            lo,
            values,
        })
    }

    fn get(&self, k: usize, y: i64) -> Result<f64> {
        let row = &self.values[k];
        match usize::try_from(y - self.lo).ok().and_then(|i| row.get(i)) {
            Some(&v) => Ok(v),
            None => discrete_martingale(&self.config, k, self.horizon, y, self.eps),
        }
    }

    /// `det[ℳ^{u_k}(T, y_j)]_{j,k}`.
    fn weight(&self, ends: &[i64]) -> Result<f64> {
        let n = ends.len();
        let mut m = Matrix::zeros(n);
        for (j, &y) in ends.iter().enumerate() {
            for k in 0..n {
                m[(j, k)] = self.get(k, y)?;
            }
        }
        Ok(m.determinant())
    }
}

/// Path weight of one sampled ensemble.
type SampleFn<'a> = dyn Fn(&WalkEnsemble) -> Result<f64> + Sync + 'a;

/// Runs `n_samples` ensembles and returns, for each functional, the
/// estimate of `E[F · w]` where `w` is produced by `weight`.
fn run(
    xi: &FiniteConfiguration,
    functionals: &[Functional],
    horizon: f64,
    n_samples: usize,
    seed: u64,
    weight: &SampleFn<'_>,
) -> Result<Vec<EstimatorResult>> {
    const OP: &str = "estimator";
    ensure_time(OP, horizon)?;
    if n_samples == 0 {
        return Err(Error::invalid(OP, "need at least one sample"));
    }
    for f in functionals {
        if f.max_time() > horizon {
            return Err(Error::invalid(
                OP,
                format!("functional looks at time {} beyond horizon {horizon}", f.max_time()),
            ));
        }
    }
    let sample = |i: usize| -> Result<(f64, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let ensemble = WalkEnsemble::sample(xi, horizon, seed, &mut rng)?;
        let w = weight(&ensemble)?;
        let values = functionals
            .iter()
            .map(|f| if w == 0.0 { 0.0 } else { w * f.eval(&ensemble.paths) })
            .collect();
        Ok((w, values))
    };
    let k = functionals.len();
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    let (mut abs_w, mut sq_w) = (0.0, 0.0);
    let mut start = 0;
    while start < n_samples {
        let end = (start + BATCH).min(n_samples);
        #[cfg(feature = "parallel")]
        let batch = {
            use rayon::prelude::*;
            (start..end).into_par_iter().map(sample).collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let batch = (start..end).map(sample).collect::<Result<Vec<_>>>()?;
        for (w, values) in batch {
            abs_w += w.abs();
            sq_w += w * w;
            for (i, v) in values.into_iter().enumerate() {
                sum[i] += v;
                sum_sq[i] += v * v;
            }
        }
        start = end;
    }
    let n = n_samples as f64;
    let ess = if sq_w > 0.0 { abs_w * abs_w / sq_w } else { 0.0 };
    Ok((0..k)
        .map(|i| {
            let mean = sum[i] / n;
            let var = if n_samples > 1 {
                ((sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            EstimatorResult {
                mean,
                std_error: (var / n).sqrt(),
                n_samples,
                effective_samples: ess,
            }
        })
        .collect())
}

fn h_ratio(xi: &FiniteConfiguration, ends: &[i64]) -> f64 {
    let u: Vec<f64> = xi.sites().iter().map(|&v| v as f64).collect();
    let v: Vec<f64> = ends.iter().map(|&v| v as f64).collect();
    vandermonde(&v) / vandermonde(&u)
}

/// Estimates for several functionals sharing the same sampled paths.
pub fn estimate_many(
    xi: &FiniteConfiguration,
    functionals: &[Functional],
    horizon: f64,
    n_samples: usize,
    seed: u64,
    estimator: Estimator,
    tol: &Tolerances,
) -> Result<Vec<EstimatorResult>> {
    match estimator {
        Estimator::HTransform => {
            let weight = |e: &WalkEnsemble| -> Result<f64> {
                Ok(match exit_time(e)? {
                    Some(_) => 0.0,
                    None => h_ratio(xi, &e.positions(horizon)),
                })
            };
            run(xi, functionals, horizon, n_samples, seed, &weight)
        }
        Estimator::Dmr => {
            let cache = MartingaleCache::new(xi, horizon, tol.tail)?;
            let weight = |e: &WalkEnsemble| cache.weight(&e.positions(horizon));
            run(xi, functionals, horizon, n_samples, seed, &weight)
        }
    }
}

/// `E_u[F · 1(τ_u > T) h(V(T))/h(u)]`.
pub fn h_transform_estimator(
    xi: &FiniteConfiguration,
    f: &Functional,
    horizon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    let tol = Tolerances::default();
    estimate_many(xi, std::slice::from_ref(f), horizon, n_samples, seed, Estimator::HTransform, &tol).map(|mut v| v.remove(0))
}

/// `E_u[F · det[ℳ_ξ^{u_k}(T, V_j(T))]]` over unconditioned walks.
pub fn dmr_estimator(
    xi: &FiniteConfiguration,
    f: &Functional,
    horizon: f64,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<EstimatorResult> {
    estimate_many(xi, std::slice::from_ref(f), horizon, n_samples, seed, Estimator::Dmr, tol).map(|mut v| v.remove(0))
}

/// `E_u[1(τ_u <= T) h(V(T))/h(u)]`, which vanishes by antisymmetry.
pub fn killed_h_estimator(xi: &FiniteConfiguration, horizon: f64, n_samples: usize, seed: u64) -> Result<EstimatorResult> {
    let weight = |e: &WalkEnsemble| -> Result<f64> {
        Ok(match exit_time(e)? {
            Some(_) => h_ratio(xi, &e.positions(horizon)),
            None => 0.0,
        })
    };
    run(xi, &[Functional::One], horizon, n_samples, seed, &weight).map(|mut v| v.remove(0))
}

/// Monte Carlo correlation functions at several point sets, all from one
/// batch of paths run up to the latest time among the sets.
pub fn empirical_correlation(
    xi: &FiniteConfiguration,
    sets: &[MultiTimePointSet],
    estimator: Estimator,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<CorrelationTable> {
    let functionals: Vec<Functional> = sets.iter().map(Functional::correlation).collect();
    let horizon = sets.iter().map(MultiTimePointSet::max_time).fold(0.0, f64::max);
    let results = estimate_many(xi, &functionals, horizon, n_samples, seed, estimator, tol)?;
    Ok(CorrelationTable {
        entries: sets
            .iter()
            .zip(results)
            .map(|(pts, r)| CorrelationEntry {
                points: pts.clone(),
                value: r.mean,
                std_error: Some(r.std_error),
            })
            .collect(),
    })
}

/// Empirical law of `V(t)` for a single walk from `start`.
pub fn empirical_transition(start: i64, t: f64, n_samples: usize, seed: u64) -> Result<HashMap<i64, usize>> {
    let mut counts = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        *counts.entry(sample_walk(start, t, &mut rng)?.end()).or_insert(0) += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &[i64]) -> FiniteConfiguration {
        FiniteConfiguration::new(s.to_vec()).unwrap()
    }

    fn path(start: i64, jumps: &[(f64, i8)], horizon: f64) -> WalkPath {
        WalkPath {
            start,
            jump_times: jumps.iter().map(|j| j.0).collect(),
            steps: jumps.iter().map(|j| j.1).collect(),
            horizon,
        }
    }

    #[test]
    fn zero_horizon_has_no_jumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_walk(5, 0.0, &mut rng).unwrap();
        assert_eq!(p.jump_count(), 0);
        assert_eq!(p.position(0.0), 5);
    }

    #[test]
    fn position_is_right_continuous() {
        let p = path(0, &[(0.5, 1), (1.0, 1), (1.5, -1)], 2.0);
        assert_eq!(p.position(0.49), 0);
        assert_eq!(p.position(0.5), 1);
        assert_eq!(p.position(1.2), 2);
        assert_eq!(p.end(), 1);
    }

    #[test]
    fn exit_time_cases() {
        let single = WalkEnsemble {
            initial: cfg(&[0]),
            paths: vec![path(0, &[(0.3, 1)], 1.0)],
            seed: 0,
        };
        assert_eq!(exit_time(&single).unwrap(), None);
        let collide = WalkEnsemble {
            initial: cfg(&[0, 1]),
            paths: vec![path(0, &[(0.25, 1)], 1.0), path(1, &[(0.7, 1)], 1.0)],
            seed: 0,
        };
        assert_eq!(exit_time(&collide).unwrap(), Some(0.25));
        let apart = WalkEnsemble {
            initial: cfg(&[0, 1]),
            paths: vec![path(0, &[(0.25, -1)], 1.0), path(1, &[(0.7, 1)], 1.0)],
            seed: 0,
        };
        assert_eq!(exit_time(&apart).unwrap(), None);
        let mismatch = WalkEnsemble {
            initial: cfg(&[0, 1]),
            paths: vec![path(0, &[], 1.0), path(1, &[], 2.0)],
            seed: 0,
        };
        assert!(exit_time(&mismatch).is_err());
    }

    #[test]
    fn functional_eval() {
        let paths = vec![path(0, &[(0.5, 1)], 1.0), path(2, &[(0.5, -1)], 1.0)];
        assert_eq!(Functional::Count { t: 1.0, x: 1 }.eval(&paths), 2.0);
        let f = Functional::Sum(vec![
            Functional::Scaled(0.5, Box::new(Functional::One)),
            Functional::Product(vec![Functional::Count { t: 0.0, x: 0 }, Functional::Count { t: 0.0, x: 2 }]),
        ]);
        assert_eq!(f.eval(&paths), 1.5);
        assert_eq!(f.max_time(), 0.0);
    }

    #[test]
    fn reproducible() {
        let xi = cfg(&[0, 2]);
        let f = Functional::Count { t: 0.5, x: 0 };
        let a = h_transform_estimator(&xi, &f, 1.0, 5000, 11).unwrap();
        let b = h_transform_estimator(&xi, &f, 1.0, 5000, 11).unwrap();
        assert_eq!(a, b);
        let c = h_transform_estimator(&xi, &f, 1.0, 5000, 12).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn initial_points_are_deterministic() {
        let xi = cfg(&[0, 2]);
        let pts = MultiTimePointSet::at(0.0, vec![0, 2]).unwrap();
        let table = empirical_correlation(&xi, &[pts], Estimator::HTransform, 2000, 3, &Tolerances::default()).unwrap();
        assert_eq!(table.entries[0].value, 1.0);
        assert_eq!(table.entries[0].std_error, Some(0.0));
    }

    #[test]
    fn rejects_functional_past_horizon() {
        let xi = cfg(&[0, 2]);
        let f = Functional::Count { t: 2.0, x: 0 };
        assert!(h_transform_estimator(&xi, &f, 1.0, 10, 0).is_err());
        assert!(h_transform_estimator(&xi, &Functional::One, 1.0, 0, 0).is_err());
    }
}
