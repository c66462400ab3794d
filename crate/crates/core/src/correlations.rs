//! Spatio-temporal correlation functions and generating functions.

use std::ops::RangeInclusive;

use crate::error::{ensure_finite, ensure_time, Error, Result};
use crate::kernels::{Kernel, SpaceTimePoint};
use crate::linalg::Matrix;

/// Largest point count accepted by [`correlation_function`].
pub const MAX_CORRELATION_POINTS: usize = 12;
/// Largest support accepted by [`fredholm_generating_function`].
pub const MAX_FREDHOLM_POINTS: usize = 14;

/// Points grouped by time: times strictly increasing, sites strictly
/// increasing within each group.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTimePointSet {
    groups: Vec<(f64, Vec<i64>)>,
}

impl MultiTimePointSet {
    pub fn new(groups: Vec<(f64, Vec<i64>)>) -> Result<Self> {
        const OP: &str = "MultiTimePointSet";
        for (t, sites) in &groups {
            ensure_time(OP, *t)?;
            if sites.is_empty() {
                return Err(Error::invalid(OP, format!("no sites at time {t}")));
            }
            if sites.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(OP, format!("sites at time {t} must be strictly increasing")));
            }
        }
        if groups.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(OP, "times must be strictly increasing"));
        }
        Ok(Self { groups })
    }

    /// Single-time set.
    pub fn at(t: f64, sites: Vec<i64>) -> Result<Self> {
        Self::new(vec![(t, sites)])
    }

    pub fn groups(&self) -> &[(f64, Vec<i64>)] {
        &self.groups
    }

    pub fn max_time(&self) -> f64 {
        self.groups.last().map_or(0.0, |g| g.0)
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.1.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn points(&self) -> Vec<SpaceTimePoint> {
        self.groups
            .iter()
            .flat_map(|(t, sites)| sites.iter().map(move |&x| SpaceTimePoint { t: *t, x }))
            .collect()
    }
}

/// Determinant of `K(p_i, p_j)` over an arbitrary list of points.
pub fn kernel_determinant<K: Kernel + ?Sized>(kernel: &K, points: &[SpaceTimePoint]) -> Result<f64> {
    let n = points.len();
    let mut m = Matrix::zeros(n);
    for (i, &p) in points.iter().enumerate() {
        for (j, &q) in points.iter().enumerate() {
            m[(i, j)] = kernel.eval(p, q)?;
        }
    }
    Ok(m.determinant())
}

/// `ρ(pts) = det[K(p_i, p_j)]`.
pub fn correlation_function<K: Kernel + ?Sized>(kernel: &K, pts: &MultiTimePointSet) -> Result<f64> {
    let points = pts.points();
    if points.len() > MAX_CORRELATION_POINTS {
        return Err(Error::TooLarge {
            operation: "correlation_function",
            size: points.len(),
            limit: MAX_CORRELATION_POINTS,
        });
    }
    kernel_determinant(kernel, &points)
}

/// `ρ(t, x) = K(t, x; t, x)` for every `x` in the window.
pub fn density_profile<K: Kernel + ?Sized>(kernel: &K, t: f64, window: RangeInclusive<i64>) -> Result<Vec<f64>> {
    ensure_time("density_profile", t)?;
    window
        .map(|x| {
            let p = SpaceTimePoint { t, x };
            kernel.eval(p, p)
        })
        .collect()
}

/// Test functions `χ_{t_m}(x) = e^{f_{t_m}(x)} - 1` with finite support.
/// `χ = -1` (`f = -∞`) is allowed and gives void probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSet {
    groups: Vec<(f64, Vec<(i64, f64)>)>,
}

impl TestFunctionSet {
    /// From `(t_m, [(x, f(x))])`, times strictly increasing.
    pub fn from_f(groups: Vec<(f64, Vec<(i64, f64)>)>) -> Result<Self> {
        let chi = groups
            .into_iter()
            .map(|(t, fs)| (t, fs.into_iter().map(|(x, f)| (x, f.exp_m1())).collect()))
            .collect();
        Self::from_chi(chi)
    }

    /// From `(t_m, [(x, χ(x))])` directly, `χ >= -1`.
    pub fn from_chi(groups: Vec<(f64, Vec<(i64, f64)>)>) -> Result<Self> {
        const OP: &str = "TestFunctionSet";
        for (t, values) in &groups {
            ensure_time(OP, *t)?;
            let mut sites: Vec<i64> = values.iter().map(|v| v.0).collect();
            sites.sort_unstable();
            if sites.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(OP, format!("repeated site at time {t}")));
            }
            for &(_, chi) in values {
                ensure_finite(OP, "chi", chi)?;
                if chi < -1.0 {
                    return Err(Error::invalid(OP, format!("chi must be >= -1, got {chi}")));
                }
            }
        }
        if groups.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(OP, "times must be strictly increasing"));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[(f64, Vec<(i64, f64)>)] {
        &self.groups
    }

    /// Support points with their `χ` values, in time order.
    pub fn support(&self) -> Vec<(SpaceTimePoint, f64)> {
        self.groups
            .iter()
            .flat_map(|(t, values)| values.iter().map(move |&(x, chi)| (SpaceTimePoint { t: *t, x }, chi)))
            .collect()
    }
}

/// `Det[δ + Kχ]` over the finite support of `χ`.
pub fn fredholm_generating_function<K: Kernel + ?Sized>(kernel: &K, tests: &TestFunctionSet) -> Result<f64> {
    let support = tests.support();
    let n = support.len();
    if n > MAX_FREDHOLM_POINTS {
        return Err(Error::TooLarge {
            operation: "fredholm_generating_function",
            size: n,
            limit: MAX_FREDHOLM_POINTS,
        });
    }
    let mut m = Matrix::identity(n);
    for (i, &(p, _)) in support.iter().enumerate() {
        for (j, &(q, chi)) in support.iter().enumerate() {
            if chi != 0.0 {
                m[(i, j)] += kernel.eval(p, q)? * chi;
            }
        }
    }
    Ok(m.determinant())
}

/// A correlation value with an optional standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEntry {
    pub points: MultiTimePointSet,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationTable {
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationTable {
    /// Analytic values for every point set.
    pub fn analytic<K: Kernel + Sync + ?Sized>(kernel: &K, sets: &[MultiTimePointSet]) -> Result<Self> {
        let entry = |pts: &MultiTimePointSet| {
            correlation_function(kernel, pts).map(|value| CorrelationEntry {
                points: pts.clone(),
                value,
                std_error: None,
            })
        };
        #[cfg(feature = "parallel")]
        let entries = {
            use rayon::prelude::*;
            sets.par_iter().map(entry).collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let entries = sets.iter().map(entry).collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Gauge, KernelSpec, KernelVariant};
    use crate::martingale::FiniteConfiguration;
    use crate::Tolerances;

    fn finite(sites: &[i64]) -> KernelSpec {
        KernelSpec::new(
            KernelVariant::Finite(FiniteConfiguration::new(sites.to_vec()).unwrap()),
            Gauge::Probability,
        )
    }

    /// `Σ_{S ⊆ support} Π_{s∈S} χ(s) · det K_S`, the expansion of the
    /// generating function in correlation functions.
    fn subset_sum<K: Kernel>(kernel: &K, support: &[(SpaceTimePoint, f64)]) -> f64 {
        let n = support.len();
        let mut total = 0.0;
        for mask in 0u32..1 << n {
            let chosen: Vec<_> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| support[i]).collect();
            let weight: f64 = chosen.iter().map(|c| c.1).product();
            if weight == 0.0 {
                continue;
            }
            let points: Vec<_> = chosen.iter().map(|c| c.0).collect();
            total += weight * kernel_determinant(kernel, &points).unwrap();
        }
        total
    }

    #[test]
    fn trivial_single_points() {
        let spec = finite(&[0, 2]);
        let k = spec.with_tolerances(Tolerances::default());
        assert_eq!(correlation_function(&k, &MultiTimePointSet::at(0.0, vec![0]).unwrap()).unwrap(), 1.0);
        assert_eq!(correlation_function(&k, &MultiTimePointSet::at(0.0, vec![1]).unwrap()).unwrap(), 0.0);
        assert_eq!(
            density_profile(&k, 0.0, -3..=5).unwrap(),
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn trace_identity() {
        let spec = finite(&[-2, 0, 3]);
        let k = spec.with_tolerances(Tolerances::default());
        for t in [0.5, 1.0, 2.0] {
            let rho = density_profile(&k, t, -40..=40).unwrap();
            assert!(rho.iter().all(|&r| (-1e-8..=1.0 + 1e-8).contains(&r)));
            let total: f64 = rho.iter().sum();
            assert!((total - 3.0).abs() < 1e-6, "{t}: {total}");
        }
    }

    #[test]
    fn point_set_validation() {
        assert!(MultiTimePointSet::new(vec![(1.0, vec![0]), (0.5, vec![1])]).is_err());
        assert!(MultiTimePointSet::at(1.0, vec![2, 1]).is_err());
        assert!(MultiTimePointSet::at(-1.0, vec![0]).is_err());
        let k = finite(&[0, 2]);
        let big = MultiTimePointSet::at(1.0, (0..13).collect()).unwrap();
        assert!(matches!(
            correlation_function(&k.with_tolerances(Tolerances::default()), &big),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn generating_function_trivial_cases() {
        let spec = finite(&[0, 2]);
        let k = spec.with_tolerances(Tolerances::default());
        let zero = TestFunctionSet::from_chi(vec![(1.0, vec![(0, 0.0), (1, 0.0)])]).unwrap();
        assert_eq!(fredholm_generating_function(&k, &zero).unwrap(), 1.0);
        let void = |sites: Vec<i64>| {
            TestFunctionSet::from_chi(vec![(0.0, sites.into_iter().map(|x| (x, -1.0)).collect())]).unwrap()
        };
        assert!(fredholm_generating_function(&k, &void(vec![-1, 0, 1])).unwrap().abs() < 1e-15);
        assert_eq!(fredholm_generating_function(&k, &void(vec![-1, 1, 3])).unwrap(), 1.0);
    }

    #[test]
    fn generating_function_matches_subset_sum() {
        let spec = finite(&[-2, 0, 3]);
        let k = spec.with_tolerances(Tolerances::default());
        let tests = TestFunctionSet::from_f(vec![
            (0.4, vec![(-1, 0.3), (0, -0.7), (2, 0.2)]),
            (1.1, vec![(-2, -0.5), (0, 0.4), (1, -1.2), (3, 0.1)]),
        ])
        .unwrap();
        let direct = fredholm_generating_function(&k, &tests).unwrap();
        let oracle = subset_sum(&k, &tests.support());
        assert!((direct - oracle).abs() < 1e-10, "{direct} vs {oracle}");
    }

    #[test]
    fn permutation_invariance() {
        let spec = finite(&[-2, 0, 3]);
        let k = spec.with_tolerances(Tolerances::default());
        let pts = MultiTimePointSet::new(vec![(0.5, vec![-1, 0, 2]), (1.0, vec![1, 3])]).unwrap();
        let base = correlation_function(&k, &pts).unwrap();
        let mut shuffled = pts.points();
        shuffled.swap(0, 2);
        shuffled.swap(3, 4);
        let other = kernel_determinant(&k, &shuffled).unwrap();
        assert!((base - other).abs() < 1e-12, "{base} vs {other}");
    }
}
