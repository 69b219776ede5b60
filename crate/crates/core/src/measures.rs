//! Distances between concepts and the quantitative drift measures built on
//! them: magnitude, duration, path length, drift rate and frequency.
//!
//! Path length and drift rate are limits; here they are evaluated on finite
//! grids. For a metric distance the path-length sum only grows under grid
//! refinement (triangle inequality), so it converges from below.

use std::fmt;
use std::str::FromStr;

use crate::distribution::{CovariateDistribution, JointConcept, PosteriorTable};
use crate::error::{DriftError, Result};
use crate::trajectory::ConceptTrajectory;

pub const DEFAULT_PATH_GRID: usize = 1024;
pub const DEFAULT_RATE_N: f64 = 1000.0;

/// Which distance between concepts to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceFunction {
    /// Hellinger distance between the joint tables `P(X, Y)`.
    HellingerJoint,
    /// Mean over cells of the per-cell Hellinger distance between posterior
    /// rows. Equals `k / C` for one-hot tables differing in `k` cells.
    HellingerPosteriorPaper,
    /// `(1/sqrt 2) * ||P_a(X) - P_b(X)||_2` over the joint covariate table,
    /// with no square roots over the probabilities.
    HellingerCovariatePaper,
    /// Standard Hellinger distance between the joint covariate tables.
    HellingerCovariateStandard,
    /// Half the L1 distance between the joint tables.
    TotalVariationJoint,
}

impl DistanceFunction {
    pub const ALL: [DistanceFunction; 5] = [
        DistanceFunction::HellingerJoint,
        DistanceFunction::HellingerPosteriorPaper,
        DistanceFunction::HellingerCovariatePaper,
        DistanceFunction::HellingerCovariateStandard,
        DistanceFunction::TotalVariationJoint,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            DistanceFunction::HellingerJoint => "hellinger-joint",
            DistanceFunction::HellingerPosteriorPaper => "hellinger-posterior",
            DistanceFunction::HellingerCovariatePaper => "hellinger-covariate",
            DistanceFunction::HellingerCovariateStandard => "hellinger-covariate-standard",
            DistanceFunction::TotalVariationJoint => "total-variation-joint",
        }
    }

    /// All variants satisfy the metric axioms on the distributions they
    /// read. The posterior and covariate variants ignore the other factor,
    /// so on whole concepts they are pseudometrics.
    pub fn is_metric(&self) -> bool {
        true
    }

    pub fn distance(&self, a: &JointConcept, b: &JointConcept) -> Result<f64> {
        match self {
            DistanceFunction::HellingerJoint => hellinger_joint(a, b),
            DistanceFunction::HellingerPosteriorPaper => {
                a.ensure_same_schema(b)?;
                hellinger_posterior_paper(a.posterior(), b.posterior())
            }
            DistanceFunction::HellingerCovariatePaper => {
                a.ensure_same_schema(b)?;
                hellinger_covariate_paper(a.covariates(), b.covariates())
            }
            DistanceFunction::HellingerCovariateStandard => {
                a.ensure_same_schema(b)?;
                hellinger_covariate_standard(a.covariates(), b.covariates())
            }
            DistanceFunction::TotalVariationJoint => total_variation_joint(a, b),
        }
    }
}

impl fmt::Display for DistanceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DistanceFunction {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|d| d.id() == s)
            .ok_or_else(|| DriftError::InvalidParameter(format!("unknown distance '{s}'")))
    }
}

fn hellinger_of_tables(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    (s / 2.0).sqrt()
}

pub fn hellinger_joint(a: &JointConcept, b: &JointConcept) -> Result<f64> {
    a.ensure_same_schema(b)?;
    Ok(hellinger_of_tables(&a.joint_table(), &b.joint_table()))
}

pub fn hellinger_posterior_paper(a: &PosteriorTable, b: &PosteriorTable) -> Result<f64> {
    if a.n_classes() != b.n_classes() || a.cell_count() != b.cell_count() {
        return Err(DriftError::SchemaMismatch("posterior tables differ in shape".into()));
    }
    let total: f64 = a.rows().zip(b.rows()).map(|(p, q)| hellinger_of_tables(p, q)).sum();
    Ok(total / a.cell_count() as f64)
}

fn covariate_tables(a: &CovariateDistribution, b: &CovariateDistribution) -> Result<(Vec<f64>, Vec<f64>)> {
    let (p, q) = (a.cell_table(), b.cell_table());
    if p.len() != q.len() {
        return Err(DriftError::SchemaMismatch("covariate tables differ in size".into()));
    }
    Ok((p, q))
}

pub fn hellinger_covariate_paper(a: &CovariateDistribution, b: &CovariateDistribution) -> Result<f64> {
    let (p, q) = covariate_tables(a, b)?;
    let s: f64 = p.iter().zip(&q).map(|(x, y)| (y - x) * (y - x)).sum();
    Ok(s.sqrt() / std::f64::consts::SQRT_2)
}

pub fn hellinger_covariate_standard(a: &CovariateDistribution, b: &CovariateDistribution) -> Result<f64> {
    let (p, q) = covariate_tables(a, b)?;
    Ok(hellinger_of_tables(&p, &q))
}

pub fn total_variation_joint(a: &JointConcept, b: &JointConcept) -> Result<f64> {
    a.ensure_same_schema(b)?;
    let s: f64 = a
        .joint_table()
        .iter()
        .zip(b.joint_table())
        .map(|(p, q)| (p - q).abs())
        .sum();
    Ok(s / 2.0)
}

/// Quantitative summary of the drift over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMeasures {
    pub magnitude: f64,
    pub duration: f64,
    pub path_length: f64,
    /// `path_length / duration`; infinite for an instantaneous jump and zero
    /// for an empty, jump-free interval.
    pub average_rate: f64,
}

impl DriftMeasures {
    pub fn new(magnitude: f64, duration: f64, path_length: f64) -> Self {
        Self {
            magnitude,
            duration,
            path_length,
            average_rate: average_rate(path_length, duration),
        }
    }
}

pub fn average_rate(path_length: f64, duration: f64) -> f64 {
    if duration > 0.0 {
        path_length / duration
    } else if path_length > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn check_interval(trajectory: &ConceptTrajectory, t: f64, u: f64) -> Result<()> {
    trajectory.check_time(t)?;
    trajectory.check_time(u)?;
    if u < t {
        return Err(DriftError::InvalidInterval { t, u });
    }
    Ok(())
}

/// Distance between the concepts at `t` and `u`.
pub fn magnitude(trajectory: &ConceptTrajectory, t: f64, u: f64, d: DistanceFunction) -> Result<f64> {
    check_interval(trajectory, t, u)?;
    d.distance(&trajectory.concept_at(t)?, &trajectory.concept_at(u)?)
}

pub fn duration(t: f64, u: f64) -> Result<f64> {
    if u < t {
        return Err(DriftError::InvalidInterval { t, u });
    }
    Ok(u - t)
}

/// Sum of distances between consecutive concepts on a uniform grid of
/// `grid_n` steps over `[t, u]`.
pub fn path_length(
    trajectory: &ConceptTrajectory,
    t: f64,
    u: f64,
    d: DistanceFunction,
    grid_n: usize,
) -> Result<f64> {
    check_interval(trajectory, t, u)?;
    if grid_n == 0 {
        return Err(DriftError::InvalidParameter("grid_n must be >= 1".into()));
    }
    let step = (u - t) / grid_n as f64;
    let mut prev = trajectory.concept_at(t)?;
    let mut total = 0.0;
    for k in 1..=grid_n {
        let time = if k == grid_n { u } else { t + k as f64 * step };
        let next = trajectory.concept_at(time)?;
        total += d.distance(&prev, &next)?;
        prev = next;
    }
    Ok(total)
}

/// Finite-`n` drift rate `n * D(t - 0.5/n, t + 0.5/n)`.
///
/// At a kink or jump in the trajectory the symmetric value does not
/// converge as `n` grows; it is reported as is.
pub fn drift_rate(trajectory: &ConceptTrajectory, t: f64, n: f64, d: DistanceFunction) -> Result<f64> {
    if !(n > 0.0) {
        return Err(DriftError::InvalidParameter("rate n must be positive".into()));
    }
    let (lo, hi) = (t - 0.5 / n, t + 0.5 / n);
    trajectory.check_time(lo)?;
    trajectory.check_time(hi)?;
    Ok(n * d.distance(&trajectory.concept_at(lo)?, &trajectory.concept_at(hi)?)?)
}

/// All four interval measures at once.
pub fn measure_interval(
    trajectory: &ConceptTrajectory,
    t: f64,
    u: f64,
    d: DistanceFunction,
    grid_n: usize,
) -> Result<DriftMeasures> {
    let m = magnitude(trajectory, t, u, d)?;
    let p = path_length(trajectory, t, u, d, grid_n)?;
    Ok(DriftMeasures::new(m, duration(t, u)?, p))
}

/// Number of stable segments whose start lies in `[t, u]`.
pub fn drift_frequency(segment_starts: impl IntoIterator<Item = f64>, t: f64, u: f64) -> usize {
    segment_starts.into_iter().filter(|&s| t <= s && s <= u).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::AttributeSchema;
    use crate::trajectory::{Law, PiecewiseLinear, Segment};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn one_attr(p0: f64, classes: [usize; 2]) -> JointConcept {
        let s = AttributeSchema::new(1, 2, 2).unwrap();
        JointConcept::new(
            s,
            CovariateDistribution::independent(&s, vec![vec![p0, 1.0 - p0]]).unwrap(),
            PosteriorTable::from_assignments(&s, &classes).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_and_disjoint_support() {
        let a = one_attr(0.5, [0, 1]);
        let b = one_attr(0.5, [1, 0]);
        assert_eq!(hellinger_joint(&a, &a).unwrap(), 0.0);
        // every joint entry of a is zero in b: sum of squares is 2, distance 1
        assert!((hellinger_joint(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!((total_variation_joint(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn posterior_distance_counts_changed_cells() {
        let s = AttributeSchema::benchmark();
        let base: Vec<usize> = (0..243).map(|c| c % 3).collect();
        let a = PosteriorTable::from_assignments(&s, &base).unwrap();
        assert_eq!(hellinger_posterior_paper(&a, &a).unwrap(), 0.0);
        let mut one = base.clone();
        one[17] = (one[17] + 1) % 3;
        let b = PosteriorTable::from_assignments(&s, &one).unwrap();
        assert!((hellinger_posterior_paper(&a, &b).unwrap() - 1.0 / 243.0).abs() < 1e-15);
        let mut k = base.clone();
        for c in 0..100 {
            k[c * 2] = (k[c * 2] + 2) % 3;
        }
        let b = PosteriorTable::from_assignments(&s, &k).unwrap();
        assert!((hellinger_posterior_paper(&a, &b).unwrap() - 100.0 / 243.0).abs() < 1e-15);
    }

    #[test]
    fn covariate_formulas_on_two_point_masses() {
        let s = AttributeSchema::new(1, 2, 2).unwrap();
        let p = CovariateDistribution::independent(&s, vec![vec![1.0, 0.0]]).unwrap();
        let q = CovariateDistribution::independent(&s, vec![vec![0.0, 1.0]]).unwrap();
        assert!((hellinger_covariate_paper(&p, &q).unwrap() - 1.0).abs() < 1e-15);
        assert!((hellinger_covariate_standard(&p, &q).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hellinger_covariate_paper(&p, &p).unwrap(), 0.0);
        assert_eq!(hellinger_covariate_standard(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_on_random_pairs() {
        let s = AttributeSchema::new(3, 3, 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        for _ in 0..50 {
            let a = JointConcept::sample(&s, &mut rng);
            let b = JointConcept::sample(&s, &mut rng);
            for d in DistanceFunction::ALL {
                assert_eq!(d.distance(&a, &b).unwrap(), d.distance(&b, &a).unwrap(), "{d}");
            }
        }
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let a = one_attr(0.5, [0, 1]);
        let b = JointConcept::sample(&AttributeSchema::new(2, 2, 2).unwrap(), &mut ChaCha20Rng::seed_from_u64(1));
        for d in DistanceFunction::ALL {
            assert!(d.distance(&a, &b).is_err());
        }
    }

    #[test]
    fn distance_ids_round_trip() {
        for d in DistanceFunction::ALL {
            assert_eq!(d.id().parse::<DistanceFunction>().unwrap(), d);
        }
        assert!("kl".parse::<DistanceFunction>().is_err());
    }

    #[test]
    fn duration_examples() {
        assert_eq!(duration(3.0, 7.0).unwrap(), 4.0);
        assert_eq!(duration(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(duration(100000.0, 100001.0).unwrap(), 1.0);
        assert!(duration(2.0, 1.0).is_err());
    }

    #[test]
    fn constant_trajectory_measures_vanish() {
        let a = one_attr(0.3, [0, 1]);
        let tr = ConceptTrajectory::constant(a, 0.0, 10.0).unwrap();
        for d in DistanceFunction::ALL {
            assert_eq!(magnitude(&tr, 2.0, 8.0, d).unwrap(), 0.0);
            assert_eq!(path_length(&tr, 0.0, 10.0, d, 7).unwrap(), 0.0);
            assert_eq!(drift_rate(&tr, 5.0, 1000.0, d).unwrap(), 0.0);
        }
        assert_eq!(magnitude(&tr, 4.0, 4.0, DistanceFunction::HellingerJoint).unwrap(), 0.0);
        assert!(magnitude(&tr, 4.0, 11.0, DistanceFunction::HellingerJoint).is_err());
        assert!(magnitude(&tr, 5.0, 4.0, DistanceFunction::HellingerJoint).is_err());
        assert!(path_length(&tr, 0.0, 1.0, DistanceFunction::HellingerJoint, 0).is_err());
        assert!(drift_rate(&tr, 0.0, 1000.0, DistanceFunction::HellingerJoint).is_err());
    }

    #[test]
    fn average_rate_identity() {
        let a = one_attr(0.3, [0, 1]);
        let b = one_attr(0.6, [1, 1]);
        let tr = ConceptTrajectory::new(vec![Segment::new(
            0.0,
            50.0,
            Law::Mixture {
                from: a,
                to: b,
                weight: PiecewiseLinear::new(vec![(0.0, 0.0), (0.3, 0.7), (1.0, 1.0)]).unwrap(),
            },
        )])
        .unwrap();
        let m = measure_interval(&tr, 5.0, 45.0, DistanceFunction::HellingerJoint, 256).unwrap();
        assert!((m.average_rate * m.duration - m.path_length).abs() < 1e-9);
        assert_eq!(average_rate(0.0, 0.0), 0.0);
        assert!(average_rate(0.5, 0.0).is_infinite());
    }

    #[test]
    fn frequency_counts_starts_in_window() {
        let starts = [0.0, 10.0, 20.0, 30.0];
        assert_eq!(drift_frequency(starts, 11.0, 19.0), 0);
        assert_eq!(drift_frequency(starts, 10.0, 20.0), 2);
        assert_eq!(drift_frequency(starts, 0.0, 30.0), 4);
    }
}
