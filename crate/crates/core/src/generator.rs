//! Synthetic streams with abrupt drift of a requested magnitude.
//!
//! Class drift keeps `P(X)` and flips the one-hot posterior in `k` cells,
//! where `k = round(target * C)`: the mean per-cell posterior Hellinger
//! distance is then exactly `k / C`. Covariate drift keeps `P(Y|X)` and
//! searches a mixing path in covariate space for the requested distance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::distribution::{
    draw_instance, sample_covariate_distribution, sample_flat_dirichlet, sample_posterior_table, AttributeSchema,
    CovariateDistribution, JointConcept, PosteriorTable,
};
use crate::error::{DriftError, Result};
use crate::measures::{hellinger_covariate_paper, hellinger_covariate_standard, hellinger_posterior_paper};
use crate::rng::{stream_rng, Purpose};
use crate::trajectory::ConceptTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriftKind {
    PureClass,
    PureCovariate,
    None,
}

impl DriftKind {
    pub fn id(&self) -> &'static str {
        match self {
            DriftKind::PureClass => "pure-class",
            DriftKind::PureCovariate => "pure-covariate",
            DriftKind::None => "none",
        }
    }
}

impl fmt::Display for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DriftKind {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure-class" => Ok(DriftKind::PureClass),
            "pure-covariate" => Ok(DriftKind::PureCovariate),
            "none" => Ok(DriftKind::None),
            _ => Err(DriftError::InvalidParameter(format!("unknown drift kind '{s}'"))),
        }
    }
}

/// Distance the covariate search aims at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariateDistance {
    /// `(1/sqrt 2) ||p - q||_2`, no square roots over probabilities.
    Paper,
    /// Standard Hellinger.
    Standard,
}

impl CovariateDistance {
    pub fn id(&self) -> &'static str {
        match self {
            CovariateDistance::Paper => "paper",
            CovariateDistance::Standard => "standard",
        }
    }

    pub fn distance(&self, a: &CovariateDistribution, b: &CovariateDistribution) -> Result<f64> {
        match self {
            CovariateDistance::Paper => hellinger_covariate_paper(a, b),
            CovariateDistance::Standard => hellinger_covariate_standard(a, b),
        }
    }
}

impl FromStr for CovariateDistance {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(CovariateDistance::Paper),
            "standard" => Ok(CovariateDistance::Standard),
            _ => Err(DriftError::InvalidParameter(format!("unknown covariate distance '{s}'"))),
        }
    }
}

/// Settings for the covariate-drift search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateSearch {
    pub distance: CovariateDistance,
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for CovariateSearch {
    fn default() -> Self {
        Self {
            distance: CovariateDistance::Paper,
            tol: 1e-3,
            max_restarts: 20,
        }
    }
}

/// Declarative request for a drifting stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub kind: DriftKind,
    pub target_magnitude: f64,
    /// Last step drawn from the initial concept.
    pub drift_time: u64,
    /// Steps are numbered `1..=length`.
    pub length: u64,
    pub schema: AttributeSchema,
    pub seed: u64,
    pub replicate_count: usize,
    pub covariate_search: CovariateSearch,
}

impl Default for DriftSpec {
    fn default() -> Self {
        Self {
            kind: DriftKind::PureClass,
            target_magnitude: 0.5,
            drift_time: 10_000,
            length: 30_000,
            schema: AttributeSchema::benchmark(),
            seed: 1,
            replicate_count: 20,
            covariate_search: CovariateSearch::default(),
        }
    }
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_magnitude) {
            return Err(DriftError::InvalidParameter(format!(
                "target magnitude {} outside [0, 1]",
                self.target_magnitude
            )));
        }
        if self.drift_time == 0 || self.drift_time >= self.length {
            return Err(DriftError::InvalidParameter(format!(
                "drift time {} must lie strictly inside (0, {})",
                self.drift_time, self.length
            )));
        }
        if self.replicate_count == 0 {
            return Err(DriftError::InvalidParameter("replicate_count must be >= 1".into()));
        }
        if !(self.covariate_search.tol > 0.0) {
            return Err(DriftError::InvalidParameter("covariate tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Two concepts a drift moves between, with how the second was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftPair {
    pub before: JointConcept,
    pub after: JointConcept,
    pub achieved_magnitude: f64,
    /// Cells whose class was changed (class drift).
    pub k_flipped: Option<usize>,
    /// Bisection steps summed over attempts (covariate drift).
    pub search_iterations: Option<usize>,
    pub restarts: usize,
    pub warnings: Vec<String>,
}

/// Ground truth attached to a generated stream.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub kind: DriftKind,
    pub target_magnitude: f64,
    pub trajectory: ConceptTrajectory,
    pub achieved_magnitude: f64,
    pub k_flipped: Option<usize>,
    pub search_iterations: Option<usize>,
    pub restarts: usize,
    pub warnings: Vec<String>,
}

impl GroundTruth {
    pub fn before(&self) -> &JointConcept {
        match &self.trajectory.segments()[0].law {
            crate::trajectory::Law::Constant(c) => c,
            _ => unreachable!("generated trajectories are piecewise constant"),
        }
    }

    pub fn after(&self) -> &JointConcept {
        let segs = self.trajectory.segments();
        match &segs[segs.len() - 1].law {
            crate::trajectory::Law::Constant(c) => c,
            _ => unreachable!("generated trajectories are piecewise constant"),
        }
    }
}

/// One timestamped instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRecord {
    pub step: u64,
    pub x: Vec<usize>,
    pub y: usize,
}

/// Number of cells to flip for a target magnitude, and a warning when a
/// positive target would otherwise round to no drift at all.
pub fn cells_to_flip(target: f64, cells: usize) -> (usize, Option<String>) {
    let k = (target * cells as f64).round() as usize;
    if target > 0.0 && k == 0 {
        let msg = format!(
            "target {target} rounds to zero of {cells} cells; flipping one cell (magnitude {})",
            1.0 / cells as f64
        );
        return (1, Some(msg));
    }
    (k.min(cells), None)
}

/// Give `k` uniformly chosen cells of a one-hot table a different,
/// uniformly chosen class.
pub fn flip_cells<R: Rng + ?Sized>(
    schema: &AttributeSchema,
    table: &PosteriorTable,
    k: usize,
    rng: &mut R,
) -> Result<PosteriorTable> {
    let cells = schema.cell_count();
    if k > cells {
        return Err(DriftError::InvalidParameter(format!("cannot flip {k} of {cells} cells")));
    }
    if k > 0 && schema.n_classes() < 2 {
        return Err(DriftError::InvalidParameter("no alternative class to flip to".into()));
    }
    let mut classes: Vec<usize> = (0..cells)
        .map(|c| {
            table.assigned_class(c).ok_or_else(|| {
                DriftError::InvalidDistribution(format!("posterior row {c} is not one-hot"))
            })
        })
        .collect::<Result<_>>()?;
    // partial Fisher-Yates: the first k slots end up a uniform k-subset
    let mut order: Vec<usize> = (0..cells).collect();
    for i in 0..k {
        let j = rng.gen_range(i..cells);
        order.swap(i, j);
    }
    for &cell in &order[..k] {
        let old = classes[cell];
        let mut new = rng.gen_range(0..schema.n_classes() - 1);
        if new >= old {
            new += 1;
        }
        classes[cell] = new;
    }
    PosteriorTable::from_assignments(schema, &classes)
}

/// Pure class drift away from `before` with magnitude `round(target C) / C`.
pub fn class_drift_from<R: Rng + ?Sized>(before: &JointConcept, target: f64, rng: &mut R) -> Result<DriftPair> {
    if !(0.0..=1.0).contains(&target) {
        return Err(DriftError::InvalidParameter(format!("target magnitude {target} outside [0, 1]")));
    }
    let schema = before.schema();
    let (k, warning) = cells_to_flip(target, schema.cell_count());
    let posterior = flip_cells(schema, before.posterior(), k, rng)?;
    let after = before.with_posterior(posterior)?;
    let achieved = hellinger_posterior_paper(before.posterior(), after.posterior())?;
    Ok(DriftPair {
        before: before.clone(),
        after,
        achieved_magnitude: achieved,
        k_flipped: Some(k),
        search_iterations: None,
        restarts: 0,
        warnings: warning.into_iter().collect(),
    })
}

pub fn gen_class_drift_pair<R: Rng + ?Sized>(schema: &AttributeSchema, target: f64, rng: &mut R) -> Result<DriftPair> {
    let before = JointConcept::sample(schema, rng);
    class_drift_from(&before, target, rng)
}

fn along_path(p: &[Vec<f64>], q: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    p.iter()
        .zip(q)
        .map(|(pa, qa)| {
            let mut v: Vec<f64> = pa.iter().zip(qa).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        })
        .collect()
}

/// Each attribute's direction is a random vertex of its simplex; a flat
/// Dirichlet direction rarely gets far enough from `p` in a 243-cell table.
fn random_direction<R: Rng + ?Sized>(schema: &AttributeSchema, rng: &mut R) -> Vec<Vec<f64>> {
    (0..schema.n_attributes())
        .map(|_| {
            let mut v = vec![0.0; schema.arity()];
            v[rng.gen_range(0..schema.arity())] = 1.0;
            v
        })
        .collect()
}

const MONOTONE_SCAN_POINTS: usize = 100;
const MAX_BISECTION_STEPS: usize = 200;

/// Pure covariate drift away from `before` by random-direction bisection.
pub fn covariate_drift_from<R: Rng + ?Sized>(
    before: &JointConcept,
    target: f64,
    rng: &mut R,
    search: &CovariateSearch,
) -> Result<DriftPair> {
    if !(0.0..=1.0).contains(&target) {
        return Err(DriftError::InvalidParameter(format!("target magnitude {target} outside [0, 1]")));
    }
    if !(search.tol > 0.0) {
        return Err(DriftError::InvalidParameter("tolerance must be > 0".into()));
    }
    let schema = *before.schema();
    let p = match before.covariates() {
        CovariateDistribution::Independent { per_attribute } => per_attribute.clone(),
        CovariateDistribution::Joint { .. } => {
            return Err(DriftError::InvalidDistribution(
                "covariate drift search needs factored covariates".into(),
            ))
        }
    };
    let base = before.covariates().clone();
    let pair = |after: CovariateDistribution, achieved: f64, iters: usize, restarts: usize| -> Result<DriftPair> {
        Ok(DriftPair {
            before: before.clone(),
            after: before.with_covariates(after)?,
            achieved_magnitude: achieved,
            k_flipped: None,
            search_iterations: Some(iters),
            restarts,
            warnings: Vec::new(),
        })
    };
    if target <= search.tol {
        return pair(base, 0.0, 0, 0);
    }

    let distance_at = |q: &[Vec<f64>], lambda: f64| -> Result<(f64, CovariateDistribution)> {
        let cand = CovariateDistribution::Independent {
            per_attribute: along_path(&p, q, lambda),
        };
        Ok((search.distance.distance(&base, &cand)?, cand))
    };

    let mut best = 0.0f64;
    let mut iterations = 0;
    for restart in 0..=search.max_restarts {
        let q = random_direction(&schema, rng);
        let mut prev = 0.0;
        let mut monotone = true;
        for i in 1..=MONOTONE_SCAN_POINTS {
            let (d, _) = distance_at(&q, i as f64 / MONOTONE_SCAN_POINTS as f64)?;
            if d < prev - 1e-12 {
                monotone = false;
                break;
            }
            prev = d;
        }
        if !monotone {
            continue;
        }
        let (top, top_cand) = distance_at(&q, 1.0)?;
        if (top - target).abs() <= search.tol {
            return pair(top_cand, top, iterations, restart);
        }
        if top < target {
            if (top - target).abs() < (best - target).abs() {
                best = top;
            }
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..MAX_BISECTION_STEPS {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let (d, cand) = distance_at(&q, mid)?;
            if (d - target).abs() <= search.tol {
                return pair(cand, d, iterations, restart);
            }
            if (d - target).abs() < (best - target).abs() {
                best = d;
            }
            if d < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Err(DriftError::TargetUnreachable {
        target,
        best,
        restarts: search.max_restarts,
    })
}

pub fn gen_covariate_drift_pair<R: Rng + ?Sized>(
    schema: &AttributeSchema,
    target: f64,
    rng: &mut R,
    search: &CovariateSearch,
) -> Result<DriftPair> {
    let before = JointConcept::sample(schema, rng);
    covariate_drift_from(&before, target, rng, search)
}

/// A generated replicate: its records and the truth behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub replicate: usize,
    pub records: Vec<StreamRecord>,
    pub truth: GroundTruth,
}

/// Build the drift pair for one replicate without drawing any instances.
///
/// The initial concept depends only on `(seed, replicate)`, so specs that
/// differ only in magnitude share it, as well as their pre-drift instances.
pub fn ground_truth(spec: &DriftSpec, replicate: usize) -> Result<GroundTruth> {
    spec.validate()?;
    let r = replicate as u64;
    let mut base_rng = stream_rng(spec.seed, r, Purpose::BaseConcept);
    let covariates = sample_covariate_distribution(&spec.schema, &mut base_rng);
    let posterior = sample_posterior_table(&spec.schema, &mut base_rng);
    let before = JointConcept::new(spec.schema, covariates, posterior)?;
    let mut drift_rng = stream_rng(spec.seed, r, Purpose::Drift);
    let pair = match spec.kind {
        DriftKind::PureClass => class_drift_from(&before, spec.target_magnitude, &mut drift_rng)?,
        DriftKind::PureCovariate => {
            covariate_drift_from(&before, spec.target_magnitude, &mut drift_rng, &spec.covariate_search)?
        }
        DriftKind::None => DriftPair {
            before: before.clone(),
            after: before.clone(),
            achieved_magnitude: 0.0,
            k_flipped: None,
            search_iterations: None,
            restarts: 0,
            warnings: Vec::new(),
        },
    };
    let (start, switch, end) = (0.0, spec.drift_time as f64, spec.length as f64);
    let trajectory = match spec.kind {
        DriftKind::None => ConceptTrajectory::constant(pair.before.clone(), start, end)?,
        _ => ConceptTrajectory::piecewise_constant(vec![pair.before.clone(), pair.after.clone()], start, &[switch], end)?,
    };
    Ok(GroundTruth {
        kind: spec.kind,
        target_magnitude: spec.target_magnitude,
        trajectory,
        achieved_magnitude: pair.achieved_magnitude,
        k_flipped: pair.k_flipped,
        search_iterations: pair.search_iterations,
        restarts: pair.restarts,
        warnings: pair.warnings,
    })
}

/// Generate replicate `replicate` of `spec`.
pub fn generate_replicate(spec: &DriftSpec, replicate: usize) -> Result<GeneratedStream> {
    let truth = ground_truth(spec, replicate)?;
    let r = replicate as u64;
    let mut rng_before = stream_rng(spec.seed, r, Purpose::InstancesBefore);
    let mut rng_after = stream_rng(spec.seed, r, Purpose::InstancesAfter);
    let (before, after) = (truth.before().clone(), truth.after().clone());
    let records = (1..=spec.length)
        .map(|step| {
            let (x, y) = if step <= spec.drift_time {
                draw_instance(&before, &mut rng_before)
            } else {
                draw_instance(&after, &mut rng_after)
            };
            StreamRecord { step, x, y }
        })
        .collect();
    Ok(GeneratedStream {
        replicate,
        records,
        truth,
    })
}

/// Replicate 0 of `spec`.
pub fn generate_stream(spec: &DriftSpec) -> Result<(Vec<StreamRecord>, GroundTruth)> {
    let g = generate_replicate(spec, 0)?;
    Ok((g.records, g.truth))
}

/// All replicates, generated in parallel and returned in replicate order.
pub fn generate_replicates(spec: &DriftSpec) -> Result<Vec<GeneratedStream>> {
    spec.validate()?;
    (0..spec.replicate_count)
        .into_par_iter()
        .map(|r| generate_replicate(spec, r))
        .collect()
}

/// Draw a fresh random covariate distribution (flat Dirichlet per attribute).
pub fn random_covariates<R: Rng + ?Sized>(schema: &AttributeSchema, rng: &mut R) -> CovariateDistribution {
    CovariateDistribution::Independent {
        per_attribute: (0..schema.n_attributes())
            .map(|_| sample_flat_dirichlet(schema.arity(), rng))
            .collect(),
    }
}
