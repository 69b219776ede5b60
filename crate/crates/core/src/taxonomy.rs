//! Executable drift categories over ground-truth trajectories.
//!
//! A trajectory is cut into stable segments `[S_a, E_a]` (the concept does
//! not move for at least `phi` time units) separated by drift episodes
//! `(E_a, S_{a+1})`. Episode-level categories (abrupt/extended, minor/major,
//! gradual, incremental, probabilistic) and sequence-level ones (blip,
//! recurring, cyclical and its fixed-period variants) are predicates over
//! that segmentation. Every equality to zero uses `eps_zero`, every equality
//! between times uses `eps_time`.

use crate::distribution::{class_marginal, JointConcept};
use crate::error::{DriftError, Result};
use crate::measures::{DistanceFunction, DriftMeasures};
use crate::trajectory::ConceptTrajectory;

/// Thresholds for the qualitative categories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxonomyParams {
    /// Minimum duration for a concept to count as stable.
    pub phi: f64,
    /// Maximum duration of an abrupt drift.
    pub delta: f64,
    /// Maximum duration of a blip.
    pub beta: f64,
    /// Minor/major magnitude threshold.
    pub gamma: f64,
    /// Window for the gradual test.
    pub nu: f64,
    /// Largest distance allowed over a `nu` window for gradual drift.
    pub mu: f64,
    pub eps_zero: f64,
    /// Number of concepts in a cycle.
    pub cycle_i: usize,
    /// Fixed cycle duration.
    pub cycle_m: f64,
    pub eps_time: f64,
    /// Largest per-outcome residual accepted by the mixture fit.
    pub probabilistic_tol: f64,
}

impl Default for TaxonomyParams {
    fn default() -> Self {
        Self {
            phi: 1.0,
            delta: 1.0,
            beta: 1.0,
            gamma: 0.5,
            nu: 1.0,
            mu: 0.1,
            eps_zero: 1e-9,
            cycle_i: 2,
            cycle_m: 0.0,
            eps_time: 0.0,
            probabilistic_tol: 1e-9,
        }
    }
}

impl TaxonomyParams {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("phi", self.phi),
            ("delta", self.delta),
            ("beta", self.beta),
            ("cycle_m", self.cycle_m),
            ("eps_zero", self.eps_zero),
            ("eps_time", self.eps_time),
            ("probabilistic_tol", self.probabilistic_tol),
        ];
        for (name, v) in durations {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DriftError::InvalidParameter(format!("{name} must be a finite value >= 0")));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("nu", self.nu), ("mu", self.mu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DriftError::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        if self.cycle_i == 0 {
            return Err(DriftError::InvalidParameter("cycle_i must be >= 1".into()));
        }
        Ok(())
    }
}

/// A maximal period of concept stability.
#[derive(Debug, Clone, PartialEq)]
pub struct StableSegment {
    /// One-based position in the segmentation.
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub concept: JointConcept,
}

impl StableSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationClass {
    Abrupt,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagnitudeClass {
    Minor,
    Major,
}

/// Which parts of the joint distribution changed between two concepts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectFlags {
    pub class_drift: bool,
    pub pure_class_drift: bool,
    pub subconcept: bool,
    pub full_concept: bool,
    pub covariate_drift: bool,
    pub pure_covariate_drift: bool,
    /// Fraction of cells whose posterior row changed.
    pub drift_scope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLabels {
    pub duration: DurationClass,
    pub magnitude: MagnitudeClass,
    pub gradual: bool,
    pub incremental: bool,
    /// `None` when the endpoint concepts coincide and no mixture weight exists.
    pub probabilistic: Option<bool>,
    pub subject: SubjectFlags,
}

/// The drift between stable segments `a` and `a + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEpisode {
    /// Zero-based position of the segment the drift leaves.
    pub from_segment: usize,
    pub to_segment: usize,
    /// `E_a`.
    pub start: f64,
    /// `S_{a+1}`.
    pub end: f64,
    pub from_concept: JointConcept,
    pub to_concept: JointConcept,
    pub measures: DriftMeasures,
    pub labels: EpisodeLabels,
}

impl DriftEpisode {
    pub fn gap(&self) -> f64 {
        self.end - self.start
    }

    /// Concept at `t`, pinned to the segment concepts at and beyond the
    /// episode boundaries.
    fn concept_at(&self, trajectory: &ConceptTrajectory, t: f64) -> Result<JointConcept> {
        if t <= self.start {
            Ok(self.from_concept.clone())
        } else if t >= self.end {
            Ok(self.to_concept.clone())
        } else {
            trajectory.concept_at(t)
        }
    }
}

struct Piece {
    start: f64,
    end: f64,
    concept: JointConcept,
    constant: bool,
}

fn elementary_pieces(
    trajectory: &ConceptTrajectory,
    d: DistanceFunction,
    eps: f64,
    sample_step: f64,
) -> Result<Vec<Piece>> {
    const MAX_SAMPLES_PER_PIECE: usize = 4096;
    let mut out = Vec::new();
    for seg in trajectory.segments() {
        let bps = seg.law.breakpoints();
        for w in bps.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let start = seg.start + s0 * seg.length();
            let end = seg.start + s1 * seg.length();
            if end <= start {
                continue;
            }
            let first = seg.law.eval(s0)?;
            let last = seg.law.eval(s1)?;
            let mut constant = d.distance(&first, &last)? <= eps;
            if constant {
                let n = (((end - start) / sample_step).ceil() as usize).clamp(1, MAX_SAMPLES_PER_PIECE);
                for k in 1..n {
                    let s = s0 + (s1 - s0) * k as f64 / n as f64;
                    if d.distance(&first, &seg.law.eval(s)?)? > eps {
                        constant = false;
                        break;
                    }
                }
            }
            out.push(Piece {
                start,
                end,
                concept: first,
                constant,
            });
        }
    }
    Ok(out)
}

/// Maximal intervals of length at least `phi` over which the concept does
/// not move (every distance within `eps_zero`).
///
/// Constancy is decided on the trajectory's own linear pieces, additionally
/// sampled every `sample_step` time units.
pub fn segment_stable_periods(
    trajectory: &ConceptTrajectory,
    d: DistanceFunction,
    params: &TaxonomyParams,
    sample_step: f64,
) -> Result<Vec<StableSegment>> {
    params.validate()?;
    if !(sample_step > 0.0) {
        return Err(DriftError::InvalidParameter("sample_step must be > 0".into()));
    }
    let pieces = elementary_pieces(trajectory, d, params.eps_zero, sample_step)?;
    let mut runs: Vec<(f64, f64, JointConcept)> = Vec::new();
    let mut current: Option<(f64, f64, JointConcept)> = None;
    for piece in pieces {
        if !piece.constant {
            runs.extend(current.take());
            continue;
        }
        match current.as_mut() {
            Some(run) if run.1 == piece.start && d.distance(&run.2, &piece.concept)? <= params.eps_zero => {
                run.1 = piece.end;
            }
            _ => {
                runs.extend(current.take());
                current = Some((piece.start, piece.end, piece.concept));
            }
        }
    }
    runs.extend(current);
    Ok(runs
        .into_iter()
        .filter(|(s, e, _)| e - s >= params.phi - params.eps_time)
        .enumerate()
        .map(|(i, (start, end, concept))| StableSegment {
            index: i + 1,
            start,
            end,
            concept,
        })
        .collect())
}

pub fn classify_duration(gap: f64, params: &TaxonomyParams) -> DurationClass {
    if gap <= params.delta {
        DurationClass::Abrupt
    } else {
        DurationClass::Extended
    }
}

pub fn classify_magnitude(distance: f64, params: &TaxonomyParams) -> MagnitudeClass {
    if distance < params.gamma {
        MagnitudeClass::Minor
    } else {
        MagnitudeClass::Major
    }
}

/// Both readings of a blip for segment `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlipFlags {
    /// `S_{a+1} - E_a <= beta`: the drift leaving `a` is short.
    pub literal: bool,
    /// Segment `a` itself lasts at most `beta`, entered and left abruptly.
    pub strict: bool,
}

/// Blip predicates for the zero-based segment position `a`.
pub fn is_blip(segments: &[StableSegment], a: usize, params: &TaxonomyParams) -> Result<BlipFlags> {
    if a + 1 >= segments.len() {
        return Err(DriftError::NoSuccessor(a));
    }
    let cur = &segments[a];
    let next = &segments[a + 1];
    let gap_out = next.start - cur.end;
    let literal = gap_out <= params.beta;
    let abrupt_in = a > 0 && cur.start - segments[a - 1].end <= params.delta;
    let abrupt_out = gap_out <= params.delta;
    let strict = cur.duration() <= params.beta && abrupt_in && abrupt_out;
    Ok(BlipFlags { literal, strict })
}

/// Grid over `[lo, hi]` with `grid_n` steps, plus any extra points in range.
fn grid_with(lo: f64, hi: f64, grid_n: usize, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let n = grid_n.max(1);
    let mut pts: Vec<f64> = (0..=n)
        .map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 })
        .collect();
    pts.extend(extra.into_iter().filter(|&t| t >= lo && t <= hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `D(t, t + nu) <= mu` for all `t` in `[E_a, S_{a+1} - nu]`, checked on a
/// grid that also contains every alignment of a window edge with a
/// trajectory breakpoint.
pub fn is_gradual(
    trajectory: &ConceptTrajectory,
    episode: &DriftEpisode,
    d: DistanceFunction,
    params: &TaxonomyParams,
    grid_n: usize,
) -> Result<bool> {
    let (lo, hi) = (episode.start, episode.end - params.nu);
    if episode.gap() <= params.nu {
        return Ok(true);
    }
    let bps = trajectory.breakpoint_times();
    let extra = bps.iter().flat_map(|&b| [b, b - params.nu]);
    for t in grid_with(lo, hi, grid_n, extra) {
        let a = episode.concept_at(trajectory, t)?;
        let b = episode.concept_at(trajectory, t + params.nu)?;
        if d.distance(&a, &b)? > params.mu {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Steady progression: on grid points inside the episode, distance from the
/// old concept never decreases and distance to the new one never increases
/// (within `eps_zero`).
pub fn is_incremental(
    trajectory: &ConceptTrajectory,
    episode: &DriftEpisode,
    d: DistanceFunction,
    params: &TaxonomyParams,
    grid_n: usize,
) -> Result<bool> {
    let (lo, hi) = (episode.start, episode.end);
    if hi <= lo {
        return Ok(true);
    }
    let times: Vec<f64> = grid_with(lo, hi, grid_n + 1, trajectory.breakpoint_times())
        .into_iter()
        .filter(|&t| t > lo && t < hi)
        .collect();
    let mut max_from = f64::NEG_INFINITY;
    let mut min_to = f64::INFINITY;
    for t in times {
        let c = trajectory.concept_at(t)?;
        let from = d.distance(&episode.from_concept, &c)?;
        let to = d.distance(&c, &episode.to_concept)?;
        if from < max_from - params.eps_zero || to > min_to + params.eps_zero {
            return Ok(false);
        }
        max_from = max_from.max(from);
        min_to = min_to.min(to);
    }
    Ok(true)
}

/// Result of fitting `P_t = (1 - f_t) P_from + f_t P_to` along an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticFit {
    pub is_probabilistic: bool,
    /// `(time, f)` pairs, first at `E_a`, last at `S_{a+1}`.
    pub recovered_f: Vec<(f64, f64)>,
    pub max_residual: f64,
}

/// Least-squares mixture weight at each grid time (closed form), with the
/// largest per-outcome residual.
pub fn is_probabilistic(
    trajectory: &ConceptTrajectory,
    episode: &DriftEpisode,
    params: &TaxonomyParams,
    grid_n: usize,
) -> Result<ProbabilisticFit> {
    let pa = episode.from_concept.joint_table();
    let pb = episode.to_concept.joint_table();
    let diff: Vec<f64> = pb.iter().zip(&pa).map(|(b, a)| b - a).collect();
    let norm2: f64 = diff.iter().map(|x| x * x).sum();
    if norm2.sqrt() <= params.eps_zero {
        return Err(DriftError::DegenerateEpisode);
    }
    let (lo, hi) = (episode.start, episode.end);
    let times = if hi > lo {
        grid_with(lo, hi, grid_n, trajectory.breakpoint_times())
    } else {
        vec![lo, hi]
    };
    let mut recovered = Vec::with_capacity(times.len());
    let mut max_residual: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let pt = if i == 0 {
            pa.clone()
        } else if i == times.len() - 1 {
            pb.clone()
        } else {
            episode.concept_at(trajectory, t)?.joint_table()
        };
        let dot: f64 = pt.iter().zip(&pa).zip(&diff).map(|((p, a), d)| (p - a) * d).sum();
        let f = dot / norm2;
        let resid = pt
            .iter()
            .zip(&pa)
            .zip(&pb)
            .map(|((p, a), b)| (p - ((1.0 - f) * a + f * b)).abs())
            .fold(0.0, f64::max);
        max_residual = max_residual.max(resid);
        recovered.push((t, f));
    }
    let eps = params.eps_zero.max(1e-12);
    let starts_at_zero = recovered[0].1.abs() <= eps;
    let ends_at_one = (recovered[recovered.len() - 1].1 - 1.0).abs() <= eps;
    let monotone = recovered.windows(2).all(|w| w[1].1 >= w[0].1 - eps);
    Ok(ProbabilisticFit {
        is_probabilistic: max_residual <= params.probabilistic_tol && starts_at_zero && ends_at_one && monotone,
        recovered_f: recovered,
        max_residual,
    })
}

/// Some pair of distinct stable segments shares a concept.
pub fn is_recurring(segments: &[StableSegment], d: DistanceFunction, params: &TaxonomyParams) -> Result<bool> {
    for a in 0..segments.len() {
        for b in a + 1..segments.len() {
            if d.distance(&segments[a].concept, &segments[b].concept)? <= params.eps_zero {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn require_cycle(segments: &[StableSegment], params: &TaxonomyParams) -> Result<()> {
    params.validate()?;
    let needed = params.cycle_i + 1;
    if segments.len() < needed {
        return Err(DriftError::InsufficientSegments {
            needed,
            found: segments.len(),
        });
    }
    Ok(())
}

/// Segment `a` and segment `a + i` share a concept for every valid `a`.
pub fn is_cyclical(segments: &[StableSegment], d: DistanceFunction, params: &TaxonomyParams) -> Result<bool> {
    require_cycle(segments, params)?;
    let i = params.cycle_i;
    for a in 0..segments.len() - i {
        if d.distance(&segments[a].concept, &segments[a + i].concept)? > params.eps_zero {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The fixed-periodicity variants of cyclical drift.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicalProperties {
    pub cyclical: bool,
    pub fixed_frequency: bool,
    pub fixed_concept_duration: bool,
    pub fixed_drift_duration: bool,
    pub fixed_concept_onset: bool,
    pub fixed_drift_onset: bool,
    /// `S_{a+i} - S_a` for every `a` with a successor `i` segments on.
    pub cycle_durations: Vec<f64>,
}

fn all_equal(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| (w[1] - w[0]).abs() <= tol)
}

pub fn cyclical_fixed_properties(
    segments: &[StableSegment],
    d: DistanceFunction,
    params: &TaxonomyParams,
) -> Result<CyclicalProperties> {
    let cyclical = is_cyclical(segments, d, params)?;
    let i = params.cycle_i;
    let tol = params.eps_time;
    let m = params.cycle_m;
    let n = segments.len();
    let pairs = 0..n - i;

    let fixed_frequency = pairs.clone().all(|a| {
        let (sa, ea) = (segments[a].start, segments[a].end);
        let (sai, eai) = (segments[a + i].start, segments[a + i].end);
        sai <= ea + m + tol && eai >= sa + m - tol
    });
    let fixed_concept_duration = pairs
        .clone()
        .all(|a| (segments[a].duration() - segments[a + i].duration()).abs() <= tol);
    let fixed_drift_duration = (0..n.saturating_sub(i + 1)).all(|a| {
        let here = segments[a + 1].start - segments[a].end;
        let later = segments[a + i + 1].start - segments[a + i].end;
        (here - later).abs() <= tol
    });
    let cycle_durations: Vec<f64> = pairs.clone().map(|a| segments[a + i].start - segments[a].start).collect();
    let end_spans: Vec<f64> = pairs.map(|a| segments[a + i].end - segments[a].end).collect();

    Ok(CyclicalProperties {
        cyclical,
        fixed_frequency: cyclical && fixed_frequency,
        fixed_concept_duration: cyclical && fixed_concept_duration,
        fixed_drift_duration: cyclical && fixed_drift_duration,
        fixed_concept_onset: cyclical && all_equal(&cycle_durations, tol),
        fixed_drift_onset: cyclical && all_equal(&end_spans, tol),
        cycle_durations,
    })
}

/// Drift subject flags between two concepts.
pub fn subject_predicates(a: &JointConcept, b: &JointConcept, eps: f64) -> Result<SubjectFlags> {
    a.ensure_same_schema(b)?;
    let cells = a.schema().cell_count();
    let changed = (0..cells)
        .filter(|&c| {
            a.posterior()
                .row(c)
                .iter()
                .zip(b.posterior().row(c))
                .any(|(p, q)| (p - q).abs() > eps)
        })
        .count();
    let covariate_drift = a
        .covariates()
        .cell_table()
        .iter()
        .zip(b.covariates().cell_table())
        .any(|(p, q)| (p - q).abs() > eps);
    let class_drift = changed > 0;
    Ok(SubjectFlags {
        class_drift,
        pure_class_drift: class_drift && !covariate_drift,
        subconcept: class_drift && changed < cells,
        full_concept: changed == cells,
        covariate_drift,
        pure_covariate_drift: covariate_drift && !class_drift,
        drift_scope: changed as f64 / cells as f64,
    })
}

/// Classes with prior at most `eps` at `t` and above `eps` at `u`.
pub fn novel_class_appearance(trajectory: &ConceptTrajectory, t: f64, u: f64, eps: f64) -> Result<Vec<usize>> {
    let before = class_marginal(&trajectory.concept_at(t)?);
    let after = class_marginal(&trajectory.concept_at(u)?);
    Ok(before
        .iter()
        .zip(&after)
        .enumerate()
        .filter(|(_, (p, q))| **p <= eps && **q > eps)
        .map(|(y, _)| y)
        .collect())
}

/// Episodes between consecutive stable segments, with measures and labels.
pub fn build_episodes(
    trajectory: &ConceptTrajectory,
    segments: &[StableSegment],
    d: DistanceFunction,
    params: &TaxonomyParams,
    grid_n: usize,
) -> Result<Vec<DriftEpisode>> {
    let mut out = Vec::new();
    for a in 0..segments.len().saturating_sub(1) {
        let (from, to) = (&segments[a], &segments[a + 1]);
        let magnitude = d.distance(&from.concept, &to.concept)?;
        let path = if to.start > from.end {
            crate::measures::path_length(trajectory, from.end, to.start, d, grid_n)?
                + d.distance(&from.concept, &trajectory.concept_at(from.end)?)?
                + d.distance(&trajectory.concept_at(to.start)?, &to.concept)?
        } else {
            magnitude
        };
        let measures = DriftMeasures::new(magnitude, to.start - from.end, path);
        let mut episode = DriftEpisode {
            from_segment: a,
            to_segment: a + 1,
            start: from.end,
            end: to.start,
            from_concept: from.concept.clone(),
            to_concept: to.concept.clone(),
            measures,
            labels: EpisodeLabels {
                duration: classify_duration(to.start - from.end, params),
                magnitude: classify_magnitude(magnitude, params),
                gradual: false,
                incremental: false,
                probabilistic: None,
                subject: subject_predicates(&from.concept, &to.concept, params.eps_zero)?,
            },
        };
        episode.labels.gradual = is_gradual(trajectory, &episode, d, params, grid_n)?;
        episode.labels.incremental = is_incremental(trajectory, &episode, d, params, grid_n)?;
        episode.labels.probabilistic = match is_probabilistic(trajectory, &episode, params, grid_n) {
            Ok(fit) => Some(fit.is_probabilistic),
            Err(DriftError::DegenerateEpisode) => None,
            Err(e) => return Err(e),
        };
        out.push(episode);
    }
    Ok(out)
}

/// Everything the taxonomy can say about one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyReport {
    pub params: TaxonomyParams,
    pub distance: DistanceFunction,
    pub segments: Vec<StableSegment>,
    pub episodes: Vec<DriftEpisode>,
    /// One entry per segment that has a successor.
    pub blips: Vec<BlipFlags>,
    pub recurring: bool,
    /// `None` when there are too few segments for a cycle of `cycle_i`.
    pub cyclical: Option<CyclicalProperties>,
    /// Number of stable segments starting within the trajectory span.
    pub frequency: usize,
}

pub fn classify_trajectory(
    trajectory: &ConceptTrajectory,
    d: DistanceFunction,
    params: &TaxonomyParams,
    grid_n: usize,
    sample_step: f64,
) -> Result<TaxonomyReport> {
    let segments = segment_stable_periods(trajectory, d, params, sample_step)?;
    let episodes = build_episodes(trajectory, &segments, d, params, grid_n)?;
    let blips = (0..segments.len().saturating_sub(1))
        .map(|a| is_blip(&segments, a, params))
        .collect::<Result<Vec<_>>>()?;
    let cyclical = match cyclical_fixed_properties(&segments, d, params) {
        Ok(p) => Some(p),
        Err(DriftError::InsufficientSegments { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(TaxonomyReport {
        params: *params,
        distance: d,
        recurring: is_recurring(&segments, d, params)?,
        frequency: crate::measures::drift_frequency(
            segments.iter().map(|s| s.start),
            trajectory.start(),
            trajectory.end(),
        ),
        segments,
        episodes,
        blips,
        cyclical,
    })
}
