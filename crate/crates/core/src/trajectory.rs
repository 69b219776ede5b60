//! Continuous-time concept trajectories.
//!
//! A trajectory is a contiguous run of segments, each with an analytic law
//! giving the concept at every instant of the segment. Segment `i` covers
//! `(start_i, end_i]`; the first segment also covers its start. An abrupt
//! switch at time `t` is therefore two adjacent constant segments sharing the
//! boundary `t`, with `t` itself belonging to the earlier concept.
//!
//! Every law is piecewise linear in the joint table between its breakpoints,
//! which lets segmentation decide constancy exactly.

use crate::distribution::{JointConcept, PosteriorTable};
use crate::error::{DriftError, Result};

/// Piecewise-linear function on `[0, 1]` given by breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(DriftError::InvalidTrajectory("need at least two breakpoints".into()));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(DriftError::InvalidTrajectory(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(DriftError::InvalidTrajectory(
                "breakpoint positions must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(DriftError::InvalidTrajectory("non-finite breakpoint".into()));
        }
        Ok(Self { points })
    }

    /// The identity ramp `f(s) = s`.
    pub fn linear() -> Self {
        Self {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    /// A step from 0 to 1 over `[from, to]` within the unit interval.
    pub fn ramp(from: f64, to: f64) -> Result<Self> {
        let mut pts = Vec::new();
        if from > 0.0 {
            pts.push((0.0, 0.0));
        }
        pts.push((from, 0.0));
        pts.push((to, 1.0));
        if to < 1.0 {
            pts.push((1.0, 1.0));
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let i = self.points.partition_point(|p| p.0 <= s);
        if i == 0 {
            return self.points[0].1;
        }
        if i == self.points.len() {
            return self.points[i - 1].1;
        }
        let (x0, y0) = self.points[i - 1];
        let (x1, y1) = self.points[i];
        if s == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }

    pub fn is_monotone_non_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    fn is_unit_weight(&self) -> bool {
        self.points[0].1 == 0.0
            && self.points[self.points.len() - 1].1 == 1.0
            && self.points.iter().all(|p| (0.0..=1.0).contains(&p.1))
    }
}

/// Per-cell weight curves moving a posterior from one table to another.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSchedule {
    cell_weights: Vec<PiecewiseLinear>,
}

impl PosteriorSchedule {
    pub fn new(cell_weights: Vec<PiecewiseLinear>) -> Result<Self> {
        if cell_weights.iter().any(|w| !w.is_unit_weight()) {
            return Err(DriftError::InvalidTrajectory(
                "cell weights must run from 0 to 1 and stay within [0, 1]".into(),
            ));
        }
        Ok(Self { cell_weights })
    }

    /// Every cell moves together along the same curve.
    pub fn uniform(cells: usize, weight: PiecewiseLinear) -> Result<Self> {
        Self::new(vec![weight; cells])
    }

    /// Cells change one after another: cell `order[j]` ramps during the
    /// `j`-th of `order.len()` equal sub-intervals. Cells absent from `order`
    /// follow the identity ramp.
    pub fn sequential(cells: usize, order: &[usize]) -> Result<Self> {
        let n = order.len().max(1) as f64;
        let mut weights = vec![PiecewiseLinear::linear(); cells];
        for (j, &cell) in order.iter().enumerate() {
            if cell >= cells {
                return Err(DriftError::OutOfRange {
                    what: "cell",
                    index: cell,
                    limit: cells,
                });
            }
            weights[cell] = PiecewiseLinear::ramp(j as f64 / n, (j + 1) as f64 / n)?;
        }
        Self::new(weights)
    }

    pub fn cell_weights(&self) -> &[PiecewiseLinear] {
        &self.cell_weights
    }

    fn weights_at(&self, s: f64) -> Vec<f64> {
        self.cell_weights.iter().map(|w| w.eval(s)).collect()
    }
}

/// How the concept evolves within one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Constant(JointConcept),
    /// `(1 - f(s)) from + f(s) to` on the joint; `f` monotone, `f(0)=0`, `f(1)=1`.
    Mixture {
        from: JointConcept,
        to: JointConcept,
        weight: PiecewiseLinear,
    },
    /// Covariates held at `from`'s; each posterior row blends along its own curve.
    PosteriorInterpolation {
        from: JointConcept,
        to: JointConcept,
        schedule: PosteriorSchedule,
    },
    /// Linear interpolation of the joint through explicit `(s, concept)` points.
    Keyframes(Vec<(f64, JointConcept)>),
}

impl Law {
    fn validate(&self) -> Result<()> {
        match self {
            Law::Constant(_) => Ok(()),
            Law::Mixture { from, to, weight } => {
                from.ensure_same_schema(to)?;
                if !weight.is_unit_weight() || !weight.is_monotone_non_decreasing() {
                    return Err(DriftError::InvalidTrajectory(
                        "mixture weight must be monotone from 0 to 1".into(),
                    ));
                }
                Ok(())
            }
            Law::PosteriorInterpolation { from, to, schedule } => {
                from.ensure_same_schema(to)?;
                if from.covariates() != to.covariates() {
                    return Err(DriftError::InvalidTrajectory(
                        "posterior interpolation requires identical covariates".into(),
                    ));
                }
                if schedule.cell_weights.len() != from.schema().cell_count() {
                    return Err(DriftError::InvalidTrajectory(
                        "schedule must give one curve per cell".into(),
                    ));
                }
                Ok(())
            }
            Law::Keyframes(frames) => {
                if frames.len() < 2 {
                    return Err(DriftError::InvalidTrajectory("need at least two keyframes".into()));
                }
                if frames[0].0 != 0.0 || frames[frames.len() - 1].0 != 1.0 {
                    return Err(DriftError::InvalidTrajectory(
                        "keyframes must start at 0 and end at 1".into(),
                    ));
                }
                if frames.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(DriftError::InvalidTrajectory(
                        "keyframe positions must be strictly increasing".into(),
                    ));
                }
                for w in frames.windows(2) {
                    w[0].1.ensure_same_schema(&w[1].1)?;
                }
                Ok(())
            }
        }
    }

    /// Concept at relative position `s` in `[0, 1]`.
    pub fn eval(&self, s: f64) -> Result<JointConcept> {
        let s = s.clamp(0.0, 1.0);
        match self {
            Law::Constant(c) => Ok(c.clone()),
            Law::Mixture { from, to, weight } => JointConcept::mix(from, to, weight.eval(s).clamp(0.0, 1.0)),
            Law::PosteriorInterpolation { from, to, schedule } => {
                let table = PosteriorTable::blend(from.posterior(), to.posterior(), &schedule.weights_at(s))?;
                from.with_posterior(table)
            }
            Law::Keyframes(frames) => {
                let i = frames.partition_point(|f| f.0 <= s);
                if i == 0 {
                    return Ok(frames[0].1.clone());
                }
                if i == frames.len() {
                    return Ok(frames[i - 1].1.clone());
                }
                let (s0, a) = &frames[i - 1];
                let (s1, b) = &frames[i];
                JointConcept::mix(a, b, ((s - s0) / (s1 - s0)).clamp(0.0, 1.0))
            }
        }
    }

    pub fn start_concept(&self) -> JointConcept {
        self.eval(0.0).expect("validated law")
    }

    pub fn end_concept(&self) -> JointConcept {
        self.eval(1.0).expect("validated law")
    }

    /// Relative positions between which the joint varies linearly in time
    /// (piecewise-linear time parametrization), including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match self {
            Law::Constant(_) => vec![0.0, 1.0],
            Law::Mixture { weight, .. } => weight.points().iter().map(|p| p.0).collect(),
            Law::PosteriorInterpolation { schedule, .. } => schedule
                .cell_weights
                .iter()
                .flat_map(|w| w.points().iter().map(|p| p.0))
                .collect(),
            Law::Keyframes(frames) => frames.iter().map(|f| f.0).collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn schema(&self) -> &crate::distribution::AttributeSchema {
        match self {
            Law::Constant(c) => c.schema(),
            Law::Mixture { from, .. } | Law::PosteriorInterpolation { from, .. } => from.schema(),
            Law::Keyframes(frames) => frames[0].1.schema(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub law: Law,
}

impl Segment {
    pub fn new(start: f64, end: f64, law: Law) -> Self {
        Self { start, end, law }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    fn relative(&self, t: f64) -> f64 {
        ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0)
    }
}

/// Piecewise analytic map from time to concept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptTrajectory {
    segments: Vec<Segment>,
}

impl ConceptTrajectory {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(DriftError::InvalidTrajectory("no segments".into()));
        }
        let schema = *segments[0].law.schema();
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.start.is_finite() && seg.end.is_finite()) || seg.end <= seg.start {
                return Err(DriftError::InvalidTrajectory(format!(
                    "segment {i} has non-increasing times [{}, {}]",
                    seg.start, seg.end
                )));
            }
            seg.law.validate()?;
            if *seg.law.schema() != schema {
                return Err(DriftError::SchemaMismatch(format!("segment {i} schema differs")));
            }
        }
        for (i, w) in segments.windows(2).enumerate() {
            if w[0].end != w[1].start {
                return Err(DriftError::InvalidTrajectory(format!(
                    "segments {i} and {} are not contiguous",
                    i + 1
                )));
            }
        }
        Ok(Self { segments })
    }

    /// A single constant segment.
    pub fn constant(concept: JointConcept, start: f64, end: f64) -> Result<Self> {
        Self::new(vec![Segment::new(start, end, Law::Constant(concept))])
    }

    /// Constant concepts switching instantaneously at the given times.
    /// `switches` has one entry fewer than `concepts`.
    pub fn piecewise_constant(
        concepts: Vec<JointConcept>,
        start: f64,
        switches: &[f64],
        end: f64,
    ) -> Result<Self> {
        if concepts.len() != switches.len() + 1 {
            return Err(DriftError::InvalidTrajectory(
                "need exactly one more concept than switch times".into(),
            ));
        }
        let mut bounds = vec![start];
        bounds.extend_from_slice(switches);
        bounds.push(end);
        let segments = concepts
            .into_iter()
            .enumerate()
            .map(|(i, c)| Segment::new(bounds[i], bounds[i + 1], Law::Constant(c)))
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> f64 {
        self.segments[0].start
    }

    pub fn end(&self) -> f64 {
        self.segments[self.segments.len() - 1].end
    }

    pub fn schema(&self) -> &crate::distribution::AttributeSchema {
        self.segments[0].law.schema()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start() && t <= self.end()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !self.contains(t) {
            return Err(DriftError::TimeOutOfSpan {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(())
    }

    /// Index of the segment owning time `t`.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        let i = self.segments.partition_point(|s| s.end < t);
        Ok(i.min(self.segments.len() - 1))
    }

    /// The concept in force at time `t`.
    pub fn concept_at(&self, t: f64) -> Result<JointConcept> {
        let seg = &self.segments[self.segment_index(t)?];
        seg.law.eval(seg.relative(t))
    }

    /// Absolute times of every linear piece boundary, sorted and deduplicated.
    pub fn breakpoint_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|seg| {
                seg.law
                    .breakpoints()
                    .into_iter()
                    .map(move |s| seg.start + s * seg.length())
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{sample_posterior_table, AttributeSchema};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pair() -> (JointConcept, JointConcept) {
        let s = AttributeSchema::new(2, 3, 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = JointConcept::sample(&s, &mut rng);
        let b = JointConcept::sample(&s, &mut rng);
        (a, b)
    }

    #[test]
    fn piecewise_linear_eval() {
        let f = PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)]).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert!((f.eval(0.25) - 0.1).abs() < 1e-15);
        assert_eq!(f.eval(0.5), 0.2);
        assert!((f.eval(0.75) - 0.6).abs() < 1e-15);
        assert_eq!(f.eval(1.0), 1.0);
        assert!(f.is_monotone_non_decreasing());
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.1, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn constant_trajectory_returns_its_concept() {
        let (a, _) = pair();
        let tr = ConceptTrajectory::constant(a.clone(), 0.0, 10.0).unwrap();
        for t in [0.0, 3.3, 10.0] {
            assert_eq!(tr.concept_at(t).unwrap(), a);
        }
        assert!(tr.concept_at(10.5).is_err());
        assert!(tr.concept_at(-0.1).is_err());
    }

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let (a, b) = pair();
        let tr = ConceptTrajectory::new(vec![Segment::new(
            0.0,
            4.0,
            Law::Mixture {
                from: a.clone(),
                to: b.clone(),
                weight: PiecewiseLinear::linear(),
            },
        )])
        .unwrap();
        assert_eq!(tr.concept_at(0.0).unwrap(), a);
        assert_eq!(tr.concept_at(4.0).unwrap(), b);
        let mid = tr.concept_at(2.0).unwrap().joint_table();
        let (ja, jb) = (a.joint_table(), b.joint_table());
        for i in 0..mid.len() {
            assert!((mid[i] - (ja[i] + jb[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_time_belongs_to_earlier_segment() {
        let (a, b) = pair();
        let tr = ConceptTrajectory::piecewise_constant(vec![a.clone(), b.clone()], 0.0, &[5.0], 9.0).unwrap();
        assert_eq!(tr.concept_at(5.0).unwrap(), a);
        assert_eq!(tr.concept_at(5.000001).unwrap(), b);
        assert_eq!(tr.breakpoint_times(), vec![0.0, 5.0, 9.0]);
    }

    #[test]
    fn validation_rejects_gaps_and_bad_weights() {
        let (a, b) = pair();
        let gap = ConceptTrajectory::new(vec![
            Segment::new(0.0, 1.0, Law::Constant(a.clone())),
            Segment::new(2.0, 3.0, Law::Constant(b.clone())),
        ]);
        assert!(gap.is_err());
        let backwards = PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.8), (0.7, 0.3), (1.0, 1.0)]).unwrap();
        let bad = ConceptTrajectory::new(vec![Segment::new(
            0.0,
            1.0,
            Law::Mixture {
                from: a.clone(),
                to: b.clone(),
                weight: backwards,
            },
        )]);
        assert!(bad.is_err());
        let zero_len = ConceptTrajectory::new(vec![Segment::new(1.0, 1.0, Law::Constant(a))]);
        assert!(zero_len.is_err());
    }

    #[test]
    fn posterior_interpolation_keeps_covariates() {
        let (a, _) = pair();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let b = a.with_posterior(sample_posterior_table(a.schema(), &mut rng)).unwrap();
        let cells = a.schema().cell_count();
        let order: Vec<usize> = (0..cells).collect();
        let law = Law::PosteriorInterpolation {
            from: a.clone(),
            to: b.clone(),
            schedule: PosteriorSchedule::sequential(cells, &order).unwrap(),
        };
        let tr = ConceptTrajectory::new(vec![Segment::new(0.0, 9.0, law)]).unwrap();
        let mid = tr.concept_at(4.5).unwrap();
        assert_eq!(mid.covariates(), a.covariates());
        assert_eq!(tr.concept_at(9.0).unwrap().posterior(), b.posterior());
        // cell 0 finished ramping by t = 1
        assert_eq!(tr.concept_at(1.0).unwrap().posterior().row(0), b.posterior().row(0));
        assert_eq!(tr.concept_at(1.0).unwrap().posterior().row(1), a.posterior().row(1));
    }

    #[test]
    fn keyframes_interpolate_linearly() {
        let (a, b) = pair();
        let law = Law::Keyframes(vec![(0.0, a.clone()), (0.5, b.clone()), (1.0, a.clone())]);
        let tr = ConceptTrajectory::new(vec![Segment::new(0.0, 2.0, law)]).unwrap();
        assert_eq!(tr.concept_at(1.0).unwrap(), b);
        assert_eq!(tr.concept_at(2.0).unwrap(), a);
        let q = tr.concept_at(0.5).unwrap().joint_table();
        let (ja, jb) = (a.joint_table(), b.joint_table());
        for i in 0..q.len() {
            assert!((q[i] - (0.5 * ja[i] + 0.5 * jb[i])).abs() < 1e-12);
        }
    }
}
