//! Named trajectories realizing the drift archetypes.
//!
//! Most fixtures live on a two-cell, two-class schema with uniform covariates
//! and both posterior rows equal to `(1 - p, p)`, so a single number `p`
//! names the concept and linear changes in `p` are joint mixtures.

use crate::distribution::{AttributeSchema, CovariateDistribution, JointConcept, PosteriorTable};
use crate::error::{DriftError, Result};
use crate::measures::DistanceFunction;
use crate::rng::{stream_rng, Purpose};
use crate::taxonomy::TaxonomyParams;
use crate::trajectory::{ConceptTrajectory, Law, PiecewiseLinear, PosteriorSchedule, Segment};

pub const FIXTURE_NAMES: [&str; 15] = [
    "fig1-top-left",
    "fig1-top-center",
    "fig1-top-right",
    "fig1-bottom-left",
    "fig1-bottom-center",
    "fig1-bottom-right",
    "blip-cyber-monday",
    "recurring-home-work",
    "recurring-aba",
    "cyclical-seasons",
    "cyclical-winter-jitter",
    "probabilistic-sensor-swap",
    "posterior-cell-flip",
    "alice-exercise",
    "bob-exercise",
];

/// Fixture names also accepted by [`build_fixture`] but kept out of the
/// archetype list.
pub const EXTRA_FIXTURES: [&str; 1] = ["stationary"];

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub trajectory: ConceptTrajectory,
    pub params: TaxonomyParams,
    pub distance: DistanceFunction,
    /// Expected `(gradual, incremental)` of the single drift episode, when
    /// the fixture pins it down.
    pub expected_shape: Option<(bool, bool)>,
}

/// The two-cell concept with `P(Y = 1 | x) = p` everywhere.
pub fn binary_concept(p: f64) -> JointConcept {
    let s = AttributeSchema::new(1, 2, 2).expect("valid schema");
    JointConcept::new(
        s,
        CovariateDistribution::uniform(&s),
        PosteriorTable::new(&s, vec![vec![1.0 - p, p], vec![1.0 - p, p]]).expect("valid rows"),
    )
    .expect("valid concept")
}

const FIG1_STABLE: f64 = 100.0;
const FIG1_DRIFT: f64 = 100.0;
const FIG1_FROM: f64 = 0.2;
const FIG1_TO: f64 = 0.8;

fn fig1_params() -> TaxonomyParams {
    TaxonomyParams {
        phi: 20.0,
        delta: 1.0,
        beta: 1.0,
        gamma: 0.5,
        nu: 10.0,
        mu: 0.1,
        ..TaxonomyParams::default()
    }
}

/// Stable, a drift law over `[100, 200]`, stable.
fn fig1_frame(law: Law) -> Result<ConceptTrajectory> {
    let a = FIG1_STABLE;
    let b = a + FIG1_DRIFT;
    ConceptTrajectory::new(vec![
        Segment::new(0.0, a, Law::Constant(binary_concept(FIG1_FROM))),
        Segment::new(a, b, law),
        Segment::new(b, b + FIG1_STABLE, Law::Constant(binary_concept(FIG1_TO))),
    ])
}

fn fig1_mixture(weight: Vec<(f64, f64)>) -> Result<ConceptTrajectory> {
    fig1_frame(Law::Mixture {
        from: binary_concept(FIG1_FROM),
        to: binary_concept(FIG1_TO),
        weight: PiecewiseLinear::new(weight)?,
    })
}

/// Keyframes given as `(absolute time, p)` inside the drift window.
fn fig1_keyframes(points: &[(f64, f64)]) -> Result<ConceptTrajectory> {
    let frames = points
        .iter()
        .map(|&(t, p)| ((t - FIG1_STABLE) / FIG1_DRIFT, binary_concept(p)))
        .collect();
    fig1_frame(Law::Keyframes(frames))
}

/// Stable segments joined by linear mixtures.
fn stable_with_transitions(
    concepts: &[JointConcept],
    stable: &[f64],
    transition: &[f64],
) -> Result<ConceptTrajectory> {
    if stable.len() != concepts.len() || transition.len() + 1 != concepts.len() {
        return Err(DriftError::InvalidTrajectory("mismatched fixture lengths".into()));
    }
    let mut segments = Vec::new();
    let mut t = 0.0;
    for (i, c) in concepts.iter().enumerate() {
        segments.push(Segment::new(t, t + stable[i], Law::Constant(c.clone())));
        t += stable[i];
        if let Some(&len) = transition.get(i) {
            if len > 0.0 {
                segments.push(Segment::new(
                    t,
                    t + len,
                    Law::Mixture {
                        from: c.clone(),
                        to: concepts[i + 1].clone(),
                        weight: PiecewiseLinear::linear(),
                    },
                ));
                t += len;
            }
        }
    }
    ConceptTrajectory::new(segments)
}

fn seasons() -> [JointConcept; 4] {
    [
        binary_concept(0.1),
        binary_concept(0.4),
        binary_concept(0.6),
        binary_concept(0.9),
    ]
}

fn seasons_params() -> TaxonomyParams {
    TaxonomyParams {
        phi: 10.0,
        cycle_i: 4,
        cycle_m: 360.0,
        ..TaxonomyParams::default()
    }
}

fn two_cycles_of_seasons(winter_again: f64) -> Result<ConceptTrajectory> {
    let s = seasons();
    let concepts: Vec<JointConcept> = s.iter().chain(s.iter()).cloned().collect();
    let mut stable = vec![60.0; 8];
    stable[7] = winter_again;
    stable_with_transitions(&concepts, &stable, &[30.0; 7])
}

fn exercise(cycles: usize, stable: f64, transition: f64) -> Result<ConceptTrajectory> {
    let (rest, active) = (binary_concept(0.1), binary_concept(0.9));
    let concepts: Vec<JointConcept> = (0..2 * cycles + 1)
        .map(|i| if i % 2 == 0 { rest.clone() } else { active.clone() })
        .collect();
    stable_with_transitions(&concepts, &vec![stable; concepts.len()], &vec![transition; 2 * cycles])
}

/// Two sensors with different readings and labelling; the second one's
/// share of the stream rises in steps.
fn sensor_swap() -> Result<ConceptTrajectory> {
    let schema = AttributeSchema::new(2, 3, 3)?;
    let mut rng = stream_rng(17, 0, Purpose::Auxiliary);
    let old = JointConcept::sample(&schema, &mut rng);
    let new = JointConcept::sample(&schema, &mut rng);
    ConceptTrajectory::new(vec![
        Segment::new(0.0, 100.0, Law::Constant(old.clone())),
        Segment::new(
            100.0,
            200.0,
            Law::Mixture {
                from: old,
                to: new.clone(),
                weight: PiecewiseLinear::new(vec![(0.0, 0.0), (0.3, 0.25), (0.4, 0.3), (0.7, 0.75), (1.0, 1.0)])?,
            },
        ),
        Segment::new(200.0, 300.0, Law::Constant(new)),
    ])
}

/// Class 0 everywhere becomes class 1 everywhere, one cell after the other.
fn posterior_cell_flip() -> Result<ConceptTrajectory> {
    let schema = AttributeSchema::new(1, 2, 2)?;
    let cov = CovariateDistribution::uniform(&schema);
    let a = JointConcept::new(schema, cov.clone(), PosteriorTable::from_assignments(&schema, &[0, 0])?)?;
    let b = JointConcept::new(schema, cov, PosteriorTable::from_assignments(&schema, &[1, 1])?)?;
    ConceptTrajectory::new(vec![
        Segment::new(0.0, 100.0, Law::Constant(a.clone())),
        Segment::new(
            100.0,
            200.0,
            Law::PosteriorInterpolation {
                from: a,
                to: b.clone(),
                schedule: PosteriorSchedule::sequential(2, &[0, 1])?,
            },
        ),
        Segment::new(200.0, 300.0, Law::Constant(b)),
    ])
}

pub fn build_fixture(name: &str) -> Result<Fixture> {
    let d = DistanceFunction::HellingerJoint;
    let fixture = |name, description, trajectory, params, expected_shape| Fixture {
        name,
        description,
        trajectory,
        params,
        distance: d,
        expected_shape,
    };
    let f = match name {
        "fig1-top-left" => fixture(
            "fig1-top-left",
            "steady linear mixture from p=0.2 to p=0.8 over [100, 200]",
            fig1_mixture(vec![(0.0, 0.0), (1.0, 1.0)])?,
            fig1_params(),
            Some((true, true)),
        ),
        "fig1-top-center" => fixture(
            "fig1-top-center",
            "monotone mixture whose rate varies: slow, faster, fast",
            fig1_mixture(vec![(0.0, 0.0), (0.4, 0.2), (0.6, 0.5), (1.0, 1.0)])?,
            fig1_params(),
            Some((true, true)),
        ),
        "fig1-top-right" => fixture(
            "fig1-top-right",
            "slow drift that briefly reverses direction before reaching p=0.8",
            fig1_keyframes(&[(100.0, 0.2), (150.0, 0.6), (165.0, 0.5), (200.0, 0.8)])?,
            fig1_params(),
            Some((true, false)),
        ),
        "fig1-bottom-left" => fixture(
            "fig1-bottom-left",
            "slow drift that overshoots to p=0.85 then settles back to p=0.8",
            fig1_keyframes(&[(100.0, 0.2), (180.0, 0.85), (200.0, 0.8)])?,
            fig1_params(),
            Some((true, false)),
        ),
        "fig1-bottom-center" => fixture(
            "fig1-bottom-center",
            "monotone drift with a jump of 0.4 in p inside one time unit",
            fig1_keyframes(&[(100.0, 0.2), (150.0, 0.3), (151.0, 0.7), (200.0, 0.8)])?,
            fig1_params(),
            Some((false, true)),
        ),
        "fig1-bottom-right" => fixture(
            "fig1-bottom-right",
            "fast oscillation between p=0.2 and p=0.8 before settling",
            fig1_keyframes(&[
                (100.0, 0.2),
                (115.0, 0.8),
                (130.0, 0.2),
                (145.0, 0.8),
                (160.0, 0.2),
                (200.0, 0.8),
            ])?,
            fig1_params(),
            Some((false, false)),
        ),
        "blip-cyber-monday" => fixture(
            "blip-cyber-monday",
            "daily sales year; one day at p=0.9 amid p=0.3, beta of two days",
            ConceptTrajectory::piecewise_constant(
                vec![binary_concept(0.3), binary_concept(0.9), binary_concept(0.3)],
                0.0,
                &[330.0, 331.0],
                365.0,
            )?,
            TaxonomyParams {
                phi: 0.5,
                delta: 1.0,
                beta: 2.0,
                ..TaxonomyParams::default()
            },
            None,
        ),
        "recurring-home-work" => {
            let (home, work) = (binary_concept(0.2), binary_concept(0.7));
            let concepts = vec![home.clone(), work.clone(), home.clone(), work.clone(), home.clone(), work, home];
            fixture(
                "recurring-home-work",
                "app usage in hours, switching between home and work patterns",
                ConceptTrajectory::piecewise_constant(concepts, 0.0, &[8.0, 17.0, 32.0, 41.0, 56.0, 65.0], 72.0)?,
                TaxonomyParams {
                    phi: 1.0,
                    ..TaxonomyParams::default()
                },
                None,
            )
        }
        "recurring-aba" => fixture(
            "recurring-aba",
            "A, B, then A again, switching abruptly",
            ConceptTrajectory::piecewise_constant(
                vec![binary_concept(0.2), binary_concept(0.6), binary_concept(0.2)],
                0.0,
                &[50.0, 100.0],
                150.0,
            )?,
            TaxonomyParams {
                phi: 10.0,
                ..TaxonomyParams::default()
            },
            None,
        ),
        "cyclical-seasons" => fixture(
            "cyclical-seasons",
            "four seasons twice: 60 days stable, 30 days transition, 360 day cycle",
            two_cycles_of_seasons(60.0)?,
            seasons_params(),
            None,
        ),
        "cyclical-winter-jitter" => fixture(
            "cyclical-winter-jitter",
            "as cyclical-seasons but the second winter lasts 70 days",
            two_cycles_of_seasons(70.0)?,
            seasons_params(),
            None,
        ),
        "probabilistic-sensor-swap" => fixture(
            "probabilistic-sensor-swap",
            "readings from an old and a new sensor interleave; the new share rises stepwise",
            sensor_swap()?,
            TaxonomyParams {
                phi: 50.0,
                ..TaxonomyParams::default()
            },
            None,
        ),
        "posterior-cell-flip" => fixture(
            "posterior-cell-flip",
            "labels of the two cells flip one after the other",
            posterior_cell_flip()?,
            TaxonomyParams {
                phi: 20.0,
                ..TaxonomyParams::default()
            },
            None,
        ),
        "alice-exercise" => fixture(
            "alice-exercise",
            "rest/activity alternation: 12 stable, 3 transition, four cycles in 120",
            exercise(4, 12.0, 3.0)?,
            TaxonomyParams {
                phi: 5.0,
                ..TaxonomyParams::default()
            },
            None,
        ),
        "bob-exercise" => fixture(
            "bob-exercise",
            "rest/activity alternation: 25 stable, 5 transition, two cycles in 120",
            exercise(2, 25.0, 5.0)?,
            TaxonomyParams {
                phi: 5.0,
                ..TaxonomyParams::default()
            },
            None,
        ),
        "stationary" => fixture(
            "stationary",
            "one concept throughout",
            ConceptTrajectory::constant(binary_concept(0.3), 0.0, 100.0)?,
            TaxonomyParams::default(),
            None,
        ),
        other => return Err(DriftError::UnknownFixture(other.to_string())),
    };
    Ok(f)
}

pub fn build_fixture_trajectory(name: &str) -> Result<ConceptTrajectory> {
    build_fixture(name).map(|f| f.trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_fixture_builds() {
        for name in FIXTURE_NAMES.iter().chain(EXTRA_FIXTURES.iter()) {
            let f = build_fixture(name).unwrap();
            assert_eq!(&f.name, name);
            f.params.validate().unwrap();
        }
    }

    #[test]
    fn unknown_fixture() {
        assert_eq!(
            build_fixture_trajectory("nope"),
            Err(DriftError::UnknownFixture("nope".into()))
        );
    }

    #[test]
    fn blip_middle_is_half_beta() {
        let f = build_fixture("blip-cyber-monday").unwrap();
        let mid = &f.trajectory.segments()[1];
        assert_eq!(mid.length(), f.params.beta / 2.0);
    }

    #[test]
    fn top_left_is_linear_mixture() {
        let tr = build_fixture_trajectory("fig1-top-left").unwrap();
        match &tr.segments()[1].law {
            Law::Mixture { weight, .. } => assert_eq!(weight, &PiecewiseLinear::linear()),
            other => panic!("{other:?}"),
        }
    }
}
