//! Concept drift as a trajectory of joint distributions.
//!
//! A concept is `P(X, Y)` over a fixed categorical schema. This crate
//! measures how far and how fast a concept moves ([`measures`]), names the
//! shape of each move ([`taxonomy`]), generates streams with drift of an
//! exact magnitude ([`generator`]) and scores incremental learners on them
//! ([`harness`]).

pub mod distribution;
pub mod error;
pub mod fixtures;
pub mod generator;
pub mod harness;
pub mod io;
pub mod measures;
pub mod rng;
pub mod taxonomy;
pub mod trajectory;

pub use distribution::{AttributeSchema, CovariateDistribution, JointConcept, PosteriorTable};
pub use error::{DriftError, Result};
pub use generator::{DriftKind, DriftSpec, GroundTruth, StreamRecord};
pub use harness::{ErrorCurve, LearnerKind, OnlineLearner};
pub use measures::{DistanceFunction, DriftMeasures};
pub use taxonomy::{TaxonomyParams, TaxonomyReport};
pub use trajectory::{ConceptTrajectory, Law, PiecewiseLinear, Segment};
