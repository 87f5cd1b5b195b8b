//! Latency-aware multi-object tracking.
//!
//! Tracking-by-detection with exact flow-flag data association between
//! consecutive frames, a tentative-birth / delayed-death tracklet lifecycle,
//! CLEAR-MOT evaluation, a table-driven latency model, and a two-stage
//! Pareto architecture search driven by pluggable surrogate evaluators.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, wall-clock
//! timing and the command line live in the `lamot` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assoc;
pub mod detection;
pub mod geometry;
pub mod latency;
pub mod matching;
pub mod metrics;
pub mod nas;
pub mod scoring;
pub mod tracker;

pub use assoc::{
    check_feasible, objective_value, solve_bruteforce, solve_exact, AssocError,
    AssociationProblem, AssociationSolution,
};
pub use detection::{Detection, ObjectAttributes, SequenceDetections};
pub use geometry::{Box2D, Box3D, PointCloud};
pub use scoring::{FeatureVector, ScoreSet, Scorer, ScorerConfig};
pub use tracker::{run_sequence, TrackState, Tracklet, TrackerConfig, TrackerState};
