//! Simulation toolkit for generalized partial measurements on qubits and their
//! probabilistic reversal.
//!
//! A partial measurement leaves a qubit in a pure state that can be restored by
//! a measurement-based undo protocol whose success probability is independent of
//! the state being recovered.  This crate provides the single-qubit primitives,
//! the reversal chains built from them, the likelihood/entropy machinery that
//! quantifies how little the postselected records reveal, two-qubit scenarios
//! (entanglement amplification, no-signaling checks, teleportation readout), and
//! a B92 key-distribution simulator with a measure-and-reverse eavesdropper.

pub mod chain;
pub mod error;
pub mod inference;
pub mod measurement;
pub mod qkd;
pub mod qubit;
pub mod rng;
pub mod stats;
pub mod twoqubit;

pub use chain::{ChainConfig, CountRecord, EnsembleStats, PathDistribution, TrajectoryLog};
pub use error::{Error, Result};
pub use inference::{EntropyReport, FisherReport, LikelihoodSpec, LikelihoodSurface};
pub use measurement::{KOutcomeMeasurement, Outcome, PartialMeasurement};
pub use qkd::{B92Config, B92Stats, EveBasis, EveStrategy, MIEstimate, Transcript};
pub use qubit::{BlochAngles, Complex, Operator2, PureState};
pub use twoqubit::{
    AmplificationReport, MeasBasis, NoSignalingReport, ReadoutReport, ReadoutVariant,
    ThreeQubitState, TwoQubitState,
};
