//! Exact information quantities, the conditional maximal coupling, the
//! information-loss bounds built on it, an information-bottleneck solver and
//! a Monte Carlo laboratory that measures how the conditional total
//! variation δ̄ of a learned classifier decays with the sample size.
//!
//! Everything works on finite alphabets so that every quantity of the true
//! model can be evaluated exactly.

pub mod bounds;
pub mod coupling;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod figure;
pub mod ib;
pub mod info;
pub mod lab;
pub mod rng;
pub mod verify;

pub use bounds::{BoundReport, KModel, TailBound};
pub use coupling::{CouplingResult, VerificationReport};
pub use dist::{CondDist, FiniteDist, FullModel, JointXY, ModelFile};
pub use error::{Error, Result};
pub use info::InfoReport;
pub use experiment::{ExperimentConfig, StabilityConfig, TailReport};
pub use figure::{CurvePoint, Panel, ToyFigSpec};
pub use ib::IBSolution;
pub use lab::{Dataset, Learner, LearnerSpec, TailEstimate, TrialRecord};
pub use verify::OracleReport;
