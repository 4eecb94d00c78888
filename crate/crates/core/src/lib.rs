//! Coherent-state quantum position verification laboratory.
//!
//! * [`photon_stats`]: Poisson photon-number statistics and threshold detection.
//! * [`security_bounds`]: the finite-size secure threshold Γ₀.
//! * [`planner`]: honest-prover expectations and intensity optimization.
//! * [`protocol`]: seeded Monte Carlo sessions for honest and adversarial provers.
//! * [`spacetime`]: timing-based position inference and latency budgets.
//!
//! Data-parallel loops go through [`exec`]; disable the default `parallel`
//! feature for a purely sequential build.

pub mod error;
pub mod exec;
pub mod photon_stats;
pub mod planner;
pub mod protocol;
pub mod rng;
pub mod security_bounds;
pub mod spacetime;

pub use error::{QpvError, Result};
pub use exec::Execution;
pub use photon_stats::{ChannelModel, ClassProbs, Intensity, PhotonClass};
pub use planner::{ExpectedTally, PlanResult, ProtocolParams};
pub use protocol::{AdversaryStrategy, BooleanFunction, FunctionBackend, Role, RoundTally, TrialRecord};
pub use security_bounds::{ClassBounds, ScoreCoefficients, SecurityParams, ThresholdReport};
pub use spacetime::{LatencyBudget, PositionRegion, TimingRecord, VerifierGeometry};
