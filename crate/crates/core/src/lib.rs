//! Simulation and detection toolkit for cellular molecular-communication
//! receivers built from stochastic chemical reaction networks (CRNs).
//!
//! The crate models a binary concentration-shift-keying channel sensed by
//! ligand-binding receptors and provides three families of detectors for it:
//!
//! * exact reference detectors (binomial likelihoods, the optimal threshold
//!   and its analytic bit error rate) in [`reference`],
//! * fully-visible Boltzmann machines trained by moment matching, acting as
//!   generative MAP detectors, in [`bm`],
//! * two stochastic CRNs whose steady-state statistics realize the same
//!   decisions in chemistry, in [`crn_detectors`], simulated exactly by the
//!   SSA engine in [`crn`].
//!
//! [`experiments`] ties everything together: scenario configuration,
//! Monte-Carlo BER estimation, the training / online-learning / time-variant
//! experiment harnesses, and CSV/SVG emission. All randomness flows through
//! explicitly seeded ChaCha streams (see [`rng`]), so every run is
//! reproducible bit for bit.

// Parameter validations are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bm;
pub mod channel;
pub mod crn;
pub mod crn_detectors;
mod error;
pub mod experiments;
pub mod reference;
pub mod rng;

pub use bm::{Fvbm, MomentEstimates, Schedule, TrainingConfig};
pub use channel::{ChannelParams, DiffusionParams, ReceptorObservation, Symbol};
pub use crn::{Crn, CrnState, Reaction, SpeciesId, StepOutcome, Trajectory};
pub use crn_detectors::{
    DetectorCrn, LcDetectorState, PilotSymbol, SamplingParams, TaylorCrnParams,
};
pub use error::Error;
pub use experiments::{BerEstimate, Detector, NoiseSchedule, ScenarioConfig};
pub use reference::{LikelihoodModel, ThresholdDetector};
