//! Cooperative output regulation of heterogeneous linear multi-agent systems
//! using distributed observers of the leader.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod numkit;
pub mod observers;
pub mod plantmodel;
pub mod simkit;
pub mod synthesis;
pub mod topology;

pub use error::{Check, Error, Result};
pub use numkit::{RealMatrix, RealVector};
pub use observers::{DesignPath, ObserverBank, ObserverGains};
pub use plantmodel::{Exosystem, PlantAgent, Scenario};
pub use simkit::{
    ControlLaw, DesignChoice, InitialEstimate, LawConfig, LawKind, Metrics, ObserverVariant,
    RunOutcome, Trajectory,
};
pub use synthesis::{AgentGains, GainSet, SolvabilityReport};
pub use topology::{Edge, SwitchingSchedule, WeightedDigraph};
