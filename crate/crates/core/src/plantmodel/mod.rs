//! Followers, the exosystem with its measured/unmeasured split, scenarios
//! and scenario builders for containment and local exogenous signals.

mod agent;
mod builders;
mod exosystem;
mod scenario;

pub use agent::PlantAgent;
pub use builders::{build_containment, localize_exogenous, LocalAgent};
pub use exosystem::Exosystem;
pub use scenario::{
    validate_assumptions, AgentAssumptions, AssumptionReport, Scenario, TopologyVerdict,
};
