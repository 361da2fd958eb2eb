//! Closed-loop assembly, switching-aware RK4 integration, run metrics and
//! structural checks of the assembled loop.

mod assemble;
mod integrate;
mod law;
mod metrics;
mod run;
mod trajectory;
mod verify;

pub use assemble::{assemble, ClosedLoop, StateLayout};
pub use integrate::{integrate, rk4_step, rk4_transition, DIVERGENCE_NORM};
pub use law::{ControlLaw, DesignChoice, InitialEstimate, LawConfig, LawKind, ObserverVariant};
pub use metrics::{metrics, Metrics};
pub use run::{run, RunOutcome};
pub use trajectory::Trajectory;
pub use verify::{
    input_decay_check, verify_separation, verify_sylvester_steady_state, DecayCheck,
    SeparationReport, SteadyState, SEPARATION_TOL,
};
