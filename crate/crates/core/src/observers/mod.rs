//! Distributed observers (continuous, discrete, adaptive) and the leaderless
//! synchronized reference generator, with their gain-design rules.

mod bank;
mod design;

pub(crate) use bank::stack;
pub use bank::{
    consensus_weights, observer_generator, step_adaptive, step_continuous, step_discrete,
    step_sync_ref, sync_ref_generator, sync_ref_limit, ObserverBank,
};
pub use design::{
    design_gain_discrete, design_gain_static, design_gain_static_identity,
    design_gain_switching_identity, design_gain_switching_undirected, design_observer,
    error_matrix, error_system, DesignPath, ObserverGains,
};
