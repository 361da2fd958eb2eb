use std::fmt;

use serde::{Deserialize, Serialize};

/// Named solvability checks. Failures surface these names in reports and
/// error messages so a caller can tell which hypothesis broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// The exosystem has no modes with negative real part (advisory only).
    ExosystemModes,
    /// Every follower pair (A_i, B_i) is stabilizable.
    Stabilizability,
    /// Every follower composite measurement pair is detectable.
    Detectability,
    /// The regulator equations admit an exact solution.
    RegulatorEquations,
    /// The transmission-zero rank condition holds at every exosystem eigenvalue.
    RankCondition,
    /// Every follower is reachable from the leader in the static graph.
    LeaderReachability,
    /// Windowed union graphs are leader-reachable (switching topologies).
    JointConnectivity,
    /// The leader output pair admits the selected observer design.
    LeaderObservability,
    /// Preconditions of the selected observer gain rule.
    ObserverDesign,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::ExosystemModes => "exosystem_modes",
            Check::Stabilizability => "stabilizability",
            Check::Detectability => "detectability",
            Check::RegulatorEquations => "regulator_equations",
            Check::RankCondition => "rank_condition",
            Check::LeaderReachability => "leader_reachability",
            Check::JointConnectivity => "joint_connectivity",
            Check::LeaderObservability => "leader_observability",
            Check::ObserverDesign => "observer_design",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("matrix is not marginally stable: {0}")]
    NotMarginallyStable(String),
    #[error("pair is not stabilizable")]
    NotStabilizable,
    #[error("linear matrix system has no exact solution (residual {residual:.3e})")]
    NoSolution { residual: f64 },
    #[error("graph connectivity: {0}")]
    Connectivity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{check} failed: {detail}")]
    Synthesis { check: Check, detail: String },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("closed-loop assembly: {0}")]
    Assembly(String),
    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("structural check failed: {0}")]
    Structure(String),
}

impl Error {
    pub(crate) fn synthesis(check: Check, detail: impl Into<String>) -> Self {
        Error::Synthesis {
            check,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
