use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::RealVector;
use crate::synthesis::GainSet;

/// The family of control laws, from purely decentralized (leader signal fed
/// directly) to distributed (leader signal replaced by an observer estimate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// `u_i = K_1i x_i + K_2i v`.
    DecentralizedFullInfo,
    /// Luenberger compensator on `(x_i, v_u)` fed with `v_m`.
    DecentralizedMeasurement,
    /// `u_i = K_1i x_i + K_2i η_i`; needs the whole `v` measured.
    DistributedFullInfo,
    /// Luenberger compensator on `(x_i, v_u)` fed with `η_i`.
    #[default]
    DistributedMeasurement,
    /// Distributed measurement law with no unmeasured exogenous part.
    SpecialVmOnly,
    /// Measurement law with no measured exogenous part; no observer.
    SpecialVuOnly,
}

impl LawKind {
    pub const ALL: [LawKind; 6] = [
        LawKind::DecentralizedFullInfo,
        LawKind::DecentralizedMeasurement,
        LawKind::DistributedFullInfo,
        LawKind::DistributedMeasurement,
        LawKind::SpecialVmOnly,
        LawKind::SpecialVuOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LawKind::DecentralizedFullInfo => "decentralized_full_info",
            LawKind::DecentralizedMeasurement => "decentralized_measurement",
            LawKind::DistributedFullInfo => "distributed_full_info",
            LawKind::DistributedMeasurement => "distributed_measurement",
            LawKind::SpecialVmOnly => "special_vm_only",
            LawKind::SpecialVuOnly => "special_vu_only",
        }
    }

    /// True when the agents run a distributed observer of `v_m`.
    pub fn uses_observer(self) -> bool {
        matches!(
            self,
            LawKind::DistributedFullInfo | LawKind::DistributedMeasurement | LawKind::SpecialVmOnly
        )
    }

    /// True when each agent carries a Luenberger compensator state `z_i`.
    pub fn uses_compensator(self) -> bool {
        !matches!(
            self,
            LawKind::DecentralizedFullInfo | LawKind::DistributedFullInfo
        )
    }

    /// The same law with the exact leader signal in place of the estimate.
    pub fn decentralized(self) -> LawKind {
        match self {
            LawKind::DistributedFullInfo => LawKind::DecentralizedFullInfo,
            LawKind::DistributedMeasurement | LawKind::SpecialVmOnly => {
                LawKind::DecentralizedMeasurement
            }
            other => other,
        }
    }

    /// Checks the exogenous partition the law relies on.
    pub fn check_partition(self, q_u: usize, q_m: usize) -> Result<()> {
        let bad = match self {
            LawKind::DistributedFullInfo | LawKind::SpecialVmOnly => q_u != 0,
            LawKind::SpecialVuOnly => q_m != 0,
            _ => false,
        };
        if bad {
            return Err(Error::Model(format!(
                "law {self} does not fit an exosystem with q_u = {q_u}, q_m = {q_m}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LawKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Model(format!("unknown law kind `{s}`")))
    }
}

/// Which estimator runs on the follower network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverVariant {
    #[default]
    Continuous,
    Discrete,
    Adaptive,
    SyncRef,
}

impl ObserverVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ObserverVariant::Continuous => "continuous",
            ObserverVariant::Discrete => "discrete",
            ObserverVariant::Adaptive => "adaptive",
            ObserverVariant::SyncRef => "sync_ref",
        }
    }
}

impl FromStr for ObserverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ObserverVariant::Continuous,
            ObserverVariant::Discrete,
            ObserverVariant::Adaptive,
            ObserverVariant::SyncRef,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::Model(format!("unknown observer variant `{s}`")))
    }
}

/// Gain rule for the continuous observer; `Auto` picks from the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignChoice {
    #[default]
    Auto,
    StaticRiccati,
    StaticIdentity,
    SwitchingMarginal,
    SwitchingIdentity,
}

impl DesignChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignChoice::Auto => "auto",
            DesignChoice::StaticRiccati => "static_riccati",
            DesignChoice::StaticIdentity => "static_identity",
            DesignChoice::SwitchingMarginal => "switching_marginal",
            DesignChoice::SwitchingIdentity => "switching_identity",
        }
    }
}

impl FromStr for DesignChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            DesignChoice::Auto,
            DesignChoice::StaticRiccati,
            DesignChoice::StaticIdentity,
            DesignChoice::SwitchingMarginal,
            DesignChoice::SwitchingIdentity,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::Model(format!("unknown observer design `{s}`")))
    }
}

/// Initial value of per-follower estimates.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialEstimate {
    #[default]
    Zero,
    /// The leader's true value, i.e. zero initial estimation error.
    Leader,
    Explicit(Vec<RealVector>),
}

/// Everything besides the scenario that selects and tunes a law.
#[derive(Debug, Clone, PartialEq)]
pub struct LawConfig {
    pub kind: LawKind,
    pub observer: ObserverVariant,
    pub design: DesignChoice,
    /// Replaces the designed μ.
    pub mu: Option<f64>,
    /// Multiplies the (designed or replaced) μ.
    pub mu_scale: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Tracking / estimation threshold for convergence metrics.
    pub threshold: f64,
    pub eta0: InitialEstimate,
    /// Initial leader-matrix estimates of the adaptive observer.
    pub s0: InitialEstimate,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            kind: LawKind::default(),
            observer: ObserverVariant::default(),
            design: DesignChoice::default(),
            mu: None,
            mu_scale: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            threshold: 1e-3,
            eta0: InitialEstimate::Zero,
            s0: InitialEstimate::Zero,
        }
    }
}

/// A synthesized law ready for assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub kind: LawKind,
    pub gains: GainSet,
}

impl ControlLaw {
    pub fn new(gains: GainSet) -> Result<Self> {
        let kind = gains.kind;
        if kind.uses_observer() && !gains.agents.is_empty() && gains.observer.is_none() {
            return Err(Error::Assembly(format!("law {kind} needs observer gains")));
        }
        if kind.uses_compensator() && gains.agents.iter().any(|g| g.l.is_none()) {
            return Err(Error::Assembly(format!(
                "law {kind} needs observer gains L_i"
            )));
        }
        Ok(ControlLaw { kind, gains })
    }

    /// Compensator dimension per agent.
    pub fn compensator_dims(&self) -> Vec<usize> {
        self.gains
            .agents
            .iter()
            .map(|g| g.l.as_ref().map_or(0, |l| l.nrows()))
            .collect()
    }
}
