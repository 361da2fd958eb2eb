use serde::Serialize;

use super::{Exosystem, PlantAgent};
use crate::error::{Error, Result};
use crate::numkit::{pbh_detectable, pbh_stabilizable, Complex64};
use crate::synthesis::regulator_least_squares;
use crate::topology::{verify_jointly_connected, SwitchingSchedule, Window};

/// Followers, leader and communication topology plus the simulation grid.
///
/// A scenario without agents describes an observer-only experiment: the
/// schedule alone fixes the number of followers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<PlantAgent>,
    pub exo: Exosystem,
    pub topology: SwitchingSchedule,
    pub horizon: f64,
    pub step: f64,
    /// Window length for the joint-connectivity certificate.
    pub window: Option<f64>,
}

impl Scenario {
    pub fn new(
        agents: Vec<PlantAgent>,
        exo: Exosystem,
        topology: SwitchingSchedule,
        horizon: f64,
        step: f64,
    ) -> Result<Self> {
        let sc = Scenario {
            agents,
            exo,
            topology,
            horizon,
            step,
            window: None,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.window = Some(window);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (q_u, q_m) = (self.exo.q_u(), self.exo.q_m());
        for (i, a) in self.agents.iter().enumerate() {
            a.validate(q_u, q_m)
                .map_err(|e| Error::Model(format!("agent {}: {e}", i + 1)))?;
        }
        let followers = self.topology.followers();
        if followers == 0 {
            return Err(Error::Model("topology has no followers".into()));
        }
        if !self.agents.is_empty() && followers != self.agents.len() {
            return Err(Error::Model(format!(
                "topology has {followers} followers but {} agents are defined",
                self.agents.len()
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::Model(format!(
                "horizon must be finite and >= 0, got {}",
                self.horizon
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Model(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if let Some(w) = self.window {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Model(format!("window must be positive, got {w}")));
            }
        }
        Ok(())
    }

    pub fn followers(&self) -> usize {
        self.topology.followers()
    }

    pub fn observer_only(&self) -> bool {
        self.agents.is_empty()
    }

    /// The configured window, else the schedule period, else the last
    /// switch plus one dwell time.
    pub fn connectivity_window(&self) -> f64 {
        self.window.or(self.topology.period()).unwrap_or_else(|| {
            let last = self.topology.switches().last().map_or(0.0, |s| s.0);
            let dwell = self.topology.dwell();
            if dwell.is_finite() {
                last + dwell
            } else {
                last.max(1.0)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentAssumptions {
    pub stabilizable: bool,
    /// Composite pair `(C̄, Ā)` over `(x, v_u)`.
    pub detectable: bool,
    pub regulator_exact: bool,
    pub regulator_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyVerdict {
    Static {
        reachable: bool,
    },
    Switching {
        certified: bool,
        window: f64,
        failing: Option<(f64, f64)>,
    },
}

impl TopologyVerdict {
    pub fn passed(&self) -> bool {
        match self {
            TopologyVerdict::Static { reachable } => *reachable,
            TopologyVerdict::Switching { certified, .. } => *certified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Exosystem eigenvalues with negative real part (warning only).
    pub stable_exo_modes: Vec<(f64, f64)>,
    pub agents: Vec<AgentAssumptions>,
    pub topology: TopologyVerdict,
}

/// Runs the per-agent and topology checks. Failures land in the report;
/// only malformed input produces an error.
pub fn validate_assumptions(sc: &Scenario) -> Result<AssumptionReport> {
    let s = sc.exo.s();
    let mut agents = Vec::with_capacity(sc.agents.len());
    for agent in &sc.agents {
        let (a_bar, c_bar) = agent.composite_pair(sc.exo.s_u());
        let reg = regulator_least_squares(agent, &s)?;
        agents.push(AgentAssumptions {
            stabilizable: pbh_stabilizable(&agent.a, &agent.b)?,
            detectable: pbh_detectable(&c_bar, &a_bar)?,
            regulator_exact: reg.exact,
            regulator_residual: reg.residual,
        });
    }
    let topology = match sc.topology.static_graph() {
        Some(g) => TopologyVerdict::Static {
            reachable: sc.topology.graphs()[g].reachable_from_leader(),
        },
        None => {
            let window = sc.connectivity_window();
            let v = verify_jointly_connected(&sc.topology, window, sc.horizon.max(window))?;
            TopologyVerdict::Switching {
                certified: v.certified,
                window,
                failing: v.failing.map(|Window { start, end }| (start, end)),
            }
        }
    };
    let stable_exo_modes = sc
        .exo
        .stable_modes()?
        .into_iter()
        .map(|l: Complex64| (l.re, l.im))
        .collect();
    Ok(AssumptionReport {
        stable_exo_modes,
        agents,
        topology,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Edge, WeightedDigraph};
    use nalgebra::{dmatrix, dvector};

    fn harmonic() -> Exosystem {
        Exosystem::measured(
            dmatrix![0.0, 1.0; -1.0, 0.0],
            dmatrix![1.0, 0.0],
            dvector![1.0, 0.0],
        )
        .unwrap()
    }

    fn integrator() -> PlantAgent {
        PlantAgent::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0], 0, 2)
            .with_error_map(&dmatrix![-1.0, 0.0])
            .unwrap()
    }

    fn one_follower() -> SwitchingSchedule {
        SwitchingSchedule::fixed(
            WeightedDigraph::from_edges(1, &[Edge::new(0, 1, 1.0)], false).unwrap(),
        )
    }

    #[test]
    fn integrator_tracking_harmonic_passes() {
        let sc = Scenario::new(vec![integrator()], harmonic(), one_follower(), 10.0, 1e-3).unwrap();
        let r = validate_assumptions(&sc).unwrap();
        assert!(r.stable_exo_modes.is_empty());
        let a = &r.agents[0];
        assert!(a.stabilizable && a.detectable && a.regulator_exact);
        assert!(r.topology.passed());
    }

    #[test]
    fn unstable_agent_without_input_fails_stabilizability() {
        let agent = PlantAgent::new(dmatrix![1.0], dmatrix![0.0], dmatrix![1.0], 0, 2);
        let sc = Scenario::new(vec![agent], harmonic(), one_follower(), 1.0, 1e-3).unwrap();
        let r = validate_assumptions(&sc).unwrap();
        assert!(!r.agents[0].stabilizable);
    }

    #[test]
    fn stable_exosystem_is_a_warning() {
        let exo = Exosystem::measured(dmatrix![-1.0], dmatrix![1.0], dvector![1.0]).unwrap();
        let agent = PlantAgent::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0], 0, 1);
        let sc = Scenario::new(vec![agent], exo, one_follower(), 1.0, 1e-3).unwrap();
        let r = validate_assumptions(&sc).unwrap();
        assert_eq!(r.stable_exo_modes, vec![(-1.0, 0.0)]);
        assert!(r.agents[0].regulator_exact);
    }

    #[test]
    fn follower_count_must_match() {
        let r = Scenario::new(
            vec![integrator(), integrator()],
            harmonic(),
            one_follower(),
            1.0,
            1e-3,
        );
        assert!(r.is_err());
        assert!(Scenario::new(vec![], harmonic(), one_follower(), 1.0, 1e-3).is_ok());
    }
}
