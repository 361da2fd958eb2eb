use serde::{Deserialize, Serialize};

use super::regulator::{solve_regulator, RegulatorSolution};
use crate::error::{Check, Error, Result};
use crate::numkit::{eigenvalues, is_hurwitz, serde_matrix, solve_are, RealMatrix};
use crate::observers::{design_observer, ObserverGains};
use crate::plantmodel::{PlantAgent, Scenario};
use crate::simkit::{LawConfig, LawKind};

/// `K_1 = −BᵀP` with `P` the stabilizing solution of the state-feedback ARE.
pub fn design_feedback(agent: &PlantAgent) -> Result<RealMatrix> {
    let p = solve_are(&agent.a, &agent.b).map_err(|e| match e {
        Error::NotStabilizable => Error::synthesis(
            Check::Stabilizability,
            "(A, B) has an uncontrollable mode with Re >= 0",
        ),
        other => other,
    })?;
    let k1 = -(agent.b.transpose() * p);
    if !is_hurwitz(&(&agent.a + &agent.b * &k1), 0.0)? {
        return Err(Error::Numeric("A + B K_1 is not Hurwitz".into()));
    }
    Ok(k1)
}

/// `K_2 = U − K_1 X`.
pub fn feedforward(x: &RealMatrix, u: &RealMatrix, k1: &RealMatrix) -> RealMatrix {
    u - k1 * x
}

/// Luenberger gain for the composite state `(x, v_u)`, from the ARE of the
/// dual pair `(Āᵀ, C̄ᵀ)`: `L = P C̄ᵀ`. Returns `(L, A_L = Ā − L C̄)`.
pub fn design_luenberger(agent: &PlantAgent, s_u: &RealMatrix) -> Result<(RealMatrix, RealMatrix)> {
    let (a_bar, c_bar) = agent.composite_pair(s_u);
    let p = solve_are(&a_bar.transpose(), &c_bar.transpose()).map_err(|e| match e {
        Error::NotStabilizable => Error::synthesis(
            Check::Detectability,
            "composite pair (C_m, F_mu; A, E_u, S_u) has an unobservable mode with Re >= 0",
        ),
        other => other,
    })?;
    let l = p * c_bar.transpose();
    let a_l = &a_bar - &l * &c_bar;
    if !is_hurwitz(&a_l, 0.0)? {
        return Err(Error::Numeric(
            "composite observer matrix is not Hurwitz".into(),
        ));
    }
    Ok((l, a_l))
}

/// Gains of one follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentGains {
    #[serde(with = "serde_matrix")]
    pub k1: RealMatrix,
    /// `[K_2u, K_2m]`.
    #[serde(with = "serde_matrix")]
    pub k2: RealMatrix,
    /// Compensator gain, present for measurement laws.
    #[serde(with = "serde_matrix::option", default)]
    pub l: Option<RealMatrix>,
    pub q_u: usize,
    pub regulator: RegulatorSolution,
    /// Largest real part of `σ(A + B K_1)`.
    pub feedback_margin: f64,
    /// Largest real part of `σ(A_L)`, when a compensator is used.
    pub observer_margin: Option<f64>,
}

impl AgentGains {
    pub fn k2u(&self) -> RealMatrix {
        self.k2.columns(0, self.q_u).into_owned()
    }

    pub fn k2m(&self) -> RealMatrix {
        self.k2
            .columns(self.q_u, self.k2.ncols() - self.q_u)
            .into_owned()
    }
}

/// All gains of one scenario plus a human-readable account of where each
/// came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub kind: LawKind,
    pub agents: Vec<AgentGains>,
    pub observer: Option<ObserverGains>,
    pub provenance: Vec<String>,
}

impl GainSet {
    /// Copy with every `K_1` negated (destabilization experiments).
    pub fn with_flipped_feedback(&self) -> GainSet {
        let mut g = self.clone();
        for a in &mut g.agents {
            a.k1 = -&a.k1;
        }
        g.provenance
            .push("K_1 sign flipped for a destabilization run".into());
        g
    }
}

fn max_real(m: &RealMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Regulator solution, feedback, feedforward and (for measurement laws)
/// compensator gain of one agent.
pub fn synthesize_agent(
    agent: &PlantAgent,
    s: &RealMatrix,
    s_u: &RealMatrix,
    with_compensator: bool,
) -> Result<AgentGains> {
    let regulator = solve_regulator(agent, s).map_err(|e| match e {
        Error::NoSolution { residual } => Error::synthesis(
            Check::RegulatorEquations,
            format!("least-squares residual {residual:.3e}"),
        ),
        other => other,
    })?;
    let k1 = design_feedback(agent)?;
    let k2 = feedforward(&regulator.x, &regulator.u, &k1);
    let feedback_margin = max_real(&(&agent.a + &agent.b * &k1))?;
    let (l, observer_margin) = if with_compensator {
        let (l, a_l) = design_luenberger(agent, s_u)?;
        (Some(l), Some(max_real(&a_l)?))
    } else {
        (None, None)
    };
    Ok(AgentGains {
        k1,
        k2,
        l,
        q_u: agent.q_u(),
        regulator,
        feedback_margin,
        observer_margin,
    })
}

/// Synthesizes every gain the configured law needs.
///
/// Agent failures are reported with the 1-based agent index.
pub fn synthesize(sc: &Scenario, cfg: &LawConfig) -> Result<GainSet> {
    let kind = cfg.kind;
    kind.check_partition(sc.exo.q_u(), sc.exo.q_m())?;
    let s = sc.exo.s();
    let mut provenance = Vec::new();
    let mut agents = Vec::with_capacity(sc.agents.len());
    for (i, agent) in sc.agents.iter().enumerate() {
        let g = synthesize_agent(agent, &s, sc.exo.s_u(), kind.uses_compensator()).map_err(
            |e| match e {
                Error::Synthesis { check, detail } => Error::Synthesis {
                    check,
                    detail: format!("agent {}: {detail}", i + 1),
                },
                other => other,
            },
        )?;
        let mut note = format!(
            "agent {}: K_1 = -B^T P from the state-feedback Riccati equation (max Re {:.4}), K_2 = U - K_1 X",
            i + 1,
            g.feedback_margin
        );
        if let Some(m) = g.observer_margin {
            note.push_str(&format!(
                ", L = P C^T from the dual Riccati equation of the composite pair (max Re {m:.4})"
            ));
        }
        provenance.push(note);
        agents.push(g);
    }
    let observer = if kind.uses_observer() || sc.observer_only() {
        let obs = design_observer(sc, cfg)?;
        provenance.push(format!("observer: {}", obs.describe()));
        Some(obs)
    } else {
        None
    };
    Ok(GainSet {
        kind,
        agents,
        observer,
        provenance,
    })
}
