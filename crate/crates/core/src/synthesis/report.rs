use std::fmt::Write as _;

use serde::Serialize;

use super::regulator::check_rank_condition;
use crate::error::{Check, Error, Result};
use crate::observers::design_observer;
use crate::plantmodel::{validate_assumptions, Scenario, TopologyVerdict};
use crate::simkit::{LawConfig, ObserverVariant};
use crate::topology::union_graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Mandatory,
    Advisory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportItem {
    pub check: Check,
    /// 1-based follower index for per-agent checks.
    pub agent: Option<usize>,
    pub passed: bool,
    pub severity: Severity,
    pub detail: String,
}

/// Every solvability check for one scenario and law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolvabilityReport {
    pub items: Vec<ReportItem>,
}

impl SolvabilityReport {
    /// True when every mandatory check passed.
    pub fn ok(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportItem> {
        self.items
            .iter()
            .filter(|i| !i.passed && i.severity == Severity::Mandatory)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ReportItem> {
        self.items
            .iter()
            .filter(|i| !i.passed && i.severity == Severity::Advisory)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let tag = match (item.passed, item.severity) {
                (true, _) => "ok  ",
                (false, Severity::Advisory) => "warn",
                (false, Severity::Mandatory) => "FAIL",
            };
            let who = item
                .agent
                .map(|a| format!(" agent {a}"))
                .unwrap_or_default();
            let _ = writeln!(out, "[{tag}] {}{who}: {}", item.check, item.detail);
        }
        let verdict = if self.ok() {
            "solvable"
        } else {
            "not certified"
        };
        let _ = writeln!(out, "verdict: {verdict}");
        out
    }
}

fn item(
    check: Check,
    agent: Option<usize>,
    passed: bool,
    severity: Severity,
    detail: String,
) -> ReportItem {
    ReportItem {
        check,
        agent,
        passed,
        severity,
        detail,
    }
}

/// Aggregates the assumption checks, rank conditions, regulator residuals,
/// topology certificate and observer design preconditions.
///
/// The rank condition is sufficient for every `(E, F)`; when it fails but
/// the regulator equations are still solvable for the given maps, it is
/// reported as a warning.
pub fn solvability_report(sc: &Scenario, cfg: &LawConfig) -> Result<SolvabilityReport> {
    use Severity::*;
    let mut items = Vec::new();
    let base = validate_assumptions(sc)?;
    let s = sc.exo.s();

    items.push(item(
        Check::ExosystemModes,
        None,
        base.stable_exo_modes.is_empty(),
        Advisory,
        if base.stable_exo_modes.is_empty() {
            "no exosystem mode with negative real part".into()
        } else {
            format!(
                "stable exosystem modes {:?} decay on their own",
                base.stable_exo_modes
            )
        },
    ));

    let measurement = cfg.kind.uses_compensator();
    for (i, (agent, a)) in sc.agents.iter().zip(&base.agents).enumerate() {
        let who = Some(i + 1);
        items.push(item(
            Check::Stabilizability,
            who,
            a.stabilizable,
            Mandatory,
            if a.stabilizable {
                "(A, B) stabilizable"
            } else {
                "(A, B) has an uncontrollable mode with Re >= 0"
            }
            .into(),
        ));
        items.push(item(
            Check::Detectability,
            who,
            a.detectable,
            if measurement { Mandatory } else { Advisory },
            if a.detectable {
                "composite measurement pair detectable".into()
            } else {
                "composite measurement pair has an unobservable mode with Re >= 0".into()
            },
        ));
        items.push(item(
            Check::RegulatorEquations,
            who,
            a.regulator_exact,
            Mandatory,
            format!("residual {:.3e}", a.regulator_residual),
        ));
        let rank = check_rank_condition(agent, &s)?;
        let detail = if rank.pass {
            format!(
                "full rank at all {} exosystem eigenvalues",
                rank.entries.len()
            )
        } else {
            rank.failures()
                .map(|e| {
                    format!(
                        "rank {} < {} at lambda = {:.6}{:+.6}i",
                        e.rank, e.required, e.lambda.0, e.lambda.1
                    )
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        let severity = if a.regulator_exact {
            Advisory
        } else {
            Mandatory
        };
        items.push(item(Check::RankCondition, who, rank.pass, severity, detail));
    }

    if cfg.observer == ObserverVariant::SyncRef {
        let graphs: Vec<_> = sc
            .topology
            .graphs_used(sc.horizon.max(sc.step))
            .into_iter()
            .map(|g| &sc.topology.graphs()[g])
            .collect();
        let union = union_graph(&graphs)?;
        let ok = union.followers_have_spanning_tree();
        items.push(item(
            Check::JointConnectivity,
            None,
            ok,
            Mandatory,
            if ok {
                "follower union graph has a spanning tree"
            } else {
                "follower union graph has no spanning tree"
            }
            .into(),
        ));
    } else {
        match &base.topology {
            TopologyVerdict::Static { reachable } => items.push(item(
                Check::LeaderReachability,
                None,
                *reachable,
                Mandatory,
                if *reachable {
                    "every follower reachable from the leader"
                } else {
                    "some follower is not reachable from the leader"
                }
                .into(),
            )),
            TopologyVerdict::Switching {
                certified,
                window,
                failing,
            } => items.push(item(
                Check::JointConnectivity,
                None,
                *certified,
                Mandatory,
                match failing {
                    None => {
                        format!("union graphs over windows of length {window} reach every follower")
                    }
                    Some((a, b)) => {
                        format!("not certified: no leader-reachable union on [{a}, {b})")
                    }
                },
            )),
        }
    }

    if cfg.kind.uses_observer() || sc.observer_only() {
        match design_observer(sc, cfg) {
            Ok(obs) => items.push(item(
                Check::ObserverDesign,
                None,
                true,
                Mandatory,
                obs.describe(),
            )),
            Err(Error::Synthesis { check, detail }) => {
                items.push(item(check, None, false, Mandatory, detail))
            }
            Err(Error::Connectivity(detail)) => {
                // already reported by the topology item when that failed
                if items
                    .iter()
                    .all(|i| i.passed || i.check != Check::LeaderReachability)
                {
                    items.push(item(
                        Check::LeaderReachability,
                        None,
                        false,
                        Mandatory,
                        detail,
                    ));
                }
            }
            Err(e) => items.push(item(
                Check::ObserverDesign,
                None,
                false,
                Mandatory,
                e.to_string(),
            )),
        }
    }
    Ok(SolvabilityReport { items })
}
