use log::{info, warn};

use super::assemble::{assemble, ClosedLoop, StateLayout};
use super::integrate::{check_state, integrate, rk4_transition, substeps};
use super::law::{ControlLaw, InitialEstimate, LawConfig, ObserverVariant};
use super::metrics::{metrics, Metrics};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::numkit::{block_diag, RealMatrix, RealVector};
use crate::observers::{
    consensus_weights, stack, step_adaptive, step_discrete, sync_ref_generator, ObserverBank,
    ObserverGains,
};
use crate::plantmodel::Scenario;
use crate::synthesis::{synthesize, GainSet};

/// Gains, trajectory and summary of one simulation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub gains: GainSet,
    pub trajectory: Trajectory,
    pub metrics: Metrics,
}

/// Synthesizes (unless gains are given), simulates and summarizes.
pub fn run(sc: &Scenario, cfg: &LawConfig, gains: Option<GainSet>) -> Result<RunOutcome> {
    let gains = match gains {
        Some(g) => g,
        None => synthesize(sc, cfg)?,
    };
    let variant = gains.observer.as_ref().map_or(cfg.observer, |o| o.variant);
    let trajectory = match variant {
        ObserverVariant::Continuous => {
            let law = ControlLaw::new(gains.clone())?;
            let cl = assemble(sc, &law, &cfg.eta0)?;
            integrate(&cl, &sc.topology, sc.horizon, sc.step)?
        }
        other => {
            if !sc.agents.is_empty() {
                return Err(Error::Model(format!(
                    "the {} observer runs on observer-only scenarios",
                    other.as_str()
                )));
            }
            let og = gains.observer.as_ref().ok_or_else(|| {
                Error::Assembly("observer-only run without observer gains".into())
            })?;
            match other {
                ObserverVariant::Discrete => run_discrete(sc, og, &cfg.eta0)?,
                ObserverVariant::Adaptive => run_adaptive(sc, og, &cfg.eta0, &cfg.s0)?,
                ObserverVariant::SyncRef => run_sync_ref(sc, og, &cfg.eta0)?,
                ObserverVariant::Continuous => unreachable!("handled above"),
            }
        }
    };
    let m = metrics(&trajectory, Some(&gains), cfg.threshold);
    info!(
        "run finished at t = {}: max final tracking error {:.3e}, converged = {}",
        trajectory.final_time(),
        m.max_tracking_final,
        m.converged
    );
    Ok(RunOutcome {
        gains,
        trajectory,
        metrics: m,
    })
}

fn observer_layout(sc: &Scenario) -> StateLayout {
    StateLayout::new(&[], &[], sc.followers(), true, sc.exo.q_u(), sc.exo.q_m())
}

fn initial_bank(
    sc: &Scenario,
    eta0: &InitialEstimate,
    variant: ObserverVariant,
) -> Result<ObserverBank> {
    let n = sc.followers();
    let vm = sc.exo.v0_m();
    let eta = match eta0 {
        InitialEstimate::Zero => vec![RealVector::zeros(vm.len()); n],
        InitialEstimate::Leader => vec![vm.clone(); n],
        InitialEstimate::Explicit(v) => {
            if v.len() != n || v.iter().any(|e| e.len() != vm.len()) {
                return Err(Error::Model(format!(
                    "need {n} initial estimates of length {}",
                    vm.len()
                )));
            }
            v.clone()
        }
    };
    Ok(ObserverBank::new(variant, eta))
}

fn full_state(bank: &ObserverBank, v: &RealVector) -> RealVector {
    let eta = bank.stacked();
    RealVector::from_iterator(eta.len() + v.len(), eta.iter().chain(v.iter()).copied())
}

/// Exact recursion of the discrete observer; one sample per step, `t = k`.
fn run_discrete(sc: &Scenario, og: &ObserverGains, eta0: &InitialEstimate) -> Result<Trajectory> {
    let steps = sc.horizon.round();
    if !(steps >= 1.0) {
        return Err(Error::Model(
            "discrete horizon must be at least one step".into(),
        ));
    }
    let (s, c0) = (sc.exo.s_m(), sc.exo.c_m0());
    let s_full = sc.exo.s();
    let mut bank = initial_bank(sc, eta0, ObserverVariant::Discrete)?;
    let mut v = sc.exo.v0().clone();
    let mut tr = Trajectory::new(observer_layout(sc), vec![], vec![]);
    let graphs = sc.topology.graphs();
    for k in 0..=steps as usize {
        let t = k as f64;
        let g = sc.topology.active_at(t);
        let x = full_state(&bank, &v);
        check_state(&x, t)?;
        tr.push(t, g, x);
        let q_u = sc.exo.q_u();
        let vm = v.rows(q_u, s.nrows()).into_owned();
        bank = step_discrete(&bank, og, s, c0, &vm, &graphs[g])?;
        v = &s_full * v;
    }
    Ok(tr)
}

fn initial_s_estimates(sc: &Scenario, s0: &InitialEstimate) -> Result<Vec<RealMatrix>> {
    let n = sc.followers();
    let s = sc.exo.s_m();
    let q = s.nrows();
    match s0 {
        InitialEstimate::Zero => Ok(vec![RealMatrix::zeros(q, q); n]),
        InitialEstimate::Leader => Ok(vec![s.clone(); n]),
        InitialEstimate::Explicit(v) => {
            if v.len() != n || v.iter().any(|e| e.len() != q * q) {
                return Err(Error::Model(format!(
                    "need {n} initial leader-matrix estimates with {} entries",
                    q * q
                )));
            }
            Ok(v.iter()
                .map(|e| RealMatrix::from_column_slice(q, q, e.as_slice()))
                .collect())
        }
    }
}

/// RK4 on the adaptive observer, leader advanced alongside.
fn run_adaptive(
    sc: &Scenario,
    og: &ObserverGains,
    eta0: &InitialEstimate,
    s0: &InitialEstimate,
) -> Result<Trajectory> {
    let s = sc.exo.s_m();
    let q_u = sc.exo.q_u();
    let mut bank = initial_bank(sc, eta0, ObserverVariant::Adaptive)?;
    bank = ObserverBank::adaptive(bank.eta, initial_s_estimates(sc, s0)?);
    let s_err = |b: &ObserverBank| b.s_est.iter().map(|si| (si - s).norm()).fold(0.0, f64::max);
    let mut v = sc.exo.v0().clone();
    let mut tr = Trajectory::new(observer_layout(sc), vec![], vec![]);
    let mut errs = Vec::new();
    let segments = sc.topology.segments(sc.horizon);
    if segments.is_empty() {
        return Err(Error::Model(
            "horizon must be positive; the trajectory would be empty".into(),
        ));
    }
    tr.push(0.0, segments[0].graph, full_state(&bank, &v));
    errs.push(s_err(&bank));
    let s_full = sc.exo.s();
    let graphs = sc.topology.graphs();
    for seg in &segments {
        let k = substeps(seg.len(), sc.step);
        let h = seg.len() / k as f64;
        let phi_v = rk4_transition(&s_full, h);
        for j in 1..=k {
            let vm = v.rows(q_u, s.nrows()).into_owned();
            bank = step_adaptive(&bank, og, s, &vm, &graphs[seg.graph], h)?;
            v = &phi_v * v;
            let t = if j == k {
                seg.end
            } else {
                seg.start + j as f64 * h
            };
            let x = full_state(&bank, &v);
            check_state(&x, t)?;
            if bank.s_est.iter().any(|m| m.iter().any(|e| !e.is_finite())) {
                return Err(Error::Divergence { time: t });
            }
            tr.push(t, seg.graph, x);
            errs.push(s_err(&bank));
        }
    }
    tr.s_error = Some(errs);
    Ok(tr)
}

/// Leaderless generator, with the `v` block carrying the predicted common
/// trajectory `e^{St} Σ r_j η_j(0)`.
fn run_sync_ref(sc: &Scenario, og: &ObserverGains, eta0: &InitialEstimate) -> Result<Trajectory> {
    let (s, c0) = (sc.exo.s_m(), sc.exo.c_m0());
    let bank = initial_bank(sc, eta0, ObserverVariant::SyncRef)?;
    let n = sc.followers();
    let weights = match sc.topology.static_graph() {
        Some(g) => consensus_weights(&sc.topology.graphs()[g])?,
        None => {
            if !sc.topology.all_undirected() {
                warn!("no closed-form common limit for directed switching graphs; reference block uses the plain average");
            }
            RealVector::from_element(n, 1.0 / n as f64)
        }
    };
    let mut center = RealVector::zeros(s.nrows());
    for (w, e) in weights.iter().zip(&bank.eta) {
        center += e * *w;
    }
    let layout = observer_layout(sc);
    let mut initial = stack(&bank.eta);
    let v_u = sc.exo.v0_u();
    initial = RealVector::from_iterator(
        initial.len() + v_u.len() + center.len(),
        initial
            .iter()
            .chain(v_u.iter())
            .chain(center.iter())
            .copied(),
    );
    let generators = sc
        .topology
        .graphs()
        .iter()
        .map(|g| block_diag(&[&sync_ref_generator(s, og, c0, g), &sc.exo.s()]))
        .collect();
    let cl = ClosedLoop {
        kind: crate::simkit::LawKind::DistributedMeasurement,
        layout,
        generators,
        u_maps: vec![],
        e_maps: vec![],
        initial,
    };
    integrate(&cl, &sc.topology, sc.horizon, sc.step)
}
