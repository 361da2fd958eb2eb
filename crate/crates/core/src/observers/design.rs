use serde::{Deserialize, Serialize};

use crate::error::{Check, Error, Result};
use crate::numkit::{
    eigenvalues, is_hurwitz, is_marginally_stable, kron, norm2, pbh_observable, real_modal_basis,
    serde_matrix, solve_are, solve_lyap_marginal, RealMatrix, SPECTRAL_ATOL,
};
use crate::plantmodel::Scenario;
use crate::simkit::{DesignChoice, LawConfig, ObserverVariant};
use crate::topology::{min_real_eig_h, SwitchingSchedule};

/// Which gain rule produced an observer design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignPath {
    /// Static graph: `L_0 = P C_0ᵀ` from the leader Riccati equation, `μ = 1/δ`.
    StaticRiccati,
    /// Static graph, `C_0 = I`: `L_0 = I` with a large enough `μ`.
    StaticIdentity,
    /// Undirected switching graphs, marginally stable `S`: `μ = 1`,
    /// `L_0 = P C_0ᵀ` with `P S ᵀ + S P ≤ 0`.
    SwitchingMarginal,
    /// Switching graphs, `C_0 = I`, no unstable leader mode: `L_0 = I`, any `μ`.
    SwitchingIdentity,
    /// Discrete observer with the modal-transform gain and the norm bound on `μ`.
    DiscreteModal,
    /// Adaptive observer estimating `S` as well as `v`.
    Adaptive,
    /// Leaderless, undirected: marginal `P`, `μ = 1`.
    SyncRefMarginal,
    /// Leaderless, static directed graph: Riccati `P`, `μ = max(1, 1/λ₂)`.
    SyncRefRiccati,
    /// Leaderless, `C_0 = I`: `L_0 = I`, any `μ`.
    SyncRefIdentity,
}

impl DesignPath {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignPath::StaticRiccati => "static_riccati",
            DesignPath::StaticIdentity => "static_identity",
            DesignPath::SwitchingMarginal => "switching_marginal",
            DesignPath::SwitchingIdentity => "switching_identity",
            DesignPath::DiscreteModal => "discrete_modal",
            DesignPath::Adaptive => "adaptive",
            DesignPath::SyncRefMarginal => "sync_ref_marginal",
            DesignPath::SyncRefRiccati => "sync_ref_riccati",
            DesignPath::SyncRefIdentity => "sync_ref_identity",
        }
    }

    fn rule(self) -> &'static str {
        match self {
            DesignPath::StaticRiccati => {
                "L0 = P C0^T with S P + P S^T - P C0^T C0 P + I = 0, mu = 1/delta"
            }
            DesignPath::StaticIdentity => "L0 = I, mu = (1 + max(0, max Re eig S))/delta + 1",
            DesignPath::SwitchingMarginal => "L0 = P C0^T with P S^T + S P <= 0, mu = 1",
            DesignPath::SwitchingIdentity => "L0 = I, mu > 0 arbitrary",
            DesignPath::DiscreteModal => {
                "L0 = S T^T T C0^T from the modal transform T, mu at the norm bound"
            }
            DesignPath::Adaptive => "adaptive estimates of S and v with gains mu1, mu2",
            DesignPath::SyncRefMarginal => "leaderless, L0 = P C0^T with P S^T + S P <= 0, mu = 1",
            DesignPath::SyncRefRiccati => {
                "leaderless, L0 = P C0^T from the leader Riccati equation, mu = max(1, 1/lambda2)"
            }
            DesignPath::SyncRefIdentity => "leaderless, L0 = I, mu > 0 arbitrary",
        }
    }
}

/// Gains of the distributed observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverGains {
    pub path: DesignPath,
    pub variant: ObserverVariant,
    pub mu: f64,
    #[serde(with = "serde_matrix")]
    pub l0: RealMatrix,
    pub mu1: f64,
    pub mu2: f64,
    /// Graph constant the design used (`δ` or `λ₂`).
    pub graph_constant: Option<f64>,
    /// Largest admissible `μ`, for rules with an upper bound.
    pub mu_bound: Option<f64>,
}

impl ObserverGains {
    fn new(path: DesignPath, variant: ObserverVariant, mu: f64, l0: RealMatrix) -> Self {
        ObserverGains {
            path,
            variant,
            mu,
            l0,
            mu1: 1.0,
            mu2: 1.0,
            graph_constant: None,
            mu_bound: None,
        }
    }

    pub fn describe(&self) -> String {
        let mut s = format!(
            "{} ({}), mu = {}",
            self.path.as_str(),
            self.path.rule(),
            self.mu
        );
        if let Some(c) = self.graph_constant {
            s.push_str(&format!(", graph constant {c}"));
        }
        if let Some(b) = self.mu_bound {
            s.push_str(&format!(", mu bound {b}"));
        }
        if self.path == DesignPath::Adaptive {
            s.push_str(&format!(", mu1 = {}, mu2 = {}", self.mu1, self.mu2));
        }
        s
    }
}

fn observability(s: &RealMatrix, c0: &RealMatrix) -> Result<()> {
    if pbh_observable(c0, s)? {
        Ok(())
    } else {
        Err(Error::synthesis(
            Check::LeaderObservability,
            "(C0, S) is not observable",
        ))
    }
}

fn marginal(s: &RealMatrix) -> Result<()> {
    if is_marginally_stable(s)? {
        Ok(())
    } else {
        Err(Error::Precondition(
            "leader matrix is not marginally stable (unstable or non-semi-simple imaginary-axis eigenvalue)".into(),
        ))
    }
}

fn no_unstable_mode(s: &RealMatrix) -> Result<()> {
    if eigenvalues(s)?.iter().all(|l| l.re <= SPECTRAL_ATOL) {
        Ok(())
    } else {
        Err(Error::Precondition(
            "leader matrix has an eigenvalue with positive real part".into(),
        ))
    }
}

fn is_identity(m: &RealMatrix) -> bool {
    m.is_square() && *m == RealMatrix::identity(m.nrows(), m.ncols())
}

fn riccati_p(s: &RealMatrix, c0: &RealMatrix) -> Result<RealMatrix> {
    solve_are(&s.transpose(), &c0.transpose()).map_err(|e| match e {
        Error::NotStabilizable => {
            Error::synthesis(Check::LeaderObservability, "(C0, S) is not detectable")
        }
        other => other,
    })
}

/// Undirected switching graphs: `μ = 1`, `L_0 = P C_0ᵀ` with the marginal
/// Lyapunov matrix of `S`.
pub fn design_gain_switching_undirected(s: &RealMatrix, c0: &RealMatrix) -> Result<ObserverGains> {
    marginal(s)?;
    observability(s, c0)?;
    let p = solve_lyap_marginal(s)?;
    Ok(ObserverGains::new(
        DesignPath::SwitchingMarginal,
        ObserverVariant::Continuous,
        1.0,
        p * c0.transpose(),
    ))
}

/// Static graph: `L_0 = P C_0ᵀ` with the leader Riccati `P` and `μ = 1/δ`.
pub fn design_gain_static(s: &RealMatrix, c0: &RealMatrix, delta: f64) -> Result<ObserverGains> {
    if !(delta > SPECTRAL_ATOL) {
        return Err(Error::Connectivity(format!(
            "min Re eig(H) = {delta} is not positive"
        )));
    }
    let p = riccati_p(s, c0)?;
    let mut g = ObserverGains::new(
        DesignPath::StaticRiccati,
        ObserverVariant::Continuous,
        1.0 / delta,
        p * c0.transpose(),
    );
    g.graph_constant = Some(delta);
    Ok(g)
}

/// Static graph with `C_0 = I`: `L_0 = I`,
/// `μ = (1 + max(0, max Re σ(S)))/δ + 1`.
pub fn design_gain_static_identity(s: &RealMatrix, delta: f64) -> Result<ObserverGains> {
    if !(delta > SPECTRAL_ATOL) {
        return Err(Error::Connectivity(format!(
            "min Re eig(H) = {delta} is not positive"
        )));
    }
    let max_re = eigenvalues(s)?.iter().map(|l| l.re).fold(0.0, f64::max);
    let q = s.nrows();
    let mut g = ObserverGains::new(
        DesignPath::StaticIdentity,
        ObserverVariant::Continuous,
        (1.0 + max_re) / delta + 1.0,
        RealMatrix::identity(q, q),
    );
    g.graph_constant = Some(delta);
    Ok(g)
}

/// Switching graphs with `C_0 = I` and no unstable leader mode: `L_0 = I`
/// and the given `μ`.
pub fn design_gain_switching_identity(s: &RealMatrix, mu: f64) -> Result<ObserverGains> {
    no_unstable_mode(s)?;
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let q = s.nrows();
    Ok(ObserverGains::new(
        DesignPath::SwitchingIdentity,
        ObserverVariant::Continuous,
        mu,
        RealMatrix::identity(q, q),
    ))
}

/// Discrete observer gains.
///
/// The error system's transpose is `I ⊗ Sᵀ − μ H ⊗ C_0ᵀL_0ᵀ`, so the rule
/// for `x⁺ = (I ⊗ A − μ F ⊗ BK) x` applies with `A = Sᵀ`, `B = C_0ᵀ`,
/// `K = L_0ᵀ`. With `T` the real modal transform, `Ā = T Sᵀ T⁻¹` and
/// `B̄ = T C_0ᵀ`: `K = Bᵀ TᵀT A` and
/// `μ = min_p 1/‖H_p ⊗ ĀᵀB̄B̄ᵀĀ‖`.
pub fn design_gain_discrete(
    s: &RealMatrix,
    c0: &RealMatrix,
    hs: &[RealMatrix],
) -> Result<ObserverGains> {
    let vals = eigenvalues(s)?;
    if let Some(l) = vals.iter().find(|l| l.norm() > 1.0 + SPECTRAL_ATOL) {
        return Err(Error::Precondition(format!(
            "leader eigenvalue {l} lies outside the unit circle"
        )));
    }
    for (k, h) in hs.iter().enumerate() {
        if (h - h.transpose()).norm() > 1e-12 * (1.0 + h.norm()) {
            return Err(Error::Precondition(format!(
                "H of graph {k} is not symmetric"
            )));
        }
    }
    observability(s, c0)?;
    let a = s.transpose();
    let basis = real_modal_basis(&a, |l| l.norm() >= 1.0 - SPECTRAL_ATOL).map_err(|e| {
        Error::Precondition(format!("unit-circle eigenvalues must be semi-simple: {e}"))
    })?;
    let t = &basis.transform;
    let a_bar = t * &a * &basis.transform_inv;
    let b_bar = t * c0.transpose();
    let k = c0 * t.transpose() * t * &a;
    let core = a_bar.transpose() * &b_bar * b_bar.transpose() * &a_bar;
    let mut mu = f64::INFINITY;
    for h in hs {
        let n = norm2(&kron(h, &core));
        if n > 0.0 {
            mu = mu.min(1.0 / n);
        }
    }
    if !mu.is_finite() {
        return Err(Error::Precondition(
            "every graph is empty; the mu bound is undefined".into(),
        ));
    }
    let mut g = ObserverGains::new(
        DesignPath::DiscreteModal,
        ObserverVariant::Discrete,
        mu,
        k.transpose(),
    );
    g.mu_bound = Some(mu);
    Ok(g)
}

/// Smallest nonzero real part of the follower Laplacian spectrum.
fn lambda2(lap: &RealMatrix) -> Result<f64> {
    let mut re: Vec<f64> = eigenvalues(lap)?.iter().map(|l| l.re).collect();
    re.sort_by(f64::total_cmp);
    re.into_iter()
        .find(|r| *r > 1e-8)
        .ok_or_else(|| Error::Connectivity("follower Laplacian has no positive eigenvalue".into()))
}

fn sync_ref_design(
    sched: &SwitchingSchedule,
    s: &RealMatrix,
    c0: &RealMatrix,
    cfg: &LawConfig,
) -> Result<ObserverGains> {
    let variant = ObserverVariant::SyncRef;
    if sched
        .graphs()
        .iter()
        .any(|g| g.leader_weights().iter().any(|w| *w != 0.0))
    {
        return Err(Error::synthesis(
            Check::ObserverDesign,
            "synchronized reference generators run without a leader; remove leader edges",
        ));
    }
    let undirected = sched.graphs().iter().all(|g| g.follower_part_symmetric());
    let marginal_ok = is_marginally_stable(s)? && pbh_observable(c0, s)?;
    if undirected && marginal_ok {
        let p = solve_lyap_marginal(s)?;
        return Ok(ObserverGains::new(
            DesignPath::SyncRefMarginal,
            variant,
            1.0,
            p * c0.transpose(),
        ));
    }
    if let Some(g) = sched.static_graph() {
        let graph = &sched.graphs()[g];
        if graph.followers_have_spanning_tree() {
            let p = riccati_p(s, c0)?;
            let l2 = lambda2(&graph.laplacian(true))?;
            let mut out = ObserverGains::new(
                DesignPath::SyncRefRiccati,
                variant,
                (1.0f64).max(1.0 / l2),
                p * c0.transpose(),
            );
            out.graph_constant = Some(l2);
            return Ok(out);
        }
    }
    if is_identity(c0) {
        no_unstable_mode(s)?;
        let q = s.nrows();
        return Ok(ObserverGains::new(
            DesignPath::SyncRefIdentity,
            variant,
            cfg.mu.unwrap_or(1.0),
            RealMatrix::identity(q, q),
        ));
    }
    Err(Error::synthesis(
        Check::ObserverDesign,
        "no leaderless design applies: need undirected graphs with marginally stable S and observable (C0, S), a static graph with a spanning tree, or C0 = I",
    ))
}

fn continuous_design(sc: &Scenario, cfg: &LawConfig) -> Result<ObserverGains> {
    let (s, c0) = (sc.exo.s_m(), sc.exo.c_m0());
    let sched = &sc.topology;
    let static_delta = || -> Result<f64> {
        let g = sched.static_graph().ok_or_else(|| {
            Error::synthesis(
                Check::ObserverDesign,
                "static design on a switching topology",
            )
        })?;
        min_real_eig_h(&sched.h_matrices()[g])
    };
    let choice = match cfg.design {
        DesignChoice::Auto if sched.is_static() => DesignChoice::StaticRiccati,
        DesignChoice::Auto if sched.all_undirected() && is_marginally_stable(s)? => DesignChoice::SwitchingMarginal,
        DesignChoice::Auto if is_identity(c0) => DesignChoice::SwitchingIdentity,
        DesignChoice::Auto => {
            return Err(Error::synthesis(
                Check::ObserverDesign,
                "switching topology needs undirected graphs with a marginally stable leader, or C_m0 = I",
            ))
        }
        other => other,
    };
    let gains = match choice {
        DesignChoice::StaticRiccati => design_gain_static(s, c0, static_delta()?)?,
        DesignChoice::StaticIdentity => {
            if !is_identity(c0) {
                return Err(Error::synthesis(
                    Check::ObserverDesign,
                    "identity design needs C_m0 = I",
                ));
            }
            design_gain_static_identity(s, static_delta()?)?
        }
        DesignChoice::SwitchingMarginal => {
            if !sched.all_undirected() {
                return Err(Error::synthesis(
                    Check::ObserverDesign,
                    "marginal design needs undirected graphs",
                ));
            }
            design_gain_switching_undirected(s, c0)?
        }
        DesignChoice::SwitchingIdentity => {
            if !is_identity(c0) {
                return Err(Error::synthesis(
                    Check::ObserverDesign,
                    "identity design needs C_m0 = I",
                ));
            }
            design_gain_switching_identity(s, cfg.mu.unwrap_or(1.0))?
        }
        DesignChoice::Auto => unreachable!("resolved above"),
    };
    if matches!(
        choice,
        DesignChoice::StaticRiccati | DesignChoice::StaticIdentity
    ) {
        let h = &sched.h_matrices()[sched.static_graph().expect("static")];
        let m = error_matrix(s, &gains.l0, c0, gains.mu, &h.matrix);
        if !is_hurwitz(&m, 0.0)? {
            return Err(Error::synthesis(
                Check::ObserverDesign,
                "designed error matrix is not Hurwitz",
            ));
        }
    }
    Ok(gains)
}

/// Designs the observer the configuration asks for, then applies the μ
/// override and scale.
pub fn design_observer(sc: &Scenario, cfg: &LawConfig) -> Result<ObserverGains> {
    let (s, c0) = (sc.exo.s_m(), sc.exo.c_m0());
    let mut gains = match cfg.observer {
        ObserverVariant::Continuous => continuous_design(sc, cfg)?,
        ObserverVariant::Discrete => {
            let hs: Vec<RealMatrix> = sc
                .topology
                .h_matrices()
                .into_iter()
                .map(|h| h.matrix)
                .collect();
            design_gain_discrete(s, c0, &hs)?
        }
        ObserverVariant::Adaptive => {
            if !(cfg.mu1 > 0.0 && cfg.mu2 > 0.0) {
                return Err(Error::Precondition(
                    "adaptive gains mu1, mu2 must be positive".into(),
                ));
            }
            let q = s.nrows();
            let mut g = ObserverGains::new(
                DesignPath::Adaptive,
                ObserverVariant::Adaptive,
                1.0,
                RealMatrix::identity(q, q),
            );
            g.mu1 = cfg.mu1;
            g.mu2 = cfg.mu2;
            g
        }
        ObserverVariant::SyncRef => sync_ref_design(&sc.topology, s, c0, cfg)?,
    };
    if let Some(mu) = cfg.mu {
        gains.mu = mu;
    }
    gains.mu *= cfg.mu_scale;
    if !(gains.mu >= 0.0 && gains.mu.is_finite()) {
        return Err(Error::Precondition(format!(
            "mu must be finite and >= 0, got {}",
            gains.mu
        )));
    }
    Ok(gains)
}

/// `(I ⊗ S) − μ (H ⊗ L_0 C_0)`.
pub fn error_matrix(
    s: &RealMatrix,
    l0: &RealMatrix,
    c0: &RealMatrix,
    mu: f64,
    h: &RealMatrix,
) -> RealMatrix {
    let n = h.nrows();
    kron(&RealMatrix::identity(n, n), s) - kron(h, &(l0 * c0)) * mu
}

/// Error matrices for every graph of a schedule.
pub fn error_system(
    s: &RealMatrix,
    gains: &ObserverGains,
    c0: &RealMatrix,
    sched: &SwitchingSchedule,
) -> Vec<RealMatrix> {
    sched
        .h_matrices()
        .iter()
        .map(|h| error_matrix(s, &gains.l0, c0, gains.mu, &h.matrix))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::spectral_radius;
    use nalgebra::dmatrix;

    fn rotation() -> RealMatrix {
        dmatrix![0.0, 1.0; -1.0, 0.0]
    }

    #[test]
    fn switching_rotation_identity_output() {
        let g = design_gain_switching_undirected(&rotation(), &RealMatrix::identity(2, 2)).unwrap();
        assert_eq!(g.mu, 1.0);
        assert!((&g.l0 - RealMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn switching_scalar_zero() {
        let g = design_gain_switching_undirected(&dmatrix![0.0], &dmatrix![1.0]).unwrap();
        assert!((g.l0[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn switching_anisotropic_rotation() {
        let s = dmatrix![0.0, 2.0; -0.5, 0.0];
        let g = design_gain_switching_undirected(&s, &RealMatrix::identity(2, 2)).unwrap();
        let p = solve_lyap_marginal(&s).unwrap();
        assert!((&g.l0 - &p).norm() < 1e-14);
        let lhs = &p * s.transpose() + &s * &p;
        assert!(lhs.norm() < 1e-12);
    }

    #[test]
    fn switching_rejects_unobservable_and_unstable() {
        let unobs = design_gain_switching_undirected(&rotation(), &dmatrix![0.0, 0.0]);
        assert!(matches!(
            unobs,
            Err(Error::Synthesis {
                check: Check::LeaderObservability,
                ..
            })
        ));
        let jordan =
            design_gain_switching_undirected(&dmatrix![0.0, 1.0; 0.0, 0.0], &dmatrix![1.0, 0.0]);
        assert!(matches!(jordan, Err(Error::Precondition(_))));
    }

    #[test]
    fn static_scalar() {
        let g = design_gain_static(&dmatrix![0.0], &dmatrix![1.0], 1.0).unwrap();
        assert!((g.l0[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(g.mu, 1.0);
        let m = error_matrix(
            &dmatrix![0.0],
            &g.l0,
            &dmatrix![1.0],
            g.mu,
            &dmatrix![1.0, 0.0; -1.0, 1.0],
        );
        assert!(is_hurwitz(&m, 0.0).unwrap());
    }

    #[test]
    fn static_mu_from_chain_delta() {
        let delta = (3.0 - 5f64.sqrt()) / 2.0;
        let g = design_gain_static(&rotation(), &dmatrix![1.0, 0.0], delta).unwrap();
        assert!((g.mu - 2.0 / (3.0 - 5f64.sqrt())).abs() < 1e-12);
        assert!(design_gain_static(&rotation(), &dmatrix![1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn static_identity_is_hurwitz() {
        let s = dmatrix![0.5, 1.0; 0.0, -0.2];
        let h = dmatrix![2.0, -1.0; -1.0, 1.0];
        let delta = (3.0 - 5f64.sqrt()) / 2.0;
        let g = design_gain_static_identity(&s, delta).unwrap();
        assert!((g.mu - (1.5 / delta + 1.0)).abs() < 1e-12);
        let m = error_matrix(&s, &g.l0, &RealMatrix::identity(2, 2), g.mu, &h);
        assert!(is_hurwitz(&m, 0.0).unwrap());
    }

    #[test]
    fn discrete_rotation_bound() {
        let th: f64 = 0.3;
        let s = dmatrix![th.cos(), -th.sin(); th.sin(), th.cos()];
        let h = dmatrix![2.0, -1.0; -1.0, 1.0];
        let g = design_gain_discrete(&s, &RealMatrix::identity(2, 2), std::slice::from_ref(&h))
            .unwrap();
        assert!((g.mu - 2.0 / (3.0 + 5f64.sqrt())).abs() < 1e-12);
        let m = error_matrix(&s, &g.l0, &RealMatrix::identity(2, 2), g.mu, &h);
        assert!(spectral_radius(&m).unwrap() < 1.0);
    }

    #[test]
    fn discrete_rejects_asymmetric_h() {
        let h = dmatrix![1.0, 0.0; -1.0, 1.0];
        let r = design_gain_discrete(
            &RealMatrix::identity(2, 2),
            &RealMatrix::identity(2, 2),
            &[h],
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn discrete_static_leader() {
        let h = dmatrix![2.0, -1.0; -1.0, 1.0];
        let g =
            design_gain_discrete(&dmatrix![1.0], &dmatrix![1.0], std::slice::from_ref(&h)).unwrap();
        let m = error_matrix(&dmatrix![1.0], &g.l0, &dmatrix![1.0], g.mu, &h);
        assert!(spectral_radius(&m).unwrap() < 1.0);
    }

    #[test]
    fn error_matrix_kron_layout() {
        let s = rotation();
        let l0c0 = RealMatrix::identity(2, 2);
        let h = dmatrix![1.0, 0.0; -1.0, 1.0];
        let m = error_matrix(&s, &l0c0, &RealMatrix::identity(2, 2), 2.0, &h);
        // block (1, 0) is −μ h_10 L_0C_0 = 2 I
        assert_eq!(
            m.view((2, 0), (2, 2)).into_owned(),
            RealMatrix::identity(2, 2) * 2.0
        );
        assert_eq!(
            m.view((0, 0), (2, 2)).into_owned(),
            &s - RealMatrix::identity(2, 2) * 2.0
        );
        assert_eq!(m.view((0, 2), (2, 2)).into_owned(), RealMatrix::zeros(2, 2));
        let free = error_matrix(
            &s,
            &l0c0,
            &RealMatrix::identity(2, 2),
            2.0,
            &RealMatrix::zeros(2, 2),
        );
        assert_eq!(free, kron(&RealMatrix::identity(2, 2), &s));
    }
}
