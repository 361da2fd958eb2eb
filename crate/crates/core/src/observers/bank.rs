use super::design::{error_matrix, ObserverGains};
use crate::error::{Error, Result};
use crate::numkit::{kron, RealMatrix, RealVector};
use crate::simkit::{rk4_step, rk4_transition, ObserverVariant};
use crate::topology::WeightedDigraph;

/// Per-follower estimates, plus leader-matrix estimates for the adaptive
/// variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverBank {
    pub variant: ObserverVariant,
    pub eta: Vec<RealVector>,
    /// Empty unless adaptive.
    pub s_est: Vec<RealMatrix>,
}

impl ObserverBank {
    pub fn new(variant: ObserverVariant, eta: Vec<RealVector>) -> Self {
        ObserverBank {
            variant,
            eta,
            s_est: Vec::new(),
        }
    }

    pub fn adaptive(eta: Vec<RealVector>, s_est: Vec<RealMatrix>) -> Self {
        ObserverBank {
            variant: ObserverVariant::Adaptive,
            eta,
            s_est,
        }
    }

    pub fn followers(&self) -> usize {
        self.eta.len()
    }

    pub fn stacked(&self) -> RealVector {
        stack(&self.eta)
    }

    /// `max_i ‖η_i − v‖`.
    pub fn max_error(&self, v: &RealVector) -> f64 {
        self.eta.iter().map(|e| (e - v).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn stack(vs: &[RealVector]) -> RealVector {
    let len = vs.iter().map(|v| v.len()).sum();
    RealVector::from_iterator(len, vs.iter().flat_map(|v| v.iter().copied()))
}

pub(crate) fn unstack(x: &RealVector, n: usize, q: usize) -> Vec<RealVector> {
    (0..n).map(|i| x.rows(i * q, q).into_owned()).collect()
}

/// Generator of `(η, v)` for the continuous observer on one graph:
/// `[[I ⊗ S − μ H ⊗ L_0C_0, μ a_0 ⊗ L_0C_0], [0, S]]` with `a_0` the
/// leader weights.
pub fn observer_generator(
    s: &RealMatrix,
    gains: &ObserverGains,
    c0: &RealMatrix,
    graph: &WeightedDigraph,
) -> RealMatrix {
    let n = graph.followers();
    let q = s.nrows();
    let h = graph.h_matrix().matrix;
    let lc = &gains.l0 * c0;
    let a0 = RealMatrix::from_column_slice(n, 1, &graph.leader_weights());
    let mut m = RealMatrix::zeros((n + 1) * q, (n + 1) * q);
    m.view_mut((0, 0), (n * q, n * q))
        .copy_from(&error_matrix(s, &gains.l0, c0, gains.mu, &h));
    m.view_mut((0, n * q), (n * q, q))
        .copy_from(&(kron(&a0, &lc) * gains.mu));
    m.view_mut((n * q, n * q), (q, q)).copy_from(s);
    m
}

fn check_bank(bank: &ObserverBank, graph: &WeightedDigraph, q: usize) -> Result<()> {
    if bank.followers() != graph.followers() {
        return Err(Error::Dimension(format!(
            "observer bank has {} followers, graph has {}",
            bank.followers(),
            graph.followers()
        )));
    }
    if bank.eta.iter().any(|e| e.len() != q) {
        return Err(Error::Dimension(format!(
            "every estimate must have {q} entries"
        )));
    }
    Ok(())
}

/// One RK4 step of the continuous distributed observer, with the leader
/// state `v` advanced alongside (`η_0 = v`).
pub fn step_continuous(
    bank: &ObserverBank,
    gains: &ObserverGains,
    s: &RealMatrix,
    c0: &RealMatrix,
    v: &RealVector,
    graph: &WeightedDigraph,
    dt: f64,
) -> Result<ObserverBank> {
    let q = s.nrows();
    check_bank(bank, graph, q)?;
    let phi = rk4_transition(&observer_generator(s, gains, c0, graph), dt);
    let mut x = bank.stacked();
    x = nalgebra::DVector::from_iterator(x.len() + q, x.iter().chain(v.iter()).copied());
    let next = phi * x;
    let n = bank.followers();
    Ok(ObserverBank {
        eta: unstack(&next.rows(0, n * q).into_owned(), n, q),
        ..bank.clone()
    })
}

/// Exact update of the discrete distributed observer:
/// `η_i⁺ = S η_i + μ L_0 Σ_j a_ij C_0 (η_j − η_i)` with `η_0 = v`.
pub fn step_discrete(
    bank: &ObserverBank,
    gains: &ObserverGains,
    s: &RealMatrix,
    c0: &RealMatrix,
    v: &RealVector,
    graph: &WeightedDigraph,
) -> Result<ObserverBank> {
    check_bank(bank, graph, s.nrows())?;
    let n = bank.followers();
    let node = |j: usize| if j == 0 { v } else { &bank.eta[j - 1] };
    let eta = (1..=n)
        .map(|i| {
            let mut corr = RealVector::zeros(c0.nrows());
            for j in 0..=n {
                let a = graph.weight(i, j);
                if a != 0.0 {
                    corr += c0 * (node(j) - node(i)) * a;
                }
            }
            s * node(i) + &gains.l0 * corr * gains.mu
        })
        .collect();
    Ok(ObserverBank {
        eta,
        ..bank.clone()
    })
}

/// One RK4 step of the adaptive observer
/// `Ṡ_i = μ_1 Σ a_ij (S_j − S_i)`, `η̇_i = S_i η_i + μ_2 Σ a_ij (η_j − η_i)`
/// with `S_0 = S`, `η_0 = v`; the leader state is advanced inside the step.
pub fn step_adaptive(
    bank: &ObserverBank,
    gains: &ObserverGains,
    s: &RealMatrix,
    v: &RealVector,
    graph: &WeightedDigraph,
    dt: f64,
) -> Result<ObserverBank> {
    let q = s.nrows();
    check_bank(bank, graph, q)?;
    let n = bank.followers();
    if bank.s_est.len() != n {
        return Err(Error::Dimension(
            "adaptive bank needs one S estimate per follower".into(),
        ));
    }
    let qq = q * q;
    // layout: vec(S_1..S_N), η_1..η_N, v
    let mut x = RealVector::zeros(n * qq + n * q + q);
    for i in 0..n {
        x.rows_mut(i * qq, qq)
            .copy_from_slice(bank.s_est[i].as_slice());
        x.rows_mut(n * qq + i * q, q).copy_from(&bank.eta[i]);
    }
    x.rows_mut(n * qq + n * q, q).copy_from(v);

    let f = |_: f64, y: &RealVector| {
        let sm = |j: usize| -> RealMatrix {
            if j == 0 {
                s.clone()
            } else {
                RealMatrix::from_column_slice(q, q, y.rows((j - 1) * qq, qq).as_slice())
            }
        };
        let et = |j: usize| -> RealVector {
            if j == 0 {
                y.rows(n * qq + n * q, q).into_owned()
            } else {
                y.rows(n * qq + (j - 1) * q, q).into_owned()
            }
        };
        let mut dy = RealVector::zeros(y.len());
        for i in 1..=n {
            let (si, ei) = (sm(i), et(i));
            let mut ds = RealMatrix::zeros(q, q);
            let mut de = &si * &ei;
            for j in 0..=n {
                let a = graph.weight(i, j);
                if a != 0.0 {
                    ds += (sm(j) - &si) * (a * gains.mu1);
                    de += (et(j) - &ei) * (a * gains.mu2);
                }
            }
            dy.rows_mut((i - 1) * qq, qq).copy_from_slice(ds.as_slice());
            dy.rows_mut(n * qq + (i - 1) * q, q).copy_from(&de);
        }
        dy.rows_mut(n * qq + n * q, q).copy_from(&(s * et(0)));
        dy
    };
    let next = rk4_step(f, 0.0, &x, dt);
    Ok(ObserverBank {
        variant: ObserverVariant::Adaptive,
        s_est: (0..n)
            .map(|i| RealMatrix::from_column_slice(q, q, next.rows(i * qq, qq).as_slice()))
            .collect(),
        eta: unstack(&next.rows(n * qq, n * q).into_owned(), n, q),
    })
}

/// Generator of the leaderless dynamics `I ⊗ S − μ ℒ ⊗ L_0C_0`.
pub fn sync_ref_generator(
    s: &RealMatrix,
    gains: &ObserverGains,
    c0: &RealMatrix,
    graph: &WeightedDigraph,
) -> RealMatrix {
    error_matrix(s, &gains.l0, c0, gains.mu, &graph.laplacian(true))
}

/// One RK4 step of the synchronized reference generator (neighbors among
/// followers only).
pub fn step_sync_ref(
    bank: &ObserverBank,
    gains: &ObserverGains,
    s: &RealMatrix,
    c0: &RealMatrix,
    graph: &WeightedDigraph,
    dt: f64,
) -> Result<ObserverBank> {
    let q = s.nrows();
    check_bank(bank, graph, q)?;
    let phi = rk4_transition(&sync_ref_generator(s, gains, c0, graph), dt);
    let next = phi * bank.stacked();
    Ok(ObserverBank {
        eta: unstack(&next, bank.followers(), q),
        ..bank.clone()
    })
}

/// Weights `r ≥ 0`, `Σ r = 1`, with `rᵀ ℒ = 0` for the follower Laplacian of
/// a graph whose follower part has a spanning tree. For undirected graphs
/// `r` is uniform.
pub fn consensus_weights(graph: &WeightedDigraph) -> Result<RealVector> {
    let lap = graph.laplacian(true);
    let n = lap.nrows();
    let svd = lap.transpose().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("null vector of the Laplacian".into()))?;
    let (k, smin) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, s)| if *s < acc.1 { (k, *s) } else { acc },
            );
    let scale = lap.norm().max(1.0);
    let second = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    if smin > 1e-9 * scale || (n > 1 && second <= 1e-9 * scale) {
        return Err(Error::Connectivity(
            "follower Laplacian must have a one-dimensional left null space".into(),
        ));
    }
    let r = v_t.row(k).transpose().into_owned();
    let sum: f64 = r.iter().sum();
    Ok(r / sum)
}

/// Predicted common limit of the leaderless dynamics on a static graph,
/// `e^{St} Σ_j r_j η_j(0)`.
pub fn sync_ref_limit(
    s: &RealMatrix,
    graph: &WeightedDigraph,
    eta0: &[RealVector],
    t: f64,
) -> Result<RealVector> {
    let r = consensus_weights(graph)?;
    let mut center = RealVector::zeros(s.nrows());
    for (w, e) in r.iter().zip(eta0) {
        center += e * *w;
    }
    Ok((s * t).exp() * center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observers::{design_gain_static, design_gain_switching_undirected};
    use crate::topology::Edge;
    use nalgebra::{dmatrix, dvector};

    fn rotation() -> RealMatrix {
        dmatrix![0.0, 1.0; -1.0, 0.0]
    }

    fn chain() -> WeightedDigraph {
        WeightedDigraph::from_edges(2, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)], false)
            .unwrap()
    }

    #[test]
    fn zero_error_stays_zero() {
        let s = rotation();
        let c0 = dmatrix![1.0, 0.0];
        let g = design_gain_static(&s, &c0, 1.0).unwrap();
        let mut v = dvector![1.0, 0.5];
        let mut bank = ObserverBank::new(ObserverVariant::Continuous, vec![v.clone(), v.clone()]);
        let phi_v = rk4_transition(&s, 0.01);
        for _ in 0..200 {
            bank = step_continuous(&bank, &g, &s, &c0, &v, &chain(), 0.01).unwrap();
            v = &phi_v * v;
        }
        assert!(bank.max_error(&v) < 1e-13);
    }

    #[test]
    fn no_edges_means_free_evolution() {
        let s = rotation();
        let c0 = RealMatrix::identity(2, 2);
        let g = design_gain_switching_undirected(&s, &c0).unwrap();
        let empty = WeightedDigraph::empty(1, false);
        let bank = ObserverBank::new(ObserverVariant::Continuous, vec![dvector![1.0, 0.0]]);
        let next = step_continuous(&bank, &g, &s, &c0, &dvector![5.0, 5.0], &empty, 0.1).unwrap();
        let free = rk4_transition(&s, 0.1) * dvector![1.0, 0.0];
        assert!((&next.eta[0] - free).norm() < 1e-15);
    }

    #[test]
    fn continuous_matches_error_system() {
        let s = rotation();
        let c0 = dmatrix![1.0, 0.0];
        let g = design_gain_static(&s, &c0, 1.0).unwrap();
        let graph = chain();
        let h = 1e-2;
        let mut v = dvector![1.0, 0.0];
        let mut bank = ObserverBank::new(
            ObserverVariant::Continuous,
            vec![dvector![0.0, 0.0], dvector![2.0, -1.0]],
        );
        let mut err = bank.stacked() - stack(&[v.clone(), v.clone()]);
        let phi_e = rk4_transition(
            &error_matrix(&s, &g.l0, &c0, g.mu, &graph.h_matrix().matrix),
            h,
        );
        let phi_v = rk4_transition(&s, h);
        for _ in 0..500 {
            bank = step_continuous(&bank, &g, &s, &c0, &v, &graph, h).unwrap();
            v = &phi_v * v;
            err = &phi_e * err;
        }
        let direct = bank.stacked() - stack(&[v.clone(), v.clone()]);
        assert!((direct - err).norm() < 1e-9 * 5.0);
    }

    #[test]
    fn discrete_equilibrium_and_decoupling() {
        let s = dmatrix![0.0, -1.0; 1.0, 0.0];
        let c0 = RealMatrix::identity(2, 2);
        let mut g = design_gain_switching_undirected(&rotation(), &c0).unwrap();
        let v = dvector![1.0, 2.0];
        let bank = ObserverBank::new(ObserverVariant::Discrete, vec![v.clone(), v.clone()]);
        let next = step_discrete(&bank, &g, &s, &c0, &v, &chain()).unwrap();
        assert!(next.max_error(&(&s * &v)) < 1e-15);
        g.mu = 0.0;
        let bank = ObserverBank::new(
            ObserverVariant::Discrete,
            vec![dvector![1.0, 0.0], dvector![0.0, 3.0]],
        );
        let next = step_discrete(&bank, &g, &s, &c0, &v, &chain()).unwrap();
        assert_eq!(next.eta[0], &s * dvector![1.0, 0.0]);
        assert_eq!(next.eta[1], &s * dvector![0.0, 3.0]);
    }

    #[test]
    fn discrete_matches_error_matrix() {
        let s = dmatrix![0.6, -0.8; 0.8, 0.6];
        let c0 = dmatrix![1.0, 0.0];
        let g = ObserverGains {
            path: crate::observers::DesignPath::DiscreteModal,
            variant: ObserverVariant::Discrete,
            mu: 0.3,
            l0: dmatrix![0.5; 0.2],
            mu1: 1.0,
            mu2: 1.0,
            graph_constant: None,
            mu_bound: None,
        };
        let graph = chain();
        let v = dvector![1.0, -1.0];
        let bank = ObserverBank::new(
            ObserverVariant::Discrete,
            vec![dvector![0.0, 1.0], dvector![2.0, 0.0]],
        );
        let next = step_discrete(&bank, &g, &s, &c0, &v, &graph).unwrap();
        let e0 = bank.stacked() - stack(&[v.clone(), v.clone()]);
        let e1 = error_matrix(&s, &g.l0, &c0, g.mu, &graph.h_matrix().matrix) * e0;
        let sv = &s * &v;
        assert!((next.stacked() - stack(&[sv.clone(), sv]) - e1).norm() < 1e-14);
    }

    #[test]
    fn adaptive_equilibrium_and_frozen_estimates() {
        let s = rotation();
        let gains = ObserverGains {
            path: crate::observers::DesignPath::Adaptive,
            variant: ObserverVariant::Adaptive,
            mu: 1.0,
            l0: RealMatrix::identity(2, 2),
            mu1: 1.0,
            mu2: 1.0,
            graph_constant: None,
            mu_bound: None,
        };
        let mut v = dvector![1.0, 0.0];
        let mut bank =
            ObserverBank::adaptive(vec![v.clone(), v.clone()], vec![s.clone(), s.clone()]);
        let phi = rk4_transition(&s, 0.01);
        for _ in 0..100 {
            bank = step_adaptive(&bank, &gains, &s, &v, &chain(), 0.01).unwrap();
            v = &phi * v;
        }
        assert!(bank.max_error(&v) < 1e-12);
        assert!(bank.s_est.iter().all(|si| (si - &s).norm() < 1e-14));

        let s0 = dmatrix![0.3, 0.0; 0.0, -0.1];
        let frozen = ObserverBank::adaptive(vec![v.clone()], vec![s0.clone()]);
        let next = step_adaptive(
            &frozen,
            &gains,
            &s,
            &v,
            &WeightedDigraph::empty(1, false),
            0.1,
        )
        .unwrap();
        assert_eq!(next.s_est[0], s0);
    }

    #[test]
    fn average_consensus_scalar() {
        let g = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], true).unwrap();
        let s = dmatrix![0.0];
        let gains = design_gain_switching_undirected(&s, &dmatrix![1.0]).unwrap();
        let mut bank =
            ObserverBank::new(ObserverVariant::SyncRef, vec![dvector![1.0], dvector![3.0]]);
        for _ in 0..2000 {
            bank = step_sync_ref(&bank, &gains, &s, &dmatrix![1.0], &g, 0.01).unwrap();
        }
        assert!(bank.max_error(&dvector![2.0]) < 1e-9);
        let lim = sync_ref_limit(&s, &g, &[dvector![1.0], dvector![3.0]], 5.0).unwrap();
        assert!((lim[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_initial_states_stay_synchronized() {
        let s = rotation();
        let g = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], true).unwrap();
        let gains = design_gain_switching_undirected(&s, &RealMatrix::identity(2, 2)).unwrap();
        let e0 = dvector![0.3, -0.7];
        let mut bank = ObserverBank::new(ObserverVariant::SyncRef, vec![e0.clone(), e0.clone()]);
        let phi = rk4_transition(&s, 0.01);
        let mut free = e0;
        for _ in 0..100 {
            bank = step_sync_ref(&bank, &gains, &s, &RealMatrix::identity(2, 2), &g, 0.01).unwrap();
            free = &phi * free;
        }
        assert!(bank.max_error(&free) < 1e-14);
    }

    #[test]
    fn directed_consensus_weights() {
        // 1 → 2, 2 → 3, 3 → 2: node 1 is the only root, so r = e_1.
        let g = WeightedDigraph::from_edges(
            3,
            &[
                Edge::new(1, 2, 1.0),
                Edge::new(2, 3, 1.0),
                Edge::new(3, 2, 2.0),
            ],
            false,
        )
        .unwrap();
        let r = consensus_weights(&g).unwrap();
        assert!((r - dvector![1.0, 0.0, 0.0]).norm() < 1e-12);
        // strongly connected cycle with unequal weights
        let c =
            WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0), Edge::new(2, 1, 3.0)], false)
                .unwrap();
        let r = consensus_weights(&c).unwrap();
        let lap = c.laplacian(true);
        assert!((lap.transpose() * &r).norm() < 1e-12);
        assert!((r.sum() - 1.0).abs() < 1e-12);
    }
}
