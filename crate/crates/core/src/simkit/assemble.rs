use super::law::{ControlLaw, InitialEstimate, LawKind};
use crate::error::{Error, Result};
use crate::numkit::{kron, RealMatrix, RealVector};
use crate::observers::ObserverGains;
use crate::plantmodel::Scenario;
use crate::topology::WeightedDigraph;

/// Offsets of the stacked state `(x_1, z_1, …, x_N, z_N, η_1, …, η_N, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    /// `(offset, len)` of each `x_i`.
    pub x: Vec<(usize, usize)>,
    /// `(offset, len)` of each `z_i`; `len` is 0 without a compensator.
    pub z: Vec<(usize, usize)>,
    /// Offset of `η_1` when the observer block is present.
    pub eta: Option<usize>,
    pub followers: usize,
    pub q_u: usize,
    pub q_m: usize,
    pub v: usize,
    pub dim: usize,
}

impl StateLayout {
    pub fn new(
        n: &[usize],
        nz: &[usize],
        followers: usize,
        with_eta: bool,
        q_u: usize,
        q_m: usize,
    ) -> Self {
        let mut off = 0;
        let mut x = Vec::with_capacity(n.len());
        let mut z = Vec::with_capacity(n.len());
        for (ni, nzi) in n.iter().zip(nz) {
            x.push((off, *ni));
            off += ni;
            z.push((off, *nzi));
            off += nzi;
        }
        let eta = with_eta.then_some(off);
        if with_eta {
            off += followers * q_m;
        }
        StateLayout {
            x,
            z,
            eta,
            followers,
            q_u,
            q_m,
            v: off,
            dim: off + q_u + q_m,
        }
    }

    pub fn agents(&self) -> usize {
        self.x.len()
    }

    pub fn q(&self) -> usize {
        self.q_u + self.q_m
    }

    /// Offset of `η_i` (0-based follower index).
    pub fn eta_offset(&self, i: usize) -> Option<usize> {
        self.eta.map(|e| e + i * self.q_m)
    }

    pub fn x_of(&self, state: &RealVector, i: usize) -> RealVector {
        let (o, l) = self.x[i];
        state.rows(o, l).into_owned()
    }

    pub fn z_of(&self, state: &RealVector, i: usize) -> RealVector {
        let (o, l) = self.z[i];
        state.rows(o, l).into_owned()
    }

    pub fn eta_of(&self, state: &RealVector, i: usize) -> Option<RealVector> {
        self.eta_offset(i)
            .map(|o| state.rows(o, self.q_m).into_owned())
    }

    pub fn v_of(&self, state: &RealVector) -> RealVector {
        state.rows(self.v, self.q()).into_owned()
    }

    pub fn v_m_of(&self, state: &RealVector) -> RealVector {
        state.rows(self.v + self.q_u, self.q_m).into_owned()
    }
}

/// Piecewise-constant linear closed loop: one generator per graph of the
/// schedule, with linear read-outs of every `u_i` and `e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub kind: LawKind,
    pub layout: StateLayout,
    pub generators: Vec<RealMatrix>,
    pub u_maps: Vec<RealMatrix>,
    pub e_maps: Vec<RealMatrix>,
    pub initial: RealVector,
}

impl ClosedLoop {
    /// The block acting on everything but `v`.
    pub fn a_c(&self, graph: usize) -> RealMatrix {
        let d = self.layout.v;
        self.generators[graph].view((0, 0), (d, d)).into_owned()
    }

    /// Coupling from `v` into the rest of the state.
    pub fn b_c(&self, graph: usize) -> RealMatrix {
        let d = self.layout.v;
        let q = self.layout.q();
        self.generators[graph].view((0, d), (d, q)).into_owned()
    }

    /// Stacked tracking errors as `C_c (state without v) + D_c v`.
    pub fn c_d(&self) -> (RealMatrix, RealMatrix) {
        let d = self.layout.v;
        let q = self.layout.q();
        let rows: usize = self.e_maps.iter().map(|m| m.nrows()).sum();
        let mut c = RealMatrix::zeros(rows, d);
        let mut dd = RealMatrix::zeros(rows, q);
        let mut r = 0;
        for m in &self.e_maps {
            c.view_mut((r, 0), (m.nrows(), d))
                .copy_from(&m.view((0, 0), (m.nrows(), d)));
            dd.view_mut((r, 0), (m.nrows(), q))
                .copy_from(&m.view((0, d), (m.nrows(), q)));
            r += m.nrows();
        }
        (c, dd)
    }
}

fn initial_estimates(
    init: &InitialEstimate,
    n: usize,
    leader: &RealVector,
) -> Result<Vec<RealVector>> {
    match init {
        InitialEstimate::Zero => Ok(vec![RealVector::zeros(leader.len()); n]),
        InitialEstimate::Leader => Ok(vec![leader.clone(); n]),
        InitialEstimate::Explicit(v) => {
            if v.len() != n || v.iter().any(|e| e.len() != leader.len()) {
                return Err(Error::Assembly(format!(
                    "need {n} initial estimates of length {}",
                    leader.len()
                )));
            }
            Ok(v.clone())
        }
    }
}

/// Builds the closed loop of a scenario under a synthesized law.
///
/// Decentralized kinds feed `v_m` straight into each agent and carry no `η`
/// block; distributed kinds feed `η_i`. A scenario without agents assembles
/// the observer alone.
pub fn assemble(sc: &Scenario, law: &ControlLaw, eta0: &InitialEstimate) -> Result<ClosedLoop> {
    let kind = law.kind;
    let gains = &law.gains;
    let exo = &sc.exo;
    let (q_u, q_m) = (exo.q_u(), exo.q_m());
    let na = sc.agents.len();
    if gains.agents.len() != na {
        return Err(Error::Assembly(format!(
            "gain set covers {} agents, scenario has {na}",
            gains.agents.len()
        )));
    }
    if na > 0 {
        kind.check_partition(q_u, q_m)
            .map_err(|e| Error::Assembly(e.to_string()))?;
    }
    let with_eta = na == 0 || kind.uses_observer();
    let obs: Option<&ObserverGains> = if with_eta {
        Some(gains.observer.as_ref().ok_or_else(|| {
            Error::Assembly("observer block requested but no observer gains given".into())
        })?)
    } else {
        None
    };
    let compensated = kind.uses_compensator();
    let mut nz = Vec::with_capacity(na);
    for (i, (a, g)) in sc.agents.iter().zip(&gains.agents).enumerate() {
        let dim_err =
            |what: &str| Error::Assembly(format!("agent {}: {what} has the wrong shape", i + 1));
        if g.k1.shape() != (a.m(), a.n()) {
            return Err(dim_err("K_1"));
        }
        if g.k2.shape() != (a.m(), q_u + q_m) || g.q_u != q_u {
            return Err(dim_err("K_2"));
        }
        if compensated {
            match &g.l {
                Some(l) if l.shape() == (a.n() + q_u, a.p_m()) => nz.push(a.n() + q_u),
                _ => return Err(dim_err("L")),
            }
        } else {
            nz.push(0);
        }
    }
    let n: Vec<usize> = sc.agents.iter().map(|a| a.n()).collect();
    let followers = sc.followers();
    let layout = StateLayout::new(&n, &nz, followers, with_eta, q_u, q_m);
    let dim = layout.dim;
    let (vu, vm) = (layout.v, layout.v + q_u);

    // Selector of the signal fed in place of v_m for agent i.
    let w_cols = |i: usize| -> usize {
        match layout.eta_offset(i) {
            Some(o) if kind.uses_observer() => o,
            _ => vm,
        }
    };

    let mut base = RealMatrix::zeros(dim, dim);
    let mut u_maps = Vec::with_capacity(na);
    let mut e_maps = Vec::with_capacity(na);
    for (i, (a, g)) in sc.agents.iter().zip(&gains.agents).enumerate() {
        let (xo, xn) = layout.x[i];
        let (zo, zn) = layout.z[i];
        let w = w_cols(i);
        let mut um = RealMatrix::zeros(a.m(), dim);
        if compensated {
            let kz = crate::numkit::hcat(&[&g.k1, &g.k2u()])?;
            um.view_mut((0, zo), (a.m(), zn)).copy_from(&kz);
        } else {
            um.view_mut((0, xo), (a.m(), xn)).copy_from(&g.k1);
            um.view_mut((0, vu), (a.m(), q_u)).copy_from(&g.k2u());
        }
        let mut wm = um.view((0, w), (a.m(), q_m)).into_owned();
        wm += g.k2m();
        um.view_mut((0, w), (a.m(), q_m)).copy_from(&wm);

        let mut xrows = &a.b * &um;
        add_block(&mut xrows, 0, xo, &a.a);
        add_block(&mut xrows, 0, vu, &a.e_u);
        add_block(&mut xrows, 0, vm, &a.e_m);
        base.view_mut((xo, 0), (xn, dim)).copy_from(&xrows);

        if compensated {
            let l = g.l.as_ref().expect("checked");
            let (a_bar, c_bar) = a.composite_pair(exo.s_u());
            let mut b_bar = RealMatrix::zeros(zn, a.m());
            b_bar.view_mut((0, 0), (xn, a.m())).copy_from(&a.b);
            let mut e_bar = RealMatrix::zeros(zn, q_m);
            e_bar.view_mut((0, 0), (xn, q_m)).copy_from(&a.e_m);
            let mut zrows = &b_bar * &um;
            add_block(&mut zrows, 0, zo, &(&a_bar - l * &c_bar));
            add_block(&mut zrows, 0, xo, &(l * &a.c_m));
            add_block(&mut zrows, 0, vu, &(l * &a.f_mu));
            add_block(&mut zrows, 0, vm, &(l * &a.f_mm));
            add_block(&mut zrows, 0, w, &(e_bar - l * &a.f_mm));
            base.view_mut((zo, 0), (zn, dim)).copy_from(&zrows);
        }

        let mut em = &a.d * &um;
        add_block(&mut em, 0, xo, &a.c);
        add_block(&mut em, 0, vu, &a.f_u);
        add_block(&mut em, 0, vm, &a.f_m);
        u_maps.push(um);
        e_maps.push(em);
    }
    let s = exo.s();
    base.view_mut((layout.v, layout.v), (s.nrows(), s.ncols()))
        .copy_from(&s);

    let generators = sc
        .topology
        .graphs()
        .iter()
        .map(|graph| {
            let mut m = base.clone();
            if let (Some(o), Some(og)) = (layout.eta, obs) {
                add_observer_rows(&mut m, o, vm, exo.s_m(), exo.c_m0(), og, graph);
            }
            m
        })
        .collect();

    let mut initial = RealVector::zeros(dim);
    for (i, a) in sc.agents.iter().enumerate() {
        let (xo, xn) = layout.x[i];
        initial.rows_mut(xo, xn).copy_from(&a.x0);
    }
    if let Some(o) = layout.eta {
        let etas = initial_estimates(eta0, followers, &exo.v0_m())?;
        for (i, e) in etas.iter().enumerate() {
            initial.rows_mut(o + i * q_m, q_m).copy_from(e);
        }
    }
    initial.rows_mut(layout.v, layout.q()).copy_from(exo.v0());

    Ok(ClosedLoop {
        kind,
        layout,
        generators,
        u_maps,
        e_maps,
        initial,
    })
}

fn add_block(m: &mut RealMatrix, r: usize, c: usize, b: &RealMatrix) {
    let mut view = m.view_mut((r, c), (b.nrows(), b.ncols()));
    view += b;
}

fn add_observer_rows(
    m: &mut RealMatrix,
    eta: usize,
    vm: usize,
    s: &RealMatrix,
    c0: &RealMatrix,
    og: &ObserverGains,
    graph: &WeightedDigraph,
) {
    let n = graph.followers();
    let lc = &og.l0 * c0;
    let h = graph.h_matrix().matrix;
    let a0 = RealMatrix::from_column_slice(n, 1, &graph.leader_weights());
    add_block(
        m,
        eta,
        eta,
        &(kron(&RealMatrix::identity(n, n), s) - kron(&h, &lc) * og.mu),
    );
    add_block(m, eta, vm, &(kron(&a0, &lc) * og.mu));
}
