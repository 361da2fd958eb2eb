use super::{Exosystem, PlantAgent, Scenario};
use crate::error::{Error, Result};
use crate::numkit::{block_diag, kron, RealMatrix, RealVector};
use crate::topology::SwitchingSchedule;

/// Weight tolerance when checking that containment weights sum to one.
const CONVEX_TOL: f64 = 1e-12;

/// Multi-leader containment as single-leader regulation.
///
/// The leaders `(S_k, v_k(0))` are stacked into one exosystem, the
/// reference is `r = F_2 v` with `F_2 = αᵀ ⊗ I_{q0}` and every follower's
/// error map becomes `F_1i − F_2`. The template's `F` (its `F_m` and,
/// for `y_m = e`, the measurement map) holds `F_1i`.
pub fn build_containment(
    leaders: &[(RealMatrix, RealVector)],
    alphas: &[f64],
    followers: Vec<PlantAgent>,
    topology: SwitchingSchedule,
    horizon: f64,
    step: f64,
) -> Result<Scenario> {
    if leaders.len() < 2 {
        return Err(Error::Model(
            "containment needs at least two leaders".into(),
        ));
    }
    if alphas.len() != leaders.len() {
        return Err(Error::Model(format!(
            "{} weights for {} leaders",
            alphas.len(),
            leaders.len()
        )));
    }
    let sum: f64 = alphas.iter().sum();
    if alphas.iter().any(|a| !(*a >= 0.0)) || (sum - 1.0).abs() > CONVEX_TOL {
        return Err(Error::Model(format!(
            "containment weights must be nonnegative and sum to 1, got {alphas:?}"
        )));
    }
    let q0 = leaders[0].0.nrows();
    for (k, (s, v)) in leaders.iter().enumerate() {
        if s.nrows() != q0 || s.ncols() != q0 || v.len() != q0 {
            return Err(Error::Dimension(format!(
                "leader {} must have a {q0}x{q0} S and a {q0}-vector initial state",
                k + 1
            )));
        }
    }
    let f2 = kron(
        &RealMatrix::from_row_slice(1, alphas.len(), alphas),
        &RealMatrix::identity(q0, q0),
    );
    let blocks: Vec<&RealMatrix> = leaders.iter().map(|(s, _)| s).collect();
    let s = block_diag(&blocks);
    let v0 = RealVector::from_iterator(
        q0 * leaders.len(),
        leaders.iter().flat_map(|(_, v)| v.iter().copied()),
    );
    let exo = Exosystem::measured(s, f2.clone(), v0)?;

    let mut agents = Vec::with_capacity(followers.len());
    for (i, t) in followers.into_iter().enumerate() {
        if t.p() != q0 {
            return Err(Error::Dimension(format!(
                "follower {} has {} outputs, leaders have dimension {q0}",
                i + 1,
                t.p()
            )));
        }
        let f1 = t.f();
        if f1.shape() != f2.shape() {
            return Err(Error::Dimension(format!(
                "follower {}: F_1 is {}x{}, expected {}x{}",
                i + 1,
                f1.nrows(),
                f1.ncols(),
                f2.nrows(),
                f2.ncols()
            )));
        }
        agents.push(t.with_error_map(&(f1 - &f2))?);
    }
    Scenario::new(agents, exo, topology, horizon, step)
}

/// A follower driven by its own exosystem `v̇_i = S_i v_i`.
#[derive(Debug, Clone)]
pub struct LocalAgent {
    /// Agent whose exogenous maps act on the local signal only.
    pub agent: PlantAgent,
    pub s: RealMatrix,
    pub v0: RealVector,
}

/// Stacks local exosystems into a global one, `v = col(v_1, …, v_N)`, and
/// zero-pads each agent's exogenous maps so agent `i` only sees block `i`.
///
/// The stacked signal is fully measured with `C_m0 = I`.
pub fn localize_exogenous(
    locals: Vec<LocalAgent>,
    topology: SwitchingSchedule,
    horizon: f64,
    step: f64,
) -> Result<Scenario> {
    let dims: Vec<usize> = locals.iter().map(|l| l.s.nrows()).collect();
    let q: usize = dims.iter().sum();
    for (i, l) in locals.iter().enumerate() {
        l.agent
            .validate(0, dims[i])
            .map_err(|e| Error::Model(format!("agent {}: {e}", i + 1)))?;
        if l.s.ncols() != dims[i] || l.v0.len() != dims[i] {
            return Err(Error::Dimension(format!(
                "agent {}: local exosystem must be square with a matching initial state",
                i + 1
            )));
        }
    }
    let blocks: Vec<&RealMatrix> = locals.iter().map(|l| &l.s).collect();
    let s = block_diag(&blocks);
    let v0 = RealVector::from_iterator(q, locals.iter().flat_map(|l| l.v0.iter().copied()));
    let exo = Exosystem::measured(s, RealMatrix::identity(q, q), v0)?;

    let mut offset = 0;
    let mut agents = Vec::with_capacity(locals.len());
    for (l, qi) in locals.into_iter().zip(dims) {
        let pad = |m: &RealMatrix| {
            let mut out = RealMatrix::zeros(m.nrows(), q);
            out.view_mut((0, offset), (m.nrows(), qi)).copy_from(m);
            out
        };
        let mut a = l.agent;
        a.e_m = pad(&a.e_m);
        a.f_mm = pad(&a.f_mm);
        a.f_m = pad(&a.f_m);
        agents.push(a);
        offset += qi;
    }
    Scenario::new(agents, exo, topology, horizon, step)
}
