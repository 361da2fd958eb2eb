use serde::Serialize;

use super::assemble::assemble;
use super::integrate::{rk4_step, substeps};
use super::law::{ControlLaw, InitialEstimate};
use crate::error::{Error, Result};
use crate::numkit::{
    eigenvalues, is_hurwitz, match_multisets, solve_sylvester, Complex64, MultisetMatch,
    RealMatrix, RealVector,
};
use crate::observers::error_matrix;
use crate::plantmodel::Scenario;

/// Default pairing tolerance for closed-loop spectra.
pub const SEPARATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub closed_loop: Vec<Complex64>,
    /// Union of the feedback, compensator and observer-error spectra.
    pub predicted: Vec<Complex64>,
    pub matching: MultisetMatch,
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.matching.matches()
    }

    pub fn to_text(&self) -> String {
        if self.passed() {
            return format!(
                "separation holds: {} eigenvalues matched, max deviation {:.3e}",
                self.closed_loop.len(),
                self.matching.max_deviation
            );
        }
        let list = |v: &[Complex64]| {
            v.iter()
                .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "separation violated: unmatched closed-loop eigenvalues [{}], unmatched predicted eigenvalues [{}]",
            list(&self.matching.unmatched_left),
            list(&self.matching.unmatched_right)
        )
    }
}

fn static_graph(sc: &Scenario) -> Result<usize> {
    sc.topology
        .static_graph()
        .ok_or_else(|| Error::Precondition("structural checks need a static graph".into()))
}

/// Compares `σ(A_c)` with the union of the spectra the block-triangular
/// structure of the loop predicts.
pub fn verify_separation(sc: &Scenario, law: &ControlLaw, tol: f64) -> Result<SeparationReport> {
    let g = static_graph(sc)?;
    let cl = assemble(sc, law, &InitialEstimate::Zero)?;
    let closed_loop = eigenvalues(&cl.a_c(g))?;
    let mut predicted = Vec::with_capacity(closed_loop.len());
    for (a, k) in sc.agents.iter().zip(&law.gains.agents) {
        predicted.extend(eigenvalues(&(&a.a + &a.b * &k.k1))?);
        if law.kind.uses_compensator() {
            let l =
                k.l.as_ref()
                    .ok_or_else(|| Error::Assembly("missing compensator gain".into()))?;
            let (a_bar, c_bar) = a.composite_pair(sc.exo.s_u());
            predicted.extend(eigenvalues(&(a_bar - l * c_bar))?);
        }
    }
    if cl.layout.eta.is_some() {
        let og = law
            .gains
            .observer
            .as_ref()
            .expect("assembled with observer");
        let h = &sc.topology.h_matrices()[g].matrix;
        predicted.extend(eigenvalues(&error_matrix(
            sc.exo.s_m(),
            &og.l0,
            sc.exo.c_m0(),
            og.mu,
            h,
        ))?);
    }
    let matching = match_multisets(&closed_loop, &predicted, tol);
    Ok(SeparationReport {
        closed_loop,
        predicted,
        matching,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    /// `‖C_c X_c + D_c‖`.
    pub residual: f64,
    /// Distance between `σ(A_c)` and `σ(S)`.
    pub separation: f64,
}

/// Solves `X_c S = A_c X_c + B_c` and reports `‖C_c X_c + D_c‖`.
pub fn verify_sylvester_steady_state(sc: &Scenario, law: &ControlLaw) -> Result<SteadyState> {
    let g = static_graph(sc)?;
    let cl = assemble(sc, law, &InitialEstimate::Zero)?;
    let (a_c, b_c) = (cl.a_c(g), cl.b_c(g));
    if !is_hurwitz(&a_c, 0.0)? {
        return Err(Error::Precondition(
            "closed-loop matrix is not Hurwitz".into(),
        ));
    }
    let s = sc.exo.s();
    let sa = eigenvalues(&a_c)?;
    let ss = eigenvalues(&s)?;
    let separation = sa
        .iter()
        .flat_map(|a| ss.iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    if separation <= 1e-9 {
        return Err(Error::Precondition(
            "closed-loop spectrum meets the exosystem spectrum".into(),
        ));
    }
    // A_c X − X S = −B_c
    let x = solve_sylvester(&a_c, &(-&s), &(-b_c))?;
    let (c_c, d_c) = cl.c_d();
    let r = c_c * x + d_c;
    Ok(SteadyState {
        residual: crate::numkit::norm2(&r),
        separation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCheck {
    pub converged: bool,
    pub final_norm: f64,
}

/// Simulates `ẋ = A x + u(t)` from `x0` and reports whether `‖x‖` ends below
/// `threshold`.
pub fn input_decay_check(
    a: &RealMatrix,
    forcing: impl Fn(f64) -> RealVector,
    x0: &RealVector,
    horizon: f64,
    step: f64,
    threshold: f64,
) -> Result<DecayCheck> {
    if !is_hurwitz(a, 0.0)? {
        return Err(Error::Precondition(
            "input-decay check needs a Hurwitz matrix".into(),
        ));
    }
    let k = substeps(horizon, step);
    let h = horizon / k as f64;
    let mut x = x0.clone();
    for j in 0..k {
        x = rk4_step(|t, y| a * y + forcing(t), j as f64 * h, &x, h);
    }
    let final_norm = x.norm();
    Ok(DecayCheck {
        converged: final_norm < threshold,
        final_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn decaying_forcing() {
        let a = dmatrix![-1.0];
        let r = input_decay_check(
            &a,
            |t| dvector![(-t).exp()],
            &dvector![0.0],
            30.0,
            1e-2,
            1e-6,
        )
        .unwrap();
        assert!(r.converged);
        // x(t) = t e^{-t}
        let c = input_decay_check(&a, |t| dvector![(-t).exp()], &dvector![0.0], 1.0, 1e-3, 1.0)
            .unwrap();
        assert!((c.final_norm - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn unforced_and_constant_forcing() {
        let a = dmatrix![-2.0];
        let r = input_decay_check(&a, |_| dvector![0.0], &dvector![1.0], 10.0, 1e-2, 1e-6).unwrap();
        assert!(r.converged);
        let r = input_decay_check(&a, |_| dvector![1.0], &dvector![0.0], 10.0, 1e-2, 1e-3).unwrap();
        assert!(!r.converged);
        assert!((r.final_norm - 0.5).abs() < 1e-6);
    }

    #[test]
    fn unstable_matrix_rejected() {
        assert!(input_decay_check(
            &dmatrix![1.0],
            |_| dvector![0.0],
            &dvector![1.0],
            1.0,
            0.1,
            1.0
        )
        .is_err());
    }
}
