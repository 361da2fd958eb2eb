use std::collections::HashMap;

use log::{debug, info};

use super::assemble::ClosedLoop;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::numkit::{RealMatrix, RealVector};
use crate::topology::SwitchingSchedule;

/// A state norm above this aborts the run as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// One classical Runge–Kutta step of `ẋ = f(t, x)`.
pub fn rk4_step<F>(f: F, t: f64, x: &RealVector, h: f64) -> RealVector
where
    F: Fn(f64, &RealVector) -> RealVector,
{
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// The matrix by which one RK4 step of `ẋ = M x` multiplies the state:
/// the degree-4 Taylor polynomial of `e^{hM}`.
pub fn rk4_transition(m: &RealMatrix, h: f64) -> RealMatrix {
    let n = m.nrows();
    let hm = m * h;
    let mut term = RealMatrix::identity(n, n);
    let mut phi = term.clone();
    for k in 1..=4 {
        term = &term * &hm / k as f64;
        phi += &term;
    }
    phi
}

pub(crate) fn check_state(x: &RealVector, t: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) && x.norm() <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(Error::Divergence { time: t })
    }
}

/// Number of equal substeps covering `len` with steps no longer than `step`.
pub(crate) fn substeps(len: f64, step: f64) -> usize {
    ((len / step) - 1e-9).ceil().max(1.0) as usize
}

/// Fixed-step RK4 over a piecewise-constant closed loop.
///
/// Every switching instant is a grid point: a segment whose length is not a
/// multiple of `step` is covered by equal, slightly shorter steps.
pub fn integrate(
    cl: &ClosedLoop,
    sched: &SwitchingSchedule,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Model(format!("step must be positive, got {step}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Model(
            "horizon must be positive; the trajectory would be empty".into(),
        ));
    }
    let segments = sched.segments(horizon);
    let mut tr = Trajectory::new(cl.layout.clone(), cl.u_maps.clone(), cl.e_maps.clone());
    let mut x = cl.initial.clone();
    check_state(&x, 0.0)?;
    tr.push(0.0, segments[0].graph, x.clone());

    let mut cache: HashMap<(usize, u64), RealMatrix> = HashMap::new();
    for seg in &segments {
        let k = substeps(seg.len(), step);
        let h = seg.len() / k as f64;
        if (h - step).abs() > 1e-12 * step {
            tr.refined_segments += 1;
            debug!(
                "segment [{}, {}) refined to {k} steps of {h:e} (requested {step:e})",
                seg.start, seg.end
            );
        }
        let phi = cache
            .entry((seg.graph, h.to_bits()))
            .or_insert_with(|| rk4_transition(&cl.generators[seg.graph], h));
        for j in 1..=k {
            x = &*phi * &x;
            let t = if j == k {
                seg.end
            } else {
                seg.start + j as f64 * h
            };
            check_state(&x, t)?;
            tr.push(t, seg.graph, x.clone());
        }
    }
    if tr.refined_segments > 0 {
        info!(
            "{} segment(s) not aligned with step {step}; refined to land on switching instants",
            tr.refined_segments
        );
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn exponential_decay() {
        let mut x = dvector![1.0];
        for k in 0..100 {
            x = rk4_step(|_, y| -y, k as f64 * 0.01, &x, 0.01);
        }
        assert!((x[0] - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn transition_matches_step() {
        let m = dmatrix![0.0, 1.0; -2.0, -0.3];
        let x = dvector![0.4, -1.0];
        let a = rk4_transition(&m, 0.05) * &x;
        let b = rk4_step(|_, y| &m * y, 0.0, &x, 0.05);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn harmonic_energy_is_conserved() {
        let m = dmatrix![0.0, 1.0; -1.0, 0.0];
        let phi = rk4_transition(&m, 1e-3);
        let mut v = dvector![1.0, 0.0];
        for _ in 0..100_000 {
            v = &phi * v;
        }
        assert!((v.norm_squared() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn substep_counts() {
        assert_eq!(substeps(1.0, 0.1), 10);
        assert_eq!(substeps(0.5, 1e-3), 500);
        assert_eq!(substeps(0.25, 0.1), 3);
        assert_eq!(substeps(1e-5, 0.1), 1);
    }

    #[test]
    fn divergence_is_flagged() {
        assert!(check_state(&dvector![1e13], 2.0).is_err());
        assert!(check_state(&dvector![f64::NAN], 2.0).is_err());
        assert!(check_state(&dvector![1.0], 2.0).is_ok());
    }
}
