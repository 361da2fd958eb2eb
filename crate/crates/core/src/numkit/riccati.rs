use super::linear::{least_squares, solve_lyapunov, MatrixEquation, MatrixTerm};
use super::pbh::pbh_stabilizable;
use super::spectrum::is_hurwitz;
use super::{ensure_square, norm2, symmetrize, RealMatrix};
use crate::error::{Error, Result};

/// Spectral norm of `AᵀP + PA − PBBᵀP + I`.
pub fn are_residual(a: &RealMatrix, b: &RealMatrix, p: &RealMatrix) -> f64 {
    let n = a.nrows();
    let r = a.transpose() * p + p * a - p * b * b.transpose() * p + RealMatrix::identity(n, n);
    norm2(&r)
}

/// Stabilizing solution of `AᵀP + PA − PBBᵀP + I = 0`.
///
/// The stable invariant subspace of the Hamiltonian is extracted with the
/// scaled matrix sign function and then polished by Newton–Kleinman steps.
/// If the sign iteration breaks down, Newton–Kleinman is started from a
/// Bass stabilizing gain instead.
pub fn solve_are(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let n = ensure_square(a, "ARE A")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "ARE: B has {} rows, A is {n}x{n}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    if !pbh_stabilizable(a, b)? {
        return Err(Error::NotStabilizable);
    }
    let g = b * b.transpose();

    let initial = match sign_function_solution(a, &g) {
        Some(p) if closed_loop_hurwitz(a, &g, &p) => p,
        _ => {
            log::debug!("ARE: sign iteration unusable, starting Newton from Bass gain");
            let k0 = bass_gain(a, b)?;
            newton_step(a, b, &k0)?
        }
    };
    let p = newton_kleinman(a, b, initial)?;

    if !closed_loop_hurwitz(a, &g, &p) {
        return Err(Error::Numeric("ARE solution is not stabilizing".into()));
    }
    if p.symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::Numeric(
            "ARE solution is not positive definite".into(),
        ));
    }
    Ok(p)
}

fn closed_loop_hurwitz(a: &RealMatrix, g: &RealMatrix, p: &RealMatrix) -> bool {
    p.iter().all(|x| x.is_finite()) && is_hurwitz(&(a - g * p), 0.0).unwrap_or(false)
}

fn sign_function_solution(a: &RealMatrix, g: &RealMatrix) -> Option<RealMatrix> {
    let n = a.nrows();
    let mut h = RealMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-g));
    h.view_mut((n, 0), (n, n))
        .copy_from(&(-RealMatrix::identity(n, n)));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let mut z = h;
    let mut converged = false;
    for _ in 0..100 {
        let inv = z.clone().try_inverse()?;
        let det = z.determinant().abs();
        let c = if det.is_finite() && det > 0.0 {
            det.powf(1.0 / (2.0 * n as f64))
        } else {
            1.0
        };
        let next = (&z / c + inv * c) * 0.5;
        let delta = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if !size.is_finite() {
            return None;
        }
        if delta <= 1e-13 * size {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    let id = RealMatrix::identity(n, n);
    let w11 = z.view((0, 0), (n, n)).into_owned();
    let w12 = z.view((0, n), (n, n)).into_owned();
    let w21 = z.view((n, 0), (n, n)).into_owned();
    let w22 = z.view((n, n), (n, n)).into_owned();
    let eqs = [
        MatrixEquation {
            terms: vec![MatrixTerm::left(w12, n)],
            rhs: -(w11 + &id),
        },
        MatrixEquation {
            terms: vec![MatrixTerm::left(w22 + &id, n)],
            rhs: -w21,
        },
    ];
    let sol = least_squares(&eqs, n, n).ok()?;
    Some(symmetrize(&sol.solution))
}

/// Solves the Lyapunov equation of one Newton–Kleinman step for gain `K`:
/// `(A − BK)ᵀP + P(A − BK) + I + KᵀK = 0`.
fn newton_step(a: &RealMatrix, b: &RealMatrix, k: &RealMatrix) -> Result<RealMatrix> {
    let n = a.nrows();
    let ak = a - b * k;
    let q = RealMatrix::identity(n, n) + k.transpose() * k;
    Ok(symmetrize(&solve_lyapunov(&ak, &q)?))
}

fn newton_kleinman(a: &RealMatrix, b: &RealMatrix, p0: RealMatrix) -> Result<RealMatrix> {
    let g = b * b.transpose();
    let mut best_res = are_residual(a, b, &p0);
    let mut best = p0;
    for _ in 0..30 {
        if best_res <= 1e-13 * (1.0 + norm2(&best)) {
            break;
        }
        let k = b.transpose() * &best;
        let next = match newton_step(a, b, &k) {
            Ok(p) => p,
            Err(_) => break,
        };
        let res = are_residual(a, b, &next);
        if !(res < best_res) || !closed_loop_hurwitz(a, &g, &next) {
            break;
        }
        best_res = res;
        best = next;
    }
    Ok(best)
}

/// Bass stabilizing gain `K = BᵀZ⁻¹` where
/// `(A + βI)Z + Z(A + βI)ᵀ = 2BBᵀ` and `β` exceeds every real part of `−A`.
fn bass_gain(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let n = a.nrows();
    let beta = norm2(a) + 1.0;
    let shifted = -(a + RealMatrix::identity(n, n) * beta);
    // solve_lyapunov handles XᵀZ + ZX + Q = 0; with X = shiftedᵀ this is
    // shifted·Z + Z·shiftedᵀ + 2BBᵀ = 0.
    let z = solve_lyapunov(&shifted.transpose(), &(b * b.transpose() * 2.0))?;
    let zinv = symmetrize(&z)
        .try_inverse()
        .ok_or_else(|| Error::Numeric("Bass Gramian is singular".into()))?;
    let k = b.transpose() * zinv;
    if !is_hurwitz(&(a - b * &k), 0.0)? {
        return Err(Error::Numeric("Bass gain is not stabilizing".into()));
    }
    Ok(k)
}
