use nalgebra::DMatrix;

use super::linear::{complexify, rank_complex};
use super::spectrum::spectrum;
use super::{ensure_square, Complex64, RealMatrix, SPECTRAL_ATOL};
use crate::error::{Error, Result};

fn pbh_rank_holds(a: &RealMatrix, b: &RealMatrix, only_unstable: bool) -> Result<bool> {
    let n = ensure_square(a, "PBH A")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "PBH: B has {} rows, A is {n}x{n}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(true);
    }
    let ca = complexify(a);
    let cb = complexify(b);
    for e in spectrum(a)?.distinct() {
        if only_unstable && e.value.re < -SPECTRAL_ATOL {
            continue;
        }
        let mut pencil = DMatrix::<Complex64>::zeros(n, n + b.ncols());
        pencil
            .view_mut((0, 0), (n, n))
            .copy_from(&(&ca - DMatrix::<Complex64>::identity(n, n) * e.value));
        pencil.view_mut((0, n), (n, b.ncols())).copy_from(&cb);
        if rank_complex(&pencil) < n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `rank [A − λI, B] = n` for every eigenvalue with `Re λ ≥ 0`.
pub fn pbh_stabilizable(a: &RealMatrix, b: &RealMatrix) -> Result<bool> {
    pbh_rank_holds(a, b, true)
}

/// `rank [A − λI, B] = n` for every eigenvalue.
pub fn pbh_controllable(a: &RealMatrix, b: &RealMatrix) -> Result<bool> {
    pbh_rank_holds(a, b, false)
}

/// Detectability of `(C, A)` as stabilizability of `(Aᵀ, Cᵀ)`.
pub fn pbh_detectable(c: &RealMatrix, a: &RealMatrix) -> Result<bool> {
    check_output_dims(c, a)?;
    pbh_stabilizable(&a.transpose(), &c.transpose())
}

pub fn pbh_observable(c: &RealMatrix, a: &RealMatrix) -> Result<bool> {
    check_output_dims(c, a)?;
    pbh_controllable(&a.transpose(), &c.transpose())
}

fn check_output_dims(c: &RealMatrix, a: &RealMatrix) -> Result<()> {
    let n = ensure_square(a, "PBH A")?;
    if c.ncols() != n {
        return Err(Error::Dimension(format!(
            "PBH: C has {} columns, A is {n}x{n}",
            c.ncols()
        )));
    }
    Ok(())
}
