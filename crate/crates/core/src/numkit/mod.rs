//! Dense real-matrix numerics: spectra, stability and PBH tests,
//! Lyapunov/Sylvester/Riccati solvers and Kronecker products.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (tens of rows at most), so vectorized Kronecker solves are used where a
//! structured algorithm would only pay off at larger sizes.

mod linear;
mod lyapunov;
mod pbh;
mod riccati;
pub mod serde_matrix;
mod spectrum;

pub(crate) use linear::least_squares;
pub use linear::{
    identity_terms, kron, rank, rank_complex, solve_linear_matrix_system, solve_lyapunov,
    solve_sylvester, LinearSolution, MatrixEquation, MatrixTerm,
};
pub use lyapunov::{real_modal_basis, solve_lyap_marginal, ModalBasis};
pub use pbh::{pbh_controllable, pbh_detectable, pbh_observable, pbh_stabilizable};
pub use riccati::{are_residual, solve_are};
pub use spectrum::{
    eigenvalues, is_hurwitz, is_marginally_stable, match_multisets, spectral_radius, spectrum,
    Eigenvalue, MultisetMatch, Spectrum,
};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;
pub type Complex64 = Complex<f64>;

/// Relative singular-value threshold for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;
/// Absolute tolerance for real-part / modulus comparisons on spectra.
pub const SPECTRAL_ATOL: f64 = 1e-9;

/// Spectral norm (largest singular value).
pub fn norm2(m: &RealMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn symmetrize(m: &RealMatrix) -> RealMatrix {
    (m + m.transpose()) * 0.5
}

pub fn block_diag(blocks: &[&RealMatrix]) -> RealMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hcat(blocks: &[&RealMatrix]) -> Result<RealMatrix> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    if blocks.iter().any(|b| b.nrows() != rows) {
        return Err(Error::Dimension("hcat: row counts differ".into()));
    }
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    Ok(out)
}

/// Vertical concatenation; all blocks must share a column count.
pub fn vcat(blocks: &[&RealMatrix]) -> Result<RealMatrix> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    if blocks.iter().any(|b| b.ncols() != cols) {
        return Err(Error::Dimension("vcat: column counts differ".into()));
    }
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    Ok(out)
}

pub(crate) fn ensure_square(m: &RealMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(m: &RealMatrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} has non-finite entries")))
    }
}

/// Builds a matrix from row-major nested rows. Ragged input is rejected.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<RealMatrix> {
    let ncols = rows.first().map_or(0, |r| r.len());
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(RealMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
