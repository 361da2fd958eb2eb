use nalgebra::{DMatrix, SVD};

use super::linear::{complexify, solve_lyapunov};
use super::spectrum::spectrum;
use super::{ensure_square, norm2, symmetrize, Complex64, RealMatrix, SPECTRAL_ATOL};
use crate::error::{Error, Result};

/// Real block-diagonalizing change of basis for a matrix `A`.
///
/// With `T = transform`, `T A T⁻¹ = blockdiag(selected_block, complement_block)`.
/// The selected block collects the real modal form of the chosen
/// semi-simple eigenvalues: `λ I` for real ones, `[[Re λ, Im λ], [−Im λ, Re λ]]`
/// per eigenvector for complex ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    /// Columns spanning the selected invariant subspace.
    pub selected: RealMatrix,
    /// Orthonormal columns spanning the complementary invariant subspace.
    pub complement: RealMatrix,
    pub transform: RealMatrix,
    pub transform_inv: RealMatrix,
    pub selected_block: RealMatrix,
    pub complement_block: RealMatrix,
}

impl ModalBasis {
    pub fn selected_dim(&self) -> usize {
        self.selected.ncols()
    }
}

fn scale_of(a: &RealMatrix) -> f64 {
    a.norm().max(1.0)
}

/// Orthonormal basis of the right null space of `m`, with singular values at
/// or below `tol` treated as zero.
pub(crate) fn null_space(m: &RealMatrix, tol: f64) -> RealMatrix {
    let (r, c) = m.shape();
    if c == 0 {
        return RealMatrix::zeros(0, 0);
    }
    let padded = if r < c {
        let mut p = RealMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V");
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(k, _)| vt.row(k).transpose())
        .collect();
    if cols.is_empty() {
        RealMatrix::zeros(c, 0)
    } else {
        RealMatrix::from_columns(&cols)
    }
}

fn complex_null_space(m: &DMatrix<Complex64>, tol: f64) -> Vec<nalgebra::DVector<Complex64>> {
    let svd = SVD::new(m.clone(), false, true);
    let vt = svd.v_t.expect("requested V");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(k, _)| vt.row(k).adjoint())
        .collect()
}

/// Real basis of the eigenspace of `m` at `lambda` (real and imaginary parts
/// of complex eigenvectors interleaved), and the matching real modal block.
fn real_eigenspace(
    m: &RealMatrix,
    lambda: Complex64,
    expected: usize,
    tol: f64,
) -> Result<(Vec<nalgebra::DVector<f64>>, RealMatrix)> {
    let n = m.nrows();
    if lambda.im == 0.0 {
        let shifted = m - RealMatrix::identity(n, n) * lambda.re;
        let ns = null_space(&shifted, tol);
        if ns.ncols() != expected {
            return Err(Error::NotMarginallyStable(format!(
                "eigenvalue {} is not semi-simple (geometric {} < algebraic {expected})",
                lambda.re,
                ns.ncols()
            )));
        }
        let cols = ns.column_iter().map(|c| c.into_owned()).collect();
        Ok((cols, RealMatrix::identity(expected, expected) * lambda.re))
    } else {
        let shifted = complexify(m) - DMatrix::<Complex64>::identity(n, n) * lambda;
        let ns = complex_null_space(&shifted, tol);
        if ns.len() != expected {
            return Err(Error::NotMarginallyStable(format!(
                "eigenvalue {}{:+}i is not semi-simple (geometric {} < algebraic {expected})",
                lambda.re,
                lambda.im,
                ns.len()
            )));
        }
        let mut cols = Vec::with_capacity(2 * expected);
        let mut block = RealMatrix::zeros(2 * expected, 2 * expected);
        for (k, x) in ns.iter().enumerate() {
            // unit-norm x scaled by √2 gives orthonormal real and imaginary
            // parts whenever m is normal
            let x = x * Complex64::new(std::f64::consts::SQRT_2, 0.0);
            cols.push(x.map(|z| z.re));
            cols.push(x.map(|z| z.im));
            let (re, im) = (lambda.re, lambda.im);
            block[(2 * k, 2 * k)] = re;
            block[(2 * k, 2 * k + 1)] = im;
            block[(2 * k + 1, 2 * k)] = -im;
            block[(2 * k + 1, 2 * k + 1)] = re;
        }
        Ok((cols, block))
    }
}

/// Splits `a` along the eigenvalues accepted by `select`.
///
/// Every selected eigenvalue must be semi-simple; complex eigenvalues are
/// taken together with their conjugates.
pub fn real_modal_basis(a: &RealMatrix, select: impl Fn(Complex64) -> bool) -> Result<ModalBasis> {
    let n = ensure_square(a, "modal basis input")?;
    let spec = spectrum(a)?;
    let scale = scale_of(a);
    let tol = 1e-8 * scale;

    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut blocks = Vec::new();
    for e in spec.distinct() {
        if !select(e.value) || e.value.im < 0.0 {
            continue;
        }
        // A conjugate partner below the axis must be selected too.
        if e.value.im > 0.0 && !select(e.value.conj()) {
            return Err(Error::Precondition(
                "modal selection must be closed under conjugation".into(),
            ));
        }
        let (r, block) = real_eigenspace(a, e.value, e.algebraic, tol)?;
        let (l, _) = real_eigenspace(&a.transpose(), e.value, e.algebraic, tol)?;
        right.extend(r);
        left.extend(l);
        blocks.push(block);
    }

    let k = right.len();
    let selected = if k == 0 {
        RealMatrix::zeros(n, 0)
    } else {
        RealMatrix::from_columns(&right)
    };
    let complement = if k == 0 {
        RealMatrix::identity(n, n)
    } else {
        let l = RealMatrix::from_columns(&left);
        let mut lt = l.transpose();
        for mut row in lt.row_iter_mut() {
            let nrm = row.norm();
            if nrm > 0.0 {
                row /= nrm;
            }
        }
        null_space(&lt, 1e-8)
    };
    if complement.ncols() + k != n {
        return Err(Error::Numeric(format!(
            "modal split produced {} + {} columns for a {n}x{n} matrix",
            k,
            complement.ncols()
        )));
    }

    let mut transform_inv = RealMatrix::zeros(n, n);
    if k > 0 {
        transform_inv.view_mut((0, 0), (n, k)).copy_from(&selected);
    }
    if n > k {
        transform_inv
            .view_mut((0, k), (n, n - k))
            .copy_from(&complement);
    }
    let transform = transform_inv
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("modal basis is singular".into()))?;
    let mixed = &transform * a * &transform_inv;
    let selected_block = if blocks.is_empty() {
        RealMatrix::zeros(0, 0)
    } else {
        super::block_diag(&blocks.iter().collect::<Vec<_>>())
    };
    let complement_block = mixed.view((k, k), (n - k, n - k)).into_owned();
    Ok(ModalBasis {
        selected,
        complement,
        transform,
        transform_inv,
        selected_block,
        complement_block,
    })
}

/// Positive definite `P` with `P Sᵀ + S P ≤ 0` for a marginally stable `S`,
/// normalized to unit spectral norm.
///
/// Built from the real modal basis of `Sᵀ`: identity on the imaginary-axis
/// modes (where the modal block is skew-symmetric) and a Lyapunov solution on
/// the Hurwitz complement.
pub fn solve_lyap_marginal(s: &RealMatrix) -> Result<RealMatrix> {
    let n = ensure_square(s, "marginal Lyapunov S")?;
    if n == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    let spec = spectrum(s)?;
    if let Some(e) = spec.distinct().iter().find(|e| e.value.re > SPECTRAL_ATOL) {
        return Err(Error::NotMarginallyStable(format!(
            "eigenvalue {}{:+}i has positive real part",
            e.value.re, e.value.im
        )));
    }
    let a = s.transpose();
    let modal = real_modal_basis(&a, |l| l.re.abs() <= SPECTRAL_ATOL)?;
    let k = modal.selected_dim();
    let mut d = RealMatrix::zeros(n, n);
    d.view_mut((0, 0), (k, k)).fill_with_identity();
    if n > k {
        let h = &modal.complement_block;
        let qh = solve_lyapunov(h, &RealMatrix::identity(n - k, n - k))?;
        d.view_mut((k, k), (n - k, n - k)).copy_from(&qh);
    }
    let t = &modal.transform;
    let p = symmetrize(&(t.transpose() * d * t));
    let scale = norm2(&p);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Numeric(
            "marginal Lyapunov solution degenerate".into(),
        ));
    }
    Ok(p / scale)
}
