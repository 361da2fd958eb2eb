use nalgebra::{Complex, DMatrix, DVector, SVD};

use super::{ensure_square, Complex64, RealMatrix, RANK_RTOL};
use crate::error::{Error, Result};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    a.kronecker(b)
}

fn count_rank(singular_values: impl Iterator<Item = f64> + Clone) -> usize {
    let max = singular_values.clone().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    singular_values.filter(|s| *s > RANK_RTOL * max).count()
}

/// Numerical rank with relative singular-value threshold `1e-10 * σ_max`.
pub fn rank(m: &RealMatrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    count_rank(sv.iter().cloned())
}

pub fn rank_complex(m: &DMatrix<Complex64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    count_rank(sv.iter().cloned())
}

pub(crate) fn complexify(m: &RealMatrix) -> DMatrix<Complex64> {
    m.map(|x| Complex::new(x, 0.0))
}

/// One `left · Z · right` term of a linear matrix equation in the unknown `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTerm {
    pub left: RealMatrix,
    pub right: RealMatrix,
}

impl MatrixTerm {
    pub fn new(left: RealMatrix, right: RealMatrix) -> Self {
        MatrixTerm { left, right }
    }

    /// `left · Z`.
    pub fn left(left: RealMatrix, unknown_cols: usize) -> Self {
        MatrixTerm {
            left,
            right: RealMatrix::identity(unknown_cols, unknown_cols),
        }
    }

    /// `Z · right`.
    pub fn right(unknown_rows: usize, right: RealMatrix) -> Self {
        MatrixTerm {
            left: RealMatrix::identity(unknown_rows, unknown_rows),
            right,
        }
    }
}

/// `Σ_k left_k · Z · right_k = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEquation {
    pub terms: Vec<MatrixTerm>,
    pub rhs: RealMatrix,
}

/// Least-squares solution of a stacked linear matrix system.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub solution: RealMatrix,
    /// Largest Frobenius residual over the equations.
    pub residual: f64,
    /// Frobenius norm of the stacked right-hand side.
    pub rhs_norm: f64,
    pub exact: bool,
}

/// Tolerance factor for calling a least-squares solve exact:
/// `residual < EXACT_RTOL * (1 + |rhs|)`.
pub const EXACT_RTOL: f64 = 1e-9;

/// Solves a system of linear matrix equations in one unknown `Z` of shape
/// `rows × cols` by Kronecker vectorization (`vec(L Z R) = (Rᵀ ⊗ L) vec Z`).
///
/// The minimum-norm least-squares solution is always computed; when its
/// residual is not within [`EXACT_RTOL`] the call fails with
/// [`Error::NoSolution`] carrying that residual.
pub fn solve_linear_matrix_system(
    equations: &[MatrixEquation],
    rows: usize,
    cols: usize,
) -> Result<LinearSolution> {
    let sol = least_squares(equations, rows, cols)?;
    if sol.exact {
        Ok(sol)
    } else {
        Err(Error::NoSolution {
            residual: sol.residual,
        })
    }
}

pub(crate) fn least_squares(
    equations: &[MatrixEquation],
    rows: usize,
    cols: usize,
) -> Result<LinearSolution> {
    let unknowns = rows * cols;
    let mut total_rows = 0;
    for (k, eq) in equations.iter().enumerate() {
        for t in &eq.terms {
            if t.left.ncols() != rows
                || t.right.nrows() != cols
                || t.left.nrows() != eq.rhs.nrows()
                || t.right.ncols() != eq.rhs.ncols()
            {
                return Err(Error::Dimension(format!(
                    "equation {k}: term {}x{} · Z({rows}x{cols}) · {}x{} does not match rhs {}x{}",
                    t.left.nrows(),
                    t.left.ncols(),
                    t.right.nrows(),
                    t.right.ncols(),
                    eq.rhs.nrows(),
                    eq.rhs.ncols()
                )));
            }
        }
        total_rows += eq.rhs.len();
    }

    let mut coef = RealMatrix::zeros(total_rows, unknowns);
    let mut rhs = DVector::zeros(total_rows);
    let mut offset = 0;
    for eq in equations {
        let len = eq.rhs.len();
        for t in &eq.terms {
            let block = t.right.transpose().kronecker(&t.left);
            let mut view = coef.view_mut((offset, 0), (len, unknowns));
            view += block;
        }
        rhs.rows_mut(offset, len).copy_from_slice(eq.rhs.as_slice());
        offset += len;
    }

    let solution = if unknowns == 0 || total_rows == 0 {
        RealMatrix::zeros(rows, cols)
    } else {
        let svd = SVD::new(coef, true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let z = if smax == 0.0 {
            DVector::zeros(unknowns)
        } else {
            svd.solve(&rhs, RANK_RTOL * smax)
                .map_err(|e| Error::Numeric(format!("least-squares solve: {e}")))?
        };
        RealMatrix::from_column_slice(rows, cols, z.as_slice())
    };

    let mut residual: f64 = 0.0;
    for eq in equations {
        let mut lhs = -eq.rhs.clone();
        for t in &eq.terms {
            lhs += &t.left * &solution * &t.right;
        }
        residual = residual.max(lhs.norm());
    }
    let rhs_norm = rhs.norm();
    Ok(LinearSolution {
        solution,
        residual,
        rhs_norm,
        exact: residual < EXACT_RTOL * (1.0 + rhs_norm),
    })
}

fn solve_square_vectorized(coef: RealMatrix, rhs: &RealMatrix, what: &str) -> Result<RealMatrix> {
    let (rows, cols) = rhs.shape();
    let b = DVector::from_column_slice(rhs.as_slice());
    let x = coef
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric(format!("{what}: singular operator")))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{what}: non-finite solution")));
    }
    Ok(RealMatrix::from_column_slice(rows, cols, x.as_slice()))
}

/// Solves `AᵀP + PA + Q = 0` for `P`.
pub fn solve_lyapunov(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    let n = ensure_square(a, "Lyapunov A")?;
    if q.shape() != (n, n) {
        return Err(Error::Dimension("Lyapunov Q must match A".into()));
    }
    if n == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    let id = RealMatrix::identity(n, n);
    let at = a.transpose();
    let coef = id.kronecker(&at) + at.kronecker(&id);
    solve_square_vectorized(coef, &(-q), "Lyapunov equation")
}

/// Solves `AX + XB = C` for `X`.
pub fn solve_sylvester(a: &RealMatrix, b: &RealMatrix, c: &RealMatrix) -> Result<RealMatrix> {
    let n = ensure_square(a, "Sylvester A")?;
    let m = ensure_square(b, "Sylvester B")?;
    if c.shape() != (n, m) {
        return Err(Error::Dimension(format!(
            "Sylvester C must be {n}x{m}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if n == 0 || m == 0 {
        return Ok(RealMatrix::zeros(n, m));
    }
    let coef = RealMatrix::identity(m, m).kronecker(a)
        + b.transpose().kronecker(&RealMatrix::identity(n, n));
    solve_square_vectorized(coef, c, "Sylvester equation")
}

/// Convenience for the `I · Z · I = rhs` identity system.
pub fn identity_terms(rows: usize, cols: usize) -> MatrixTerm {
    MatrixTerm::new(
        RealMatrix::identity(rows, rows),
        RealMatrix::identity(cols, cols),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn kron_examples() {
        let i2 = RealMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &dmatrix![5.0]), dmatrix![5.0, 0.0; 0.0, 5.0]);
        assert_eq!(
            kron(&dmatrix![1.0; 2.0], &dmatrix![3.0]),
            dmatrix![3.0; 6.0]
        );
        let swap = dmatrix![0.0, 1.0; 1.0, 0.0];
        let expected = dmatrix![
            0.0, 0.0, 1.0, 0.0;
            0.0, 0.0, 0.0, 1.0;
            1.0, 0.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0
        ];
        assert_eq!(kron(&swap, &i2), expected);
    }

    #[test]
    fn fixed_unknown_times_rotation() {
        // X S = U with X = [1, 0]: the unknown is U, with I·U·I = X·S.
        let s = dmatrix![0.0, 1.0; -1.0, 0.0];
        let x = dmatrix![1.0, 0.0];
        let eq = MatrixEquation {
            terms: vec![identity_terms(1, 2)],
            rhs: &x * &s,
        };
        let sol = solve_linear_matrix_system(&[eq], 1, 2).unwrap();
        assert!(sol.exact);
        assert_eq!(sol.solution, dmatrix![0.0, 1.0]);
    }

    #[test]
    fn identity_coefficients_return_rhs() {
        let r = dmatrix![1.0, 2.0; 3.0, 4.0];
        let eq = MatrixEquation {
            terms: vec![identity_terms(2, 2)],
            rhs: r.clone(),
        };
        let sol = solve_linear_matrix_system(&[eq], 2, 2).unwrap();
        assert!((sol.solution - r).norm() < 1e-14);
    }

    #[test]
    fn inconsistent_system_carries_residual() {
        let eq = MatrixEquation {
            terms: vec![MatrixTerm::new(dmatrix![0.0], dmatrix![1.0])],
            rhs: dmatrix![1.0],
        };
        match solve_linear_matrix_system(&[eq], 1, 1) {
            Err(Error::NoSolution { residual }) => assert!((residual - 1.0).abs() < 1e-14),
            other => panic!("expected NoSolution, got {other:?}"),
        }
    }

    #[test]
    fn lyapunov_scalar() {
        // -2p + 1 = 0
        let p = solve_lyapunov(&dmatrix![-1.0], &dmatrix![1.0]).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sylvester_residual() {
        let a = dmatrix![-1.0, 2.0; 0.0, -3.0];
        let b = dmatrix![0.0, 1.0; -1.0, 0.0];
        let c = dmatrix![1.0, 0.0; 2.0, 1.0];
        let x = solve_sylvester(&a, &b, &c).unwrap();
        assert!((&a * &x + &x * &b - c).norm() < 1e-12);
    }

    #[test]
    fn rank_threshold() {
        assert_eq!(rank(&dmatrix![1.0, 0.0; 0.0, 1e-12]), 1);
        assert_eq!(rank(&dmatrix![1.0, 0.0; 0.0, 1e-9]), 2);
        assert_eq!(rank(&RealMatrix::zeros(2, 2)), 0);
    }
}
