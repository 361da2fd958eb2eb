use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{
    eigenvalues, hcat, least_squares, rank_complex, serde_matrix, Complex64, MatrixEquation,
    MatrixTerm, RealMatrix,
};
use crate::plantmodel::PlantAgent;

/// Solution pair of `XS = AX + BU + E`, `0 = CX + DU + F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulatorSolution {
    #[serde(with = "serde_matrix")]
    pub x: RealMatrix,
    #[serde(with = "serde_matrix")]
    pub u: RealMatrix,
    pub residual: f64,
    pub exact: bool,
}

/// Least-squares solution of the regulator equations, exact or not.
///
/// The unknown is `Z = [X; U]`, so the equations read
/// `[I 0] Z S − [A B] Z = E` and `[C D] Z = −F`.
pub fn regulator_least_squares(agent: &PlantAgent, s: &RealMatrix) -> Result<RegulatorSolution> {
    let (n, m, q) = (agent.n(), agent.m(), s.nrows());
    if s.ncols() != q || agent.q() != q {
        return Err(Error::Dimension(format!(
            "regulator equations: agent couples to {} exogenous states, S is {}x{}",
            agent.q(),
            s.nrows(),
            s.ncols()
        )));
    }
    let mut select_x = RealMatrix::zeros(n, n + m);
    select_x.view_mut((0, 0), (n, n)).fill_with_identity();
    let ab = hcat(&[&agent.a, &agent.b])?;
    let cd = hcat(&[&agent.c, &agent.d])?;
    let eqs = [
        MatrixEquation {
            terms: vec![
                MatrixTerm::new(select_x, s.clone()),
                MatrixTerm::left(-ab, q),
            ],
            rhs: agent.e(),
        },
        MatrixEquation {
            terms: vec![MatrixTerm::left(cd, q)],
            rhs: -agent.f(),
        },
    ];
    let sol = least_squares(&eqs, n + m, q)?;
    Ok(RegulatorSolution {
        x: sol.solution.rows(0, n).into_owned(),
        u: sol.solution.rows(n, m).into_owned(),
        residual: sol.residual,
        exact: sol.exact,
    })
}

/// Exact regulator solution or [`Error::NoSolution`] with the residual.
pub fn solve_regulator(agent: &PlantAgent, s: &RealMatrix) -> Result<RegulatorSolution> {
    let sol = regulator_least_squares(agent, s)?;
    if sol.exact {
        Ok(sol)
    } else {
        Err(Error::NoSolution {
            residual: sol.residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    /// `(Re λ, Im λ)`.
    pub lambda: (f64, f64),
    pub rank: usize,
    pub required: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub entries: Vec<RankEntry>,
    pub pass: bool,
}

impl RankReport {
    pub fn failures(&self) -> impl Iterator<Item = &RankEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Transmission-zero test: `rank [[A − λI, B], [C, D]] = n + p` at every
/// distinct `λ ∈ σ(S)`.
pub fn check_rank_condition(agent: &PlantAgent, s: &RealMatrix) -> Result<RankReport> {
    let (n, m, p) = (agent.n(), agent.m(), agent.p());
    let mut lambdas: Vec<Complex64> = Vec::new();
    for l in eigenvalues(s)? {
        if !lambdas
            .iter()
            .any(|k| (k - l).norm() <= 1e-8 * (1.0 + l.norm()))
        {
            lambdas.push(l);
        }
    }
    let mut entries = Vec::with_capacity(lambdas.len());
    for l in lambdas {
        let mut pencil = nalgebra::DMatrix::<Complex64>::zeros(n + p, n + m);
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = Complex64::new(agent.a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= l;
            for j in 0..m {
                pencil[(i, n + j)] = Complex64::new(agent.b[(i, j)], 0.0);
            }
        }
        for i in 0..p {
            for j in 0..n {
                pencil[(n + i, j)] = Complex64::new(agent.c[(i, j)], 0.0);
            }
            for j in 0..m {
                pencil[(n + i, n + j)] = Complex64::new(agent.d[(i, j)], 0.0);
            }
        }
        let rank = rank_complex(&pencil);
        entries.push(RankEntry {
            lambda: (l.re, l.im),
            rank,
            required: n + p,
            pass: rank == n + p,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(RankReport { entries, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn rotation() -> RealMatrix {
        dmatrix![0.0, 1.0; -1.0, 0.0]
    }

    fn integrator() -> PlantAgent {
        PlantAgent::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0], 0, 2)
            .with_error_map(&dmatrix![-1.0, 0.0])
            .unwrap()
    }

    #[test]
    fn integrator_tracks_harmonic() {
        let sol = solve_regulator(&integrator(), &rotation()).unwrap();
        assert!((&sol.x - dmatrix![1.0, 0.0]).norm() < 1e-12);
        assert!((&sol.u - dmatrix![0.0, 1.0]).norm() < 1e-12);
        // oracle: XS = U and X + F = 0
        assert!((&sol.x * rotation() - &sol.u).norm() < 1e-12);
    }

    #[test]
    fn homogeneous_system_gives_zero() {
        let agent = PlantAgent::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0], 0, 2);
        let sol = solve_regulator(&agent, &rotation()).unwrap();
        assert_eq!(sol.x.norm() + sol.u.norm(), 0.0);
    }

    #[test]
    fn no_input_path_is_unsolvable() {
        // X·S = A·X forces X = 0, leaving e = −v.
        let agent = PlantAgent::new(dmatrix![0.0], dmatrix![0.0], dmatrix![1.0], 0, 1)
            .with_error_map(&dmatrix![-1.0])
            .unwrap();
        match solve_regulator(&agent, &dmatrix![1.0]) {
            Err(Error::NoSolution { residual }) => assert!(residual > 0.1),
            other => panic!("expected no solution, got {other:?}"),
        }
        assert!(!check_rank_condition(&agent, &dmatrix![1.0]).unwrap().pass);
    }

    #[test]
    fn rank_condition_integrator() {
        let r = check_rank_condition(&integrator(), &rotation()).unwrap();
        assert!(r.pass);
        assert_eq!(r.entries.len(), 2);
        assert!(r.entries.iter().all(|e| e.rank == 2));
    }

    #[test]
    fn transmission_zero_at_i_fails() {
        // G(s) = (s² + 1)/(s² + 3s + 2): zeros at ±i.
        let agent = PlantAgent::new(
            dmatrix![0.0, 1.0; -2.0, -3.0],
            dmatrix![0.0; 1.0],
            dmatrix![-1.0, -3.0],
            0,
            2,
        )
        .with_feedthrough(dmatrix![1.0]);
        let r = check_rank_condition(&agent, &rotation()).unwrap();
        assert!(!r.pass);
        let bad: Vec<_> = r.failures().collect();
        assert_eq!(bad.len(), 2);
        assert!(bad
            .iter()
            .all(|e| e.lambda.0.abs() < 1e-9 && (e.lambda.1.abs() - 1.0).abs() < 1e-9));
        assert!(bad.iter().all(|e| e.rank == 2));
    }
}
