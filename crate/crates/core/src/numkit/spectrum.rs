use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, Schur, SVD};

use super::{ensure_finite, ensure_square, Complex64, RealMatrix, SPECTRAL_ATOL};
use crate::error::{Error, Result};

/// One distinct eigenvalue with its multiplicities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub algebraic: usize,
    pub geometric: usize,
}

impl Eigenvalue {
    pub fn is_semi_simple(&self) -> bool {
        self.algebraic == self.geometric
    }
}

/// Spectrum of a square matrix, grouped into distinct eigenvalues and
/// ordered lexicographically by (real, imaginary) part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    distinct: Vec<Eigenvalue>,
}

impl Spectrum {
    pub fn distinct(&self) -> &[Eigenvalue] {
        &self.distinct
    }

    /// Eigenvalues repeated by algebraic multiplicity.
    pub fn values(&self) -> Vec<Complex64> {
        self.distinct
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.algebraic))
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.distinct.iter().map(|e| e.algebraic).sum()
    }

    /// Largest real part; `-inf` for the empty spectrum.
    pub fn max_real(&self) -> f64 {
        self.distinct
            .iter()
            .map(|e| e.value.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        self.distinct
            .iter()
            .map(|e| e.value.norm())
            .fold(0.0, f64::max)
    }
}

fn lexicographic(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues of `m` with algebraic repetition, sorted by (Re, Im).
pub fn eigenvalues(m: &RealMatrix) -> Result<Vec<Complex64>> {
    let n = ensure_square(m, "spectrum input")?;
    ensure_finite(m, "spectrum input")?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000 * n.max(1)).ok_or_else(|| {
        Error::Numeric(format!(
            "Schur iteration did not converge on a {n}x{n} matrix"
        ))
    })?;
    let mut vals: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();
    vals.sort_by(lexicographic);
    Ok(vals)
}

/// Distinct eigenvalues with algebraic and geometric multiplicities.
///
/// Eigenvalues closer than `1e-6 * max(1, |M|)` are clustered; the
/// geometric multiplicity is the nullity of `M - λI` at the cluster mean.
pub fn spectrum(m: &RealMatrix) -> Result<Spectrum> {
    let vals = eigenvalues(m)?;
    let n = m.nrows();
    let scale = if n == 0 { 1.0 } else { m.norm().max(1.0) };
    let cluster_tol = 1e-6 * scale;

    // Single-linkage clustering on the sorted list, compared against every
    // member so conjugate-symmetric clusters stay intact.
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    'outer: for v in vals {
        for c in clusters.iter_mut() {
            if c.iter().any(|w| (w - v).norm() <= cluster_tol) {
                c.push(v);
                continue 'outer;
            }
        }
        clusters.push(vec![v]);
    }

    let cm: DMatrix<Complex64> = m.map(|x| Complex::new(x, 0.0));
    let mut distinct = Vec::with_capacity(clusters.len());
    for c in clusters {
        let algebraic = c.len();
        let mean = c.iter().sum::<Complex64>() / algebraic as f64;
        // Snap near-real clusters onto the real axis.
        let mean = if mean.im.abs() <= cluster_tol {
            Complex::new(mean.re, 0.0)
        } else {
            mean
        };
        let shifted = &cm - DMatrix::<Complex64>::identity(n, n) * mean;
        let sv = SVD::new(shifted, false, false).singular_values;
        let null_tol = 1e-8 * scale;
        let nullity = sv.iter().filter(|s| **s <= null_tol).count();
        let geometric = nullity.clamp(1, algebraic);
        distinct.push(Eigenvalue {
            value: mean,
            algebraic,
            geometric,
        });
    }
    distinct.sort_by(|a, b| lexicographic(&a.value, &b.value));
    Ok(Spectrum { distinct })
}

/// True iff every eigenvalue has real part strictly below `-margin`.
pub fn is_hurwitz(m: &RealMatrix, margin: f64) -> Result<bool> {
    let vals = eigenvalues(m)?;
    Ok(vals.iter().all(|v| v.re < -margin - SPECTRAL_ATOL))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &RealMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// No eigenvalue in the open right half plane and every imaginary-axis
/// eigenvalue semi-simple.
pub fn is_marginally_stable(m: &RealMatrix) -> Result<bool> {
    let spec = spectrum(m)?;
    Ok(spec.distinct().iter().all(|e| {
        if e.value.re > SPECTRAL_ATOL {
            false
        } else if e.value.re.abs() <= SPECTRAL_ATOL {
            e.is_semi_simple()
        } else {
            true
        }
    }))
}

/// Result of pairing two eigenvalue multisets.
#[derive(Debug, Clone, PartialEq)]
pub struct MultisetMatch {
    pub max_deviation: f64,
    pub unmatched_left: Vec<Complex64>,
    pub unmatched_right: Vec<Complex64>,
}

impl MultisetMatch {
    pub fn matches(&self) -> bool {
        self.unmatched_left.is_empty() && self.unmatched_right.is_empty()
    }
}

/// Greedy closest-pair matching of two eigenvalue multisets.
///
/// Pairs are formed in order of increasing distance; a pair farther apart
/// than `tol` leaves both members unmatched.
pub fn match_multisets(left: &[Complex64], right: &[Complex64], tol: f64) -> MultisetMatch {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(left.len() * right.len());
    for (i, a) in left.iter().enumerate() {
        for (j, b) in right.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used_l = vec![false; left.len()];
    let mut used_r = vec![false; right.len()];
    let mut max_deviation: f64 = 0.0;
    for (d, i, j) in pairs {
        if d > tol {
            break;
        }
        if !used_l[i] && !used_r[j] {
            used_l[i] = true;
            used_r[j] = true;
            max_deviation = max_deviation.max(d);
        }
    }
    let unmatched_left = left
        .iter()
        .zip(&used_l)
        .filter(|(_, u)| !**u)
        .map(|(v, _)| *v)
        .collect();
    let unmatched_right = right
        .iter()
        .zip(&used_r)
        .filter(|(_, u)| !**u)
        .map(|(v, _)| *v)
        .collect();
    MultisetMatch {
        max_deviation,
        unmatched_left,
        unmatched_right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let s = spectrum(&dmatrix![-1.0, 0.0; 0.0, -2.0]).unwrap();
        let v = s.values();
        assert!(close(v[0], -2.0, 0.0) && close(v[1], -1.0, 0.0));
    }

    #[test]
    fn rotation_generator() {
        let v = eigenvalues(&dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap();
        assert!(close(v[0], 0.0, -1.0) && close(v[1], 0.0, 1.0));
    }

    #[test]
    fn jordan_block_multiplicities() {
        let s = spectrum(&dmatrix![2.0, 1.0; 0.0, 2.0]).unwrap();
        assert_eq!(s.distinct().len(), 1);
        let e = s.distinct()[0];
        assert!(close(e.value, 2.0, 0.0));
        assert_eq!((e.algebraic, e.geometric), (2, 1));
        assert!(!e.is_semi_simple());
    }

    #[test]
    fn semi_simple_repeated() {
        let s = spectrum(&RealMatrix::identity(3, 3)).unwrap();
        assert_eq!(s.distinct()[0].algebraic, 3);
        assert_eq!(s.distinct()[0].geometric, 3);
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&dmatrix![-1.0], 0.0).unwrap());
        assert!(!is_hurwitz(&dmatrix![0.0, 1.0; -1.0, 0.0], 0.0).unwrap());
        assert!(!is_hurwitz(&dmatrix![-1.0, 0.0; 0.0, -0.5], 0.6).unwrap());
    }

    #[test]
    fn radius_examples() {
        assert!((spectral_radius(&RealMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-14);
        let half = RealMatrix::identity(2, 2) * 0.5;
        assert!((spectral_radius(&half).unwrap() - 0.5).abs() < 1e-14);
        let m = dmatrix![0.0, 1.0; -0.25, 0.0];
        assert!((spectral_radius(&m).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn non_square_rejected() {
        let m = RealMatrix::zeros(2, 3);
        assert!(matches!(spectrum(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn marginal_stability() {
        assert!(is_marginally_stable(&dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap());
        assert!(!is_marginally_stable(&dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap());
        assert!(is_marginally_stable(&dmatrix![-1.0, 5.0; 0.0, -1.0]).unwrap());
        assert!(!is_marginally_stable(&dmatrix![0.1]).unwrap());
    }

    #[test]
    fn multiset_matching() {
        let a = [
            Complex::new(1.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(2.0, 0.0),
        ];
        let b = [
            Complex::new(2.0, 1e-9),
            Complex::new(1.0, 0.0),
            Complex::new(1.0, 0.0),
        ];
        assert!(match_multisets(&a, &b, 1e-7).matches());
        let c = [
            Complex::new(1.0, 0.0),
            Complex::new(2.0, 0.0),
            Complex::new(2.0, 0.0),
        ];
        let m = match_multisets(&a, &c, 1e-7);
        assert_eq!(m.unmatched_left.len(), 1);
        assert_eq!(m.unmatched_right.len(), 1);
    }
}
