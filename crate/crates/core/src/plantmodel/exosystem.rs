use crate::error::{Error, Result};
use crate::numkit::{
    block_diag, eigenvalues, ensure_square, Complex64, RealMatrix, RealVector, SPECTRAL_ATOL,
};

/// Leader dynamics `v̇ = S v` with `v = (v_u; v_m)` and `S = diag(S_u, S_m)`.
///
/// Only `v_m` reaches the followers, through the leader output
/// `y_m0 = C_m0 v_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exosystem {
    s_u: RealMatrix,
    s_m: RealMatrix,
    c_m0: RealMatrix,
    v0: RealVector,
}

impl Exosystem {
    pub fn new(s_u: RealMatrix, s_m: RealMatrix, c_m0: RealMatrix, v0: RealVector) -> Result<Self> {
        let q_u = ensure_square(&s_u, "S_u")?;
        let q_m = ensure_square(&s_m, "S_m")?;
        if c_m0.ncols() != q_m {
            return Err(Error::Dimension(format!(
                "C_m0 has {} columns, S_m is {q_m}x{q_m}",
                c_m0.ncols()
            )));
        }
        if v0.len() != q_u + q_m {
            return Err(Error::Dimension(format!(
                "v0 has {} entries, exosystem order is {}",
                v0.len(),
                q_u + q_m
            )));
        }
        for (m, what) in [(&s_u, "S_u"), (&s_m, "S_m"), (&c_m0, "C_m0")] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::Model(format!("{what} has non-finite entries")));
            }
        }
        Ok(Exosystem { s_u, s_m, c_m0, v0 })
    }

    /// Exosystem whose whole state is measured (`q_u = 0`).
    pub fn measured(s: RealMatrix, c0: RealMatrix, v0: RealVector) -> Result<Self> {
        Self::new(RealMatrix::zeros(0, 0), s, c0, v0)
    }

    pub fn s_u(&self) -> &RealMatrix {
        &self.s_u
    }

    pub fn s_m(&self) -> &RealMatrix {
        &self.s_m
    }

    pub fn c_m0(&self) -> &RealMatrix {
        &self.c_m0
    }

    pub fn v0(&self) -> &RealVector {
        &self.v0
    }

    pub fn v0_u(&self) -> RealVector {
        self.v0.rows(0, self.q_u()).into_owned()
    }

    pub fn v0_m(&self) -> RealVector {
        self.v0.rows(self.q_u(), self.q_m()).into_owned()
    }

    pub fn q_u(&self) -> usize {
        self.s_u.nrows()
    }

    pub fn q_m(&self) -> usize {
        self.s_m.nrows()
    }

    pub fn q(&self) -> usize {
        self.q_u() + self.q_m()
    }

    pub fn p0(&self) -> usize {
        self.c_m0.nrows()
    }

    pub fn s(&self) -> RealMatrix {
        block_diag(&[&self.s_u, &self.s_m])
    }

    /// `C_0 = [0, C_m0]`.
    pub fn c0(&self) -> RealMatrix {
        let mut c0 = RealMatrix::zeros(self.p0(), self.q());
        c0.view_mut((0, self.q_u()), (self.p0(), self.q_m()))
            .copy_from(&self.c_m0);
        c0
    }

    pub fn with_v0(mut self, v0: RealVector) -> Result<Self> {
        if v0.len() != self.q() {
            return Err(Error::Dimension(format!(
                "v0 has {} entries, exosystem order is {}",
                v0.len(),
                self.q()
            )));
        }
        self.v0 = v0;
        Ok(self)
    }

    /// Eigenvalues of `S` with negative real part. These modes die out on
    /// their own, so their presence is only worth a warning.
    pub fn stable_modes(&self) -> Result<Vec<Complex64>> {
        Ok(eigenvalues(&self.s())?
            .into_iter()
            .filter(|l| l.re < -SPECTRAL_ATOL)
            .collect())
    }
}
