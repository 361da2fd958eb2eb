use crate::error::{Error, Result};
use crate::numkit::{hcat, RealMatrix, RealVector};

/// One follower:
///
/// ```text
/// ẋ   = A x + B u + E_u v_u + E_m v_m
/// y_m = C_m x + D_m u + F_mu v_u + F_mm v_m
/// e   = C x + D u + F_u v_u + F_m v_m
/// ```
///
/// The exogenous maps are stored split by the exosystem partition; the
/// full `E`, `F_m`, `F` are rebuilt on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantAgent {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub d: RealMatrix,
    pub e_u: RealMatrix,
    pub e_m: RealMatrix,
    pub c_m: RealMatrix,
    pub d_m: RealMatrix,
    pub f_mu: RealMatrix,
    pub f_mm: RealMatrix,
    pub f_u: RealMatrix,
    pub f_m: RealMatrix,
    pub x0: RealVector,
}

impl PlantAgent {
    /// Agent with no exogenous coupling, `D = 0`, zero initial state and the
    /// regulated output as its measurement (`y_m = e`).
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix, q_u: usize, q_m: usize) -> Self {
        let (n, m, p) = (a.nrows(), b.ncols(), c.nrows());
        PlantAgent {
            d: RealMatrix::zeros(p, m),
            e_u: RealMatrix::zeros(n, q_u),
            e_m: RealMatrix::zeros(n, q_m),
            c_m: c.clone(),
            d_m: RealMatrix::zeros(p, m),
            f_mu: RealMatrix::zeros(p, q_u),
            f_mm: RealMatrix::zeros(p, q_m),
            f_u: RealMatrix::zeros(p, q_u),
            f_m: RealMatrix::zeros(p, q_m),
            x0: RealVector::zeros(n),
            a,
            b,
            c,
        }
    }

    pub fn with_feedthrough(mut self, d: RealMatrix) -> Self {
        self.d_m = d.clone();
        self.d = d;
        self
    }

    /// Sets `F` and, as long as the measurement is still the regulated
    /// output, `F_m` too.
    pub fn with_error_map(mut self, f: &RealMatrix) -> Result<Self> {
        let (f_u, f_m) = split_cols(f, self.q_u(), "F")?;
        let tracks_error = self.c_m == self.c && self.d_m == self.d;
        if tracks_error {
            self.f_mu = f_u.clone();
            self.f_mm = f_m.clone();
        }
        self.f_u = f_u;
        self.f_m = f_m;
        Ok(self)
    }

    pub fn with_disturbance(mut self, e: &RealMatrix) -> Result<Self> {
        let (e_u, e_m) = split_cols(e, self.q_u(), "E")?;
        self.e_u = e_u;
        self.e_m = e_m;
        Ok(self)
    }

    pub fn with_measurement(
        mut self,
        c_m: RealMatrix,
        d_m: RealMatrix,
        f_meas: &RealMatrix,
    ) -> Result<Self> {
        let (f_mu, f_mm) = split_cols(f_meas, self.q_u(), "F_m")?;
        self.c_m = c_m;
        self.d_m = d_m;
        self.f_mu = f_mu;
        self.f_mm = f_mm;
        Ok(self)
    }

    pub fn with_x0(mut self, x0: RealVector) -> Self {
        self.x0 = x0;
        self
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn p_m(&self) -> usize {
        self.c_m.nrows()
    }

    pub fn q_u(&self) -> usize {
        self.e_u.ncols()
    }

    pub fn q_m(&self) -> usize {
        self.e_m.ncols()
    }

    pub fn q(&self) -> usize {
        self.q_u() + self.q_m()
    }

    pub fn e(&self) -> RealMatrix {
        hcat(&[&self.e_u, &self.e_m]).expect("validated row counts")
    }

    pub fn f_meas(&self) -> RealMatrix {
        hcat(&[&self.f_mu, &self.f_mm]).expect("validated row counts")
    }

    pub fn f(&self) -> RealMatrix {
        hcat(&[&self.f_u, &self.f_m]).expect("validated row counts")
    }

    /// Checks every block against `(n, m, p, p_m)` and the partition
    /// `(q_u, q_m)`.
    pub fn validate(&self, q_u: usize, q_m: usize) -> Result<()> {
        let (n, m, p, pm) = (self.n(), self.m(), self.p(), self.p_m());
        let expect = [
            ("A", &self.a, n, n),
            ("B", &self.b, n, m),
            ("C", &self.c, p, n),
            ("D", &self.d, p, m),
            ("E_u", &self.e_u, n, q_u),
            ("E_m", &self.e_m, n, q_m),
            ("C_m", &self.c_m, pm, n),
            ("D_m", &self.d_m, pm, m),
            ("F_mu", &self.f_mu, pm, q_u),
            ("F_mm", &self.f_mm, pm, q_m),
            ("F_u", &self.f_u, p, q_u),
            ("F_m", &self.f_m, p, q_m),
        ];
        for (name, mat, r, c) in expect {
            if mat.nrows() != r || mat.ncols() != c {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if mat.iter().any(|x| !x.is_finite()) {
                return Err(Error::Model(format!("{name} has non-finite entries")));
            }
        }
        if self.x0.len() != n {
            return Err(Error::Dimension(format!(
                "x0 has {} entries, state dimension is {n}",
                self.x0.len()
            )));
        }
        Ok(())
    }

    /// Composite pair for the observer of `(x, v_u)`:
    /// `Ā = [[A, E_u], [0, S_u]]`, `C̄ = [C_m, F_mu]`.
    pub fn composite_pair(&self, s_u: &RealMatrix) -> (RealMatrix, RealMatrix) {
        let (n, qu) = (self.n(), self.q_u());
        let mut a_bar = RealMatrix::zeros(n + qu, n + qu);
        a_bar.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a_bar.view_mut((0, n), (n, qu)).copy_from(&self.e_u);
        a_bar.view_mut((n, n), (qu, qu)).copy_from(s_u);
        let c_bar = hcat(&[&self.c_m, &self.f_mu]).expect("validated row counts");
        (a_bar, c_bar)
    }
}

fn split_cols(m: &RealMatrix, q_u: usize, what: &str) -> Result<(RealMatrix, RealMatrix)> {
    if m.ncols() < q_u {
        return Err(Error::Dimension(format!(
            "{what} has {} columns, fewer than q_u = {q_u}",
            m.ncols()
        )));
    }
    let u = m.columns(0, q_u).into_owned();
    let rest = m.columns(q_u, m.ncols() - q_u).into_owned();
    Ok((u, rest))
}
