//! The parametric full-order model `E(p) x' = A(p) x + B(p) u, y = C(p) x`
//! and its transfer function `H(s; p) = C(p) (s E(p) - A(p))⁻¹ B(p)`.

use num_complex::Complex64;

use crate::error::{PmorError, Result};
use crate::linalg::{self, BandedLu, CMatrix, DenseLu, Factorization, Lu};
use crate::series::{MatrixSeries, ParamBox};

/// Pencils with a reciprocal condition estimate below this are treated as singular.
pub const RCOND_FLOOR: f64 = 1e-14;

/// Parametric LTI system given by matrix power series.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricLTI {
    e: MatrixSeries,
    a: MatrixSeries,
    b: MatrixSeries,
    c: MatrixSeries,
    param_box: ParamBox,
    band: (usize, usize),
}

impl ParametricLTI {
    pub fn new(
        e: MatrixSeries,
        a: MatrixSeries,
        b: MatrixSeries,
        c: MatrixSeries,
        param_box: ParamBox,
    ) -> Result<Self> {
        let nparams = param_box.dim();
        let n = a.nrows();
        for (name, s) in [("E", &e), ("A", &a), ("B", &b), ("C", &c)] {
            if s.nparams() != nparams {
                return Err(PmorError::dims(format!("parameter count of {name}"), nparams, s.nparams()));
            }
        }
        if a.ncols() != n {
            return Err(PmorError::dims("columns of A", n, a.ncols()));
        }
        if e.shape() != (n, n) {
            return Err(PmorError::dims("rows/columns of E", n, if e.nrows() != n { e.nrows() } else { e.ncols() }));
        }
        if b.nrows() != n {
            return Err(PmorError::dims("rows of B", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(PmorError::dims("columns of C", n, c.ncols()));
        }
        if n == 0 || b.ncols() == 0 || c.nrows() == 0 {
            return Err(PmorError::invalid("state, input and output dimensions must be positive"));
        }

        let band = e
            .iter()
            .chain(a.iter())
            .map(|(_, m)| linalg::bandwidth(m))
            .fold((0, 0), |acc, bw| (acc.0.max(bw.0), acc.1.max(bw.1)));

        let sys = ParametricLTI {
            e,
            a,
            b,
            c,
            param_box,
            band,
        };

        // spot-check that E is nonsingular somewhere in the box
        let center = sys.param_box.center();
        let e_center = sys.e.evaluate_real(&center)?;
        let rcond = sys.factor(&e_center).rcond();
        if rcond < RCOND_FLOOR {
            return Err(PmorError::invalid(format!(
                "E(p) is numerically singular at the box center (rcond = {rcond:.3e})"
            )));
        }
        Ok(sys)
    }

    /// System with `E(p) ≡ I`.
    pub fn with_identity_e(
        a: MatrixSeries,
        b: MatrixSeries,
        c: MatrixSeries,
        param_box: ParamBox,
    ) -> Result<Self> {
        let e = MatrixSeries::constant(CMatrix::identity(a.nrows(), a.nrows()), param_box.dim());
        Self::new(e, a, b, c, param_box)
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn nparams(&self) -> usize {
        self.param_box.dim()
    }

    pub fn e(&self) -> &MatrixSeries {
        &self.e
    }

    pub fn a(&self) -> &MatrixSeries {
        &self.a
    }

    pub fn b(&self) -> &MatrixSeries {
        &self.b
    }

    pub fn c(&self) -> &MatrixSeries {
        &self.c
    }

    pub fn param_box(&self) -> &ParamBox {
        &self.param_box
    }

    /// Lower/upper bandwidth shared by every `E` and `A` coefficient.
    pub fn bandwidth(&self) -> (usize, usize) {
        self.band
    }

    /// The same system with every matrix transposed: `(Eᵀ, Aᵀ, Cᵀ, Bᵀ)`.
    pub fn transposed(&self) -> ParametricLTI {
        ParametricLTI {
            e: self.e.transpose(),
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            param_box: self.param_box.clone(),
            band: (self.band.1, self.band.0),
        }
    }

    fn factor(&self, m: &CMatrix) -> Lu {
        Lu::with_bandwidth(m, self.band.0, self.band.1)
    }

    /// Evaluates `E, A, B, C` at a real parameter.
    ///
    /// Points outside the box are allowed; `in_box` records it.
    pub fn eval_matrices(&self, p: &[f64]) -> Result<SystemMatrices> {
        if p.len() != self.nparams() {
            return Err(PmorError::dims("parameter vector", self.nparams(), p.len()));
        }
        Ok(SystemMatrices {
            e: self.e.evaluate_real(p)?,
            a: self.a.evaluate_real(p)?,
            b: self.b.evaluate_real(p)?,
            c: self.c.evaluate_real(p)?,
            band: self.band,
            in_box: self.param_box.contains(p),
        })
    }

    /// Solves `(s E(p) - A(p)) X = rhs`.
    pub fn shifted_solve(&self, p: &[f64], s: Complex64, rhs: &CMatrix) -> Result<ShiftedSolution> {
        self.eval_matrices(p)?.shifted_solve(s, rhs)
    }

    /// `H(s; p)`.
    pub fn transfer_eval(&self, s: Complex64, p: &[f64]) -> Result<CMatrix> {
        self.eval_matrices(p)?.transfer(s)
    }
}

/// A solution of a shifted system plus the pencil's reciprocal condition estimate.
#[derive(Debug, Clone)]
pub struct ShiftedSolution {
    pub x: CMatrix,
    pub rcond: f64,
}

/// The system matrices frozen at one parameter value.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub e: CMatrix,
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    band: (usize, usize),
    pub in_box: bool,
}

impl SystemMatrices {
    /// Wraps explicit matrices; the band structure is detected.
    pub fn new(e: CMatrix, a: CMatrix, b: CMatrix, c: CMatrix) -> Self {
        let be = linalg::bandwidth(&e);
        let ba = linalg::bandwidth(&a);
        SystemMatrices {
            e,
            a,
            b,
            c,
            band: (be.0.max(ba.0), be.1.max(ba.1)),
            in_box: true,
        }
    }

    /// LU of `s E - A`, banded when the structure allows it.
    pub fn factor_pencil(&self, s: Complex64) -> Lu {
        factor_pencil(&self.e, &self.a, s, self.band)
    }

    /// Factors `s E - A`, failing if it is numerically singular.
    pub fn checked_pencil(&self, s: Complex64) -> Result<(Lu, f64)> {
        let lu = self.factor_pencil(s);
        let rcond = lu.rcond();
        if rcond < RCOND_FLOOR {
            return Err(PmorError::SingularPencil { shift: s, rcond });
        }
        Ok((lu, rcond))
    }

    pub fn shifted_solve(&self, s: Complex64, rhs: &CMatrix) -> Result<ShiftedSolution> {
        if rhs.nrows() != self.a.nrows() {
            return Err(PmorError::dims("rows of right-hand side", self.a.nrows(), rhs.nrows()));
        }
        let (lu, rcond) = self.checked_pencil(s)?;
        Ok(ShiftedSolution { x: lu.solve(rhs), rcond })
    }

    pub fn transfer(&self, s: Complex64) -> Result<CMatrix> {
        let sol = self.shifted_solve(s, &self.b)?;
        Ok(&self.c * sol.x)
    }
}

pub(crate) fn factor_pencil(e: &CMatrix, a: &CMatrix, s: Complex64, band: (usize, usize)) -> Lu {
    let n = a.nrows();
    let (kl, ku) = band;
    if linalg::band_pays_off(n, kl, ku) {
        Lu::Banded(BandedLu::from_fn(n, kl, ku, |i, j| s * e[(i, j)] - a[(i, j)]))
    } else {
        Lu::Dense(DenseLu::new(&(e * s - a)))
    }
}
