//! Offline/online construction of the parametric reduced model.
//!
//! Offline, the truncated bases are pushed through the full-order series:
//! `Â(p) = W(p)ᵀ A(p) V(p) = Σ_{i,j,k} (W_jᵀ A_k V_i) p^{i+j+k}`, with products
//! landing on the same multi-index summed into one coefficient. Online,
//! assembling `Ê, Â, B̂, Ĉ` at a parameter only touches `n×n`, `n×m` and
//! `ℓ×n` coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PmorError, Result};
use crate::linalg::{CMatrix, DenseLu, Factorization};
use crate::model::{ParametricLTI, RCOND_FLOOR};
use crate::series::MatrixSeries;
use crate::solver::BasisSeries;

/// How the left basis enters the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Transpose {
    /// `W(p)ᵀ`
    #[default]
    Plain,
    /// `W(p)ᴴ`
    Conjugate,
}

/// Where a bundle came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tol: f64,
    pub v_degrees: usize,
    pub w_degrees: usize,
    pub one_sided: bool,
    pub transpose: Transpose,
}

/// Reduced coefficient series; everything needed to evaluate the reduced
/// model at any parameter without the full-order model.
#[derive(Debug, Clone, PartialEq)]
pub struct RomBundle {
    pub ehat: MatrixSeries,
    pub ahat: MatrixSeries,
    pub bhat: MatrixSeries,
    pub chat: MatrixSeries,
    pub provenance: Provenance,
}

/// Reduced matrices at one parameter.
#[derive(Debug, Clone)]
pub struct ReducedMatrices {
    pub e: CMatrix,
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    /// Reciprocal condition estimate of `Ê(p)`.
    pub rcond_e: f64,
}

impl ReducedMatrices {
    /// `Ĉ (sÊ - Â)⁻¹ B̂`.
    pub fn transfer(&self, s: Complex64) -> Result<CMatrix> {
        let (h, rcond) = self.transfer_reporting(s)?;
        if rcond < RCOND_FLOOR {
            return Err(PmorError::SingularPencil { shift: s, rcond });
        }
        Ok(h)
    }

    /// Like [`transfer`](Self::transfer) but only refuses an exactly zero
    /// pivot; the rcond of `sÊ - Â` is returned for the caller to judge.
    pub fn transfer_reporting(&self, s: Complex64) -> Result<(CMatrix, f64)> {
        let lu = DenseLu::new(&(&self.e * s - &self.a));
        let rcond = lu.rcond();
        if lu.has_zero_pivot() {
            return Err(PmorError::SingularPencil { shift: s, rcond });
        }
        Ok((&self.c * lu.solve(&self.b), rcond))
    }
}

impl RomBundle {
    pub fn order(&self) -> usize {
        self.ahat.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.bhat.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.chat.nrows()
    }

    pub fn nparams(&self) -> usize {
        self.ahat.nparams()
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.order();
        let np = self.nparams();
        let checks = [
            ("Ehat rows", self.ehat.nrows(), n),
            ("Ehat columns", self.ehat.ncols(), n),
            ("Ahat columns", self.ahat.ncols(), n),
            ("Bhat rows", self.bhat.nrows(), n),
            ("Chat columns", self.chat.ncols(), n),
            ("Ehat parameters", self.ehat.nparams(), np),
            ("Bhat parameters", self.bhat.nparams(), np),
            ("Chat parameters", self.chat.nparams(), np),
        ];
        for (what, found, expected) in checks {
            if found != expected {
                return Err(PmorError::dims(what, expected, found));
            }
        }
        Ok(())
    }

    pub fn from_parts(
        ehat: MatrixSeries,
        ahat: MatrixSeries,
        bhat: MatrixSeries,
        chat: MatrixSeries,
        provenance: Provenance,
    ) -> Result<Self> {
        let b = RomBundle {
            ehat,
            ahat,
            bhat,
            chat,
            provenance,
        };
        b.check_shapes()?;
        Ok(b)
    }

    fn assemble_unchecked(&self, p: &[f64]) -> Result<ReducedMatrices> {
        let e = self.ehat.evaluate_real(p)?;
        let rcond_e = if e.nrows() == 0 { 0.0 } else { DenseLu::new(&e).rcond() };
        Ok(ReducedMatrices {
            e,
            a: self.ahat.evaluate_real(p)?,
            b: self.bhat.evaluate_real(p)?,
            c: self.chat.evaluate_real(p)?,
            rcond_e,
        })
    }

    /// `Ê(p), Â(p), B̂(p), Ĉ(p)`; fails when `Ê(p)` is numerically singular.
    pub fn assemble_at(&self, p: &[f64]) -> Result<ReducedMatrices> {
        let m = self.assemble_unchecked(p)?;
        if m.rcond_e < RCOND_FLOOR {
            return Err(PmorError::SingularReducedE { rcond: m.rcond_e });
        }
        Ok(m)
    }

    /// Like [`assemble_at`](Self::assemble_at) but reports a singular `Ê(p)`
    /// through `rcond_e` instead of failing.
    pub fn assemble_at_unchecked(&self, p: &[f64]) -> Result<ReducedMatrices> {
        self.assemble_unchecked(p)
    }

    /// `Ĥ(s; p)`. Only the pencil `sÊ(p) - Â(p)` needs to be nonsingular.
    pub fn transfer_eval(&self, s: Complex64, p: &[f64]) -> Result<CMatrix> {
        self.assemble_unchecked(p)?.transfer(s)
    }
}

/// Builds the reduced coefficient series from the bases, with `Wᵀ`.
pub fn build_offline(sys: &ParametricLTI, basis: &BasisSeries) -> Result<RomBundle> {
    build_offline_with(sys, basis, Transpose::Plain)
}

pub fn build_offline_with(sys: &ParametricLTI, basis: &BasisSeries, transpose: Transpose) -> Result<RomBundle> {
    let v = &basis.v;
    if v.nrows() != sys.states() {
        return Err(PmorError::dims("rows of V", sys.states(), v.nrows()));
    }
    if basis.left().shape() != v.shape() {
        return Err(PmorError::dims("columns of W", v.ncols(), basis.left().ncols()));
    }
    let wt = match transpose {
        Transpose::Plain => basis.left().transpose(),
        Transpose::Conjugate => basis.left().adjoint(),
    };
    let products = || -> Result<[MatrixSeries; 4]> {
        Ok([
            wt.convolve(&sys.e().convolve(v)?)?,
            wt.convolve(&sys.a().convolve(v)?)?,
            wt.convolve(sys.b())?,
            sys.c().convolve(v)?,
        ])
    };
    let [ehat, ahat, bhat, chat] = products()?;
    RomBundle::from_parts(
        ehat,
        ahat,
        bhat,
        chat,
        Provenance {
            tol: basis.tol,
            v_degrees: basis.v_run.degrees_computed,
            w_degrees: basis.w_run.as_ref().unwrap_or(&basis.v_run).degrees_computed,
            one_sided: basis.is_one_sided(),
            transpose,
        },
    )
}

/// Projects the evaluated full-order matrices with the evaluated bases:
/// the reference the offline/online split must reproduce.
pub fn project_at(sys: &ParametricLTI, basis: &BasisSeries, p: &[f64], transpose: Transpose) -> Result<ReducedMatrices> {
    let m = sys.eval_matrices(p)?;
    let v = basis.v.evaluate_real(p)?;
    let w = basis.left().evaluate_real(p)?;
    let wt = match transpose {
        Transpose::Plain => w.transpose(),
        Transpose::Conjugate => w.adjoint(),
    };
    let e = &wt * crate::linalg::matmul(&m.e, &v);
    let rcond_e = DenseLu::new(&e).rcond();
    Ok(ReducedMatrices {
        e,
        a: &wt * crate::linalg::matmul(&m.a, &v),
        b: &wt * &m.b,
        c: &m.c * &v,
        rcond_e,
    })
}
