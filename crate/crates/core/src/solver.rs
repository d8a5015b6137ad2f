//! Taylor coefficients of the interpolatory projection bases.
//!
//! `V(p) = Σ_ρ V_ρ p^ρ` solves `A(p)V(p) - E(p)V(p)Λ(p) + B(p)R(p) = 0` for
//! every `p`. Matching coefficients of `p^ρ` gives, for each multi-index,
//!
//! ```text
//! A_0 V_ρ - E_0 V_ρ Λ_0 = -( Σ_{i+j=ρ, j≠ρ} A_i V_j
//!                            - Σ_{i+k+j=ρ, j≠ρ} E_i V_j Λ_k
//!                            + Σ_{i+j=ρ} B_i R_j )
//! ```
//!
//! so the coefficients follow degree by degree. `Λ_0` is diagonal, hence
//! column `c` of `V_ρ` solves `(λ_c E_0 - A_0) v = rhs_c` with one LU per
//! distinct shift reused across all degrees.
//!
//! The left basis solves the transposed equation
//! `Aᵀ W - Eᵀ W M + Cᵀ L = 0`, which is the same recurrence applied to the
//! transposed system with `(M, L)` in place of `(Λ, R)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PmorError, Result};
use crate::interp::InterpolationData;
use crate::linalg::{self, CMatrix, Factorization, Lu};
use crate::model::{factor_pencil, ParametricLTI};
use crate::series::{MatrixSeries, MultiIndex, ParamBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Truncation tolerance on `max_p |p^i| ‖V_i‖_F`.
    pub tol: f64,
    pub max_total_degree: usize,
    pub rcond_floor: f64,
    /// Number of successive total degrees that must pass the tolerance test.
    pub stop_consecutive: usize,
    /// Reuse one LU per distinct shift across degrees.
    pub cache_factorizations: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_total_degree: 100,
            rcond_floor: crate::model::RCOND_FLOOR,
            stop_consecutive: 2,
            cache_factorizations: true,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(PmorError::invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.stop_consecutive == 0 {
            return Err(PmorError::invalid("stop_consecutive must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ToleranceMet,
    DegreeCap,
    /// A full window of degrees came out exactly zero and no later
    /// coefficient can be nonzero.
    ExactTermination,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::ToleranceMet => "ToleranceMet",
            StopReason::DegreeCap => "DegreeCap",
            StopReason::ExactTermination => "ExactTermination",
        })
    }
}

impl std::str::FromStr for StopReason {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ToleranceMet" => Ok(StopReason::ToleranceMet),
            "DegreeCap" => Ok(StopReason::DegreeCap),
            "ExactTermination" => Ok(StopReason::ExactTermination),
            other => Err(format!("unknown stop reason {other:?}")),
        }
    }
}

/// Diagnostics of one coefficient recurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRun {
    /// Highest total degree whose coefficients were computed.
    pub degrees_computed: usize,
    pub stop_reason: StopReason,
    /// Largest term weight found at each total degree `0..=degrees_computed`.
    pub degree_weights: Vec<f64>,
    /// Coefficients kept after truncation.
    pub retained_terms: usize,
}

/// Truncated power series of the projection bases.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSeries {
    pub v: MatrixSeries,
    /// Absent in one-sided mode, where the left basis is `V`.
    pub w: Option<MatrixSeries>,
    pub v_run: SolveRun,
    pub w_run: Option<SolveRun>,
    pub tol: f64,
}

impl BasisSeries {
    pub fn is_one_sided(&self) -> bool {
        self.w.is_none()
    }

    /// `W`, or `V` in one-sided mode.
    pub fn left(&self) -> &MatrixSeries {
        self.w.as_ref().unwrap_or(&self.v)
    }
}

/// One instance of the coefficient recurrence `A V - E V Λ + B R = 0`.
struct Recurrence<'a> {
    a: &'a MatrixSeries,
    e: &'a MatrixSeries,
    input: &'a MatrixSeries,
    shifts: &'a MatrixSeries,
    dirs: &'a MatrixSeries,
    param_box: &'a ParamBox,
    band: (usize, usize),
}

impl Recurrence<'_> {
    fn is_real(&self) -> bool {
        [self.a, self.e, self.input, self.shifts, self.dirs]
            .iter()
            .all(|s| s.is_real())
    }

    /// Largest degree offset through which earlier coefficients feed later ones.
    fn coupling_reach(&self) -> usize {
        let a_reach = self
            .a
            .indices()
            .filter(|i| !i.is_zero())
            .map(MultiIndex::degree)
            .max()
            .unwrap_or(0);
        let e_deg = self.e.max_degree().unwrap_or(0);
        let l_deg = self.shifts.max_degree().unwrap_or(0);
        a_reach.max(e_deg + l_deg)
    }

    fn run(&self, cfg: &SolverConfig) -> Result<(MatrixSeries, SolveRun)> {
        cfg.check()?;
        let big_n = self.a.nrows();
        let n = self.shifts.nrows();
        let nparams = self.param_box.dim();
        let a0 = self.a.constant_term();
        let e0 = self.e.constant_term();
        let lam0 = self.shifts.constant_term();
        let shifts: Vec<Complex64> = (0..n).map(|c| lam0[(c, c)]).collect();

        let forcing = self.input.convolve(self.dirs)?;
        let forcing_degree = forcing.max_degree();
        let zero_window = self.coupling_reach().max(1);

        let factor = |s: Complex64| -> Result<Lu> {
            let lu = factor_pencil(&e0, &a0, s, self.band);
            let rcond = lu.rcond();
            if rcond < cfg.rcond_floor {
                return Err(PmorError::SingularPencil { shift: s, rcond });
            }
            Ok(lu)
        };
        let mut cache: Vec<(Complex64, Lu)> = Vec::new();
        if cfg.cache_factorizations {
            for &s in &shifts {
                if !cache.iter().any(|(t, _)| *t == s) {
                    cache.push((s, factor(s)?));
                }
            }
        } else {
            // still surface a spectrum collision before any work
            for &s in &shifts {
                factor(s)?;
            }
        }

        let mut computed: BTreeMap<MultiIndex, CMatrix> = BTreeMap::new();
        let mut degree_weights = Vec::new();
        let mut zero_run = 0usize;
        let mut passing_run = 0usize;
        let mut stop = StopReason::DegreeCap;
        let mut last_degree = 0;

        for d in 0..=cfg.max_total_degree {
            last_degree = d;
            let mut max_weight = 0.0f64;
            let mut all_zero = true;
            for rho in MultiIndex::of_degree(nparams, d) {
                let mut rhs = self.known_terms(&rho, &computed, big_n, n);
                if let Some(f) = forcing.get(&rho) {
                    rhs += f;
                }
                if rhs.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                for (c, mut col) in rhs.column_iter_mut().enumerate() {
                    let s = shifts[c];
                    if cfg.cache_factorizations {
                        let lu = &cache.iter().find(|(t, _)| *t == s).expect("cached shift").1;
                        lu.solve_in_place(col.as_mut_slice());
                    } else {
                        factor(s)?.solve_in_place(col.as_mut_slice());
                    }
                }
                if rhs.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                    all_zero = false;
                    let w = self.param_box.max_abs_monomial(&rho) * linalg::frobenius(&rhs);
                    max_weight = max_weight.max(w);
                    computed.insert(rho, rhs);
                }
            }
            degree_weights.push(max_weight);

            zero_run = if all_zero { zero_run + 1 } else { 0 };
            let forcing_done = forcing_degree.is_none_or(|fd| d >= fd);
            if zero_run >= zero_window && forcing_done {
                stop = StopReason::ExactTermination;
                break;
            }
            if d >= 1 {
                passing_run = if max_weight <= cfg.tol { passing_run + 1 } else { 0 };
                if passing_run >= cfg.stop_consecutive {
                    stop = StopReason::ToleranceMet;
                    break;
                }
            }
        }

        let mut series = MatrixSeries::zeros(big_n, n, nparams);
        for (idx, m) in computed {
            let keep = idx.is_zero() || self.param_box.max_abs_monomial(&idx) * linalg::frobenius(&m) > cfg.tol;
            if keep {
                series.insert_new(idx, m)?;
            }
        }
        if self.is_real() {
            series.demote_to_real(1e-12);
        }
        let run = SolveRun {
            degrees_computed: last_degree,
            stop_reason: stop,
            degree_weights,
            retained_terms: series.len(),
        };
        Ok((series, run))
    }

    /// `-(Σ A_i V_j - Σ E_i V_j Λ_k)` over already computed `V_j`, i.e. the
    /// right-hand side contribution of lower-order coefficients to
    /// `(λ E_0 - A_0) V_ρ = ...`.
    fn known_terms(&self, rho: &MultiIndex, computed: &BTreeMap<MultiIndex, CMatrix>, rows: usize, cols: usize) -> CMatrix {
        let mut acc = CMatrix::zeros(rows, cols);
        for (i, ai) in self.a.iter() {
            if i.is_zero() {
                continue;
            }
            if let Some(vj) = rho.checked_sub(i).and_then(|j| computed.get(&j)) {
                acc += linalg::matmul(ai, vj);
            }
        }
        for (i, ei) in self.e.iter() {
            for (k, lk) in self.shifts.iter() {
                if i.is_zero() && k.is_zero() {
                    continue;
                }
                if let Some(vj) = rho.checked_sub(&i.add(k)).and_then(|j| computed.get(&j)) {
                    acc -= linalg::scale_columns(&linalg::matmul(ei, vj), lk);
                }
            }
        }
        acc
    }
}

/// Right-hand side of the degree-`ρ` equation built from supplied lower-order
/// coefficients: `(λ_c E_0 - A_0) V_ρ[:, c] = rhs[:, c]`.
///
/// Exposed so the recurrence can be checked term by term against hand-derived
/// forms.
pub fn coefficient_rhs(
    sys: &ParametricLTI,
    data: &InterpolationData,
    lower: &MatrixSeries,
    rho: &MultiIndex,
) -> Result<CMatrix> {
    let forcing = sys.b().convolve(data.r())?;
    let rec = Recurrence {
        a: sys.a(),
        e: sys.e(),
        input: sys.b(),
        shifts: data.lambda(),
        dirs: data.r(),
        param_box: sys.param_box(),
        band: sys.bandwidth(),
    };
    let computed: BTreeMap<MultiIndex, CMatrix> = lower
        .iter()
        .filter(|(j, _)| j != &rho)
        .map(|(j, m)| (j.clone(), m.clone()))
        .collect();
    let mut rhs = rec.known_terms(rho, &computed, sys.states(), data.order());
    if let Some(f) = forcing.get(rho) {
        rhs += f;
    }
    Ok(rhs)
}

/// Taylor coefficients of the right basis `V(p)`.
pub fn solve_v_series(
    sys: &ParametricLTI,
    data: &InterpolationData,
    cfg: &SolverConfig,
) -> Result<(MatrixSeries, SolveRun)> {
    data.check_compatible(sys)?;
    Recurrence {
        a: sys.a(),
        e: sys.e(),
        input: sys.b(),
        shifts: data.lambda(),
        dirs: data.r(),
        param_box: sys.param_box(),
        band: sys.bandwidth(),
    }
    .run(cfg)
}

/// Taylor coefficients of the left basis `W(p)`; in one-sided mode this is
/// the right basis.
pub fn solve_w_series(
    sys: &ParametricLTI,
    data: &InterpolationData,
    cfg: &SolverConfig,
) -> Result<(MatrixSeries, SolveRun)> {
    data.check_compatible(sys)?;
    let Some(left) = data.left() else {
        return solve_v_series(sys, data, cfg);
    };
    let t = sys.transposed();
    Recurrence {
        a: t.a(),
        e: t.e(),
        input: t.b(),
        shifts: &left.mu,
        dirs: &left.l,
        param_box: sys.param_box(),
        band: t.bandwidth(),
    }
    .run(cfg)
}

/// Both bases.
pub fn compute_basis(sys: &ParametricLTI, data: &InterpolationData, cfg: &SolverConfig) -> Result<BasisSeries> {
    let (v, v_run) = solve_v_series(sys, data, cfg)?;
    let (w, w_run) = if data.is_one_sided() {
        (None, None)
    } else {
        let (w, run) = solve_w_series(sys, data, cfg)?;
        (Some(w), Some(run))
    };
    Ok(BasisSeries {
        v,
        w,
        v_run,
        w_run,
        tol: cfg.tol,
    })
}

/// Bases from the frozen-parameter Sylvester equations, solved directly.
#[derive(Debug, Clone)]
pub struct DirectBases {
    pub v: CMatrix,
    /// `None` in one-sided mode.
    pub w: Option<CMatrix>,
}

/// Solves `A V - E V Λ + B R = 0` (and the left equation) with every
/// quantity evaluated at `p`, column by column.
pub fn direct_solve_at(sys: &ParametricLTI, data: &InterpolationData, p: &[f64]) -> Result<DirectBases> {
    data.check_compatible(sys)?;
    let mats = sys.eval_matrices(p)?;
    let lam = data.right_shifts_at(p)?;
    let br = &mats.b * data.r().evaluate_real(p)?;
    let mut v = br;
    for (c, mut col) in v.column_iter_mut().enumerate() {
        let (lu, _) = mats.checked_pencil(lam[c])?;
        lu.solve_in_place(col.as_mut_slice());
    }
    let w = match data.left() {
        None => None,
        Some(left) => {
            let mu = data.left_shifts_at(p)?.expect("two-sided data has left shifts");
            let mut w = mats.c.transpose() * left.l.evaluate_real(p)?;
            for (r, mut col) in w.column_iter_mut().enumerate() {
                let (lu, _) = mats.checked_pencil(mu[r])?;
                lu.solve_transpose_in_place(col.as_mut_slice());
            }
            Some(w)
        }
    };
    Ok(DirectBases { v, w })
}

/// Relative residuals of the parametric Sylvester equations at `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SylvesterResidual {
    /// `‖A V - E V Λ + B R‖_F / ‖B R‖_F`
    pub right: f64,
    /// `‖Wᵀ A - M Wᵀ E + Lᵀ C‖_F / ‖Lᵀ C‖_F`, two-sided only.
    pub left: Option<f64>,
}

pub fn sylvester_residual(
    sys: &ParametricLTI,
    data: &InterpolationData,
    basis: &BasisSeries,
    p: &[f64],
) -> Result<SylvesterResidual> {
    let mats = sys.eval_matrices(p)?;
    let v = basis.v.evaluate_real(p)?;
    let lam = data.lambda().evaluate_real(p)?;
    let br = &mats.b * data.r().evaluate_real(p)?;
    let res = linalg::matmul(&mats.a, &v) - linalg::matmul(&mats.e, &v) * &lam + &br;
    let right = relative(linalg::frobenius(&res), linalg::frobenius(&br));
    let left = match (data.left(), &basis.w) {
        (Some(left), Some(w)) => {
            let wt = basis_eval_t(w, p)?;
            let mu = left.mu.evaluate_real(p)?;
            let lc = left.l.evaluate_real(p)?.transpose() * &mats.c;
            let res = &wt * &mats.a - &mu * (&wt * &mats.e) + &lc;
            Some(relative(linalg::frobenius(&res), linalg::frobenius(&lc)))
        }
        _ => None,
    };
    Ok(SylvesterResidual { right, left })
}

fn basis_eval_t(w: &MatrixSeries, p: &[f64]) -> Result<CMatrix> {
    Ok(w.evaluate_real(p)?.transpose())
}

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
