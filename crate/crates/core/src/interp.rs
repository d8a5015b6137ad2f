//! Interpolation curves `λ_i(p)`, `μ_i(p)` and tangent directions `r_i(p)`, `ℓ_i(p)`.
//!
//! Shifts are stored as diagonal series `Λ(p)`, `M(p)` (n×n); directions as
//! `R(p)` (m×n) and `L(p)` (ℓ×n), column `i` belonging to shift `i`. In
//! one-sided mode only `Λ` and `R` exist and the left basis is taken equal
//! to the right one.

use num_complex::Complex64;

use crate::error::{Collision, PmorError, Result, Side};
use crate::linalg::{CMatrix, Factorization};
use crate::model::{ParametricLTI, RCOND_FLOOR};
use crate::series::MatrixSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct LeftData {
    pub mu: MatrixSeries,
    pub l: MatrixSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationData {
    lambda: MatrixSeries,
    r: MatrixSeries,
    left: Option<LeftData>,
    conjugate_closed: bool,
}

impl InterpolationData {
    pub fn two_sided(lambda: MatrixSeries, mu: MatrixSeries, r: MatrixSeries, l: MatrixSeries) -> Result<Self> {
        let data = InterpolationData {
            lambda,
            r,
            left: Some(LeftData { mu, l }),
            conjugate_closed: false,
        };
        data.check()?;
        Ok(data)
    }

    pub fn one_sided(lambda: MatrixSeries, r: MatrixSeries) -> Result<Self> {
        let data = InterpolationData {
            lambda,
            r,
            left: None,
            conjugate_closed: false,
        };
        data.check()?;
        Ok(data)
    }

    fn check(&self) -> Result<()> {
        let n = self.order();
        let nparams = self.nparams();
        check_shift_series("Lambda", &self.lambda, n, nparams)?;
        check_direction_series("R", &self.r, n, nparams)?;
        if let Some(left) = &self.left {
            check_shift_series("M", &left.mu, n, nparams)?;
            check_direction_series("L", &left.l, n, nparams)?;
        }
        Ok(())
    }

    /// Marks the data as closed under complex conjugation after checking it
    /// coefficient by coefficient.
    pub fn with_conjugate_closure(mut self) -> Result<Self> {
        let mut ok = conjugate_closed(&self.lambda, &self.r);
        if let Some(left) = &self.left {
            ok &= conjugate_closed(&left.mu, &left.l);
        }
        if !ok {
            return Err(PmorError::invalid(
                "interpolation data is not closed under complex conjugation",
            ));
        }
        self.conjugate_closed = true;
        Ok(self)
    }

    pub fn claims_conjugate_closure(&self) -> bool {
        self.conjugate_closed
    }

    /// Reduced order `n`.
    pub fn order(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn nparams(&self) -> usize {
        self.lambda.nparams()
    }

    pub fn is_one_sided(&self) -> bool {
        self.left.is_none()
    }

    pub fn lambda(&self) -> &MatrixSeries {
        &self.lambda
    }

    pub fn r(&self) -> &MatrixSeries {
        &self.r
    }

    pub fn left(&self) -> Option<&LeftData> {
        self.left.as_ref()
    }

    pub fn right_shifts_at(&self, p: &[f64]) -> Result<Vec<Complex64>> {
        diagonal_at(&self.lambda, p)
    }

    pub fn left_shifts_at(&self, p: &[f64]) -> Result<Option<Vec<Complex64>>> {
        self.left.as_ref().map(|l| diagonal_at(&l.mu, p)).transpose()
    }

    /// Shape compatibility with a system.
    pub fn check_compatible(&self, sys: &ParametricLTI) -> Result<()> {
        if self.nparams() != sys.nparams() {
            return Err(PmorError::dims("parameter count of interpolation data", sys.nparams(), self.nparams()));
        }
        if self.r.nrows() != sys.inputs() {
            return Err(PmorError::dims("rows of R (inputs)", sys.inputs(), self.r.nrows()));
        }
        if let Some(left) = &self.left {
            if left.l.nrows() != sys.outputs() {
                return Err(PmorError::dims("rows of L (outputs)", sys.outputs(), left.l.nrows()));
            }
        }
        if self.order() > sys.states() {
            return Err(PmorError::invalid(format!(
                "reduced order {} exceeds state dimension {}",
                self.order(),
                sys.states()
            )));
        }
        Ok(())
    }

    /// Checks at `sample_count` points of the box that no shift lies in the
    /// pencil spectrum, i.e. that every `λ_i(p) E(p) - A(p)` and
    /// `μ_i(p) E(p) - A(p)` is numerically nonsingular.
    pub fn validate(&self, sys: &ParametricLTI, sample_count: usize) -> Result<ValidationReport> {
        self.check_compatible(sys)?;
        let mut collisions = Vec::new();
        let mut min_rcond = f64::INFINITY;
        let points = sys.param_box().sample(sample_count.max(1));
        for p in &points {
            let mats = sys.eval_matrices(p)?;
            let mut sides = vec![(Side::Right, self.right_shifts_at(p)?)];
            if let Some(mu) = self.left_shifts_at(p)? {
                sides.push((Side::Left, mu));
            }
            for (side, shifts) in sides {
                for (index, &shift) in shifts.iter().enumerate() {
                    let rcond = mats.factor_pencil(shift).rcond();
                    min_rcond = min_rcond.min(rcond);
                    if rcond < RCOND_FLOOR {
                        collisions.push(Collision {
                            index,
                            side,
                            param: p.clone(),
                            shift,
                            rcond,
                        });
                    }
                }
            }
        }
        if !collisions.is_empty() {
            return Err(PmorError::SpectrumCollision { collisions });
        }
        Ok(ValidationReport {
            samples: points.len(),
            min_rcond,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub min_rcond: f64,
}

fn check_shift_series(name: &str, s: &MatrixSeries, n: usize, nparams: usize) -> Result<()> {
    if s.nrows() != n || s.ncols() != n {
        return Err(PmorError::dims(format!("{name} must be n×n"), n, if s.nrows() != n { s.nrows() } else { s.ncols() }));
    }
    if s.nparams() != nparams {
        return Err(PmorError::dims(format!("parameter count of {name}"), nparams, s.nparams()));
    }
    if !s.is_diagonal() {
        return Err(PmorError::invalid(format!("every {name} coefficient must be diagonal")));
    }
    Ok(())
}

fn check_direction_series(name: &str, s: &MatrixSeries, n: usize, nparams: usize) -> Result<()> {
    if s.ncols() != n {
        return Err(PmorError::dims(format!("columns of {name}"), n, s.ncols()));
    }
    if s.nparams() != nparams {
        return Err(PmorError::dims(format!("parameter count of {name}"), nparams, s.nparams()));
    }
    Ok(())
}

fn diagonal_at(s: &MatrixSeries, p: &[f64]) -> Result<Vec<Complex64>> {
    let m = s.evaluate_real(p)?;
    Ok((0..m.nrows()).map(|i| m[(i, i)]).collect())
}

/// Every (shift, direction) column pair has a conjugate partner, per coefficient.
fn conjugate_closed(shifts: &MatrixSeries, dirs: &MatrixSeries) -> bool {
    let n = shifts.nrows();
    let indices: std::collections::BTreeSet<_> = shifts.indices().chain(dirs.indices()).cloned().collect();
    let zero_shift = CMatrix::zeros(n, n);
    let zero_dir = CMatrix::zeros(dirs.nrows(), n);
    indices.iter().all(|idx| {
        let lam = shifts.get(idx).unwrap_or(&zero_shift);
        let dir = dirs.get(idx).unwrap_or(&zero_dir);
        let scale = lam.iter().chain(dir.iter()).map(|z| z.norm()).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        let mut used = vec![false; n];
        (0..n).all(|c| {
            let partner = (0..n).find(|&k| {
                !used[k]
                    && (lam[(k, k)] - lam[(c, c)].conj()).norm() <= tol
                    && (0..dir.nrows()).all(|i| (dir[(i, k)] - dir[(i, c)].conj()).norm() <= tol)
            });
            match partner {
                Some(k) => {
                    used[k] = true;
                    true
                }
                None => false,
            }
        })
    })
}

/// Parameter-independent data: one zero-index coefficient per series.
///
/// `r_dirs` is m×n; `left`, when given, carries the left shifts and the ℓ×n
/// left directions.
pub fn make_constant_data(
    lambdas: &[Complex64],
    r_dirs: CMatrix,
    left: Option<(&[Complex64], CMatrix)>,
    nparams: usize,
) -> Result<InterpolationData> {
    let n = lambdas.len();
    if r_dirs.ncols() != n {
        return Err(PmorError::dims("columns of R", n, r_dirs.ncols()));
    }
    let diag = |v: &[Complex64]| CMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { Complex64::new(0.0, 0.0) });
    let lambda = MatrixSeries::constant(diag(lambdas), nparams);
    let r = MatrixSeries::constant(r_dirs, nparams);
    match left {
        None => InterpolationData::one_sided(lambda, r),
        Some((mus, l_dirs)) => {
            if mus.len() != n {
                return Err(PmorError::dims("number of left shifts", n, mus.len()));
            }
            if l_dirs.ncols() != n {
                return Err(PmorError::dims("columns of L", n, l_dirs.ncols()));
            }
            InterpolationData::two_sided(
                lambda,
                MatrixSeries::constant(diag(mus), nparams),
                r,
                MatrixSeries::constant(l_dirs, nparams),
            )
        }
    }
}
