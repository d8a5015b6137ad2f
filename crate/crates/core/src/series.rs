//! Multi-indices, parameter boxes and finitely supported matrix power series.
//!
//! Every parameter-dependent quantity in the crate (system matrices, shifts,
//! tangent directions, projection bases, reduced matrices) is a
//! [`MatrixSeries`]: a map from multi-index `i` to a dense coefficient `S_i`
//! standing for `S(p) = Σ_i S_i p^i`. Absent indices are zero coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{PmorError, Result};
use crate::linalg::{self, CMatrix};

/// Exponent vector `i ∈ ℕ₀^ν` of the monomial `p^i = Π p_k^{i_k}`.
///
/// Ordered graded-lexicographically: by total degree first, then
/// lexicographically by exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(nparams: usize) -> Self {
        MultiIndex(vec![0; nparams])
    }

    /// `k`-th unit index scaled by `degree` (`p_k^degree`).
    pub fn axis(nparams: usize, k: usize, degree: u32) -> Self {
        let mut e = vec![0; nparams];
        e[k] = degree;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree `|i|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when every component stays non-negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `p^i` for a complex point.
    pub fn monomial(&self, p: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(p)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, &x)| acc * x.powu(e))
    }

    /// All multi-indices of total degree `degree` in graded-lex order.
    pub fn of_degree(nparams: usize, degree: usize) -> Vec<MultiIndex> {
        fn rec(slot: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if slot + 1 == cur.len() {
                cur[slot] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for e in 0..=left {
                cur[slot] = e;
                rec(slot + 1, left - e, cur, out);
            }
        }
        if nparams == 0 {
            return if degree == 0 { vec![MultiIndex(vec![])] } else { vec![] };
        }
        let mut out = Vec::new();
        rec(0, degree as u32, &mut vec![0; nparams], &mut out);
        out.sort();
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Axis-aligned parameter box `Π [lower_k, upper_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(PmorError::dims("parameter box bounds", lower.len(), upper.len()));
        }
        for (k, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(PmorError::invalid(format!(
                    "parameter box axis {k}: need finite lower <= upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(ParamBox { lower, upper })
    }

    /// `[0, 1]^ν`.
    pub fn unit(nparams: usize) -> Self {
        ParamBox {
            lower: vec![0.0; nparams],
            upper: vec![1.0; nparams],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    /// Exact `max_{p in box} |p^i|`, attained at a corner.
    pub fn max_abs_monomial(&self, index: &MultiIndex) -> f64 {
        index
            .exponents()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&e, (l, u))| l.abs().max(u.abs()).powi(e as i32))
            .product()
    }

    /// Deterministic low-discrepancy points: the center first, then a Halton sequence.
    pub fn sample(&self, count: usize) -> Vec<Vec<f64>> {
        const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        fn radical_inverse(mut i: u64, base: u64) -> f64 {
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        }
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.center());
        for k in 1..count as u64 {
            let point = (0..self.dim())
                .map(|d| {
                    let base = PRIMES[d % PRIMES.len()] as u64 + 2 * (d / PRIMES.len()) as u64;
                    let t = radical_inverse(k, base);
                    self.lower[d] + t * (self.upper[d] - self.lower[d])
                })
                .collect();
            out.push(point);
        }
        out
    }
}

/// Finitely supported matrix power series `S(p) = Σ_i S_i p^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    nrows: usize,
    ncols: usize,
    nparams: usize,
    terms: BTreeMap<MultiIndex, CMatrix>,
}

impl MatrixSeries {
    /// The zero series (empty term map).
    pub fn zeros(nrows: usize, ncols: usize, nparams: usize) -> Self {
        MatrixSeries {
            nrows,
            ncols,
            nparams,
            terms: BTreeMap::new(),
        }
    }

    /// A constant series: only the zero multi-index is stored.
    pub fn constant(matrix: CMatrix, nparams: usize) -> Self {
        let mut terms = BTreeMap::new();
        let (nrows, ncols) = matrix.shape();
        terms.insert(MultiIndex::zero(nparams), matrix);
        MatrixSeries {
            nrows,
            ncols,
            nparams,
            terms,
        }
    }

    pub fn from_terms(
        nrows: usize,
        ncols: usize,
        nparams: usize,
        terms: impl IntoIterator<Item = (MultiIndex, CMatrix)>,
    ) -> Result<Self> {
        let mut s = Self::zeros(nrows, ncols, nparams);
        for (idx, m) in terms {
            s.insert_new(idx, m)?;
        }
        Ok(s)
    }

    /// Single-parameter series from coefficients of `p^0, p^1, ...`.
    pub fn univariate(coefficients: Vec<CMatrix>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| PmorError::invalid("univariate series needs at least one coefficient"))?;
        let (nrows, ncols) = first.shape();
        Self::from_terms(
            nrows,
            ncols,
            1,
            coefficients
                .into_iter()
                .enumerate()
                .map(|(d, m)| (MultiIndex::new(vec![d as u32]), m)),
        )
    }

    fn check_term(&self, idx: &MultiIndex, m: &CMatrix) -> Result<()> {
        if idx.len() != self.nparams {
            return Err(PmorError::dims("multi-index length", self.nparams, idx.len()));
        }
        if m.nrows() != self.nrows {
            return Err(PmorError::dims(format!("rows of term {idx}"), self.nrows, m.nrows()));
        }
        if m.ncols() != self.ncols {
            return Err(PmorError::dims(format!("columns of term {idx}"), self.ncols, m.ncols()));
        }
        Ok(())
    }

    /// Inserts a term whose index must not already be present.
    pub(crate) fn insert_new(&mut self, idx: MultiIndex, m: CMatrix) -> Result<()> {
        self.check_term(&idx, &m)?;
        if self.terms.contains_key(&idx) {
            return Err(PmorError::DuplicateTerm(idx));
        }
        self.terms.insert(idx, m);
        Ok(())
    }

    /// Adds `m` into the coefficient at `idx`.
    pub(crate) fn accumulate(&mut self, idx: MultiIndex, m: CMatrix) {
        debug_assert!(self.check_term(&idx, &m).is_ok());
        match self.terms.get_mut(&idx) {
            Some(existing) => *existing += m,
            None => {
                self.terms.insert(idx, m);
            }
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, idx: &MultiIndex) -> Option<&CMatrix> {
        self.terms.get(idx)
    }

    /// Terms in graded-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &CMatrix)> {
        self.terms.iter()
    }

    pub fn indices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.terms.keys()
    }

    /// Largest total degree among stored terms.
    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// Coefficient of the zero index, or a zero matrix.
    pub fn constant_term(&self) -> CMatrix {
        self.terms
            .get(&MultiIndex::zero(self.nparams))
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.nrows, self.ncols))
    }

    /// `Σ_i S_i p^i` at a complex point.
    pub fn evaluate(&self, p: &[Complex64]) -> Result<CMatrix> {
        if p.len() != self.nparams {
            return Err(PmorError::dims("evaluation point", self.nparams, p.len()));
        }
        let mut out = CMatrix::zeros(self.nrows, self.ncols);
        for (idx, m) in &self.terms {
            let w = idx.monomial(p);
            if w == Complex64::new(1.0, 0.0) {
                out += m;
            } else {
                out += m * w;
            }
        }
        Ok(out)
    }

    /// `Σ_i S_i p^i` at a real point.
    pub fn evaluate_real(&self, p: &[f64]) -> Result<CMatrix> {
        let pc: Vec<Complex64> = p.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.evaluate(&pc)
    }

    /// Cauchy product: the coefficient at `ρ` is `Σ_{i+j=ρ} S_i T_j`.
    pub fn convolve(&self, other: &MatrixSeries) -> Result<MatrixSeries> {
        if self.ncols != other.nrows {
            return Err(PmorError::dims("inner dimension of convolution", self.ncols, other.nrows));
        }
        if self.nparams != other.nparams {
            return Err(PmorError::dims("parameter count of convolution", self.nparams, other.nparams));
        }
        let mut out = MatrixSeries::zeros(self.nrows, other.ncols, self.nparams);
        for (i, si) in &self.terms {
            for (j, tj) in &other.terms {
                out.accumulate(i.add(j), linalg::matmul(si, tj));
            }
        }
        Ok(out)
    }

    /// Termwise sum.
    pub fn add(&self, other: &MatrixSeries) -> Result<MatrixSeries> {
        if self.shape() != other.shape() {
            return Err(PmorError::invalid(format!(
                "cannot add series of shapes {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        if self.nparams != other.nparams {
            return Err(PmorError::dims("parameter count of sum", self.nparams, other.nparams));
        }
        let mut out = self.clone();
        for (idx, m) in &other.terms {
            out.accumulate(idx.clone(), m.clone());
        }
        Ok(out)
    }

    /// `max_{p in box} |p^i| · ‖S_i‖_F`; zero for an absent index.
    pub fn term_weight(&self, idx: &MultiIndex, bx: &ParamBox) -> f64 {
        match self.terms.get(idx) {
            Some(m) => bx.max_abs_monomial(idx) * linalg::frobenius(m),
            None => 0.0,
        }
    }

    /// Drops every term whose weight is `<= tol`.
    pub fn truncate(&self, tol: f64, bx: &ParamBox) -> MatrixSeries {
        let terms = self
            .terms
            .iter()
            .filter(|(idx, m)| bx.max_abs_monomial(idx) * linalg::frobenius(m) > tol)
            .map(|(i, m)| (i.clone(), m.clone()))
            .collect();
        MatrixSeries {
            nrows: self.nrows,
            ncols: self.ncols,
            nparams: self.nparams,
            terms,
        }
    }

    /// Keeps the terms selected by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&MultiIndex, &CMatrix) -> bool) -> MatrixSeries {
        MatrixSeries {
            terms: self
                .terms
                .iter()
                .filter(|(i, m)| keep(i, m))
                .map(|(i, m)| (i.clone(), m.clone()))
                .collect(),
            ..Self::zeros(self.nrows, self.ncols, self.nparams)
        }
    }

    fn map_terms(&self, nrows: usize, ncols: usize, f: impl Fn(&CMatrix) -> CMatrix) -> MatrixSeries {
        MatrixSeries {
            nrows,
            ncols,
            nparams: self.nparams,
            terms: self.terms.iter().map(|(i, m)| (i.clone(), f(m))).collect(),
        }
    }

    /// Termwise plain transpose: `S(p)ᵀ`.
    pub fn transpose(&self) -> MatrixSeries {
        self.map_terms(self.ncols, self.nrows, |m| m.transpose())
    }

    /// Termwise conjugate transpose (equals `S(p)ᴴ` for real `p`).
    pub fn adjoint(&self) -> MatrixSeries {
        self.map_terms(self.ncols, self.nrows, |m| m.adjoint())
    }

    pub fn scale(&self, factor: Complex64) -> MatrixSeries {
        self.map_terms(self.nrows, self.ncols, |m| m * factor)
    }

    /// True when every stored coefficient is square and diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.terms.values().all(linalg::is_diagonal)
    }

    /// True when no coefficient has a nonzero imaginary part.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|m| m.iter().all(|z| z.im == 0.0))
    }

    /// Zeroes imaginary parts when each is at most `rel_tol · ‖S_i‖_F`.
    ///
    /// Returns whether the series was demoted.
    pub fn demote_to_real(&mut self, rel_tol: f64) -> bool {
        let ok = self.terms.values().all(|m| {
            let bound = rel_tol * linalg::frobenius(m);
            m.iter().all(|z| z.im.abs() <= bound)
        });
        if ok {
            for m in self.terms.values_mut() {
                m.iter_mut().for_each(|z| z.im = 0.0);
            }
        }
        ok
    }
}
