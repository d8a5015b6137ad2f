//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The LU factorizations are
//! written here rather than borrowed because both a transpose solve and a
//! 1-norm condition estimate are needed, and because the full-order pencils
//! of interest are often banded (block-diagonal state matrices), where a
//! banded factorization turns an O(N³) solve into O(N·w²).

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// |re| + |im|, the pivoting magnitude used by LAPACK's complex routines.
#[inline]
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn nnz(m: &CMatrix) -> usize {
    m.iter().filter(|z| **z != ZERO).count()
}

/// Lower and upper bandwidth of the nonzero pattern.
pub fn bandwidth(m: &CMatrix) -> (usize, usize) {
    let (mut kl, mut ku) = (0, 0);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != ZERO {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
    }
    (kl, ku)
}

/// Plain (non-conjugating) transpose.
pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose()
}

/// `a * b`, skipping structural zeros of `a` when it is sparse enough to pay off.
///
/// The system matrices of the benchmark problems are mostly zeros (identity,
/// block-diagonal, rank-one parameter perturbations), so products against
/// them dominate the offline cost unless zeros are skipped.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions must agree");
    let size = a.nrows() * a.ncols();
    if size < 64 {
        return a * b;
    }
    let nonzeros = nnz(a);
    if nonzeros * 4 > size {
        return a * b;
    }
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    for k in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            for j in 0..b.ncols() {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    out
}

/// Right-multiplies by `diag(d)` where `d` is the diagonal of `diag_mat`.
pub fn scale_columns(m: &CMatrix, diag_mat: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let d = diag_mat[(j, j)];
        col.iter_mut().for_each(|z| *z *= d);
    }
    out
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    m.is_square()
        && (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| i == j || m[(i, j)] == ZERO))
}

/// Common interface of the LU factorizations below.
pub trait Factorization {
    fn dim(&self) -> usize;

    /// 1-norm of the factored matrix (taken before factoring).
    fn matrix_norm1(&self) -> f64;

    /// True if an exactly zero pivot was met.
    fn has_zero_pivot(&self) -> bool;

    /// Overwrites `b` with `M⁻¹ b`.
    fn solve_in_place(&self, b: &mut [Complex64]);

    /// Overwrites `b` with `M⁻ᵀ b` (plain transpose).
    fn solve_transpose_in_place(&self, b: &mut [Complex64]);

    /// Solves `M X = rhs` column by column.
    fn solve(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(rhs.nrows(), self.dim());
        let mut out = rhs.clone();
        for mut col in out.column_iter_mut() {
            let slice = col.as_mut_slice();
            self.solve_in_place(slice);
        }
        out
    }

    /// Solves `Mᵀ X = rhs` column by column.
    fn solve_transpose(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(rhs.nrows(), self.dim());
        let mut out = rhs.clone();
        for mut col in out.column_iter_mut() {
            self.solve_transpose_in_place(col.as_mut_slice());
        }
        out
    }

    /// Reciprocal 1-norm condition number estimate; 0 for an exactly singular matrix.
    fn rcond(&self) -> f64 {
        if self.has_zero_pivot() {
            return 0.0;
        }
        let anorm = self.matrix_norm1();
        if anorm == 0.0 {
            return 0.0;
        }
        let inv_norm = estimate_inverse_norm1(self);
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return 0.0;
        }
        1.0 / (anorm * inv_norm)
    }
}

/// Hager–Higham estimate of `‖M⁻¹‖₁` from solves with `M` and `Mᴴ`.
fn estimate_inverse_norm1<F: Factorization + ?Sized>(f: &F) -> f64 {
    let n = f.dim();
    if n == 0 {
        return 0.0;
    }
    let solve_h = |v: &mut Vec<Complex64>| {
        // M⁻ᴴ v = conj(M⁻ᵀ conj(v))
        v.iter_mut().for_each(|z| *z = z.conj());
        f.solve_transpose_in_place(v);
        v.iter_mut().for_each(|z| *z = z.conj());
    };
    let l1 = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();

    let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let mut y = x.clone();
        f.solve_in_place(&mut y);
        let new_est = l1(&y);
        if iter > 0 && new_est <= est {
            est = est.max(new_est);
            break;
        }
        est = new_est;
        let mut xi: Vec<Complex64> = y
            .iter()
            .map(|z| {
                let a = z.norm();
                if a > 0.0 {
                    z / a
                } else {
                    ONE
                }
            })
            .collect();
        solve_h(&mut xi);
        let (j, zmax) = xi
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        if j == last_j || !zmax.is_finite() {
            break;
        }
        last_j = j;
        x.iter_mut().for_each(|z| *z = ZERO);
        x[j] = ONE;
    }

    // Alternating test vector guards against the iteration stalling.
    let mut alt: Vec<Complex64> = (0..n)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
            Complex64::new(sign * (1.0 + i as f64 / denom), 0.0)
        })
        .collect();
    f.solve_in_place(&mut alt);
    let alt_est = 2.0 * l1(&alt) / (3.0 * n as f64);
    est.max(alt_est)
}

/// Dense LU with partial (row) pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    // column-major, L below the diagonal (unit), U on and above
    lu: Vec<Complex64>,
    piv: Vec<usize>,
    norm1: f64,
    zero_pivot: bool,
}

impl DenseLu {
    pub fn new(m: &CMatrix) -> Self {
        assert!(m.is_square(), "LU needs a square matrix");
        let n = m.nrows();
        let norm1 = norm1(m);
        let mut lu: Vec<Complex64> = m.as_slice().to_vec();
        let mut piv = vec![0; n];
        let mut zero_pivot = false;
        let at = |i: usize, j: usize| j * n + i;
        for k in 0..n {
            let mut p = k;
            let mut best = cabs1(lu[at(k, k)]);
            for i in k + 1..n {
                let v = cabs1(lu[at(i, k)]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                zero_pivot = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(at(k, j), at(p, j));
                }
            }
            let inv = ONE / lu[at(k, k)];
            for i in k + 1..n {
                lu[at(i, k)] *= inv;
            }
            for j in k + 1..n {
                let akj = lu[at(k, j)];
                if akj == ZERO {
                    continue;
                }
                let (left, right) = lu.split_at_mut(j * n);
                let lcol = &left[k * n..k * n + n];
                let col = &mut right[..n];
                for i in k + 1..n {
                    col[i] -= lcol[i] * akj;
                }
            }
        }
        DenseLu {
            n,
            lu,
            piv,
            norm1,
            zero_pivot,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.lu[j * self.n + i]
    }
}

impl Factorization for DenseLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn matrix_norm1(&self) -> f64 {
        self.norm1
    }

    fn has_zero_pivot(&self) -> bool {
        self.zero_pivot
    }

    fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for j in 0..n {
            let bj = b[j];
            if bj == ZERO {
                continue;
            }
            for i in j + 1..n {
                b[i] -= self.at(i, j) * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            for i in 0..j {
                b[i] -= self.at(i, j) * bj;
            }
        }
    }

    fn solve_transpose_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        // Uᵀ y = b
        for j in 0..n {
            let mut acc = b[j];
            for i in 0..j {
                acc -= self.at(i, j) * b[i];
            }
            b[j] = acc / self.at(j, j);
        }
        // Lᵀ z = y
        for j in (0..n).rev() {
            let mut acc = b[j];
            for i in j + 1..n {
                acc -= self.at(i, j) * b[i];
            }
            b[j] = acc;
        }
        for k in (0..n).rev() {
            b.swap(k, self.piv[k]);
        }
    }
}

/// Banded LU with partial pivoting in the layout of LAPACK's `gbtrf`.
///
/// Column `j` holds rows `j-kl-ku ..= j+kl`; the extra `kl` superdiagonals
/// absorb the fill produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    piv: Vec<usize>,
    norm1: f64,
    zero_pivot: bool,
}

impl BandedLu {
    /// Factors `m`, which must have no nonzeros outside the `(kl, ku)` band.
    pub fn new(m: &CMatrix, kl: usize, ku: usize) -> Self {
        assert!(m.is_square(), "LU needs a square matrix");
        let n = m.nrows();
        Self::from_fn(n, kl, ku, |i, j| m[(i, j)])
    }

    /// Factors the band matrix whose in-band entries are given by `entry(i, j)`.
    pub fn from_fn(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> Complex64) -> Self {
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![ZERO; ldab * n];
        let mut colsum = vec![0.0f64; n];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n.saturating_sub(1));
            for i in lo..=hi {
                let v = entry(i, j);
                ab[j * ldab + (i + kl + ku - j)] = v;
                colsum[j] += v.norm();
            }
        }
        let norm1 = colsum.into_iter().fold(0.0, f64::max);
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab,
            piv: vec![0; n],
            norm1,
            zero_pivot: false,
        };
        lu.factor();
        lu
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.kl + self.ku >= j && i <= j + self.kl);
        j * self.ldab + (i + self.kl + self.ku - j)
    }

    fn factor(&mut self) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = cabs1(self.ab[self.idx(j, j)]);
            for i in 1..=km {
                let v = cabs1(self.ab[self.idx(j + i, j)]);
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            self.piv[j] = j + jp;
            if best == 0.0 {
                self.zero_pivot = true;
                continue;
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            let inv = ONE / self.ab[self.idx(j, j)];
            for i in 1..=km {
                let k = self.idx(j + i, j);
                self.ab[k] *= inv;
            }
            for c in j + 1..=ju {
                let ujc = self.ab[self.idx(j, c)];
                if ujc == ZERO {
                    continue;
                }
                for i in 1..=km {
                    let l = self.ab[self.idx(j + i, j)];
                    let k = self.idx(j + i, c);
                    self.ab[k] -= l * ujc;
                }
            }
        }
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }
}

impl Factorization for BandedLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn matrix_norm1(&self) -> f64 {
        self.norm1
    }

    fn has_zero_pivot(&self) -> bool {
        self.zero_pivot
    }

    fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let kl = self.kl;
        let kband = self.kl + self.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != ZERO {
                for i in 1..=km {
                    b[j + i] -= self.ab[self.idx(j + i, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            if bj == ZERO {
                continue;
            }
            for i in j.saturating_sub(kband)..j {
                b[i] -= self.ab[self.idx(i, j)] * bj;
            }
        }
    }

    fn solve_transpose_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let kl = self.kl;
        let kband = self.kl + self.ku;
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(kband)..j {
                acc -= self.ab[self.idx(i, j)] * b[i];
            }
            b[j] = acc / self.ab[self.idx(j, j)];
        }
        for j in (0..n).rev() {
            let km = kl.min(n - 1 - j);
            let mut acc = b[j];
            for i in 1..=km {
                acc -= self.ab[self.idx(j + i, j)] * b[j + i];
            }
            b[j] = acc;
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }
}

/// Either factorization, chosen by [`Lu::new`] from the band structure.
#[derive(Debug, Clone)]
pub enum Lu {
    Dense(DenseLu),
    Banded(BandedLu),
}

impl Lu {
    /// Uses a banded factorization when the band storage is well below dense storage.
    pub fn new(m: &CMatrix) -> Self {
        let (kl, ku) = bandwidth(m);
        Self::with_bandwidth(m, kl, ku)
    }

    pub fn with_bandwidth(m: &CMatrix, kl: usize, ku: usize) -> Self {
        if band_pays_off(m.nrows(), kl, ku) {
            Lu::Banded(BandedLu::new(m, kl, ku))
        } else {
            Lu::Dense(DenseLu::new(m))
        }
    }

    pub fn dense(m: &CMatrix) -> Self {
        Lu::Dense(DenseLu::new(m))
    }

    fn inner(&self) -> &dyn Factorization {
        match self {
            Lu::Dense(f) => f,
            Lu::Banded(f) => f,
        }
    }
}

pub(crate) fn band_pays_off(n: usize, kl: usize, ku: usize) -> bool {
    n >= 16 && (2 * kl + ku + 1) * 4 <= n
}

impl Factorization for Lu {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn matrix_norm1(&self) -> f64 {
        self.inner().matrix_norm1()
    }
    fn has_zero_pivot(&self) -> bool {
        self.inner().has_zero_pivot()
    }
    fn solve_in_place(&self, b: &mut [Complex64]) {
        self.inner().solve_in_place(b)
    }
    fn solve_transpose_in_place(&self, b: &mut [Complex64]) {
        self.inner().solve_transpose_in_place(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_matrix(n: usize, seed: u64) -> CMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    fn tridiag(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(-(i as f64) - 1.0, 0.3)
            } else if i + 1 == j {
                c(2.0, 0.0)
            } else if j + 1 == i {
                c(-0.5, 1.0)
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn dense_solve_and_transpose_solve() {
        let m = sample_matrix(7, 3);
        let lu = DenseLu::new(&m);
        let b = CMatrix::from_fn(7, 2, |i, j| c(i as f64, j as f64 - 1.0));
        let x = lu.solve(&b);
        assert!(frobenius(&(&m * &x - &b)) < 1e-12);
        let y = lu.solve_transpose(&b);
        assert!(frobenius(&(m.transpose() * &y - &b)) < 1e-12);
    }

    #[test]
    fn banded_matches_dense_with_pivoting() {
        let m = tridiag(40);
        let (kl, ku) = bandwidth(&m);
        assert_eq!((kl, ku), (1, 1));
        let banded = BandedLu::new(&m, kl, ku);
        let dense = DenseLu::new(&m);
        let b = CMatrix::from_fn(40, 1, |i, _| c(1.0, i as f64 * 0.1));
        let xb = banded.solve(&b);
        let xd = dense.solve(&b);
        assert!(frobenius(&(&xb - &xd)) < 1e-12 * frobenius(&xd));
        let yb = banded.solve_transpose(&b);
        assert!(frobenius(&(m.transpose() * &yb - &b)) < 1e-12);
        let rb = banded.rcond();
        let rd = dense.rcond();
        assert!(rb > 0.0 && rd > 0.0);
        assert!((rb / rd - 1.0).abs() < 0.5);
    }

    #[test]
    fn banded_with_wider_lower_band() {
        let n = 30;
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i >= j && i - j <= 3 {
                c(1.0 / (1.0 + (i + 2 * j) as f64), (i as f64 - j as f64) * 0.2)
            } else if j == i + 1 {
                c(0.7, 0.0)
            } else {
                ZERO
            }
        });
        let (kl, ku) = bandwidth(&m);
        let lu = BandedLu::new(&m, kl, ku);
        let b = CMatrix::from_fn(n, 1, |i, _| c((i % 5) as f64, 1.0));
        let x = lu.solve(&b);
        assert!(frobenius(&(&m * &x - &b)) < 1e-10 * frobenius(&b));
        let y = lu.solve_transpose(&b);
        assert!(frobenius(&(m.transpose() * &y - &b)) < 1e-10 * frobenius(&b));
    }

    #[test]
    fn rcond_of_diagonal_is_exact() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1e-3), c(4.0, 0.0)]));
        let rc = DenseLu::new(&m).rcond();
        // ‖M‖₁ = 4, ‖M⁻¹‖₁ = 1e3
        assert!((rc - 1.0 / 4000.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_zero_rcond() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]));
        assert_eq!(DenseLu::new(&m).rcond(), 0.0);
        assert_eq!(Lu::new(&m).rcond(), 0.0);
    }

    #[test]
    fn rcond_is_an_underestimate_of_inverse_norm_free_bound() {
        let m = sample_matrix(12, 11);
        let lu = DenseLu::new(&m);
        let inv = lu.solve(&CMatrix::identity(12, 12));
        let exact = 1.0 / (norm1(&m) * norm1(&inv));
        let est = lu.rcond();
        // the estimator never overestimates ‖M⁻¹‖₁, so rcond ≥ exact, and is within a modest factor
        assert!(est >= exact * (1.0 - 1e-12));
        assert!(est <= exact * 10.0);
    }

    #[test]
    fn sparse_matmul_agrees_with_dense() {
        let n = 50;
        let a = tridiag(n);
        let b = CMatrix::from_fn(n, 3, |i, j| c(i as f64 - j as f64, 0.5));
        let dense = &a * &b;
        assert!(frobenius(&(matmul(&a, &b) - dense)) < 1e-12);
    }
}
