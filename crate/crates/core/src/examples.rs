//! The three benchmark problems: two 3-state toy systems and the
//! parametrized 1006-state Penzl system.

use std::fmt;
use std::str::FromStr;

use nalgebra::dmatrix;
use num_complex::Complex64;

use crate::interp::{make_constant_data, InterpolationData};
use crate::linalg::CMatrix;
use crate::model::ParametricLTI;
use crate::series::{MatrixSeries, ParamBox};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// Parameter in `B` only; two-sided with constant shifts.
    Toy1,
    /// Parameter couples two states of `A`; one-sided.
    Toy2,
    /// Block-diagonal `A(p)` of order 1006; 40 imaginary shifts, one-sided.
    Penzl,
}

impl ExampleId {
    pub const ALL: [ExampleId; 3] = [ExampleId::Toy1, ExampleId::Toy2, ExampleId::Penzl];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Toy1 => "toy1",
            ExampleId::Toy2 => "toy2",
            ExampleId::Penzl => "penzl",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "toy1" => Ok(ExampleId::Toy1),
            "toy2" => Ok(ExampleId::Toy2),
            "penzl" => Ok(ExampleId::Penzl),
            other => Err(format!("unknown example {other:?} (expected toy1, toy2 or penzl)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Example {
    pub id: ExampleId,
    pub system: ParametricLTI,
    pub data: InterpolationData,
    pub config: SolverConfig,
}

fn re(m: nalgebra::DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn build(id: ExampleId) -> Example {
    let (system, data, config) = match id {
        ExampleId::Toy1 => toy1(),
        ExampleId::Toy2 => toy2(),
        ExampleId::Penzl => penzl(),
    };
    Example {
        id,
        system,
        data,
        config,
    }
}

/// `A ≡ -diag(1,1,2)`, `B(p) = [p, 1-p, 1]ᵀ`, `C ≡ [2 1 1]`, `E ≡ I`.
fn toy1() -> (ParametricLTI, InterpolationData, SolverConfig) {
    let a = MatrixSeries::constant(re(dmatrix![-1.0, 0.0, 0.0; 0.0, -1.0, 0.0; 0.0, 0.0, -2.0]), 1);
    let b = MatrixSeries::univariate(vec![re(dmatrix![0.0; 1.0; 1.0]), re(dmatrix![1.0; -1.0; 0.0])])
        .expect("static shapes");
    let c = MatrixSeries::constant(re(dmatrix![2.0, 1.0, 1.0]), 1);
    let sys = ParametricLTI::with_identity_e(a, b, c, ParamBox::unit(1)).expect("toy1 system");
    let r = |x: f64| Complex64::new(x, 0.0);
    let data = make_constant_data(
        &[r(1.0), r(3.0)],
        re(dmatrix![1.0, 1.0]),
        Some((&[r(2.0), r(4.0)][..], re(dmatrix![1.0, 1.0]))),
        1,
    )
    .expect("toy1 data");
    (sys, data, SolverConfig::with_tol(1e-12))
}

/// `A(p) = [-2 p 0; -p -1 0; 0 0 -1]`, `B = Cᵀ = [1 0 1]ᵀ`, `E = I`.
fn toy2() -> (ParametricLTI, InterpolationData, SolverConfig) {
    let a = MatrixSeries::univariate(vec![
        re(dmatrix![-2.0, 0.0, 0.0; 0.0, -1.0, 0.0; 0.0, 0.0, -1.0]),
        re(dmatrix![0.0, 1.0, 0.0; -1.0, 0.0, 0.0; 0.0, 0.0, 0.0]),
    ])
    .expect("static shapes");
    let b = MatrixSeries::constant(re(dmatrix![1.0; 0.0; 1.0]), 1);
    let c = MatrixSeries::constant(re(dmatrix![1.0, 0.0, 1.0]), 1);
    let sys = ParametricLTI::with_identity_e(a, b, c, ParamBox::unit(1)).expect("toy2 system");
    let r = |x: f64| Complex64::new(x, 0.0);
    let data = make_constant_data(&[r(0.1), r(5.0)], re(dmatrix![1.0, 1.0]), None, 1).expect("toy2 data");
    (sys, data, SolverConfig::with_tol(1e-5))
}

/// Number of shifts in the Penzl setup.
pub const PENZL_POINTS: usize = 40;

/// `i·10^t` for `t` in `linspace(-1, 3, 40)`, endpoints included.
pub fn penzl_shifts() -> Vec<Complex64> {
    log_space(1e-1, 1e3, PENZL_POINTS)
        .into_iter()
        .map(|w| Complex64::new(0.0, w))
        .collect()
}

/// `count` points `10^linspace(log10 lo, log10 hi, count)`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| {
            if count == 1 {
                lo
            } else {
                10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// `A(p) = diag(T1(p), T2, T3, T4)` with `T1(p) = [-1, 100+p; -100-p, -1]`,
/// `T2`, `T3` the same at 200 and 400, `T4 = -diag(1..=1000)`;
/// `B = Cᵀ = [10·1₆; 1₁₀₀₀]`.
fn penzl() -> (ParametricLTI, InterpolationData, SolverConfig) {
    let n = 1006;
    let mut a0 = CMatrix::zeros(n, n);
    for (block, w) in [100.0, 200.0, 400.0].into_iter().enumerate() {
        let k = 2 * block;
        a0[(k, k)] = Complex64::new(-1.0, 0.0);
        a0[(k + 1, k + 1)] = Complex64::new(-1.0, 0.0);
        a0[(k, k + 1)] = Complex64::new(w, 0.0);
        a0[(k + 1, k)] = Complex64::new(-w, 0.0);
    }
    for j in 0..1000 {
        a0[(6 + j, 6 + j)] = Complex64::new(-(j as f64 + 1.0), 0.0);
    }
    let mut a1 = CMatrix::zeros(n, n);
    a1[(0, 1)] = Complex64::new(1.0, 0.0);
    a1[(1, 0)] = Complex64::new(-1.0, 0.0);
    let a = MatrixSeries::univariate(vec![a0, a1]).expect("static shapes");
    let bvec = CMatrix::from_fn(n, 1, |i, _| Complex64::new(if i < 6 { 10.0 } else { 1.0 }, 0.0));
    let b = MatrixSeries::constant(bvec.clone(), 1);
    let c = MatrixSeries::constant(bvec.transpose(), 1);
    let sys = ParametricLTI::with_identity_e(a, b, c, ParamBox::unit(1)).expect("penzl system");
    let shifts = penzl_shifts();
    let r = CMatrix::from_element(1, PENZL_POINTS, Complex64::new(1.0, 0.0));
    let data = make_constant_data(&shifts, r, None, 1).expect("penzl data");
    (sys, data, SolverConfig::with_tol(1e-7))
}
