//! Numerical checks of the reduced model: interpolation residuals along the
//! shift curves and transfer-function error grids over `(s, p)`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PmorError, Result, Side};
use crate::interp::InterpolationData;
use crate::linalg::{self, Factorization};
use crate::model::ParametricLTI;
use crate::rom::RomBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Linear,
    Log,
}

/// `count` points between `lo` and `hi`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub scale: Scale,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn linear(lo: f64, hi: f64, count: usize) -> Self {
        Axis {
            scale: Scale::Linear,
            lo,
            hi,
            count,
        }
    }

    pub fn log(lo: f64, hi: f64, count: usize) -> Self {
        Axis {
            scale: Scale::Log,
            lo,
            hi,
            count,
        }
    }

    pub fn single(value: f64) -> Self {
        Axis::linear(value, value, 1)
    }

    pub fn check(&self) -> Result<()> {
        if self.count == 0 {
            return Err(PmorError::invalid("axis needs at least one point"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(PmorError::invalid("axis bounds must be finite"));
        }
        if self.count > 1 && !(self.lo < self.hi) {
            return Err(PmorError::invalid(format!("axis needs lo < hi, got {} and {}", self.lo, self.hi)));
        }
        if self.scale == Scale::Log && !(self.lo > 0.0) {
            return Err(PmorError::invalid("log axis needs lo > 0"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let last = (self.count - 1) as f64;
        match self.scale {
            Scale::Linear => (0..self.count)
                .map(|k| self.lo + (self.hi - self.lo) * k as f64 / last)
                .collect(),
            Scale::Log => {
                let (a, b) = (self.lo.log10(), self.hi.log10());
                (0..self.count)
                    .map(|k| 10f64.powf(a + (b - a) * k as f64 / last))
                    .collect()
            }
        }
    }
}

/// `lin:lo:hi:count`, `log:lo:hi:count`, or a single number.
impl FromStr for Axis {
    type Err = String;
    fn from_str(text: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?} in axis {text:?}"));
        match parts.as_slice() {
            [v] => Ok(Axis::single(num(v)?)),
            [kind, lo, hi, count] => {
                let count = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad count {count:?} in axis {text:?}"))?;
                let scale = match *kind {
                    "lin" | "linear" => Scale::Linear,
                    "log" => Scale::Log,
                    other => return Err(format!("unknown axis scale {other:?} (lin or log)")),
                };
                let axis = Axis {
                    scale,
                    lo: num(lo)?,
                    hi: num(hi)?,
                    count,
                };
                axis.check().map_err(|e| e.to_string())?;
                Ok(axis)
            }
            _ => Err(format!("axis {text:?} must be lin:lo:hi:count, log:lo:hi:count or a number")),
        }
    }
}

/// Frequency side of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FrequencyAxis {
    /// Sampled values, multiplied by `i` when `imaginary`.
    Sweep { axis: Axis, imaginary: bool },
    Fixed(Complex64),
    /// Follows the right shift curve `λ_k(p)`; one-based `k`.
    Shift(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s: FrequencyAxis,
    pub p_axes: Vec<Axis>,
}

impl GridSpec {
    pub fn check(&self) -> Result<()> {
        if let FrequencyAxis::Sweep { axis, .. } = &self.s {
            axis.check()?;
        }
        if let FrequencyAxis::Shift(0) = self.s {
            return Err(PmorError::invalid("shift indices are one-based"));
        }
        self.p_axes.iter().try_for_each(Axis::check)
    }

    pub fn s_count(&self) -> usize {
        match &self.s {
            FrequencyAxis::Sweep { axis, .. } => axis.count,
            _ => 1,
        }
    }

    /// Cartesian product of the parameter axes, last axis fastest.
    pub fn p_points(&self) -> Vec<Vec<f64>> {
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for axis in &self.p_axes {
            let vals = axis.values();
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut q = prefix.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridNode {
    pub s: Complex64,
    pub p: Vec<f64>,
    /// `‖H - Ĥ‖_F`; NaN when either side failed.
    pub abs_err: f64,
    /// `abs_err / max over the grid of ‖H‖_F`.
    pub rel_err: f64,
    pub h_norm: f64,
    pub hhat_norm: f64,
    /// Reciprocal condition estimate of the reduced pencil `sÊ - Â`.
    pub rom_rcond: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorGrid {
    pub s_count: usize,
    pub p_count: usize,
    /// Row-major in `s`: node `(i, j)` is at `i * p_count + j`.
    pub nodes: Vec<GridNode>,
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

impl ErrorGrid {
    pub fn node(&self, s_index: usize, p_index: usize) -> &GridNode {
        &self.nodes[s_index * self.p_count + p_index]
    }

    /// Largest absolute error over nodes that evaluated successfully.
    pub fn max_abs_err(&self) -> f64 {
        self.nodes.iter().map(|n| n.abs_err).filter(|x| !x.is_nan()).fold(0.0, f64::max)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.nodes.iter().map(|n| n.rel_err).filter(|x| !x.is_nan()).fold(0.0, f64::max)
    }

    pub fn failed_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| n.abs_err.is_nan()).count()
    }

    fn header(&self, tail: &str) -> String {
        let nparams = self.nodes.first().map_or(0, |n| n.p.len());
        let mut h = String::from("s_real,s_imag");
        for k in 1..=nparams {
            let _ = write!(h, ",p_{k}");
        }
        h.push(',');
        h.push_str(tail);
        h.push('\n');
        h
    }

    fn csv_with(&self, tail: &str, cols: impl Fn(&GridNode) -> [f64; 2]) -> String {
        let mut out = self.header(tail);
        for n in &self.nodes {
            let _ = write!(out, "{},{}", fmt_f64(n.s.re), fmt_f64(n.s.im));
            for p in &n.p {
                let _ = write!(out, ",{}", fmt_f64(*p));
            }
            let [a, b] = cols(n);
            let _ = writeln!(out, ",{},{}", fmt_f64(a), fmt_f64(b));
        }
        out
    }

    /// `s_real,s_imag,p_1,...,p_ν,abs_err,rel_err`, one row per node, s-major.
    pub fn to_csv(&self) -> String {
        self.csv_with("abs_err,rel_err", |n| [n.abs_err, n.rel_err])
    }

    /// `s_real,s_imag,p_1,...,p_ν,abs_h,abs_hhat`.
    pub fn magnitudes_csv(&self) -> String {
        self.csv_with("abs_h,abs_hhat", |n| [n.h_norm, n.hhat_norm])
    }
}

/// Errors `‖H(s;p) - Ĥ(s;p)‖_F` at every grid node.
///
/// The reduced side is solved even when its pencil is badly conditioned; the
/// estimate is kept in `rom_rcond`. Only the full-order side is held to the
/// singularity floor.
///
/// Each node needs one full-order factorization: the pencil changes with
/// `s`, so nothing is reused across frequencies. Banded pencils keep this
/// cheap; dense ones cost O(N³) per node.
pub fn error_grid(
    sys: &ParametricLTI,
    bundle: &RomBundle,
    grid: &GridSpec,
    data: Option<&InterpolationData>,
) -> Result<ErrorGrid> {
    grid.check()?;
    check_bundle(sys, bundle)?;
    if grid.p_axes.len() != sys.nparams() {
        return Err(PmorError::dims("parameter axes", sys.nparams(), grid.p_axes.len()));
    }
    if let FrequencyAxis::Shift(k) = grid.s {
        let data = data.ok_or_else(|| PmorError::invalid("shift-following grid needs interpolation data"))?;
        if k > data.order() {
            return Err(PmorError::invalid(format!("shift index {k} exceeds reduced order {}", data.order())));
        }
    }
    let p_points = grid.p_points();
    let s_count = grid.s_count();

    let column = |p: &Vec<f64>| -> Result<Vec<GridNode>> {
        let full = sys.eval_matrices(p)?;
        let reduced = bundle.assemble_at_unchecked(p)?;
        let freqs: Vec<Complex64> = match &grid.s {
            FrequencyAxis::Sweep { axis, imaginary } => axis
                .values()
                .into_iter()
                .map(|x| if *imaginary { Complex64::new(0.0, x) } else { Complex64::new(x, 0.0) })
                .collect(),
            FrequencyAxis::Fixed(s) => vec![*s],
            FrequencyAxis::Shift(k) => {
                let lam = data.expect("checked above").right_shifts_at(p)?;
                vec![lam[k - 1]]
            }
        };
        Ok(freqs
            .into_iter()
            .map(|s| {
                let (hr, rom_rcond) = match reduced.transfer_reporting(s) {
                    Ok((hr, rc)) => (Some(hr), rc),
                    Err(_) => (None, 0.0),
                };
                let (abs_err, h_norm, hhat_norm) = match (full.transfer(s), hr) {
                    (Ok(h), Some(hr)) => (linalg::frobenius(&(&h - &hr)), linalg::frobenius(&h), linalg::frobenius(&hr)),
                    (Ok(h), None) => (f64::NAN, linalg::frobenius(&h), f64::NAN),
                    (Err(_), Some(hr)) => (f64::NAN, f64::NAN, linalg::frobenius(&hr)),
                    (Err(_), None) => (f64::NAN, f64::NAN, f64::NAN),
                };
                GridNode {
                    s,
                    p: p.clone(),
                    abs_err,
                    rel_err: f64::NAN,
                    h_norm,
                    hhat_norm,
                    rom_rcond,
                }
            })
            .collect())
    };

    #[cfg(feature = "parallel")]
    let columns: Vec<Vec<GridNode>> = {
        use rayon::prelude::*;
        p_points.par_iter().map(column).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let columns: Vec<Vec<GridNode>> = p_points.iter().map(column).collect::<Result<_>>()?;

    let p_count = p_points.len();
    let mut nodes = Vec::with_capacity(s_count * p_count);
    for i in 0..s_count {
        for col in &columns {
            nodes.push(col[i].clone());
        }
    }
    let h_max = nodes.iter().map(|n| n.h_norm).filter(|x| !x.is_nan()).fold(0.0, f64::max);
    for n in &mut nodes {
        n.rel_err = if h_max > 0.0 { n.abs_err / h_max } else { n.abs_err };
    }
    Ok(ErrorGrid {
        s_count,
        p_count,
        nodes,
    })
}

fn check_bundle(sys: &ParametricLTI, bundle: &RomBundle) -> Result<()> {
    if bundle.inputs() != sys.inputs() {
        return Err(PmorError::dims("bundle inputs", sys.inputs(), bundle.inputs()));
    }
    if bundle.outputs() != sys.outputs() {
        return Err(PmorError::dims("bundle outputs", sys.outputs(), bundle.outputs()));
    }
    if bundle.nparams() != sys.nparams() {
        return Err(PmorError::dims("bundle parameters", sys.nparams(), bundle.nparams()));
    }
    Ok(())
}

/// One interpolation condition evaluated at one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationRecord {
    pub p: Vec<f64>,
    /// Zero-based interpolation index.
    pub index: usize,
    pub side: Side,
    pub shift: Complex64,
    /// `‖H r - Ĥ r‖ / ‖H r‖` (right) or `‖ℓᵀH - ℓᵀĤ‖ / ‖ℓᵀH‖` (left).
    pub residual: Option<f64>,
    /// Reciprocal condition estimate of the reduced pencil at the shift.
    pub rom_rcond: Option<f64>,
    pub error: Option<String>,
}

/// Checks `H(λ_i(p);p) r_i(p) = Ĥ(λ_i(p);p) r_i(p)` and, two-sided, the left
/// conditions at `μ_i(p)` with `ℓ_i(p)`, at every sample parameter.
pub fn check_interpolation(
    sys: &ParametricLTI,
    data: &InterpolationData,
    bundle: &RomBundle,
    p_samples: &[Vec<f64>],
) -> Result<Vec<InterpolationRecord>> {
    data.check_compatible(sys)?;
    check_bundle(sys, bundle)?;
    let per_p = |p: &Vec<f64>| -> Result<Vec<InterpolationRecord>> {
        let full = sys.eval_matrices(p)?;
        let reduced = bundle.assemble_at_unchecked(p)?;
        let mut out = Vec::new();
        let lam = data.right_shifts_at(p)?;
        let r = data.r().evaluate_real(p)?;
        for (i, &s) in lam.iter().enumerate() {
            let dir = r.columns(i, 1).into_owned();
            let res = (|| -> Result<(f64, f64)> {
                let (lu, _) = full.checked_pencil(s)?;
                let h_r = &full.c * lu.solve(&(&full.b * &dir));
                let (hr, rc) = reduced.transfer_reporting(s)?;
                Ok((relative(&h_r, &(hr * &dir)), rc))
            })();
            out.push(record(p, i, Side::Right, s, res));
        }
        if let Some(left) = data.left() {
            let mu = data.left_shifts_at(p)?.expect("two-sided");
            let l = left.l.evaluate_real(p)?;
            for (i, &s) in mu.iter().enumerate() {
                let dir = l.columns(i, 1).transpose();
                let res = (|| -> Result<(f64, f64)> {
                    let (lu, _) = full.checked_pencil(s)?;
                    // ℓᵀ C (sE - A)⁻¹ B = ((sE - A)⁻ᵀ Cᵀ ℓ)ᵀ B
                    let y = lu.solve_transpose(&(full.c.transpose() * dir.transpose()));
                    let lh = y.transpose() * &full.b;
                    let (hr, rc) = reduced.transfer_reporting(s)?;
                    Ok((relative(&lh, &(&dir * hr)), rc))
                })();
                out.push(record(p, i, Side::Left, s, res));
            }
        }
        Ok(out)
    };
    let nested: Vec<Vec<InterpolationRecord>> = p_samples.iter().map(per_p).collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn relative(exact: &linalg::CMatrix, approx: &linalg::CMatrix) -> f64 {
    let num = linalg::frobenius(&(exact - approx));
    let den = linalg::frobenius(exact);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn record(p: &[f64], index: usize, side: Side, shift: Complex64, res: Result<(f64, f64)>) -> InterpolationRecord {
    let (residual, rom_rcond, error) = match res {
        Ok((r, rc)) => (Some(r), Some(rc), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    InterpolationRecord {
        p: p.to_vec(),
        index,
        side,
        shift,
        residual,
        rom_rcond,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{self, ExampleId};
    use crate::rom::build_offline;
    use crate::series::MatrixSeries;
    use crate::solver::{compute_basis, BasisSeries, SolveRun, StopReason};
    use crate::linalg::CMatrix;

    fn bundle_for(id: ExampleId) -> (examples::Example, RomBundle) {
        let ex = examples::build(id);
        let basis = compute_basis(&ex.system, &ex.data, &ex.config).unwrap();
        let b = build_offline(&ex.system, &basis).unwrap();
        (ex, b)
    }

    #[test]
    fn axis_parsing_and_values() {
        let a: Axis = "lin:0:1:5".parse().unwrap();
        assert_eq!(a.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let l: Axis = "log:1e-2:1e1:4".parse().unwrap();
        let v = l.values();
        assert!((v[0] - 1e-2).abs() < 1e-17 && (v[3] - 10.0).abs() < 1e-13);
        assert!((v[1] - 0.1).abs() < 1e-15);
        assert_eq!("0.5".parse::<Axis>().unwrap().values(), vec![0.5]);
        assert!("log:0:1:3".parse::<Axis>().is_err());
        assert!("lin:1:0:3".parse::<Axis>().is_err());
        assert!("lin:0:1:0".parse::<Axis>().is_err());
        assert!("cubic:0:1:3".parse::<Axis>().is_err());
    }

    #[test]
    fn toy1_interpolation_exact_for_every_parameter() {
        let (ex, b) = bundle_for(ExampleId::Toy1);
        let samples = vec![vec![0.0], vec![0.5], vec![1.0]];
        let recs = check_interpolation(&ex.system, &ex.data, &b, &samples).unwrap();
        assert_eq!(recs.len(), 3 * 4);
        for r in recs {
            assert!(r.residual.unwrap() <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn full_order_projection_has_zero_residual() {
        let ex = examples::build(ExampleId::Toy2);
        let id = MatrixSeries::constant(CMatrix::identity(3, 3), 1);
        let run = SolveRun {
            degrees_computed: 0,
            stop_reason: StopReason::ExactTermination,
            degree_weights: vec![],
            retained_terms: 1,
        };
        let basis = BasisSeries {
            v: id,
            w: None,
            v_run: run,
            w_run: None,
            tol: 1.0,
        };
        let b = build_offline(&ex.system, &basis).unwrap();
        let data = crate::interp::make_constant_data(
            &[Complex64::new(0.1, 0.0), Complex64::new(5.0, 0.0), Complex64::new(2.0, 1.0)],
            CMatrix::from_element(1, 3, Complex64::new(1.0, 0.0)),
            None,
            1,
        )
        .unwrap();
        let recs = check_interpolation(&ex.system, &data, &b, &[vec![0.3], vec![0.9]]).unwrap();
        assert!(recs.iter().all(|r| r.residual.unwrap() < 1e-15));
    }

    #[test]
    fn single_node_grid() {
        let (ex, b) = bundle_for(ExampleId::Toy2);
        let grid = GridSpec {
            s: FrequencyAxis::Fixed(Complex64::new(0.7, 0.0)),
            p_axes: vec![Axis::single(0.4)],
        };
        let g = error_grid(&ex.system, &b, &grid, None).unwrap();
        assert_eq!(g.nodes.len(), 1);
        let s = Complex64::new(0.7, 0.0);
        let h = ex.system.transfer_eval(s, &[0.4]).unwrap();
        let hr = b.transfer_eval(s, &[0.4]).unwrap();
        assert_eq!(g.nodes[0].abs_err, (h - hr)[(0, 0)].norm());
        assert_eq!(g.to_csv().lines().count(), 2);
    }

    #[test]
    fn grid_refinement_keeps_shared_nodes() {
        let (ex, b) = bundle_for(ExampleId::Toy2);
        let coarse = GridSpec {
            s: FrequencyAxis::Sweep { axis: Axis::log(1e-2, 1e1, 4), imaginary: false },
            p_axes: vec![Axis::linear(0.0, 1.0, 3)],
        };
        let fine = GridSpec {
            s: FrequencyAxis::Sweep { axis: Axis::log(1e-2, 1e1, 7), imaginary: false },
            p_axes: vec![Axis::linear(0.0, 1.0, 5)],
        };
        let gc = error_grid(&ex.system, &b, &coarse, None).unwrap();
        let gf = error_grid(&ex.system, &b, &fine, None).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let a = gc.node(i, j);
                let f = gf.node(2 * i, 2 * j);
                assert!((a.s - f.s).norm() <= 1e-15 * a.s.norm());
                assert!((a.abs_err - f.abs_err).abs() <= 1e-15 + 1e-9 * a.abs_err);
            }
        }
        assert!(gc.nodes.iter().all(|n| n.abs_err >= 0.0 && n.abs_err.is_finite()));
    }

    #[test]
    fn toy1_grid_exact_where_minimal() {
        let (ex, b) = bundle_for(ExampleId::Toy1);
        let grid = GridSpec {
            s: FrequencyAxis::Sweep { axis: Axis::log(1e-2, 1e2, 30), imaginary: true },
            p_axes: vec![Axis::linear(0.0, 1.0, 2)],
        };
        let g = error_grid(&ex.system, &b, &grid, None).unwrap();
        assert!(g.max_abs_err() <= 1e-10, "{}", g.max_abs_err());
    }

    #[test]
    fn csv_is_deterministic() {
        let (ex, b) = bundle_for(ExampleId::Toy2);
        let grid = GridSpec {
            s: FrequencyAxis::Sweep { axis: Axis::log(1e-2, 1e1, 5), imaginary: true },
            p_axes: vec![Axis::linear(0.0, 1.0, 3)],
        };
        let a = error_grid(&ex.system, &b, &grid, None).unwrap().to_csv();
        let c = error_grid(&ex.system, &b, &grid, None).unwrap().to_csv();
        assert_eq!(a, c);
        assert!(a.starts_with("s_real,s_imag,p_1,abs_err,rel_err\n"));
        assert_eq!(a.lines().count(), 16);
    }

    #[test]
    fn shift_axis_needs_data() {
        let (ex, b) = bundle_for(ExampleId::Toy2);
        let grid = GridSpec {
            s: FrequencyAxis::Shift(1),
            p_axes: vec![Axis::linear(0.0, 1.0, 3)],
        };
        assert!(error_grid(&ex.system, &b, &grid, None).is_err());
        let g = error_grid(&ex.system, &b, &grid, Some(&ex.data)).unwrap();
        assert!(g.nodes.iter().all(|n| n.s == Complex64::new(0.1, 0.0)));
    }
}
