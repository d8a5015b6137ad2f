use num_complex::Complex64;
use proptest::prelude::*;

use pmor::examples::{build, ExampleId};
use pmor::interp::make_constant_data;
use pmor::io;
use pmor::linalg::{self, BandedLu, CMatrix, DenseLu, Factorization};
use pmor::model::ParametricLTI;
use pmor::rom::build_offline;
use pmor::series::{MatrixSeries, MultiIndex, ParamBox};
use pmor::solver::{compute_basis, SolverConfig};
use pmor::verify::{error_grid, Axis, FrequencyAxis, GridSpec};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(complex(), rows * cols).prop_map(move |v| CMatrix::from_vec(rows, cols, v))
}

/// Series in `nparams` variables with random terms of total degree ≤ 3.
fn series(rows: usize, cols: usize, nparams: usize) -> impl Strategy<Value = MatrixSeries> {
    let index = prop::collection::vec(0u32..=3, nparams).prop_filter("degree at most 3", |e| e.iter().sum::<u32>() <= 3);
    prop::collection::btree_map(index, matrix(rows, cols), 0..5).prop_map(move |terms| {
        MatrixSeries::from_terms(rows, cols, nparams, terms.into_iter().map(|(e, m)| (MultiIndex::new(e), m))).unwrap()
    })
}

fn point(nparams: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, nparams)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn convolution_matches_pointwise_product(a in series(3, 2, 2), b in series(2, 4, 2), p in point(2)) {
        let lhs = a.convolve(&b).unwrap().evaluate_real(&p).unwrap();
        let rhs = a.evaluate_real(&p).unwrap() * b.evaluate_real(&p).unwrap();
        prop_assert!(max_abs(&(lhs - rhs)) <= 1e-10);
    }

    #[test]
    fn evaluation_is_linear(a in series(2, 3, 2), b in series(2, 3, 2), k in complex(), p in point(2)) {
        let sum = a.add(&b.scale(k)).unwrap().evaluate_real(&p).unwrap();
        let parts = a.evaluate_real(&p).unwrap() + b.evaluate_real(&p).unwrap() * k;
        prop_assert!(max_abs(&(sum - parts)) <= 1e-12);
    }

    #[test]
    fn transpose_commutes_with_evaluation(a in series(2, 3, 1), p in point(1)) {
        let t = a.transpose().evaluate_real(&p).unwrap();
        prop_assert_eq!(t, a.evaluate_real(&p).unwrap().transpose());
    }

    #[test]
    fn truncation_is_a_weight_filter(a in series(2, 2, 2), tol in 1e-6f64..10.0) {
        let bx = ParamBox::unit(2);
        let t = a.truncate(tol, &bx);
        for (i, m) in a.iter() {
            let kept = a.term_weight(i, &bx) > tol;
            prop_assert_eq!(t.get(i), if kept { Some(m) } else { None });
        }
        prop_assert!(t.iter().all(|(i, _)| a.get(i).is_some()));
    }

    #[test]
    fn graded_order_and_counts(nparams in 1usize..4, degree in 0usize..6) {
        let idx = MultiIndex::of_degree(nparams, degree);
        // C(degree + nparams - 1, nparams - 1)
        let mut expected = 1usize;
        for k in 1..nparams {
            expected = expected * (degree + k) / k;
        }
        prop_assert_eq!(idx.len(), expected);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.iter().all(|i| i.degree() == degree));
        let next = MultiIndex::of_degree(nparams, degree + 1);
        prop_assert!(idx.last().unwrap() < next.first().unwrap());
    }

    #[test]
    fn samples_stay_in_box(lower in prop::collection::vec(-5.0f64..0.0, 3), width in prop::collection::vec(0.1f64..5.0, 3), count in 1usize..40) {
        let upper: Vec<f64> = lower.iter().zip(&width).map(|(l, w)| l + w).collect();
        let bx = ParamBox::new(lower, upper).unwrap();
        let pts = bx.sample(count);
        prop_assert_eq!(pts.len(), count);
        prop_assert_eq!(&pts[0], &bx.center());
        prop_assert!(pts.iter().all(|p| bx.contains(p)));
    }

    #[test]
    fn dense_lu_residual(m in matrix(6, 6), b in matrix(6, 2)) {
        let shifted = &m + CMatrix::identity(6, 6) * Complex64::new(3.0, 0.0);
        let lu = DenseLu::new(&shifted);
        prop_assume!(lu.rcond() > 1e-8);
        let x = lu.solve(&b);
        prop_assert!(max_abs(&(&shifted * &x - &b)) <= 1e-12);
        let y = lu.solve_transpose(&b);
        prop_assert!(max_abs(&(shifted.transpose() * &y - &b)) <= 1e-12);
    }

    #[test]
    fn banded_lu_matches_dense(n in 5usize..30, kl in 0usize..3, ku in 0usize..3, seed in prop::collection::vec(complex(), 30 * 7), b in matrix(30, 1)) {
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i > j + kl || j > i + ku {
                Complex64::new(0.0, 0.0)
            } else if i == j {
                Complex64::new(4.0, 0.0) + seed[i * 7 + 3]
            } else {
                seed[i * 7 + (j + 3 - i)]
            }
        });
        let rhs = b.rows(0, n).into_owned();
        let band = BandedLu::new(&m, kl, ku);
        let dense = DenseLu::new(&m);
        prop_assert_eq!(band.bandwidths(), (kl, ku));
        let (xb, xd) = (band.solve(&rhs), dense.solve(&rhs));
        prop_assert!(max_abs(&(&xb - &xd)) <= 1e-10 * (1.0 + max_abs(&xd)));
        prop_assert!(max_abs(&(&m * &xb - &rhs)) <= 1e-11);
        let yt = band.solve_transpose(&rhs);
        prop_assert!(max_abs(&(m.transpose() * &yt - &rhs)) <= 1e-11);
        let (rb, rd) = (band.rcond(), dense.rcond());
        prop_assert!(rb > 0.0 && rd > 0.0);
        prop_assert!((rb / rd).max(rd / rb) < 10.0, "{} vs {}", rb, rd);
    }

    #[test]
    fn real_data_gives_real_coefficients(
        diag in prop::collection::vec(1.0f64..4.0, 4),
        coupling in prop::collection::vec(-0.3f64..0.3, 16),
        bvec in prop::collection::vec(-1.0f64..1.0, 4),
        shifts in prop::collection::vec(0.1f64..3.0, 2),
    ) {
        let re = |x: f64| Complex64::new(x, 0.0);
        let a0 = CMatrix::from_fn(4, 4, |i, j| if i == j { re(-diag[i]) } else { re(0.0) });
        let a1 = CMatrix::from_fn(4, 4, |i, j| re(coupling[i * 4 + j]));
        let a = MatrixSeries::univariate(vec![a0, a1]).unwrap();
        let b = MatrixSeries::constant(CMatrix::from_fn(4, 1, |i, _| re(bvec[i])), 1);
        let c = MatrixSeries::constant(CMatrix::from_fn(1, 4, |_, j| re(1.0 + j as f64)), 1);
        let sys = ParametricLTI::with_identity_e(a, b, c, ParamBox::unit(1)).unwrap();
        prop_assume!((shifts[0] - shifts[1]).abs() > 1e-3);
        let data = make_constant_data(&[re(shifts[0]), re(shifts[1])], CMatrix::from_element(1, 2, re(1.0)), None, 1).unwrap();
        let basis = compute_basis(&sys, &data, &SolverConfig::with_tol(1e-8)).unwrap();
        prop_assert!(basis.v.is_real());
        let bundle = build_offline(&sys, &basis).unwrap();
        prop_assert!(bundle.ahat.is_real() && bundle.chat.is_real());
    }

    #[test]
    fn complex_tokens_round_trip(re in any::<f64>(), im in any::<f64>()) {
        prop_assume!(re.is_finite() && im.is_finite());
        let z = Complex64::new(re, im);
        let back = io::parse_complex(&io::format_complex(z)).unwrap();
        prop_assert_eq!(back.re.to_bits(), re.to_bits());
        prop_assert_eq!(back.im.to_bits(), im.to_bits());
    }

    #[test]
    fn series_text_round_trip(a in series(3, 2, 2)) {
        prop_assert_eq!(io::parse_series(&io::write_series(&a)).unwrap(), a);
    }

    #[test]
    fn axis_values(lo in 1e-3f64..10.0, span in 0.1f64..100.0, count in 1usize..50) {
        for axis in [Axis::linear(lo, lo + span, count), Axis::log(lo, lo + span, count)] {
            let v = axis.values();
            prop_assert_eq!(v.len(), count);
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
            prop_assert!((v[0] - lo).abs() <= 1e-12 * lo);
            if count > 1 {
                prop_assert!((v[count - 1] - (lo + span)).abs() <= 1e-12 * (lo + span));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn error_grid_nonnegative_and_refinable(lo in 1e-3f64..1.0, span in 0.5f64..20.0, ns in 2usize..6, np in 2usize..5, imaginary in any::<bool>()) {
        let ex = build(ExampleId::Toy2);
        let basis = compute_basis(&ex.system, &ex.data, &ex.config).unwrap();
        let b = build_offline(&ex.system, &basis).unwrap();
        let spec = |ns: usize, np: usize| GridSpec {
            s: FrequencyAxis::Sweep { axis: Axis::log(lo, lo + span, ns), imaginary },
            p_axes: vec![Axis::linear(0.0, 1.0, np)],
        };
        let coarse = error_grid(&ex.system, &b, &spec(ns, np), None).unwrap();
        let fine = error_grid(&ex.system, &b, &spec(2 * ns - 1, 2 * np - 1), None).unwrap();
        prop_assert!(coarse.nodes.iter().all(|n| n.abs_err >= 0.0 && n.abs_err.is_finite() && n.rel_err >= 0.0));
        for i in 0..ns {
            for j in 0..np {
                let (c, f) = (coarse.node(i, j), fine.node(2 * i, 2 * j));
                prop_assert!((c.s - f.s).norm() <= 1e-13 * c.s.norm());
                prop_assert!((c.abs_err - f.abs_err).abs() <= 1e-12 + 1e-8 * c.abs_err);
            }
        }
    }
}

#[test]
fn bandwidth_detection() {
    let m = CMatrix::from_fn(5, 5, |i, j| if j == i + 2 || i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
    assert_eq!(linalg::bandwidth(&m), (0, 2));
}
