//! JSON-shaped operations behind the demo page.
//!
//! Reductions are cached per (example, tolerance) so that moving a slider on
//! the page only repeats the cheap online step.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use pmor::examples::{build, Example, ExampleId};
use pmor::rom::{build_offline, RomBundle};
use pmor::solver::{compute_basis, BasisSeries, SolverConfig};
use pmor::verify::{error_grid, Axis, FrequencyAxis, GridSpec};
use serde::Serialize;

/// Largest grid the page may request, to keep the tab responsive.
pub const MAX_NODES: usize = 40_000;

struct Reduced {
    example: Rc<Example>,
    basis: BasisSeries,
    bundle: RomBundle,
}

thread_local! {
    static EXAMPLES: RefCell<HashMap<ExampleId, Rc<Example>>> = RefCell::new(HashMap::new());
    static REDUCED: RefCell<HashMap<(ExampleId, u64), Rc<Reduced>>> = RefCell::new(HashMap::new());
}

pub fn example_names() -> Vec<&'static str> {
    ExampleId::ALL.iter().map(|id| id.name()).collect()
}

fn example(id: ExampleId) -> Rc<Example> {
    EXAMPLES.with(|cache| cache.borrow_mut().entry(id).or_insert_with(|| Rc::new(build(id))).clone())
}

fn reduced(name: &str, tol: f64) -> Result<Rc<Reduced>, String> {
    let id: ExampleId = name.parse()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(format!("tolerance must be positive, got {tol}"));
    }
    if let Some(hit) = REDUCED.with(|c| c.borrow().get(&(id, tol.to_bits())).cloned()) {
        return Ok(hit);
    }
    let example = example(id);
    let cfg = SolverConfig { tol, ..example.config.clone() };
    let basis = compute_basis(&example.system, &example.data, &cfg).map_err(|e| e.to_string())?;
    let bundle = build_offline(&example.system, &basis).map_err(|e| e.to_string())?;
    let entry = Rc::new(Reduced { example, basis, bundle });
    REDUCED.with(|c| c.borrow_mut().insert((id, tol.to_bits()), entry.clone()));
    Ok(entry)
}

/// Parameter point with the first coordinate set to `p` and the rest centred.
fn point(ex: &Example, p: f64) -> Vec<f64> {
    let mut pt = ex.system.param_box().center();
    pt[0] = p;
    pt
}

#[derive(Debug, Serialize)]
pub struct Run {
    pub stop_reason: String,
    pub degrees_computed: usize,
    pub degree_weights: Vec<f64>,
    pub retained_terms: usize,
}

#[derive(Debug, Serialize)]
pub struct Reduction {
    pub example: String,
    pub states: usize,
    pub order: usize,
    pub tol: f64,
    pub p_range: [f64; 2],
    pub v: Run,
    pub w: Option<Run>,
    pub bundle_terms: usize,
}

fn run(r: &pmor::solver::SolveRun) -> Run {
    Run {
        stop_reason: r.stop_reason.to_string(),
        degrees_computed: r.degrees_computed,
        degree_weights: r.degree_weights.clone(),
        retained_terms: r.retained_terms,
    }
}

pub fn reduce(name: &str, tol: f64) -> Result<Reduction, String> {
    let r = reduced(name, tol)?;
    let b = &r.bundle;
    let bx = r.example.system.param_box();
    Ok(Reduction {
        example: r.example.id.name().to_string(),
        states: r.example.system.states(),
        order: b.order(),
        tol,
        p_range: [bx.lower()[0], bx.upper()[0]],
        v: run(&r.basis.v_run),
        w: r.basis.w_run.as_ref().map(run),
        bundle_terms: b.ehat.len() + b.ahat.len() + b.bhat.len() + b.chat.len(),
    })
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub omega: Vec<f64>,
    pub full: Vec<f64>,
    pub reduced: Vec<f64>,
}

fn check_count(n: usize) -> Result<(), String> {
    if n == 0 || n > MAX_NODES {
        return Err(format!("grid of {n} nodes is outside 1..={MAX_NODES}"));
    }
    Ok(())
}

/// Frobenius norms of both transfer functions at `s = iω`, log-spaced `ω`.
pub fn transfer_sweep(name: &str, tol: f64, p: f64, w_lo: f64, w_hi: f64, count: usize) -> Result<Sweep, String> {
    check_count(count)?;
    let r = reduced(name, tol)?;
    let grid = GridSpec {
        s: FrequencyAxis::Sweep { axis: Axis::log(w_lo, w_hi, count), imaginary: true },
        p_axes: point(&r.example, p).into_iter().map(Axis::single).collect(),
    };
    let g = error_grid(&r.example.system, &r.bundle, &grid, None).map_err(|e| e.to_string())?;
    Ok(Sweep {
        omega: g.nodes.iter().map(|n| n.s.im).collect(),
        full: g.nodes.iter().map(|n| n.h_norm).collect(),
        reduced: g.nodes.iter().map(|n| n.hhat_norm).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub omega: Vec<f64>,
    pub p: Vec<f64>,
    /// `err[i][j]` at `omega[i]`, `p[j]`; null where a solve failed.
    pub err: Vec<Vec<Option<f64>>>,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
}

/// Absolute error over log-spaced `ω` and the full range of the first parameter.
pub fn error_heatmap(name: &str, tol: f64, w_lo: f64, w_hi: f64, ns: usize, np: usize) -> Result<Heatmap, String> {
    check_count(ns.saturating_mul(np))?;
    let r = reduced(name, tol)?;
    let bx = r.example.system.param_box();
    let centre = bx.center();
    let mut p_axes: Vec<Axis> = centre.iter().map(|&c| Axis::single(c)).collect();
    p_axes[0] = Axis::linear(bx.lower()[0], bx.upper()[0], np);
    let grid = GridSpec { s: FrequencyAxis::Sweep { axis: Axis::log(w_lo, w_hi, ns), imaginary: true }, p_axes };
    let g = error_grid(&r.example.system, &r.bundle, &grid, None).map_err(|e| e.to_string())?;
    let err = (0..ns)
        .map(|i| {
            (0..np)
                .map(|j| Some(g.node(i, j).abs_err).filter(|x| !x.is_nan()))
                .collect()
        })
        .collect();
    Ok(Heatmap {
        omega: (0..ns).map(|i| g.node(i, 0).s.im).collect(),
        p: (0..np).map(|j| g.node(0, j).p[0]).collect(),
        err,
        max_abs_err: g.max_abs_err(),
        max_rel_err: g.max_rel_err(),
    })
}
