//! Browser bindings for the reduction demo.
//!
//! Everything the page needs goes through [`api`], which is plain Rust and
//! tested natively. The exported functions only move JSON across the
//! boundary.

pub mod api;

use wasm_bindgen::prelude::*;

fn to_js<T: serde::Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// Names of the bundled examples, as a JSON array.
#[wasm_bindgen]
pub fn examples() -> String {
    serde_json::to_string(&api::example_names()).unwrap_or_default()
}

/// Builds the reduced model and reports how fast its coefficients decay.
#[wasm_bindgen]
pub fn reduce(example: &str, tol: f64) -> Result<String, JsValue> {
    to_js(api::reduce(example, tol))
}

/// `|H|` and `|Ĥ|` along the imaginary axis at a fixed parameter.
#[wasm_bindgen]
pub fn transfer_sweep(example: &str, tol: f64, p: f64, w_lo: f64, w_hi: f64, count: usize) -> Result<String, JsValue> {
    to_js(api::transfer_sweep(example, tol, p, w_lo, w_hi, count))
}

/// Error over a (frequency, first parameter) grid.
#[wasm_bindgen]
pub fn error_heatmap(example: &str, tol: f64, w_lo: f64, w_hi: f64, ns: usize, np: usize) -> Result<String, JsValue> {
    to_js(api::error_heatmap(example, tol, w_lo, w_hi, ns, np))
}
