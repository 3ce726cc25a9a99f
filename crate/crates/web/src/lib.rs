//! Browser bindings: three JSON-in, JSON-out operations for the static demo
//! page in `www/`.

pub mod api;

use wasm_bindgen::prelude::*;

/// Simulates a tomography record; returns the record JSON.
#[wasm_bindgen(js_name = simulateSeries)]
pub fn simulate_series(config: &str) -> Result<String, JsError> {
    api::simulate_series(config).map_err(|e| JsError::new(&e))
}

/// Simulates the stencil nodes and runs the estimator; returns `{report, truth}`.
#[wasm_bindgen]
pub fn estimate(config: &str) -> Result<String, JsError> {
    api::estimate(config).map_err(|e| JsError::new(&e))
}

/// Step-size sweep; returns `{rows, slope}`.
#[wasm_bindgen]
pub fn sweep(config: &str) -> Result<String, JsError> {
    api::sweep(config).map_err(|e| JsError::new(&e))
}
