//! Browser bindings. Every export takes and returns JSON text; the same
//! functions without the `wasm_bindgen` wrapper live in [`api`].

use wasm_bindgen::prelude::*;

pub mod api;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Utility curve, concave envelope over the prior's hull and the LP solution.
#[wasm_bindgen]
pub fn persuade(request: &str) -> Result<String, JsValue> {
    js(api::persuade(request))
}

/// One seeded game; checkpoints and the final summary.
#[wasm_bindgen]
pub fn play(request: &str) -> Result<String, JsValue> {
    js(api::play(request))
}

/// Calibration report of a typed state and forecast sequence.
#[wasm_bindgen]
pub fn score(request: &str) -> Result<String, JsValue> {
    js(api::score(request))
}
