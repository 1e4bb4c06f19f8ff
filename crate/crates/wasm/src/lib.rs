//! Browser bindings. Every export takes plain values and returns a JSON string.

use serde_json::{json, Value};
use stepbound::problem::{aligned_anisotropic, ProblemSpec};
use stepbound::{compute_report, ReportOptions, RkScheme, SurrogatePolicy};
use wasm_bindgen::prelude::*;

/// Keeps the exact eigenvalue cheap enough for a page.
const DOF_CAP: usize = 2000;
/// Cells drawn on the canvas at most.
const DRAW_LIMIT: usize = 4000;

fn opts() -> ReportOptions {
    ReportOptions {
        dof_cap: DOF_CAP,
        ..ReportOptions::default()
    }
}

/// `spec`: {"mesh": {...}, "order": m, "diffusion": {...}, "policy": "..."}
pub fn bound_report_json(spec: &str) -> Result<String, String> {
    let spec: ProblemSpec = serde_json::from_str(spec).map_err(|e| e.to_string())?;
    let system = spec.assemble().map_err(|e| e.to_string())?;
    let report = compute_report(&system, &opts()).map_err(|e| e.to_string())?;
    let mesh = &system.mesh;
    let drawn =
        (mesh.n_elements() <= DRAW_LIMIT).then(|| json!({"vertices": mesh.vertices(), "elements": mesh.elements()}));
    Ok(json!({"report": report, "mesh": drawn}).to_string())
}

/// |R(−x)| on [0, x_max] plus the real stability boundary.
pub fn stability_profile_json(scheme: &str, x_max: f64, samples: usize) -> Result<String, String> {
    let scheme = RkScheme::from_name(scheme).map_err(|e| e.to_string())?;
    if !(x_max > 0.0) || samples < 2 {
        return Err("need x_max > 0 and at least two samples".into());
    }
    let xs: Vec<f64> = (0..samples).map(|i| x_max * i as f64 / (samples - 1) as f64).collect();
    let r: Vec<f64> = xs.iter().map(|&x| scheme.eval_stability(-x).abs()).collect();
    Ok(json!({
        "scheme": scheme.name(),
        "boundary": scheme.real_stability_boundary(),
        "coefficients": scheme.stability_poly(),
        "x": xs,
        "abs_r": r,
    })
    .to_string())
}

/// Zhu–Du and geometric bounds on the aligned family for log-spaced a in [1, a_max].
pub fn anisotropy_gap_json(n: usize, order: usize, a_max: f64, points: usize) -> Result<String, String> {
    if n == 0 || !(a_max >= 1.0) || points < 2 {
        return Err("need n ≥ 1, a_max ≥ 1 and at least two points".into());
    }
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let a = a_max.powf(i as f64 / (points - 1) as f64);
        let system = aligned_anisotropic(n, a, order, SurrogatePolicy::HrzDiagonal)
            .assemble()
            .map_err(|e| e.to_string())?;
        let r = compute_report(&system, &opts()).map_err(|e| e.to_string())?;
        rows.push(json!({
            "a": a,
            "zhudu": r.upper_zhudu,
            "geometric": r.upper_geometric,
            "exact": r.lambda_max_exact,
        }));
    }
    Ok(Value::Array(rows).to_string())
}

#[wasm_bindgen]
pub fn bound_report(spec: &str) -> Result<String, JsError> {
    bound_report_json(spec).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn stability_profile(scheme: &str, x_max: f64, samples: usize) -> Result<String, JsError> {
    stability_profile_json(scheme, x_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn anisotropy_gap(n: usize, order: usize, a_max: f64, points: usize) -> Result<String, JsError> {
    anisotropy_gap_json(n, order, a_max, points).map_err(|e| JsError::new(&e))
}
