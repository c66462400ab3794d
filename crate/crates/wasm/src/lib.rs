//! WebAssembly bindings behind the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array` so the page can plot it
//! directly. The `*_values` functions hold the logic and are plain Rust so
//! they can be tested natively.

use wasm_bindgen::prelude::*;

use ncrw::correlations::density_profile as profile;
use ncrw::kernels::{Gauge, KernelSpec, KernelVariant, SpaceTimePoint};
use ncrw::martingale::LatticeSpec;
use ncrw::relaxation::relaxation_pair;
use ncrw::Tolerances;

/// Upper bound on sites or grid points per call, to keep the page responsive.
pub const MAX_POINTS: usize = 2001;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn window(lo: i64, hi: i64) -> Result<std::ops::RangeInclusive<i64>, String> {
    if hi < lo {
        return Err(format!("empty window {lo}:{hi}"));
    }
    if (hi - lo) as u64 >= MAX_POINTS as u64 {
        return Err(format!("window {lo}:{hi} has more than {MAX_POINTS} sites"));
    }
    Ok(lo..=hi)
}

/// `ρ(t, x)` for `x = lo..=hi`.
pub fn density_values(spec: &str, t: f64, lo: i64, hi: i64) -> Result<Vec<f64>, String> {
    let variant: KernelVariant = spec.parse().map_err(err)?;
    let spec = KernelSpec::new(variant, Gauge::Probability);
    profile(&spec.with_tolerances(Tolerances::default()), t, window(lo, hi)?).map_err(err)
}

/// `K(s, x; t, y)` for `y = lo..=hi`.
pub fn kernel_values(spec: &str, gauge: &str, s: f64, x: i64, t: f64, lo: i64, hi: i64) -> Result<Vec<f64>, String> {
    let spec = KernelSpec::new(spec.parse().map_err(err)?, gauge.parse().map_err(err)?);
    let tol = Tolerances::default();
    let p = SpaceTimePoint::new(s, x).map_err(err)?;
    window(lo, hi)?
        .map(|y| spec.eval(p, SpaceTimePoint::new(t, y).map_err(err)?, &tol).map_err(err))
        .collect()
}

/// Equal-time gap `|K_{aZ}(τ, x; τ, x+dx) - K_ρ(0, dx)|` for `dx = -dx_max..=dx_max`,
/// laid out row by row, one row per `τ`.
pub fn relaxation_values(a: i64, x: i64, dx_max: i64, taus: &[f64]) -> Result<Vec<f64>, String> {
    let a = LatticeSpec::new(a).map_err(err)?;
    let dxs = window(-dx_max, dx_max)?;
    if taus.len() * dxs.clone().count() > MAX_POINTS {
        return Err(format!("more than {MAX_POINTS} cells requested"));
    }
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for &tau in taus {
        for dx in dxs.clone() {
            let (lattice, stationary) = relaxation_pair(a, 0.0, x, 0.0, x + dx, tau, &tol).map_err(err)?;
            out.push((lattice - stationary).abs());
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn density(spec: &str, t: f64, lo: i64, hi: i64) -> Result<Vec<f64>, JsError> {
    density_values(spec, t, lo, hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn kernel_row(spec: &str, gauge: &str, s: f64, x: i64, t: f64, lo: i64, hi: i64) -> Result<Vec<f64>, JsError> {
    kernel_values(spec, gauge, s, x, t, lo, hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn relaxation(a: i64, x: i64, dx_max: i64, taus: Vec<f64>) -> Result<Vec<f64>, JsError> {
    relaxation_values(a, x, dx_max, &taus).map_err(|e| JsError::new(&e))
}
