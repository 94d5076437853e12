//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes and returns plain numbers so the page needs no glue
//! beyond what `wasm-bindgen` generates.

use cvmbqc::engine::{OutcomeSource, Resource};
use cvmbqc::protocols::{identity_chain, offline_squeezer, offline_teleport, squeezer_four_step};
use cvmbqc::{db_to_r, GaussianState};
use wasm_bindgen::prelude::*;

fn resource(db: f64) -> Result<Resource, String> {
    if !(db.is_finite() && db >= 0.0) {
        return Err(format!("squeezing must be a non-negative number of dB, got {db}"));
    }
    Ok(Resource::new(db_to_r(db)))
}

fn vacuum() -> GaussianState {
    GaussianState::vacuum(1).expect("one mode")
}

/// `[S11, S12, S21, S22, N11, N12, N22, Var x, Cov xp, Var p, deviation, offline gap]`
/// for the four-step squeezer on vacuum. The last entry is `‖S - S_offline‖_F`
/// against the off-line squeezer with `r = κ²`.
pub fn squeezer_summary(kappa: f64, db: f64) -> Result<Vec<f64>, String> {
    if !kappa.is_finite() {
        return Err("kappa must be finite".into());
    }
    let res = resource(db)?;
    let src = OutcomeSource::Seeded(0);
    let rep = squeezer_four_step(kappa, res, &vacuum(), &src).map_err(|e| e.to_string())?;
    let off = offline_squeezer(&vacuum(), res, kappa * kappa, &src).map_err(|e| e.to_string())?;
    let (s, n, c) = (&rep.channel.s, &rep.channel.n, rep.output.cov());
    Ok(vec![
        s[(0, 0)],
        s[(0, 1)],
        s[(1, 0)],
        s[(1, 1)],
        n[(0, 0)],
        n[(0, 1)],
        n[(1, 1)],
        c[(0, 0)],
        c[(0, 1)],
        c[(1, 1)],
        rep.deviation,
        (rep.channel.s - off.channel.s).norm(),
    ])
}

/// Vacuum teleportation fidelity at `points` evenly spaced squeezing values in `[0, db_max]`.
pub fn fidelity_curve(db_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    (0..points)
        .map(|i| {
            let db = db_max * i as f64 / (points - 1) as f64;
            let rep = offline_teleport(&vacuum(), resource(db)?, &OutcomeSource::Seeded(i as u64))
                .map_err(|e| e.to_string())?;
            rep.fidelity.ok_or_else(|| "fidelity unavailable".to_string())
        })
        .collect()
}

/// `trace(N)` of cluster teleportation chains with 2..=n_max modes.
pub fn chain_noise(n_max: usize, db: f64) -> Result<Vec<f64>, String> {
    if !(2..=64).contains(&n_max) {
        return Err(format!("chain length must be in 2..=64, got {n_max}"));
    }
    let res = resource(db)?;
    (2..=n_max)
        .map(|n| {
            identity_chain(n, res, &vacuum(), &OutcomeSource::Seeded(n as u64))
                .map(|r| r.noise_trace)
                .map_err(|e| e.to_string())
        })
        .collect()
}

#[wasm_bindgen(js_name = squeezerSummary)]
pub fn squeezer_summary_js(kappa: f64, db: f64) -> Result<Vec<f64>, JsValue> {
    squeezer_summary(kappa, db).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fidelityCurve)]
pub fn fidelity_curve_js(db_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    fidelity_curve(db_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = chainNoise)]
pub fn chain_noise_js(n_max: usize, db: f64) -> Result<Vec<f64>, JsValue> {
    chain_noise(n_max, db).map_err(|e| JsValue::from_str(&e))
}
