//! Browser bindings: three curve generators for the demo page in `www/`.
//!
//! Each exported function returns a JSON string; the plain Rust functions
//! behind them are usable (and tested) off the browser.

use corrbound::bounds::{BoundId, CmaxMode};
use corrbound::linear_response::{response_sweep, ResponseKind};
use corrbound::markov::steady_state;
use corrbound::sweep::{evaluate, Model};
use corrbound::{ProbVector, RateMatrix, ScoreVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 2000;
const MAX_MODELS: usize = 200;

#[derive(Debug, Serialize, PartialEq)]
pub struct Series {
    pub label: String,
    pub y: Vec<f64>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Curves {
    pub t: Vec<f64>,
    pub series: Vec<Series>,
    /// Time at which the sine bound leaves its validity domain, if it does
    /// on the plotted range.
    pub domain_edge: Option<f64>,
}

fn grid(t_max: f64, points: usize, from_zero: bool) -> Result<Vec<f64>, String> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err("t_max must be positive".into());
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be between 2 and {MAX_POINTS}"));
    }
    let start = if from_zero { 0.0 } else { t_max / points as f64 };
    Ok((0..points)
        .map(|i| start + (t_max - start) * i as f64 / (points - 1) as f64)
        .collect())
}

fn pm1() -> ScoreVector {
    ScoreVector::new(vec![-1.0, 1.0]).expect("valid scores")
}

fn two_state(w12: f64, w21: f64) -> Result<RateMatrix, String> {
    RateMatrix::new(&[vec![0.0, w12], vec![w21, 0.0]]).map_err(|e| e.to_string())
}

fn first_out_of_domain(reports: &[corrbound::bounds::BoundReport]) -> Option<f64> {
    reports.iter().find(|r| !r.in_validity_domain).map(|r| r.t2)
}

/// `|C(0) - C(t)|` with its sine and eta bounds, and `|dC/dt|` with its
/// bound, for a two-state chain with rates `w12` (2 -> 1) and `w21`
/// (1 -> 2), started with probability `p2` in state 2, scores `[-1, 1]`.
pub fn two_state_curves_impl(
    w12: f64,
    w21: f64,
    p2: f64,
    t_max: f64,
    points: usize,
) -> Result<Curves, String> {
    let w = two_state(w12, w21)?;
    let p0 = ProbVector::new(vec![1.0 - p2, p2]).map_err(|e| e.to_string())?;
    let model = Model::new(w, p0, pm1(), None).map_err(|e| e.to_string())?;
    let t = grid(t_max, points, true)?;
    let ids = [BoundId::ZeroTEq6, BoundId::DerivEq7, BoundId::EtaEq8];
    let reports = evaluate(&model, &ids, &t, CmaxMode::Standard).map_err(|e| e.to_string())?;
    let of = |id: BoundId| reports.iter().filter(move |r| r.bound_id == id);
    let sin: Vec<_> = of(BoundId::ZeroTEq6).cloned().collect();
    // the derivative bound is undefined at t = 0
    let pad = |v: Vec<f64>| std::iter::once(f64::NAN).chain(v).collect::<Vec<_>>();
    Ok(Curves {
        series: vec![
            Series { label: "|C(0) - C(t)|".into(), y: sin.iter().map(|r| r.lhs).collect() },
            Series { label: "sine bound".into(), y: sin.iter().map(|r| r.rhs).collect() },
            Series { label: "eta bound".into(), y: of(BoundId::EtaEq8).map(|r| r.rhs).collect() },
            Series { label: "|dC/dt|".into(), y: pad(of(BoundId::DerivEq7).map(|r| r.lhs).collect()) },
            Series {
                label: "derivative bound".into(),
                y: pad(of(BoundId::DerivEq7).map(|r| r.rhs).collect()),
            },
        ],
        domain_edge: first_out_of_domain(&sin),
        t,
    })
}

/// Ratio curves `lhs / rhs` of the sine bound for `n_models` random models
/// with 2 to 4 states and `T = S`. Model `i` uses seed `seed + i`.
pub fn random_ratio_curves_impl(
    n_models: usize,
    seed: u64,
    t_max: f64,
    points: usize,
) -> Result<Curves, String> {
    if n_models > MAX_MODELS {
        return Err(format!("at most {MAX_MODELS} models"));
    }
    let t = grid(t_max, points, false)?;
    let mut series = Vec::with_capacity(n_models);
    for i in 0..n_models {
        let n = 2 + i % 3;
        let s = seed.wrapping_add(i as u64);
        let model = Model::random(n, s).map_err(|e| e.to_string())?;
        let reports =
            evaluate(&model, &[BoundId::ZeroTEq6], &t, CmaxMode::Standard).map_err(|e| e.to_string())?;
        series.push(Series { label: format!("N={n} seed={s}"), y: reports.iter().map(|r| r.ratio).collect() });
    }
    Ok(Curves { t, series, domain_edge: None })
}

/// Signed response of `<S>` to a pulse (`step = false`) or step of
/// strength `chi` along `W diag(S)`, with its bound, for the two-state chain
/// in its steady state.
pub fn response_curves_impl(
    w12: f64,
    w21: f64,
    chi: f64,
    step: bool,
    t_max: f64,
    points: usize,
) -> Result<Curves, String> {
    let w = two_state(w12, w21)?;
    let pst = steady_state(&w).map_err(|e| e.to_string())?;
    let kind = if step { ResponseKind::Step } else { ResponseKind::Pulse };
    let times = grid(t_max, points, step)?;
    let rows = response_sweep(&w, &pst, &pm1(), &pm1(), chi, kind, &times, CmaxMode::Standard)
        .map_err(|e| e.to_string())?;
    Ok(Curves {
        t: rows.iter().map(|r| r.t).collect(),
        series: vec![
            Series { label: "shift".into(), y: rows.iter().map(|r| r.shift).collect() },
            Series { label: "bound".into(), y: rows.iter().map(|r| r.bound_rhs).collect() },
            Series { label: "-bound".into(), y: rows.iter().map(|r| -r.bound_rhs).collect() },
        ],
        domain_edge: rows.iter().find(|r| !r.in_domain).map(|r| r.t),
    })
}

fn to_js(r: Result<Curves, String>) -> Result<String, JsValue> {
    let curves = r.map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&curves).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn two_state_curves(w12: f64, w21: f64, p2: f64, t_max: f64, points: usize) -> Result<String, JsValue> {
    to_js(two_state_curves_impl(w12, w21, p2, t_max, points))
}

#[wasm_bindgen]
pub fn random_ratio_curves(n_models: usize, seed: u64, t_max: f64, points: usize) -> Result<String, JsValue> {
    to_js(random_ratio_curves_impl(n_models, seed, t_max, points))
}

#[wasm_bindgen]
pub fn response_curves(
    w12: f64,
    w21: f64,
    chi: f64,
    step: bool,
    t_max: f64,
    points: usize,
) -> Result<String, JsValue> {
    to_js(response_curves_impl(w12, w21, chi, step, t_max, points))
}
