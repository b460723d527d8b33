//! Three demo operations for the static page in `www/`. Each returns a JSON
//! string so the page needs no bindings beyond `JSON.parse`.

use std::sync::Arc;

use pauli_learn::channel::{batch_simulate, PauliChannel, ScheduleEntry, SpamModel};
use pauli_learn::coeffs::tv_distance;
use pauli_learn::estimate::{
    estimate_decay_points, fit_alpha, AlphaEstimator, AlphaFit, EstimatorConfig, PreparedBank,
};
use pauli_learn::model::{generate_model, GibbsNoiseModel, ModelSpec};
use pauli_learn::rng::{derive, tag};
use pauli_learn::structure::{learn_graph, ExactProvider, MarginalProvider, ProtocolProvider, Symmetrization};
use pauli_learn::{Error, PauliString, Region, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_QUBITS: usize = 8;
const MAX_SHOTS: u64 = 2_000_000;

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 || shots > MAX_SHOTS {
        return Err(Error::Config(format!("shots must lie in 1..={MAX_SHOTS}")));
    }
    Ok(())
}

fn chain_model(n: usize, cycle: bool, strength: f64, seed: u64) -> Result<GibbsNoiseModel> {
    if !(2..=MAX_QUBITS).contains(&n) || (cycle && n < 3) {
        return Err(Error::Config(format!("n must lie in 2..={MAX_QUBITS} (3 for a cycle)")));
    }
    let spec = if cycle {
        ModelSpec::cycle(n, strength, strength)
    } else {
        ModelSpec::chain(n, strength, strength)
    };
    generate_model(&spec, &mut derive(seed, &[tag::MODEL]))
}

fn protocol(model: &GibbsNoiseModel, shots: u64, seed: u64) -> Result<ProtocolProvider> {
    check_shots(shots)?;
    let channel = PauliChannel::from_model(model.clone(), None)?;
    let schedule = [ScheduleEntry { k: 1, shots: shots / 2 + 1 }, ScheduleEntry { k: 2, shots: shots / 2 + 1 }];
    let bank = batch_simulate(&channel, &SpamModel::noiseless(model.n()), &schedule, seed)?;
    let config = EstimatorConfig {
        groups: 24,
        fit: AlphaFit::Decay,
    };
    Ok(ProtocolProvider::new(Arc::new(AlphaEstimator::new(PreparedBank::new(&bank, 24)?, config))))
}

/// Simulates one weight-one Pauli of a depolarizing qubit pair under SPAM
/// noise at each repetition count and fits the decay.
pub fn decay_fit(p: f64, q: f64, max_k: u32, shots: u64, seed: u64) -> Result<Value> {
    check_shots(shots)?;
    if !(1..=16).contains(&max_k) {
        return Err(Error::Config("max_k must lie in 1..=16".into()));
    }
    let channel = PauliChannel::from_model(GibbsNoiseModel::product_depolarizing(2, p)?, None)?;
    let spam = SpamModel::depolarizing(2, q, q)?;
    let schedule: Vec<ScheduleEntry> = (1..=max_k).map(|k| ScheduleEntry { k, shots }).collect();
    let bank = batch_simulate(&channel, &spam, &schedule, seed)?;
    let pauli = PauliString::from_index(2, 1);
    let points = estimate_decay_points(&pauli, &bank, 24)?;
    let fit = fit_alpha(&points)?;
    Ok(json!({
        "pauli": pauli.to_string(),
        "points": points.points.iter().map(|pt| json!({"k": pt.k, "mean": pt.mean, "stderr": pt.stderr})).collect::<Vec<_>>(),
        "alpha_hat": fit.alpha_hat,
        "c_hat": fit.c_hat,
        "alpha": channel.eigenvalue(&pauli)?,
        "c": spam.attenuation(&pauli)?,
        "flags": fit.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>(),
    }))
}

/// Learns the interaction graph of a random chain or cycle model.
pub fn structure_learning(n: usize, cycle: bool, seed: u64, shots: u64, tau: f64) -> Result<Value> {
    let model = chain_model(n, cycle, 0.4, seed)?;
    let truth = model.hypergraph().derived_graph();
    let learned = if shots == 0 {
        learn_graph(&ExactProvider::new(&model)?, 2, 3, tau, Symmetrization::And)?
    } else {
        learn_graph(&protocol(&model, shots, seed)?, 2, 3, tau, Symmetrization::And)?
    };
    Ok(json!({
        "n": n,
        "truth": truth.edges(),
        "learned": learned.graph.edges(),
        "exact": learned.graph == truth,
        "warnings": learned.warnings,
    }))
}

/// Reconstructs the marginal of `qubits` from sampled eigenvalues and
/// compares it with the exact one.
pub fn marginal_reconstruction(n: usize, seed: u64, shots: u64, qubits: &[usize]) -> Result<Value> {
    let model = chain_model(n, false, 0.4, seed)?;
    let region = Region::from_qubits(qubits.iter().copied())?;
    region.check_fits(n)?;
    if region.is_empty() || region.len() > 3 {
        return Err(Error::Config("choose between 1 and 3 qubits".into()));
    }
    let estimated = protocol(&model, shots, seed)?.marginal(&region)?;
    let exact = model.exact_marginal(&region)?;
    let labels: Vec<String> = (0..exact.len())
        .map(|i| PauliString::from_index(region.len(), i).to_string())
        .collect();
    Ok(json!({
        "region": region.to_string(),
        "labels": labels,
        "estimated": estimated.probs(),
        "exact": exact,
        "tv": tv_distance(estimated.probs(), &exact)?,
    }))
}

fn to_js(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = decayFit)]
pub fn decay_fit_js(p: f64, q: f64, max_k: u32, shots: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_js(decay_fit(p, q, max_k, shots.into(), seed.into()))
}

#[wasm_bindgen(js_name = learnStructure)]
pub fn structure_learning_js(n: usize, cycle: bool, seed: u32, shots: u32, tau: f64) -> std::result::Result<String, JsError> {
    to_js(structure_learning(n, cycle, seed.into(), shots.into(), tau))
}

#[wasm_bindgen(js_name = reconstructMarginal)]
pub fn marginal_reconstruction_js(n: usize, seed: u32, shots: u32, qubits: Vec<u32>) -> std::result::Result<String, JsError> {
    let qubits: Vec<usize> = qubits.into_iter().map(|q| q as usize).collect();
    to_js(marginal_reconstruction(n, seed.into(), shots.into(), &qubits))
}
