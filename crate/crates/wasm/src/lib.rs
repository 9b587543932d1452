//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes plain strings and numbers and returns a JSON
//! document, or throws a string on error. The work is done by the `*_json`
//! functions, which are ordinary Rust and tested natively.

use serde::Serialize;
use thop_core::experiments::{generate_sbm, run_experiment, SbmParams};
use thop_core::graph::{adjacency, matrix_power, parse_edge_list};
use thop_core::model::ModelConfig;
use thop_core::paths::{simple_path_counts, EnumerationLimits};
use thop_core::reduce::{apply_reduction, fit, reconstruction_error, ReductionKind};
use thop_core::tensor::{build_path_tensor, normalize_tensor, Semantics};
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest graph the page will build tensors for.
pub const MAX_NODES: usize = 24;

#[derive(Serialize)]
struct FiberView {
    n: usize,
    edges: Vec<(usize, usize)>,
    counts: Vec<i64>,
    fiber: Vec<f64>,
    fiber_sum: f64,
    path_count: i64,
}

#[derive(Serialize)]
struct ReducePreview {
    n: usize,
    d: usize,
    slices: Vec<Vec<Vec<f64>>>,
    reconstruction_error: Option<f64>,
}

#[derive(Serialize)]
struct Curve {
    name: String,
    loss: Vec<f64>,
    test_acc: Vec<f64>,
    final_test_acc: f64,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_graph(edges: &str) -> Result<thop_core::Graph, String> {
    let g = parse_edge_list(edges).map_err(err)?;
    if g.node_count() > MAX_NODES {
        return Err(format!("graph has {} nodes, the demo allows {MAX_NODES}", g.node_count()));
    }
    Ok(g)
}

/// Fiber of `T^L` at `(i, j)`, with the raw counts and the matching path count.
pub fn fiber_json(edges: &str, length: u32, semantics: &str, i: usize, j: usize) -> Result<String, String> {
    let g = parse_graph(edges)?;
    let n = g.node_count();
    if i >= n || j >= n {
        return Err(format!("pair ({i}, {j}) outside 0..{n}"));
    }
    let semantics: Semantics = semantics.parse().map_err(err)?;
    let b = build_path_tensor(&g, length, semantics, EnumerationLimits::default()).map_err(err)?;
    let t = normalize_tensor(&b);
    let path_count = match semantics {
        Semantics::Walk => matrix_power(&adjacency(&g), length).map_err(err)?.get(i, j),
        Semantics::Simple => simple_path_counts(&g, length, EnumerationLimits::default()).map_err(err)?.get(i, j),
    };
    let fiber = t.fiber(i, j).to_vec();
    let view = FiberView {
        n,
        edges: g.edges().collect(),
        counts: b.fiber(i, j).to_vec(),
        fiber_sum: fiber.iter().sum(),
        fiber,
        path_count,
    };
    serde_json::to_string(&view).map_err(err)
}

/// Depth slices `T̂^L[:, :, k]` after reducing with `method`.
pub fn reduce_json(edges: &str, length: u32, semantics: &str, method: &str, d: usize, seed: u64) -> Result<String, String> {
    let g = parse_graph(edges)?;
    let semantics: Semantics = semantics.parse().map_err(err)?;
    let kind: ReductionKind = method.parse().map_err(err)?;
    let t = normalize_tensor(&build_path_tensor(&g, length, semantics, EnumerationLimits::default()).map_err(err)?);
    let map = fit(kind, &t, d, seed).map_err(err)?;
    let reduced = apply_reduction(&t, &map).map_err(err)?;
    let reconstruction_error = match kind {
        ReductionKind::Pca => Some(reconstruction_error(&t, &map).map_err(err)?),
        _ => None,
    };
    let preview = ReducePreview {
        n: reduced.n(),
        d: reduced.depth(),
        slices: reduced.slices().iter().map(|s| s.to_rows()).collect(),
        reconstruction_error,
    };
    serde_json::to_string(&preview).map_err(err)
}

/// Loss and test-accuracy curves of MixHop, T-Hop/SUM and T-Hop/PCA on one SBM draw.
pub fn curves_json(block_size: usize, p_in: f64, p_out: f64, seed: u64, epochs: usize, depth: usize) -> Result<String, String> {
    if !(2..=60).contains(&block_size) {
        return Err("block size must lie in 2..=60".into());
    }
    let data = generate_sbm(&SbmParams::new(vec![block_size, block_size], p_in, p_out, seed)).map_err(err)?;
    let powers = vec![0, 1, 2];
    let configs = [
        ModelConfig::mixhop("mixhop", powers.clone()),
        ModelConfig::thop("thop-sum", powers.clone(), ReductionKind::Sum, 1),
        ModelConfig::thop("thop-pca", powers, ReductionKind::Pca, depth),
    ];
    let mut curves = Vec::new();
    for cfg in configs {
        let cfg = ModelConfig { epochs, ..cfg };
        let run = run_experiment("sbm", &data, &cfg).map_err(err)?.result;
        curves.push(Curve {
            name: run.model.clone(),
            test_acc: run.metrics.iter().map(|m| m.test_acc).collect(),
            loss: run.loss_curve,
            final_test_acc: run.test_acc,
        });
    }
    serde_json::to_string(&curves).map_err(err)
}

#[wasm_bindgen]
pub fn fiber(edges: &str, length: u32, semantics: &str, i: usize, j: usize) -> Result<String, String> {
    fiber_json(edges, length, semantics, i, j)
}

#[wasm_bindgen]
pub fn reduce_preview(edges: &str, length: u32, semantics: &str, method: &str, d: usize, seed: u64) -> Result<String, String> {
    reduce_json(edges, length, semantics, method, d, seed)
}

#[wasm_bindgen]
pub fn training_curves(block_size: usize, p_in: f64, p_out: f64, seed: u64, epochs: usize, depth: usize) -> Result<String, String> {
    curves_json(block_size, p_in, p_out, seed, epochs, depth)
}
