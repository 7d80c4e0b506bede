//! Bindings for the static demo page. Every export takes circuit text and
//! returns a JSON string; errors become JS exceptions carrying the message.

use hqc_core::circuit::{parse_circuit, pad_with_identities};
use hqc_core::compiler::{compile, Backend};
use hqc_core::dynamics::{
    line_walk_oracle, run_protocol, total_variation, ProtocolConfig, Spectrum, TimeSpec,
};
use hqc_core::linalg::{ONE, ZERO};
use hqc_core::subspace::{build_computational_basis, restrict_hamiltonian};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Edge {
    from: usize,
    to: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct CompileSummary {
    backend: Backend,
    site_count: usize,
    term_count: usize,
    max_arity: usize,
    max_degree: usize,
    qubit_equivalents: f64,
    residual: f64,
    labels: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Serialize)]
struct Curve {
    times: Vec<f64>,
    p_success: Vec<f64>,
    p_success_time_avg: f64,
    total_time: f64,
    min_fidelity: Option<f64>,
    clock_labels: Vec<String>,
    clock_weights: Vec<f64>,
}

#[derive(Serialize)]
struct Mixing {
    vertices: usize,
    horizons: Vec<f64>,
    walk_tv: Vec<f64>,
    path_tv: Vec<f64>,
}

fn fail(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(fail)
}

fn backend(name: &str) -> Result<Backend, JsValue> {
    name.parse().map_err(fail)
}

/// Term statistics plus the restricted walk graph of `text` under `backend`.
#[wasm_bindgen]
pub fn compile_summary(text: &str, backend_name: &str) -> Result<String, JsValue> {
    let c = parse_circuit(text).map_err(fail)?;
    let comp = compile(&c, backend(backend_name)?).map_err(fail)?;
    let audit = comp.hamiltonian.audit();
    let basis = build_computational_basis(&c, &comp).map_err(fail)?;
    let r = restrict_hamiltonian(&comp.hamiltonian, &basis).map_err(fail)?;
    let mut edges = Vec::new();
    for i in 0..r.dim {
        for j in i + 1..r.dim {
            let z = r.get(i, j);
            if z.norm() > 1e-12 {
                edges.push(Edge { from: j, to: i, re: z.re, im: z.im });
            }
        }
    }
    to_json(&CompileSummary {
        backend: comp.backend,
        site_count: audit.site_count,
        term_count: audit.term_count,
        max_arity: audit.max_arity,
        max_degree: audit.max_degree,
        qubit_equivalents: audit.qubit_equivalents,
        residual: r.residual,
        labels: r.labels,
        edges,
    })
}

/// Padded protocol on the restricted walk with `T = 4 N^2`.
#[wasm_bindgen]
pub fn simulate(
    text: &str,
    backend_name: &str,
    padding: usize,
    samples: usize,
    seed: u32,
) -> Result<String, JsValue> {
    let c = parse_circuit(text).map_err(fail)?;
    let cfg = ProtocolConfig {
        padding,
        time: TimeSpec::Auto,
        samples,
        seed: seed as u64,
        dt: None,
        full_space: false,
    };
    let rep = run_protocol(&c, backend(backend_name)?, &cfg).map_err(fail)?;
    let (clock_labels, clock_weights) = rep
        .time_avg_clock_dist
        .into_iter()
        .map(|w| (w.label, w.p))
        .unzip();
    to_json(&Curve {
        times: rep.times,
        p_success: rep.p_success,
        p_success_time_avg: rep.p_success_time_avg,
        total_time: rep.total_time,
        min_fidelity: rep.min_fidelity,
        clock_labels,
        clock_weights,
    })
}

/// TV distance between the time-averaged and limiting distributions over
/// `points` log-spaced horizons up to `8 N^2`, for the padded circuit's walk
/// and for a bare path with the same vertex count.
#[wasm_bindgen]
pub fn mixing_curve(
    text: &str,
    backend_name: &str,
    padding: usize,
    points: usize,
) -> Result<String, JsValue> {
    let c = parse_circuit(text).map_err(fail)?;
    let c = pad_with_identities(&c, padding.max(1)).map_err(fail)?;
    let comp = compile(&c, backend(backend_name)?).map_err(fail)?;
    let basis = build_computational_basis(&c, &comp).map_err(fail)?;
    let r = restrict_hamiltonian(&comp.hamiltonian, &basis).map_err(fail)?;
    let mut e0 = vec![ZERO; r.dim];
    e0[0] = ONE;
    let walk = Spectrum::new(&r.matrix, r.dim).averager(&e0);
    let path = line_walk_oracle(r.dim.max(2)).map_err(fail)?.averager();
    let (walk_lim, path_lim) = (walk.limiting(), path.limiting());
    let n = r.dim as f64;
    let points = points.clamp(2, 400);
    let top = (8.0 * n * n).ln();
    let horizons: Vec<f64> = (0..points)
        .map(|k| (top * k as f64 / (points - 1) as f64).exp())
        .collect();
    let tv = |avg: &hqc_core::dynamics::TimeAverager, lim: &[f64]| -> Vec<f64> {
        horizons
            .iter()
            .map(|&t| total_variation(&avg.time_average(t), lim))
            .collect()
    };
    to_json(&Mixing {
        vertices: r.dim,
        walk_tv: tv(&walk, &walk_lim),
        path_tv: tv(&path, &path_lim),
        horizons,
    })
}
