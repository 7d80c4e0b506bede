//! Walk dynamics: exact evolution in the restricted subspace, Lanczos
//! evolution over the full register, time-averaged distributions, the
//! path-graph oracle, mixing-time scaling and the measurement protocol.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_circuit_prefix, pad_with_identities, Circuit, Gate};
use crate::compiler::{compile, Backend};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm, C64, ONE, ZERO};
use crate::model::{FullOperator, Register, TermList};
use crate::sparse::SparseState;
use crate::subspace::{
    build_computational_basis, expected_walk_graph, overlap_fidelity, restrict_hamiltonian,
    work_state_at, SubspaceBasis,
};

/// Largest allowed `dt * |H|_est`.
pub const STEP_GUARD: f64 = 0.1;

const KRYLOV_DIM: usize = 30;
const BREAKDOWN: f64 = 1e-11;
const DEGENERATE: f64 = 1e-9;

/// Something that can be exponentiated.
#[derive(Clone, Copy, Debug)]
pub enum Generator<'a> {
    /// A compiled term list, evolved over the full register.
    Terms(&'a TermList),
    /// A dense Hermitian matrix, row-major.
    Matrix { dim: usize, data: &'a [C64] },
}

/// `exp(-i H t) psi0`.
///
/// Dense matrices are exponentiated exactly. Term lists are propagated by
/// Lanczos steps of length `dt`; when the Krylov space closes (the start
/// vector lies in an invariant subspace) the remaining time is done in one
/// exact step.
pub fn evolve(gen: Generator<'_>, psi0: &[C64], t: f64, dt: f64) -> Result<Vec<C64>> {
    check_unit(psi0)?;
    match gen {
        Generator::Terms(h) => {
            let op = h.full_operator()?;
            krylov_evolve(&op, psi0, t, dt)
        }
        Generator::Matrix { dim, data } => {
            if data.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim * dim,
                    got: data.len(),
                });
            }
            if psi0.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: psi0.len(),
                });
            }
            check_step(dt, dense_row_sum(data, dim))?;
            Ok(Spectrum::new(data, dim).propagate(psi0, t))
        }
    }
}

fn check_unit(psi: &[C64]) -> Result<()> {
    let n = norm(psi);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "initial state has norm {n}, expected 1"
        )));
    }
    Ok(())
}

fn check_step(dt: f64, norm_est: f64) -> Result<()> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let limit = step_limit(norm_est);
    if dt > limit {
        return Err(Error::StepSize { dt, limit });
    }
    Ok(())
}

/// `0.1 / |H|_est`, infinite for the zero operator.
pub fn step_limit(norm_est: f64) -> f64 {
    if norm_est > 0.0 {
        STEP_GUARD / norm_est
    } else {
        f64::INFINITY
    }
}

pub fn dense_row_sum(data: &[C64], dim: usize) -> f64 {
    (0..dim)
        .map(|i| data[i * dim..(i + 1) * dim].iter().map(|z| z.norm()).sum())
        .fold(0.0, f64::max)
}

/// Lanczos propagation of a dense full-space vector.
pub fn krylov_evolve(op: &FullOperator, psi0: &[C64], t: f64, dt: f64) -> Result<Vec<C64>> {
    if psi0.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: psi0.len(),
        });
    }
    check_step(dt, op.row_sum_bound())?;
    if t < 0.0 {
        return Err(Error::InvalidArgument("time must be non-negative".into()));
    }
    let mut psi = psi0.to_vec();
    let mut remaining = t;
    while remaining > 0.0 {
        let h = dt.min(remaining);
        match krylov_step(op, &psi, h, remaining) {
            Step::Closed(v) => return Ok(v),
            Step::Advanced(v) => {
                psi = v;
                remaining -= h;
            }
        }
    }
    Ok(psi)
}

enum Step {
    /// The Krylov space is invariant; the vector is at the final time.
    Closed(Vec<C64>),
    /// Advanced by one step.
    Advanced(Vec<C64>),
}

fn krylov_step(op: &FullOperator, psi: &[C64], h: f64, remaining: f64) -> Step {
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return Step::Closed(psi.to_vec());
    }
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|z| z / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; psi.len()];
    loop {
        let j = basis.len() - 1;
        w.iter_mut().for_each(|z| *z = ZERO);
        op.apply_into(&basis[j], &mut w);
        alpha.push(inner(&basis[j], &w).re);
        for _ in 0..2 {
            for v in &basis {
                let ov = inner(v, &w);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= ov * b);
            }
        }
        let b = norm(&w);
        let closed = b < BREAKDOWN;
        if closed || basis.len() == KRYLOV_DIM {
            let tau = if closed { remaining } else { h };
            let coeffs = tridiagonal_exp(&alpha, &beta, tau);
            let mut out = vec![ZERO; psi.len()];
            for (v, c) in basis.iter().zip(&coeffs) {
                let c = c * beta0;
                out.iter_mut().zip(v).for_each(|(a, x)| *a += c * x);
            }
            return if closed {
                Step::Closed(out)
            } else {
                Step::Advanced(out)
            };
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
}

/// `exp(-i T tau) e_1` for the real symmetric tridiagonal `T`.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let q = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    C64::from_polar(q, -eig.eigenvalues[k] * tau)
                })
                .sum()
        })
        .collect()
}

/// Eigendecomposition of a dense Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn new(data: &[C64], dim: usize) -> Self {
        let m = DMatrix::from_row_slice(dim, dim, data);
        // symmetrize against round-off
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = m.symmetric_eigen();
        Spectrum {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn coefficients(&self, psi0: &[C64]) -> DVector<C64> {
        self.vectors.adjoint() * DVector::from_column_slice(psi0)
    }

    pub fn propagate(&self, psi0: &[C64], t: f64) -> Vec<C64> {
        let mut c = self.coefficients(psi0);
        for (k, z) in c.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, -self.values[k] * t);
        }
        (&self.vectors * c).iter().copied().collect()
    }

    /// Time-average machinery for walks started from `psi0`.
    pub fn averager(&self, psi0: &[C64]) -> TimeAverager {
        let c = self.coefficients(psi0);
        let mut amps = self.vectors.clone();
        for k in 0..self.dim() {
            for j in 0..self.dim() {
                amps[(j, k)] *= c[k];
            }
        }
        TimeAverager {
            values: self.values.clone(),
            amps,
        }
    }
}

/// Distributions of a walk `sum_k A_jk e^{-i l_k t}` with `A_jk = <j|k><k|psi0>`.
#[derive(Clone, Debug)]
pub struct TimeAverager {
    pub values: Vec<f64>,
    pub amps: DMatrix<C64>,
}

impl TimeAverager {
    /// Distribution at time `t`.
    pub fn distribution(&self, t: f64) -> Vec<f64> {
        let phases = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|l| C64::from_polar(1.0, -l * t)),
        );
        (&self.amps * phases).iter().map(|z| z.norm_sqr()).collect()
    }

    /// Distribution averaged uniformly over `[0, horizon]`.
    pub fn time_average(&self, horizon: f64) -> Vec<f64> {
        self.weighted(|delta| average_phase(delta * horizon))
    }

    /// `T -> infinity` limit: only (near-)degenerate eigenvalue pairs survive.
    pub fn limiting(&self) -> Vec<f64> {
        self.weighted(|delta| if delta.abs() < DEGENERATE { ONE } else { ZERO })
    }

    fn weighted(&self, g: impl Fn(f64) -> C64) -> Vec<f64> {
        let d = self.values.len();
        let gm = DMatrix::from_fn(d, d, |k, l| g(self.values[k] - self.values[l]));
        let b = &self.amps * gm;
        (0..self.amps.nrows())
            .map(|j| {
                (0..d)
                    .map(|l| b[(j, l)] * self.amps[(j, l)].conj())
                    .sum::<C64>()
                    .re
                    .max(0.0)
            })
            .collect()
    }
}

/// `(1/x) * integral_0^x e^{-i s} ds`
fn average_phase(x: f64) -> C64 {
    if x.abs() < 1e-8 {
        C64::new(1.0, -x / 2.0)
    } else {
        (ONE - C64::from_polar(1.0, -x)) / C64::new(0.0, x)
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Analytic solution of the walk on the path `P_N` (unit hops) started at
/// vertex 0.
#[derive(Clone, Debug)]
pub struct LineWalk {
    pub n: usize,
    /// `2 cos(pi k / (N+1))`, k = 1..N.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k][j] = sqrt(2/(N+1)) sin(pi (k+1) (j+1) / (N+1))`
    pub eigenvectors: Vec<Vec<f64>>,
    pub start: usize,
}

pub fn line_walk_oracle(n: usize) -> Result<LineWalk> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("path length must be >= 2, got {n}")));
    }
    let np1 = (n + 1) as f64;
    let scale = (2.0 / np1).sqrt();
    let eigenvalues = (1..=n)
        .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / np1).cos())
        .collect();
    let eigenvectors = (1..=n)
        .map(|k| {
            (1..=n)
                .map(|j| scale * (std::f64::consts::PI * (k * j) as f64 / np1).sin())
                .collect()
        })
        .collect();
    Ok(LineWalk {
        n,
        eigenvalues,
        eigenvectors,
        start: 0,
    })
}

impl LineWalk {
    pub fn averager(&self) -> TimeAverager {
        let amps = DMatrix::from_fn(self.n, self.n, |j, k| {
            let v = &self.eigenvectors[k];
            C64::new(v[j] * v[self.start], 0.0)
        });
        TimeAverager {
            values: self.eigenvalues.clone(),
            amps,
        }
    }

    /// `pi(j) = sum_k |<j|k>|^2 |<k|psi0>|^2`; the spectrum is simple.
    pub fn limiting_distribution(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                self.eigenvectors
                    .iter()
                    .map(|v| (v[j] * v[self.start]).powi(2))
                    .sum()
            })
            .collect()
    }

    pub fn time_avg_dist(&self, horizon: f64) -> Vec<f64> {
        self.averager().time_average(horizon)
    }

    /// Adjacency matrix of the path, for cross-checks.
    pub fn matrix(&self) -> Vec<C64> {
        let mut m = vec![ZERO; self.n * self.n];
        for j in 0..self.n - 1 {
            m[j * self.n + j + 1] = ONE;
            m[(j + 1) * self.n + j] = ONE;
        }
        m
    }
}

/// Smallest `T` (geometric grid with ratio `2^{1/8}`, then bisection) for
/// which the time-averaged distribution is within `eps` of the limit.
pub fn mixing_time(avg: &TimeAverager, eps: f64, budget: f64) -> Option<f64> {
    let limit = avg.limiting();
    let tv = |t: f64| total_variation(&avg.time_average(t), &limit);
    let ratio = 2f64.powf(0.125);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while tv(hi) > eps {
        lo = hi;
        hi *= ratio;
        if hi > budget {
            return None;
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if tv(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Some(hi)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub stderr: f64,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Option<PowerFit> {
    let m = x.len();
    if m < 2 || m != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m as f64;
    let my = ly.iter().sum::<f64>() / m as f64;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = if m > 2 {
        (sse / (m - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(PowerFit {
        exponent: slope,
        intercept,
        stderr,
    })
}

/// Mixing times of one graph family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    /// Vertex counts.
    pub sizes: Vec<usize>,
    pub eps: Vec<f64>,
    pub t_mix: Vec<Option<f64>>,
    /// TV distance of the distribution averaged over `trials` uniform random
    /// times in `[0, T_mix]`.
    pub sampled_tv: Vec<Option<f64>>,
    pub fit: Option<PowerFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub path: ScalingSeries,
    /// Comb graphs of CNOT switches with about `N` vertices each.
    pub comb: ScalingSeries,
    pub comb_gadgets: Vec<usize>,
    pub failures: Vec<String>,
}

impl MixingEstimate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Mixing budget: `T_mix` searches stop at `64 N^2 ln N`.
fn budget(n: usize) -> f64 {
    let n = n as f64;
    64.0 * n * n * n.ln().max(1.0)
}

pub fn estimate_mixing_scaling(lengths: &[usize], trials: usize, seed: u64) -> Result<MixingEstimate> {
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("lengths must be strictly increasing".into()));
    }
    if lengths.len() < 4 {
        return Err(Error::InvalidArgument("need ≥ 4 lengths".into()));
    }
    if lengths[0] < 2 {
        return Err(Error::InvalidArgument("lengths must be >= 2".into()));
    }
    if lengths[lengths.len() - 1] < 2 * lengths[0] {
        return Err(Error::InvalidArgument(
            "lengths must span at least one doubling".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();

    let mut path_avgs = Vec::new();
    for &n in lengths {
        path_avgs.push((n, line_walk_oracle(n)?.averager()));
    }
    let path = scaling_series(&path_avgs, trials, &mut rng, "path", &mut failures);

    let mut comb_avgs = Vec::new();
    let mut gadgets = Vec::new();
    for &n in lengths {
        let g = ((n as f64 - 1.0) / 11.0).round().max(1.0) as usize;
        let c = cnot_chain(g);
        let walk = expected_walk_graph(&c, Backend::Q23);
        let spectrum = Spectrum::new(&walk.matrix, walk.dim);
        let mut start = vec![ZERO; walk.dim];
        start[0] = ONE;
        gadgets.push(g);
        comb_avgs.push((walk.dim, spectrum.averager(&start)));
    }
    let comb = scaling_series(&comb_avgs, trials, &mut rng, "comb", &mut failures);

    Ok(MixingEstimate {
        lengths: lengths.to_vec(),
        trials,
        seed,
        path,
        comb,
        comb_gadgets: gadgets,
        failures,
    })
}

fn cnot_chain(gadgets: usize) -> Circuit {
    let gates = vec![
        Gate::Cnot {
            control: 0,
            target: 1
        };
        gadgets
    ];
    Circuit::new(2, gates, crate::circuit::Input::Bits(vec![false, false]))
        .expect("valid CNOT chain")
}

fn scaling_series(
    avgs: &[(usize, TimeAverager)],
    trials: usize,
    rng: &mut ChaCha8Rng,
    family: &str,
    failures: &mut Vec<String>,
) -> ScalingSeries {
    let mut series = ScalingSeries {
        sizes: Vec::new(),
        eps: Vec::new(),
        t_mix: Vec::new(),
        sampled_tv: Vec::new(),
        fit: None,
    };
    for (n, avg) in avgs {
        let eps = 1.0 / *n as f64;
        let t = mixing_time(avg, eps, budget(*n));
        if t.is_none() {
            failures.push(format!(
                "{family} N={n}: no convergence to eps={eps} within T={}",
                budget(*n)
            ));
        }
        let sampled = t.filter(|_| trials > 0).map(|t| {
            let limit = avg.limiting();
            let mut acc = vec![0.0; *n];
            for _ in 0..trials {
                let s = uniform(rng) * t;
                for (a, p) in acc.iter_mut().zip(avg.distribution(s)) {
                    *a += p / trials as f64;
                }
            }
            total_variation(&acc, &limit)
        });
        series.sizes.push(*n);
        series.eps.push(eps);
        series.t_mix.push(t);
        series.sampled_tv.push(sampled);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .sizes
        .iter()
        .zip(&series.t_mix)
        .filter_map(|(&n, t)| t.map(|t| (n as f64, t)))
        .unzip();
    series.fit = fit_power_law(&x, &y);
    series
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Total evolution time of a protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeSpec {
    /// `4 N^2` with `N` the number of path vertices.
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for TimeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TimeSpec::Auto);
        }
        match s.parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(TimeSpec::Fixed(t)),
            _ => Err(Error::InvalidArgument(format!(
                "time must be a positive number or `auto`, got `{s}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub padding: usize,
    pub time: TimeSpec,
    pub samples: usize,
    pub seed: u64,
    /// Step size; defaults to the guard value `0.1 / |H|_est`.
    pub dt: Option<f64>,
    pub full_space: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            padding: 6,
            time: TimeSpec::Auto,
            samples: 200,
            seed: 0,
            dt: None,
            full_space: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelWeight {
    pub label: String,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub backend: Backend,
    pub mode: String,
    pub seed: u64,
    pub padding: usize,
    pub useful_length: usize,
    pub circuit_length: usize,
    pub path_vertices: usize,
    pub basis_size: usize,
    pub closure_residual: f64,
    pub total_time: f64,
    pub dt: f64,
    /// Sampled instants, ascending.
    pub times: Vec<f64>,
    pub p_success: Vec<f64>,
    /// `P(q0 = 1 | success)`, absent where success has probability <= 1e-12.
    pub p_output_one: Vec<Option<f64>>,
    /// Worst fidelity of the work register, conditioned on a station
    /// `t >= useful_length`, against the direct circuit simulation.
    pub min_fidelity: Option<f64>,
    pub p_success_sample_mean: f64,
    /// Exact average of `p_success` over `[0, T]`.
    pub p_success_time_avg: f64,
    pub time_avg_clock_dist: Vec<LabelWeight>,
}

impl EvolutionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p_success,p_output_one\n");
        for ((t, p), o) in self.times.iter().zip(&self.p_success).zip(&self.p_output_one) {
            let o = o.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{t},{p},{o}\n"));
        }
        out
    }
}

/// Pads, compiles, evolves `psi_0` and measures the stations at `samples`
/// uniformly random times in `[0, T]`.
pub fn run_protocol(c: &Circuit, backend: Backend, cfg: &ProtocolConfig) -> Result<EvolutionReport> {
    let padded = pad_with_identities(c, cfg.padding)?;
    let comp = compile(&padded, backend)?;
    if cfg.full_space {
        comp.register().full_space_guard()?;
    }
    let basis = build_computational_basis(&padded, &comp)?;
    let r = restrict_hamiltonian(&comp.hamiltonian, &basis)?;
    let spectrum = Spectrum::new(&r.matrix, r.dim);
    let mut start = vec![ZERO; r.dim];
    start[0] = ONE;

    let n_path = basis.path_len();
    let total_time = match cfg.time {
        TimeSpec::Auto => 4.0 * (n_path * n_path) as f64,
        TimeSpec::Fixed(t) => t,
    };

    let full_op = if cfg.full_space {
        Some(comp.hamiltonian.full_operator()?)
    } else {
        None
    };
    let norm_est = match &full_op {
        Some(op) => op.row_sum_bound(),
        None => dense_row_sum(&r.matrix, r.dim),
    };
    let dt = cfg.dt.unwrap_or_else(|| step_limit(norm_est).min(total_time));
    check_step(dt, norm_est)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut times: Vec<f64> = (0..cfg.samples).map(|_| uniform(&mut rng) * total_time).collect();
    times.sort_by(f64::total_cmp);

    let target = apply_circuit_prefix(c, c.useful_length(), &c.initial_state())?;
    let meter = Meter::new(comp.register(), &basis, target)?;

    let mut p_success = Vec::with_capacity(times.len());
    let mut p_output_one = Vec::with_capacity(times.len());
    let mut min_fidelity: Option<f64> = None;
    let mut record = |state: &SparseState| {
        let m = meter.measure(state);
        p_success.push(m.p_success);
        p_output_one.push(m.p_output_one);
        if let Some(f) = m.min_fidelity {
            min_fidelity = Some(min_fidelity.map_or(f, |g: f64| g.min(f)));
        }
    };

    match &full_op {
        Some(op) => {
            let mut psi = basis.vectors[0].state.to_dense(comp.register());
            let mut now = 0.0;
            for &t in &times {
                psi = krylov_evolve(op, &psi, t - now, dt)?;
                now = t;
                record(&SparseState::from_dense(&psi, comp.register(), 1e-15));
            }
        }
        None => {
            for &t in &times {
                let coeffs = spectrum.propagate(&start, t);
                record(&basis.expand(&coeffs)?);
            }
        }
    }

    let avg = spectrum.averager(&start).time_average(total_time);
    let success: f64 = basis.success_indices().iter().map(|&i| avg[i]).sum();
    let sample_mean = if p_success.is_empty() {
        0.0
    } else {
        p_success.iter().sum::<f64>() / p_success.len() as f64
    };
    Ok(EvolutionReport {
        backend,
        mode: if cfg.full_space { "full-space" } else { "restricted" }.into(),
        seed: cfg.seed,
        padding: cfg.padding,
        useful_length: padded.useful_length(),
        circuit_length: padded.len(),
        path_vertices: n_path,
        basis_size: basis.len(),
        closure_residual: r.residual,
        total_time,
        dt,
        times,
        p_success,
        p_output_one,
        min_fidelity,
        p_success_sample_mean: sample_mean,
        p_success_time_avg: success,
        time_avg_clock_dist: basis
            .labels()
            .into_iter()
            .zip(avg)
            .map(|(label, p)| LabelWeight { label, p })
            .collect(),
    })
}

/// Station measurements on full-register states.
struct Meter<'a> {
    register: &'a Register,
    /// `(t, site)` of every station.
    stations: Vec<(usize, usize)>,
    useful: usize,
    n: usize,
    target: Vec<C64>,
}

struct Measurement {
    p_success: f64,
    p_output_one: Option<f64>,
    min_fidelity: Option<f64>,
}

impl<'a> Meter<'a> {
    fn new(register: &'a Register, basis: &SubspaceBasis, target: Vec<C64>) -> Result<Self> {
        let stations = basis
            .station_indices()
            .into_iter()
            .map(|(t, _)| {
                register
                    .find(&format!("c_{t}"))
                    .map(|s| (t, s))
                    .ok_or_else(|| Error::BasisMismatch(format!("no station site c_{t}")))
            })
            .collect::<Result<_>>()?;
        let n = target.len().trailing_zeros() as usize;
        Ok(Meter {
            register,
            stations,
            useful: basis.useful_length,
            n,
            target,
        })
    }

    fn measure(&self, state: &SparseState) -> Measurement {
        let mut p_success = 0.0;
        let mut p_one = 0.0;
        let mut min_fidelity: Option<f64> = None;
        for &(t, site) in &self.stations {
            if t < self.useful {
                continue;
            }
            let w = work_state_at(state, self.register, site);
            let weight = norm(&w).powi(2);
            if t > self.useful {
                p_success += weight;
                let half = 1usize << (self.n - 1);
                p_one += w[half..].iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            if weight > 1e-12 {
                let f = overlap_fidelity(&w, &self.target);
                min_fidelity = Some(min_fidelity.map_or(f, |g| g.min(f)));
            }
        }
        Measurement {
            p_success,
            p_output_one: (p_success > 1e-12).then(|| p_one / p_success),
            min_fidelity,
        }
    }
}
