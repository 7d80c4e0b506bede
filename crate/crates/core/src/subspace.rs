//! The computational subspace of a compiled circuit.
//!
//! Each basis vector is a sum of `work vector (x) clock label` parts. Switch
//! gadgets split the work state into the two train-master branches
//! `lo = P0 phi` and `up = P1 phi` (for CNOT the projectors act on the
//! control, for a basis-phase gate they are `B|k><k|B^dagger` on the target).
//! After the gadget's middle hop the branches become `lo' = lo, up' = X up`
//! (CNOT) or `lo' = e^{-i theta} lo, up' = up` (basis phase). The second
//! choice puts the phase `e^{i theta}` on the upper middle edge of the walk
//! and leaves a global phase on every later history state.
//!
//! Path vertices come first, in clock order; blind alleys (`g{t}:1x`,
//! `g{t}:5x`) are appended after the last station.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{apply_mat2, Circuit, Gate};
use crate::compiler::{gadget_label, station_label, Backend, ClockMap, Compilation};
use crate::error::{Error, Result};
use crate::linalg::{basis_projector, inner, norm, Mat2, C64, ONE, PAULI_X, PROJ0, PROJ1, ZERO};
use crate::model::{Register, SiteRole, TermList};
use crate::sparse::{Config, SparseState};

/// Residual below which the subspace counts as invariant.
pub const CLOSURE_TOL: f64 = 1e-10;

/// Entry tolerance for comparing a restriction with the expected walk.
pub const ENTRY_TOL: f64 = 1e-10;

const UPPER_STOPS: [&str; 8] = ["1A", "1B", "2", "3A", "3B", "4", "5A", "5B"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Station,
    Intermediate,
    BlindAlley,
}

/// `work (x) |clock label>`
#[derive(Clone, Debug, PartialEq)]
pub struct BasisPart {
    pub work: Vec<C64>,
    pub clock: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisVector {
    pub label: String,
    pub kind: VertexKind,
    pub parts: Vec<BasisPart>,
    pub state: SparseState,
}

impl BasisVector {
    /// Squared norms of the individual parts (track components).
    pub fn part_weights(&self) -> Vec<f64> {
        self.parts.iter().map(|p| norm(&p.work).powi(2)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub backend: Backend,
    pub register: Register,
    pub vectors: Vec<BasisVector>,
    pub useful_length: usize,
}

impl SubspaceBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.vectors.iter().map(|v| v.label.clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.vectors.iter().position(|v| v.label == label)
    }

    /// Number of vertices on the main path (everything but blind alleys).
    pub fn path_len(&self) -> usize {
        self.vectors
            .iter()
            .filter(|v| v.kind != VertexKind::BlindAlley)
            .count()
    }

    /// Basis indices of the stations `t = k` with `k > useful_length`.
    pub fn success_indices(&self) -> Vec<usize> {
        self.station_indices()
            .into_iter()
            .filter(|&(t, _)| t > self.useful_length)
            .map(|(_, i)| i)
            .collect()
    }

    /// `(t, index)` of every station vector.
    pub fn station_indices(&self) -> Vec<(usize, usize)> {
        self.vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VertexKind::Station)
            .map(|(i, v)| (v.label[2..].parse().expect("station label"), i))
            .collect()
    }

    /// Largest entry of `G - I` where `G` is the Gram matrix.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((a.state.inner(&b.state) - target).norm());
            }
        }
        worst
    }

    /// `sum_i coeffs[i] v_i`
    pub fn expand(&self, coeffs: &[C64]) -> Result<SparseState> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        let mut out = SparseState::new();
        for (v, &a) in self.vectors.iter().zip(coeffs) {
            if a != ZERO {
                out.add_scaled(&v.state, a);
            }
        }
        Ok(out)
    }
}

/// Builds the history states, gadget intermediaries and blind alleys of the
/// compiled circuit for its input state.
pub fn build_computational_basis(c: &Circuit, comp: &Compilation) -> Result<SubspaceBasis> {
    let reg = comp.register();
    let n = c.n_qubits();
    let works = reg
        .sites()
        .iter()
        .filter(|s| s.role == SiteRole::Work)
        .count();
    let stations = reg
        .sites()
        .iter()
        .filter(|s| s.role == SiteRole::Station)
        .count();
    if works != n || stations != c.len() + 1 {
        return Err(Error::BasisMismatch(format!(
            "compilation has {works} work qubits and {stations} stations, circuit needs {n} and {}",
            c.len() + 1
        )));
    }
    if comp.clock_map.useful_length != c.useful_length() {
        return Err(Error::BasisMismatch("useful lengths differ".into()));
    }

    let backend = comp.backend;
    let map = &comp.clock_map;
    let mut path = Vec::new();
    let mut alleys = Vec::new();
    let mut phi = c.initial_state();
    let single = |work: &[C64], clock: String| vec![BasisPart { work: work.to_vec(), clock }];
    path.push((station_label(0), VertexKind::Station, single(&phi, station_label(0))));

    for (i, gate) in c.gates().iter().enumerate() {
        let t = i + 1;
        let split = match gate {
            Gate::Cnot { .. } => backend != Backend::F4,
            Gate::BasisPhase { .. } => backend.uses_comb(),
            _ => false,
        };
        if !split {
            crate::circuit::apply_gate(gate, n, &mut phi);
            path.push((station_label(t), VertexKind::Station, single(&phi, station_label(t))));
            continue;
        }

        let branches = Branches::new(gate, n, &phi);
        let two = |lo: &[C64], lo_stop: &str, up: &[C64], up_stop: &str| {
            vec![
                BasisPart {
                    work: lo.to_vec(),
                    clock: gadget_label(t, lo_stop),
                },
                BasisPart {
                    work: up.to_vec(),
                    clock: gadget_label(t, up_stop),
                },
            ]
        };
        if backend == Backend::S3 {
            let (lo, up, lo2, up2) = (&branches.lo, &branches.up, &branches.lo_after, &branches.up_after);
            path.push((gadget_label(t, "1"), VertexKind::Intermediate, two(lo, "l1", up, "u1")));
            path.push((gadget_label(t, "2"), VertexKind::Intermediate, two(lo2, "l2", up2, "u2")));
        } else {
            for (k, stop) in UPPER_STOPS.iter().enumerate() {
                let (lo, up) = if k < 4 {
                    (&branches.lo, &branches.up)
                } else {
                    (&branches.lo_after, &branches.up_after)
                };
                let parts = two(lo, &format!("l{stop}"), up, &format!("u{stop}"));
                path.push((gadget_label(t, stop), VertexKind::Intermediate, parts));
            }
            // blind alleys: each branch on the first/last stop of the wrong track
            alleys.push((
                gadget_label(t, "1x"),
                VertexKind::BlindAlley,
                two(&branches.lo, "u1A", &branches.up, "l1A"),
            ));
            alleys.push((
                gadget_label(t, "5x"),
                VertexKind::BlindAlley,
                two(&branches.lo_after, "u5B", &branches.up_after, "l5B"),
            ));
        }
        phi = branches
            .lo_after
            .iter()
            .zip(&branches.up_after)
            .map(|(a, b)| a + b)
            .collect();
        path.push((station_label(t), VertexKind::Station, single(&phi, station_label(t))));
    }

    let mut vectors = Vec::with_capacity(path.len() + alleys.len());
    for (label, kind, parts) in path.into_iter().chain(alleys) {
        let state = expand_parts(&parts, n, map)?;
        vectors.push(BasisVector {
            label,
            kind,
            parts,
            state,
        });
    }
    Ok(SubspaceBasis {
        backend,
        register: reg.clone(),
        vectors,
        useful_length: c.useful_length(),
    })
}

struct Branches {
    lo: Vec<C64>,
    up: Vec<C64>,
    lo_after: Vec<C64>,
    up_after: Vec<C64>,
}

impl Branches {
    fn new(gate: &Gate, n: usize, phi: &[C64]) -> Self {
        let project = |m: &Mat2, q: usize| {
            let mut v = phi.to_vec();
            apply_mat2(m, n, q, &mut v);
            v
        };
        match *gate {
            Gate::Cnot { control, target } => {
                let lo = project(&PROJ0, control);
                let up = project(&PROJ1, control);
                let mut up_after = up.clone();
                apply_mat2(&PAULI_X, n, target, &mut up_after);
                Branches {
                    lo_after: lo.clone(),
                    lo,
                    up,
                    up_after,
                }
            }
            Gate::BasisPhase {
                target,
                theta,
                basis,
            } => {
                let lo = project(&basis_projector(&basis, 0), target);
                let up = project(&basis_projector(&basis, 1), target);
                let phase = C64::from_polar(1.0, -theta);
                Branches {
                    lo_after: lo.iter().map(|a| a * phase).collect(),
                    lo,
                    up_after: up.clone(),
                    up,
                }
            }
            _ => unreachable!("only switch gates are split"),
        }
    }
}

fn expand_parts(parts: &[BasisPart], n: usize, map: &ClockMap) -> Result<SparseState> {
    let mut state = SparseState::new();
    for part in parts {
        let label = map
            .get(&part.clock)
            .ok_or_else(|| Error::BasisMismatch(format!("clock map has no label {}", part.clock)))?;
        for (idx, &a) in part.work.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for cfg in &label.configs {
                let work_bits = (0..n).filter(|q| idx >> (n - 1 - q) & 1 == 1).map(|q| (q, 1u8));
                let clock = cfg.assign.iter().map(|(&s, &d)| (s, d));
                state.add(Config::from_pairs(work_bits.chain(clock)), a * cfg.amp);
            }
        }
    }
    Ok(state)
}

fn check_register(h: &TermList, b: &SubspaceBasis) -> Result<()> {
    if h.register.dims() != b.register.dims() {
        return Err(Error::RegisterMismatch(format!(
            "Hamiltonian has {} sites, basis has {}",
            h.register.len(),
            b.register.len()
        )));
    }
    Ok(())
}

/// `max_v |(I - P) H v|` with `P` the projector onto the span of the basis.
pub fn verify_invariance(h: &TermList, b: &SubspaceBasis) -> Result<f64> {
    check_register(h, b)?;
    let op = h.sparse_operator();
    let mut worst = 0.0f64;
    for v in &b.vectors {
        let mut r = op.apply(&v.state);
        let hv = r.clone();
        for u in &b.vectors {
            let overlap = u.state.inner(&hv);
            if overlap != ZERO {
                r.add_scaled(&u.state, -overlap);
            }
        }
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// `M[i][j] = <v_i|H|v_j>` with labels and the closure flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Restriction {
    pub labels: Vec<String>,
    pub dim: usize,
    #[serde(with = "crate::model::complex_pairs")]
    pub matrix: Vec<C64>,
    pub residual: f64,
    pub closed: bool,
}

impl Restriction {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[i * self.dim + j]
    }
}

pub fn restrict_hamiltonian(h: &TermList, b: &SubspaceBasis) -> Result<Restriction> {
    let residual = verify_invariance(h, b)?;
    let op = h.sparse_operator();
    let d = b.len();
    let mut matrix = vec![ZERO; d * d];
    for (j, v) in b.vectors.iter().enumerate() {
        let hv = op.apply(&v.state);
        for (i, u) in b.vectors.iter().enumerate() {
            matrix[i * d + j] = u.state.inner(&hv);
        }
    }
    Ok(Restriction {
        labels: b.labels(),
        dim: d,
        matrix,
        residual,
        closed: residual <= CLOSURE_TOL,
    })
}

/// Labeled weighted adjacency of the walk a backend should produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkGraph {
    pub labels: Vec<String>,
    pub dim: usize,
    #[serde(with = "crate::model::complex_pairs")]
    pub matrix: Vec<C64>,
}

impl WalkGraph {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[i * self.dim + j]
    }

    pub fn edge_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if self.get(i, j) != ZERO {
                    count += 1;
                }
            }
        }
        count
    }

    /// Largest entrywise difference to a restriction with the same labels.
    pub fn max_entry_error(&self, r: &Restriction) -> Result<f64> {
        if self.labels != r.labels {
            return Err(Error::BasisMismatch(
                "restriction labels differ from the expected walk".into(),
            ));
        }
        Ok(self
            .matrix
            .iter()
            .zip(&r.matrix)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// The walk graph read off the circuit alone: a path over clock labels,
/// subdivided at CNOTs (S3) or expanded into combs (Q23, Q22).
pub fn expected_walk_graph(c: &Circuit, backend: Backend) -> WalkGraph {
    let mut labels = vec![station_label(0)];
    let mut edges: Vec<(String, String, C64)> = Vec::new();
    let mut pendants: Vec<(String, String)> = Vec::new();
    for (i, gate) in c.gates().iter().enumerate() {
        let t = i + 1;
        let prev = station_label(i);
        let stops: Vec<&str> = match gate {
            Gate::Cnot { .. } if backend == Backend::S3 => vec!["1", "2"],
            Gate::Cnot { .. } | Gate::BasisPhase { .. } if backend.uses_comb() => {
                UPPER_STOPS.to_vec()
            }
            _ => Vec::new(),
        };
        let mut chain = vec![prev.clone()];
        chain.extend(stops.iter().map(|s| gadget_label(t, s)));
        chain.push(station_label(t));
        for k in 0..chain.len() - 1 {
            let w = match gate {
                Gate::BasisPhase { theta, .. } if stops.len() == 8 && k == 4 => {
                    C64::from_polar(1.0, *theta)
                }
                _ => ONE,
            };
            edges.push((chain[k + 1].clone(), chain[k].clone(), w));
        }
        labels.extend(chain[1..].iter().cloned());
        if stops.len() == 8 {
            pendants.push((gadget_label(t, "1x"), prev));
            pendants.push((gadget_label(t, "5x"), station_label(t)));
        }
    }
    for (p, anchor) in pendants {
        labels.push(p.clone());
        edges.push((p, anchor, ONE));
    }
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let d = labels.len();
    let mut matrix = vec![ZERO; d * d];
    for (to, from, w) in &edges {
        let (i, j) = (index[to.as_str()], index[from.as_str()]);
        matrix[i * d + j] = *w;
        matrix[j * d + i] = w.conj();
    }
    WalkGraph {
        labels,
        dim: d,
        matrix,
    }
}

/// Output of the `verify` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub backend: Backend,
    pub residual: f64,
    pub basis_size: usize,
    pub restriction_match: bool,
    pub max_entry_error: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.residual <= CLOSURE_TOL && self.restriction_match
    }
}

/// Builds the basis for `c`, checks closure under `h` and compares the
/// restriction with the expected walk graph.
pub fn verify(c: &Circuit, comp: &Compilation, h: &TermList) -> Result<VerifyReport> {
    let basis = build_computational_basis(c, comp)?;
    let r = restrict_hamiltonian(h, &basis)?;
    let expected = expected_walk_graph(c, comp.backend);
    let err = expected.max_entry_error(&r)?;
    Ok(VerifyReport {
        backend: comp.backend,
        residual: r.residual,
        basis_size: basis.len(),
        restriction_match: err <= ENTRY_TOL,
        max_entry_error: err,
    })
}

/// Work-register amplitudes of the part of `state` whose clock is exactly
/// `c_station = 1` with every other non-work site empty.
pub fn work_state_at(state: &SparseState, register: &Register, station: usize) -> Vec<C64> {
    let n = register
        .sites()
        .iter()
        .filter(|s| s.role == SiteRole::Work)
        .count();
    let mut w = vec![ZERO; 1 << n];
    'outer: for (cfg, &a) in &state.entries {
        let mut idx = 0usize;
        let mut hit = false;
        for (s, d) in cfg.pairs() {
            if s < n {
                idx |= 1 << (n - 1 - s);
            } else if s == station && d == 1 {
                hit = true;
            } else {
                continue 'outer;
            }
        }
        if hit {
            w[idx] += a;
        }
    }
    w
}

/// `|<a|b>|` for unit vectors, after normalizing.
pub fn overlap_fidelity(a: &[C64], b: &[C64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    inner(a, b).norm() / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::compiler::compile;
    use crate::model::Term;

    fn setup(text: &str, b: Backend) -> (Circuit, Compilation, SubspaceBasis) {
        let c = parse_circuit(text).unwrap();
        let comp = compile(&c, b).unwrap();
        let basis = build_computational_basis(&c, &comp).unwrap();
        (c, comp, basis)
    }

    #[test]
    fn basis_sizes() {
        let cnot = "qubits 2\ninput 11\ngate CNOT 0 1";
        assert_eq!(setup(cnot, Backend::F4).2.len(), 2);
        assert_eq!(setup(cnot, Backend::S3).2.len(), 4);
        assert_eq!(setup(cnot, Backend::Q23).2.len(), 12);
        assert_eq!(setup(cnot, Backend::Q22).2.len(), 12);
        let id4 = "qubits 1\ngate ID 0\ngate ID 0\ngate ID 0\ngate ID 0";
        let (_, _, b) = setup(id4, Backend::F4);
        assert_eq!(b.len(), 5);
        assert!(b.vectors.iter().all(|v| v.state.len() == 1));
    }

    #[test]
    fn control_zero_leaves_upper_track_empty() {
        let (_, _, b) = setup("qubits 2\ninput 01\ngate CNOT 0 1", Backend::Q23);
        for v in b.vectors.iter().filter(|v| v.kind == VertexKind::Intermediate) {
            let w = v.part_weights();
            assert!(w[1] < 1e-30, "{} has upper weight {}", v.label, w[1]);
            assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q22_cnot_is_closed_and_matches_comb() {
        let (c, comp, b) = setup("qubits 2\ninput 11\ngate CNOT 0 1", Backend::Q22);
        assert!(b.orthonormality_defect() < 1e-12);
        let rep = verify(&c, &comp, &comp.hamiltonian).unwrap();
        assert!(rep.residual <= 1e-10, "{rep:?}");
        assert!(rep.restriction_match, "{rep:?}");
    }

    #[test]
    fn comb_shape() {
        let c = parse_circuit("qubits 2\ngate CNOT 0 1").unwrap();
        let g = expected_walk_graph(&c, Backend::Q23);
        assert_eq!(g.dim, 12);
        assert_eq!(g.edge_count(), 11);
        let path = expected_walk_graph(&parse_circuit("qubits 1\ngate ID 0\ngate ID 0").unwrap(), Backend::F4);
        assert_eq!(path.dim, 3);
        assert_eq!(path.edge_count(), 2);
    }

    #[test]
    fn corrupted_hamiltonian_is_not_closed() {
        let (_, comp, b) = setup("qubits 2\ninput 10\ngate CNOT 0 1", Backend::Q22);
        let mut h = comp.hamiltonian.clone();
        h.push(Term {
            sites: vec![1],
            matrix: crate::linalg::mat2_flat(&PAULI_X),
            tag: "extra".into(),
        })
        .unwrap();
        assert!(verify_invariance(&h, &b).unwrap() > 0.1);
    }
}
