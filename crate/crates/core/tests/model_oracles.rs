mod common;

use hqc_core::circuit::parse_circuit;
use hqc_core::compiler::{compile, compile_feynman4, Backend};
use hqc_core::linalg::{c, kron, max_abs_diff, C64, IDENTITY2, ONE, PAULI_X, PAULI_Z, ZERO};
use hqc_core::model::{Register, SiteRole, Term, TermList};
use hqc_core::sparse::{Config, SparseState};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense embedding built by permuting the term into place via explicit
/// digit arithmetic, independent of the library's kernels.
fn brute_force_matrix(h: &TermList) -> Vec<C64> {
    let dims = h.register.dims();
    let dim: usize = dims.iter().product();
    let digits = |mut i: usize| {
        let mut d = vec![0; dims.len()];
        for s in (0..dims.len()).rev() {
            d[s] = i % dims[s];
            i /= dims[s];
        }
        d
    };
    let mut m = vec![ZERO; dim * dim];
    for t in &h.terms {
        let tdims: Vec<usize> = t.sites.iter().map(|&s| dims[s]).collect();
        let local: usize = tdims.iter().product();
        for row in 0..dim {
            let dr = digits(row);
            for col in 0..dim {
                let dc = digits(col);
                let same_outside = (0..dims.len())
                    .all(|s| t.sites.contains(&s) || dr[s] == dc[s]);
                if !same_outside {
                    continue;
                }
                let li = |d: &[usize]| t.sites.iter().zip(&tdims).fold(0, |a, (&s, &n)| a * n + d[s]);
                m[row * dim + col] += t.matrix[li(&dr) * local + li(&dc)];
            }
        }
    }
    m
}

fn random_state(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    (0..dim).map(|_| c(u(), u())).collect()
}

#[test]
fn apply_matches_brute_force_embedding_on_every_backend() {
    let circ = parse_circuit("qubits 1\ninput 1\ngate W 0 0.4 0.6 0 0.8 0 -0.8 0 0.6 0").unwrap();
    let cnot = parse_circuit("qubits 2\ninput 10\ngate CNOT 1 0").unwrap();
    for (c, backends) in [(&circ, &Backend::ALL[..]), (&cnot, &Backend::ALL[..3])] {
        for &b in backends {
            let h = compile(c, b).unwrap().hamiltonian;
            let dim = h.register.total_dim().unwrap();
            if dim > 1 << 14 {
                continue;
            }
            let dense = brute_force_matrix(&h);
            let psi = random_state(dim, 11);
            let expect: Vec<C64> = (0..dim)
                .map(|r| (0..dim).map(|k| dense[r * dim + k] * psi[k]).sum())
                .collect();
            let got = h.apply(&psi).unwrap();
            assert!(max_abs_diff(&got, &expect) < 1e-12, "{b}");
            let csr = h.embed_full().unwrap();
            assert!(max_abs_diff(&csr.matvec(&psi), &expect) < 1e-12, "{b}");
            assert!(csr.hermitian_defect() <= 1e-12, "{b}");
        }
    }
}

#[test]
fn compiled_hamiltonians_are_hermitian() {
    let c = parse_circuit("qubits 2\ninput 11\ngate CNOT 0 1").unwrap();
    for b in Backend::ALL {
        let h = compile(&c, b).unwrap().hamiltonian;
        let csr = h.embed_full().unwrap();
        assert!(csr.hermitian_defect() <= 1e-12, "{b}");
    }
}

#[test]
fn sparse_apply_agrees_with_dense() {
    let c = parse_circuit("qubits 2\ninput 11\ngate CNOT 0 1").unwrap();
    for b in [Backend::S3, Backend::Q23] {
        let h = compile(&c, b).unwrap().hamiltonian;
        let dim = h.register.total_dim().unwrap();
        let psi = random_state(dim, 5);
        let dense = h.apply(&psi).unwrap();
        let sparse = h.apply_sparse(&SparseState::from_dense(&psi, &h.register, 0.0));
        assert!(max_abs_diff(&sparse.to_dense(&h.register), &dense) < 1e-12);
    }
}

#[test]
fn feynman_identity_moves_history_state_forward() {
    let c = parse_circuit("qubits 1\ninput 0\ngate ID 0\ngate ID 0").unwrap();
    let comp = compile_feynman4(&c).unwrap();
    let reg = comp.register();
    let c0 = reg.find("c_0").unwrap();
    let c1 = reg.find("c_1").unwrap();
    let mut psi0 = SparseState::new();
    psi0.add(Config::from_pairs([(c0, 1)]), ONE);
    let out = comp.hamiltonian.apply_sparse(&psi0);
    assert_eq!(out.len(), 1);
    assert_eq!(out.get(&Config::from_pairs([(c1, 1)])), ONE);
}

#[test]
fn zz_difference_annihilates_aligned_pairs() {
    // (Z1 - Z2)/2 (x) X on (u, u', q): |00>phi and |11>phi are killed
    let z = hqc_core::linalg::mat2_flat(&PAULI_Z);
    let i = hqc_core::linalg::mat2_flat(&IDENTITY2);
    let x = hqc_core::linalg::mat2_flat(&PAULI_X);
    let diff: Vec<C64> = kron(&z, 2, &i, 2)
        .iter()
        .zip(kron(&i, 2, &z, 2))
        .map(|(a, b)| (a - b) * 0.5)
        .collect();
    let op = kron(&diff, 4, &x, 2);
    for pair in [0usize, 3] {
        for q in 0..2 {
            let col = pair * 2 + q;
            assert!((0..8).all(|r| op[r * 8 + col] == ZERO));
        }
    }
}

#[test]
fn json_round_trip_is_byte_identical() {
    for c in common::suite().iter().take(10) {
        for b in Backend::ALL {
            let comp = compile(c, b).unwrap();
            let a = comp.to_json().unwrap();
            let back = hqc_core::compiler::Compilation::from_json(&a).unwrap();
            assert_eq!(back, comp);
            assert_eq!(back.to_json().unwrap(), a);
        }
    }
}

#[test]
fn term_list_json_layout() {
    let mut r = Register::new();
    r.push(2, SiteRole::Work, "q0");
    let mut h = TermList::new(r);
    h.push(Term {
        sites: vec![0],
        matrix: hqc_core::linalg::mat2_flat(&PAULI_X),
        tag: "x".into(),
    })
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&h.to_json().unwrap()).unwrap();
    assert_eq!(v["sites"][0]["label"], "q0");
    assert_eq!(v["sites"][0]["role"], "work");
    assert_eq!(v["terms"][0]["matrix"][1], serde_json::json!([1.0, 0.0]));
}

#[test]
fn audit_reports_degrees() {
    let c = parse_circuit("qubits 2\ninput 11\ngate CNOT 0 1").unwrap();
    let a = compile(&c, Backend::Q22).unwrap().hamiltonian.audit();
    assert_eq!(a.max_arity, 2);
    assert_eq!(a.per_site_degree.len(), 20);
    let total: usize = a.per_site_degree.iter().map(|d| d.degree).sum();
    assert_eq!(total, 2 * a.term_count);
}
