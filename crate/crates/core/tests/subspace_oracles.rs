mod common;

use hqc_core::circuit::parse_circuit;
use hqc_core::compiler::{compile, Backend};
use hqc_core::linalg::{inner, norm, C64, ONE, ZERO};
use hqc_core::subspace::{
    build_computational_basis, expected_walk_graph, restrict_hamiltonian, verify, VertexKind,
};

#[test]
fn f4_identity_restricts_to_path_adjacency() {
    let c = parse_circuit("qubits 1\ngate ID 0\ngate ID 0\ngate ID 0").unwrap();
    let comp = compile(&c, Backend::F4).unwrap();
    let basis = build_computational_basis(&c, &comp).unwrap();
    let r = restrict_hamiltonian(&comp.hamiltonian, &basis).unwrap();
    assert!(r.closed);
    assert_eq!(r.dim, 4);
    for i in 0..4usize {
        for j in 0..4 {
            let want = if i.abs_diff(j) == 1 { ONE } else { ZERO };
            assert!((r.get(i, j) - want).norm() < 1e-12);
        }
    }
}

#[test]
fn q23_cnot_comb_has_pendants_at_the_gadget_ends() {
    let c = parse_circuit("qubits 2\ninput 11\ngate CNOT 0 1").unwrap();
    let comp = compile(&c, Backend::Q23).unwrap();
    let basis = build_computational_basis(&c, &comp).unwrap();
    assert_eq!(basis.len(), 12);
    let kinds = |k| basis.vectors.iter().filter(|v| v.kind == k).count();
    assert_eq!(kinds(VertexKind::Station), 2);
    assert_eq!(kinds(VertexKind::Intermediate), 8);
    assert_eq!(kinds(VertexKind::BlindAlley), 2);
    let r = restrict_hamiltonian(&comp.hamiltonian, &basis).unwrap();
    let at = |a: &str, b: &str| r.get(basis.index_of(a).unwrap(), basis.index_of(b).unwrap());
    assert!((at("g1:1x", "t=0") - ONE).norm() < 1e-12);
    assert!((at("g1:5x", "t=1") - ONE).norm() < 1e-12);
    assert!((at("g1:1A", "t=0") - ONE).norm() < 1e-12);
    assert!((at("g1:5B", "t=1") - ONE).norm() < 1e-12);
    // pendants are leaves
    for p in ["g1:1x", "g1:5x"] {
        let i = basis.index_of(p).unwrap();
        let deg = (0..r.dim).filter(|&j| r.get(i, j).norm() > 1e-12).count();
        assert_eq!(deg, 1);
    }
}

#[test]
fn q22_phase_gadget_carries_the_angle_on_one_edge() {
    let theta = 0.83;
    let c = parse_circuit(&format!("qubits 1\ninput 1\ngate W 0 {theta} 0.6 0 0.8 0 -0.8 0 0.6 0"))
        .unwrap();
    let comp = compile(&c, Backend::Q22).unwrap();
    let basis = build_computational_basis(&c, &comp).unwrap();
    let r = restrict_hamiltonian(&comp.hamiltonian, &basis).unwrap();
    let (a, b) = (basis.index_of("g1:3A").unwrap(), basis.index_of("g1:3B").unwrap());
    assert!((r.get(b, a) - C64::from_polar(1.0, theta)).norm() < 1e-12);
    let complex = r.matrix.iter().filter(|z| z.im.abs() > 1e-12).count();
    assert_eq!(complex, 2);
    let g = expected_walk_graph(&c, Backend::Q22);
    assert!(g.max_entry_error(&r).unwrap() < 1e-12);
}

#[test]
fn s3_subdivides_cnot_edges() {
    let c = parse_circuit("qubits 2\ninput 10\ngate CNOT 0 1\ngate ID 1").unwrap();
    let g = expected_walk_graph(&c, Backend::S3);
    assert_eq!(g.labels, ["t=0", "g1:1", "g1:2", "t=1", "t=2"]);
    let comp = compile(&c, Backend::S3).unwrap();
    let rep = verify(&c, &comp, &comp.hamiltonian).unwrap();
    assert!(rep.passed(), "{rep:?}");
    assert_eq!(rep.basis_size, 5);
}

#[test]
fn branch_weights_sum_to_one() {
    for c in common::suite() {
        for b in [Backend::S3, Backend::Q23, Backend::Q22] {
            let comp = compile(&c, b).unwrap();
            let basis = build_computational_basis(&c, &comp).unwrap();
            for v in &basis.vectors {
                let w: f64 = v.part_weights().iter().sum();
                assert!((w - 1.0).abs() < 1e-12, "{} {}", b, v.label);
            }
        }
    }
}

/// Residual recomputed with dense vectors and the explicit projector.
#[test]
fn residual_matches_dense_projector() {
    let two = "qubits 2\ninput 01\ngate CNOT 1 0\ngate W 0 1.1 Z";
    let one = "qubits 1\ninput 1\ngate W 0 1.1 Z";
    for (text, b) in [(two, Backend::F4), (two, Backend::S3), (one, Backend::Q23)] {
        let c = parse_circuit(text).unwrap();
        let comp = compile(&c, b).unwrap();
        let reg = comp.register();
        let basis = build_computational_basis(&c, &comp).unwrap();
        let dense: Vec<Vec<C64>> = basis.vectors.iter().map(|v| v.state.to_dense(reg)).collect();
        let mut worst = 0.0f64;
        for v in &dense {
            let hv = comp.hamiltonian.apply(v).unwrap();
            let mut r = hv.clone();
            for u in &dense {
                let ov = inner(u, &hv);
                r.iter_mut().zip(u).for_each(|(a, x)| *a -= ov * x);
            }
            worst = worst.max(norm(&r));
        }
        assert!(worst < 1e-12, "{b}: {worst}");
        let rep = verify(&c, &comp, &comp.hamiltonian).unwrap();
        assert!((rep.residual - worst).abs() < 1e-12);
    }
}

#[test]
fn verify_report_json_fields() {
    let c = parse_circuit("qubits 1\ngate ID 0\ngate ID 0\ngate ID 0\ngate ID 0").unwrap();
    let comp = compile(&c, Backend::F4).unwrap();
    let rep = verify(&c, &comp, &comp.hamiltonian).unwrap();
    let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
    assert_eq!(v["basis_size"], 5);
    assert_eq!(v["backend"], "f4");
    assert_eq!(v["restriction_match"], true);
}

#[test]
fn mismatched_circuit_is_rejected() {
    let c1 = parse_circuit("qubits 2\ngate CNOT 0 1").unwrap();
    let c2 = parse_circuit("qubits 2\ngate CNOT 0 1\ngate ID 0").unwrap();
    let comp = compile(&c1, Backend::Q23).unwrap();
    assert!(build_computational_basis(&c2, &comp).is_err());
}
