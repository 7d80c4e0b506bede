//! Random circuits shared by the integration tests.
#![allow(dead_code)]

use hqc_core::circuit::{Circuit, Gate, Input};
use hqc_core::linalg::{c, Mat2};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITE_SEED: u64 = 0x5eed_2024;
pub const SUITE_SIZE: usize = 60;

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// `[[cos a, -e^{ip} sin a], [e^{iq} sin a, e^{i(p+q)} cos a]]`
pub fn random_basis(rng: &mut ChaCha8Rng) -> Mat2 {
    let tau = std::f64::consts::TAU;
    let (a, p, q) = (unit(rng) * tau, unit(rng) * tau, unit(rng) * tau);
    let e = |x: f64| c(x.cos(), x.sin());
    [
        [c(a.cos(), 0.0), -e(p) * a.sin()],
        [e(q) * a.sin(), e(p + q) * a.cos()],
    ]
}

/// A circuit over identities, CNOTs and basis-phase gates with
/// `n <= 3`, `L <= 5` and at most two switch gates.
pub fn random_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let n = 1 + below(rng, 3);
    let len = 1 + below(rng, 5);
    let mut switches = 0;
    let mut gates = Vec::with_capacity(len);
    for _ in 0..len {
        let kind = below(rng, 3);
        let gate = if switches >= 2 || kind == 0 {
            Gate::Identity {
                target: below(rng, n),
            }
        } else if kind == 1 && n >= 2 {
            let control = below(rng, n);
            let target = (control + 1 + below(rng, n - 1)) % n;
            Gate::Cnot { control, target }
        } else {
            let basis = if below(rng, 2) == 0 {
                hqc_core::linalg::IDENTITY2
            } else {
                random_basis(rng)
            };
            Gate::BasisPhase {
                target: below(rng, n),
                theta: unit(rng) * std::f64::consts::TAU,
                basis,
            }
        };
        if gate.is_switch() {
            switches += 1;
        }
        gates.push(gate);
    }
    let bits = (0..n).map(|_| below(rng, 2) == 1).collect();
    Circuit::new(n, gates, Input::Bits(bits)).expect("valid random circuit")
}

pub fn suite() -> Vec<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    (0..SUITE_SIZE).map(|_| random_circuit(&mut rng)).collect()
}
