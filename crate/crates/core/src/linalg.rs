//! Small dense complex matrix helpers shared by the circuit and term builders.
//!
//! Matrices are row-major `Vec<C64>` of size `d * d`; the local operators in
//! this crate never exceed 16x16, so nothing here tries to be clever.

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

pub const IDENTITY2: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
pub const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Z: Mat2 = [[ONE, ZERO], [ZERO, C64 { re: -1.0, im: 0.0 }]];
/// |0><0|
pub const PROJ0: Mat2 = [[ONE, ZERO], [ZERO, ZERO]];
/// |1><1|
pub const PROJ1: Mat2 = [[ZERO, ZERO], [ZERO, ONE]];

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat2_flat(a: &Mat2) -> Vec<C64> {
    vec![a[0][0], a[0][1], a[1][0], a[1][1]]
}

/// `max |U^dagger U - I|` entrywise.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    let p = mat2_mul(&mat2_dagger(u), u);
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[i][j] - target).norm());
        }
    }
    worst
}

/// B (|0><0| + e^{i theta}|1><1|) B^dagger
pub fn basis_phase_matrix(theta: f64, basis: &Mat2) -> Mat2 {
    let d = [[ONE, ZERO], [ZERO, C64::from_polar(1.0, theta)]];
    mat2_mul(&mat2_mul(basis, &d), &mat2_dagger(basis))
}

/// B |k><k| B^dagger
pub fn basis_projector(basis: &Mat2, k: usize) -> Mat2 {
    let p = if k == 0 { PROJ0 } else { PROJ1 };
    mat2_mul(&mat2_mul(basis, &p), &mat2_dagger(basis))
}

/// Kronecker product of two row-major square matrices (`a` is the more
/// significant factor).
pub fn kron(a: &[C64], da: usize, b: &[C64], db: usize) -> Vec<C64> {
    let d = da * db;
    let mut out = vec![ZERO; d * d];
    for i in 0..da {
        for j in 0..da {
            let aij = a[i * da + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k) * d + (j * db + l)] = aij * b[k * db + l];
                }
            }
        }
    }
    out
}

pub fn dagger(a: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = a[i * d + j].conj();
        }
    }
    out
}

pub fn hermitian_defect(a: &[C64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((a[i * d + j] - a[j * d + i].conj()).norm());
        }
    }
    worst
}

/// Spectral norm (largest singular value).
pub fn operator_norm(a: &[C64], d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let m = DMatrix::from_row_slice(d, d, a);
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// <a|b>
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// |<a|b>| / (|a| |b|), the global-phase-insensitive overlap.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    inner(a, b).norm() / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_orders_first_factor_most_significant() {
        let x = mat2_flat(&PAULI_X);
        let i = mat2_flat(&IDENTITY2);
        let xi = kron(&x, 2, &i, 2);
        // X on the first qubit maps |00> (0) to |10> (2)
        assert_eq!(xi[2 * 4], ONE);
        assert_eq!(xi[4], ZERO);
    }

    #[test]
    fn basis_phase_with_identity_basis_is_diagonal() {
        let w = basis_phase_matrix(std::f64::consts::PI, &IDENTITY2);
        assert!((w[0][0] - ONE).norm() < 1e-15);
        assert!((w[1][1] + ONE).norm() < 1e-15);
        assert!(unitarity_defect(&w) < 1e-15);
    }

    #[test]
    fn operator_norm_of_hop() {
        // |01><10| + h.c. on two qubits has norm 1
        let mut m = vec![ZERO; 16];
        m[4 + 2] = ONE;
        m[2 * 4 + 1] = ONE;
        assert!((operator_norm(&m, 4) - 1.0).abs() < 1e-12);
    }
}
