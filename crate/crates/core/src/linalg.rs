//! Small fixed-size complex linear algebra used by the state, measure and
//! channel modules.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix `k` (0 is the identity, 1..=3 are sigma_x, sigma_y, sigma_z).
pub fn pauli(k: usize) -> Mat2 {
    match k {
        0 => Mat2::new(ONE, ZERO, ZERO, ONE),
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Kronecker product `a ⊗ b`, with `a` acting on the first qubit.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Reduced state of the first qubit (trace over B).
pub fn trace_out_b(m: &Mat4) -> Mat2 {
    let mut out = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)];
        }
    }
    out
}

/// Reduced state of the second qubit (trace over A).
pub fn trace_out_a(m: &Mat4) -> Mat2 {
    let mut out = Mat2::zeros();
    for k in 0..2 {
        for l in 0..2 {
            out[(k, l)] = m[(k, l)] + m[(2 + k, 2 + l)];
        }
    }
    out
}

/// Eigenvalues of a 4×4 Hermitian matrix, ascending.
pub fn hermitian_eigenvalues4(m: &Mat4) -> [f64; 4] {
    let ev = m.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(f64::total_cmp);
    out
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
pub fn hermitian_eigenvalues2(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - half_gap, mean + half_gap]
}

/// `-Σ p log2 p` over eigenvalues, with `0 log 0 = 0` and round-off
/// negatives treated as zero.
pub fn entropy_of_eigenvalues(eigs: &[f64]) -> f64 {
    eigs.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy in bits of a 4×4 Hermitian matrix.
pub fn von_neumann_entropy4(m: &Mat4) -> f64 {
    entropy_of_eigenvalues(&hermitian_eigenvalues4(m))
}

/// Von Neumann entropy in bits of a 2×2 Hermitian matrix.
pub fn von_neumann_entropy2(m: &Mat2) -> f64 {
    entropy_of_eigenvalues(&hermitian_eigenvalues2(m))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
