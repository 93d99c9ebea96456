//! Reference values computed without the rotor's closed forms.
//!
//! * `augmented_taylor`: exp of the 9x9 block matrix `[[A, I, 0], [0, 0, I], [0, 0, 0]]`,
//!   whose first block row is `(exp(A), phi1(A), phi2(A))`. The exponential is a
//!   30-term Taylor sum after scaling by `2^-s`, followed by `s` squarings.
//! * `quadrature_phi`: `phi_k(A) = int_0^1 exp((1 - s) A) s^(k-1) / (k-1)! ds` by a
//!   Golub-Welsch Gauss-Legendre rule, with the same Taylor exponential at each node.

#![allow(dead_code)]

use eep_core::Mat3;
use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

pub const TAYLOR_TERMS: usize = 30;

fn taylor_exp<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let norm = m.abs().row_sum().max();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut term = SMatrix::<f64, N, N>::identity();
    let mut sum = term;
    for k in 1..TAYLOR_TERMS {
        term = term * scaled / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn to_na(a: &Mat3) -> SMatrix<f64, 3, 3> {
    SMatrix::<f64, 3, 3>::from_fn(|i, j| a.0[i][j])
}

fn from_na(m: &SMatrix<f64, 3, 3>) -> Mat3 {
    let mut out = Mat3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out.0[i][j] = m[(i, j)];
        }
    }
    out
}

/// `[exp(A), phi1(A), phi2(A)]` from the augmented exponential.
pub fn augmented_taylor(a: &Mat3) -> [Mat3; 3] {
    let mut big = SMatrix::<f64, 9, 9>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            big[(i, j)] = a.0[i][j];
        }
        big[(i, 3 + i)] = 1.0;
        big[(3 + i, 6 + i)] = 1.0;
    }
    let e = taylor_exp(&big);
    let block = |c: usize| from_na(&e.fixed_view::<3, 3>(0, 3 * c).into_owned());
    [block(0), block(1), block(2)]
}

/// Plain Taylor exponential of a 3x3 matrix.
pub fn exp3(a: &Mat3) -> Mat3 {
    from_na(&taylor_exp(&to_na(a)))
}

/// Gauss-Legendre nodes and weights on `[0, 1]` from the Jacobi matrix eigenproblem.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let k_f = k as f64;
        let beta = k_f / (4.0 * k_f * k_f - 1.0).sqrt();
        jacobi[(k - 1, k)] = beta;
        jacobi[(k, k - 1)] = beta;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 + 0.5 * eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// `[phi1(A), phi2(A)]` by `points`-point quadrature of the integral representation.
pub fn quadrature_phi(a: &Mat3, points: usize) -> [Mat3; 2] {
    let mut phi1 = Mat3::ZERO;
    let mut phi2 = Mat3::ZERO;
    for (s, w) in gauss_legendre(points) {
        let e = exp3(&a.scale(1.0 - s));
        phi1 = phi1 + e.scale(w);
        phi2 = phi2 + e.scale(w * s);
    }
    [phi1, phi2]
}
