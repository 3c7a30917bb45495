//! Reference computations that avoid the library's eigensolver-based paths.
#![allow(dead_code)]

use udmlab::linalg::{c, ComplexMatrix, C64};

/// `e^{-ikt}` by scaling and squaring of a truncated Taylor series.
pub fn taylor_propagator(k: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = k.rows();
    let a = k.scale(c(0.0, -t));
    let norm = a.frobenius_norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let a = a.scale(c(0.5f64.powi(squarings as i32), 0.0));
    let mut term = ComplexMatrix::identity(n);
    let mut sum = ComplexMatrix::identity(n);
    for j in 1..=30 {
        term = term.matmul(&a).scale(c(1.0 / j as f64, 0.0));
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Reduced state of qubit `keep` (1 or 2) of a 4x4 joint matrix, by explicit index sums.
pub fn reduce(joint: &ComplexMatrix, keep: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut s = C64::new(0.0, 0.0);
            for e in 0..2 {
                s += if keep == 1 { joint[(2 * i + e, 2 * j + e)] } else { joint[(2 * e + i, 2 * e + j)] };
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `tr_other[U (rho (x) env) U^dagger]` with `rho` placed on qubit `which`.
pub fn joint_reduced(
    u: &ComplexMatrix,
    rho: &ComplexMatrix,
    env: &ComplexMatrix,
    which: usize,
) -> ComplexMatrix {
    let joint = if which == 1 { kron2(rho, env) } else { kron2(env, rho) };
    reduce(&u.matmul(&joint).matmul(&u.dagger()), which)
}

pub fn kron2(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(4, 4);
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

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}
