//! Thick-restart Lanczos for the smallest eigenvalue on the complement of a
//! known eigenvector.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LanczosOptions {
    /// Basis size per cycle.
    pub basis: usize,
    /// Ritz vectors carried over a restart.
    pub keep: usize,
    /// Bound on `‖Av − θv‖₂` for a unit `v`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            basis: 30,
            keep: 10,
            tol: 1e-8,
            max_restarts: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖Av − θv‖₂`, recomputed from a fresh operator application.
    pub residual: f64,
    pub matvecs: usize,
    pub restarts: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Entries per cache block in the fused multi-vector kernels.
const BLOCK: usize = 2048;

/// `[v·w for v in basis]` in one pass over memory.
fn block_dots(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; basis.len()];
    for start in (0..w.len()).step_by(BLOCK) {
        let end = (start + BLOCK).min(w.len());
        let wb = &w[start..end];
        for (ci, v) in c.iter_mut().zip(basis) {
            *ci += dot(&v[start..end], wb);
        }
    }
    c
}

/// `w −= Σ c_i v_i` in one pass over memory.
fn block_subtract(basis: &[Vec<f64>], c: &[f64], w: &mut [f64]) {
    for start in (0..w.len()).step_by(BLOCK) {
        let end = (start + BLOCK).min(w.len());
        let wb = &mut w[start..end];
        for (ci, v) in c.iter().zip(basis) {
            axpy(-ci, &v[start..end], wb);
        }
    }
}

/// `out_k = Σ_j coef[k][j] v_j` for every `k`.
fn block_combine(basis: &[Vec<f64>], coef: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]; coef.len()];
    for start in (0..dim).step_by(BLOCK) {
        let end = (start + BLOCK).min(dim);
        for (o, ck) in out.iter_mut().zip(coef) {
            let ob = &mut o[start..end];
            for (a, v) in ck.iter().zip(basis) {
                axpy(*a, &v[start..end], ob);
            }
        }
    }
    out
}

/// Removes the components along `basis` and `deflate`; returns the
/// coefficients along `basis`. Classical Gram-Schmidt, repeated once when
/// the first pass cancels more than `1/√2` of the norm.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], deflate: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    let mut before = norm(w);
    for _ in 0..2 {
        let d = dot(deflate, w);
        axpy(-d, deflate, w);
        let c = block_dots(basis, w);
        block_subtract(basis, &c, w);
        for (hi, ci) in h.iter_mut().zip(&c) {
            *hi += ci;
        }
        let after = norm(w);
        if after > std::f64::consts::FRAC_1_SQRT_2 * before {
            break;
        }
        before = after;
    }
    h
}

/// Smallest eigenpair of the symmetric operator `apply` restricted to the
/// orthogonal complement of the unit vector `deflate`.
pub fn smallest_deflated(
    apply: impl Fn(&[f64], &mut [f64]),
    deflate: &[f64],
    opts: &LanczosOptions,
) -> Result<Eigenpair> {
    let dim = deflate.len();
    if dim < 2 {
        return Err(Error::BadParams("deflated space is empty".into()));
    }
    let m = opts.basis.min(dim - 1).max(1);
    let keep = opts.keep.min(m - 1);
    let mut rng = rng::stream(opts.seed, 0);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut start, &[], deflate);
    let nrm = norm(&start);
    start.iter_mut().for_each(|x| *x /= nrm);

    let mut v: Vec<Vec<f64>> = vec![start];
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut first = 0;
    let mut matvecs = 0;
    let mut w = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;
    for restart in 0..=opts.max_restarts {
        let mut size = m;
        let mut beta = 0.0;
        for j in first..m {
            apply(&v[j], &mut w);
            matvecs += 1;
            let h = orthogonalize(&mut w, &v[..=j], deflate);
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
            }
            beta = norm(&w);
            if beta <= 1e-14 * t[(j, j)].abs().max(1.0) || v.len() == dim - 1 {
                size = j + 1;
                beta = 0.0;
                break;
            }
            v.push(w.iter().map(|x| x / beta).collect());
        }
        let eig = SymmetricEigen::new(t.view((0, 0), (size, size)).into_owned());
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let y = &eig.eigenvectors;
        let best = order[0];
        last_residual = (beta * y[(size - 1, best)]).abs();
        if last_residual <= opts.tol || beta == 0.0 {
            let coef: Vec<f64> = (0..size).map(|j| y[(j, best)]).collect();
            let mut x = block_combine(&v[..size], &[coef], dim)
                .pop()
                .expect("one combination");
            let nx = norm(&x);
            x.iter_mut().for_each(|a| *a /= nx);
            let theta = eig.eigenvalues[best];
            apply(&x, &mut w);
            matvecs += 1;
            axpy(-theta, &x, &mut w);
            return Ok(Eigenpair {
                value: theta,
                vector: x,
                residual: norm(&w),
                matvecs,
                restarts: restart,
            });
        }
        let residual_vec = v.pop().expect("cycle produced a residual vector");
        let coef: Vec<Vec<f64>> = order
            .iter()
            .take(keep)
            .map(|&k| (0..size).map(|j| y[(j, k)]).collect())
            .collect();
        v = block_combine(&v[..size], &coef, dim);
        v.push(residual_vec);
        t.fill(0.0);
        for (i, &k) in order.iter().take(keep).enumerate() {
            t[(i, i)] = eig.eigenvalues[k];
            let c = beta * y[(size - 1, k)];
            t[(i, keep)] = c;
            t[(keep, i)] = c;
        }
        first = keep;
    }
    Err(Error::NoConvergence {
        iterations: matvecs,
        residual: last_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let dim = 200;
        let diag: Vec<f64> = (0..dim).map(|i| i as f64 * 0.05).collect();
        let mut deflate = vec![0.0; dim];
        deflate[0] = 1.0;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..dim {
                out[i] = diag[i] * x[i];
            }
        };
        let opts = LanczosOptions {
            basis: 12,
            keep: 4,
            ..Default::default()
        };
        let e = smallest_deflated(apply, &deflate, &opts).unwrap();
        assert!((e.value - 0.05).abs() < 1e-10, "{}", e.value);
        assert!(e.residual < 1e-7);
        assert!(e.restarts > 0);
    }

    #[test]
    fn tiny_space() {
        let deflate = vec![std::f64::consts::FRAC_1_SQRT_2; 2];
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] - x[1];
            out[1] = x[1] - x[0];
        };
        let e = smallest_deflated(apply, &deflate, &LanczosOptions::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
    }
}
