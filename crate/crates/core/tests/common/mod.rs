//! Finite-difference oracle: an independent curvature pipeline built purely
//! on pointwise expression evaluation. Nothing here touches jets, so it can
//! arbitrate the jet-based implementation.
#![allow(dead_code)] // each test binary uses a different subset

use conformal_core::chart::MetricSpec;
use nalgebra::DMatrix;

pub const FD_STEP: f64 = 1e-4;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Metric values by plain expression evaluation.
pub fn g_at(spec: &MetricSpec, x: &[f64]) -> Vec<Vec<f64>> {
    let n = spec.dim;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| spec.g[i][j].eval(x).expect("metric evaluates"))
                .collect()
        })
        .collect()
}

pub fn g_inv_at(spec: &MetricSpec, x: &[f64]) -> Vec<Vec<f64>> {
    let n = spec.dim;
    let g = g_at(spec, x);
    let m = DMatrix::from_fn(n, n, |i, j| g[i][j]);
    let inv = m.try_inverse().expect("metric invertible");
    (0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)]).collect())
        .collect()
}

/// Central difference of a scalar-valued function of the point.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], a: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    xp[a] += h;
    let mut xm = x.to_vec();
    xm[a] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Christoffel symbols from finite differences of the metric expressions.
pub fn fd_christoffel(spec: &MetricSpec, x: &[f64], h: f64) -> Vec<Vec<Vec<f64>>> {
    let n = spec.dim;
    let ginv = g_inv_at(spec, x);
    let dg = |l: usize, a: usize, b: usize| {
        fd_partial(&|y: &[f64]| g_at(spec, y)[a][b], x, l, h)
    };
    let mut gamma = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += 0.5 * ginv[k][l] * (dg(a, l, b) + dg(b, l, a) - dg(l, a, b));
                }
                gamma[k][a][b] = acc;
            }
        }
    }
    gamma
}

/// (0,4) Riemann tensor from nested finite differences of the Christoffel
/// pipeline: R_{ijkl} = g_{lm}(∂_iΓ^m_{jk} − ∂_jΓ^m_{ik} + ΓΓ − ΓΓ).
pub fn fd_riemann(spec: &MetricSpec, x: &[f64], h: f64) -> Vec<f64> {
    let n = spec.dim;
    let gamma = fd_christoffel(spec, x, h);
    let g = g_at(spec, x);
    let dgamma = |d: usize, m: usize, a: usize, b: usize| {
        fd_partial(&|y: &[f64]| fd_christoffel(spec, y, h)[m][a][b], x, d, h)
    };
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut up = vec![0.0; n];
                    for (m, item) in up.iter_mut().enumerate() {
                        let mut acc = dgamma(i, m, j, k) - dgamma(j, m, i, k);
                        for q in 0..n {
                            acc += gamma[m][i][q] * gamma[q][j][k]
                                - gamma[m][j][q] * gamma[q][i][k];
                        }
                        *item = acc;
                    }
                    let mut low = 0.0;
                    for (m, um) in up.iter().enumerate() {
                        low += g[l][m] * um;
                    }
                    out[((i * n + j) * n + k) * n + l] = low;
                }
            }
        }
    }
    out
}

/// Ricci and scalar curvature from the finite-difference Riemann.
pub fn fd_ricci_scal(spec: &MetricSpec, x: &[f64], h: f64) -> (Vec<Vec<f64>>, f64) {
    let n = spec.dim;
    let riem = fd_riemann(spec, x, h);
    let ginv = g_inv_at(spec, x);
    let mut ric = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                for d in 0..n {
                    acc += ginv[c][d] * riem[((a * n + c) * n + d) * n + b];
                }
            }
            ric[a][b] = acc;
        }
    }
    let mut scal = 0.0;
    for a in 0..n {
        for b in 0..n {
            scal += ginv[a][b] * ric[a][b];
        }
    }
    (ric, scal)
}
