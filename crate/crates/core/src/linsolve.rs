//! Matrix-free linear algebra for the Newton correction.
//!
//! The linearized operator is applied through FFTs, so the system is solved
//! with restarted GMRES, right-preconditioned by a constant-coefficient
//! Helmholtz operator `kappa lap/(4 pi) + nu` inverted exactly in Fourier
//! space. kappa and nu are the omega-means of the variable second- and
//! zeroth-order coefficients; no gauge fixing is needed because the
//! zeroth-order part keeps the constant mode invertible.

use std::f64::consts::PI;

use crate::error::{Result, VortexError};
use crate::geometry::{FieldKind, ScalarField, SurfaceGrid};

pub(crate) struct FourierHelmholtz {
    symbol: Vec<f64>,
}

impl FourierHelmholtz {
    /// Inverse of `kappa lap/(4 pi) + nu`; nu is clamped away from zero so
    /// every mode (including k = 0) stays invertible.
    pub fn new(grid: &SurfaceGrid, kappa: f64, nu: f64) -> Self {
        let n = grid.n();
        let nu = nu.min(-1e-12 * kappa.abs().max(1.0));
        let mode = |i: usize| -> f64 {
            if i <= n / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            }
        };
        let mut symbol = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let k2 = mode(i) * mode(i) + mode(j) * mode(j);
                symbol[j * n + i] = -PI * kappa * k2 + nu;
            }
        }
        FourierHelmholtz { symbol }
    }

    pub fn apply_inverse(&self, grid: &SurfaceGrid, v: &ScalarField) -> ScalarField {
        let mut out = grid
            .spectral_filter(v, |idx, _| 1.0 / self.symbol[idx])
            .expect("preconditioner grid mismatch");
        out = out.with_kind(v.kind());
        out
    }
}

/// Right-preconditioned restarted GMRES on flat vectors.
///
/// `apply` must be linear; convergence is declared at
/// `|A x - b|_2 <= tol |b|_2`. Stagnation across a restart cycle is
/// reported as an error, which the Newton loop surfaces as a
/// near-singular-Jacobian nonconvergence.
pub(crate) fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iters: usize,
    restart: usize,
) -> Result<Vec<f64>> {
    let dim = b.len();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let bn = norm(b);
    let mut x = vec![0.0; dim];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut total_iters = 0;
    let mut last_cycle_res = f64::INFINITY;
    while total_iters < max_iters {
        let ax = apply(&x)?;
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bb, aa)| bb - aa).collect();
        let beta = norm(&r);
        if beta / bn <= tol {
            return Ok(x);
        }
        let m = restart.min(max_iters - total_iters);
        for v in r.iter_mut() {
            *v /= beta;
        }
        let mut basis: Vec<Vec<f64>> = vec![r];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut cols = 0;
        for j in 0..m {
            let mut w = apply(&precond(&basis[j]))?;
            for (i, q) in basis.iter().enumerate() {
                h[i][j] = dot(q, &w);
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= h[i][j] * qk;
                }
            }
            h[j + 1][j] = norm(&w);
            let happy = h[j + 1][j] <= 1e-300;
            if !happy {
                for v in w.iter_mut() {
                    *v /= h[j + 1][j];
                }
                basis.push(w);
            }
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            cols = j + 1;
            total_iters += 1;
            if g[cols].abs() / bn <= tol || happy {
                break;
            }
        }
        // back substitution
        let mut y = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for (jj, yj) in y.iter().enumerate().take(cols).skip(i + 1) {
                acc -= h[i][jj] * yj;
            }
            y[i] = acc / h[i][i];
        }
        let mut z = vec![0.0; dim];
        for (i, yi) in y.iter().enumerate() {
            for (zk, qk) in z.iter_mut().zip(&basis[i]) {
                *zk += yi * qk;
            }
        }
        let mz = precond(&z);
        for (xk, dk) in x.iter_mut().zip(&mz) {
            *xk += dk;
        }
        let cycle_res = g[cols].abs() / bn;
        if cycle_res <= tol {
            return Ok(x);
        }
        if cycle_res > 0.9 * last_cycle_res {
            return Err(VortexError::NonConvergence {
                final_norm: cycle_res,
                iters: total_iters,
                detail: "linear solve stagnated (near-singular Jacobian)".into(),
            });
        }
        last_cycle_res = cycle_res;
    }
    Err(VortexError::NonConvergence {
        final_norm: last_cycle_res,
        iters: total_iters,
        detail: "linear solve exceeded iteration budget".into(),
    })
}

/// Helper bridging flat vectors and fields.
pub(crate) fn field_from_flat(grid: &SurfaceGrid, kind: FieldKind, v: &[f64]) -> ScalarField {
    ScalarField::from_values(grid, kind, v.to_vec()).expect("flat vector length")
}
