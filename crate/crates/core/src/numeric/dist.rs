use nalgebra::{DMatrix, DVector};

use super::subspace::Subspace;
use crate::error::{Error, Result};
use crate::mixed_norm::{lp_norm, mixed_norm_slice, ExponentPair, MixedMatrix};

pub const DIST_MAX_ITER: usize = 500;

/// Minimizer state for `min_c ‖x - Bc‖`.
#[derive(Clone, Debug)]
pub(crate) struct DistSolve {
    pub value: f64,
    pub coeffs: DVector<f64>,
    /// A (sub)gradient of the norm at the optimal residual.
    pub norm_grad: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn is_euclidean(e: ExponentPair) -> bool {
    e.p.recip() == 0.5 && e.theta.recip() == 0.5
}

/// A subgradient of `‖·‖_{p,θ}` at `r` (column-major, `m` rows).
pub(crate) fn norm_gradient(r: &[f64], m: usize, e: ExponentPair, value: f64) -> DVector<f64> {
    let mut g = DVector::zeros(r.len());
    if value == 0.0 {
        return g;
    }
    let cols: Vec<&[f64]> = r.chunks(m).collect();
    let inner: Vec<f64> = cols.iter().map(|c| lp_norm(c.iter().copied(), e.p)).collect();
    let (rp, rt) = (e.p.recip(), e.theta.recip());
    // outer weights ∂F/∂N_j
    let outer: Vec<f64> = if rt == 0.0 {
        let top = inner.iter().copied().fold(0.0, f64::max);
        let hits = inner.iter().filter(|&&v| v == top).count() as f64;
        inner.iter().map(|&v| if v == top { 1.0 / hits } else { 0.0 }).collect()
    } else if rt == 1.0 {
        inner.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect()
    } else {
        let te = 1.0 / rt;
        inner.iter().map(|&v| (v / value).powf(te - 1.0)).collect()
    };
    for (j, col) in cols.iter().enumerate() {
        let nj = inner[j];
        if nj == 0.0 || outer[j] == 0.0 {
            continue;
        }
        if rp == 0.0 {
            let hits = col.iter().filter(|v| v.abs() == nj).count() as f64;
            for (i, &v) in col.iter().enumerate() {
                if v.abs() == nj {
                    g[j * m + i] = outer[j] * v.signum() / hits;
                }
            }
        } else {
            let pe = 1.0 / rp;
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    let w = if rp == 1.0 { 1.0 } else { (v.abs() / nj).powf(pe - 1.0) };
                    g[j * m + i] = outer[j] * w * v.signum();
                }
            }
        }
    }
    g
}

fn residual(x: &DVector<f64>, b: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    x - b * c
}

/// BFGS with Armijo backtracking on `f(c) = ‖x - Bc‖`; exact projection for `(2,2)`.
pub(crate) fn solve_dist(
    x: &DVector<f64>,
    b: &DMatrix<f64>,
    m: usize,
    e: ExponentPair,
    tol: f64,
    warm: Option<&DVector<f64>>,
    max_iter: usize,
) -> DistSolve {
    let n = b.ncols();
    let f = |c: &DVector<f64>| {
        let r = residual(x, b, c);
        (mixed_norm_slice(r.as_slice(), m, e), r)
    };
    if n == 0 && !is_euclidean(e) {
        let v = mixed_norm_slice(x.as_slice(), m, e);
        let g = norm_gradient(x.as_slice(), m, e, v);
        return DistSolve { value: v, coeffs: DVector::zeros(0), norm_grad: g, converged: true, iterations: 0 };
    }
    if is_euclidean(e) {
        let c = b.transpose() * x;
        let r = residual(x, b, &c);
        let v = r.norm();
        let g = if v > 0.0 { &r / v } else { DVector::zeros(r.len()) };
        return DistSolve { value: v, coeffs: c, norm_grad: g, converged: true, iterations: 0 };
    }
    let mut c = match warm {
        Some(w) if w.len() == n => w.clone(),
        _ => b.transpose() * x,
    };
    let (mut fv, r) = f(&c);
    let mut ng = norm_gradient(r.as_slice(), m, e, fv);
    let mut grad = -(b.transpose() * &ng);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    let mut it = 0;
    while it < max_iter {
        if fv <= tol || grad.norm() <= tol {
            converged = true;
            break;
        }
        it += 1;
        let mut d = -(&h * &grad);
        let mut slope = grad.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -grad.clone();
            slope = grad.dot(&d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let cn = &c + &d * step;
            let (fnv, rn) = f(&cn);
            if fnv <= fv + 1e-4 * step * slope {
                accepted = Some((cn, fnv, rn));
                break;
            }
            step *= 0.5;
        }
        let Some((cn, fnv, rn)) = accepted else {
            break;
        };
        let ngn = norm_gradient(rn.as_slice(), m, e, fnv);
        let gn = -(b.transpose() * &ngn);
        let s = &cn - &c;
        let y = &gn - &grad;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(n, n);
            let a = &id - &s * y.transpose() * rho;
            h = &a * &h * a.transpose() + &s * s.transpose() * rho;
        }
        let small = (fv - fnv).abs() <= 1e-15 * fv.max(1e-300);
        c = cn;
        fv = fnv;
        ng = ngn;
        grad = gn;
        if small {
            break;
        }
    }
    if !converged && (fv <= tol || grad.norm() <= tol) {
        converged = true;
    }
    DistSolve { value: fv, coeffs: c, norm_grad: ng, converged, iterations: it }
}

/// Distance from `x` to `L` in `l_{q,σ}`; exact for `q = σ = 2`.
///
/// On nonconvergence the error carries the best value found, which is still
/// an upper bound on the distance.
pub fn dist_to_subspace(
    x: &MixedMatrix,
    l: &Subspace,
    target: ExponentPair,
    tol: f64,
) -> Result<f64> {
    if x.shape().len() != l.ambient_dim() {
        return Err(Error::ShapeMismatch(format!(
            "point of dimension {} vs subspace in dimension {}",
            x.shape().len(),
            l.ambient_dim()
        )));
    }
    let xv = DVector::from_column_slice(x.as_slice());
    let s = solve_dist(&xv, l.basis(), x.shape().m, target, tol, None, DIST_MAX_ITER);
    if !s.converged {
        return Err(Error::NonConvergence { iterations: s.iterations, best: s.value });
    }
    Ok(s.value)
}
