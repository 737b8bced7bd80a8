//! Eigendecomposition of complex Hermitian matrices by cyclic Jacobi rotations.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Jacobi rotation, so the iterate stays
//! Hermitian and converges to a real diagonal.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

const MAX_SWEEPS: usize = 64;

/// Eigenpairs sorted by descending eigenvalue; column `k` of `eigvecs`
/// belongs to `eigvals[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen<T> {
    pub eigvecs: Array2<Cplx<T>>,
    pub eigvals: Vec<T>,
}

pub fn frobenius<T: Real>(a: &Array2<Cplx<T>>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Largest `|a_ij − conj(a_ji)|`.
pub fn hermitian_defect<T: Real>(a: &Array2<Cplx<T>>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_eig<T: Real>(a: &Array2<Cplx<T>>) -> Result<HermitianEigen<T>> {
    let (n, cols) = a.dim();
    if n != cols {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {n}x{cols}"
        )));
    }
    if !a.iter().all(crate::scalar::is_finite_c) {
        return Err(Error::NonFinite { stage: "hermitian_eig" });
    }
    let scale = frobenius(a);
    let tol = T::lit(1e-8).max(T::lit(100.0) * T::epsilon()) * scale.max(T::min_positive_value());
    let defect = hermitian_defect(a);
    if defect > tol {
        return Err(Error::NotHermitian(defect.as_f64()));
    }

    let zero = Cplx::new(T::zero(), T::zero());
    let one = Cplx::new(T::one(), T::zero());
    // Work on the exact Hermitian part.
    let mut w = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Cplx::new(a[[i, i]].re, T::zero())
        } else {
            (a[[i, j]] + a[[j, i]].conj()) * T::half()
        }
    });
    let mut v = Array2::from_shape_fn((n, n), |(i, j)| if i == j { one } else { zero });

    let target = (T::epsilon() * scale).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += w[[p, q]].norm_sqr();
            }
        }
        if off <= target || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w[[j, j]]
            .re
            .partial_cmp(&w[[i, i]].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigvals = order.iter().map(|&k| w[[k, k]].re).collect();
    let eigvecs = Array2::from_shape_fn((n, n), |(i, k)| v[[i, order[k]]]);
    Ok(HermitianEigen { eigvecs, eigvals })
}

fn rotate<T: Real>(w: &mut Array2<Cplx<T>>, v: &mut Array2<Cplx<T>>, p: usize, q: usize) {
    let apq = w[[p, q]];
    let mag = apq.norm();
    if mag <= T::min_positive_value() {
        return;
    }
    let phase = apq / mag;
    let app = w[[p, p]].re;
    let aqq = w[[q, q]].re;
    let theta = (aqq - app) / (T::two() * mag);
    let t = if theta == T::zero() {
        T::one()
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    // G = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane.
    let ph = phase.conj();
    let g_pp = Cplx::new(c, T::zero());
    let g_pq = Cplx::new(s, T::zero());
    let g_qp = ph * (-s);
    let g_qq = ph * c;

    let n = w.nrows();
    for k in 0..n {
        let (wkp, wkq) = (w[[k, p]], w[[k, q]]);
        w[[k, p]] = wkp * g_pp + wkq * g_qp;
        w[[k, q]] = wkp * g_pq + wkq * g_qq;
    }
    for k in 0..n {
        let (wpk, wqk) = (w[[p, k]], w[[q, k]]);
        w[[p, k]] = g_pp.conj() * wpk + g_qp.conj() * wqk;
        w[[q, k]] = g_pq.conj() * wpk + g_qq.conj() * wqk;
    }
    w[[p, q]] = Cplx::new(T::zero(), T::zero());
    w[[q, p]] = Cplx::new(T::zero(), T::zero());
    w[[p, p]] = Cplx::new(app - t * mag, T::zero());
    w[[q, q]] = Cplx::new(aqq + t * mag, T::zero());

    for k in 0..n {
        let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
        v[[k, p]] = vkp * g_pp + vkq * g_qp;
        v[[k, q]] = vkp * g_pq + vkq * g_qq;
    }
}
