//! Small dense linear-algebra kernels used throughout the crate.
//!
//! Everything here operates on symmetric systems of modest size (window
//! length or out-of-sample count, at most a few hundred), so simple dense
//! algorithms are adequate and keep the crate free of LAPACK linkage.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Returns `None` if a pivot drops below `tol` (matrix not numerically PD).
pub fn cholesky(a: &ArrayView2<f64>, tol: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= tol {
            return None;
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / dj;
        }
    }
    Some(l)
}

/// Solves `L L' x = b` given the lower Cholesky factor.
pub fn chol_solve(l: &Array2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        for k in 0..i {
            let v = y[k] * l[[i, k]];
            y[i] -= v;
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = y[k] * l[[k, i]];
            y[i] -= v;
        }
        y[i] /= l[[i, i]];
    }
    y
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns `(eigenvalues, eigenvectors)` with `a ≈ V diag(w) V'`;
/// eigenvalues are sorted ascending and columns of `V` match that order.
pub fn eigh(a: &ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut m = a.to_owned();
    // symmetrize against tiny asymmetries from accumulation
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = s;
            m[[j, i]] = s;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut w: Vec<(f64, usize)> = (0..n).map(|i| (m[[i, i]], i)).collect();
    w.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut evals = Array1::<f64>::zeros(n);
    let mut evecs = Array2::<f64>::zeros((n, n));
    for (out, (val, idx)) in w.iter().enumerate() {
        evals[out] = *val;
        for k in 0..n {
            evecs[[k, out]] = v[[k, *idx]];
        }
    }
    (evals, evecs)
}

/// Solves the symmetric PSD system `a x = b` through the eigendecomposition,
/// zeroing eigenvalue directions below `cutoff_rel * max_eig`.
pub fn pinv_solve(a: &ArrayView2<f64>, b: &ArrayView1<f64>, cutoff_rel: f64) -> Array1<f64> {
    let (w, v) = eigh(a);
    let wmax = w.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cutoff = cutoff_rel * wmax;
    let n = a.nrows();
    let mut x = Array1::<f64>::zeros(n);
    for k in 0..n {
        if w[k].abs() > cutoff {
            let coef = v.column(k).dot(b) / w[k];
            for i in 0..n {
                x[i] += coef * v[[i, k]];
            }
        }
    }
    x
}

/// Largest eigenvalue of a symmetric matrix (0 for empty input).
pub fn max_eigenvalue(a: &ArrayView2<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let (w, _) = eigh(a);
    w[w.len() - 1]
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[[r, col]].abs() > m[[piv, col]].abs() {
                piv = r;
            }
        }
        if m[[piv, col]].abs() < 1e-300 {
            return Err(Error::Internal("singular matrix in invert".into()));
        }
        if piv != col {
            for k in 0..n {
                m.swap([piv, k], [col, k]);
                inv.swap([piv, k], [col, k]);
            }
        }
        let d = m[[col, col]];
        for k in 0..n {
            m[[col, k]] /= d;
            inv[[col, k]] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[[r, col]];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                let mv = m[[col, k]] * f;
                m[[r, k]] -= mv;
                let iv = inv[[col, k]] * f;
                inv[[r, k]] -= iv;
            }
        }
    }
    Ok(inv)
}

/// Max-magnitude entry of `f·x − 1`.
pub fn residual_inf(f: &ArrayView2<f64>, x: &ArrayView1<f64>) -> f64 {
    let r = f.dot(x);
    r.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_roundtrip() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let l = cholesky(&a.view(), 0.0).unwrap();
        let re = l.dot(&l.t());
        for i in 0..3 {
            for j in 0..3 {
                assert!((re[[i, j]] - a[[i, j]]).abs() < 1e-12);
            }
        }
        let b = array![1.0, -2.0, 0.5];
        let x = chol_solve(&l, &b.view());
        let bx = a.dot(&x);
        for i in 0..3 {
            assert!((bx[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a.view(), 0.0).is_none());
    }

    #[test]
    fn eigh_reconstructs() {
        let a = array![
            [2.0, -1.0, 0.3, 0.0],
            [-1.0, 2.5, -0.4, 0.2],
            [0.3, -0.4, 1.8, -0.6],
            [0.0, 0.2, -0.6, 3.1]
        ];
        let (w, v) = eigh(&a.view());
        let mut re = Array2::<f64>::zeros((4, 4));
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    re[[i, j]] += w[k] * v[[i, k]] * v[[j, k]];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert!((re[[i, j]] - a[[i, j]]).abs() < 1e-10);
            }
        }
        // ascending order
        for k in 1..4 {
            assert!(w[k] >= w[k - 1]);
        }
    }

    #[test]
    fn invert_matches_identity() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let inv = invert(&a).unwrap();
        let id = a.dot(&inv);
        assert!((id[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((id[[1, 1]] - 1.0).abs() < 1e-12);
        assert!(id[[0, 1]].abs() < 1e-12);
    }

    #[test]
    fn pinv_solve_handles_rank_deficiency() {
        // rank-1 PSD matrix, b in its range
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let b = array![1.0, 2.0];
        let x = pinv_solve(&a.view(), &b.view(), 1e-12);
        let ax = a.dot(&x);
        assert!((ax[0] - 1.0).abs() < 1e-10);
        assert!((ax[1] - 2.0).abs() < 1e-10);
    }
}
