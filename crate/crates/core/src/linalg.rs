//! Thin SVD by one-sided Jacobi rotations.
//!
//! `nalgebra`'s bidiagonal SVD can return inaccurate singular vectors for
//! rank-deficient inputs at its default tolerance, which breaks image-basis
//! extraction. The matrices here are small, so Hestenes' method is cheap and
//! accurate to working precision.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

/// `A = U diag(s) Vᵀ` with `k = min(rows, cols)` columns in `U` and `V` and
/// `s` sorted in decreasing order. Both `U` and `V` have orthonormal columns;
/// those belonging to zero singular values are an arbitrary completion.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() < a.ncols() {
        let t = jacobi(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    jacobi(a)
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    svd(a).s
}

/// Requires `rows >= cols`.
fn jacobi(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * x - s * y;
                    u[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u_sorted = DMatrix::from_fn(m, n, |i, k| {
        let j = order[k];
        if norms[j] > 0.0 {
            u[(i, j)] / norms[j]
        } else {
            0.0
        }
    });
    let filled = s.iter().take_while(|x| **x > 0.0).count();
    complete(&mut u_sorted, filled);
    let v_sorted = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Svd { u: u_sorted, s, v: v_sorted }
}

/// Replaces columns `from..` by an orthonormal completion of the first ones,
/// drawn from coordinate vectors by Gram-Schmidt.
fn complete(q: &mut DMatrix<f64>, from: usize) {
    let m = q.nrows();
    let mut next = 0;
    for k in from..q.ncols() {
        while next < m {
            let mut c = nalgebra::DVector::zeros(m);
            c[next] = 1.0;
            next += 1;
            for _ in 0..2 {
                for j in 0..k {
                    let d = q.column(j).dot(&c);
                    c.axpy(-d, &q.column(j), 1.0);
                }
            }
            let n = c.norm();
            if n > 1e-8 {
                q.set_column(k, &(c / n));
                break;
            }
        }
    }
}
