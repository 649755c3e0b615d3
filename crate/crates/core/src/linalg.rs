//! Thin SVD by one-sided Jacobi rotations.
//!
//! nalgebra's bidiagonal SVD occasionally returns factors that do not
//! reconstruct the input on small dense matrices of the shapes used here,
//! so PCA and LSA go through this routine instead. Jacobi is very accurate;
//! a QR step first shrinks the problem to the short side, which stays at a
//! few hundred for our inputs.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct Svd {
    /// m x r, orthonormal columns wherever the singular value is non-zero.
    pub u: DMatrix<f64>,
    /// Non-increasing, length r = min(m, n).
    pub singular_values: Vec<f64>,
    /// n x r, orthonormal columns.
    pub v: DMatrix<f64>,
}

pub fn thin_svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() >= a.ncols() {
        let (u, s, v) = tall(a.clone());
        Svd { u, singular_values: s, v }
    } else {
        // A^T = U' S V'^T, so A = V' S U'^T
        let (u, s, v) = tall(a.transpose());
        Svd { u: v, singular_values: s, v: u }
    }
}

/// A = QR first, so the rotations run on the small square factor and the
/// cost no longer scales with the long side squared.
fn tall(a: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    if a.nrows() == a.ncols() {
        return jacobi(a);
    }
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let (ur, s, v) = jacobi(r);
    (q * ur, s, v)
}

/// Orthogonalizes the columns of square or tall `b`. Returns U, sigma, V
/// with columns sorted by decreasing sigma.
fn jacobi(mut b: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, p) = b.shape();
    let mut v = DMatrix::<f64>::identity(p, p);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..p {
            for k in j + 1..p {
                let (bj, bk) = column_pair(b.as_mut_slice(), rows, j, k);
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (x, y) in bj.iter().zip(bk.iter()) {
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
                rotate(bj, bk, c, s);
                let (vj, vk) = column_pair(v.as_mut_slice(), p, j, k);
                rotate(vj, vk, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..p).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    let mut u = DMatrix::zeros(rows, p);
    let mut vs = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        if sigma[src] > 0.0 {
            u.set_column(dst, &(b.column(src) / sigma[src]));
        }
        vs.set_column(dst, &v.column(src));
    }
    (u, order.iter().map(|&i| sigma[i]).collect(), vs)
}

/// Columns `j < k` of a column-major buffer.
fn column_pair(data: &mut [f64], rows: usize, j: usize, k: usize) -> (&mut [f64], &mut [f64]) {
    let (left, right) = data.split_at_mut(k * rows);
    (&mut left[j * rows..(j + 1) * rows], &mut right[..rows])
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let (m, n) = (rng.random_range(1..25), rng.random_range(1..25));
            let a = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() - 0.5);
            let svd = thin_svd(&a);
            let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(svd.singular_values.clone()));
            let back = &svd.u * s * svd.v.transpose();
            assert!((back - &a).amax() < 1e-12);
            let r = m.min(n);
            assert!((svd.v.transpose() * &svd.v - DMatrix::identity(r, r)).amax() < 1e-12);
            assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let svd = thin_svd(&a);
        assert!((svd.singular_values[0] - 70f64.sqrt()).abs() < 1e-12);
        assert!(svd.singular_values[1].abs() < 1e-12);
    }
}
