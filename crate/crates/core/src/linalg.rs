//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vect = DVector<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Eigenvalues of a general real matrix, sorted by decreasing modulus then by argument.
pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = m.clone().complex_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap().then(a.arg().partial_cmp(&b.arg()).unwrap()));
    v
}

pub fn spectral_radius(m: &Mat) -> f64 {
    eigenvalues(m).first().map_or(0.0, |z| z.norm())
}

/// `[[Re, −Im], [Im, Re]]`: a real matrix whose spectrum is that of `m` together with its conjugate.
pub fn realify(m: &CMat) -> Mat {
    let n = m.nrows();
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn complex_spectral_radius(m: &CMat) -> f64 {
    spectral_radius(&realify(m))
}

/// Groups sorted real values into `(value, multiplicity)` clusters of spread `tol`.
pub fn multiplicities(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for &x in sorted {
        match out.last_mut() {
            Some((_, cnt, sum)) if (x - *sum / *cnt as f64).abs() <= tol => {
                *cnt += 1;
                *sum += x;
            }
            _ => out.push((x, 1, x)),
        }
    }
    out.into_iter().map(|(_, c, s)| (s / c as f64, c)).collect()
}

/// Orthonormal basis of the range (column space) of `m`, by SVD with relative cut-off `tol`.
pub fn range_basis(m: &Mat, tol: f64) -> Mat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Mat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax.max(1.0))
        .collect();
    Mat::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

pub fn rank(m: &Mat, tol: f64) -> usize {
    range_basis(m, tol).ncols()
}

/// Orthonormal basis of the null space of `m`.
pub fn null_basis(m: &Mat, tol: f64) -> Mat {
    let n = m.ncols();
    let mtm = m.transpose() * m;
    let eig = mtm.symmetric_eigen();
    let scale = eig.eigenvalues.iter().copied().fold(0.0, f64::max).max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= tol * scale).collect();
    Mat::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

/// Dimension of the intersection of two column spaces.
pub fn intersection_dim(a: &Mat, b: &Mat, tol: f64) -> usize {
    let ra = rank(a, tol);
    let rb = rank(b, tol);
    let joined = Mat::from_fn(a.nrows(), a.ncols() + b.ncols(), |i, j| {
        if j < a.ncols() {
            a[(i, j)]
        } else {
            b[(i, j - a.ncols())]
        }
    });
    (ra + rb).saturating_sub(rank(&joined, tol))
}

pub fn solve(m: &Mat, b: &Vect) -> Result<Vect> {
    m.clone().lu().solve(b).ok_or_else(|| Error::Singular("linear system is singular".into()))
}

pub fn inverse(m: &Mat) -> Result<Mat> {
    m.clone().try_inverse().ok_or_else(|| Error::Singular("matrix is not invertible".into()))
}

/// Exact characteristic polynomial `det(xI − M)` of an integer matrix by Faddeev–LeVerrier.
/// Returns coefficients `c_0..c_n` of `x^n + c_1 x^{n−1} + … + c_n` (so `c_0 = 1`).
pub fn charpoly_exact(m: &[Vec<i64>]) -> Vec<BigInt> {
    let n = m.len();
    let a: Vec<Vec<BigRational>> =
        m.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
    let matmul = |x: &Vec<Vec<BigRational>>, y: &Vec<Vec<BigRational>>| -> Vec<Vec<BigRational>> {
        let mut out = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                if x[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !y[k][j].is_zero() {
                        out[i][j] += &x[i][k] * &y[k][j];
                    }
                }
            }
        }
        out
    };
    let mut coeffs = vec![BigInt::from(1)];
    // M_k = A·M_{k−1} + c_{k−1} I, c_k = −tr(A·M_k)/k
    let mut mk = vec![vec![BigRational::zero(); n]; n];
    let mut c_prev = BigRational::from_integer(1.into());
    for k in 1..=n {
        let mut next = matmul(&a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c_prev;
        }
        mk = next;
        let am = matmul(&a, &mk);
        let tr: BigRational = (0..n).map(|i| am[i][i].clone()).fold(BigRational::zero(), |s, x| s + x);
        let ck = -tr / BigRational::from_integer(BigInt::from(k));
        debug_assert!(ck.is_integer());
        coeffs.push(ck.to_integer());
        c_prev = ck;
    }
    coeffs
}

/// Largest singular value.
pub fn operator_norm(m: &Mat) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

pub fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charpoly_of_triangle() {
        let a = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        // (x − 2)(x + 1)² = x³ − 3x − 2
        let c = charpoly_exact(&a);
        assert_eq!(c, vec![1, 0, -3, -2].into_iter().map(BigInt::from).collect::<Vec<_>>());
    }

    #[test]
    fn realification_radius() {
        let m = CMat::from_row_slice(2, 2, &[
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]);
        assert!((complex_spectral_radius(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiplicity_clusters() {
        let v = [1.0, 1.0 + 1e-12, 4.0, 4.0, 4.0];
        assert_eq!(multiplicities(&v, 1e-8).iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn intersections() {
        let a = from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]);
        let b = from_rows(&[vec![1.0], vec![1.0], vec![0.0]]);
        let c = from_rows(&[vec![0.0], vec![0.0], vec![1.0]]);
        assert_eq!(intersection_dim(&a, &b, 1e-10), 1);
        assert_eq!(intersection_dim(&a, &c, 1e-10), 0);
        assert_eq!(null_basis(&a.transpose(), 1e-10).ncols(), 1);
    }
}
