use crate::linalg::Matrix;
use crate::Scalar;

/// Householder QR that processes columns left to right and sets aside any
/// column lying (numerically) in the span of the columns accepted before it.
///
/// For a full-rank input this is the ordinary thin QR `X = Q R`.
#[derive(Debug, Clone)]
pub struct HouseholderQr<T> {
    nrows: usize,
    // (v, beta) with v zero above its pivot row.
    reflectors: Vec<(Vec<T>, T)>,
    r: Matrix<T>,
    kept: Vec<usize>,
    dependent: Vec<usize>,
}

impl<T: Scalar> HouseholderQr<T> {
    pub fn new(x: &Matrix<T>) -> Self {
        Self::with_tolerance(x, T::epsilon().powf(T::lit(0.75)) * T::lit(10.0))
    }

    /// `tol` is relative to each column's own norm.
    pub fn with_tolerance(x: &Matrix<T>, tol: T) -> Self {
        let n = x.nrows();
        let p = x.ncols();
        let mut reflectors: Vec<(Vec<T>, T)> = Vec::new();
        let mut r_cols: Vec<Vec<T>> = Vec::new();
        let mut kept = Vec::new();
        let mut dependent = Vec::new();

        for j in 0..p {
            let mut col = x.column(j);
            let norm0 = col.iter().map(|&v| v * v).sum::<T>().sqrt();
            for (v, beta) in &reflectors {
                apply_reflector(v, *beta, &mut col);
            }
            let k = reflectors.len();
            if k >= n {
                dependent.push(j);
                continue;
            }
            let tail = col[k..].iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm0 == T::zero() || tail <= tol * norm0 {
                dependent.push(j);
                continue;
            }
            let alpha = if col[k] >= T::zero() { -tail } else { tail };
            let mut v = vec![T::zero(); n];
            v[k] = col[k] - alpha;
            v[(k + 1)..].copy_from_slice(&col[(k + 1)..]);
            let vtv = v.iter().map(|&a| a * a).sum::<T>();
            let beta = T::lit(2.0) / vtv;
            let mut rcol = col[..k].to_vec();
            rcol.push(alpha);
            r_cols.push(rcol);
            reflectors.push((v, beta));
            kept.push(j);
        }

        let rank = kept.len();
        let mut r = Matrix::zeros(rank, rank);
        for (j, rcol) in r_cols.iter().enumerate() {
            for (i, &v) in rcol.iter().enumerate() {
                r[(i, j)] = v;
            }
        }
        Self {
            nrows: n,
            reflectors,
            r,
            kept,
            dependent,
        }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.dependent.is_empty()
    }

    /// Indices of input columns retained in the factorization.
    pub fn kept_columns(&self) -> &[usize] {
        &self.kept
    }

    /// Indices of input columns found to be linear combinations of earlier ones.
    pub fn dependent_columns(&self) -> &[usize] {
        &self.dependent
    }

    pub fn r(&self) -> &Matrix<T> {
        &self.r
    }

    /// Computes `Qᵀ y` (full length `n`).
    pub fn qt_mul(&self, y: &[T]) -> Vec<T> {
        let mut out = y.to_vec();
        for (v, beta) in &self.reflectors {
            apply_reflector(v, *beta, &mut out);
        }
        out
    }

    /// Computes `Q z` (full length `n`).
    pub fn q_mul(&self, z: &[T]) -> Vec<T> {
        let mut out = z.to_vec();
        for (v, beta) in self.reflectors.iter().rev() {
            apply_reflector(v, *beta, &mut out);
        }
        out
    }

    /// Least-squares coefficients for the kept columns.
    pub fn solve_least_squares(&self, y: &[T]) -> Vec<T> {
        let qty = self.qt_mul(y);
        self.solve_upper(&qty[..self.rank()])
    }

    fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let k = self.rank();
        let mut x = b.to_vec();
        for i in (0..k).rev() {
            let mut s = x[i];
            for j in (i + 1)..k {
                s -= self.r[(i, j)] * x[j];
            }
            x[i] = s / self.r[(i, i)];
        }
        x
    }

    /// `(XᵀX)⁻¹ = R⁻¹ R⁻ᵀ` over the kept columns.
    pub fn unscaled_covariance(&self) -> Matrix<T> {
        let k = self.rank();
        let mut rinv = Matrix::zeros(k, k);
        for j in 0..k {
            let mut e = vec![T::zero(); k];
            e[j] = T::one();
            let col = self.solve_upper(&e);
            for i in 0..k {
                rinv[(i, j)] = col[i];
            }
        }
        rinv.matmul(&rinv.transpose())
    }

    /// Diagonal of the hat matrix `Q₁ Q₁ᵀ`.
    pub fn leverages(&self) -> Vec<T> {
        let mut h = vec![T::zero(); self.nrows];
        let mut e = vec![T::zero(); self.nrows];
        for j in 0..self.rank() {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let q = self.q_mul(&e);
            for (hi, qi) in h.iter_mut().zip(q) {
                *hi += qi * qi;
            }
        }
        h
    }
}

fn apply_reflector<T: Scalar>(v: &[T], beta: T, x: &mut [T]) {
    let s = beta * v.iter().zip(x.iter()).fold(T::zero(), |a, (&vi, &xi)| a + vi * xi);
    if s != T::zero() {
        for (xi, &vi) in x.iter_mut().zip(v) {
            *xi -= s * vi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_r_from_qt_x() {
        let x = Matrix::<f64>::from_rows(&[[1.0, 2.0], [1.0, 0.0], [1.0, -1.0], [1.0, 4.0]]);
        let qr = HouseholderQr::new(&x);
        assert_eq!(qr.rank(), 2);
        for j in 0..2 {
            let qtx = qr.qt_mul(&x.column(j));
            for i in 0..4 {
                let expect = if i < 2 { qr.r()[(i, j)] } else { 0.0 };
                assert!((qtx[i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flags_duplicated_column() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 2.0], [1.0, 0.0, 0.0], [1.0, -1.0, -1.0], [1.0, 4.0, 4.0]]);
        let qr = HouseholderQr::new(&x);
        assert_eq!(qr.dependent_columns(), &[2]);
        assert_eq!(qr.kept_columns(), &[0, 1]);
    }

    #[test]
    fn leverages_sum_to_rank() {
        let x = Matrix::from_rows(&[[1.0, 0.3], [1.0, 1.1], [1.0, -0.7], [1.0, 2.0], [1.0, 0.0]]);
        let h: f64 = HouseholderQr::new(&x).leverages().iter().sum();
        assert!((h - 2.0).abs() < 1e-12);
    }
}
