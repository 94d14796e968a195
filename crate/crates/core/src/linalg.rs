//! Dense row-major matrices sized for the small systems used here (d ≤ a few dozen).

use core::ops::{Index, IndexMut};

use crate::error::{numeric, param, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return param(format!("matrix data length {} != {rows}x{cols}", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return param("ragged rows");
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return param(format!(
                "matmul shape {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`
    pub fn tmatvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    fn require_square(&self) -> Result<usize> {
        if self.rows != self.cols {
            return param(format!("expected square matrix, got {}x{}", self.rows, self.cols));
        }
        Ok(self.rows)
    }

    /// Lower Cholesky factor of a symmetric positive-definite matrix.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.require_square()?;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return numeric(format!("matrix not positive definite (pivot {j})"));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(l)
    }

    /// Factor `L` with `L Lᵀ = self` for a symmetric PSD matrix, tolerating rank deficiency.
    ///
    /// Uses diagonal pivoting; pivots below `tol · max diag` are treated as zero. A pivot
    /// below `−tol · max diag` means the matrix is indefinite.
    pub fn cholesky_psd(&self, tol: T) -> Result<Self> {
        let n = self.require_square()?;
        let scale = (0..n).fold(T::zero(), |m, i| m.max(self[(i, i)].abs()));
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut l = Self::zeros(n, n);
        let thresh = tol * scale.max(T::min_positive_value());
        for j in 0..n {
            let (p, &dmax) = (j..n)
                .map(|i| (i, &a[(perm[i], perm[i])]))
                .fold((j, &a[(perm[j], perm[j])]), |best, cur| if *cur.1 > *best.1 { cur } else { best });
            if dmax < -thresh {
                return numeric("covariance matrix is not positive semi-definite");
            }
            if dmax <= thresh {
                // Remaining Schur complement must be negligible.
                for i in j..n {
                    for k in j..n {
                        if a[(perm[i], perm[k])].abs() > thresh.max(tol) * T::lit(10.0) {
                            return numeric("covariance matrix is not positive semi-definite");
                        }
                    }
                }
                break;
            }
            perm.swap(j, p);
            let pj = perm[j];
            let root = dmax.sqrt();
            l[(pj, j)] = root;
            for &pi in &perm[j + 1..n] {
                l[(pi, j)] = a[(pi, pj)] / root;
            }
            for i in j + 1..n {
                for k in j + 1..n {
                    let (pi, pk) = (perm[i], perm[k]);
                    let v = l[(pi, j)] * l[(pk, j)];
                    a[(pi, pk)] -= v;
                }
            }
        }
        Ok(l)
    }

    /// Solves `self x = b` given `self` is SPD, via Cholesky.
    pub fn solve_spd(&self, b: &[T]) -> Result<Vec<T>> {
        let l = self.cholesky()?;
        Ok(cholesky_solve(&l, b))
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<Lu<T>> {
        let n = self.require_square()?;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = self.max_abs();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap_or(core::cmp::Ordering::Equal))
                .unwrap_or(k);
            let piv = a[(p, k)];
            if !(piv.abs() > scale * T::epsilon() * T::from_usize_lossy(n)) || !piv.is_finite() {
                return numeric("matrix is singular");
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        Ok(Lu { lu: a, perm, sign })
    }

    pub fn inverse(&self) -> Result<Self> {
        self.lu()?.inverse()
    }

    pub fn determinant(&self) -> Result<T> {
        match self.lu() {
            Ok(lu) => Ok(lu.determinant()),
            Err(crate::Error::Numeric(_)) => Ok(T::zero()),
            Err(e) => Err(e),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Scalar> Lu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = self.lu[(i, k)] * x[k];
                x[i] -= v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = self.lu[(i, k)] * x[k];
                x[i] -= v;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> T {
        (0..self.lu.rows()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

/// Parametrisation `{x : A x = b} = {x0 + N z}` of an affine subspace.
#[derive(Debug, Clone)]
pub struct AffineSubspace<T> {
    pub origin: Vec<T>,
    /// Columns form an orthonormal basis of the null space of `A` (d × m).
    pub basis: Matrix<T>,
}

impl<T: Scalar> AffineSubspace<T> {
    /// Builds the parametrisation for `A x = b`, with `A` of full row rank.
    pub fn new(a: &Matrix<T>, b: &[T]) -> Result<Self> {
        let (k, d) = (a.rows(), a.cols());
        if b.len() != k {
            return param("equality right-hand side has wrong length");
        }
        // Orthonormal basis of the row space by modified Gram–Schmidt.
        let mut q: Vec<Vec<T>> = Vec::with_capacity(d);
        let tol = T::epsilon().sqrt() * a.max_abs().max(T::one());
        for i in 0..k {
            let mut v = a.row(i).to_vec();
            for u in &q {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, &y)| *x -= c * y);
            }
            let nv = crate::scalar::norm2(&v);
            if nv <= tol {
                return numeric("equality constraints are linearly dependent");
            }
            v.iter_mut().for_each(|x| *x /= nv);
            q.push(v);
        }
        // Minimum-norm particular solution x0 = Aᵀ (A Aᵀ)⁻¹ b.
        let aat = a.matmul(&a.transpose())?;
        let y = if k > 0 { aat.solve_spd(b)? } else { Vec::new() };
        let origin = a.tmatvec(&y);
        // Complete the basis greedily with the coordinate vector least explained so far.
        let mut null: Vec<Vec<T>> = Vec::with_capacity(d - k);
        while q.len() < d {
            let best = (0..d)
                .map(|j| {
                    let mut v = vec![T::zero(); d];
                    v[j] = T::one();
                    for u in &q {
                        let c = dot(&v, u);
                        v.iter_mut().zip(u).for_each(|(x, &y)| *x -= c * y);
                    }
                    let nv = crate::scalar::norm2(&v);
                    (v, nv)
                })
                .fold(None::<(Vec<T>, T)>, |acc, cur| match acc {
                    Some(a) if a.1 >= cur.1 => Some(a),
                    _ => Some(cur),
                });
            let (mut v, nv) = best.expect("d > 0 when basis incomplete");
            v.iter_mut().for_each(|x| *x /= nv);
            q.push(v.clone());
            null.push(v);
        }
        let m = null.len();
        let mut basis = Matrix::zeros(d, m);
        for (c, v) in null.iter().enumerate() {
            for i in 0..d {
                basis[(i, c)] = v[i];
            }
        }
        Ok(Self { origin, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn point(&self, z: &[T]) -> Vec<T> {
        let mut x = self.origin.clone();
        if self.dim() > 0 {
            x.iter_mut().zip(self.basis.matvec(z)).for_each(|(a, b)| *a += b);
        }
        x
    }

    /// Coordinates of the orthogonal projection of `x` onto the subspace.
    pub fn coords(&self, x: &[T]) -> Vec<T> {
        let diff: Vec<T> = x.iter().zip(&self.origin).map(|(&a, &b)| a - b).collect();
        self.basis.tmatvec(&diff)
    }
}
