//! Small dense vectors and matrices over an arbitrary field scalar.
//!
//! Every object in this crate lives in dimension at most 12, so plain
//! Gauss-class algorithms with max-abs pivoting are both fast enough and,
//! over rationals, exact. Pivot selection compares `abs` through
//! `PartialOrd`, which is valid for floats and rationals alike; a pivot
//! counts as zero when it is at or below `S::pivot_tol()`.

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

#[derive(Clone, PartialEq)]
pub struct Vector<S>(pub Vec<S>);

impl<S: Scalar> Vector<S> {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![S::zero(); dim])
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize) -> S) -> Self {
        Vector((0..dim).map(f).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = S::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn scale(&self, c: &S) -> Self {
        Vector(self.0.iter().map(|x| x.clone() * c.clone()).collect())
    }

    /// Euclidean inner product of the coordinate vectors.
    pub fn dot(&self, other: &Self) -> S {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn max_abs(&self) -> S {
        self.0
            .iter()
            .map(|x| x.abs())
            .fold(S::zero(), |m, a| if a > m { a } else { m })
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Vector<T> {
        Vector(self.0.iter().map(f).collect())
    }
}

impl<S: RealScalar> Vector<S> {
    /// Euclidean norm.
    pub fn norm(&self) -> S {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(&(S::one() / n))
    }

    pub fn dist(&self, other: &Self) -> S {
        (self - other).norm()
    }
}

impl<S: Scalar> Index<usize> for Vector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S: Scalar> IndexMut<usize> for Vector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

impl<S: Scalar> Add for &Vector<S> {
    type Output = Vector<S>;
    fn add(self, rhs: &Vector<S>) -> Vector<S> {
        assert_eq!(self.dim(), rhs.dim());
        Vector(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }
}

impl<S: Scalar> Sub for &Vector<S> {
    type Output = Vector<S>;
    fn sub(self, rhs: &Vector<S>) -> Vector<S> {
        assert_eq!(self.dim(), rhs.dim());
        Vector(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }
}

impl<S: Scalar> Neg for &Vector<S> {
    type Output = Vector<S>;
    fn neg(self) -> Vector<S> {
        Vector(self.0.iter().map(|a| -a.clone()).collect())
    }
}

impl<S: Scalar> fmt::Debug for Vector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vector<S>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vector::dim);
        Self::from_fn(r, c, |i, j| cols[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> Vector<S> {
        Vector((0..self.rows).map(|i| self[(i, j)].clone()).collect())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    pub fn matvec(&self, v: &Vector<S>) -> Vector<S> {
        assert_eq!(self.cols, v.dim());
        Vector::from_fn(self.rows, |i| {
            (0..self.cols).fold(S::zero(), |acc, j| {
                acc + self[(i, j)].clone() * v[j].clone()
            })
        })
    }

    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .map(|x| x.abs())
            .fold(S::zero(), |m, a| if a > m { a } else { m })
    }

    pub fn trace(&self) -> S {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let tol = S::pivot_tol();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)].clone() - self[(j, i)].clone()).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Gauss-Jordan inverse with max-abs pivoting.
    pub fn inverse(&self) -> Result<Self> {
        self.inverse_with_pivot_tol(&S::pivot_tol())
    }

    /// [`Matrix::inverse`] with a caller-chosen zero threshold for pivots.
    ///
    /// A positive-definite system regularized on its diagonal stays
    /// solvable however small the regularization, so a caller damping a
    /// normal-equations matrix passes a threshold below its damp instead of
    /// the default, which would reject pivots that are tiny but sound.
    pub fn inverse_with_pivot_tol(&self, tol: &S) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&p, &q| {
                    a[(p, col)]
                        .abs()
                        .partial_cmp(&a[(q, col)].abs())
                        .expect("pivot comparison")
                })
                .expect("nonempty pivot range");
            if a[(pivot_row, col)].abs() <= *tol {
                return Err(Error::SingularMatrix);
            }
            a.swap_rows(col, pivot_row);
            inv.swap_rows(col, pivot_row);
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = a[(col, j)].clone() / p.clone();
                inv[(col, j)] = inv[(col, j)].clone() / p.clone();
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let av = a[(col, j)].clone() * f.clone();
                    a[(i, j)] = a[(i, j)].clone() - av;
                    let bv = inv[(col, j)].clone() * f.clone();
                    inv[(i, j)] = inv[(i, j)].clone() - bv;
                }
            }
        }
        Ok(inv)
    }

    pub fn solve(&self, rhs: &Vector<S>) -> Result<Vector<S>> {
        Ok(self.inverse()?.matvec(rhs))
    }

    /// [`Matrix::solve`] with a caller-chosen zero threshold for pivots.
    pub fn solve_with_pivot_tol(&self, rhs: &Vector<S>, tol: &S) -> Result<Vector<S>> {
        Ok(self.inverse_with_pivot_tol(tol)?.matvec(rhs))
    }

    /// Determinant by fraction-free-enough Gaussian elimination (exact over
    /// rationals, partially pivoted over floats).
    pub fn determinant(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&p, &q| {
                    a[(p, col)]
                        .abs()
                        .partial_cmp(&a[(q, col)].abs())
                        .expect("pivot comparison")
                })
                .expect("nonempty pivot range");
            if a[(pivot_row, col)].abs() <= S::pivot_tol() {
                return S::zero();
            }
            if pivot_row != col {
                a.swap_rows(col, pivot_row);
                det = -det;
            }
            let p = a[(col, col)].clone();
            det = det * p.clone();
            for i in (col + 1)..n {
                let f = a[(i, col)].clone() / p.clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let sub = a[(col, j)].clone() * f.clone();
                    a[(i, j)] = a[(i, j)].clone() - sub;
                }
            }
        }
        det
    }

    /// Rank by Gaussian elimination with max-abs pivoting.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let scale = {
            let m = a.max_abs();
            if m > S::one() {
                m
            } else {
                S::one()
            }
        };
        let tol = S::pivot_tol() * scale;
        let mut r = 0;
        for col in 0..a.cols {
            if r == a.rows {
                break;
            }
            let pivot_row = (r..a.rows)
                .max_by(|&p, &q| {
                    a[(p, col)]
                        .abs()
                        .partial_cmp(&a[(q, col)].abs())
                        .expect("pivot comparison")
                })
                .expect("nonempty pivot range");
            if a[(pivot_row, col)].abs() <= tol {
                continue;
            }
            a.swap_rows(r, pivot_row);
            let p = a[(r, col)].clone();
            for i in (r + 1)..a.rows {
                let f = a[(i, col)].clone() / p.clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..a.cols {
                    let sub = a[(r, j)].clone() * f.clone();
                    a[(i, j)] = a[(i, j)].clone() - sub;
                }
            }
            r += 1;
        }
        r
    }

    fn swap_rows(&mut self, r: usize, s: usize) {
        if r == s {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(r * self.cols + j, s * self.cols + j);
        }
    }
}

impl<S: RealScalar> Matrix<S> {
    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
    /// Converges quadratically; `tol` bounds the final off-diagonal mass
    /// relative to the matrix scale.
    pub fn symmetric_eigenvalues(&self, tol: S) -> Vec<S> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let scale = a.max_abs().max(S::one());
        let half = S::from_f64_lossy(0.5);
        for _sweep in 0..60 {
            let mut off = S::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off + a[(i, j)].abs();
                }
            }
            if off <= tol * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].abs() <= tol * scale * S::from_f64_lossy(1e-3) {
                        continue;
                    }
                    let theta = half
                        * S::atan2(
                            S::from_f64_lossy(2.0) * a[(p, q)],
                            a[(p, p)] - a[(q, q)],
                        );
                    let (s, c) = theta.sin_cos();
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp + s * akq;
                        a[(k, q)] = -s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk + s * aqk;
                        a[(q, k)] = -s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[(i, i)]).collect()
    }
}

impl<S: Scalar> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, rhs.rows);
        Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, k| {
                acc + self[(i, k)].clone() * rhs[(k, j)].clone()
            })
        })
    }
}

impl<S: Scalar> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }
}

impl<S: Scalar> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }
}

impl<S: Scalar> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};
    use num_traits::Zero;

    fn rmat(entries: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(
            entries
                .iter()
                .map(|row| row.iter().map(|&x| rat(x, 1)).collect())
                .collect(),
        )
    }

    #[test]
    fn exact_inverse_roundtrips() {
        let m = rmat(&[&[0, 0, 2], &[0, 2, 2], &[2, 2, 0]]);
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Matrix::identity(3));
        assert_eq!(inv[(0, 0)], rat(1, 2));
        assert_eq!(inv[(0, 1)], rat(-1, 2));
        assert_eq!(inv[(0, 2)], rat(1, 2));
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = rmat(&[&[1, 2], &[2, 4]]);
        assert!(matches!(m.inverse(), Err(Error::SingularMatrix)));
        assert!(m.determinant().is_zero());
    }

    #[test]
    fn determinant_is_exact() {
        let m = rmat(&[&[0, 0, 2], &[0, 2, 2], &[2, 2, 0]]);
        assert_eq!(m.determinant(), rat(-8, 1));
    }

    #[test]
    fn jacobi_finds_symmetric_spectrum() {
        let m: Matrix<f64> = Matrix::from_rows(vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let mut eig = m.symmetric_eigenvalues(1e-12);
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sqrt2 = 2.0f64.sqrt();
        for (got, want) in eig.iter().zip([2.0 - sqrt2, 2.0, 2.0 + sqrt2]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn matvec_matches_column_combination() {
        let m = rmat(&[&[1, 2], &[3, 4]]);
        let v = Vector(vec![rat(1, 2), rat(1, 3)]);
        let got = m.matvec(&v);
        assert_eq!(got.0, vec![rat(7, 6), rat(17, 6)]);
    }
}
