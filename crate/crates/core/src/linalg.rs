//! Dense complex matrices: products, LU factorization, determinants.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::{czero, Real};

/// Row-major square or rectangular complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = Mat::zeros(n, p);
        out.data.par_chunks_mut(p).enumerate().for_each(|(i, orow)| {
            let arow = &self.data[i * m..(i + 1) * m];
            for (k, a) in arow.iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += *a * *b;
                }
            }
        });
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(czero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn scale(&self, k: Complex<T>) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| *a * k).collect() }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, a| m.max(a.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &Mat<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Domain("LU factorization needs a square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            if piv.re == T::zero() && piv.im == T::zero() {
                continue;
            }
            let inv = piv.inv();
            let (head, tail) = lu.data.split_at_mut((k + 1) * n);
            let krow = &head[k * n..(k + 1) * n];
            tail.par_chunks_mut(n).for_each(|row| {
                let f = row[k] * inv;
                row[k] = f;
                if f.re != T::zero() || f.im != T::zero() {
                    for j in k + 1..n {
                        row[j] -= f * krow[j];
                    }
                }
            });
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn det(&self) -> Complex<T> {
        let n = self.lu.rows;
        let mut d = Complex::new(self.sign, T::zero());
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// `log det` as (log modulus, unit phase), robust against overflow.
    pub fn log_det(&self) -> (T, Complex<T>) {
        let n = self.lu.rows;
        let mut lm = T::zero();
        let mut ph = Complex::new(self.sign, T::zero());
        for i in 0..n {
            let u = self.lu[(i, i)];
            let r = u.norm();
            lm += r.ln();
            if r > T::zero() {
                ph *= u / r;
            }
        }
        (lm, ph)
    }

    pub fn is_singular(&self) -> bool {
        (0..self.lu.rows).any(|i| {
            let u = self.lu[(i, i)];
            u.re == T::zero() && u.im == T::zero()
        })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(Error::GridMismatch { expected: n, found: b.len() });
        }
        if self.is_singular() {
            return Err(Error::Domain("singular matrix in LU solve".into()));
        }
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Mat<T>) -> Result<Mat<T>> {
        let n = self.lu.rows;
        if b.rows != n {
            return Err(Error::GridMismatch { expected: n, found: b.rows });
        }
        let cols: Vec<Vec<Complex<T>>> = (0..b.cols)
            .into_par_iter()
            .map(|j| {
                let col: Vec<_> = (0..n).map(|i| b[(i, j)]).collect();
                self.solve(&col)
            })
            .collect::<Result<_>>()?;
        Ok(Mat::from_fn(n, b.cols, |i, j| cols[j][i]))
    }

    pub fn inverse(&self) -> Result<Mat<T>> {
        self.solve_mat(&Mat::identity(self.lu.rows))
    }
}
