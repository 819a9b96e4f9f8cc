use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix. Batches store one sample per row.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(6) {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (c, v) in row.iter().take(8).enumerate() {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v:?}")?;
            }
            if row.len() > 8 {
                write!(f, ", ..")?;
            }
        }
        if self.rows > 6 {
            write!(f, "; ..")?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::config(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::config(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Column vector.
    pub fn column(values: &[T]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_vec(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_inplace(&mut self, f: impl Fn(T) -> T) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Precision conversion.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    fn strides(&self) -> (isize, isize) {
        (self.cols as isize, 1)
    }

    fn strides_t(&self) -> (isize, isize) {
        (1, self.cols as isize)
    }

    fn check_inner(&self, lhs_inner: usize, rhs_inner: usize, op: &str) -> Result<()> {
        if lhs_inner != rhs_inner {
            return Err(Error::config(format!(
                "{op}: inner dimensions differ ({lhs_inner} vs {rhs_inner})"
            )));
        }
        Ok(())
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_inner(self.cols, rhs.rows, "matmul")?;
        let mut out = Self::zeros(self.rows, rhs.cols);
        T::gemm(
            self.rows,
            self.cols,
            rhs.cols,
            T::one(),
            &self.data,
            self.strides(),
            &rhs.data,
            rhs.strides(),
            T::zero(),
            &mut out.data,
            (rhs.cols as isize, 1),
        );
        Ok(out)
    }

    /// `self * rhs^T`.
    pub fn matmul_nt(&self, rhs: &Self) -> Result<Self> {
        self.check_inner(self.cols, rhs.cols, "matmul_nt")?;
        let mut out = Self::zeros(self.rows, rhs.rows);
        T::gemm(
            self.rows,
            self.cols,
            rhs.rows,
            T::one(),
            &self.data,
            self.strides(),
            &rhs.data,
            rhs.strides_t(),
            T::zero(),
            &mut out.data,
            (rhs.rows as isize, 1),
        );
        Ok(out)
    }

    /// `self^T * rhs`.
    pub fn matmul_tn(&self, rhs: &Self) -> Result<Self> {
        self.check_inner(self.rows, rhs.rows, "matmul_tn")?;
        let mut out = Self::zeros(self.cols, rhs.cols);
        T::gemm(
            self.cols,
            self.rows,
            rhs.cols,
            T::one(),
            &self.data,
            self.strides_t(),
            &rhs.data,
            rhs.strides(),
            T::zero(),
            &mut out.data,
            (rhs.cols as isize, 1),
        );
        Ok(out)
    }

    /// Adds `v` to every row.
    pub fn add_row(&mut self, v: &[T]) {
        debug_assert_eq!(v.len(), self.cols);
        for r in 0..self.rows {
            for (x, &b) in self.row_mut(r).iter_mut().zip(v) {
                *x += b;
            }
        }
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::config(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for row in self.iter_rows() {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn col_means(&self) -> Vec<T> {
        let n = T::of(self.rows.max(1) as f64);
        self.col_sums().into_iter().map(|s| s / n).collect()
    }

    /// Population variance (divisor `n`) of each column.
    pub fn col_variances(&self) -> Vec<T> {
        let means = self.col_means();
        let mut out = vec![T::zero(); self.cols];
        for row in self.iter_rows() {
            for ((o, &v), &m) in out.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *o += d * d;
            }
        }
        let n = T::of(self.rows.max(1) as f64);
        out.into_iter().map(|s| s / n).collect()
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hcat(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::config(format!(
                "hcat: row counts differ ({} vs {})",
                self.rows, rhs.rows
            )));
        }
        let cols = self.cols + rhs.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(rhs.row(r));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Vertical concatenation.
    pub fn vcat(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::config(format!(
                "vcat: column counts differ ({} vs {})",
                self.cols, rhs.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Ok(Self {
            rows: self.rows + rhs.rows,
            cols: self.cols,
            data,
        })
    }

    /// Columns `[start, start + len)`.
    pub fn col_slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.cols, "column slice out of range");
        let mut data = Vec::with_capacity(self.rows * len);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..start + len]);
        }
        Self {
            rows: self.rows,
            cols: len,
            data,
        }
    }

    /// Rows `[start, start + len)`.
    pub fn row_range(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.rows, "row range out of bounds");
        Self {
            rows: len,
            cols: self.cols,
            data: self.data[start * self.cols..(start + len) * self.cols].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Each row replaced by a copy of row `r`.
    pub fn broadcast_row(&self, r: usize, rows: usize) -> Self {
        let src = self.row(r);
        let mut data = Vec::with_capacity(rows * self.cols);
        for _ in 0..rows {
            data.extend_from_slice(src);
        }
        Self {
            rows,
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Squared Euclidean distances between the rows of `a` and the rows of `b`,
/// computed through one GEMM (`|a|^2 + |b|^2 - 2 a.b`, clamped at zero).
pub fn sq_distances<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let mut g = a.matmul_nt(b)?;
    let na: Vec<T> = a.iter_rows().map(|r| r.iter().map(|&v| v * v).sum()).collect();
    let nb: Vec<T> = b.iter_rows().map(|r| r.iter().map(|&v| v * v).sum()).collect();
    let two = T::of(2.0);
    for i in 0..g.rows() {
        let ni = na[i];
        for (j, v) in g.row_mut(i).iter_mut().enumerate() {
            *v = (ni + nb[j] - two * *v).max(T::zero());
        }
    }
    Ok(g)
}

/// Exact Euclidean distance between two rows.
#[inline]
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn products_match_naive() {
        let a = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.5 - 1.0);
        let b = Matrix::from_fn(3, 5, |i, j| (i as f64 - j as f64).sin());
        let expect = naive_matmul(&a, &b);
        assert!(a.matmul(&b).unwrap().max_abs_diff(&expect) < 1e-12);
        assert!(a.matmul_nt(&b.transpose()).unwrap().max_abs_diff(&expect) < 1e-12);
        assert!(a.transpose().matmul_tn(&b).unwrap().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn mismatched_product_is_config_error() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::Config(_))));
    }

    #[test]
    fn f32_products() {
        let a = Matrix::<f32>::from_fn(2, 2, |i, j| (i + j) as f32);
        let p = a.matmul(&a).unwrap();
        assert_eq!(p.data(), &[1.0, 2.0, 2.0, 5.0]);
    }

    #[test]
    fn zero_width_operands() {
        let a = Matrix::<f64>::zeros(3, 0);
        let b = Matrix::<f64>::zeros(0, 2);
        let p = a.matmul(&b).unwrap();
        assert_eq!(p.shape(), (3, 2));
        assert!(p.data().iter().all(|&v| v == 0.0));
        let h = a.hcat(&Matrix::filled(3, 1, 2.0)).unwrap();
        assert_eq!(h.shape(), (3, 1));
    }

    #[test]
    fn distances_match_direct() {
        let a = Matrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let b = Matrix::from_fn(4, 3, |i, j| ((i * 2 + j) % 3) as f64 - 0.5);
        let d = sq_distances(&a, &b).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                let e = euclidean(a.row(i), b.row(j));
                assert!((d[(i, j)] - e * e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn column_statistics() {
        let m = Matrix::from_rows(&[[0.0, 1.0], [2.0, 1.0]]).unwrap();
        assert_eq!(m.col_means(), vec![1.0, 1.0]);
        assert_eq!(m.col_variances(), vec![1.0, 0.0]);
    }
}
