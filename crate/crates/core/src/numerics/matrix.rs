use crate::error::{Error, Result};
use crate::real::Real;
use rayon::prelude::*;

/// Real symmetric matrix stored as its packed lower triangle, so symmetry
/// holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    dim: usize,
    packed: Vec<T>,
    name: String,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "symmetric matrix dim must be >= 1".into(),
            ));
        }
        Ok(Self {
            dim,
            packed: vec![T::zero(); dim * (dim + 1) / 2],
            name: "unnamed".into(),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        Ok(m)
    }

    /// Builds the matrix from `f(i, j)` evaluated on the lower triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in 0..=i {
                m.packed[packed_index(i, j)] = f(i, j);
            }
        }
        Ok(m)
    }

    /// Symmetric Toeplitz matrix with entries `first_column[|i - j|]`.
    pub fn toeplitz(first_column: &[T]) -> Result<Self> {
        Self::from_fn(first_column.len(), |i, j| first_column[i - j])
    }

    /// Takes the lower triangle of a dense row-major square array; fails when
    /// the upper triangle disagrees beyond `tol`.
    pub fn from_dense(dense: &DenseMatrix<T>, tol: T) -> Result<Self> {
        if dense.rows != dense.cols {
            return Err(Error::Shape(format!(
                "expected square matrix, got {}x{}",
                dense.rows, dense.cols
            )));
        }
        let n = dense.rows;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (dense.get(i, j), dense.get(j, i));
                if (a - b).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Self::from_fn(n, |i, j| dense.get(i, j))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.packed[packed_index(i, j)] = v;
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.packed {
            *v = *v * c;
        }
    }

    pub fn max_abs(&self) -> T {
        self.packed.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }
}

/// Dense row-major matrix used for products and factorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.data {
            *v = *v * c;
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `self * other`, i-k-j loop order so the inner loop streams rows.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        if other.cols == 0 {
            return Ok(out);
        }
        out.data
            .par_chunks_mut(other.cols)
            .enumerate()
            .for_each(|(i, out_row)| {
                for k in 0..self.cols {
                    let a = self.data[i * self.cols + k];
                    if a == T::zero() {
                        continue;
                    }
                    let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o = *o + a * b;
                    }
                }
            });
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Result<T> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::Shape(
                "trace of product needs compatible square shapes".into(),
            ));
        }
        let mut acc = T::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc = acc + self.get(i, k) * other.get(k, i);
            }
        }
        Ok(acc)
    }

    /// Lower Cholesky factor `L` with `self = L Lᵀ`; `None` when a pivot is
    /// not strictly positive.
    pub fn cholesky(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let s = dot(&l.row(j)[..j], &l.row(j)[..j]);
            let d = self.get(j, j) - s;
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l.set(j, j, djj);
            for i in (j + 1)..n {
                let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
                l.set(i, j, (self.get(i, j) - s) / djj);
            }
        }
        Some(l)
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_is_symmetric() {
        let m = SymmetricMatrix::<f64>::from_fn(4, |i, j| (i * 10 + j) as f64).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert_eq!(m.get(3, 1), 31.0);
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(SymmetricMatrix::<f64>::zeros(0).is_err());
    }

    #[test]
    fn matmul_and_trace_of_product_agree() {
        let a = DenseMatrix::<f64>::from_fn(3, 3, |i, j| (i + 2 * j) as f64 - 1.5);
        let b = DenseMatrix::<f64>::from_fn(3, 3, |i, j| ((i * j) % 3) as f64 + 0.25);
        let ab = a.matmul(&b).unwrap();
        assert!((ab.trace() - a.trace_of_product(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = DenseMatrix::<f64>::from_fn(4, 4, |i, j| {
            if i == j {
                4.0
            } else {
                1.0 / (1.0 + (i + j) as f64)
            }
        });
        let l = a.cholesky().unwrap();
        let llt = l.matmul(&l.transpose()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((llt.get(i, j) - a.get(i, j)).abs() < 1e-12);
            }
        }
        let singular = DenseMatrix::<f64>::from_fn(2, 2, |_, _| 1.0);
        assert!(singular.cholesky().is_none());
    }

    #[test]
    fn asymmetric_dense_rejected() {
        let d = DenseMatrix::<f64>::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 1.0]).unwrap();
        assert!(SymmetricMatrix::from_dense(&d, 1e-12).is_err());
    }
}
