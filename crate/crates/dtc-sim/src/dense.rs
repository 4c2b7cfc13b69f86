//! Minimal dense-matrix support: a column-major complex matrix type plus
//! eigensolver and matmul wrappers backed by `faer`.
//!
//! The system OpenBLAS on some deployment targets ships miscompiled AVX-512
//! level-3 kernels (wrong `dgemm` products at particular shapes), so all dense
//! linear algebra here goes through the pure-Rust `faer` backend instead.

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

fn to_faer_complex(rows: usize, cols: usize, data: &[Complex64]) -> Mat<c64> {
    Mat::from_fn(rows, cols, |r, c| {
        let z = data[c * rows + r];
        c64::new(z.re, z.im)
    })
}

/// Eigendecomposition of a real symmetric matrix (column-major, length n*n).
/// Returns ascending eigenvalues; `a` is overwritten with the eigenvectors.
pub fn eigh_real(n: usize, a: &mut [f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite entry in symmetric eigenproblem".into(),
        ));
    }
    let m = Mat::from_fn(n, n, |r, c| a[c * n + r]);
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut w = Vec::with_capacity(n);
    for k in 0..n {
        w.push(s.read(k));
        for r in 0..n {
            a[k * n + r] = u.read(r, k);
        }
    }
    debug_assert!(w.windows(2).all(|p| p[0] <= p[1]));
    Ok(w)
}

/// Eigendecomposition of a complex Hermitian matrix (column-major).
/// Returns ascending eigenvalues; `a` is overwritten with the eigenvectors.
pub fn eigh_complex(n: usize, a: &mut [Complex64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite entry in Hermitian eigenproblem".into(),
        ));
    }
    let m = to_faer_complex(n, n, a);
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut w = Vec::with_capacity(n);
    for k in 0..n {
        w.push(s.read(k).re);
        for r in 0..n {
            let z = u.read(r, k);
            a[k * n + r] = Complex64::new(z.re, z.im);
        }
    }
    Ok(w)
}

/// Eigenvalues of a general complex matrix (column-major).
pub fn eig_vals_general(n: usize, a: &[Complex64]) -> Result<Vec<Complex64>> {
    assert_eq!(a.len(), n * n);
    let m = to_faer_complex(n, n, a);
    let vals = m.complex_eigenvalues();
    Ok(vals.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        &mut self.data[c * self.rows + r]
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                *out.at_mut(c, r) = self.at(r, c).conj();
            }
        }
        out
    }

    fn from_faer(m: Mat<c64>) -> CMat {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut out = CMat::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                let z = m.read(r, c);
                *out.at_mut(r, c) = Complex64::new(z.re, z.im);
            }
        }
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let a = to_faer_complex(self.rows, self.cols, &self.data);
        let b = to_faer_complex(other.rows, other.cols, &other.data);
        CMat::from_faer(&a * &b)
    }

    /// `self * self^dagger`; Hermitian result.
    pub fn times_adjoint(&self) -> CMat {
        let a = to_faer_complex(self.rows, self.cols, &self.data);
        CMat::from_faer(&a * a.adjoint())
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            let xc = x[c];
            if xc == Complex64::new(0.0, 0.0) {
                continue;
            }
            let col = self.column(c);
            for (yi, &aij) in y.iter_mut().zip(col) {
                *yi += aij * xc;
            }
        }
        y
    }

    /// Largest entrywise distance to another matrix.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(U^dagger U - I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        self.adjoint()
            .mul(self)
            .max_abs_diff(&CMat::identity(self.rows))
    }
}
