//! Dense complex matrices and the spectral utilities the rest of the crate
//! builds on.
//!
//! [`CMatrix`] is a plain row-major container. Kronecker products put the
//! left factor's indices major, so `tensor(a, b)[(i*rb + k, j*cb + l)] =
//! a[(i, j)] * b[(k, l)]`. Subsystem lists passed to [`CMatrix::partial_trace`]
//! follow the same convention: the first listed factor is the most
//! significant digit of the flat index.
//!
//! Hermitian eigendecompositions are delegated to `nalgebra`; everything else
//! is implemented directly on the row-major storage.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for checks on objects built directly from their definition.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for algebraic identities (commutators, traces, supports).
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Tolerance for spectral round trips and normalization sums.
pub const SPECTRAL_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Wire form: `{"rows": n, "cols": m, "data": [[re, im], ...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        CMatrix::new(m.rows, m.cols, m.data)
    }
}

impl From<CMatrix> for MatrixJson {
    fn from(m: CMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored as
/// the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Column `k` as a ket.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.vectors.rows;
        CMatrix::from_fn(n, n, |r, c| {
            (0..self.values.len())
                .map(|k| self.vectors[(r, k)] * self.vectors[(c, k)].conj() * self.values[k])
                .sum()
        })
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::MalformedMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::MalformedMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::MalformedMatrix("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::new(r, c, data)
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::MalformedMatrix("ragged rows".into()));
        }
        Self::new(
            r,
            c,
            rows.iter().flat_map(|row| row.iter().copied()).collect(),
        )
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&c)
    }

    /// The matrix unit |i⟩⟨j| on an n-dimensional space.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[i * n + j] = ONE;
        m
    }

    /// |a⟩⟨b|
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    /// Projector |v⟩⟨v| (not normalized).
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::MalformedMatrix(
                "columns have different lengths".into(),
            ));
        }
        Self::new(rows, cols, {
            let mut data = vec![ZERO; rows * cols];
            for (c, col) in columns.iter().enumerate() {
                for (r, &x) in col.iter().enumerate() {
                    data[r * cols + c] = x;
                }
            }
            data
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    /// Entrywise transpose in the computational basis, without conjugation.
    pub fn transpose_comp_basis(&self) -> Result<Self> {
        self.require_square()?;
        Ok(Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)]))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|x| x * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    pub fn trace(&self) -> Result<C64> {
        self.require_square()?;
        Ok((0..self.rows).map(|i| self.data[i * self.cols + i]).sum())
    }

    /// tr(AB) without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Result<C64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "tr(AB) with A {}x{} and B {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = ZERO;
        for r in 0..self.rows {
            let row = self.row(r);
            for (c, &x) in row.iter().enumerate() {
                acc += x * other.data[c * other.cols + r];
            }
        }
        Ok(acc)
    }

    pub fn mat_mul(&self, other: &CMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// A · v
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &x)| a * x).sum())
            .collect())
    }

    /// ⟨v|A|v⟩
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let av = self.apply(v)?;
        Ok(inner(v, &av))
    }

    /// U X U†
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        u.mat_mul(self)?.mat_mul(&u.dagger())
    }

    pub fn tensor(&self, other: &CMatrix) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let base = (i * other.rows + k) * cols + j * other.cols;
                    for (dst, &b) in data[base..base + other.cols].iter_mut().zip(other.row(k)) {
                        *dst = a * b;
                    }
                }
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn commutator(&self, other: &CMatrix) -> Result<Self> {
        Ok(&self.mat_mul(other)? - &other.mat_mul(self)?)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |X − X†| elementwise; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    fn require_hermitian(&self, tol: f64) -> Result<()> {
        self.require_square()?;
        let deviation = self.hermitian_deviation();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    /// (X + X†)/2
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    /// max |U†U − I|
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.dagger()
            .mat_mul(self)
            .map(|p| p.max_abs_diff(&Self::identity(self.rows)))
            .unwrap_or(f64::INFINITY)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Spectral decomposition of a Hermitian matrix (tolerance 1e-10 on the
    /// Hermiticity check). Eigenvalues come back ascending.
    pub fn eig_hermitian(&self) -> Result<HermitianEigen> {
        self.require_hermitian(ALGEBRAIC_TOL)?;
        let eig = self.hermitian_part().to_nalgebra().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = Self::from_fn(self.rows, self.rows, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(HermitianEigen { values, vectors })
    }

    /// Eigenvalues only, ascending.
    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        self.require_hermitian(ALGEBRAIC_TOL)?;
        let mut values: Vec<f64> = self
            .hermitian_part()
            .to_nalgebra()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues_hermitian()?[0])
    }

    /// True iff the smallest eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Same predicate as [`CMatrix::is_psd`], decided by attempting a
    /// Cholesky factorization of `X + tol·I` instead of a full spectrum.
    /// The factorization exists exactly when every eigenvalue exceeds `-tol`.
    pub fn is_psd_fast(&self, tol: f64) -> Result<bool> {
        self.require_hermitian(ALGEBRAIC_TOL)?;
        let n = self.rows;
        let mut a = self.hermitian_part().data;
        for i in 0..n {
            a[i * n + i] += tol;
        }
        // in-place lower Cholesky; fails on the first non-positive pivot
        for j in 0..n {
            let mut pivot = a[j * n + j].re;
            for k in 0..j {
                pivot -= a[j * n + k].norm_sqr();
            }
            if pivot <= 0.0 || !pivot.is_finite() {
                return Ok(false);
            }
            let pivot = pivot.sqrt();
            a[j * n + j] = C64::new(pivot, 0.0);
            for i in j + 1..n {
                let mut x = a[i * n + j];
                for k in 0..j {
                    x -= a[i * n + k] * a[j * n + k].conj();
                }
                a[i * n + j] = x / pivot;
            }
        }
        Ok(true)
    }

    /// f(X) for Hermitian X via its spectral decomposition.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = self.eig_hermitian()?;
        let mapped = HermitianEigen {
            values: eig.values.iter().map(|&x| f(x)).collect(),
            vectors: eig.vectors,
        };
        Ok(mapped.reconstruct())
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank_hermitian(&self, tol: f64) -> Result<usize> {
        Ok(self
            .eigenvalues_hermitian()?
            .iter()
            .filter(|&&x| x > tol)
            .count())
    }

    /// Traces out the listed subsystems of a square matrix whose space factors
    /// as `dims[0] ⊗ dims[1] ⊗ ...`. An empty list returns the input.
    pub fn partial_trace(&self, dims: &[usize], traced: &[usize]) -> Result<Self> {
        self.require_square()?;
        let total: usize = dims.iter().product();
        if total != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dimensions {dims:?} multiply to {total}, matrix is {}x{}",
                self.rows, self.cols
            )));
        }
        if let Some(&bad) = traced.iter().find(|&&s| s >= dims.len()) {
            return Err(Error::DimensionMismatch(format!(
                "subsystem {bad} out of range for {} factors",
                dims.len()
            )));
        }
        let kept_dim: usize = dims
            .iter()
            .enumerate()
            .filter(|(s, _)| !traced.contains(s))
            .map(|(_, &d)| d)
            .product();

        // split every flat index into (kept part, traced part)
        let split: Vec<(usize, usize)> = (0..total)
            .map(|mut flat| {
                let (mut kept, mut kept_w, mut tr, mut tr_w) = (0, 1, 0, 1);
                for (s, &d) in dims.iter().enumerate().rev() {
                    let digit = flat % d;
                    flat /= d;
                    if traced.contains(&s) {
                        tr += digit * tr_w;
                        tr_w *= d;
                    } else {
                        kept += digit * kept_w;
                        kept_w *= d;
                    }
                }
                (kept, tr)
            })
            .collect();

        let mut out = Self::zeros(kept_dim, kept_dim);
        for (r, &(kr, tr)) in split.iter().enumerate() {
            for (c, &(kc, tc)) in split.iter().enumerate() {
                if tr == tc {
                    out.data[kr * kept_dim + kc] += self.data[r * total + c];
                }
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

fn assert_same_shape(a: &CMatrix, b: &CMatrix, op: &str) {
    assert!(
        a.rows == b.rows && a.cols == b.cols,
        "{op} of {}x{} and {}x{} matrices",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_same_shape(self, rhs, "sum");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_same_shape(self, rhs, "difference");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.map(|x| -x)
    }
}

/// Matrix product; panics on incompatible shapes. Use [`CMatrix::mat_mul`]
/// for a fallible version.
impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.mat_mul(rhs).expect("incompatible matrix product")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let x = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", x.re, x.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.tensor(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.dagger()
}

/// ⟨a|b⟩
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Computational basis ket |i⟩ in dimension n.
pub fn basis_ket(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[i] = ONE;
    v
}

/// Complex normal with unit variance, E|z|² = 1.
pub struct StandardComplexNormal;

impl Distribution<C64> for StandardComplexNormal {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let re = rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2;
        let im = rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2;
        C64::new(re, im)
    }
}

/// Matrix of i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| StandardComplexNormal.sample(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| StandardComplexNormal.sample(rng)).collect()
}
