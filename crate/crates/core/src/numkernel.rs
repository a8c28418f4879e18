//! Dense complex linear algebra used by the channel and receiver models.
//!
//! Matrices here are at most a few hundred rows, so everything is a plain
//! row-major `Vec<Complex64>` with O(n³) algorithms.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the Hermitian precondition of [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Jacobi sweeps stop once off-diagonal Frobenius mass drops below this fraction of ‖A‖_F.
pub const JACOBI_TOL: f64 = 1e-12;
/// Negative eigenvalues of a Gram matrix no smaller than this are clipped to zero.
pub const GRAM_CLIP: f64 = 1e-12;
/// Absolute slack for eigenvalue interlacing checks.
pub const INTERLACE_SLACK: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
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
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    /// Real-valued convenience constructor, mostly for tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `A^H A`. Exactly Hermitian in floating point.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..self.rows {
                    acc += self[(r, i)].conj() * self[(r, j)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)].im = 0.0;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension(format!(
                "{:?} vs {:?}",
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

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r2, c2) = rhs.shape();
        let mut out = Self::zeros(self.rows * r2, self.cols * c2);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for p in 0..r2 {
                    for q in 0..c2 {
                        out[(i * r2 + p, j * c2 + q)] = a * rhs[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[A B ...]`.
    pub fn hstack(blocks: &[Self]) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::Dimension("no blocks to concatenate".into()));
        };
        let rows = first.rows;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Dimension("blocks disagree on row count".into()));
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for b in blocks {
            out.set_block(0, offset, b);
            offset += b.cols;
        }
        Ok(out)
    }

    /// Copies `block` into `self` with its top-left corner at `(row, col)`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &Self) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(row + r, col + c)] = block[(r, c)];
            }
        }
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out[(r, c)] = self[(row + r, col + c)];
            }
        }
        out
    }

    /// Leading principal submatrix of order `k`.
    pub fn leading_principal(&self, k: usize) -> Self {
        self.block(0, 0, k, k)
    }

    /// ‖A − A^H‖_F / ‖A‖_F (zero for the zero matrix).
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut diff = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                diff += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            diff.sqrt() / norm
        }
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        let d = self.sub(rhs)?;
        Ok(d.data.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a fallible product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigen-decomposition `A = U Λ U^H` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Sorted in descending order.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenSystem {
    /// Rebuilds `U Λ U^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let n = u.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| u[(i, k)] * l * u[(j, k)].conj())
                    .sum();
            }
        }
        out
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation. Sweeps continue
/// until the off-diagonal Frobenius mass falls below `JACOBI_TOL · ‖A‖_F`.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenSystem> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenproblem needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = a.rows();
    let mut w = a.clone();
    for i in 0..n {
        w[(i, i)].im = 0.0;
    }
    let mut u = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let threshold = JACOBI_TOL * norm;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&w) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut u, p, q);
            }
        }
    }
    if off_diagonal_norm(&w) > threshold {
        return Err(Error::Numeric("Jacobi sweeps did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].re.total_cmp(&w[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| w[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, dst)] = u[(r, src)];
        }
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(w: &mut ComplexMatrix, u: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // V = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let v00 = Complex64::new(c, 0.0);
    let v01 = Complex64::new(s, 0.0);
    let v10 = -phase.conj() * s;
    let v11 = phase.conj() * c;

    let n = w.rows();
    for k in 0..n {
        let wp = w[(k, p)];
        let wq = w[(k, q)];
        w[(k, p)] = wp * v00 + wq * v10;
        w[(k, q)] = wp * v01 + wq * v11;
    }
    for k in 0..n {
        let wp = w[(p, k)];
        let wq = w[(q, k)];
        w[(p, k)] = v00.conj() * wp + v10.conj() * wq;
        w[(q, k)] = v01.conj() * wp + v11.conj() * wq;
    }
    w[(p, q)] = Complex64::new(0.0, 0.0);
    w[(q, p)] = Complex64::new(0.0, 0.0);
    w[(p, p)].im = 0.0;
    w[(q, q)].im = 0.0;

    for k in 0..n {
        let up = u[(k, p)];
        let uq = u[(k, q)];
        u[(k, p)] = up * v00 + uq * v10;
        u[(k, q)] = up * v01 + uq * v11;
    }
}

/// Eigenvalues of `H^H H` in descending order, with tiny negatives clipped to zero.
pub fn gram_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let mut eig = hermitian_eig(&h.gram())?.eigenvalues;
    for l in &mut eig {
        if (-GRAM_CLIP..0.0).contains(l) {
            *l = 0.0;
        }
    }
    Ok(eig)
}

/// Normalized DFT matrix with entry `(p, q) = exp(−j2πpq/L)/√L`.
pub fn dft_matrix(len: usize) -> Result<ComplexMatrix> {
    if len == 0 {
        return Err(Error::Domain("DFT length must be at least 1".into()));
    }
    let scale = 1.0 / (len as f64).sqrt();
    let mut q = ComplexMatrix::zeros(len, len);
    for p in 0..len {
        for k in 0..len {
            // Reduce the exponent modulo L so large products keep full precision.
            let idx = (p * k) % len;
            let angle = -2.0 * PI * idx as f64 / len as f64;
            q[(p, k)] = Complex64::from_polar(scale, angle);
        }
    }
    Ok(q)
}

/// `dft_matrix(len) ⊗ I_size`.
pub fn augmented_dft(len: usize, size: usize) -> Result<ComplexMatrix> {
    if size == 0 {
        return Err(Error::Domain("identity block size must be at least 1".into()));
    }
    Ok(dft_matrix(len)?.kron(&ComplexMatrix::identity(size)))
}

/// Diagonal of `(I + ρ G)^{-1}` for Hermitian positive semidefinite `G`.
///
/// Uses a Cholesky factor `L` of `I + ρG`; the k-th diagonal entry of the
/// inverse is the squared norm of column `k` of `L^{-1}`.
pub fn resolvent_diagonal(g: &ComplexMatrix, rho: f64) -> Result<Vec<f64>> {
    let n = g.rows();
    let mut a = g.scale(Complex64::new(rho, 0.0));
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    inverse_diagonal_pd(&a)
}

/// Diagonal of `A^{-1}` for Hermitian positive definite `A`.
pub fn inverse_diagonal_pd(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    let n = a.rows();
    // Columns of L^{-1}, built by forward substitution against e_k.
    let mut diag = vec![0.0; n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        col[k] = Complex64::new(1.0, 0.0) / l[(k, k)];
        for i in (k + 1)..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in k..i {
                acc += l[(i, j)] * col[j];
            }
            col[i] = -acc / l[(i, i)];
        }
        // (A^{-1})_{kk} = Σ_i |(L^{-1})_{ik}|² over rows i ≥ k.
        diag[k] = col[k..].iter().map(|z| z.norm_sqr()).sum();
    }
    Ok(diag)
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension("Cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix not positive definite at pivot {j} ({d:.3e})"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_pd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension("right-hand side row count".into()));
    }
    let l = cholesky(a)?;
    let n = a.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// First place where two eigenvalue lists fail to interlace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterlaceViolation {
    /// Order of the larger matrix in the failing pair.
    pub outer_order: usize,
    /// Index `k` (0-based, descending order) of the failing inequality.
    pub index: usize,
    pub outer: (f64, f64),
    pub inner: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SturmianReport {
    pub passed: bool,
    pub pairs_checked: usize,
    pub first_violation: Option<InterlaceViolation>,
}

/// Checks `outer[k+1] ≤ inner[k] ≤ outer[k]` for descending lists with
/// `outer.len() == inner.len() + 1`. Returns the first failing index.
pub fn check_interlacing(outer: &[f64], inner: &[f64], slack: f64) -> Option<usize> {
    assert_eq!(outer.len(), inner.len() + 1, "interlacing needs sizes r+1 and r");
    inner
        .iter()
        .enumerate()
        .find(|&(k, &mu)| mu > outer[k] + slack || mu < outer[k + 1] - slack)
        .map(|(k, _)| k)
}

/// Sturmian separation check on the chain of leading principal submatrices
/// of orders `n − steps, …, n`.
pub fn sturmian_check(a: &ComplexMatrix, steps: usize) -> Result<SturmianReport> {
    let n = a.rows();
    if steps >= n.max(1) {
        return Err(Error::Domain(format!(
            "steps ({steps}) must be smaller than the matrix order ({n})"
        )));
    }
    let mut outer = hermitian_eig(a)?.eigenvalues;
    let mut pairs = 0;
    for order in ((n - steps)..n).rev() {
        let inner = hermitian_eig(&a.leading_principal(order))?.eigenvalues;
        pairs += 1;
        if let Some(k) = check_interlacing(&outer, &inner, INTERLACE_SLACK) {
            return Ok(SturmianReport {
                passed: false,
                pairs_checked: pairs,
                first_violation: Some(InterlaceViolation {
                    outer_order: order + 1,
                    index: k,
                    outer: (outer[k], outer[k + 1]),
                    inner: inner[k],
                }),
            });
        }
        outer = inner;
    }
    Ok(SturmianReport {
        passed: true,
        pairs_checked: pairs,
        first_violation: None,
    })
}
