//! Dense complex linear algebra.
//!
//! Index convention: a matrix on `H₁ ⊗ … ⊗ H_k` is indexed row-major with the
//! first tensor factor as the most significant digit, i.e. basis vector
//! `|i₁ … i_k⟩` sits at `((i₁·d₂ + i₂)·d₃ + …)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// General dense complex matrix.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Relative asymmetry tolerated by [`HermitianMatrix::new`] before it
/// symmetrizes.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square complex matrix with `A = A†` holding exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts `a` if it is Hermitian up to [`HERMITIAN_TOL`] (relative to
    /// its largest entry) and stores `(A + A†)/2`.
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = a.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
        let asym = max_abs_diff(&a, &a.adjoint());
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self::symmetrize(a))
    }

    /// Symmetrizes without checking. For results that are Hermitian by
    /// construction and only carry rounding asymmetry.
    pub(crate) fn symmetrize(a: ComplexMatrix) -> Self {
        let adj = a.adjoint();
        Self((a + adj).scale(0.5))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c(d, 0.0);
        }
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &ComplexVector) -> Self {
        Self::symmetrize(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// Linear combination `self + s·other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        Self(&self.0 + other.0.scale(s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

fn view(a: &ComplexMatrix) -> faer::MatRef<'_, Complex64> {
    faer::MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols())
}

fn product<L, R>(lhs: faer::MatRef<'_, L>, rhs: faer::MatRef<'_, R>) -> ComplexMatrix
where
    L: faer::traits::Conjugate<Canonical = Complex64>,
    R: faer::traits::Conjugate<Canonical = Complex64>,
{
    let mut out = ComplexMatrix::zeros(lhs.nrows(), rhs.ncols());
    let (r, c) = (out.nrows(), out.ncols());
    faer::linalg::matmul::matmul(
        faer::MatMut::from_column_major_slice_mut(out.as_mut_slice(), r, c),
        faer::Accum::Replace,
        lhs,
        rhs,
        Complex64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    out
}

/// `A B`. Complex products in nalgebra take a naive loop, so the hot paths
/// go through this instead.
pub fn mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows(), "product dimension mismatch");
    product(view(a), view(b))
}

/// `A† B`.
pub fn mul_adj(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.nrows(), b.nrows(), "product dimension mismatch");
    product(view(a).adjoint(), view(b))
}

/// `Aᵀ B`.
pub fn mul_transpose(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.nrows(), b.nrows(), "product dimension mismatch");
    product(view(a).transpose(), view(b))
}

/// `V M V†`.
pub fn conjugate(v: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    product(view(&mul(v, m)), view(v).adjoint())
}

/// `V† M V`.
pub fn conjugate_adj(v: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    mul(&mul_adj(v, m), v)
}

/// Eigendecomposition `A = V diag(λ) V†` with ascending real eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let l = self.values[j];
            for i in 0..n {
                scaled[(i, j)] *= l;
            }
        }
        product(view(&scaled), view(&self.vectors).adjoint())
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<Eigen> {
    let n = a.dim();
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    if a.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eig = view(&a.0)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let (s, u) = (eig.S().column_vector(), eig.U());
    let values: Vec<f64> = (0..n).map(|k| s[k].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    if values.iter().any(|v| !v.is_finite()) || vectors.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(
            "Hermitian eigensolver produced non-finite output".into(),
        ));
    }
    Ok(sorted(&values, &vectors))
}

fn sorted(values: &[f64], vectors: &ComplexMatrix) -> Eigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = ComplexMatrix::zeros(vectors.nrows(), n);
    for (new_col, &old_col) in order.iter().enumerate() {
        out.set_column(new_col, &vectors.column(old_col));
    }
    Eigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: out,
    }
}

#[cfg(test)]
fn residual(a: &HermitianMatrix, e: &Eigen) -> f64 {
    let mut r = &a.0 * &e.vectors;
    for (k, &lam) in e.values.iter().enumerate() {
        let col = e.vectors.column(k) * c(lam, 0.0);
        let mut rc = r.column_mut(k);
        rc -= col;
    }
    // NaN anywhere must count as the worst residual, not be ignored by max
    r.iter().fold(0.0_f64, |m, z| {
        let v = z.norm();
        if v.is_nan() || m.is_nan() {
            f64::INFINITY
        } else {
            m.max(v)
        }
    })
}

pub fn min_eigenvalue(a: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.values.first().copied().unwrap_or(0.0))
}

pub fn max_eigenvalue(a: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.values.last().copied().unwrap_or(0.0))
}

/// `(A⊗B)[(i·rB+k),(j·cB+l)] = A[i,j]·B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let mut out = ComplexVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            out[i * b.len() + k] = a[i] * b[k];
        }
    }
    out
}

/// Which factor of a bipartite space survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of `a` on `H₁⊗H₂` with `dims = (d₁, d₂)`.
pub fn partial_trace(a: &ComplexMatrix, keep: Keep, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if a.nrows() != d1 * d2 || a.ncols() != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} matrix over dims ({d1},{d2})",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| a[(i * d2 + k, j * d2 + k)]).sum()),
        Keep::Second => ComplexMatrix::from_fn(d2, d2, |k, l| (0..d1).map(|i| a[(i * d2 + k, i * d2 + l)]).sum()),
    })
}

fn check_perm(dims: &[usize], perm: &[usize]) -> Result<()> {
    if dims.len() != perm.len() {
        return Err(Error::InvalidPermutation(format!(
            "{} factors but permutation of length {}",
            dims.len(),
            perm.len()
        )));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// For each new flat index, the old flat index it reads from. New factor `p`
/// is old factor `perm[p]`.
fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let k = dims.len();
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut old_strides = vec![1usize; k];
    for f in (0..k.saturating_sub(1)).rev() {
        old_strides[f] = old_strides[f + 1] * dims[f + 1];
    }
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; k];
    for entry in map.iter_mut() {
        *entry = (0..k).map(|p| digits[p] * old_strides[perm[p]]).sum();
        for p in (0..k).rev() {
            digits[p] += 1;
            if digits[p] < new_dims[p] {
                break;
            }
            digits[p] = 0;
        }
    }
    map
}

/// Reorders tensor factors on both sides: the basis vector `|i₁…i_k⟩` of the
/// result is `|i_{π(1)}…i_{π(k)}⟩` of the input.
pub fn permute_factors(a: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    check_perm(dims, perm)?;
    let total: usize = dims.iter().product();
    if a.nrows() != total || a.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {dims:?} give {total}, matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let map = permutation_index_map(dims, perm);
    Ok(ComplexMatrix::from_fn(total, total, |i, j| a[(map[i], map[j])]))
}

pub fn permute_vector(v: &ComplexVector, dims: &[usize], perm: &[usize]) -> Result<ComplexVector> {
    check_perm(dims, perm)?;
    let total: usize = dims.iter().product();
    if v.len() != total {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {dims:?} give {total}, vector has {}",
            v.len()
        )));
    }
    let map = permutation_index_map(dims, perm);
    Ok(ComplexVector::from_fn(total, |i, _| v[map[i]]))
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

pub fn pauli_i() -> ComplexMatrix {
    ComplexMatrix::identity(2, 2)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// The four Bell vectors `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻` on `C²⊗C²`.
pub fn bell_basis() -> [ComplexVector; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: f64, b: f64, cc: f64, d: f64| {
        ComplexVector::from_vec(vec![c(a * s, 0.), c(b * s, 0.), c(cc * s, 0.), c(d * s, 0.)])
    };
    [
        v(1., 0., 0., 1.),
        v(1., 0., 0., -1.),
        v(0., 1., 1., 0.),
        v(0., 1., -1., 0.),
    ]
}

pub fn basis_vector(dim: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[i] = c(1.0, 0.0);
    v
}

/// Unnormalized maximally entangled vector `Σ_i |i⟩|i⟩`.
pub fn max_entangled(dim: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim * dim);
    for i in 0..dim {
        v[i * dim + i] = c(1.0, 0.0);
    }
    v
}

/// Random generators shared by the optimisers and the test suites.
pub mod random {
    use super::*;

    pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Haar-random unit vector.
    pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
        let v = ComplexVector::from_fn(dim, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let n = v.norm();
        v.unscale(n)
    }

    pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
        HermitianMatrix::symmetrize(gaussian_matrix(dim, dim, rng))
    }

    /// Full-rank random density matrix `G G† / tr(G G†)`.
    pub fn density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
        let g = gaussian_matrix(dim, dim, rng);
        let p = &g * g.adjoint();
        let t = p.trace().re;
        HermitianMatrix::symmetrize(p.unscale(t))
    }

    /// Random traceless Hermitian matrix.
    pub fn traceless<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
        let h = hermitian(dim, rng);
        let shift = h.trace() / dim as f64;
        h.sub(&HermitianMatrix::identity(dim).scale(shift))
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase fix.
    pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
        let g = gaussian_matrix(dim, dim, rng);
        let qr = g.qr();
        let (mut q, r) = qr.unpack();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        q
    }
}
