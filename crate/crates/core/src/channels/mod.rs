//! CPTP maps in Choi form and their tangents.
//!
//! `C = Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`: input factor first, `tr C = d_in`.

mod family;
mod file;

pub use family::{ChannelFamily, FamilyKind, Transition, FAMILY_NAMES, FD_STEP};
pub use file::{ChannelSpec, ChoiEntries, Resolved};

pub use crate::states::Povm;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eig_hermitian, kron, max_abs_diff, min_eigenvalue, partial_trace, permute_factors, ComplexMatrix,
    ComplexVector, HermitianMatrix, Keep,
};
use crate::states::{DensityMatrix, StateTangent};

/// Tolerance on Choi positivity and trace preservation.
pub const CPTP_TOL: f64 = 1e-9;

/// Largest Choi dimension `(d_in·d_out)^n` an n-copy construction may build.
pub const MAX_CHOI_DIM: usize = 256;

/// Common view of channels and channel tangents: a Hermiticity-preserving
/// linear map given by its Choi matrix.
pub trait ChoiMap {
    fn d_in(&self) -> usize;
    fn d_out(&self) -> usize;
    fn choi(&self) -> &HermitianMatrix;

    /// `X ↦ Σ_{ij} X_{ij} Φ(|i⟩⟨j|)` on an arbitrary input matrix.
    fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_square(x, self.d_in(), "input")?;
        Ok(apply_choi(self.choi().as_matrix(), self.d_in(), self.d_out(), x))
    }

    /// Heisenberg-picture map `A ↦ Φ*(A)` with `tr[Φ(X)A] = tr[X Φ*(A)]`.
    fn adjoint_matrix(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_square(a, self.d_out(), "output observable")?;
        Ok(adjoint_choi(self.choi().as_matrix(), self.d_in(), self.d_out(), a))
    }

    /// Residual of the output partial trace against its target
    /// (`I` for channels, `0` for tangents).
    fn tp_residual(&self) -> f64;
}

fn check_square(x: &ComplexMatrix, dim: usize, what: &str) -> Result<()> {
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {dim}x{dim}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

fn apply_choi(c: &ComplexMatrix, d_in: usize, d_out: usize, x: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_out, d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            let xij = x[(i, j)];
            if xij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for a in 0..d_out {
                for b in 0..d_out {
                    out[(a, b)] += xij * c[(i * d_out + a, j * d_out + b)];
                }
            }
        }
    }
    out
}

fn adjoint_choi(c: &ComplexMatrix, d_in: usize, d_out: usize, a: &ComplexMatrix) -> ComplexMatrix {
    // Φ*(A)[j,i] = Σ_{ab} C[(i,a),(j,b)] A[b,a]
    let mut out = ComplexMatrix::zeros(d_in, d_in);
    for i in 0..d_in {
        for j in 0..d_in {
            let mut acc = Complex64::new(0.0, 0.0);
            for aa in 0..d_out {
                for b in 0..d_out {
                    acc += c[(i * d_out + aa, j * d_out + b)] * a[(b, aa)];
                }
            }
            out[(j, i)] = acc;
        }
    }
    out
}

fn output_partial_trace(choi: &HermitianMatrix, d_in: usize, d_out: usize) -> ComplexMatrix {
    partial_trace(choi.as_matrix(), Keep::First, (d_in, d_out)).expect("Choi dimension checked at construction")
}

fn check_choi_dims(choi: &HermitianMatrix, d_in: usize, d_out: usize) -> Result<()> {
    if d_in == 0 || d_out == 0 {
        return Err(Error::DimensionMismatch("channel dimensions must be positive".into()));
    }
    if choi.dim() != d_in * d_out {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix of dimension {} for d_in={d_in}, d_out={d_out}",
            choi.dim()
        )));
    }
    Ok(())
}

/// CPTP membership report for a Choi matrix.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CpReport {
    pub is_cptp: bool,
    pub min_eig: f64,
    pub tp_residual: f64,
}

/// Tests complete positivity (`C ⪰ 0`) and trace preservation
/// (`tr_out C = I`) within [`CPTP_TOL`].
pub fn cp_check(choi: &HermitianMatrix, d_in: usize, d_out: usize) -> Result<CpReport> {
    check_choi_dims(choi, d_in, d_out)?;
    let min_eig = min_eigenvalue(choi)?;
    let tp_residual = max_abs_diff(
        &output_partial_trace(choi, d_in, d_out),
        &ComplexMatrix::identity(d_in, d_in),
    );
    Ok(CpReport {
        is_cptp: min_eig >= -CPTP_TOL && tp_residual <= CPTP_TOL,
        min_eig,
        tp_residual,
    })
}

/// A completely positive trace-preserving map.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    d_in: usize,
    d_out: usize,
    choi: HermitianMatrix,
}

impl ChoiMap for Channel {
    fn d_in(&self) -> usize {
        self.d_in
    }
    fn d_out(&self) -> usize {
        self.d_out
    }
    fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }
    fn tp_residual(&self) -> f64 {
        max_abs_diff(
            &output_partial_trace(&self.choi, self.d_in, self.d_out),
            &ComplexMatrix::identity(self.d_in, self.d_in),
        )
    }
}

impl Channel {
    pub fn new(choi: HermitianMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let report = cp_check(&choi, d_in, d_out)?;
        if !report.is_cptp {
            return Err(Error::NotCptp {
                min_eig: report.min_eig,
                tp_residual: report.tp_residual,
            });
        }
        Ok(Self { d_in, d_out, choi })
    }

    pub(crate) fn new_unchecked(choi: HermitianMatrix, d_in: usize, d_out: usize) -> Self {
        Self { d_in, d_out, choi }
    }

    pub fn identity(dim: usize) -> Self {
        let omega = crate::linalg::max_entangled(dim);
        Self::new_unchecked(HermitianMatrix::projector(&omega), dim, dim)
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        let d = u.nrows();
        let uu = u.adjoint() * u;
        if !u.is_square() || max_abs_diff(&uu, &ComplexMatrix::identity(d, d)) > CPTP_TOL {
            return Err(Error::NotCptp {
                min_eig: 0.0,
                tp_residual: max_abs_diff(&uu, &ComplexMatrix::identity(d, d)),
            });
        }
        Self::from_kraus(std::slice::from_ref(u))
    }

    /// `ρ ↦ Σ_k K_k ρ K_k†`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no Kraus operators".into()))?;
        let (d_out, d_in) = first.shape();
        let mut choi = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
        for k in kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::DimensionMismatch("Kraus operators of differing shapes".into()));
            }
            let v = kraus_vec(k);
            choi += &v * v.adjoint();
        }
        Self::new(HermitianMatrix::symmetrize(choi), d_in, d_out)
    }

    /// Replacement channel `ρ ↦ tr(ρ)·σ`.
    pub fn constant(d_in: usize, sigma: &DensityMatrix) -> Self {
        let choi = kron(&ComplexMatrix::identity(d_in, d_in), sigma.mat().as_matrix());
        Self::new_unchecked(HermitianMatrix::symmetrize(choi), d_in, sigma.dim())
    }

    /// Kraus operators from the Choi eigendecomposition (rank-many,
    /// eigenvalues below 1e-14 dropped).
    pub fn kraus(&self) -> Result<Vec<ComplexMatrix>> {
        let e = eig_hermitian(&self.choi)?;
        let mut out = Vec::new();
        for (k, &lam) in e.values.iter().enumerate().rev() {
            if lam <= 1e-14 {
                continue;
            }
            let v = e.vectors.column(k).scale(lam.sqrt());
            out.push(ComplexMatrix::from_fn(self.d_out, self.d_in, |a, i| {
                v[i * self.d_out + a]
            }));
        }
        Ok(out)
    }

    pub fn cp_report(&self) -> Result<CpReport> {
        cp_check(&self.choi, self.d_in, self.d_out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.mat().as_matrix())?;
        Ok(DensityMatrix::new_unchecked(HermitianMatrix::symmetrize(out)))
    }

    pub fn apply_tangent(&self, delta: &StateTangent) -> Result<StateTangent> {
        let out = self.apply_matrix(delta.mat().as_matrix())?;
        Ok(StateTangent::new_unchecked(HermitianMatrix::symmetrize(out)))
    }

    pub fn apply_adjoint(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix::symmetrize(self.adjoint_matrix(a.as_matrix())?))
    }
}

/// `|K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩`.
fn kraus_vec(k: &ComplexMatrix) -> ComplexVector {
    let (d_out, d_in) = k.shape();
    ComplexVector::from_fn(d_in * d_out, |idx, _| k[(idx % d_out, idx / d_out)])
}

/// Tangent vector to the channel manifold: Hermitian Choi matrix with
/// vanishing output partial trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTangent {
    d_in: usize,
    d_out: usize,
    choi: HermitianMatrix,
}

impl ChoiMap for ChannelTangent {
    fn d_in(&self) -> usize {
        self.d_in
    }
    fn d_out(&self) -> usize {
        self.d_out
    }
    fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }
    fn tp_residual(&self) -> f64 {
        output_partial_trace(&self.choi, self.d_in, self.d_out)
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}

impl ChannelTangent {
    pub fn new(choi: HermitianMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        check_choi_dims(&choi, d_in, d_out)?;
        let t = Self::new_unchecked(choi, d_in, d_out);
        let scale = t.choi.as_matrix().iter().fold(1.0_f64, |m, z| m.max(z.norm()));
        let resid = t.tp_residual();
        if resid > CPTP_TOL * scale {
            return Err(Error::InvalidChannelTangent(resid));
        }
        Ok(t)
    }

    pub(crate) fn new_unchecked(choi: HermitianMatrix, d_in: usize, d_out: usize) -> Self {
        Self { d_in, d_out, choi }
    }

    pub fn zero(d_in: usize, d_out: usize) -> Self {
        Self::new_unchecked(HermitianMatrix::zeros(d_in * d_out), d_in, d_out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new_unchecked(self.choi.scale(s), self.d_in, self.d_out)
    }

    /// `Δ(ρ)`, the induced state tangent.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<StateTangent> {
        let out = self.apply_matrix(rho.mat().as_matrix())?;
        Ok(StateTangent::new_unchecked(HermitianMatrix::symmetrize(out)))
    }

    pub fn apply_adjoint(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix::symmetrize(self.adjoint_matrix(a.as_matrix())?))
    }
}

fn compose_choi<A: ChoiMap, B: ChoiMap>(post: &A, pre: &B) -> Result<HermitianMatrix> {
    if post.d_in() != pre.d_out() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner dimensions {} and {}",
            pre.d_out(),
            post.d_in()
        )));
    }
    let (d_in, d_mid, d_out) = (pre.d_in(), pre.d_out(), post.d_out());
    let c = pre.choi().as_matrix();
    let mut out = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            let block = c.view((i * d_mid, j * d_mid), (d_mid, d_mid)).into_owned();
            let mapped = apply_choi(post.choi().as_matrix(), d_mid, d_out, &block);
            out.view_mut((i * d_out, j * d_out), (d_out, d_out)).copy_from(&mapped);
        }
    }
    Ok(HermitianMatrix::symmetrize(out))
}

fn tensor_choi<A: ChoiMap, B: ChoiMap>(left: &A, right: &B) -> HermitianMatrix {
    let dims = [left.d_in(), left.d_out(), right.d_in(), right.d_out()];
    let k = kron(left.choi().as_matrix(), right.choi().as_matrix());
    let c = permute_factors(&k, &dims, &[0, 2, 1, 3]).expect("dimensions consistent by construction");
    HermitianMatrix::symmetrize(c)
}

/// `Ψ ∘ Φ` (apply `pre` first).
pub fn compose(post: &Channel, pre: &Channel) -> Result<Channel> {
    Ok(Channel::new_unchecked(compose_choi(post, pre)?, pre.d_in, post.d_out))
}

/// `Ψ ∘ Δ`: post-processing of a tangent.
pub fn compose_tangent(post: &Channel, pre: &ChannelTangent) -> Result<ChannelTangent> {
    Ok(ChannelTangent::new_unchecked(
        compose_choi(post, pre)?,
        pre.d_in,
        post.d_out,
    ))
}

/// `Δ ∘ Ψ`: pre-processing of a tangent.
pub fn compose_tangent_pre(post: &ChannelTangent, pre: &Channel) -> Result<ChannelTangent> {
    Ok(ChannelTangent::new_unchecked(
        compose_choi(post, pre)?,
        pre.d_in,
        post.d_out,
    ))
}

/// `Φ ⊗ Ψ`, Choi ordered as `(in₁ in₂ | out₁ out₂)`.
pub fn tensor(left: &Channel, right: &Channel) -> Channel {
    Channel::new_unchecked(
        tensor_choi(left, right),
        left.d_in * right.d_in,
        left.d_out * right.d_out,
    )
}

/// `Δ ⊗ Ψ`.
pub fn tensor_tangent_left(left: &ChannelTangent, right: &Channel) -> ChannelTangent {
    ChannelTangent::new_unchecked(
        tensor_choi(left, right),
        left.d_in * right.d_in,
        left.d_out * right.d_out,
    )
}

/// `Φ ⊗ Δ`.
pub fn tensor_tangent_right(left: &Channel, right: &ChannelTangent) -> ChannelTangent {
    ChannelTangent::new_unchecked(
        tensor_choi(left, right),
        left.d_in * right.d_in,
        left.d_out * right.d_out,
    )
}

/// `(Φ^{⊗n}, Δ^{(n)})` with `Δ^{(n)} = Σ_k Φ^{⊗k} ⊗ Δ ⊗ Φ^{⊗(n-k-1)}`.
pub fn n_copy(phi: &Channel, delta: &ChannelTangent, n: usize) -> Result<(Channel, ChannelTangent)> {
    if n == 0 {
        return Err(Error::DimensionMismatch("n_copy needs n >= 1".into()));
    }
    if (phi.d_in, phi.d_out) != (delta.d_in, delta.d_out) {
        return Err(Error::DimensionMismatch("channel and tangent dimensions differ".into()));
    }
    let per_copy = phi.d_in * phi.d_out;
    let dim = u32::try_from(n)
        .ok()
        .and_then(|n| per_copy.checked_pow(n))
        .filter(|&d| d <= MAX_CHOI_DIM);
    if dim.is_none() {
        return Err(Error::BudgetExceeded(format!(
            "{n} copies of a {}->{} channel exceed the Choi dimension budget {MAX_CHOI_DIM}",
            phi.d_in, phi.d_out
        )));
    }
    let mut channel = phi.clone();
    let mut tangent = delta.clone();
    for _ in 1..n {
        // Δ^{(k+1)} = Δ^{(k)} ⊗ Φ + Φ^{⊗k} ⊗ Δ
        let a = tensor_tangent_left(&tangent, phi);
        let b = tensor_tangent_right(&channel, delta);
        tangent = ChannelTangent::new_unchecked(a.choi.add(&b.choi), a.d_in, a.d_out);
        channel = tensor(&channel, phi);
    }
    Ok((channel, tangent))
}

/// Realigned Choi matrix `C̃[(i,j),(a,b)] = C[(i,a),(j,b)]`, the form in
/// which `Φ ⊗ id_K` acts by matrix multiplication.
#[derive(Clone, Debug)]
pub(crate) struct Realigned {
    pub d_in: usize,
    pub d_out: usize,
    mat: ComplexMatrix,
}

impl Realigned {
    pub fn new<M: ChoiMap>(m: &M) -> Self {
        let (d_in, d_out) = (m.d_in(), m.d_out());
        let c = m.choi().as_matrix();
        let mat = DMatrix::from_fn(d_in * d_in, d_out * d_out, |r, s| {
            let (i, j) = (r / d_in, r % d_in);
            let (a, b) = (s / d_out, s % d_out);
            c[(i * d_out + a, j * d_out + b)]
        });
        Self { d_in, d_out, mat }
    }

    /// `(Φ ⊗ id_K)(X)` for `X` on `in ⊗ K`.
    #[cfg(test)]
    pub fn apply_extended(&self, x: &ComplexMatrix, d_anc: usize) -> ComplexMatrix {
        let (d_in, d_out) = (self.d_in, self.d_out);
        // P[(i,j),(k,l)] = X[(i,k),(j,l)]
        let p = DMatrix::from_fn(d_in * d_in, d_anc * d_anc, |r, s| {
            let (i, j) = (r / d_in, r % d_in);
            let (k, l) = (s / d_anc, s % d_anc);
            x[(i * d_anc + k, j * d_anc + l)]
        });
        let m = self.mat.transpose() * p;
        DMatrix::from_fn(d_out * d_anc, d_out * d_anc, |r, s| {
            let (a, k) = (r / d_anc, r % d_anc);
            let (b, l) = (s / d_anc, s % d_anc);
            m[(a * d_out + b, k * d_anc + l)]
        })
    }

    /// `(Φ ⊗ id_K)(|ψ⟩⟨ψ|)`.
    pub fn apply_to_probe(&self, psi: &ComplexVector, d_anc: usize) -> ComplexMatrix {
        let (d_in, d_out) = (self.d_in, self.d_out);
        let p = DMatrix::from_fn(d_in * d_in, d_anc * d_anc, |r, s| {
            let (i, j) = (r / d_in, r % d_in);
            let (k, l) = (s / d_anc, s % d_anc);
            psi[i * d_anc + k] * psi[j * d_anc + l].conj()
        });
        let m = linalg::mul_transpose(&self.mat, &p);
        DMatrix::from_fn(d_out * d_anc, d_out * d_anc, |r, s| {
            let (a, k) = (r / d_anc, r % d_anc);
            let (b, l) = (s / d_anc, s % d_anc);
            m[(a * d_out + b, k * d_anc + l)]
        })
    }

    /// `(Φ ⊗ id_K)*(A)` for `A` on `out ⊗ K`.
    pub fn adjoint_extended(&self, a: &ComplexMatrix, d_anc: usize) -> ComplexMatrix {
        let (d_in, d_out) = (self.d_in, self.d_out);
        // X[(j,l),(i,k)] = Σ_{ab} C̃[(i,j),(a,b)] A[(b,l),(a,k)]
        let ahat = DMatrix::from_fn(d_out * d_out, d_anc * d_anc, |r, s| {
            let (aa, b) = (r / d_out, r % d_out);
            let (k, l) = (s / d_anc, s % d_anc);
            a[(b * d_anc + l, aa * d_anc + k)]
        });
        let r = linalg::mul(&self.mat, &ahat);
        DMatrix::from_fn(d_in * d_anc, d_in * d_anc, |row, col| {
            let (j, l) = (row / d_anc, row % d_anc);
            let (i, k) = (col / d_anc, col % d_anc);
            r[(i * d_in + j, k * d_anc + l)]
        })
    }
}

/// Channels and tangents with an ancilla of dimension `d_anc` attached.
pub fn extend_channel(phi: &Channel, d_anc: usize) -> Channel {
    tensor(phi, &Channel::identity(d_anc))
}

pub fn extend_tangent(delta: &ChannelTangent, d_anc: usize) -> ChannelTangent {
    tensor_tangent_left(delta, &Channel::identity(d_anc))
}

pub mod random {
    //! Random channels for property tests.
    use super::*;
    use rand::Rng;

    /// Random channel with `rank` Kraus operators from an isometry.
    pub fn channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, rank: usize, rng: &mut R) -> Channel {
        // an isometry needs d_out·rank ≥ d_in
        let rank = rank.max(d_in.div_ceil(d_out));
        let g = crate::linalg::random::gaussian_matrix(d_out * rank, d_in, rng);
        // V = G (G†G)^{-1/2} is an isometry in → out ⊗ env
        let gg = HermitianMatrix::symmetrize(g.adjoint() * &g);
        let e = eig_hermitian(&gg).expect("small Hermitian eigenproblem");
        let mut inv_sqrt = ComplexMatrix::zeros(d_in, d_in);
        for k in 0..d_in {
            inv_sqrt[(k, k)] = Complex64::new(1.0 / e.values[k].sqrt(), 0.0);
        }
        let v = &g * (&e.vectors * inv_sqrt * e.vectors.adjoint());
        let kraus: Vec<ComplexMatrix> = (0..rank)
            .map(|r| ComplexMatrix::from_fn(d_out, d_in, |a, i| v[(a * rank + r, i)]))
            .collect();
        Channel::from_kraus(&kraus).expect("isometry yields a CPTP map")
    }

    /// Random tangent at `phi`: `Δ = Σ_y w_y (Λ_y − Φ)` for random channels
    /// `Λ_y`, so that `Φ ± εΔ` stays in the channel set for small ε.
    pub fn tangent_at<R: Rng + ?Sized>(phi: &Channel, rng: &mut R) -> ChannelTangent {
        let mut choi = HermitianMatrix::zeros(phi.d_in * phi.d_out);
        for _ in 0..2 {
            let w: f64 = rng.gen_range(-1.0..1.0);
            let lam = channel(phi.d_in, phi.d_out, 2, rng);
            choi = choi.add(&lam.choi.sub(&phi.choi).scale(w));
        }
        ChannelTangent::new_unchecked(choi, phi.d_in, phi.d_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, pauli_x, random as lrandom, trace_product};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn bitflip(theta: f64) -> Channel {
        ChannelFamily::bitflip().channel(theta).unwrap()
    }

    #[test]
    fn apply_examples() {
        let mut r = rng(1);
        let rho = DensityMatrix::new(lrandom::density(3, &mut r)).unwrap();
        let out = Channel::identity(3).apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(out.mat().as_matrix(), rho.mat().as_matrix()) < 1e-15);

        let zero = DensityMatrix::pure(&linalg::basis_vector(2, 0)).unwrap();
        let out = bitflip(0.1).apply(&zero).unwrap();
        let expected = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        assert!(linalg::max_abs_diff(out.mat().as_matrix(), expected.as_matrix()) < 1e-15);

        let phi = random::channel(3, 2, 3, &mut r);
        let out = phi.apply(&DensityMatrix::maximally_mixed(3)).unwrap();
        assert!((out.mat().trace() - 1.0).abs() < 1e-12);
        assert!(DensityMatrix::new(out.mat().clone()).is_ok());
        assert!(phi.apply(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let mut r = rng(2);
        let phi = random::channel(2, 3, 2, &mut r);
        let unit = phi.apply_adjoint(&HermitianMatrix::identity(3)).unwrap();
        assert!(linalg::max_abs_diff(unit.as_matrix(), &ComplexMatrix::identity(2, 2)) < 1e-12);
        let a = lrandom::hermitian(3, &mut r);
        let same = Channel::identity(3).apply_adjoint(&a).unwrap();
        assert!(linalg::max_abs_diff(same.as_matrix(), a.as_matrix()) < 1e-15);
        for _ in 0..10 {
            let rho = DensityMatrix::new(lrandom::density(2, &mut r)).unwrap();
            let a = lrandom::hermitian(3, &mut r);
            let lhs = trace_product(phi.apply(&rho).unwrap().mat().as_matrix(), a.as_matrix());
            let rhs = trace_product(rho.mat().as_matrix(), phi.apply_adjoint(&a).unwrap().as_matrix());
            assert!((lhs - rhs).norm() < 1e-11);
        }
        assert!(phi.apply_adjoint(&HermitianMatrix::identity(2)).is_err());
    }

    #[test]
    fn compose_and_tensor_examples() {
        let mut r = rng(3);
        let phi = random::channel(2, 3, 2, &mut r);
        let left = compose(&phi, &Channel::identity(2)).unwrap();
        assert!(linalg::max_abs_diff(left.choi().as_matrix(), phi.choi().as_matrix()) < 1e-12);
        let right = compose(&Channel::identity(3), &phi).unwrap();
        assert!(linalg::max_abs_diff(right.choi().as_matrix(), phi.choi().as_matrix()) < 1e-12);
        assert!(compose(&phi, &phi).is_err());

        let id4 = tensor(&Channel::identity(2), &Channel::identity(2));
        assert!(linalg::max_abs_diff(id4.choi().as_matrix(), Channel::identity(4).choi().as_matrix()) < 1e-15);

        let psi = random::channel(3, 2, 2, &mut r);
        let both = tensor(&phi, &psi);
        assert!(both.cp_report().unwrap().is_cptp);
        let rho = DensityMatrix::new(lrandom::density(2, &mut r)).unwrap();
        let sigma = DensityMatrix::new(lrandom::density(3, &mut r)).unwrap();
        let joint = DensityMatrix::new(HermitianMatrix::symmetrize(kron(
            rho.mat().as_matrix(),
            sigma.mat().as_matrix(),
        )))
        .unwrap();
        let lhs = both.apply(&joint).unwrap();
        let rhs = kron(
            phi.apply(&rho).unwrap().mat().as_matrix(),
            psi.apply(&sigma).unwrap().mat().as_matrix(),
        );
        assert!(linalg::max_abs_diff(lhs.mat().as_matrix(), &rhs) < 1e-10);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut r = rng(4);
        let phi = random::channel(2, 3, 2, &mut r);
        let psi = random::channel(3, 2, 3, &mut r);
        let rho = DensityMatrix::new(lrandom::density(2, &mut r)).unwrap();
        let direct = compose(&psi, &phi).unwrap().apply(&rho).unwrap();
        let seq = psi.apply(&phi.apply(&rho).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(direct.mat().as_matrix(), seq.mat().as_matrix()) < 1e-12);
    }

    #[test]
    fn n_copy_examples() {
        let fam = ChannelFamily::bitflip();
        let (phi, delta) = fam.point(0.1).unwrap();
        let (p1, d1) = n_copy(&phi, &delta, 1).unwrap();
        assert_eq!(p1, phi);
        assert_eq!(d1, delta);

        let h = 1e-5;
        let (_, d2) = n_copy(&phi, &delta, 2).unwrap();
        let plus = tensor(&bitflip(0.1 + h), &bitflip(0.1 + h));
        let minus = tensor(&bitflip(0.1 - h), &bitflip(0.1 - h));
        let fd = (plus.choi().as_matrix() - minus.choi().as_matrix()).unscale(2.0 * h);
        assert!(linalg::max_abs_diff(&fd, d2.choi().as_matrix()) < 1e-8);

        for n in 1..=4 {
            let (pn, dn) = n_copy(&phi, &delta, n).unwrap();
            assert!(dn.tp_residual() < 1e-12);
            assert!(pn.tp_residual() < 1e-12);
        }
        assert!(matches!(n_copy(&phi, &delta, 5), Err(Error::BudgetExceeded(_))));
        assert!(matches!(n_copy(&phi, &delta, 9), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn cp_check_examples() {
        let id = Channel::identity(2);
        let rep = cp_check(id.choi(), 2, 2).unwrap();
        assert!(rep.is_cptp);
        assert!(rep.min_eig.abs() < 1e-14);

        let (phi, delta) = ChannelFamily::bitflip().point(0.1).unwrap();
        let shifted = phi.choi().add_scaled(-0.2, delta.choi());
        let rep = cp_check(&shifted, 2, 2).unwrap();
        assert!(!rep.is_cptp);
        assert!((rep.min_eig + 0.2).abs() < 1e-12);

        let mut swap = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = c(1.0, 0.0);
            }
        }
        let rep = cp_check(&HermitianMatrix::new(swap).unwrap(), 2, 2).unwrap();
        assert!(!rep.is_cptp);
        assert!((rep.min_eig + 1.0).abs() < 1e-12);
        assert!(rep.tp_residual < 1e-15);
    }

    #[test]
    fn kraus_roundtrip() {
        let mut r = rng(9);
        let phi = random::channel(2, 2, 3, &mut r);
        let back = Channel::from_kraus(&phi.kraus().unwrap()).unwrap();
        assert!(linalg::max_abs_diff(back.choi().as_matrix(), phi.choi().as_matrix()) < 1e-12);
        let u = Channel::unitary(&pauli_x()).unwrap();
        assert_eq!(u.kraus().unwrap().len(), 1);
    }

    #[test]
    fn realigned_matches_explicit_extension() {
        let mut r = rng(12);
        let phi = random::channel(2, 3, 2, &mut r);
        let d_anc = 2;
        let ext = extend_channel(&phi, d_anc);
        let re = Realigned::new(&phi);
        let psi = lrandom::unit_vector(4, &mut r);
        let direct = ext.apply(&DensityMatrix::pure(&psi).unwrap()).unwrap();
        let fast = re.apply_to_probe(&psi, d_anc);
        assert!(linalg::max_abs_diff(direct.mat().as_matrix(), &fast) < 1e-12);
        let general = re.apply_extended(&(&psi * psi.adjoint()), d_anc);
        assert!(linalg::max_abs_diff(&general, &fast) < 1e-12);
        let a = lrandom::hermitian(6, &mut r);
        let direct = ext.apply_adjoint(&a).unwrap();
        let fast = re.adjoint_extended(a.as_matrix(), d_anc);
        assert!(linalg::max_abs_diff(direct.as_matrix(), &fast) < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn compose_and_tensor_associate(seed in any::<u64>()) {
                let mut r = rng(seed);
                let a = random::channel(2, 3, 2, &mut r);
                let b = random::channel(3, 2, 2, &mut r);
                let cc = random::channel(2, 2, 3, &mut r);
                let l = compose(&compose(&cc, &b).unwrap(), &a).unwrap();
                let rr = compose(&cc, &compose(&b, &a).unwrap()).unwrap();
                prop_assert!(linalg::max_abs_diff(l.choi().as_matrix(), rr.choi().as_matrix()) < 1e-10);
                let l = tensor(&tensor(&a, &b), &cc);
                let rr = tensor(&a, &tensor(&b, &cc));
                prop_assert!(linalg::max_abs_diff(l.choi().as_matrix(), rr.choi().as_matrix()) < 1e-10);
            }

            #[test]
            fn adjoint_duality(seed in any::<u64>(), d_in in 1usize..4, d_out in 1usize..4) {
                let mut r = rng(seed);
                let phi = random::channel(d_in, d_out, 2, &mut r);
                let rho = DensityMatrix::new(lrandom::density(d_in, &mut r)).unwrap();
                let a = lrandom::hermitian(d_out, &mut r);
                let lhs = trace_product(phi.apply(&rho).unwrap().mat().as_matrix(), a.as_matrix());
                let rhs = trace_product(rho.mat().as_matrix(), phi.apply_adjoint(&a).unwrap().as_matrix());
                prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + a.frobenius_norm()));
            }

            #[test]
            fn sld_is_monotone_under_channels(seed in any::<u64>()) {
                let mut r = rng(seed);
                let rho = DensityMatrix::new(lrandom::density(3, &mut r)).unwrap();
                let delta = StateTangent::new(lrandom::traceless(3, &mut r)).unwrap();
                let lam = random::channel(3, 2, 2, &mut r);
                let before = crate::states::sld_fisher(&rho, &delta).unwrap().value();
                let after = crate::states::sld_fisher(&lam.apply(&rho).unwrap(), &lam.apply_tangent(&delta).unwrap())
                    .unwrap()
                    .value();
                prop_assert!(after <= before + 1e-8 * (1.0 + before));
            }
        }
    }
}
