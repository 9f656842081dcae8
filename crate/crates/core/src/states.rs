//! Quantum states, their tangents, and Fisher informations.
//!
//! Singular states are handled on their support: eigenvalues at or below
//! [`SUPPORT_TOL`] are treated as zero, and tangent mass above
//! [`ESCAPE_TOL`] outside the support makes the information infinite.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, eig_hermitian, trace_product, ComplexMatrix, Eigen, HermitianMatrix};

/// Eigenvalue (or eigenvalue-pair sum) below which a direction is outside the
/// support of a state.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Tangent weight outside the support tolerated as rounding.
pub const ESCAPE_TOL: f64 = 1e-9;
/// Zero threshold for classical probabilities and tangents.
pub const CLASSICAL_TOL: f64 = 1e-12;

const STATE_TOL: f64 = 1e-10;
const POVM_TOL: f64 = 1e-10;

/// Non-negative extended real: a finite value or `+∞`.
///
/// Ordering puts every finite value below `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn value(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// `self ≤ other + tol`, with `+∞ ≤ +∞`.
    pub fn le_with_tol(self, other: Self, tol: f64) -> bool {
        match (self, other) {
            (_, ExtReal::Infinite) => true,
            (ExtReal::Infinite, ExtReal::Finite(_)) => false,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b + tol,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * s),
            ExtReal::Infinite if s == 0.0 => ExtReal::ZERO,
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
            (ExtReal::Infinite, _) => Some(Ordering::Greater),
            (_, ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(ExtReal::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(mat: HermitianMatrix) -> Result<Self> {
        let tr = mat.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = crate::linalg::min_eigenvalue(&mat)?;
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(mat))
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub fn pure(v: &crate::linalg::ComplexVector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state vector norm {n}")));
        }
        Ok(Self(HermitianMatrix::projector(v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub(crate) fn new_unchecked(mat: HermitianMatrix) -> Self {
        Self(mat)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn mat(&self) -> &HermitianMatrix {
        &self.0
    }
}

/// Traceless Hermitian operator: a tangent vector to the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTangent(HermitianMatrix);

impl StateTangent {
    pub fn new(mat: HermitianMatrix) -> Result<Self> {
        let tr = mat.trace();
        if tr.abs() > STATE_TOL {
            return Err(Error::InvalidTangent(tr));
        }
        Ok(Self(mat))
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub(crate) fn new_unchecked(mat: HermitianMatrix) -> Self {
        Self(mat)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn mat(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }
}

/// Classical probability distribution on `{0, …, k-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Entries in `[-1e-12, 0)` are rounding and are clamped to zero.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -CLASSICAL_TOL) {
            return Err(Error::InvalidDistribution(format!("entry {x}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > CLASSICAL_TOL {
            return Err(Error::InvalidDistribution(format!("sum {sum} != 1")));
        }
        Ok(Self(p.into_iter().map(|x| x.max(0.0)).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Classical tangent: a signed vector summing to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedVector(Vec<f64>);

impl SignedVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite tangent entry".into()));
        }
        let sum: f64 = d.iter().sum();
        let scale = d.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if sum.abs() > CLASSICAL_TOL * scale {
            return Err(Error::InvalidDistribution(format!("tangent sums to {sum:e}")));
        }
        Ok(Self(d))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Σ_{p(x)>0} d(x)²/p(x)`; infinite when a zero-probability outcome moves.
pub fn classical_fisher(p: &ProbVector, d: &SignedVector) -> Result<ExtReal> {
    if p.len() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "distribution has {} outcomes, tangent {}",
            p.len(),
            d.len()
        )));
    }
    Ok(classical_fisher_raw(p.as_slice(), d.as_slice()))
}

pub(crate) fn classical_fisher_raw(p: &[f64], d: &[f64]) -> ExtReal {
    let mut total = 0.0;
    for (&px, &dx) in p.iter().zip(d) {
        if px <= CLASSICAL_TOL {
            if dx.abs() > CLASSICAL_TOL {
                return ExtReal::Infinite;
            }
            continue;
        }
        total += dx * dx / px;
    }
    ExtReal::Finite(total)
}

/// Outcome of solving for the symmetric logarithmic derivative.
#[derive(Clone, Debug)]
pub enum Sld {
    /// The SLD on the support of ρ (zero on its kernel).
    Operator(HermitianMatrix),
    /// The tangent has weight `escaped` between kernel directions of ρ.
    OutOfSupport { escaped: f64 },
}

/// Symmetric logarithmic derivative `L` with `δ = ½(Lρ + ρL)`.
pub fn sld(rho: &DensityMatrix, delta: &StateTangent) -> Result<Sld> {
    check_dims(rho.dim(), delta.dim())?;
    Ok(sld_raw(&eig_hermitian(rho.mat())?, delta.mat()).0)
}

/// Returns the SLD together with `tr ρL²` (infinite when out of support).
pub(crate) fn sld_raw(rho_eig: &Eigen, delta: &HermitianMatrix) -> (Sld, ExtReal) {
    let v = &rho_eig.vectors;
    let lam = &rho_eig.values;
    let n = lam.len();
    let d = linalg::conjugate_adj(v, delta.as_matrix());
    let mut l = ComplexMatrix::zeros(n, n);
    let mut escaped = 0.0_f64;
    let mut info = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = lam[i] + lam[j];
            if s <= SUPPORT_TOL {
                escaped = escaped.max(d[(i, j)].norm());
            } else {
                l[(i, j)] = d[(i, j)] * (2.0 / s);
                info += 2.0 * d[(i, j)].norm_sqr() / s;
            }
        }
    }
    if escaped > ESCAPE_TOL {
        return (Sld::OutOfSupport { escaped }, ExtReal::Infinite);
    }
    let l = HermitianMatrix::symmetrize(linalg::conjugate(v, &l));
    (Sld::Operator(l), ExtReal::Finite(info))
}

/// SLD Fisher information `tr ρ L²`.
pub fn sld_fisher(rho: &DensityMatrix, delta: &StateTangent) -> Result<ExtReal> {
    check_dims(rho.dim(), delta.dim())?;
    Ok(sld_raw(&eig_hermitian(rho.mat())?, delta.mat()).1)
}

/// Right logarithmic derivative data: `ρ⁺δ` and `tr δρ⁺δ`.
pub(crate) fn rld_raw(rho_eig: &Eigen, delta: &HermitianMatrix) -> (Option<ComplexMatrix>, ExtReal) {
    let v = &rho_eig.vectors;
    let lam = &rho_eig.values;
    let n = lam.len();
    let d = linalg::conjugate_adj(v, delta.as_matrix());
    let mut escaped_sq = 0.0;
    let mut info = 0.0;
    let mut x = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let row_sq: f64 = (0..n).map(|j| d[(i, j)].norm_sqr()).sum();
        if lam[i] <= SUPPORT_TOL {
            escaped_sq += row_sq;
        } else {
            info += row_sq / lam[i];
            for j in 0..n {
                x[(i, j)] = d[(i, j)] / lam[i];
            }
        }
    }
    if escaped_sq.sqrt() > ESCAPE_TOL {
        return (None, ExtReal::Infinite);
    }
    (Some(linalg::conjugate(v, &x)), ExtReal::Finite(info))
}

/// RLD Fisher information `tr δρ⁻¹δ` (pseudo-inverse on the support).
pub fn rld_fisher(rho: &DensityMatrix, delta: &StateTangent) -> Result<ExtReal> {
    check_dims(rho.dim(), delta.dim())?;
    Ok(rld_raw(&eig_hermitian(rho.mat())?, delta.mat()).1)
}

/// Positive operator-valued measure given by its elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let dim = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?
            .dim();
        let mut sum = HermitianMatrix::zeros(dim);
        for (k, e) in elements.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::InvalidPovm(format!("element {k} has dimension {}", e.dim())));
            }
            let m = crate::linalg::min_eigenvalue(e)?;
            if m < -POVM_TOL {
                return Err(Error::InvalidPovm(format!("element {k} has eigenvalue {m:e}")));
            }
            sum = sum.add(e);
        }
        let resid = crate::linalg::max_abs_diff(sum.as_matrix(), HermitianMatrix::identity(dim).as_matrix());
        if resid > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {resid:e}"
            )));
        }
        Ok(Self { elements })
    }

    /// Rank-one projective measurement onto the columns of a unitary or the
    /// given orthonormal vectors.
    pub fn projective(vectors: &[crate::linalg::ComplexVector]) -> Result<Self> {
        Self::new(vectors.iter().map(HermitianMatrix::projector).collect())
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            elements: (0..dim)
                .map(|i| HermitianMatrix::projector(&crate::linalg::basis_vector(dim, i)))
                .collect(),
        }
    }

    /// The trivial one-outcome measurement `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self {
            elements: vec![HermitianMatrix::identity(dim)],
        }
    }

    /// `{M_x ⊗ I_anc}`.
    pub fn extend_with_identity(&self, ancilla_dim: usize) -> Self {
        let id = ComplexMatrix::identity(ancilla_dim, ancilla_dim);
        Self {
            elements: self
                .elements
                .iter()
                .map(|e| HermitianMatrix::symmetrize(crate::linalg::kron(e.as_matrix(), &id)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `tr(A M_x)` for each outcome.
    pub(crate) fn statistics(&self, a: &HermitianMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|m| trace_product(a.as_matrix(), m.as_matrix()).re)
            .collect()
    }
}

/// Classical Fisher information of the measured statistics
/// `p(x) = tr ρM_x`, `d(x) = tr δM_x`.
pub fn measured_fisher(rho: &DensityMatrix, delta: &StateTangent, povm: &Povm) -> Result<ExtReal> {
    check_dims(rho.dim(), delta.dim())?;
    check_dims(rho.dim(), povm.dim())?;
    let p = ProbVector::new(povm.statistics(rho.mat()))?;
    let d = SignedVector::new(povm.statistics(delta.mat()))?;
    classical_fisher(&p, &d)
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("dimension {a} vs {b}")));
    }
    Ok(())
}
