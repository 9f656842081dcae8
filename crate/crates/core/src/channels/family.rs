//! One-parameter channel families `θ ↦ Φ_θ` with analytic derivatives.

use num_complex::Complex64;
use serde_json::Value;

use super::{Channel, ChannelTangent};
use crate::error::{Error, Result};
use crate::linalg::{
    c, kron, min_eigenvalue, pauli_i, pauli_x, pauli_y, pauli_z, ComplexMatrix, ComplexVector, HermitianMatrix,
};
use crate::states::{DensityMatrix, StateTangent};

/// Central finite-difference step.
pub const FD_STEP: f64 = 1e-5;

const RANGE_TOL: f64 = 1e-12;
const RANGE_CAP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// `ρ ↦ (1-Σp)ρ + Σ_k p_k(θ) σ_k ρ σ_k` with `p(θ) = offset + θ·slope`.
    Pauli { offset: [f64; 3], slope: [f64; 3] },
    /// `ρ ↦ e^{-iθZ/2} ρ e^{iθZ/2}`.
    PhaseUnitary,
    /// `(1-r)·phase_unitary + r·(I/2)tr`.
    DepolarizedPhase { r: f64 },
    /// `ρ ↦ tr(ρ)·(σ + θ·δ)`.
    ConstantState {
        d_in: usize,
        sigma: HermitianMatrix,
        delta: HermitianMatrix,
    },
    /// Dephase in the computational basis, then apply the row-stochastic
    /// transition matrix `T(θ) = T₀ + θ·T₁`.
    ClassicalFinite { t0: Vec<Vec<f64>>, t1: Vec<Vec<f64>> },
}

/// A named catalog family.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFamily {
    name: String,
    kind: FamilyKind,
}

/// Row-stochastic matrix `T[x][y] = p(y|x)`, or its derivative.
pub type Transition = Vec<Vec<f64>>;

pub const FAMILY_NAMES: [&str; 6] = [
    "pauli",
    "bitflip",
    "phase_unitary",
    "depolarized_phase",
    "constant_state",
    "classical_finite",
];

fn pauli_vec(p: &ComplexMatrix) -> ComplexVector {
    // |σ⟩⟩ = Σ_i |i⟩ ⊗ σ|i⟩
    ComplexVector::from_fn(4, |idx, _| p[(idx % 2, idx / 2)])
}

fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexMatrix {
    a * b.adjoint()
}

fn phase_unitary_matrix(theta: f64) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(2, 2);
    u[(0, 0)] = Complex64::from_polar(1.0, -theta / 2.0);
    u[(1, 1)] = Complex64::from_polar(1.0, theta / 2.0);
    u
}

fn get_f64(params: &Value, field: &str, default: f64) -> Result<f64> {
    match params.get(field) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::param(field, "expected a finite number")),
    }
}

fn get_triple(params: &Value, field: &str, default: [f64; 3]) -> Result<[f64; 3]> {
    match params.get(field) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => {
            let arr = v
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| Error::param(field, "expected an array of three numbers"))?;
            let mut out = [0.0; 3];
            for (o, x) in out.iter_mut().zip(arr) {
                *o = x
                    .as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::param(field, "expected finite numbers"))?;
            }
            Ok(out)
        }
    }
}

fn get_rows(params: &Value, field: &str) -> Result<Option<Vec<Vec<f64>>>> {
    match params.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value::<Vec<Vec<f64>>>(v.clone())
            .map(Some)
            .map_err(|e| Error::param(field, format!("expected a matrix of numbers ({e})"))),
    }
}

fn get_square(params: &Value, field: &str) -> Result<Option<HermitianMatrix>> {
    match params.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let entries: super::ChoiEntries = serde_json::from_value(v.clone())
                .map_err(|e| Error::param(field, format!("expected [[re, im], ...] entries ({e})")))?;
            let m = entries
                .to_square()
                .ok_or_else(|| Error::param(field, "entry count is not a perfect square"))?;
            HermitianMatrix::new(m)
                .map(Some)
                .map_err(|e| Error::param(field, e.to_string()))
        }
    }
}

fn reject_unknown(params: &Value, allowed: &[&str]) -> Result<()> {
    match params {
        Value::Null => Ok(()),
        Value::Object(map) => {
            for key in map.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::param(key.as_str(), "unknown parameter"));
                }
            }
            Ok(())
        }
        _ => Err(Error::param("params", "expected an object")),
    }
}

impl ChannelFamily {
    pub fn new(name: impl Into<String>, kind: FamilyKind) -> Result<Self> {
        let fam = Self {
            name: name.into(),
            kind,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn bitflip() -> Self {
        Self {
            name: "bitflip".into(),
            kind: FamilyKind::Pauli {
                offset: [0.0; 3],
                slope: [1.0, 0.0, 0.0],
            },
        }
    }

    pub fn phase_unitary() -> Self {
        Self {
            name: "phase_unitary".into(),
            kind: FamilyKind::PhaseUnitary,
        }
    }

    pub fn depolarized_phase(r: f64) -> Result<Self> {
        Self::new("depolarized_phase", FamilyKind::DepolarizedPhase { r })
    }

    pub fn pauli(offset: [f64; 3], slope: [f64; 3]) -> Result<Self> {
        Self::new("pauli", FamilyKind::Pauli { offset, slope })
    }

    /// `θ ↦ (σ + θδ)` as a replacement channel on `d_in` inputs.
    pub fn constant_state(d_in: usize, sigma: &DensityMatrix, delta: &StateTangent) -> Result<Self> {
        Self::new(
            "constant_state",
            FamilyKind::ConstantState {
                d_in,
                sigma: sigma.mat().clone(),
                delta: delta.mat().clone(),
            },
        )
    }

    pub fn classical_finite(t0: Vec<Vec<f64>>, t1: Vec<Vec<f64>>) -> Result<Self> {
        Self::new("classical_finite", FamilyKind::ClassicalFinite { t0, t1 })
    }

    /// Binary symmetric channel with flip probability `θ`.
    pub fn binary_symmetric() -> Self {
        Self {
            name: "classical_finite".into(),
            kind: FamilyKind::ClassicalFinite {
                t0: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                t1: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
            },
        }
    }

    /// Builds a catalog entry from its name and a JSON parameter object.
    pub fn from_catalog(name: &str, params: &Value) -> Result<Self> {
        match name {
            "pauli" => {
                reject_unknown(params, &["offset", "slope"])?;
                let offset = get_triple(params, "offset", [0.0; 3])?;
                let third = 1.0 / 3.0;
                let slope = get_triple(params, "slope", [third; 3])?;
                Self::pauli(offset, slope)
            }
            "bitflip" => {
                reject_unknown(params, &[])?;
                Ok(Self::bitflip())
            }
            "phase_unitary" => {
                reject_unknown(params, &[])?;
                Ok(Self::phase_unitary())
            }
            "depolarized_phase" => {
                reject_unknown(params, &["r"])?;
                Self::depolarized_phase(get_f64(params, "r", 0.1)?)
            }
            "constant_state" => {
                reject_unknown(params, &["rho", "delta", "d_in"])?;
                let sigma =
                    get_square(params, "rho")?.unwrap_or_else(|| HermitianMatrix::from_real_diagonal(&[0.9, 0.1]));
                let delta = match get_square(params, "delta")? {
                    Some(d) => d,
                    None => HermitianMatrix::new(pauli_x()).expect("Pauli X is Hermitian"),
                };
                let d_in = match params.get("d_in") {
                    None | Some(Value::Null) => 2,
                    Some(v) => v
                        .as_u64()
                        .filter(|&d| d >= 1)
                        .ok_or_else(|| Error::param("d_in", "expected a positive integer"))?
                        as usize,
                };
                Self::new("constant_state", FamilyKind::ConstantState { d_in, sigma, delta })
            }
            "classical_finite" => {
                reject_unknown(params, &["t0", "t1"])?;
                let bsc = Self::binary_symmetric();
                let FamilyKind::ClassicalFinite { t0: d0, t1: d1 } = bsc.kind else {
                    unreachable!()
                };
                let t0 = get_rows(params, "t0")?.unwrap_or(d0);
                let t1 = get_rows(params, "t1")?.unwrap_or(d1);
                Self::classical_finite(t0, t1)
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            FamilyKind::Pauli { offset, slope } => {
                if offset.iter().chain(slope).any(|x| !x.is_finite()) {
                    return Err(Error::param("offset", "non-finite Pauli weights"));
                }
                let (lo, hi) = self.valid_range();
                if lo > hi {
                    return Err(Error::param("offset", "no θ gives valid Pauli probabilities"));
                }
            }
            FamilyKind::PhaseUnitary => {}
            FamilyKind::DepolarizedPhase { r } => {
                if !(0.0..=1.0).contains(r) {
                    return Err(Error::param("r", format!("{r} is not in [0, 1]")));
                }
            }
            FamilyKind::ConstantState { d_in, sigma, delta } => {
                if *d_in == 0 {
                    return Err(Error::param("d_in", "must be positive"));
                }
                if sigma.dim() != delta.dim() {
                    return Err(Error::param("delta", "dimension differs from rho"));
                }
                DensityMatrix::new(sigma.clone()).map_err(|e| Error::param("rho", e.to_string()))?;
                StateTangent::new(delta.clone()).map_err(|e| Error::param("delta", e.to_string()))?;
            }
            FamilyKind::ClassicalFinite { t0, t1 } => {
                let k = t0.len();
                if k == 0 || t1.len() != k {
                    return Err(Error::param("t1", "shape differs from t0"));
                }
                let m = t0[0].len();
                for (x, (r0, r1)) in t0.iter().zip(t1).enumerate() {
                    if r0.len() != m || r1.len() != m || m == 0 {
                        return Err(Error::param("t0", "rows of unequal length"));
                    }
                    let s0: f64 = r0.iter().sum();
                    let s1: f64 = r1.iter().sum();
                    if (s0 - 1.0).abs() > 1e-12 || r0.iter().any(|&v| v < 0.0) {
                        return Err(Error::param("t0", format!("row {x} is not a probability vector")));
                    }
                    if s1.abs() > 1e-12 {
                        return Err(Error::param("t1", format!("row {x} does not sum to zero")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn d_in(&self) -> usize {
        match &self.kind {
            FamilyKind::ConstantState { d_in, .. } => *d_in,
            FamilyKind::ClassicalFinite { t0, .. } => t0.len(),
            _ => 2,
        }
    }

    pub fn d_out(&self) -> usize {
        match &self.kind {
            FamilyKind::ConstantState { sigma, .. } => sigma.dim(),
            FamilyKind::ClassicalFinite { t0, .. } => t0[0].len(),
            _ => 2,
        }
    }

    /// Closed interval of θ for which `Φ_θ` is CPTP.
    pub fn valid_range(&self) -> (f64, f64) {
        match &self.kind {
            FamilyKind::PhaseUnitary | FamilyKind::DepolarizedPhase { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            FamilyKind::Pauli { offset, slope } => {
                // constraints a + bθ ≥ 0 for p_x, p_y, p_z and 1 - Σp
                let mut cons: Vec<(f64, f64)> = offset.iter().copied().zip(slope.iter().copied()).collect();
                cons.push((1.0 - offset.iter().sum::<f64>(), -slope.iter().sum::<f64>()));
                linear_range(&cons)
            }
            FamilyKind::ClassicalFinite { t0, t1 } => {
                let cons: Vec<(f64, f64)> = t0.iter().flatten().copied().zip(t1.iter().flatten().copied()).collect();
                linear_range(&cons)
            }
            FamilyKind::ConstantState { sigma, delta, .. } => {
                let feasible = |t: f64| min_eigenvalue(&sigma.add_scaled(t, delta)).is_ok_and(|m| m >= -RANGE_TOL);
                let edge = |dir: f64| {
                    let mut hi = 1.0;
                    while hi < RANGE_CAP && feasible(dir * hi) {
                        hi *= 2.0;
                    }
                    if hi >= RANGE_CAP {
                        return dir * f64::INFINITY;
                    }
                    let mut lo = 0.0;
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if feasible(dir * mid) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    dir * lo
                };
                (edge(-1.0), edge(1.0))
            }
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = self.valid_range();
        theta.is_finite() && theta >= lo - RANGE_TOL && theta <= hi + RANGE_TOL
    }

    /// Choi matrix at θ without range validation.
    pub(crate) fn choi_raw(&self, theta: f64) -> HermitianMatrix {
        let m = match &self.kind {
            FamilyKind::Pauli { offset, slope } => {
                let p: Vec<f64> = (0..3).map(|k| offset[k] + theta * slope[k]).collect();
                let weights = [1.0 - p.iter().sum::<f64>(), p[0], p[1], p[2]];
                pauli_mixture(&weights)
            }
            FamilyKind::PhaseUnitary => {
                let v = pauli_vec(&phase_unitary_matrix(theta));
                outer(&v, &v)
            }
            FamilyKind::DepolarizedPhase { r } => {
                let v = pauli_vec(&phase_unitary_matrix(theta));
                outer(&v, &v).scale(1.0 - r) + ComplexMatrix::identity(4, 4).scale(r / 2.0)
            }
            FamilyKind::ConstantState { d_in, sigma, delta } => kron(
                &ComplexMatrix::identity(*d_in, *d_in),
                sigma.add_scaled(theta, delta).as_matrix(),
            ),
            FamilyKind::ClassicalFinite { t0, t1 } => {
                classical_choi(t0.len(), t0[0].len(), |x, y| t0[x][y] + theta * t1[x][y])
            }
        };
        HermitianMatrix::symmetrize(m)
    }

    fn tangent_raw(&self, theta: f64) -> HermitianMatrix {
        let m = match &self.kind {
            FamilyKind::Pauli { slope, .. } => {
                let weights = [-slope.iter().sum::<f64>(), slope[0], slope[1], slope[2]];
                pauli_mixture(&weights)
            }
            FamilyKind::PhaseUnitary => unitary_tangent(theta),
            FamilyKind::DepolarizedPhase { r } => unitary_tangent(theta).scale(1.0 - r),
            FamilyKind::ConstantState { d_in, delta, .. } => {
                kron(&ComplexMatrix::identity(*d_in, *d_in), delta.as_matrix())
            }
            FamilyKind::ClassicalFinite { t1, .. } => classical_choi(t1.len(), t1[0].len(), |x, y| t1[x][y]),
        };
        HermitianMatrix::symmetrize(m)
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if !self.contains(theta) {
            let (lo, hi) = self.valid_range();
            return Err(Error::param(
                "theta",
                format!("{theta} outside the valid range [{lo}, {hi}] of `{}`", self.name),
            ));
        }
        Ok(())
    }

    pub fn channel(&self, theta: f64) -> Result<Channel> {
        self.check_theta(theta)?;
        Channel::new(self.choi_raw(theta), self.d_in(), self.d_out())
    }

    /// Analytic derivative `dΦ_θ/dθ`.
    pub fn tangent(&self, theta: f64) -> Result<ChannelTangent> {
        self.check_theta(theta)?;
        ChannelTangent::new(self.tangent_raw(theta), self.d_in(), self.d_out())
    }

    /// Central difference `(Φ_{θ+h} − Φ_{θ−h}) / 2h` on the Choi matrices.
    pub fn finite_difference(&self, theta: f64, h: f64) -> Result<ChannelTangent> {
        if !(h > 0.0) {
            return Err(Error::param("h", "step must be positive"));
        }
        let plus = self.choi_raw(theta + h);
        let minus = self.choi_raw(theta - h);
        ChannelTangent::new(plus.sub(&minus).scale(0.5 / h), self.d_in(), self.d_out())
    }

    /// `(Φ_θ, dΦ_θ/dθ)`.
    pub fn point(&self, theta: f64) -> Result<(Channel, ChannelTangent)> {
        Ok((self.channel(theta)?, self.tangent(theta)?))
    }

    /// Transition matrix and its derivative for classical families.
    pub fn transition(&self, theta: f64) -> Option<(Transition, Transition)> {
        match &self.kind {
            FamilyKind::ClassicalFinite { t0, t1 } => {
                let t = t0
                    .iter()
                    .zip(t1)
                    .map(|(r0, r1)| r0.iter().zip(r1).map(|(a, b)| a + theta * b).collect())
                    .collect();
                Some((t, t1.clone()))
            }
            _ => None,
        }
    }

    /// Catalog parameters in the JSON form accepted by
    /// [`ChannelFamily::from_catalog`].
    pub fn params_json(&self) -> Value {
        match &self.kind {
            FamilyKind::Pauli { offset, slope } if self.name == "pauli" => {
                serde_json::json!({ "offset": offset, "slope": slope })
            }
            FamilyKind::Pauli { .. } | FamilyKind::PhaseUnitary => serde_json::json!({}),
            FamilyKind::DepolarizedPhase { r } => serde_json::json!({ "r": r }),
            FamilyKind::ConstantState { d_in, sigma, delta } => serde_json::json!({
                "d_in": d_in,
                "rho": super::ChoiEntries::from_matrix(sigma.as_matrix()),
                "delta": super::ChoiEntries::from_matrix(delta.as_matrix()),
            }),
            FamilyKind::ClassicalFinite { t0, t1 } => serde_json::json!({ "t0": t0, "t1": t1 }),
        }
    }
}

fn linear_range(cons: &[(f64, f64)]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &(a, b) in cons {
        if b > 0.0 {
            lo = lo.max(-a / b);
        } else if b < 0.0 {
            hi = hi.min(-a / b);
        } else if a < -RANGE_TOL {
            return (1.0, 0.0);
        }
    }
    (lo, hi)
}

fn pauli_mixture(weights: &[f64; 4]) -> ComplexMatrix {
    let paulis = [pauli_i(), pauli_x(), pauli_y(), pauli_z()];
    let mut m = ComplexMatrix::zeros(4, 4);
    for (w, p) in weights.iter().zip(&paulis) {
        if *w != 0.0 {
            let v = pauli_vec(p);
            m += outer(&v, &v).scale(*w);
        }
    }
    m
}

fn unitary_tangent(theta: f64) -> ComplexMatrix {
    let u = phase_unitary_matrix(theta);
    let du = (pauli_z() * &u) * c(0.0, -0.5);
    let v = pauli_vec(&u);
    let dv = pauli_vec(&du);
    outer(&dv, &v) + outer(&v, &dv)
}

/// Diagonal Choi `Σ_{xy} w(x,y) |x⟩⟨x| ⊗ |y⟩⟨y|` of a `k`-input,
/// `m`-output classical map.
fn classical_choi(k: usize, m: usize, w: impl Fn(usize, usize) -> f64) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(k * m, k * m);
    for x in 0..k {
        for y in 0..m {
            out[(x * m + y, x * m + y)] = c(w(x, y), 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{cp_check, ChoiMap};
    use crate::linalg::{eig_hermitian, max_abs_diff};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> Vec<ChannelFamily> {
        vec![
            ChannelFamily::bitflip(),
            ChannelFamily::pauli([0.1, 0.2, 0.05], [0.3, -0.2, 0.1]).unwrap(),
            ChannelFamily::phase_unitary(),
            ChannelFamily::depolarized_phase(0.1).unwrap(),
            ChannelFamily::from_catalog("constant_state", &Value::Null).unwrap(),
            ChannelFamily::binary_symmetric(),
        ]
    }

    fn sample_theta(fam: &ChannelFamily, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = fam.valid_range();
        let lo = if lo.is_finite() { lo } else { -3.0 };
        let hi = if hi.is_finite() { hi } else { 3.0 };
        let margin = 2.0 * FD_STEP;
        rng.gen_range(lo + margin..hi - margin)
    }

    #[test]
    fn bitflip_at_zero_is_identity() {
        let phi = ChannelFamily::bitflip().channel(0.0).unwrap();
        assert!(max_abs_diff(phi.choi().as_matrix(), Channel::identity(2).choi().as_matrix()) < 1e-15);
    }

    #[test]
    fn symmetric_pauli_is_unital() {
        let fam = ChannelFamily::pauli([0.25; 3], [0.1, -0.1, 0.0]).unwrap();
        let phi = fam.channel(0.0).unwrap();
        let out = phi.apply(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(max_abs_diff(out.mat().as_matrix(), &ComplexMatrix::identity(2, 2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn depolarized_phase_has_full_choi_rank() {
        let phi = ChannelFamily::depolarized_phase(0.1).unwrap().channel(0.3).unwrap();
        assert!(phi.cp_report().unwrap().is_cptp);
        let e = eig_hermitian(phi.choi()).unwrap();
        let rank = e.values.iter().filter(|&&l| l > 1e-10).count();
        assert_eq!(rank, 4);
        let u = ChannelFamily::phase_unitary().channel(0.3).unwrap();
        let e = eig_hermitian(u.choi()).unwrap();
        assert_eq!(e.values.iter().filter(|&&l| l > 1e-10).count(), 1);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(
            ChannelFamily::from_catalog("bogus", &Value::Null),
            Err(Error::UnknownFamily(_))
        ));
        let bad = serde_json::json!({ "offset": [0.5, 0.4, 0.3], "slope": [0.0, 0.0, 0.0] });
        assert!(matches!(
            ChannelFamily::from_catalog("pauli", &bad),
            Err(Error::InvalidParam { .. })
        ));
        let bad = serde_json::json!({ "r": 1.5 });
        let err = ChannelFamily::from_catalog("depolarized_phase", &bad).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref field, .. } if field == "r"));
        let bad = serde_json::json!({ "q": 1 });
        let err = ChannelFamily::from_catalog("bitflip", &bad).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref field, .. } if field == "q"));
        assert!(ChannelFamily::bitflip().channel(1.5).is_err());
        assert!(ChannelFamily::bitflip().channel(-0.1).is_err());
    }

    #[test]
    fn valid_ranges() {
        assert_eq!(ChannelFamily::bitflip().valid_range(), (0.0, 1.0));
        assert_eq!(ChannelFamily::binary_symmetric().valid_range(), (0.0, 1.0));
        let cs = ChannelFamily::from_catalog("constant_state", &Value::Null).unwrap();
        // diag(0.9,0.1) + θX is PSD iff 0.09 ≥ θ²
        let (lo, hi) = cs.valid_range();
        assert!((lo + 0.3).abs() < 1e-9 && (hi - 0.3).abs() < 1e-9, "{lo} {hi}");
    }

    #[test]
    fn catalog_channels_are_cptp_at_random_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for fam in catalog() {
            for _ in 0..100 {
                let theta = sample_theta(&fam, &mut rng);
                let phi = fam.channel(theta).unwrap();
                let rep = cp_check(phi.choi(), phi.d_in(), phi.d_out()).unwrap();
                assert!(rep.is_cptp, "{} at {theta}: {rep:?}", fam.name());
            }
        }
    }

    #[test]
    fn analytic_derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for fam in catalog() {
            for _ in 0..20 {
                let theta = sample_theta(&fam, &mut rng);
                let exact = fam.tangent(theta).unwrap();
                let fd = fam.finite_difference(theta, FD_STEP).unwrap();
                let scale = exact.choi().frobenius_norm().max(1e-300);
                let rel = (exact.choi().as_matrix() - fd.choi().as_matrix()).norm() / scale;
                assert!(rel <= 1e-6, "{} at {theta}: {rel:e}", fam.name());
                assert!(rel <= 10.0 * FD_STEP * FD_STEP + 1e-9, "{}: {rel:e}", fam.name());
                assert!(exact.tp_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn params_roundtrip_through_catalog() {
        for fam in catalog() {
            let back = ChannelFamily::from_catalog(fam.name(), &fam.params_json()).unwrap();
            assert_eq!(back, fam);
        }
    }
}
