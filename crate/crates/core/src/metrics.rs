//! Channel metrics.
//!
//! - [`g_min`]: the smallest monotone metric, the supremum over entangled
//!   probes of the output SLD Fisher information, found by a seesaw on the
//!   variational form `J^S(ρ,δ) = max_L [2 tr(δL) − tr(ρL²)]`. For a fixed
//!   probe the inner maximum is the SLD; for a fixed `L` the objective is the
//!   expectation of `2(Δ⊗I)*(L) − (Φ⊗I)*(L²)`, maximised by its top
//!   eigenvector. Both half-steps are exact, so the objective never drops.
//! - [`g_r_output`]: the same supremum for the RLD Fisher information, with
//!   the variational form `J^R(ρ,δ) = max_X [tr(δ(X+X†)) − tr(ρXX†)]`.
//! - [`mixture_bound`], [`cp_ball_radius`], [`g_max_upper`]: upper bounds on
//!   the largest monotone metric from classical tangent simulations.
//! - [`parallel_scaling`] and [`classical_channel_min`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{n_copy, Channel, ChannelFamily, ChannelTangent, ChoiMap, FamilyKind, Povm, Realigned};
use crate::error::{Error, Result};
use crate::linalg::{self, eig_hermitian, min_eigenvalue, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::states::{classical_fisher, classical_fisher_raw, rld_raw, sld_raw, ExtReal, ProbVector, SignedVector, Sld};

/// Default restart count, and the count used for three or more copies.
pub const DEFAULT_RESTARTS: usize = 16;
pub const MANY_COPY_RESTARTS: usize = 32;

/// Reconstruction tolerance for tangent simulations (Frobenius norm).
pub const SIMULATION_TOL: f64 = 1e-9;
/// Eigenvalue floor for PSD feasibility in the CP-ball bisection.
pub const CP_FEASIBILITY_TOL: f64 = 1e-10;
/// Absolute bracket width at which the CP-ball bisection stops.
pub const CP_BISECTION_TOL: f64 = 1e-10;
/// Radius reported for a vanishing tangent.
pub const CP_RADIUS_CAP: f64 = 1e6;

#[derive(Clone, Debug, Serialize)]
pub struct MetricOptions {
    /// Stop when the relative improvement of one seesaw sweep drops below
    /// this.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Worker cap; `None` uses the global rayon pool.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            restarts: DEFAULT_RESTARTS,
            seed: 0x5eed,
            threads: None,
        }
    }
}

/// Runs `f` inside a pool capped at `threads` workers.
pub(crate) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Derived per-task seed; independent of worker count.
pub(crate) fn task_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Pure probe state on `H_in ⊗ K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState {
    vector: ComplexVector,
    d_in: usize,
    d_anc: usize,
}

impl ProbeState {
    pub fn new(vector: ComplexVector, d_in: usize, d_anc: usize) -> Result<Self> {
        if vector.len() != d_in * d_anc {
            return Err(Error::DimensionMismatch(format!(
                "probe of length {} on {d_in}x{d_anc}",
                vector.len()
            )));
        }
        let n = vector.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("probe norm {n}")));
        }
        Ok(Self { vector, d_in, d_anc })
    }

    /// `Σ_i |i⟩|i⟩/√d`.
    pub fn max_entangled(d: usize) -> Self {
        let v = linalg::max_entangled(d).unscale((d as f64).sqrt());
        Self {
            vector: v,
            d_in: d,
            d_anc: d,
        }
    }

    /// `|Φ⁺⟩` on two qubits.
    pub fn bell() -> Self {
        Self::max_entangled(2)
    }

    /// Product probe `|i⟩ ⊗ |0⟩`.
    pub fn basis(d_in: usize, i: usize, d_anc: usize) -> Self {
        let v = linalg::kron_vec(&linalg::basis_vector(d_in, i), &linalg::basis_vector(d_anc, 0));
        Self { vector: v, d_in, d_anc }
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.vector
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_anc(&self) -> usize {
        self.d_anc
    }
}

impl Serialize for ProbeState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ProbeState", 3)?;
        st.serialize_field("d_in", &self.d_in)?;
        st.serialize_field("d_anc", &self.d_anc)?;
        let amps: Vec<[f64; 2]> = self.vector.iter().map(|z| [z.re, z.im]).collect();
        st.serialize_field("amplitudes", &amps)?;
        st.end()
    }
}

/// Classical tangent simulation `Φ = Σ_y q(y)Λ_y`, `Δ = Σ_y dq(y)Λ_y`.
#[derive(Clone, Debug)]
pub struct MixtureSimulation {
    pub q: ProbVector,
    pub dq: SignedVector,
    pub branches: Vec<Channel>,
}

impl Serialize for MixtureSimulation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MixtureSimulation", 3)?;
        st.serialize_field("q", &self.q)?;
        st.serialize_field("dq", &self.dq)?;
        st.serialize_field("branches", &self.branches.len())?;
        st.end()
    }
}

impl MixtureSimulation {
    pub fn new(q: ProbVector, dq: SignedVector, branches: Vec<Channel>) -> Result<Self> {
        if q.len() != dq.len() || q.len() != branches.len() {
            return Err(Error::InvalidSimulation(format!(
                "{} weights, {} tangent weights, {} branches",
                q.len(),
                dq.len(),
                branches.len()
            )));
        }
        let (d_in, d_out) = (branches[0].d_in(), branches[0].d_out());
        if branches.iter().any(|b| b.d_in() != d_in || b.d_out() != d_out) {
            return Err(Error::InvalidSimulation("branches of differing dimensions".into()));
        }
        Ok(Self { q, dq, branches })
    }

    fn combine(&self, weights: &[f64]) -> ComplexMatrix {
        let dim = self.branches[0].choi().dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (w, b) in weights.iter().zip(&self.branches) {
            m += b.choi().as_matrix().scale(*w);
        }
        m
    }

    /// Frobenius residuals of the channel and tangent reconstructions.
    pub fn residuals(&self, phi: &Channel, delta: &ChannelTangent) -> Result<(f64, f64)> {
        if (phi.d_in(), phi.d_out()) != (self.branches[0].d_in(), self.branches[0].d_out()) {
            return Err(Error::InvalidSimulation(
                "dimensions differ from the simulated channel".into(),
            ));
        }
        let rc = (self.combine(self.q.as_slice()) - phi.choi().as_matrix()).norm();
        let rt = (self.combine(self.dq.as_slice()) - delta.choi().as_matrix()).norm();
        Ok((rc, rt))
    }

    /// Random application of the four Pauli conjugations.
    pub fn pauli(family: &ChannelFamily, theta: f64) -> Result<Self> {
        let FamilyKind::Pauli { offset, slope } = family.kind() else {
            return Err(Error::InvalidSimulation(format!(
                "`{}` is not a Pauli family",
                family.name()
            )));
        };
        let p: Vec<f64> = (0..3).map(|k| offset[k] + theta * slope[k]).collect();
        let q = vec![1.0 - p.iter().sum::<f64>(), p[0], p[1], p[2]];
        let dq = vec![-slope.iter().sum::<f64>(), slope[0], slope[1], slope[2]];
        let branches = [
            linalg::pauli_i(),
            linalg::pauli_x(),
            linalg::pauli_y(),
            linalg::pauli_z(),
        ]
        .iter()
        .map(Channel::unitary)
        .collect::<Result<Vec<_>>>()?;
        Self::new(ProbVector::new(q)?, SignedVector::new(dq)?, branches)
    }

    /// Even mixture of `Φ ± εΔ` with `dq = ±1/(2ε)`.
    pub fn two_point(phi: &Channel, delta: &ChannelTangent, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidSimulation(format!("two-point radius {eps}")));
        }
        let plus = Channel::new(phi.choi().add_scaled(eps, delta.choi()), phi.d_in(), phi.d_out())?;
        let minus = Channel::new(phi.choi().add_scaled(-eps, delta.choi()), phi.d_in(), phi.d_out())?;
        let w = 0.5 / eps;
        Self::new(
            ProbVector::new(vec![0.5, 0.5])?,
            SignedVector::new(vec![w, -w])?,
            vec![plus, minus],
        )
    }

    /// Replacement channels with outputs `σ ± εδ`, ε the largest radius
    /// keeping both PSD.
    pub fn constant_state(family: &ChannelFamily, theta: f64) -> Result<Self> {
        if !matches!(family.kind(), FamilyKind::ConstantState { .. }) {
            return Err(Error::InvalidSimulation(format!(
                "`{}` is not a constant-state family",
                family.name()
            )));
        }
        let (phi, delta) = family.point(theta)?;
        let ball = cp_ball_radius(&phi, &delta)?;
        Self::two_point(&phi, &delta, ball.radius)
    }

    /// The catalog's own simulation for `family`, when it has one.
    pub fn for_family(family: &ChannelFamily, theta: f64) -> Option<Result<Self>> {
        match family.kind() {
            FamilyKind::Pauli { .. } => Some(Self::pauli(family, theta)),
            FamilyKind::ConstantState { .. } => Some(Self::constant_state(family, theta)),
            _ => None,
        }
    }
}

/// `J_q(dq)` after checking that the simulation reproduces `(Φ, Δ)`.
pub fn mixture_bound(sim: &MixtureSimulation, phi: &Channel, delta: &ChannelTangent) -> Result<ExtReal> {
    let (rc, rt) = sim.residuals(phi, delta)?;
    if rc > SIMULATION_TOL || rt > SIMULATION_TOL {
        return Err(Error::InvalidSimulation(format!(
            "reconstruction residuals {rc:e} (channel), {rt:e} (tangent)"
        )));
    }
    classical_fisher(&sim.q, &sim.dq)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceReason {
    /// The output tangent leaves the support of the output state.
    SupportEscape,
    /// No ε > 0 keeps `Φ ± εΔ` completely positive.
    ZeroCpRadius,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "data")]
pub enum Witness {
    Probe(ProbeState),
    Mixture(MixtureSimulation),
    Radius(f64),
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub value: ExtReal,
    pub witness: Witness,
    pub iterations: usize,
    /// The winning restart met the tolerance.
    pub converged: bool,
    pub restarts_used: usize,
    pub restarts_converged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceReason>,
    /// Objective after each sweep of the winning restart.
    #[serde(skip)]
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Information {
    Sld,
    Rld,
}

struct Outcome {
    value: ExtReal,
    probe: ComplexVector,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn top_eigenvector(o: ComplexMatrix) -> Result<ComplexVector> {
    let e = eig_hermitian(&HermitianMatrix::symmetrize(o))?;
    let last = e.values.len() - 1;
    Ok(e.vectors.column(last).into_owned())
}

fn seesaw(
    phi: &Realigned,
    delta: &Realigned,
    d_anc: usize,
    mut psi: ComplexVector,
    info: Information,
    opts: &MetricOptions,
) -> Result<Outcome> {
    let mut history = Vec::new();
    let mut prev: Option<(f64, ComplexVector)> = None;
    let max_iter = opts.max_iter.max(1);
    for iter in 1..=max_iter {
        let rho = HermitianMatrix::symmetrize(phi.apply_to_probe(&psi, d_anc));
        let drho = HermitianMatrix::symmetrize(delta.apply_to_probe(&psi, d_anc));
        let eig = eig_hermitian(&rho)?;
        let (value, operator) = match info {
            Information::Sld => match sld_raw(&eig, &drho) {
                (Sld::Operator(l), ExtReal::Finite(v)) => {
                    let l2 = linalg::mul(l.as_matrix(), l.as_matrix());
                    let o = delta.adjoint_extended(l.as_matrix(), d_anc).scale(2.0) - phi.adjoint_extended(&l2, d_anc);
                    (v, o)
                }
                _ => {
                    return Ok(Outcome {
                        value: ExtReal::Infinite,
                        probe: psi,
                        iterations: iter,
                        converged: true,
                        history,
                    })
                }
            },
            Information::Rld => match rld_raw(&eig, &drho) {
                (Some(x), ExtReal::Finite(v)) => {
                    let xd = x.adjoint();
                    let o =
                        delta.adjoint_extended(&(&x + &xd), d_anc) - phi.adjoint_extended(&linalg::mul(&x, &xd), d_anc);
                    (v, o)
                }
                _ => {
                    return Ok(Outcome {
                        value: ExtReal::Infinite,
                        probe: psi,
                        iterations: iter,
                        converged: true,
                        history,
                    })
                }
            },
        };
        history.push(value);
        if let Some((p, prev_psi)) = prev.take() {
            if value - p <= opts.tol * value.abs().max(f64::MIN_POSITIVE) {
                // a numerical dip keeps the previous iterate as witness
                let (value, psi) = if value >= p { (value, psi) } else { (p, prev_psi) };
                return Ok(Outcome {
                    value: ExtReal::Finite(value),
                    probe: psi,
                    iterations: iter,
                    converged: true,
                    history,
                });
            }
        }
        let next = if iter < max_iter {
            Some(top_eigenvector(operator)?)
        } else {
            None
        };
        match next {
            Some(next) => prev = Some((value, std::mem::replace(&mut psi, next))),
            None => {
                return Ok(Outcome {
                    value: ExtReal::Finite(value),
                    probe: psi,
                    iterations: iter,
                    converged: false,
                    history,
                })
            }
        }
    }
    unreachable!("the loop returns on its last iteration")
}

fn optimize_probe(
    phi: &Channel,
    delta: &ChannelTangent,
    info: Information,
    opts: &MetricOptions,
) -> Result<MetricReport> {
    if (phi.d_in(), phi.d_out()) != (delta.d_in(), delta.d_out()) {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}->{}, tangent {}->{}",
            phi.d_in(),
            phi.d_out(),
            delta.d_in(),
            delta.d_out()
        )));
    }
    let d_in = phi.d_in();
    let d_anc = d_in;
    let phi_r = Realigned::new(phi);
    let delta_r = Realigned::new(delta);
    let restarts = opts.restarts.max(1);
    let outcomes: Vec<Result<Outcome>> = with_threads(opts.threads, || {
        (0..restarts)
            .into_par_iter()
            .map(|k| {
                let init = if k == 0 {
                    ProbeState::max_entangled(d_in).vector
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(task_seed(opts.seed, k));
                    linalg::random::unit_vector(d_in * d_anc, &mut rng)
                };
                seesaw(&phi_r, &delta_r, d_anc, init, info, opts)
            })
            .collect()
    });
    let mut best: Option<Outcome> = None;
    let mut restarts_converged = 0;
    for o in outcomes {
        let o = o?;
        restarts_converged += usize::from(o.converged);
        if best.as_ref().is_none_or(|b| o.value > b.value) {
            best = Some(o);
        }
    }
    let best = best.expect("at least one restart");
    let divergence = (!best.value.is_finite()).then_some(DivergenceReason::SupportEscape);
    Ok(MetricReport {
        value: best.value,
        witness: Witness::Probe(ProbeState {
            vector: best.probe,
            d_in,
            d_anc,
        }),
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: restarts,
        restarts_converged,
        divergence,
        history: best.history,
    })
}

/// Smallest monotone channel metric, estimated from below by seesaw over
/// pure probes on `H_in ⊗ C^{d_in}`.
pub fn g_min(phi: &Channel, delta: &ChannelTangent, opts: &MetricOptions) -> Result<MetricReport> {
    optimize_probe(phi, delta, Information::Sld, opts)
}

/// Supremum over probes of the output RLD Fisher information.
pub fn g_r_output(phi: &Channel, delta: &ChannelTangent, opts: &MetricOptions) -> Result<MetricReport> {
    optimize_probe(phi, delta, Information::Rld, opts)
}

/// Classical Fisher information of a fixed probe and output measurement.
pub fn g_min_measured(phi: &Channel, delta: &ChannelTangent, probe: &ProbeState, povm: &Povm) -> Result<ExtReal> {
    let (p, d) = measured_statistics(phi, delta, probe, povm)?;
    Ok(classical_fisher_raw(&p, &d))
}

/// `p(x) = tr[(Φ⊗I)(ψ)M_x]` and `d(x) = tr[(Δ⊗I)(ψ)M_x]`.
pub(crate) fn measured_statistics(
    phi: &Channel,
    delta: &ChannelTangent,
    probe: &ProbeState,
    povm: &Povm,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if probe.d_in != phi.d_in() || (phi.d_in(), phi.d_out()) != (delta.d_in(), delta.d_out()) {
        return Err(Error::DimensionMismatch(format!(
            "probe input dimension {} for a {}-input channel",
            probe.d_in,
            phi.d_in()
        )));
    }
    if povm.dim() != phi.d_out() * probe.d_anc {
        return Err(Error::DimensionMismatch(format!(
            "POVM on dimension {}, output is {}x{}",
            povm.dim(),
            phi.d_out(),
            probe.d_anc
        )));
    }
    let rho = HermitianMatrix::symmetrize(Realigned::new(phi).apply_to_probe(&probe.vector, probe.d_anc));
    let drho = HermitianMatrix::symmetrize(Realigned::new(delta).apply_to_probe(&probe.vector, probe.d_anc));
    let p = povm.statistics(&rho).into_iter().map(|x| x.max(0.0)).collect();
    Ok((p, povm.statistics(&drho)))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CpBall {
    pub radius: f64,
    /// The tangent vanishes and `radius` is the cap, not a boundary.
    pub capped: bool,
}

fn feasible(phi: &HermitianMatrix, delta: &HermitianMatrix, eps: f64) -> Result<bool> {
    Ok(min_eigenvalue(&phi.add_scaled(eps, delta))? >= -CP_FEASIBILITY_TOL
        && min_eigenvalue(&phi.add_scaled(-eps, delta))? >= -CP_FEASIBILITY_TOL)
}

/// Largest ε with `Choi(Φ) ± ε·Choi(Δ)` both PSD.
pub fn cp_ball_radius(phi: &Channel, delta: &ChannelTangent) -> Result<CpBall> {
    if (phi.d_in(), phi.d_out()) != (delta.d_in(), delta.d_out()) {
        return Err(Error::DimensionMismatch("channel and tangent dimensions differ".into()));
    }
    let c = phi.choi();
    let d = delta.choi();
    let d_eig = eig_hermitian(d)?;
    let op_norm = d_eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if op_norm <= f64::EPSILON {
        return Ok(CpBall {
            radius: CP_RADIUS_CAP,
            capped: true,
        });
    }
    // Tangent weight on the kernel of a singular Choi matrix cannot be
    // compensated at any ε > 0.
    let c_eig = eig_hermitian(c)?;
    let kernel: Vec<usize> = (0..c_eig.values.len())
        .filter(|&k| c_eig.values[k] <= CP_FEASIBILITY_TOL)
        .collect();
    if !kernel.is_empty() {
        let mut escaped = 0.0;
        for &k in &kernel {
            let v = c_eig.vectors.column(k);
            escaped += (d.as_matrix() * v).norm_squared();
        }
        if escaped.sqrt() > crate::states::ESCAPE_TOL {
            return Ok(CpBall {
                radius: 0.0,
                capped: false,
            });
        }
    }
    let mut lo = 0.0;
    let mut hi = 2.0 * phi.d_in() as f64 / op_norm;
    if feasible(c, d, hi)? {
        return Ok(CpBall {
            radius: hi,
            capped: true,
        });
    }
    while hi - lo > CP_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(c, d, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CpBall {
        radius: lo,
        capped: false,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GMaxReport {
    /// Smallest available upper bound.
    pub value: ExtReal,
    pub cp_ball: CpBall,
    /// `ε⁻²` from the CP ball.
    pub cp_bound: ExtReal,
    /// Two-branch simulation bound; agrees with `cp_bound`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_point_bound: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixture_bound: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceReason>,
}

/// Upper bound on the largest monotone metric: `ε⁻²` from the CP ball,
/// checked against the explicit two-branch simulation, and the minimum with
/// any extra simulations supplied.
pub fn g_max_upper(phi: &Channel, delta: &ChannelTangent, extra: &[MixtureSimulation]) -> Result<GMaxReport> {
    let ball = cp_ball_radius(phi, delta)?;
    let (cp_bound, two_point_bound) = if ball.radius > 0.0 {
        let eps_bound = ExtReal::Finite(ball.radius.powi(-2));
        let sim = MixtureSimulation::two_point(phi, delta, ball.radius)?;
        let tp = mixture_bound(&sim, phi, delta)?;
        let (a, b) = (eps_bound.value(), tp.value());
        if (a - b).abs() > 1e-9 * a.max(1.0) {
            return Err(Error::Numerical(format!(
                "two-point simulation bound {b} disagrees with ε⁻² = {a}"
            )));
        }
        (eps_bound, Some(tp))
    } else {
        (ExtReal::Infinite, None)
    };
    let mut value = cp_bound;
    let mut mix: Option<ExtReal> = None;
    for sim in extra {
        let b = mixture_bound(sim, phi, delta)?;
        mix = Some(mix.map_or(b, |m| m.min(b)));
        value = value.min(b);
    }
    let divergence = (!value.is_finite()).then_some(DivergenceReason::ZeroCpRadius);
    Ok(GMaxReport {
        value,
        cp_ball: ball,
        cp_bound,
        two_point_bound,
        mixture_bound: mix,
        divergence,
    })
}

/// [`g_max_upper`] at a family point, including the catalog's own
/// simulation.
pub fn g_max_upper_family(family: &ChannelFamily, theta: f64) -> Result<GMaxReport> {
    let (phi, delta) = family.point(theta)?;
    let extra: Vec<MixtureSimulation> = match MixtureSimulation::for_family(family, theta) {
        Some(Ok(sim)) => vec![sim],
        // a catalog simulation can be unavailable (e.g. zero CP radius)
        Some(Err(Error::InvalidSimulation(_))) | None => Vec::new(),
        Some(Err(e)) => return Err(e),
    };
    g_max_upper(&phi, &delta, &extra)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub g_min_over_n: ExtReal,
    pub restarts_used: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// `g_min(Φ^{⊗n}, Δ^{(n)})/n` for `n = 1..=n_max`.
pub fn parallel_scaling(
    family: &ChannelFamily,
    theta: f64,
    n_max: usize,
    opts: &MetricOptions,
) -> Result<Vec<ScalingRow>> {
    let (phi, delta) = family.point(theta)?;
    // check the budget up front so no partial table is produced
    n_copy(&phi, &delta, n_max)?;
    (1..=n_max)
        .map(|n| {
            let (pn, dn) = n_copy(&phi, &delta, n)?;
            let mut o = opts.clone();
            if n >= 3 {
                o.restarts = o.restarts.max(MANY_COPY_RESTARTS);
            }
            let rep = g_min(&pn, &dn, &o)?;
            Ok(ScalingRow {
                n,
                g_min_over_n: rep.value.scale(1.0 / n as f64),
                restarts_used: rep.restarts_used,
                converged: rep.converged,
                iterations: rep.iterations,
            })
        })
        .collect()
}

/// `max_x J(T(·|x), T'(·|x))` for a finite-alphabet classical family.
pub fn classical_channel_min(family: &ChannelFamily, theta: f64) -> Result<ExtReal> {
    if !family.contains(theta) {
        return Err(Error::param("theta", format!("{theta} outside the family's range")));
    }
    let (rows, drows) = family.transition(theta).ok_or_else(|| {
        Error::param(
            "family",
            format!("`{}` is not a classical_finite family", family.name()),
        )
    })?;
    Ok(rows
        .iter()
        .zip(&drows)
        .map(|(p, d)| classical_fisher_raw(p, d))
        .fold(ExtReal::ZERO, ExtReal::max))
}
