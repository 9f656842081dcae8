//! Monte Carlo channel estimation with fixed i.i.d. strategies.
//!
//! A strategy feeds `n` copies of a probe through `Φ_θ ⊗ I`, measures each
//! output with the same POVM and estimates θ by maximum likelihood from the
//! outcome counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{ChannelFamily, Povm, Realigned};
use crate::error::{Error, Result};
use crate::linalg::{bell_basis, HermitianMatrix};
use crate::metrics::{g_min, measured_statistics, task_seed, with_threads, MetricOptions, ProbeState};
use crate::states::{classical_fisher_raw, ExtReal, ProbVector, SignedVector};

/// Points in the coarse likelihood grid.
pub const MLE_GRID_POINTS: usize = 201;
/// Default half-width of the search interval around θ_true.
pub const DEFAULT_WINDOW: f64 = 0.5;
/// Strategies with less Fisher information than this are degenerate.
pub const DEGENERATE_FISHER: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    /// Grid search followed by golden-section refinement to `resolution`.
    MleGrid { resolution: f64 },
    /// Fisher scoring from the best grid point until the step is below `tol`.
    MleNewton { tol: f64, max_iter: usize },
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::MleGrid { resolution: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct Strategy {
    pub probe: ProbeState,
    pub povm: Povm,
    pub estimator: Estimator,
    /// MLE search interval is `θ_true ± window`, clipped to the family.
    pub window: f64,
}

impl Strategy {
    pub fn new(probe: ProbeState, povm: Povm, estimator: Estimator) -> Self {
        Self {
            probe,
            povm,
            estimator,
            window: DEFAULT_WINDOW,
        }
    }

    /// `|0⟩|0⟩` probe, computational-basis measurement of the output and the
    /// ancilla ignored.
    pub fn computational(family: &ChannelFamily) -> Self {
        let d_anc = family.d_in();
        Self {
            probe: ProbeState::basis(family.d_in(), 0, d_anc),
            povm: Povm::computational(family.d_out()).extend_with_identity(d_anc),
            estimator: Estimator::default(),
            window: DEFAULT_WINDOW,
        }
    }

    /// Half of `|Φ⁺⟩` through the channel, Bell-basis measurement. Qubits
    /// only.
    pub fn bell(family: &ChannelFamily) -> Result<Self> {
        if family.d_in() != 2 || family.d_out() != 2 {
            return Err(Error::param(
                "strategy",
                format!(
                    "bell strategy needs a qubit channel, `{}` is {}->{}",
                    family.name(),
                    family.d_in(),
                    family.d_out()
                ),
            ));
        }
        Ok(Self {
            probe: ProbeState::bell(),
            povm: Povm::projective(&bell_basis())?,
            estimator: Estimator::default(),
            window: DEFAULT_WINDOW,
        })
    }

    /// Same probe, measurement replaced by `{I}`.
    pub fn with_trivial_povm(mut self) -> Self {
        self.povm = Povm::trivial(self.povm.dim());
        self
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    fn check(&self, family: &ChannelFamily) -> Result<()> {
        if self.probe.d_in() != family.d_in() {
            return Err(Error::DimensionMismatch(format!(
                "probe input dimension {} for `{}` with input dimension {}",
                self.probe.d_in(),
                family.name(),
                family.d_in()
            )));
        }
        if self.povm.dim() != family.d_out() * self.probe.d_anc() {
            return Err(Error::DimensionMismatch(format!(
                "POVM on dimension {}, output is {}x{}",
                self.povm.dim(),
                family.d_out(),
                self.probe.d_anc()
            )));
        }
        if !(self.window > 0.0) {
            return Err(Error::param("window", format!("{} is not positive", self.window)));
        }
        match self.estimator {
            Estimator::MleGrid { resolution } if !(resolution > 0.0) => {
                Err(Error::param("resolution", format!("{resolution} is not positive")))
            }
            Estimator::MleNewton { tol, .. } if !(tol > 0.0) => {
                Err(Error::param("tol", format!("{tol} is not positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Outcome probabilities `p(x)` at θ and their derivative `d(x)`.
pub fn outcome_distribution(
    family: &ChannelFamily,
    theta: f64,
    strategy: &Strategy,
) -> Result<(ProbVector, SignedVector)> {
    strategy.check(family)?;
    let (phi, delta) = family.point(theta)?;
    let (p, d) = measured_statistics(&phi, &delta, &strategy.probe, &strategy.povm)?;
    Ok((ProbVector::new(p)?, SignedVector::new(d)?))
}

fn probabilities(family: &ChannelFamily, theta: f64, strategy: &Strategy) -> Result<Vec<f64>> {
    let phi = family.channel(theta)?;
    let rho = Realigned::new(&phi).apply_to_probe(strategy.probe.vector(), strategy.probe.d_anc());
    Ok(strategy
        .povm
        .statistics(&HermitianMatrix::symmetrize(rho))
        .into_iter()
        .map(|x| x.max(0.0))
        .collect())
}

/// Multinomial counts by sequential conditional binomials.
pub fn sample_counts<R: rand::Rng + ?Sized>(p: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; p.len()];
    let mut left = n;
    let mut mass: f64 = p.iter().sum();
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, q).expect("probability in [0, 1]").sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= pk;
    }
    counts
}

fn log_likelihood(counts: &[u64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&n, &px) in counts.iter().zip(p) {
        if n == 0 {
            continue;
        }
        if px <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += n as f64 * px.ln();
    }
    total
}

/// Likelihood model shared by every trial of one run.
struct Model<'a> {
    family: &'a ChannelFamily,
    strategy: &'a Strategy,
    lo: f64,
    hi: f64,
    grid: Vec<f64>,
    grid_p: Vec<Vec<f64>>,
}

enum Fit {
    Ok { theta: f64, clipped: bool },
    Failed,
}

impl<'a> Model<'a> {
    fn new(family: &'a ChannelFamily, theta_true: f64, strategy: &'a Strategy) -> Result<Self> {
        let (vlo, vhi) = family.valid_range();
        let lo = (theta_true - strategy.window).max(vlo);
        let hi = (theta_true + strategy.window).min(vhi);
        let grid: Vec<f64> = (0..MLE_GRID_POINTS)
            .map(|k| lo + (hi - lo) * k as f64 / (MLE_GRID_POINTS - 1) as f64)
            .collect();
        let grid_p = grid
            .iter()
            .map(|&t| probabilities(family, t, strategy))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family,
            strategy,
            lo,
            hi,
            grid,
            grid_p,
        })
    }

    fn loglik(&self, counts: &[u64], theta: f64) -> f64 {
        probabilities(self.family, theta, self.strategy).map_or(f64::NEG_INFINITY, |p| log_likelihood(counts, &p))
    }

    fn fit(&self, counts: &[u64]) -> Fit {
        let mut best = 0;
        let mut best_ll = f64::NEG_INFINITY;
        for (k, p) in self.grid_p.iter().enumerate() {
            let ll = log_likelihood(counts, p);
            if ll > best_ll {
                best_ll = ll;
                best = k;
            }
        }
        if !best_ll.is_finite() {
            return Fit::Failed;
        }
        let theta = match self.strategy.estimator {
            Estimator::MleGrid { resolution } => {
                let a = self.grid[best.saturating_sub(1)];
                let b = self.grid[(best + 1).min(self.grid.len() - 1)];
                self.golden_section(counts, a, b, resolution)
            }
            Estimator::MleNewton { tol, max_iter } => match self.scoring(counts, self.grid[best], tol, max_iter) {
                Some(t) => t,
                None => return Fit::Failed,
            },
        };
        let edge = match self.strategy.estimator {
            Estimator::MleGrid { resolution } => resolution,
            Estimator::MleNewton { tol, .. } => tol,
        };
        Fit::Ok {
            theta,
            clipped: theta - self.lo <= edge || self.hi - theta <= edge,
        }
    }

    fn golden_section(&self, counts: &[u64], mut a: f64, mut b: f64, resolution: f64) -> f64 {
        let g = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = self.loglik(counts, c);
        let mut fd = self.loglik(counts, d);
        while b - a > resolution {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.loglik(counts, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.loglik(counts, d);
            }
        }
        0.5 * (a + b)
    }

    /// `θ ← θ + score/(N·J)`; `None` when it leaves the interval or stalls.
    fn scoring(&self, counts: &[u64], mut theta: f64, tol: f64, max_iter: usize) -> Option<f64> {
        let total: u64 = counts.iter().sum();
        for _ in 0..max_iter {
            let (p, d) = outcome_distribution(self.family, theta, self.strategy).ok()?;
            let (p, d) = (p.as_slice(), d.as_slice());
            let mut score = 0.0;
            for ((&n, &px), &dx) in counts.iter().zip(p).zip(d) {
                if n > 0 {
                    if px <= 0.0 {
                        return None;
                    }
                    score += n as f64 * dx / px;
                }
            }
            let info = classical_fisher_raw(p, d).finite()? * total as f64;
            if info <= 0.0 {
                return None;
            }
            let step = score / info;
            theta = (theta + step).clamp(self.lo, self.hi);
            if step.abs() < tol {
                return Some(theta);
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub n_uses: u64,
    pub trials: usize,
    pub theta_true: f64,
    /// Estimates of the trials that converged, in trial order.
    pub estimates: Vec<f64>,
    pub mean: f64,
    pub mse: f64,
    pub n_times_mse: f64,
    /// Estimates on the edge of the search interval (kept).
    pub clipped: usize,
    /// Trials whose estimator failed (dropped).
    pub excluded: usize,
}

fn strategy_fisher(family: &ChannelFamily, theta: f64, strategy: &Strategy) -> Result<ExtReal> {
    let (p, d) = outcome_distribution(family, theta, strategy)?;
    Ok(classical_fisher_raw(p.as_slice(), d.as_slice()))
}

fn check_informative(family: &ChannelFamily, theta: f64, strategy: &Strategy) -> Result<ExtReal> {
    let j = strategy_fisher(family, theta, strategy)?;
    if j.value() <= DEGENERATE_FISHER {
        return Err(Error::Degenerate(format!(
            "the strategy's outcome statistics do not depend on θ at {theta} (Fisher information {})",
            j
        )));
    }
    Ok(j)
}

/// `trials` independent runs of `n_uses` channel uses each.
pub fn run_trials(
    family: &ChannelFamily,
    theta_true: f64,
    strategy: &Strategy,
    n_uses: u64,
    trials: usize,
    seed: u64,
) -> Result<TrialResult> {
    run_trials_with(family, theta_true, strategy, n_uses, trials, seed, None)
}

/// [`run_trials`] with a worker cap.
pub fn run_trials_with(
    family: &ChannelFamily,
    theta_true: f64,
    strategy: &Strategy,
    n_uses: u64,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<TrialResult> {
    if n_uses == 0 || trials == 0 {
        return Err(Error::InvalidSimulation("n_uses and trials must be positive".into()));
    }
    if !family.contains(theta_true) {
        return Err(Error::param(
            "theta",
            format!("{theta_true} outside the family's range"),
        ));
    }
    check_informative(family, theta_true, strategy)?;
    let (p, _) = outcome_distribution(family, theta_true, strategy)?;
    let model = Model::new(family, theta_true, strategy)?;
    let fits: Vec<Fit> = with_threads(threads, || {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, t));
                let counts = sample_counts(p.as_slice(), n_uses, &mut rng);
                model.fit(&counts)
            })
            .collect()
    });
    let mut estimates = Vec::with_capacity(trials);
    let mut clipped = 0;
    for f in fits {
        if let Fit::Ok { theta, clipped: c } = f {
            estimates.push(theta);
            clipped += usize::from(c);
        }
    }
    let excluded = trials - estimates.len();
    if estimates.is_empty() {
        return Err(Error::Degenerate(format!(
            "the estimator failed on all {trials} trials"
        )));
    }
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let mse = estimates.iter().map(|e| (e - theta_true).powi(2)).sum::<f64>() / k;
    Ok(TrialResult {
        n_uses,
        trials,
        theta_true,
        estimates,
        mean,
        mse,
        n_times_mse: n_uses as f64 * mse,
        clipped,
        excluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: u64,
    pub mse: f64,
    pub n_mse: f64,
    pub mean: f64,
    pub clipped: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub theta_true: f64,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `ln MSE` against `ln n`.
    pub slope: f64,
    /// `1/g_min` at θ_true.
    pub cr_floor: f64,
    pub g_min: ExtReal,
    /// Classical Fisher information of the strategy's statistics.
    pub strategy_fisher: ExtReal,
}

/// Runs [`run_trials`] for every `n` in `n_list` and fits the MSE rate.
pub fn rate_scan(
    family: &ChannelFamily,
    theta_true: f64,
    strategy: &Strategy,
    n_list: &[u64],
    trials: usize,
    seed: u64,
    opts: &MetricOptions,
) -> Result<RateReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("n_list", "must be non-empty and strictly ascending"));
    }
    let strategy_j = check_informative(family, theta_true, strategy)?;
    let rows = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let r = run_trials_with(
                family,
                theta_true,
                strategy,
                n,
                trials,
                task_seed(seed, i),
                opts.threads,
            )?;
            Ok(RateRow {
                n,
                mse: r.mse,
                n_mse: r.n_times_mse,
                mean: r.mean,
                clipped: r.clipped,
                excluded: r.excluded,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mse.ln()).collect();
        fit_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    if rows.len() >= 2 && !slope.is_finite() {
        return Err(Error::Degenerate(
            "MSE is zero for some n; no rate can be fitted".into(),
        ));
    }
    let (phi, delta) = family.point(theta_true)?;
    let gm = g_min(&phi, &delta, opts)?.value;
    let cr_floor = match gm {
        ExtReal::Finite(v) if v > 0.0 => 1.0 / v,
        ExtReal::Finite(_) => f64::INFINITY,
        ExtReal::Infinite => 0.0,
    };
    Ok(RateReport {
        theta_true,
        rows,
        slope,
        cr_floor,
        g_min: gm,
        strategy_fisher: strategy_j,
    })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::g_max_upper_family;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn outcome_distribution_examples() {
        let fam = ChannelFamily::bitflip();
        let (p, d) = outcome_distribution(&fam, 0.1, &Strategy::computational(&fam)).unwrap();
        assert!(close(p.as_slice(), &[0.9, 0.1], 1e-12));
        assert!(close(d.as_slice(), &[-1.0, 1.0], 1e-12));

        let pauli = ChannelFamily::pauli([0.05, 0.02, 0.03], [0.2, -0.1, 0.3]).unwrap();
        let theta = 0.1;
        let (p, d) = outcome_distribution(&pauli, theta, &Strategy::bell(&pauli).unwrap()).unwrap();
        let (px, py, pz) = (0.05 + 0.02, 0.02 - 0.01, 0.03 + 0.03);
        // Bell order Φ+, Φ−, Ψ+, Ψ−: I, Z, X, Y
        assert!(close(p.as_slice(), &[1.0 - px - py - pz, pz, px, py], 1e-12));
        assert!(d.as_slice().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn derivative_sums_to_zero() {
        for (fam, theta) in [
            (ChannelFamily::depolarized_phase(0.1).unwrap(), 0.4),
            (ChannelFamily::phase_unitary(), 1.1),
            (ChannelFamily::binary_symmetric(), 0.3),
        ] {
            let s = Strategy::computational(&fam);
            let (_, d) = outcome_distribution(&fam, theta, &s).unwrap();
            assert!(d.as_slice().iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_frequencies_converge() {
        let p = [0.5, 0.3, 0.15, 0.05];
        let n = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let counts = sample_counts(&p, n, &mut rng);
        assert_eq!(counts.iter().sum::<u64>(), n);
        let l1: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &q)| (c as f64 / n as f64 - q).abs())
            .sum();
        assert!(l1 <= 5.0 * (p.len() as f64 / n as f64).sqrt());
    }

    #[test]
    fn bitflip_cramer_rao() {
        let fam = ChannelFamily::bitflip();
        let s = Strategy::computational(&fam);
        let r = run_trials(&fam, 0.1, &s, 1000, 2000, 7).unwrap();
        assert!((r.n_times_mse / 0.09 - 1.0).abs() <= 0.15, "n·MSE = {}", r.n_times_mse);
        assert!((r.mean - 0.1).abs() <= 3.0 * (r.mse / r.trials as f64).sqrt());
        assert_eq!(r.excluded, 0);
    }

    #[test]
    fn scoring_estimator_agrees_with_grid() {
        let fam = ChannelFamily::bitflip();
        let grid = Strategy::computational(&fam);
        let newton = grid.clone().with_estimator(Estimator::MleNewton {
            tol: 1e-10,
            max_iter: 50,
        });
        let a = run_trials(&fam, 0.1, &grid, 500, 50, 1).unwrap();
        let b = run_trials(&fam, 0.1, &newton, 500, 50, 1).unwrap();
        assert!(close(&a.estimates, &b.estimates, 2e-6));
    }

    #[test]
    fn single_trial_stays_in_window() {
        let fam = ChannelFamily::bitflip();
        let s = Strategy::computational(&fam);
        let r = run_trials(&fam, 0.1, &s, 1, 1, 11).unwrap();
        let (lo, hi) = (0.0, 0.6);
        assert!(r.estimates[0] >= lo && r.estimates[0] <= hi);
    }

    #[test]
    fn trials_are_deterministic() {
        let fam = ChannelFamily::depolarized_phase(0.1).unwrap();
        let s = Strategy::bell(&fam).unwrap();
        let a = run_trials_with(&fam, 0.5, &s, 200, 64, 9, Some(1)).unwrap();
        let b = run_trials_with(&fam, 0.5, &s, 200, 64, 9, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.estimates.iter().map(|e| e.to_bits()).collect::<Vec<_>>(),
            b.estimates.iter().map(|e| e.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn bitflip_rate() {
        let fam = ChannelFamily::bitflip();
        let s = Strategy::computational(&fam);
        let rep = rate_scan(
            &fam,
            0.1,
            &s,
            &[250, 500, 1000, 2000],
            1000,
            7,
            &MetricOptions::default(),
        )
        .unwrap();
        assert!((rep.slope + 1.0).abs() <= 0.15, "slope {}", rep.slope);
        for row in &rep.rows {
            assert!(row.n_mse >= 0.9 * 0.09, "{row:?}");
        }
        assert!((rep.cr_floor - 0.09).abs() < 1e-5);
    }

    #[test]
    fn depolarized_phase_rate_respects_g_max_floor() {
        let fam = ChannelFamily::depolarized_phase(0.1).unwrap();
        let theta = 0.5;
        let s = Strategy::bell(&fam).unwrap();
        let opts = MetricOptions {
            restarts: 4,
            ..Default::default()
        };
        let rep = rate_scan(&fam, theta, &s, &[250, 500, 1000], 400, 5, &opts).unwrap();
        let floor = 1.0 / g_max_upper_family(&fam, theta).unwrap().value.value();
        for row in &rep.rows {
            assert!(row.n_mse >= floor * 0.9, "{row:?} vs {floor}");
        }
    }

    #[test]
    fn zero_information_strategy_is_degenerate() {
        let fam = ChannelFamily::bitflip();
        let s = Strategy::computational(&fam).with_trivial_povm();
        assert!(matches!(
            run_trials(&fam, 0.1, &s, 100, 10, 1),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            rate_scan(&fam, 0.1, &s, &[10, 20], 10, 1, &MetricOptions::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let fam = ChannelFamily::bitflip();
        let s = Strategy::computational(&fam);
        assert!(rate_scan(&fam, 0.1, &s, &[20, 10], 10, 1, &MetricOptions::default()).is_err());
        assert!(run_trials(&fam, 0.1, &s, 0, 10, 1).is_err());
        let bad = Strategy::computational(
            &ChannelFamily::classical_finite(vec![vec![0.5, 0.25, 0.25]], vec![vec![0.0, 1.0, -1.0]]).unwrap(),
        );
        assert!(matches!(
            outcome_distribution(&fam, 0.1, &bad),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
