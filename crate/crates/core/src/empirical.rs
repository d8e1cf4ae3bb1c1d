//! Trajectory-ensemble estimation of per-unit information decay and the
//! empirical information dissipation time (IDT).
//!
//! Protocol: equilibrate once and fix the final configuration σ as the
//! reference system state. Launch M independent trajectories from σ and
//! tally every unit's state at every lag. Detailed balance makes forward
//! trajectories from σ distributed as time reversals of trajectories that
//! arrive at σ, so the lag-d tallies estimate the state distribution of a
//! unit d steps away from the moment the system passes through σ.
//!
//! The per-unit information carried at lag d is measured as the specific
//! divergence KL(p̂(s_u at lag d | σ) ‖ p_u), with the stationary marginal
//! p_u estimated from a separate run. That run starts from σ too: within the
//! symmetry-broken phase the relevant reference law is the quasi-stationary
//! distribution of σ's branch, which a run seeded anywhere else would only
//! reach by crossing the global flip barrier. The divergence is nonnegative
//! and decays to zero as the ensemble forgets σ; an exponential fit of its
//! log against the lag, inverted at a threshold ε, gives the unit's IDT.

use rayon::prelude::*;

use crate::dynamics::{
    advance, sweep, DynamicsParams, SpinConfig, StepMode, UpdateTables,
};
use crate::error::{Error, Result};
use crate::info::{empirical_distribution, kl_divergence, Dist};
use crate::netgen::Graph;
use crate::rng::{substream, StreamDomain};
use crate::trend::{linear_fit, XYSeries};

/// Ensemble and estimation parameters.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleConfig {
    /// Number of trajectories M.
    pub trajectories: usize,
    /// Maximum lag L, in steps of `step`.
    pub max_lag: usize,
    /// IDT threshold ε in bits.
    pub eps: f64,
    /// Master seed; every stream below derives from it.
    pub seed: u64,
    /// Sweeps of the initial equilibration that selects the reference state.
    pub equilibration_sweeps: usize,
    /// Sampled sweeps of the auxiliary stationary run for the marginals.
    pub marginal_sweeps: usize,
    /// Unsampled sweeps between the reference state and the marginal run.
    pub marginal_burn_in: usize,
    /// Lag step unit: full sweep or single site update.
    pub step: StepMode,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories < 100 {
            return Err(Error::InvalidInput(format!(
                "need >= 100 trajectories, got {}",
                self.trajectories
            )));
        }
        if self.max_lag < 10 {
            return Err(Error::InvalidInput(format!(
                "need max lag >= 10, got {}",
                self.max_lag
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidInput(format!(
                "eps {} outside (0,1)",
                self.eps
            )));
        }
        if self.equilibration_sweeps == 0 {
            return Err(Error::InvalidInput("equilibration needs >= 1 sweep".into()));
        }
        if self.marginal_sweeps == 0 {
            return Err(Error::InvalidInput("marginal run needs >= 1 sweep".into()));
        }
        Ok(())
    }
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            trajectories: 5000,
            max_lag: 100,
            eps: 1e-3,
            seed: 0,
            equilibration_sweeps: 1000,
            marginal_sweeps: 10_000,
            marginal_burn_in: 100,
            step: StepMode::Sweep,
        }
    }
}

/// Per-unit, per-lag state tallies over the trajectory ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagHistograms {
    n_units: usize,
    max_lag: usize,
    trajectories: u64,
    reference: SpinConfig,
    /// Flattened `[unit][lag][state]` with state 0 = −1, 1 = +1.
    counts: Vec<u64>,
}

impl LagHistograms {
    #[inline]
    fn idx(&self, unit: usize, lag: usize, state01: usize) -> usize {
        (unit * (self.max_lag + 1) + lag) * 2 + state01
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn trajectories(&self) -> u64 {
        self.trajectories
    }

    pub fn reference(&self) -> &SpinConfig {
        &self.reference
    }

    pub fn count(&self, unit: usize, lag: usize, state01: usize) -> u64 {
        self.counts[self.idx(unit, lag, state01)]
    }

    /// Empirical p(s_unit = +1 | σ) at a lag.
    pub fn fraction_up(&self, unit: usize, lag: usize) -> f64 {
        self.count(unit, lag, 1) as f64 / self.trajectories as f64
    }
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            if w == 0 {
                return Err(Error::InvalidInput("worker count must be >= 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Equilibrate, fix the reference state, and tally M trajectories from it.
///
/// `workers` is a throughput hint only: per-trajectory RNG streams are
/// derived from `(seed, trajectory index)` and the tallies are merged by
/// addition, so the result is bit-identical for any worker count.
pub fn run_ensemble(
    graph: &Graph,
    params: &DynamicsParams,
    cfg: &EnsembleConfig,
    workers: Option<usize>,
) -> Result<LagHistograms> {
    cfg.validate()?;
    let n = graph.node_count();
    let tables = UpdateTables::new(graph, params);

    let mut equil_rng = substream(cfg.seed, StreamDomain::Equilibration, 0);
    let reference = crate::dynamics::equilibrate(
        graph,
        params,
        cfg.equilibration_sweeps,
        &mut equil_rng,
    )?
    .config;

    let len = n * (cfg.max_lag + 1) * 2;
    let m = cfg.trajectories;
    let lag_stride = cfg.max_lag + 1;

    let counts = run_pool(workers, || {
        (0..m)
            .into_par_iter()
            .with_min_len(16)
            .fold(
                || vec![0u64; len],
                |mut acc, traj| {
                    let mut rng = substream(cfg.seed, StreamDomain::Trajectory, traj as u64);
                    let mut state = reference.clone();
                    for lag in 1..=cfg.max_lag {
                        advance(&mut state, graph, &tables, cfg.step, &mut rng);
                        for (u, &s) in state.states().iter().enumerate() {
                            acc[(u * lag_stride + lag) * 2 + usize::from(s == 1)] += 1;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; len],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    })?;

    let mut hist = LagHistograms {
        n_units: n,
        max_lag: cfg.max_lag,
        trajectories: m as u64,
        reference,
        counts,
    };
    // Lag 0 is the reference state itself: a point mass of all M tallies.
    for u in 0..n {
        let s01 = usize::from(hist.reference.get(u) == 1);
        let i = hist.idx(u, 0, s01);
        hist.counts[i] = m as u64;
    }
    Ok(hist)
}

/// Estimate per-unit stationary marginals from a separate run seeded at the
/// reference state (burn-in first, then one tally per sweep).
///
/// A half-count is added to each state so the estimate is strictly positive,
/// as the true marginals are for T > 0; otherwise a single unvisited state
/// of a strongly ordered unit would make the specific divergence undefined.
pub fn stationary_marginals(
    graph: &Graph,
    params: &DynamicsParams,
    cfg: &EnsembleConfig,
    reference: &SpinConfig,
) -> Result<Vec<Dist>> {
    cfg.validate()?;
    let n = graph.node_count();
    if reference.len() != n {
        return Err(Error::InvalidInput(
            "reference state length does not match the graph".into(),
        ));
    }
    let tables = UpdateTables::new(graph, params);
    let mut rng = substream(cfg.seed, StreamDomain::Marginals, 0);
    let mut state = reference.clone();
    for _ in 0..cfg.marginal_burn_in {
        sweep(&mut state, graph, &tables, &mut rng);
    }
    let mut ups = vec![0u64; n];
    for _ in 0..cfg.marginal_sweeps {
        sweep(&mut state, graph, &tables, &mut rng);
        for (u, &s) in state.states().iter().enumerate() {
            if s == 1 {
                ups[u] += 1;
            }
        }
    }
    let total = cfg.marginal_sweeps as f64;
    ups.iter()
        .map(|&c| Dist::bernoulli((c as f64 + 0.5) / (total + 1.0)))
        .collect()
}

/// Per-unit information decay series i_u(d) = KL(p̂(s_u at lag d | σ) ‖ p_u)
/// in bits, for every unit and lag.
pub fn decay_curve(hist: &LagHistograms, marginals: &[Dist]) -> Result<Vec<Vec<f64>>> {
    if marginals.len() != hist.n_units {
        return Err(Error::InvalidInput(
            "marginal count does not match unit count".into(),
        ));
    }
    for (u, m) in marginals.iter().enumerate() {
        if m.probs().iter().any(|&p| p <= 0.0) {
            return Err(Error::SupportViolation(format!(
                "marginal of unit {u} has a zero entry"
            )));
        }
    }
    let mut series = Vec::with_capacity(hist.n_units);
    for u in 0..hist.n_units {
        let mut row = Vec::with_capacity(hist.max_lag + 1);
        for d in 0..=hist.max_lag {
            let counts = [hist.count(u, d, 0), hist.count(u, d, 1)];
            let p_hat = empirical_distribution(&counts)?;
            row.push(kl_divergence(&p_hat, &marginals[u])?);
        }
        series.push(row);
    }
    Ok(series)
}

/// Plug-in KL bias scale used as the default fit noise floor:
/// 5·(|alphabet|−1) / (2·M·ln 2) with the binary alphabet.
pub fn default_noise_floor(trajectories: usize) -> f64 {
    5.0 / (2.0 * trajectories as f64 * std::f64::consts::LN_2)
}

/// Regression settings for [`fit_idt`].
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// IDT threshold ε in bits.
    pub eps: f64,
    /// Lags with i_u(d) at or below this are excluded from the fit.
    pub noise_floor: f64,
    /// Minimum usable lags for a valid regression.
    pub min_points: usize,
}

impl FitConfig {
    pub fn new(eps: f64, trajectories: usize) -> Self {
        Self {
            eps,
            noise_floor: default_noise_floor(trajectories),
            min_points: 5,
        }
    }
}

/// Why a unit's decay curve supported no IDT estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorReason {
    /// Fewer usable lags than the regression minimum.
    TooFewPoints,
    /// Fitted slope was non-negative: no decay.
    NonDecaying,
}

/// Outcome of the per-unit IDT regression.
#[derive(Debug, Clone, Copy)]
pub enum IdtOutcome {
    /// Log-linear fit inverted at ε.
    Fitted {
        idt: f64,
        slope: f64,
        intercept: f64,
        points: usize,
    },
    /// The series starts at or below ε: the information was gone already.
    AlreadyDissipated,
    /// No valid estimate; reported, never imputed.
    Censored(CensorReason),
}

impl IdtOutcome {
    /// IDT in lag units when defined (0 for an already-dissipated unit).
    pub fn idt(&self) -> Option<f64> {
        match self {
            IdtOutcome::Fitted { idt, .. } => Some(*idt),
            IdtOutcome::AlreadyDissipated => Some(0.0),
            IdtOutcome::Censored(_) => None,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, IdtOutcome::Censored(_))
    }
}

/// Least-squares fit of log2 i_u(d) = a·d + b over the usable lags
/// (1 up to the first crossing below the noise floor), inverted at ε:
/// D_u = (log2 ε − b) / a.
pub fn fit_idt(series: &[f64], cfg: &FitConfig) -> IdtOutcome {
    if series.is_empty() {
        return IdtOutcome::Censored(CensorReason::TooFewPoints);
    }
    if series[0] <= cfg.eps {
        return IdtOutcome::AlreadyDissipated;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (d, &i) in series.iter().enumerate().skip(1) {
        if i <= cfg.noise_floor {
            break;
        }
        xs.push(d as f64);
        ys.push(i.log2());
    }
    if xs.len() < cfg.min_points {
        return IdtOutcome::Censored(CensorReason::TooFewPoints);
    }
    let points: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    let xy = match XYSeries::new(points) {
        Ok(s) => s,
        Err(_) => return IdtOutcome::Censored(CensorReason::TooFewPoints),
    };
    let fit = match linear_fit(&xy, f64::NEG_INFINITY, f64::INFINITY) {
        Ok(f) => f,
        Err(_) => return IdtOutcome::Censored(CensorReason::TooFewPoints),
    };
    if fit.slope >= 0.0 {
        return IdtOutcome::Censored(CensorReason::NonDecaying);
    }
    let idt = ((cfg.eps.log2() - fit.intercept) / fit.slope).max(0.0);
    IdtOutcome::Fitted {
        idt,
        slope: fit.slope,
        intercept: fit.intercept,
        points: xs.len(),
    }
}

/// Mean IDT per degree with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct DegreeRow {
    pub degree: usize,
    pub n_units: usize,
    pub mean: f64,
    pub sem: f64,
    pub censored: usize,
    /// Single-unit degree class: SEM is 0 by convention.
    pub low_n: bool,
}

/// Degree-aggregated empirical IDT curve.
#[derive(Debug, Clone)]
pub struct EmpiricalCurve {
    /// Degrees with at least one uncensored unit.
    pub rows: Vec<DegreeRow>,
    /// Degrees where every unit was censored: `(degree, count)`.
    pub fully_censored: Vec<(usize, usize)>,
}

/// Group per-unit outcomes by degree; SEM is the sample standard deviation
/// over units divided by √n_units.
pub fn aggregate_by_degree(outcomes: &[IdtOutcome], degrees: &[usize]) -> Result<EmpiricalCurve> {
    if outcomes.len() != degrees.len() {
        return Err(Error::InvalidInput(
            "outcome and degree counts differ".into(),
        ));
    }
    let mut by_degree: std::collections::BTreeMap<usize, (Vec<f64>, usize)> =
        std::collections::BTreeMap::new();
    for (outcome, &k) in outcomes.iter().zip(degrees) {
        let entry = by_degree.entry(k).or_default();
        match outcome.idt() {
            Some(d) => entry.0.push(d),
            None => entry.1 += 1,
        }
    }
    let mut rows = Vec::new();
    let mut fully_censored = Vec::new();
    for (degree, (values, censored)) in by_degree {
        if values.is_empty() {
            fully_censored.push((degree, censored));
            continue;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sem = if n == 1 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        rows.push(DegreeRow {
            degree,
            n_units: n,
            mean,
            sem,
            censored,
            low_n: n == 1,
        });
    }
    Ok(EmpiricalCurve {
        rows,
        fully_censored,
    })
}

/// Everything one empirical run produces.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub histograms: LagHistograms,
    pub marginals: Vec<Dist>,
    pub series: Vec<Vec<f64>>,
    pub outcomes: Vec<IdtOutcome>,
    pub curve: EmpiricalCurve,
}

/// The full pipeline: ensemble, marginals, decay curves, per-unit fits and
/// the degree aggregation.
pub fn run_empirical_pipeline(
    graph: &Graph,
    params: &DynamicsParams,
    cfg: &EnsembleConfig,
    workers: Option<usize>,
) -> Result<EnsembleRun> {
    let histograms = run_ensemble(graph, params, cfg, workers)?;
    let marginals = stationary_marginals(graph, params, cfg, histograms.reference())?;
    let series = decay_curve(&histograms, &marginals)?;
    let fit_cfg = FitConfig::new(cfg.eps, cfg.trajectories);
    let outcomes: Vec<IdtOutcome> = series.iter().map(|s| fit_idt(s, &fit_cfg)).collect();
    let curve = aggregate_by_degree(&outcomes, &graph.degrees())?;
    Ok(EnsembleRun {
        histograms,
        marginals,
        series,
        outcomes,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::UpdateRule;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn params(t: f64) -> DynamicsParams {
        DynamicsParams::new(1.0, t, UpdateRule::Metropolis).unwrap()
    }

    fn small_cfg(seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            trajectories: 100,
            max_lag: 10,
            eps: 1e-3,
            seed,
            equilibration_sweeps: 50,
            marginal_sweeps: 500,
            marginal_burn_in: 10,
            step: StepMode::Sweep,
        }
    }

    #[test]
    fn tallies_conserve_trajectory_count() {
        let g = crate::netgen::Graph::cycle(50);
        let hist = run_ensemble(&g, &params(2.0), &small_cfg(41), None).unwrap();
        for u in 0..50 {
            for d in 0..=10 {
                assert_eq!(hist.count(u, d, 0) + hist.count(u, d, 1), 100);
            }
        }
    }

    #[test]
    fn lag_zero_is_a_point_mass_on_the_reference() {
        let g = crate::netgen::Graph::cycle(20);
        let hist = run_ensemble(&g, &params(2.0), &small_cfg(42), None).unwrap();
        for u in 0..20 {
            let s01 = usize::from(hist.reference().get(u) == 1);
            assert_eq!(hist.count(u, 0, s01), 100);
            assert_eq!(hist.count(u, 0, 1 - s01), 0);
        }
    }

    #[test]
    fn results_identical_across_worker_counts_and_reruns() {
        let g = crate::netgen::Graph::cycle(30);
        let a = run_ensemble(&g, &params(2.0), &small_cfg(43), Some(1)).unwrap();
        let b = run_ensemble(&g, &params(2.0), &small_cfg(43), Some(4)).unwrap();
        let c = run_ensemble(&g, &params(2.0), &small_cfg(43), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg(0);
        cfg.trajectories = 99;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(0);
        cfg.max_lag = 9;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(0);
        cfg.eps = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn decay_starts_at_the_reference_surprisal() {
        let g = crate::netgen::Graph::cycle(12);
        let p = params(2.0);
        let cfg = small_cfg(44);
        let hist = run_ensemble(&g, &p, &cfg, None).unwrap();
        let marginals = stationary_marginals(&g, &p, &cfg, hist.reference()).unwrap();
        let series = decay_curve(&hist, &marginals).unwrap();
        for u in 0..12 {
            let s01 = usize::from(hist.reference().get(u) == 1);
            let expect = -marginals[u].probs()[s01].log2();
            assert_abs_diff_eq!(series[u][0], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn matching_conditional_and_marginal_give_zero() {
        let marginal = Dist::new(vec![0.25, 0.75]).unwrap();
        let hist = LagHistograms {
            n_units: 1,
            max_lag: 10,
            trajectories: 100,
            reference: SpinConfig::all_up(1),
            counts: {
                let mut c = vec![0u64; 22];
                for d in 0..=10 {
                    c[d * 2] = 25;
                    c[d * 2 + 1] = 75;
                }
                c
            },
        };
        let series = decay_curve(&hist, &[marginal]).unwrap();
        for d in 0..=10 {
            assert_eq!(series[0][d], 0.0);
        }
    }

    #[test]
    fn zero_marginal_is_a_support_violation() {
        let hist = LagHistograms {
            n_units: 1,
            max_lag: 10,
            trajectories: 100,
            reference: SpinConfig::all_up(1),
            counts: vec![50; 22],
        };
        let bad = Dist::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            decay_curve(&hist, &[bad]),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn exact_exponential_series_inverts_exactly() {
        // i(d) = 2^{-d/2}, eps = 2^{-10}: the crossing is at d = 20.
        let series: Vec<f64> = (0..=50).map(|d| (2.0f64).powf(-0.5 * d as f64)).collect();
        let cfg = FitConfig {
            eps: (2.0f64).powi(-10),
            noise_floor: (2.0f64).powi(-20),
            min_points: 5,
        };
        match fit_idt(&series, &cfg) {
            IdtOutcome::Fitted { idt, slope, .. } => {
                assert_abs_diff_eq!(idt, 20.0, epsilon = 1e-9);
                assert_abs_diff_eq!(slope, -0.5, epsilon = 1e-9);
            }
            other => panic!("expected a fit, got {other:?}"),
        }
    }

    #[test]
    fn constant_series_is_censored() {
        let series = vec![0.3; 40];
        let cfg = FitConfig::new(1e-3, 5000);
        assert!(matches!(
            fit_idt(&series, &cfg),
            IdtOutcome::Censored(CensorReason::NonDecaying)
        ));
    }

    #[test]
    fn short_series_is_censored() {
        // Only 3 usable lags above the floor.
        let series = vec![0.5, 0.4, 0.3, 0.2, 1e-9, 1e-9, 1e-9];
        let cfg = FitConfig::new(1e-3, 5000);
        assert!(matches!(
            fit_idt(&series, &cfg),
            IdtOutcome::Censored(CensorReason::TooFewPoints)
        ));
    }

    #[test]
    fn sub_threshold_series_counts_as_dissipated() {
        let series = vec![1e-5; 30];
        let cfg = FitConfig::new(1e-3, 5000);
        match fit_idt(&series, &cfg) {
            IdtOutcome::AlreadyDissipated => {}
            other => panic!("expected already-dissipated, got {other:?}"),
        }
        assert_eq!(fit_idt(&series, &cfg).idt(), Some(0.0));
    }

    #[test]
    fn noisy_exponential_recovered_within_five_percent() {
        // Synthetic generator with known ground truth: i(d) = i0·2^{a d}
        // with 10% multiplicative log-normal-ish noise over 50 lags.
        let a = -0.35f64;
        let i0 = 1.8f64;
        let eps = 1e-3f64;
        let d_true = (eps.log2() - i0.log2()) / a;
        let mut errs = Vec::new();
        for seed in 0..100 {
            let mut rng = substream(900 + seed, StreamDomain::Test, 0);
            let series: Vec<f64> = (0..=50)
                .map(|d| {
                    let noise = 1.0 + 0.1 * (2.0 * rng.gen::<f64>() - 1.0);
                    i0 * (2.0f64).powf(a * d as f64) * noise
                })
                .collect();
            let cfg = FitConfig {
                eps,
                noise_floor: default_noise_floor(5000),
                min_points: 5,
            };
            if let IdtOutcome::Fitted { idt, .. } = fit_idt(&series, &cfg) {
                errs.push((idt - d_true).abs() / d_true);
            } else {
                panic!("synthetic series should fit");
            }
        }
        errs.sort_by(|x, y| x.total_cmp(y));
        assert!(errs[50] < 0.05, "median relative error {}", errs[50]);
    }

    #[test]
    fn aggregation_rules() {
        let outcomes = vec![
            IdtOutcome::Fitted { idt: 10.0, slope: -1.0, intercept: 0.0, points: 9 },
            IdtOutcome::Fitted { idt: 12.0, slope: -1.0, intercept: 0.0, points: 9 },
            IdtOutcome::Fitted { idt: 7.0, slope: -1.0, intercept: 0.0, points: 9 },
            IdtOutcome::Censored(CensorReason::NonDecaying),
            IdtOutcome::Fitted { idt: 5.0, slope: -1.0, intercept: 0.0, points: 9 },
            IdtOutcome::Fitted { idt: 5.0, slope: -1.0, intercept: 0.0, points: 9 },
            IdtOutcome::Censored(CensorReason::TooFewPoints),
        ];
        let degrees = vec![2, 2, 3, 3, 4, 4, 5];
        let curve = aggregate_by_degree(&outcomes, &degrees).unwrap();
        assert_eq!(curve.rows.len(), 3);
        // Degree 2: two units.
        assert_eq!(curve.rows[0].n_units, 2);
        assert_abs_diff_eq!(curve.rows[0].mean, 11.0);
        assert!(curve.rows[0].sem > 0.0 && !curve.rows[0].low_n);
        // Degree 3: single uncensored unit, SEM 0 by convention, flagged.
        assert_eq!(curve.rows[1].n_units, 1);
        assert_eq!(curve.rows[1].sem, 0.0);
        assert!(curve.rows[1].low_n);
        assert_eq!(curve.rows[1].censored, 1);
        // Degree 4: identical values, SEM exactly 0.
        assert_eq!(curve.rows[2].sem, 0.0);
        assert!(!curve.rows[2].low_n);
        // Degree 5: fully censored, carried separately.
        assert_eq!(curve.fully_censored, vec![(5, 1)]);
    }

    #[test]
    fn synthetic_degree_curve_recovered_within_two_sem() {
        // Oracle: D(k) = 30 − (k − 10)² / 10 with unit-level Gaussian-ish
        // jitter; the per-degree means must cover the truth at 2·SEM for at
        // least 95% of degree classes across seeds.
        // With the SEM estimated from the sample, mean ± 2·SEM coverage
        // follows a t distribution; 200 units per class keep it above 95%.
        let truth = |k: usize| 30.0 - ((k as f64 - 10.0).powi(2) / 10.0);
        let mut covered = 0usize;
        let mut total = 0usize;
        for seed in 0..100 {
            let mut rng = substream(1700 + seed, StreamDomain::Test, 0);
            let mut outcomes = Vec::new();
            let mut degrees = Vec::new();
            for k in 5..=15 {
                for _ in 0..200 {
                    // Sum of 12 uniforms − 6: near-standard-normal jitter.
                    let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                    outcomes.push(IdtOutcome::Fitted {
                        idt: truth(k) + z,
                        slope: -1.0,
                        intercept: 0.0,
                        points: 9,
                    });
                    degrees.push(k);
                }
            }
            let curve = aggregate_by_degree(&outcomes, &degrees).unwrap();
            for row in &curve.rows {
                total += 1;
                if (row.mean - truth(row.degree)).abs() <= 2.0 * row.sem {
                    covered += 1;
                }
            }
        }
        let rate = covered as f64 / total as f64;
        assert!(rate >= 0.95, "coverage {rate}");
    }

    #[test]
    fn marginals_match_cavity_on_a_regular_graph() {
        // 4-regular graph deep in the ordered phase (T=1.5, weak branch
        // wander): the analytic unit marginal from the cavity fixed point
        // should agree with the sampled marginals within the sampling scale.
        // Compare the per-graph mean of the majority-state probability so
        // the branch sign does not matter and unit-level noise averages out.
        let dist = crate::netgen::DegreeDistribution::new(&[(4, 1.0)]).unwrap();
        let mut rng = substream(321, StreamDomain::Test, 0);
        let degrees = crate::netgen::sample_degree_sequence(&dist, 128, &mut rng).unwrap();
        let g = crate::netgen::build_configuration_graph(&degrees, &mut rng).unwrap();
        let p = DynamicsParams::new(1.0, 1.5, UpdateRule::Glauber).unwrap();
        let cfg = EnsembleConfig {
            trajectories: 100,
            max_lag: 10,
            eps: 1e-3,
            seed: 55,
            equilibration_sweeps: 1000,
            marginal_sweeps: 20_000,
            marginal_burn_in: 200,
            step: StepMode::Sweep,
        };
        let mut equil_rng = substream(cfg.seed, StreamDomain::Equilibration, 0);
        let reference = crate::dynamics::equilibrate(&g, &p, 1000, &mut equil_rng)
            .unwrap()
            .config;
        let marginals = stationary_marginals(&g, &p, &cfg, &reference).unwrap();

        let branch =
            crate::analytic::cavity_branch(&dist, &p, crate::analytic::CavityOptions::default())
                .unwrap();
        let expect = crate::analytic::unit_marginal(4, branch.solution.rho, &p)
            .unwrap()
            .probs()[1];
        let expect_major = expect.max(1.0 - expect);
        let mean_major = marginals
            .iter()
            .map(|m| m.probs()[0].max(m.probs()[1]))
            .sum::<f64>()
            / marginals.len() as f64;
        // The graph-mean estimator still carries the (shared) slow
        // magnetization mode; allow an autocorrelation time of ~32 sweeps.
        let se = (expect_major * (1.0 - expect_major)
            / (cfg.marginal_sweeps as f64 / 32.0))
            .sqrt();
        assert!(
            (mean_major - expect_major).abs() < 3.0 * se,
            "graph mean {mean_major} vs cavity {expect_major} (3se {})",
            3.0 * se
        );
    }
}
