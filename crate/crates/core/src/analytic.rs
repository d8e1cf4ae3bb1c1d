//! Cavity/mean-field evaluation of per-degree information dissipation.
//!
//! On a locally tree-like graph the state of a randomly reached neighbor is
//! +1 with a self-consistent probability ρ (the cavity fixed point, computed
//! over the excess degree distribution). From ρ follow, per degree k:
//!
//! * the unit's stationary marginal and its entropy I0(k),
//! * the expected one-hop transmission T(k) = ⟨I(s_j^{t+1}; s_i^t)⟩ over the
//!   neighbor's excess degree,
//! * the first-hop information bound I1(k) = min(k·T(k), I0(k)),
//! * the average onward dissipation ratio Î, and
//! * the dissipation time D(k): the number of hops until the remaining
//!   information about the unit's state drops below a threshold ε.
//!
//! The per-hop conditionals are always the heat-bath ones: they are the
//! stationary conditional distribution of a unit given its neighbors, which
//! is what the mean-field picture models regardless of which simulation rule
//! generated the trajectory.

use crate::dynamics::{glauber_up_probability, DynamicsParams};
use crate::error::{Error, Result};
use crate::info::{entropy_of, Dist};
use crate::netgen::DegreeDistribution;

/// Tolerances and budget for the cavity iteration.
#[derive(Debug, Clone, Copy)]
pub struct CavityOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for CavityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
            damping: 0.5,
        }
    }
}

/// Output of one cavity iteration run.
#[derive(Debug, Clone, Copy)]
pub struct CavitySolution {
    /// Probability that a randomly reached neighbor is +1.
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final undamped fixed-point residual |f(ρ) − ρ|.
    pub residual: f64,
}

/// Cavity solution plus which branch it is.
#[derive(Debug, Clone, Copy)]
pub struct CavityBranch {
    pub solution: CavitySolution,
    /// True when a symmetry-broken root (ρ ≠ 1/2) was found.
    pub broken: bool,
}

/// Binomial(m, rho) probability mass function over j = 0..=m.
fn binomial_pmf(m: usize, rho: f64) -> Vec<f64> {
    debug_assert!((0.0..=1.0).contains(&rho));
    if m == 0 {
        return vec![1.0];
    }
    if rho == 0.0 {
        let mut p = vec![0.0; m + 1];
        p[0] = 1.0;
        return p;
    }
    if rho == 1.0 {
        let mut p = vec![0.0; m + 1];
        p[m] = 1.0;
        return p;
    }
    let mut ln_fact = vec![0.0f64; m + 1];
    for i in 1..=m {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let lr = rho.ln();
    let lq = (1.0 - rho).ln();
    (0..=m)
        .map(|j| {
            (ln_fact[m] - ln_fact[j] - ln_fact[m - j] + j as f64 * lr + (m - j) as f64 * lq).exp()
        })
        .collect()
}

/// One application of the cavity map: the next-iterate probability that a
/// neighbor reached along an edge is +1, given the current ρ.
fn cavity_map(excess: &DegreeDistribution, params: &DynamicsParams, rho: f64) -> f64 {
    let mut out = 0.0;
    for &(m, qm) in excess.support() {
        let pmf = binomial_pmf(m, rho);
        let mut p_up = 0.0;
        for (j, &w) in pmf.iter().enumerate() {
            p_up += w * glauber_up_probability(2 * j as i64 - m as i64, params);
        }
        out += qm * p_up;
    }
    out
}

/// Damped fixed-point iteration of the cavity map from `rho0`.
pub fn cavity_fixed_point(
    dist: &DegreeDistribution,
    params: &DynamicsParams,
    rho0: f64,
    opts: CavityOptions,
) -> Result<CavitySolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("cavity tolerance must be > 0".into()));
    }
    if !(0.0..=1.0).contains(&rho0) {
        return Err(Error::InvalidInput(format!("rho0 {rho0} outside [0,1]")));
    }
    let excess = dist.excess()?;
    let mut rho = rho0;
    for it in 1..=opts.max_iter {
        let mapped = cavity_map(&excess, params, rho);
        let residual = (mapped - rho).abs();
        rho += (1.0 - opts.damping) * (mapped - rho);
        if residual < opts.tol {
            return Ok(CavitySolution {
                rho,
                converged: true,
                iterations: it,
                residual,
            });
        }
    }
    Ok(CavitySolution {
        rho,
        converged: false,
        iterations: opts.max_iter,
        residual: (cavity_map(&excess, params, rho) - rho).abs(),
    })
}

/// Run the iteration from both ρ0 = 0.5 and ρ0 = 0.99 and report the
/// symmetry-broken root when one exists, the symmetric root otherwise.
pub fn cavity_branch(
    dist: &DegreeDistribution,
    params: &DynamicsParams,
    opts: CavityOptions,
) -> Result<CavityBranch> {
    let symmetric = cavity_fixed_point(dist, params, 0.5, opts)?;
    let high = cavity_fixed_point(dist, params, 0.99, opts)?;
    let detect = (10.0 * opts.tol).max(1e-6);
    if high.converged && (high.rho - 0.5).abs() > detect {
        Ok(CavityBranch {
            solution: high,
            broken: true,
        })
    } else if symmetric.converged {
        Ok(CavityBranch {
            solution: symmetric,
            broken: false,
        })
    } else {
        Err(Error::Convergence(format!(
            "cavity iteration did not converge from either start \
             (residuals {:.3e} and {:.3e})",
            symmetric.residual, high.residual
        )))
    }
}

/// p(s = −1) for a degree-k unit whose neighbors are each +1 independently
/// with probability ρ. Summed on the small side directly — computing
/// 1 − p(+1) instead would hit catastrophic cancellation once the unit is
/// strongly ordered (the mass drops below 1e-16 around k ≈ 40 at T = 2).
fn unit_marginal_minus(k: usize, rho: f64, params: &DynamicsParams) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidInput("unit degree must be >= 1".into()));
    }
    let pmf = binomial_pmf(k, rho);
    let mut p_down = 0.0;
    for (j, &w) in pmf.iter().enumerate() {
        // p(new = −1 | Σ) = p(new = +1 | −Σ) with Σ = 2j − k.
        p_down += w * glauber_up_probability(k as i64 - 2 * j as i64, params);
    }
    Ok(p_down.clamp(0.0, 1.0))
}

/// Stationary marginal of a degree-k unit. Returned as `[p(−1), p(+1)]`.
pub fn unit_marginal(k: usize, rho: f64, params: &DynamicsParams) -> Result<Dist> {
    let p_down = unit_marginal_minus(k, rho, params)?;
    Dist::bernoulli(1.0 - p_down)
}

/// Binary entropy in bits given one of the two masses, exact down to
/// denormal minority masses (the complement's log runs through ln_1p).
pub(crate) fn binary_entropy_stable(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    -p * p.log2() - (1.0 - p) * (-p).ln_1p() / ln2
}

/// Entropy of the stationary marginal: the information a degree-k unit's
/// state carries about the system at lag zero.
pub fn initial_information(k: usize, rho: f64, params: &DynamicsParams) -> Result<f64> {
    Ok(binary_entropy_stable(unit_marginal_minus(k, rho, params)?))
}

/// Conditional law of a neighbor's next state given the unit state `a`,
/// for a neighbor with `others` further neighbors: p(s_j^{t+1} = −1 | a),
/// summed on the small side like [`unit_marginal_minus`].
fn neighbor_conditional_down(others: usize, a: i64, rho: f64, params: &DynamicsParams) -> f64 {
    let pmf = binomial_pmf(others, rho);
    let mut p = 0.0;
    for (j, &w) in pmf.iter().enumerate() {
        p += w * glauber_up_probability(others as i64 - 2 * j as i64 - a, params);
    }
    p.clamp(0.0, 1.0)
}

/// Mutual information of the 2×2 joint assembled from the unit's minority
/// mass and the neighbor's conditional minority masses, evaluated in the
/// KL form with ln_1p for the near-one cell so deeply ordered units do not
/// lose the tiny cells to rounding.
fn mi_2x2_from_minority(p_minus: f64, down_given_minus: f64, down_given_plus: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let lg = |x: f64| x.ln() / ln2;
    // log2(1 − d) without forming 1 − d.
    let lg1m = |d: f64| (-d).ln_1p() / ln2;

    let pm = p_minus;
    let pp = 1.0 - pm;
    let j_mm = pm * down_given_minus;
    let j_mp = pm * (1.0 - down_given_minus);
    let j_pm = pp * down_given_plus;
    let col_m = j_mm + j_pm;
    let delta_pp = pm + pp * down_given_plus;
    let j_pp = 1.0 - delta_pp;

    let mut mi = 0.0;
    if j_mm > 0.0 {
        mi += j_mm * (lg(j_mm) - lg(pm) - lg(col_m));
    }
    if j_mp > 0.0 {
        mi += j_mp * (lg(j_mp) - lg(pm) - lg1m(col_m));
    }
    if j_pm > 0.0 {
        mi += j_pm * (lg(j_pm) - lg1m(pm) - lg(col_m));
    }
    if j_pp > 0.0 {
        mi += j_pp * (lg1m(delta_pp) - lg1m(pm) - lg1m(col_m));
    }
    mi.max(0.0)
}

/// Expected one-hop transmission T(k) = ⟨I(s_j^{t+1}; s_i^t)⟩_{k_j} in bits,
/// for a unit of degree k whose neighbor degrees follow the excess
/// distribution of `dist`.
pub fn transmission(
    k: usize,
    dist: &DegreeDistribution,
    rho: f64,
    params: &DynamicsParams,
) -> Result<f64> {
    let p_minus = unit_marginal_minus(k, rho, params)?;
    let excess = dist.excess()?;
    let mut t = 0.0;
    for &(m, qm) in excess.support() {
        let down_given_minus = neighbor_conditional_down(m, -1, rho, params);
        let down_given_plus = neighbor_conditional_down(m, 1, rho, params);
        t += qm * mi_2x2_from_minority(p_minus, down_given_minus, down_given_plus);
    }
    Ok(t)
}

/// First-hop information bound I1(k) = min(k·T(k), I0(k)): the uniqueness
/// bound k·T(k) can never exceed the entropy actually available at the unit.
pub fn first_hop_bound(k: usize, t_k: f64, i0: f64) -> f64 {
    (k as f64 * t_k).min(i0)
}

/// Average onward dissipation ratio Î = Σ_m q(m)·min(1, I1(m+1)/I0(m+1)).
#[derive(Debug, Clone, Copy)]
pub struct DissipationRatio {
    pub value: f64,
    /// Set when some excess-degree class had I0 = 0 and its ratio was
    /// defaulted to 1 (fully ordered class; nothing left to dissipate).
    pub degenerate: bool,
}

pub fn avg_dissipation_ratio(
    dist: &DegreeDistribution,
    rho: f64,
    params: &DynamicsParams,
) -> Result<DissipationRatio> {
    let excess = dist.excess()?;
    let mut i_hat = 0.0;
    let mut degenerate = false;
    for &(m, qm) in excess.support() {
        let k = m + 1;
        let i0 = initial_information(k, rho, params)?;
        let t_k = transmission(k, dist, rho, params)?;
        let ratio = if i0 > 0.0 {
            (first_hop_bound(k, t_k, i0) / i0).min(1.0)
        } else {
            degenerate = true;
            1.0
        };
        i_hat += qm * ratio;
    }
    Ok(DissipationRatio {
        value: i_hat,
        degenerate,
    })
}

/// Dissipation time in hops: D = (log ε − log I1) / (log c_eff + log Î),
/// with D = 0 when the first-hop information is already at or below ε.
pub fn idt_value(eps: f64, c_eff: f64, i_hat: f64, i1_upper: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps {eps} outside (0,1)")));
    }
    if i1_upper < 0.0 {
        return Err(Error::InvalidInput("negative first-hop information".into()));
    }
    let per_step = c_eff * i_hat;
    if per_step >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "dissipation ratio c_eff·Î = {per_step} >= 1: information never decays"
        )));
    }
    if per_step <= 0.0 {
        return Err(Error::InvalidInput(
            "dissipation ratio c_eff·Î must be positive".into(),
        ));
    }
    if i1_upper <= eps {
        return Ok(0.0);
    }
    Ok((eps.log2() - i1_upper.log2()) / (c_eff.log2() + i_hat.log2()))
}

/// One row of the analytic degree-indexed curve.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticRow {
    pub k: usize,
    pub i0: f64,
    pub t_k: f64,
    pub i1_upper: f64,
    pub d: f64,
}

/// Full analytic IDT curve plus the constants it was evaluated with.
#[derive(Debug, Clone)]
pub struct AnalyticCurve {
    pub rows: Vec<AnalyticRow>,
    pub eps: f64,
    pub c_eff: f64,
    pub i_hat: f64,
    pub rho: f64,
    /// Which cavity branch produced ρ.
    pub broken: bool,
    /// Some excess class had I0 = 0 (see [`DissipationRatio::degenerate`]).
    pub degenerate: bool,
}

/// Evaluate the analytic pipeline over `k_lo..=k_hi`.
pub fn analytic_curve(
    dist: &DegreeDistribution,
    params: &DynamicsParams,
    eps: f64,
    c_eff: f64,
    k_lo: usize,
    k_hi: usize,
) -> Result<AnalyticCurve> {
    if k_lo < 1 || k_hi < k_lo {
        return Err(Error::InvalidInput(format!(
            "degree range [{k_lo},{k_hi}] invalid"
        )));
    }
    let branch = cavity_branch(dist, params, CavityOptions::default())?;
    let rho = branch.solution.rho;
    let ratio = avg_dissipation_ratio(dist, rho, params)?;
    let mut rows = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        let i0 = initial_information(k, rho, params)?;
        let t_k = transmission(k, dist, rho, params)?;
        let i1 = first_hop_bound(k, t_k, i0);
        let d = idt_value(eps, c_eff, ratio.value, i1)?;
        rows.push(AnalyticRow {
            k,
            i0,
            t_k,
            i1_upper: i1,
            d,
        });
    }
    Ok(AnalyticCurve {
        rows,
        eps,
        c_eff,
        i_hat: ratio.value,
        rho,
        broken: branch.broken,
        degenerate: ratio.degenerate,
    })
}

/// Entropy in bits of `[1-p, p]`; convenience for tests and callers.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[1.0 - p, p])
}
