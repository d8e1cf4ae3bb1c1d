//! Exact computations on small systems by full enumeration of the 2^n
//! configuration space: the one-step random-scan kernel, its stationary
//! distribution, lagged unit–system mutual information, and the conditional
//! mutual information that quantifies information flowing back to a unit
//! through its own later state.
//!
//! Everything here is the ground truth that the sampling estimators and the
//! cavity analytics are tested against. States are bitmasks: bit i set means
//! spin i is +1.

use crate::dynamics::{
    glauber_up_probability, metropolis_flip_probability, DynamicsParams, UpdateRule,
};
use crate::error::{Error, Result};
use crate::info::{entropy_of, Dist};
use crate::netgen::Graph;

/// Exact enumeration is capped at 2^14 = 16384 configurations.
pub const MAX_EXACT_SITES: usize = 14;

/// Maximum power-iteration steps for the stationary distribution.
const STATIONARY_MAX_ITER: usize = 2_000_000;
const STATIONARY_RESIDUAL: f64 = 1e-13;

/// Row-sparse one-step transition kernel over the 2^n configuration space.
/// Each row holds the diagonal entry plus one entry per site flip, sorted by
/// target state.
#[derive(Debug, Clone)]
pub struct Kernel {
    n_sites: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

/// Build the single random-scan step kernel P = (1/n) Σ_i P_i, where P_i
/// updates site i under the selected rule.
pub fn build_kernel(graph: &Graph, params: &DynamicsParams) -> Result<Kernel> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::InvalidInput("empty graph".into()));
    }
    if n > MAX_EXACT_SITES {
        return Err(Error::SizeCap(format!(
            "{n} sites exceeds the exact-enumeration cap of {MAX_EXACT_SITES}"
        )));
    }
    let dim = 1usize << n;
    let site_weight = 1.0 / n as f64;
    let mut rows = Vec::with_capacity(dim);
    for x in 0..dim {
        let mut stay = 0.0;
        let mut flips: Vec<(u32, f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let spin_i = if x >> i & 1 == 1 { 1i64 } else { -1 };
            let sum: i64 = graph
                .neighbors(i)
                .iter()
                .map(|&j| if x >> j & 1 == 1 { 1i64 } else { -1 })
                .sum();
            let p_flip = match params.rule {
                UpdateRule::Glauber => {
                    let p_up = glauber_up_probability(sum, params);
                    if spin_i == 1 {
                        1.0 - p_up
                    } else {
                        p_up
                    }
                }
                UpdateRule::Metropolis => {
                    metropolis_flip_probability(2.0 * params.coupling * (spin_i * sum) as f64, params)
                }
            };
            flips.push(((x ^ (1 << i)) as u32, site_weight * p_flip));
            stay += site_weight * (1.0 - p_flip);
        }
        flips.push((x as u32, stay));
        flips.sort_unstable_by_key(|&(y, _)| y);
        rows.push(flips);
    }
    Ok(Kernel { n_sites: n, rows })
}

impl Kernel {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Transition probability P(x→y). Zero off the single-flip structure.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.rows[x]
            .binary_search_by_key(&(y as u32), |&(t, _)| t)
            .map(|i| self.rows[x][i].1)
            .unwrap_or(0.0)
    }

    pub fn row(&self, x: usize) -> &[(u32, f64)] {
        &self.rows[x]
    }

    /// Row-vector product v ← vP.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (x, row) in self.rows.iter().enumerate() {
            let mass = v[x];
            if mass == 0.0 {
                continue;
            }
            for &(y, p) in row {
                out[y as usize] += mass * p;
            }
        }
        out
    }

    /// Maximum row-sum deviation from 1.
    pub fn row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Gibbs measure π(x) ∝ exp(J Σ_(i,j)∈E s_i s_j / T) by direct evaluation.
/// Both update rules are reversible with respect to it, so this is the
/// stationary law of the kernel (checked exactly in the test suite).
pub fn boltzmann_distribution(graph: &Graph, params: &DynamicsParams) -> Result<Dist> {
    let n = graph.node_count();
    if n > MAX_EXACT_SITES {
        return Err(Error::SizeCap(format!(
            "{n} sites exceeds the exact-enumeration cap of {MAX_EXACT_SITES}"
        )));
    }
    let dim = 1usize << n;
    let edges = graph.edges();
    let mut logw = Vec::with_capacity(dim);
    for x in 0..dim {
        let mut align = 0i64;
        for &(u, v) in &edges {
            let su = if x >> u & 1 == 1 { 1i64 } else { -1 };
            let sv = if x >> v & 1 == 1 { 1i64 } else { -1 };
            align += su * sv;
        }
        logw.push(params.coupling * align as f64 / params.temperature);
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    Dist::new(weights.into_iter().map(|w| w / z).collect())
}

/// Stationary distribution by power iteration from the uniform start, to an
/// L1 residual of 1e-13.
pub fn stationary_distribution(kernel: &Kernel) -> Result<Dist> {
    let dim = kernel.dim();
    let mut v = vec![1.0 / dim as f64; dim];
    for _ in 0..STATIONARY_MAX_ITER {
        let next = kernel.apply(&v);
        let residual: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if residual < STATIONARY_RESIDUAL {
            // Kill accumulated rounding before constructing the Dist.
            let total: f64 = v.iter().sum();
            return Dist::new(v.into_iter().map(|p| p / total).collect());
        }
    }
    Err(Error::Convergence(format!(
        "power iteration still above residual {STATIONARY_RESIDUAL} after \
         {STATIONARY_MAX_ITER} steps"
    )))
}

/// Largest detailed-balance defect max_{x,y} |π(x)P(x,y) − π(y)P(y,x)|.
pub fn detailed_balance_residual(kernel: &Kernel, pi: &Dist) -> f64 {
    let p = pi.probs();
    let mut worst = 0.0f64;
    for (x, row) in kernel.rows.iter().enumerate() {
        for &(y, pxy) in row {
            let back = kernel.entry(y as usize, x);
            worst = worst.max((p[x] * pxy - p[y as usize] * back).abs());
        }
    }
    worst
}

/// L1 distance ||πP − π||.
pub fn stationarity_residual(kernel: &Kernel, pi: &Dist) -> f64 {
    kernel
        .apply(pi.probs())
        .iter()
        .zip(pi.probs())
        .map(|(a, b)| (a - b).abs())
        .sum()
}

fn mi_from_split(w_minus: &[f64], w_plus: &[f64]) -> f64 {
    let p_minus: f64 = w_minus.iter().sum();
    let p_plus: f64 = w_plus.iter().sum();
    let marg: Vec<f64> = w_minus.iter().zip(w_plus).map(|(a, b)| a + b).collect();
    let mut joint_entropy = entropy_of(w_minus) + entropy_of(w_plus);
    let h_unit = entropy_of(&[p_minus, p_plus]);
    let h_sys = entropy_of(&marg);
    // Guard against a -0.0 sneaking in from rounding.
    if joint_entropy == 0.0 {
        joint_entropy = 0.0;
    }
    h_unit + h_sys - joint_entropy
}

/// Restrict π to the two values of `unit`, giving the unnormalized vectors
/// whose evolution tracks the joint p(s_unit^t = a, S^{t+d} = y).
fn split_by_unit(pi: &Dist, unit: usize) -> (Vec<f64>, Vec<f64>) {
    let p = pi.probs();
    let mut w_minus = vec![0.0; p.len()];
    let mut w_plus = vec![0.0; p.len()];
    for (x, &mass) in p.iter().enumerate() {
        if x >> unit & 1 == 1 {
            w_plus[x] = mass;
        } else {
            w_minus[x] = mass;
        }
    }
    (w_minus, w_plus)
}

/// Exact I(S^{t+lag}; s_unit^t) in bits at stationarity, with the lag counted
/// in random-scan steps (one sweep = n steps).
pub fn lagged_unit_mi(kernel: &Kernel, pi: &Dist, unit: usize, lag: usize) -> f64 {
    lagged_unit_mi_series(kernel, pi, unit, &[lag])[0]
}

/// [`lagged_unit_mi`] evaluated at several (ascending) lags, sharing the
/// intermediate kernel powers.
pub fn lagged_unit_mi_series(
    kernel: &Kernel,
    pi: &Dist,
    unit: usize,
    lags: &[usize],
) -> Vec<f64> {
    debug_assert!(lags.windows(2).all(|w| w[0] <= w[1]));
    let (mut w_minus, mut w_plus) = split_by_unit(pi, unit);
    let mut out = Vec::with_capacity(lags.len());
    let mut step = 0;
    for &lag in lags {
        while step < lag {
            w_minus = kernel.apply(&w_minus);
            w_plus = kernel.apply(&w_plus);
            step += 1;
        }
        out.push(mi_from_split(&w_minus, &w_plus));
    }
    out
}

/// Per-unit distribution at a lag: evolve a point mass at `start` and
/// marginalize onto `unit`. Returns rows for lags 0..=max_lag where each row
/// is `[p(-1), p(+1)]`; lags are counted in random-scan steps.
pub fn conditional_unit_series(
    kernel: &Kernel,
    start: usize,
    unit: usize,
    lags: &[usize],
) -> Vec<[f64; 2]> {
    debug_assert!(lags.windows(2).all(|w| w[0] <= w[1]));
    let mut v = vec![0.0; kernel.dim()];
    v[start] = 1.0;
    let mut out = Vec::with_capacity(lags.len());
    let mut step = 0;
    for &lag in lags {
        while step < lag {
            v = kernel.apply(&v);
            step += 1;
        }
        let mut p = [0.0; 2];
        for (x, &mass) in v.iter().enumerate() {
            p[(x >> unit & 1) as usize] += mass;
        }
        out.push(p);
    }
    out
}

/// What "two time steps" means for [`backflow_conditional_mi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackflowLag {
    /// `steps` applications of the random-scan kernel. The literal reading
    /// of two sweeps is `steps = 2n`; note that random scan leaves every
    /// site un-updated with probability ≈ e^{-2} over that window, and the
    /// resulting self-copy channel contributes to the conditional MI.
    RandomScan { steps: usize },
    /// `hops` synchronous heat-bath updates of every unit: the
    /// one-update-per-unit-per-step cadence of the hop-counting analysis.
    /// Uses heat-bath conditionals regardless of `params.rule`.
    Synchronous { hops: usize },
}

impl BackflowLag {
    /// The default reading of "two time steps" on an n-unit system:
    /// 2n random-scan kernel applications.
    pub fn two_sweeps(n_units: usize) -> Self {
        BackflowLag::RandomScan { steps: 2 * n_units }
    }
}

fn star_center(graph: &Graph) -> Result<usize> {
    let n = graph.node_count();
    let center = (0..n)
        .max_by_key(|&i| graph.degree(i))
        .expect("nonempty graph");
    if n < 2
        || graph.degree(center) != n - 1
        || (0..n).filter(|&i| i != center).any(|i| graph.degree(i) != 1)
    {
        return Err(Error::InvalidInput(
            "backflow CMI is defined on a star graph".into(),
        ));
    }
    Ok(center)
}

/// Exact conditional mutual information I(s_c^t ; s_c^{t+2} | all leaf
/// states at t+2) on a star, from stationarity, with the two-step window
/// specified by `lag`.
pub fn backflow_conditional_mi(
    graph: &Graph,
    params: &DynamicsParams,
    lag: BackflowLag,
) -> Result<f64> {
    let center = star_center(graph)?;
    match lag {
        BackflowLag::RandomScan { steps } => backflow_random_scan(graph, params, center, steps),
        BackflowLag::Synchronous { hops } => backflow_synchronous(graph, params, center, hops),
    }
}

fn cmi_from_cells(cells: &[[[f64; 2]; 2]]) -> f64 {
    let mut cmi = 0.0;
    for cell in cells {
        let p_b: f64 = cell.iter().flatten().sum();
        if p_b <= 0.0 {
            continue;
        }
        for a in 0..2 {
            for c in 0..2 {
                let pac = cell[a][c];
                if pac <= 0.0 {
                    continue;
                }
                let pa = cell[a][0] + cell[a][1];
                let pc = cell[0][c] + cell[1][c];
                cmi += pac * (pac * p_b / (pa * pc)).log2();
            }
        }
    }
    cmi.max(0.0)
}

fn group_by_leaves(
    center: usize,
    dim: usize,
    w_minus: &[f64],
    w_plus: &[f64],
) -> Vec<[[f64; 2]; 2]> {
    let mut cells = vec![[[0.0f64; 2]; 2]; dim >> 1];
    for y in 0..dim {
        let c = (y >> center & 1) as usize;
        let low = y & ((1 << center) - 1);
        let high = y >> (center + 1);
        let b = (high << center) | low;
        cells[b][0][c] += w_minus[y];
        cells[b][1][c] += w_plus[y];
    }
    cells
}

fn backflow_random_scan(
    graph: &Graph,
    params: &DynamicsParams,
    center: usize,
    steps: usize,
) -> Result<f64> {
    let kernel = build_kernel(graph, params)?;
    let pi = boltzmann_distribution(graph, params)?;
    let (mut w_minus, mut w_plus) = split_by_unit(&pi, center);
    for _ in 0..steps {
        w_minus = kernel.apply(&w_minus);
        w_plus = kernel.apply(&w_plus);
    }
    Ok(cmi_from_cells(&group_by_leaves(
        center,
        kernel.dim(),
        &w_minus,
        &w_plus,
    )))
}

/// Closed-form synchronous variant: leaves are exchangeable, so the joint
/// over (s_c^t, s_c^{t+2}, up-leaf count at t+2) follows from binomial
/// mixtures along the two chains
/// a → leaves(t+1) → c  and  leaves(t) → b = center(t+1) → leaves(t+2).
fn backflow_synchronous(
    graph: &Graph,
    params: &DynamicsParams,
    center: usize,
    hops: usize,
) -> Result<f64> {
    if hops != 2 {
        return Err(Error::InvalidInput(
            "synchronous backflow is defined for exactly two hops".into(),
        ));
    }
    let k = graph.node_count() - 1;
    if k > 512 {
        return Err(Error::SizeCap("synchronous backflow capped at 512 leaves".into()));
    }
    let spin = |bit: usize| 2.0 * bit as f64 - 1.0;
    let leaf_up = |a: usize| glauber_up_probability(if a == 1 { 1 } else { -1 }, params);
    let center_up = |j: usize| glauber_up_probability(2 * j as i64 - k as i64, params);

    let mut ln_choose = vec![0.0f64; k + 1];
    for j in 1..=k {
        ln_choose[j] = ln_choose[j - 1] + ((k - j + 1) as f64).ln() - (j as f64).ln();
    }
    let binom = |p: f64| -> Vec<f64> {
        if p <= 0.0 {
            let mut v = vec![0.0; k + 1];
            v[0] = 1.0;
            return v;
        }
        if p >= 1.0 {
            let mut v = vec![0.0; k + 1];
            v[k] = 1.0;
            return v;
        }
        (0..=k)
            .map(|j| (ln_choose[j] + j as f64 * p.ln() + (k - j) as f64 * (1.0 - p).ln()).exp())
            .collect()
    };

    // Stationary joint over (a = center, j0 = up-leaf count):
    // π(a, j0) ∝ C(k, j0)·exp((J/T)·s_a·(2j0 − k)).
    let beta = params.coupling / params.temperature;
    let mut pi_aj = vec![[0.0f64; 2]; k + 1];
    let mut z = 0.0;
    for (j0, row) in pi_aj.iter_mut().enumerate() {
        for (a, slot) in row.iter_mut().enumerate() {
            let w = (ln_choose[j0] + beta * spin(a) * (2.0 * j0 as f64 - k as f64)).exp();
            *slot = w;
            z += w;
        }
    }
    for row in &mut pi_aj {
        row[0] /= z;
        row[1] /= z;
    }

    // p(a, b): center at t+1 resamples from the leaf count at t.
    let mut p_ab = [[0.0f64; 2]; 2];
    for (j0, row) in pi_aj.iter().enumerate() {
        let up = center_up(j0);
        for a in 0..2 {
            p_ab[a][1] += row[a] * up;
            p_ab[a][0] += row[a] * (1.0 - up);
        }
    }

    // p(c | a): leaves resample given a, then the center resamples.
    let mut p_c_given_a = [[0.0f64; 2]; 2];
    for (a, row) in p_c_given_a.iter_mut().enumerate() {
        for (j1, &w) in binom(leaf_up(a)).iter().enumerate() {
            let up = center_up(j1);
            row[1] += w * up;
            row[0] += w * (1.0 - up);
        }
    }

    // Joint over (a, c, j2), with the leaf pattern reduced to its up count
    // by exchangeability. Conditioned on a, the t+1 leaves (hence c) and
    // the t+1 center b (hence the t+2 leaves) are independent.
    let leaf_pmf_given_b = [binom(leaf_up(0)), binom(leaf_up(1))];
    let mut cells = vec![[[0.0f64; 2]; 2]; k + 1];
    for (j2, cell) in cells.iter_mut().enumerate() {
        for a in 0..2 {
            let via_b: f64 = (0..2).map(|b| p_ab[a][b] * leaf_pmf_given_b[b][j2]).sum();
            for c in 0..2 {
                cell[a][c] = p_c_given_a[a][c] * via_b;
            }
        }
    }
    Ok(cmi_from_cells(&cells))
}

/// Conditional law of site `site` after one forced update, given the current
/// configuration `x`: returns p(new state = +1).
fn site_update_up_probability(
    graph: &Graph,
    params: &DynamicsParams,
    x: usize,
    site: usize,
) -> f64 {
    let sum: i64 = graph
        .neighbors(site)
        .iter()
        .map(|&j| if x >> j & 1 == 1 { 1i64 } else { -1 })
        .sum();
    match params.rule {
        UpdateRule::Glauber => glauber_up_probability(sum, params),
        UpdateRule::Metropolis => {
            let spin = if x >> site & 1 == 1 { 1i64 } else { -1 };
            let acc =
                metropolis_flip_probability(2.0 * params.coupling * (spin * sum) as f64, params);
            if spin == 1 {
                1.0 - acc
            } else {
                acc
            }
        }
    }
}

/// Exact I(s_j^{t+1}; s_i^t) when site j performs exactly one update from the
/// stationary state: the per-hop transmission the analytic pipeline models.
pub fn one_hop_pair_mi(
    graph: &Graph,
    params: &DynamicsParams,
    pi: &Dist,
    i: usize,
    j: usize,
) -> f64 {
    let mut joint = [[0.0f64; 2]; 2];
    for (x, &mass) in pi.probs().iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let a = (x >> i & 1) as usize;
        let up = site_update_up_probability(graph, params, x, j);
        joint[a][1] += mass * up;
        joint[a][0] += mass * (1.0 - up);
    }
    let rows = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let cols = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    entropy_of(&rows) + entropy_of(&cols)
        - entropy_of(&[joint[0][0], joint[0][1], joint[1][0], joint[1][1]])
}

/// On a star, update every leaf exactly once (synchronously) from the
/// stationary state and return the pair
/// `(I(all new leaf states; s_center^t), Σ_j I(s_j^{t+1}; s_center^t))`.
///
/// Given the center state the leaf updates are conditionally independent, so
/// the first component can never exceed the second.
pub fn star_onehop_neighborhood_mi(
    graph: &Graph,
    params: &DynamicsParams,
    pi: &Dist,
) -> Result<(f64, f64)> {
    let n = graph.node_count();
    let center = (0..n)
        .max_by_key(|&i| graph.degree(i))
        .expect("nonempty graph");
    if graph.degree(center) != n - 1 {
        return Err(Error::InvalidInput("expected a star graph".into()));
    }
    let leaves: Vec<usize> = (0..n).filter(|&i| i != center).collect();
    let k = leaves.len();

    // Joint over (center state a, new-leaf pattern), plus per-leaf joints.
    let mut joint = vec![[0.0f64; 2]; 1 << k];
    let mut pair_joints = vec![[[0.0f64; 2]; 2]; k];
    let mut up = vec![0.0f64; k];
    for (x, &mass) in pi.probs().iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let a = (x >> center & 1) as usize;
        for (li, &leaf) in leaves.iter().enumerate() {
            up[li] = site_update_up_probability(graph, params, x, leaf);
            pair_joints[li][a][1] += mass * up[li];
            pair_joints[li][a][0] += mass * (1.0 - up[li]);
        }
        for pattern in 0..(1usize << k) {
            let mut p = mass;
            for (li, &u) in up.iter().enumerate() {
                p *= if pattern >> li & 1 == 1 { u } else { 1.0 - u };
            }
            joint[pattern][a] += p;
        }
    }

    let mut rows = [0.0f64; 2];
    let mut cols = vec![0.0f64; 1 << k];
    let mut flat = Vec::with_capacity(2 << k);
    for (pattern, cell) in joint.iter().enumerate() {
        rows[0] += cell[0];
        rows[1] += cell[1];
        cols[pattern] = cell[0] + cell[1];
        flat.push(cell[0]);
        flat.push(cell[1]);
    }
    let neighborhood = entropy_of(&rows) + entropy_of(&cols) - entropy_of(&flat);
    let per_leaf_sum = (0..k)
        .map(|li| {
            let j = &pair_joints[li];
            let r = [j[0][0] + j[0][1], j[1][0] + j[1][1]];
            let c = [j[0][0] + j[1][0], j[0][1] + j[1][1]];
            entropy_of(&r) + entropy_of(&c) - entropy_of(&[j[0][0], j[0][1], j[1][0], j[1][1]])
        })
        .sum();
    Ok((neighborhood, per_leaf_sum))
}
