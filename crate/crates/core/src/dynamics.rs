//! Single-site Ising dynamics on a graph: heat-bath (Glauber) and
//! Metropolis–Hastings updates, random-scan sweeps and equilibration runs.
//!
//! A unit's state is ±1 and interacts ferromagnetically with its neighbors
//! through the pair energy −J·s_i·s_j. Both update rules satisfy detailed
//! balance with respect to the Gibbs measure exp(J Σ_(i,j) s_i s_j / T), so a
//! forward trajectory launched from an equilibrated state is statistically a
//! time-reversed trajectory arriving at it. The empirical IDT pipeline leans
//! on exactly this property.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netgen::Graph;

/// Single-site update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// Heat bath: the site resamples its state from the conditional Gibbs
    /// distribution given its neighbors; the new state ignores the old one.
    Glauber,
    /// Propose a flip, accept with probability min(1, e^(−ΔE/T)).
    Metropolis,
}

impl UpdateRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "glauber" => Ok(UpdateRule::Glauber),
            "metropolis" => Ok(UpdateRule::Metropolis),
            other => Err(Error::InvalidInput(format!(
                "unknown update rule '{other}' (expected glauber|metropolis)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::Glauber => "glauber",
            UpdateRule::Metropolis => "metropolis",
        }
    }
}

/// How long one time step of a simulated trajectory is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// One step = one sweep = n random single-site updates.
    Sweep,
    /// One step = one random single-site update.
    Site,
}

impl StepMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(StepMode::Sweep),
            "site" => Ok(StepMode::Site),
            other => Err(Error::InvalidInput(format!(
                "unknown step mode '{other}' (expected sweep|site)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepMode::Sweep => "sweep",
            StepMode::Site => "site",
        }
    }
}

/// Coupling, heat-bath temperature and update rule.
#[derive(Debug, Clone, Copy)]
pub struct DynamicsParams {
    pub coupling: f64,
    pub temperature: f64,
    pub rule: UpdateRule,
}

impl DynamicsParams {
    pub fn new(coupling: f64, temperature: f64, rule: UpdateRule) -> Result<Self> {
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coupling must be positive and finite, got {coupling}"
            )));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        Ok(Self {
            coupling,
            temperature,
            rule,
        })
    }
}

/// Probability that a heat-bath update sets the site to +1 given the sum of
/// its neighbors' states: 1 / (1 + e^(−2JΣ/T)).
pub fn glauber_up_probability(neighbor_sum: i64, params: &DynamicsParams) -> f64 {
    let x = 2.0 * params.coupling * neighbor_sum as f64 / params.temperature;
    1.0 / (1.0 + (-x).exp())
}

/// Metropolis acceptance probability min(1, e^(−ΔE/T)) for a proposed flip
/// with energy change `delta_e`.
pub fn metropolis_flip_probability(delta_e: f64, params: &DynamicsParams) -> f64 {
    (-delta_e / params.temperature).exp().min(1.0)
}

/// System state: one ±1 spin per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    states: Vec<i8>,
}

impl SpinConfig {
    pub fn new(states: Vec<i8>) -> Result<Self> {
        if states.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("spin states must be ±1".into()));
        }
        Ok(Self { states })
    }

    pub fn uniform_random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let states = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        Self { states }
    }

    pub fn all_up(n: usize) -> Self {
        Self { states: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[i8] {
        &self.states
    }

    pub fn get(&self, i: usize) -> i8 {
        self.states[i]
    }

    /// Mean spin, in [−1, 1].
    pub fn magnetization(&self) -> f64 {
        self.states.iter().map(|&s| s as i64).sum::<i64>() as f64 / self.states.len() as f64
    }

    /// Pack into the bit index used by the exact kernel: bit i set ⇔ spin i
    /// is +1.
    pub fn to_index(&self) -> usize {
        self.states
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s == 1)
            .fold(0usize, |acc, (i, _)| acc | (1 << i))
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let states = (0..n)
            .map(|i| if index >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        Self { states }
    }
}

/// Per-(graph, params) lookup tables for the inner update loop: with integer
/// neighbor sums the exponentials take only 2·k_max+1 values.
pub struct UpdateTables {
    max_degree: usize,
    /// Heat-bath p(+1 | Σ) indexed by Σ + max_degree.
    up: Vec<f64>,
    /// Metropolis acceptance for s·Σ = m, indexed by m + max_degree.
    accept: Vec<f64>,
    rule: UpdateRule,
}

impl UpdateTables {
    pub fn new(graph: &Graph, params: &DynamicsParams) -> Self {
        let max_degree = graph.degrees().into_iter().max().unwrap_or(0);
        let span = 2 * max_degree + 1;
        let mut up = Vec::with_capacity(span);
        let mut accept = Vec::with_capacity(span);
        for m in -(max_degree as i64)..=(max_degree as i64) {
            up.push(glauber_up_probability(m, params));
            // Flipping s with aligned sum s·Σ = m costs ΔE = 2·J·m.
            accept.push(metropolis_flip_probability(
                2.0 * params.coupling * m as f64,
                params,
            ));
        }
        Self {
            max_degree,
            up,
            accept,
            rule: params.rule,
        }
    }

    #[inline]
    fn neighbor_sum(config: &SpinConfig, graph: &Graph, site: usize) -> i64 {
        graph
            .neighbors(site)
            .iter()
            .map(|&j| config.states[j as usize] as i64)
            .sum()
    }

    /// One single-site update at `site`; draws exactly one uniform variate.
    #[inline]
    pub fn update_site<R: Rng>(
        &self,
        config: &mut SpinConfig,
        graph: &Graph,
        site: usize,
        rng: &mut R,
    ) {
        let sum = Self::neighbor_sum(config, graph, site);
        let u: f64 = rng.gen();
        match self.rule {
            UpdateRule::Glauber => {
                config.states[site] = if u < self.up[(sum + self.max_degree as i64) as usize] {
                    1
                } else {
                    -1
                };
            }
            UpdateRule::Metropolis => {
                let aligned = config.states[site] as i64 * sum;
                if u < self.accept[(aligned + self.max_degree as i64) as usize] {
                    config.states[site] = -config.states[site];
                }
            }
        }
    }
}

/// One sweep: exactly n single-site updates at uniformly random sites.
pub fn sweep(
    config: &mut SpinConfig,
    graph: &Graph,
    tables: &UpdateTables,
    rng: &mut ChaCha8Rng,
) {
    let n = graph.node_count();
    for _ in 0..n {
        let site = rng.gen_range(0..n);
        tables.update_site(config, graph, site, rng);
    }
}

/// Advance one trajectory step in the chosen unit.
pub fn advance(
    config: &mut SpinConfig,
    graph: &Graph,
    tables: &UpdateTables,
    mode: StepMode,
    rng: &mut ChaCha8Rng,
) {
    match mode {
        StepMode::Sweep => sweep(config, graph, tables, rng),
        StepMode::Site => {
            let site = rng.gen_range(0..graph.node_count());
            tables.update_site(config, graph, site, rng);
        }
    }
}

/// Result of an equilibration run: the final configuration plus the
/// per-sweep magnetization trace for diagnostics.
#[derive(Debug, Clone)]
pub struct Equilibration {
    pub config: SpinConfig,
    pub magnetization_trace: Vec<f64>,
}

/// Start from a uniformly random configuration and apply `sweeps` sweeps.
pub fn equilibrate(
    graph: &Graph,
    params: &DynamicsParams,
    sweeps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Equilibration> {
    if sweeps == 0 {
        return Err(Error::InvalidInput("equilibration needs >= 1 sweep".into()));
    }
    let tables = UpdateTables::new(graph, params);
    let mut config = SpinConfig::uniform_random(graph.node_count(), rng);
    let mut trace = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        sweep(&mut config, graph, &tables, rng);
        trace.push(config.magnetization());
    }
    Ok(Equilibration {
        config,
        magnetization_trace: trace,
    })
}
