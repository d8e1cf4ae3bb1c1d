//! Configuration-model random graphs with prescribed degree distributions,
//! plus the degree statistics (excess degree distribution, clustering) the
//! rest of the crate needs.
//!
//! Graphs are simple and undirected: no self-loops, no parallel edges. The
//! builder realizes a degree sequence by stub matching and then repairs
//! self-loops and duplicates with uniform double-edge swaps, which preserve
//! the degree sequence exactly. A stuck repair (possible for tiny sequences
//! where every swap partner collides) falls back to re-shuffling the stubs
//! for a bounded number of rounds before reporting the sequence unrealizable.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
/// Resampling budget for odd-parity degree sequences.
const PARITY_ATTEMPTS: usize = 1000;
/// Double-edge-swap budget per assembly round, in units of |E|.
const SWAP_BUDGET_PER_EDGE: usize = 100;
/// Full stub re-shuffle rounds before giving up.
const ASSEMBLY_ROUNDS: usize = 20;

/// Probability mass on integer degrees, with its mean cached.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    support: Vec<(usize, f64)>,
    cdf: Vec<f64>,
    mean: f64,
}

impl DegreeDistribution {
    /// Build from `(degree, mass)` pairs. Masses must be non-negative and sum
    /// to 1 within 1e-12; the stored masses are renormalized exactly.
    pub fn new(pmf: &[(usize, f64)]) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidInput("empty degree support".into()));
        }
        let mut support: Vec<(usize, f64)> = pmf.to_vec();
        support.sort_by_key(|&(k, _)| k);
        for w in support.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate degree {} in support",
                    w[0].0
                )));
            }
        }
        if support.iter().any(|&(_, p)| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidInput(
                "degree masses must be finite and non-negative".into(),
            ));
        }
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "degree masses sum to {total}, not 1 within {NORM_TOL}"
            )));
        }
        for (_, p) in &mut support {
            *p /= total;
        }
        support.retain(|&(_, p)| p > 0.0);
        if support.is_empty() {
            return Err(Error::InvalidInput("all-zero degree masses".into()));
        }
        let mean = support.iter().map(|&(k, p)| k as f64 * p).sum();
        let mut acc = 0.0;
        let cdf = support
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { support, cdf, mean })
    }

    /// Truncated power law p(k) ∝ k^−gamma on `k_min ..= k_max`.
    pub fn power_law(gamma: f64, k_min: usize, k_max: usize) -> Result<Self> {
        if k_min < 1 || k_max < k_min {
            return Err(Error::InvalidInput(format!(
                "power-law support [{k_min},{k_max}] invalid"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInput("gamma must be finite".into()));
        }
        let weights: Vec<f64> = (k_min..=k_max).map(|k| (k as f64).powf(-gamma)).collect();
        let total: f64 = weights.iter().sum();
        let pmf: Vec<(usize, f64)> = (k_min..=k_max)
            .zip(weights.iter().map(|w| w / total))
            .collect();
        Self::new(&pmf)
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn min_degree(&self) -> usize {
        self.support[0].0
    }

    pub fn max_degree(&self) -> usize {
        self.support[self.support.len() - 1].0
    }

    /// Mass at degree `k` (0 when outside the support).
    pub fn mass(&self, k: usize) -> f64 {
        self.support
            .binary_search_by_key(&k, |&(d, _)| d)
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    /// One inverse-CDF draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c < u);
        self.support[idx.min(self.support.len() - 1)].0
    }

    /// Excess degree distribution q(m) = (m+1)·p(m+1) / ⟨k⟩: the law of the
    /// number of further edges found on a unit reached by following a
    /// uniformly random edge end.
    pub fn excess(&self) -> Result<DegreeDistribution> {
        if self.mean <= 0.0 {
            return Err(Error::InvalidInput(
                "excess distribution undefined for zero mean degree".into(),
            ));
        }
        let pmf: Vec<(usize, f64)> = self
            .support
            .iter()
            .filter(|&&(k, _)| k >= 1)
            .map(|&(k, p)| (k - 1, k as f64 * p / self.mean))
            .collect();
        Self::new(&pmf)
    }
}

/// Simple undirected graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Build from an edge list over nodes `0..n`. Rejects self-loops,
    /// duplicate edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u},{v})")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { adjacency })
    }

    /// Path graph 0—1—…—(n−1).
    pub fn path(n: usize) -> Self {
        let edges: Vec<(u32, u32)> = (0..n.saturating_sub(1) as u32).map(|i| (i, i + 1)).collect();
        Self::from_edges(n, &edges).expect("path edges are simple")
    }

    /// Star with node 0 at the center and `leaves` leaf nodes.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<(u32, u32)> = (1..=leaves as u32).map(|v| (0, v)).collect();
        Self::from_edges(leaves + 1, &edges).expect("star edges are simple")
    }

    /// Cycle on n ≥ 3 nodes.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        let mut edges: Vec<(u32, u32)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
        edges.push((0, n as u32 - 1));
        Self::from_edges(n, &edges).expect("cycle edges are simple")
    }

    /// Complete graph on n nodes.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, &edges).expect("complete edges are simple")
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(|a| a.len()).collect()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            for &v in nbrs {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    /// Structural invariants: symmetry, sortedness, no self-loops or
    /// duplicates. Cheap enough to run after every build.
    pub fn validate(&self) -> Result<()> {
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            for w in nbrs.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidInput(format!(
                        "adjacency of {u} not strictly sorted"
                    )));
                }
            }
            for &v in nbrs {
                if v as usize == u {
                    return Err(Error::InvalidInput(format!("self-loop at {u}")));
                }
                if self.adjacency[v as usize].binary_search(&(u as u32)).is_err() {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric edge ({u},{v})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Global clustering coefficient: 3·(triangles) / (paths of length two).
    pub fn global_clustering(&self) -> f64 {
        let mut closed = 0u64;
        let mut triads = 0u64;
        for nbrs in &self.adjacency {
            let d = nbrs.len() as u64;
            triads += d * d.saturating_sub(1) / 2;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if self.adjacency[a as usize].binary_search(&b).is_ok() {
                        closed += 1;
                    }
                }
            }
        }
        if triads == 0 {
            0.0
        } else {
            // Each triangle is counted once per corner, i.e. three times.
            closed as f64 / triads as f64
        }
    }
}

/// Draw `n` i.i.d. degrees from `dist`, then resample uniformly chosen
/// entries until the total is even so the sequence can be stub-matched.
///
/// Fails when the support makes even parity unreachable (all-odd support
/// with odd `n`) after a bounded number of resampling attempts.
pub fn sample_degree_sequence<R: Rng>(
    dist: &DegreeDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2 nodes, got {n}")));
    }
    if dist.min_degree() < 1 {
        return Err(Error::InvalidInput(
            "degree support must exclude isolated nodes (k >= 1)".into(),
        ));
    }
    let mut degrees: Vec<usize> = (0..n).map(|_| dist.sample(rng)).collect();
    let mut sum: usize = degrees.iter().sum();
    let mut attempts = 0;
    while sum % 2 == 1 {
        if attempts >= PARITY_ATTEMPTS {
            return Err(Error::Unrealizable(format!(
                "degree sum stayed odd after {PARITY_ATTEMPTS} resampling attempts \
                 (all-odd support with odd n has no even-sum realization)"
            )));
        }
        let idx = rng.gen_range(0..n);
        let fresh = dist.sample(rng);
        sum = sum - degrees[idx] + fresh;
        degrees[idx] = fresh;
        attempts += 1;
    }
    Ok(degrees)
}

fn canon(u: u32, v: u32) -> (u32, u32) {
    (u.min(v), u.max(v))
}

/// Realize a degree sequence as a simple graph by stub matching plus
/// double-edge-swap repair. Deterministic given the RNG stream.
pub fn build_configuration_graph<R: Rng>(degrees: &[usize], rng: &mut R) -> Result<Graph> {
    let n = degrees.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two nodes".into()));
    }
    let sum: usize = degrees.iter().sum();
    if sum % 2 == 1 {
        return Err(Error::InvalidInput("degree sum must be even".into()));
    }
    if sum == 0 {
        return Err(Error::InvalidInput("degree sum must be positive".into()));
    }
    let max_deg = *degrees.iter().max().expect("nonempty");
    if max_deg >= n {
        return Err(Error::Unrealizable(format!(
            "degree {max_deg} impossible in a simple graph on {n} nodes"
        )));
    }
    if max_deg >= sum - max_deg + 1 {
        return Err(Error::Unrealizable(format!(
            "degree {max_deg} exceeds the stubs available on other nodes"
        )));
    }

    let mut stubs: Vec<u32> = Vec::with_capacity(sum);
    for (node, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat(node as u32).take(d));
    }

    for _round in 0..ASSEMBLY_ROUNDS {
        stubs.shuffle(rng);
        if let Some(edges) = repair_multigraph(&stubs, rng) {
            let graph = Graph::from_edges(n, &edges)?;
            debug_assert_eq!(graph.degrees(), degrees.to_vec());
            return Ok(graph);
        }
    }
    Err(Error::Unrealizable(format!(
        "could not reach a simple graph after {ASSEMBLY_ROUNDS} rounds of \
         stub matching and double-edge swaps"
    )))
}

/// Pair consecutive stubs into edges, then swap away self-loops and
/// duplicates. Returns None when the swap budget is exhausted.
fn repair_multigraph<R: Rng>(stubs: &[u32], rng: &mut R) -> Option<Vec<(u32, u32)>> {
    let m = stubs.len() / 2;
    let mut edges: Vec<(u32, u32)> = (0..m).map(|i| (stubs[2 * i], stubs[2 * i + 1])).collect();
    let mut occupancy: HashMap<(u32, u32), u32> = HashMap::with_capacity(m);
    for &(u, v) in &edges {
        *occupancy.entry(canon(u, v)).or_insert(0) += 1;
    }
    let is_bad = |e: (u32, u32), occ: &HashMap<(u32, u32), u32>| {
        e.0 == e.1 || occ[&canon(e.0, e.1)] > 1
    };
    let mut queue: Vec<usize> = (0..m).filter(|&i| is_bad(edges[i], &occupancy)).collect();

    let mut budget = SWAP_BUDGET_PER_EDGE * m;
    while let Some(&a) = queue.last() {
        if !is_bad(edges[a], &occupancy) {
            queue.pop();
            continue;
        }
        if budget == 0 {
            return None;
        }
        budget -= 1;

        let b = rng.gen_range(0..m);
        if b == a {
            continue;
        }
        let (u, v) = edges[a];
        let (mut x, mut y) = edges[b];
        if rng.gen::<bool>() {
            std::mem::swap(&mut x, &mut y);
        }
        // Proposed replacement: (u,x) and (v,y).
        if u == x || v == y {
            continue;
        }
        let e1 = canon(u, x);
        let e2 = canon(v, y);
        // Zero-count entries are removed, so presence means occupied.
        if e1 == e2 || occupancy.contains_key(&e1) || occupancy.contains_key(&e2) {
            continue;
        }

        for old in [canon(u, v), canon(edges[b].0, edges[b].1)] {
            let c = occupancy.get_mut(&old).expect("old edge tracked");
            *c -= 1;
            if *c == 0 {
                occupancy.remove(&old);
            }
        }
        *occupancy.entry(e1).or_insert(0) += 1;
        *occupancy.entry(e2).or_insert(0) += 1;
        edges[a] = (u, x);
        edges[b] = (v, y);
        queue.pop();
        // The partner edge may have been a duplicate copy; recheck it.
        if is_bad(edges[b], &occupancy) {
            queue.push(b);
        }
    }
    Some(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamDomain};
    use approx::assert_abs_diff_eq;

    #[test]
    fn degenerate_distribution_sequence() {
        let dist = DegreeDistribution::new(&[(2, 1.0)]).unwrap();
        let mut rng = substream(1, StreamDomain::Test, 0);
        let seq = sample_degree_sequence(&dist, 5, &mut rng).unwrap();
        assert_eq!(seq, vec![2, 2, 2, 2, 2]);
    }

    #[test]
    fn parity_locked_sequence_errors() {
        // All-odd support with odd n: 3*3 is odd and resampling cannot fix it.
        assert_eq!(3 * 3 % 2, 1);
        let dist = DegreeDistribution::new(&[(3, 1.0)]).unwrap();
        let mut rng = substream(2, StreamDomain::Test, 0);
        assert!(matches!(
            sample_degree_sequence(&dist, 3, &mut rng),
            Err(Error::Unrealizable(_))
        ));
    }

    #[test]
    fn sample_needs_two_nodes() {
        let dist = DegreeDistribution::new(&[(2, 1.0)]).unwrap();
        let mut rng = substream(3, StreamDomain::Test, 0);
        assert!(sample_degree_sequence(&dist, 1, &mut rng).is_err());
    }

    #[test]
    fn power_law_sequence_matches_pmf_chi_square() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let n = 6000;
        let k_max = (n as f64).sqrt().ceil() as usize;
        let dist = DegreeDistribution::power_law(1.6, 1, k_max).unwrap();
        let mut rng = substream(4, StreamDomain::Test, 0);
        let seq = sample_degree_sequence(&dist, n, &mut rng).unwrap();
        assert!(seq.iter().all(|&k| k <= dist.max_degree()));

        // Bin tail degrees together so every expected count is >= 5.
        let mut hist = vec![0u64; k_max + 1];
        for &k in &seq {
            hist[k] += 1;
        }
        let mut chi2 = 0.0;
        let mut df: i64 = -1;
        let mut obs_tail = 0.0;
        let mut exp_tail = 0.0;
        for &(k, p) in dist.support() {
            let expected = p * n as f64;
            if expected >= 5.0 && exp_tail == 0.0 {
                chi2 += (hist[k] as f64 - expected).powi(2) / expected;
                df += 1;
            } else {
                obs_tail += hist[k] as f64;
                exp_tail += expected;
            }
        }
        if exp_tail > 0.0 {
            chi2 += (obs_tail - exp_tail).powi(2) / exp_tail;
            df += 1;
        }
        let crit = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99);
        assert!(chi2 < crit, "chi2 {chi2} >= critical {crit} (df {df})");
    }

    #[test]
    fn two_ones_make_a_single_edge() {
        let mut rng = substream(5, StreamDomain::Test, 0);
        let g = build_configuration_graph(&[1, 1], &mut rng).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn all_twos_make_a_triangle() {
        for s in 0..10 {
            let mut rng = substream(6, StreamDomain::Test, s);
            let g = build_configuration_graph(&[2, 2, 2], &mut rng).unwrap();
            assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        }
    }

    #[test]
    fn all_threes_on_four_nodes_make_k4() {
        // K4 is the unique simple 3-regular graph on 4 nodes: every node must
        // link to all three others.
        for s in 0..10 {
            let mut rng = substream(7, StreamDomain::Test, s);
            let g = build_configuration_graph(&[3, 3, 3, 3], &mut rng).unwrap();
            assert_eq!(g.edges(), Graph::complete(4).edges());
        }
    }

    #[test]
    fn unrealizable_sequences_rejected() {
        let mut rng = substream(8, StreamDomain::Test, 0);
        assert!(build_configuration_graph(&[3, 1], &mut rng).is_err());
        assert!(build_configuration_graph(&[2, 2], &mut rng).is_err());
        assert!(build_configuration_graph(&[1, 1, 1], &mut rng).is_err());
    }

    #[test]
    fn built_graph_realizes_sequence_and_invariants() {
        let dist = DegreeDistribution::power_law(1.6, 1, 32).unwrap();
        let mut rng = substream(9, StreamDomain::Test, 0);
        let degrees = sample_degree_sequence(&dist, 500, &mut rng).unwrap();
        let g = build_configuration_graph(&degrees, &mut rng).unwrap();
        g.validate().unwrap();
        assert_eq!(g.degrees(), degrees);
    }

    #[test]
    fn large_power_law_graph_is_locally_tree_like() {
        let n = 6000;
        let dist = DegreeDistribution::power_law(1.6, 1, (n as f64).sqrt().ceil() as usize)
            .unwrap();
        let mut rng = substream(10, StreamDomain::Test, 0);
        let degrees = sample_degree_sequence(&dist, n, &mut rng).unwrap();
        let g = build_configuration_graph(&degrees, &mut rng).unwrap();
        g.validate().unwrap();
        assert!(g.global_clustering() < 0.05);
    }

    #[test]
    fn excess_distribution_closed_form() {
        let dist = DegreeDistribution::new(&[(1, 0.5), (3, 0.5)]).unwrap();
        assert_abs_diff_eq!(dist.mean(), 2.0, epsilon = 1e-15);
        let q = dist.excess().unwrap();
        assert_abs_diff_eq!(q.mass(0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(q.mass(2), 0.75, epsilon = 1e-12);

        let regular = DegreeDistribution::new(&[(2, 1.0)]).unwrap();
        let q = regular.excess().unwrap();
        assert_abs_diff_eq!(q.mass(1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn excess_normalizes_rounded_input() {
        // Masses that only sum to 1 up to floating rounding still produce a
        // q summing to exactly 1.
        let third = 1.0 / 3.0;
        let dist = DegreeDistribution::new(&[(1, third), (2, third), (5, third)]).unwrap();
        let q = dist.excess().unwrap();
        let total: f64 = q.support().iter().map(|&(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn excess_matches_edge_end_frequencies_on_built_graph() {
        let n = 6000;
        let dist = DegreeDistribution::power_law(1.6, 1, 77).unwrap();
        let q = dist.excess().unwrap();
        let mut rng = substream(11, StreamDomain::Test, 0);
        let degrees = sample_degree_sequence(&dist, n, &mut rng).unwrap();
        let g = build_configuration_graph(&degrees, &mut rng).unwrap();

        // Exhaustive edge-end census: each end of each edge contributes the
        // degree-minus-one of the node it lands on.
        let ends = 2.0 * g.edge_count() as f64;
        let mut freq = vec![0.0; 77];
        for (u, v) in g.edges() {
            freq[g.degree(u as usize) - 1] += 1.0 / ends;
            freq[g.degree(v as usize) - 1] += 1.0 / ends;
        }
        // freq(m) = (m+1)·C_{m+1} / Σ_k k·C_k with multinomial counts C_k,
        // so the sampling variance needs the full delta method: numerator,
        // heavy-tailed denominator, and their covariance.
        let nf = n as f64;
        let mean_k = dist.mean();
        let mean_k2: f64 = dist.support().iter().map(|&(k, p)| (k * k) as f64 * p).sum();
        for m in 0..77 {
            let qm = q.mass(m);
            let pk = dist.mass(m + 1);
            if pk * nf < 10.0 {
                continue;
            }
            let var_c = nf * pk * (1.0 - pk);
            let var_t = nf * (mean_k2 - mean_k * mean_k);
            let cov_ct = nf * pk * ((m + 1) as f64 - mean_k);
            let r = pk / mean_k;
            let var_freq = ((m + 1) as f64 / (nf * mean_k)).powi(2)
                * (var_c + r * r * var_t - 2.0 * r * cov_ct);
            let se = var_freq.sqrt();
            assert!(
                (freq[m] - qm).abs() < 3.0 * se,
                "excess mass mismatch at m={m}: {} vs {qm} (se {se})",
                freq[m]
            );
        }
    }

    #[test]
    fn graph_constructors() {
        let p = Graph::path(4);
        assert_eq!(p.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        let s = Graph::star(3);
        assert_eq!(s.degree(0), 3);
        assert_eq!(s.edges().len(), 3);
        let c = Graph::cycle(4);
        assert_eq!(c.degrees(), vec![2, 2, 2, 2]);
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert_abs_diff_eq!(Graph::complete(4).global_clustering(), 1.0);
    }
}
