//! Discrete entropy, mutual information and divergence functionals.
//!
//! Everything is measured in bits (base-2 logarithms) and 0·log 0 is taken
//! as 0. Estimation from counts is the plain maximum-likelihood plug-in; any
//! bias handling is the caller's business.

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Probability mass function over a finite alphabet, indexed 0..len.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Validates non-negativity and total mass 1 within 1e-12, then
    /// renormalizes exactly so downstream sums are clean.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(
                "distribution entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "distribution mass {total} is not 1 within {NORM_TOL}"
            )));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self { probs })
    }

    /// Two-outcome distribution ordered `[p(-1), p(+1)]`, the spin-state
    /// convention used throughout the crate.
    pub fn bernoulli(p_plus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_plus) {
            return Err(Error::InvalidInput(format!(
                "bernoulli parameter {p_plus} outside [0,1]"
            )));
        }
        Ok(Self {
            probs: vec![1.0 - p_plus, p_plus],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Joint probability mass over a pair of finite alphabets, row = first
/// variable, column = second.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint2 {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl Joint2 {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.len();
        if rows == 0 || matrix[0].is_empty() {
            return Err(Error::InvalidInput("empty joint".into()));
        }
        let cols = matrix[0].len();
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged joint matrix".into()));
        }
        let mut p = Vec::with_capacity(rows * cols);
        for row in &matrix {
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(
                        "joint entries must be finite and non-negative".into(),
                    ));
                }
                p.push(v);
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "joint mass {total} is not 1 within {NORM_TOL}"
            )));
        }
        for v in &mut p {
            *v /= total;
        }
        Ok(Self { rows, cols, p })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.cols + j]
    }

    /// Marginal of the first (row) variable.
    pub fn marginal_rows(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.p[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect()
    }

    /// Marginal of the second (column) variable.
    pub fn marginal_cols(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[j] += self.p[i * self.cols + j];
            }
        }
        m
    }
}

/// Entropy of raw (possibly unnormalized-by-rounding) masses, in bits.
pub(crate) fn entropy_of(masses: &[f64]) -> f64 {
    -masses
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Shannon entropy H(X) in bits.
pub fn entropy(d: &Dist) -> f64 {
    entropy_of(&d.probs)
}

/// Mutual information I(X;Y) = H(X) + H(Y) − H(X,Y) in bits.
pub fn mutual_information(j: &Joint2) -> f64 {
    entropy_of(&j.marginal_rows()) + entropy_of(&j.marginal_cols()) - entropy_of(&j.p)
}

/// Kullback–Leibler divergence D(p ‖ q) in bits.
///
/// Requires q > 0 wherever p > 0; a zero of q under positive p mass is
/// reported as [`Error::SupportViolation`].
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput("alphabet size mismatch".into()));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs.iter().zip(q.probs.iter()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation(format!(
                    "q[{i}] = 0 while p[{i}] = {pi}"
                )));
            }
            total += pi * (pi / qi).log2();
        }
    }
    Ok(total)
}

/// Maximum-likelihood plug-in distribution from per-symbol counts.
pub fn empirical_distribution(counts: &[u64]) -> Result<Dist> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidInput("zero total count".into()));
    }
    Ok(Dist {
        probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn entropy_fair_coin_is_one_bit() {
        let d = Dist::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(entropy(&d), 1.0);
    }

    #[test]
    fn entropy_deterministic_is_zero() {
        let d = Dist::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(entropy(&d), 0.0);
    }

    #[test]
    fn entropy_quarter_three_quarters() {
        // -0.25 log2 0.25 - 0.75 log2 0.75, evaluated independently below.
        let expect = 0.25 * 2.0 - 0.75 * (0.75f64.ln() / std::f64::consts::LN_2);
        let d = Dist::new(vec![0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(entropy(&d), expect, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&d), 0.811278, epsilon = 1e-6);
    }

    #[test]
    fn mi_of_product_joint_is_zero() {
        let j = Joint2::new(vec![vec![0.3 * 0.6, 0.3 * 0.4], vec![0.7 * 0.6, 0.7 * 0.4]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&j), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mi_of_identity_joint_is_one_bit() {
        let j = Joint2::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&j), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mi_noisy_binary_channel() {
        // H(X)+H(Y)-H(X,Y) computed by hand for [[0.4,0.1],[0.1,0.4]]:
        // marginals are uniform, H(joint) = -(0.8 log2 0.4 + 0.2 log2 0.1).
        let expect = 2.0 + 0.8 * 0.4f64.log2() + 0.2 * 0.1f64.log2();
        let j = Joint2::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&j), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_information(&j), 0.278072, epsilon = 1e-6);
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = Dist::new(vec![0.2, 0.8]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_point_mass_vs_uniform() {
        let p = Dist::new(vec![1.0, 0.0]).unwrap();
        let q = Dist::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kl_support_violation_is_reported() {
        let p = Dist::new(vec![0.5, 0.5]).unwrap();
        let q = Dist::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn empirical_counts() {
        let d = empirical_distribution(&[3, 1]).unwrap();
        assert_eq!(d.probs(), &[0.75, 0.25]);
        let d = empirical_distribution(&[0, 5]).unwrap();
        assert_eq!(d.probs(), &[0.0, 1.0]);
        assert!(empirical_distribution(&[0, 0]).is_err());
    }

    #[test]
    fn empirical_bernoulli_within_three_sigma() {
        let mut rng = crate::rng::substream(11, crate::rng::StreamDomain::Test, 0);
        let m = 100_000u64;
        let mut counts = [0u64, 0u64];
        for _ in 0..m {
            let s = if rng.gen::<f64>() < 0.7 { 1 } else { 0 };
            counts[s] += 1;
        }
        let d = empirical_distribution(&counts).unwrap();
        let se = (0.7 * 0.3 / m as f64).sqrt();
        assert!((d.probs()[1] - 0.7).abs() < 3.0 * se);
        assert!((d.probs()[0] - 0.3).abs() < 3.0 * se);
    }

    #[test]
    fn plugin_entropy_error_shrinks_with_sample_size() {
        // Median absolute error over 100 seeds must decrease as M grows.
        let truth = entropy(&Dist::bernoulli(0.7).unwrap());
        let mut medians = Vec::new();
        for (i, m) in [1_000u64, 10_000, 100_000].into_iter().enumerate() {
            let mut errs: Vec<f64> = (0..100)
                .map(|s| {
                    let mut rng = crate::rng::substream(
                        1000 + s,
                        crate::rng::StreamDomain::Test,
                        i as u64,
                    );
                    let mut counts = [0u64, 0u64];
                    for _ in 0..m {
                        counts[usize::from(rng.gen::<f64>() < 0.7)] += 1;
                    }
                    (entropy(&empirical_distribution(&counts).unwrap()) - truth).abs()
                })
                .collect();
            errs.sort_by(|a, b| a.total_cmp(b));
            medians.push(errs[50]);
        }
        assert!(medians[0] > medians[1] && medians[1] > medians[2]);
    }
}
