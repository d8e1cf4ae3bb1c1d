//! Degree-versus-outcome trend analysis: Gaussian kernel smoothing measured
//! in data-point index distance, and ordinary least-squares line fits with
//! standard errors.

use crate::error::{Error, Result};

/// An ordered series of (x, y) points with strictly increasing x.
#[derive(Debug, Clone, PartialEq)]
pub struct XYSeries {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl XYSeries {
    /// Sorts by x on ingestion; duplicate or non-finite coordinates are
    /// rejected.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty series".into()));
        }
        if points
            .iter()
            .any(|&(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate x value {}",
                    w[0].0
                )));
            }
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

/// Gaussian smoothing with the kernel width measured in data-point index
/// distance, truncated at 4σ. Near the boundary the kernel is renormalized
/// over the points that exist, which keeps constants exactly constant. The
/// x values pass through unchanged.
pub fn gaussian_smooth(series: &XYSeries, sigma_points: f64) -> Result<XYSeries> {
    if !(sigma_points > 0.0 && sigma_points.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma must be positive, got {sigma_points}"
        )));
    }
    let n = series.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let radius = (4.0 * sigma_points).ceil() as usize;
    let weights: Vec<f64> = (0..=radius)
        .map(|d| (-0.5 * (d as f64 / sigma_points).powi(2)).exp())
        .collect();
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(n - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in lo..=hi {
            let w = weights[i.abs_diff(j)];
            num += w * series.ys[j];
            den += w;
        }
        ys.push(num / den);
    }
    Ok(XYSeries {
        xs: series.xs.clone(),
        ys,
    })
}

/// Ordinary least-squares line fit with standard errors.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub intercept_se: f64,
    pub n_points: usize,
}

/// Fit y = slope·x + intercept over the points with x in `[x_lo, x_hi]`.
/// Standard errors come from the residual variance (n−2 denominator).
pub fn linear_fit(series: &XYSeries, x_lo: f64, x_hi: f64) -> Result<LinearFit> {
    let pts: Vec<(f64, f64)> = series
        .points()
        .filter(|&(x, _)| x >= x_lo && x <= x_hi)
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 points in range, found {n}"
        )));
    }
    let nf = n as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput("degenerate fit: all x equal".into()));
    }
    let sxy: f64 = pts
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let sigma2 = ssr / (nf - 2.0);
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / nf + mean_x * mean_x / sxx)).sqrt();
    Ok(LinearFit {
        slope,
        slope_se,
        intercept,
        intercept_se,
        n_points: n,
    })
}

/// Coefficient of determination of the fit on the same point set.
pub fn r_squared(series: &XYSeries, fit: &LinearFit, x_lo: f64, x_hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = series
        .points()
        .filter(|&(x, _)| x >= x_lo && x <= x_hi)
        .collect();
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - fit.slope * p.0 - fit.intercept).powi(2))
        .sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn series(points: Vec<(f64, f64)>) -> XYSeries {
        XYSeries::new(points).unwrap()
    }

    #[test]
    fn ingestion_sorts_and_validates() {
        let s = series(vec![(3.0, 1.0), (1.0, 2.0), (2.0, 0.5)]);
        assert_eq!(s.xs(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.ys(), &[2.0, 0.5, 1.0]);
        assert!(XYSeries::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(XYSeries::new(vec![(f64::NAN, 0.0)]).is_err());
        assert!(XYSeries::new(vec![]).is_err());
    }

    #[test]
    fn smoothing_preserves_constants_exactly() {
        let s = series((0..40).map(|i| (i as f64, 2.5)).collect());
        let sm = gaussian_smooth(&s, 10.0).unwrap();
        for &y in sm.ys() {
            assert_abs_diff_eq!(y, 2.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn impulse_response_equals_direct_convolution() {
        // Unit impulse at the center of 101 points, σ = 10: the output row
        // must equal the renormalized Gaussian weights, computed here by
        // direct convolution.
        let n = 101usize;
        let center = 50usize;
        let sigma = 10.0;
        let s = series(
            (0..n)
                .map(|i| (i as f64, if i == center { 1.0 } else { 0.0 }))
                .collect(),
        );
        let sm = gaussian_smooth(&s, sigma).unwrap();
        let radius = (4.0 * sigma).ceil() as usize;
        for i in 0..n {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            let mut expect = 0.0;
            if center >= lo && center <= hi {
                let wsum: f64 = (lo..=hi)
                    .map(|j| (-0.5 * ((i as f64 - j as f64) / sigma).powi(2)).exp())
                    .sum();
                expect = (-0.5 * ((i as f64 - center as f64) / sigma).powi(2)).exp() / wsum;
            }
            assert_abs_diff_eq!(sm.ys()[i], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn smoothing_rejects_bad_sigma() {
        let s = series(vec![(0.0, 1.0), (1.0, 2.0)]);
        assert!(gaussian_smooth(&s, 0.0).is_err());
        assert!(gaussian_smooth(&s, -1.0).is_err());
    }

    #[test]
    fn exact_line_fits_exactly() {
        let s = series((0..20).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect());
        let fit = linear_fit(&s, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.slope_se, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.intercept_se, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_needs_three_points_and_spread() {
        let s = series(vec![(0.0, 1.0), (1.0, 2.0)]);
        assert!(linear_fit(&s, 0.0, 1.0).is_err());
        let s = series((0..10).map(|i| (i as f64, i as f64)).collect());
        assert!(linear_fit(&s, 3.0, 3.0).is_err());
    }

    #[test]
    fn fit_is_affine_equivariant_in_y() {
        let s = series(
            (0..30)
                .map(|i| (i as f64, 0.7 * i as f64 + ((i * 7919) % 13) as f64 * 0.1))
                .collect(),
        );
        let f1 = linear_fit(&s, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let scaled = series(s.points().map(|(x, y)| (x, 5.0 * y)).collect());
        let f5 = linear_fit(&scaled, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(f5.slope, 5.0 * f1.slope, epsilon = 1e-9);
        assert_abs_diff_eq!(f5.slope_se, 5.0 * f1.slope_se, epsilon = 1e-9);
        assert_abs_diff_eq!(f5.intercept, 5.0 * f1.intercept, epsilon = 1e-9);
    }

    #[test]
    fn smoothing_a_line_keeps_the_interior_slope() {
        // On interior points (beyond the 4σ truncation from either edge) a
        // symmetric kernel leaves a line invariant.
        let n = 200;
        let sigma = 5.0;
        let s = series((0..n).map(|i| (i as f64, 3.0 * i as f64 - 4.0)).collect());
        let sm = gaussian_smooth(&s, sigma).unwrap();
        let radius = (4.0 * sigma).ceil() as usize;
        let interior = series(
            sm.points()
                .skip(radius)
                .take(n - 2 * radius)
                .collect(),
        );
        let fit = linear_fit(&interior, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let direct = linear_fit(&s, radius as f64, (n - radius) as f64 - 1.0).unwrap();
        assert_abs_diff_eq!(fit.slope, direct.slope, epsilon = 1e-9);
    }

    #[test]
    fn noisy_slope_recovered_within_three_se() {
        // y = 3x + N(0,1) on 100 points; the OLS sampling distribution puts
        // the estimate within 3·SE of 3 in ≈99.7% of draws.
        let mut hits = 0;
        let seeds = 500;
        for seed in 0..seeds {
            let mut rng = crate::rng::substream(2200 + seed, crate::rng::StreamDomain::Test, 0);
            let pts: Vec<(f64, f64)> = (0..100)
                .map(|i| {
                    let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                    (i as f64, 3.0 * i as f64 + z)
                })
                .collect();
            let fit = linear_fit(&series(pts), f64::NEG_INFINITY, f64::INFINITY).unwrap();
            if (fit.slope - 3.0).abs() <= 3.0 * fit.slope_se {
                hits += 1;
            }
        }
        assert!(
            hits as f64 / seeds as f64 >= 0.99,
            "only {hits}/{seeds} seeds within 3·SE"
        );
    }
}
