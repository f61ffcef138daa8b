//! Minimum-distance sampling, histograms and Kolmogorov-Smirnov distances.

use rayon::prelude::*;

use crate::constellation::{apply_weights, draw_open_loop, min_distance_sqr, ComplexScalar};
use crate::error::{MbmError, Result};
use crate::optimizer::{optimize_weights, PerturbationSchedule};
use crate::rng::{derive_seed, domain};

pub const DEFAULT_BINS: usize = 100;
pub const MIN_KS_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum DminMode {
    OpenLoop,
    ClosedLoop(PerturbationSchedule),
}

/// Seed of the `index`-th constellation drawn by the samplers below.
pub fn stats_draw_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, &[domain::STATS_DRAW, index])
}

/// Minimum over the disjoint pairs `(0,1), (2,3), ...`.
pub fn paired_min_distance(points: &[ComplexScalar]) -> f64 {
    points
        .chunks_exact(2)
        .map(|p| (p[0] - p[1]).norm_sqr().sqrt())
        .fold(f64::INFINITY, f64::min)
}

fn check_draws(draws: u64) -> Result<()> {
    if draws == 0 {
        return Err(MbmError::param("draws must be positive"));
    }
    Ok(())
}

/// True `d_min` of `draws` independent constellations, in draw order.
pub fn sample_dmin(k: u32, draws: u64, seed: u64, mode: &DminMode) -> Result<Vec<f64>> {
    check_draws(draws)?;
    if let DminMode::ClosedLoop(s) = mode {
        s.validate()?;
    }
    (0..draws)
        .into_par_iter()
        .map(|j| {
            let open = draw_open_loop(k, stats_draw_seed(seed, j))?;
            let pts = match mode {
                DminMode::OpenLoop => open,
                DminMode::ClosedLoop(s) => {
                    let trace =
                        optimize_weights(&open, s, derive_seed(seed, &[domain::WEIGHT_SEARCH, j]))?;
                    apply_weights(&open, &trace.final_weights)?
                }
            };
            Ok(min_distance_sqr(pts.points()).map_or(0.0, |(d2, _)| d2.sqrt()))
        })
        .collect()
}

/// Paired statistic `d_o` of `draws` open-loop constellations (same draws
/// as [`sample_dmin`] in open-loop mode).
pub fn sample_paired_do(k: u32, draws: u64, seed: u64) -> Result<Vec<f64>> {
    check_draws(draws)?;
    (0..draws)
        .into_par_iter()
        .map(|j| {
            Ok(paired_min_distance(
                draw_open_loop(k, stats_draw_seed(seed, j))?.points(),
            ))
        })
        .collect()
}

/// Binned `d_min` distribution over the default 100 uniform bins.
pub fn sample_dmin_distribution(
    k: u32,
    draws: u64,
    seed: u64,
    mode: &DminMode,
) -> Result<Histogram> {
    Histogram::from_samples(&sample_dmin(k, draws, seed, mode)?, DEFAULT_BINS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn with_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2
            || edges.iter().any(|e| !e.is_finite())
            || edges.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(MbmError::param(
                "histogram edges must be finite and strictly increasing",
            ));
        }
        let bins = edges.len() - 1;
        Ok(Histogram {
            edges,
            counts: vec![0; bins],
            total: 0,
        })
    }

    /// `bins` uniform bins over `[0, ceil(max sample)]` (`[0, 1]` if all zero).
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(MbmError::param("need at least one bin"));
        }
        if samples.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(MbmError::param("samples must be finite and nonnegative"));
        }
        let max = samples.iter().copied().fold(0.0, f64::max);
        let upper = if max > 0.0 { max.ceil() } else { 1.0 };
        let edges = (0..=bins).map(|i| upper * i as f64 / bins as f64).collect();
        let mut h = Self::with_edges(edges)?;
        h.extend(samples);
        Ok(h)
    }

    /// Adds samples; values outside the edges are ignored, the top edge is
    /// included in the last bin.
    pub fn extend(&mut self, samples: &[f64]) {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        for &s in samples {
            if !(s >= lo && s <= hi) {
                continue;
            }
            let bin = match self.edges.partition_point(|&e| e <= s) {
                0 => continue,
                i => (i - 1).min(self.counts.len() - 1),
            };
            self.counts[bin] += 1;
            self.total += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(MbmError::param(
                "cannot merge histograms with different edges",
            ));
        }
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        self.total += other.total;
        Ok(())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (e[0], e[1], c))
    }

    /// `count / (total * width)`; integrates to one.
    pub fn density(&self) -> Vec<f64> {
        self.bins()
            .map(|(l, r, c)| {
                if self.total == 0 {
                    0.0
                } else {
                    c as f64 / (self.total as f64 * (r - l))
                }
            })
            .collect()
    }

    /// Density divided by its maximum (peak equals one).
    pub fn scaled_density(&self) -> Vec<f64> {
        let d = self.density();
        let peak = d.iter().copied().fold(0.0, f64::max);
        d.into_iter()
            .map(|v| if peak > 0.0 { v / peak } else { 0.0 })
            .collect()
    }
}

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(MbmError::param(format!(
            "KS statistic needs at least {MIN_KS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| s.is_nan()) {
        return Err(MbmError::param("samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// KS distance evaluated at the bin edges of a histogram.
pub fn ks_statistic_binned<F: Fn(f64) -> f64>(h: &Histogram, cdf: F) -> Result<f64> {
    if (h.total() as usize) < MIN_KS_SAMPLES {
        return Err(MbmError::param(format!(
            "KS statistic needs at least {MIN_KS_SAMPLES} samples, got {}",
            h.total()
        )));
    }
    let n = h.total() as f64;
    let mut cum = 0u64;
    let mut d = (cdf(h.edges()[0])).abs();
    for (_, right, c) in h.bins() {
        cum += c;
        d = d.max((cum as f64 / n - cdf(right)).abs());
    }
    Ok(d)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{analytic_do_cdf, pairwise_distance_cdf};
    use num_complex::Complex64;

    #[test]
    fn paired_statistic_uses_disjoint_pairs() {
        let pts = [
            Complex64::new(0.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(0.1, 0.0),
            Complex64::new(0.0, 2.0),
        ];
        // d_min would be 0.1 (points 0 and 2), the pairs give min(3, ~2.0).
        assert!((paired_min_distance(&pts) - (0.01f64 + 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_and_density() {
        let samples = [0.05, 0.15, 0.15, 0.95, 1.0, 1.7];
        let h = Histogram::from_samples(&samples, 4).unwrap();
        assert_eq!(h.edges(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(h.counts(), &[3, 1, 1, 1]);
        assert_eq!(h.total(), 6);
        let integral: f64 = h
            .density()
            .iter()
            .zip(h.edges().windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum();
        assert!((integral - 1.0).abs() < 1e-12);
        assert_eq!(h.scaled_density().iter().copied().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn histogram_edges_validated() {
        assert!(Histogram::with_edges(vec![0.0]).is_err());
        assert!(Histogram::with_edges(vec![0.0, 0.0]).is_err());
        assert!(Histogram::from_samples(&[1.0], 0).is_err());
        assert!(Histogram::from_samples(&[-1.0], 4).is_err());
    }

    #[test]
    fn merge_is_associative_with_extend() {
        let edges: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let a = sample_dmin(2, 300, 1, &DminMode::OpenLoop).unwrap();
        let mut whole = Histogram::with_edges(edges.clone()).unwrap();
        whole.extend(&a);
        let mut left = Histogram::with_edges(edges.clone()).unwrap();
        left.extend(&a[..100]);
        let mut right = Histogram::with_edges(edges).unwrap();
        right.extend(&a[100..]);
        left.merge(&right).unwrap();
        assert_eq!(left, whole);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_dmin_distribution(3, 2_000, 9, &DminMode::OpenLoop).unwrap();
        let b = sample_dmin_distribution(3, 2_000, 9, &DminMode::OpenLoop).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 2_000);
    }

    #[test]
    fn dmin_never_exceeds_paired_statistic() {
        let d = sample_dmin(3, 500, 4, &DminMode::OpenLoop).unwrap();
        let o = sample_paired_do(3, 500, 4).unwrap();
        assert!(d.iter().zip(&o).all(|(a, b)| a <= b));
    }

    #[test]
    fn ks_requires_samples() {
        assert!(ks_statistic(&[0.5; 99], |x| x).is_err());
        assert!(ks_statistic(&[0.5; 100], |x| x).is_ok());
    }

    #[test]
    fn ks_detects_mismatch() {
        // Uniform(0,1) samples on a fine grid against the Rayleigh CDF: the
        // largest gap is near x = 1 where 1 - exp(-1/2) = 0.393.
        let samples: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 10_000.0).collect();
        let d = ks_statistic(&samples, pairwise_distance_cdf).unwrap();
        assert!(d > 0.1, "{d}");
        assert!((d - (1.0 - 0.393_469_340_287_366_6)).abs() < 1e-3, "{d}");
    }

    #[test]
    fn ks_self_consistency_via_inverse_cdf() {
        // Inverse-CDF samples of d_o for k = 3 on a stratified grid.
        let k = 3;
        let rate = 2f64.powi(k as i32 - 2);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                (-(1.0 - u).ln() / rate).sqrt()
            })
            .collect();
        let d = ks_statistic(&samples, |x| analytic_do_cdf(k, x).unwrap()).unwrap();
        assert!(d < 1e-4, "{d}");
    }

    #[test]
    fn binned_ks_bounded_by_raw() {
        let s = sample_paired_do(2, 5_000, 3).unwrap();
        let h = Histogram::from_samples(&s, 50).unwrap();
        let cdf = |x: f64| analytic_do_cdf(2, x).unwrap();
        assert!(ks_statistic_binned(&h, cdf).unwrap() <= ks_statistic(&s, cdf).unwrap() + 1e-12);
    }

    #[test]
    fn summary_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_dev(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
