//! Small statistics helpers: confidence intervals over independent
//! replications, empirical quantiles and percentile bootstrap.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean of independent replication outputs with a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the `confidence` interval; `None` with fewer than two
    /// replications.
    pub half_width: Option<f64>,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64], confidence: f64) -> Self {
        let n = xs.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            xs.iter().sum::<f64>() / n as f64
        };
        let half_width = (n >= 2).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            t_quantile(0.5 + confidence / 2.0, (n - 1) as f64) * (var / n as f64).sqrt()
        });
        Estimate { mean, half_width, n }
    }

    /// Half-width, treating a missing interval as unbounded.
    pub fn hw(&self) -> f64 {
        self.half_width.unwrap_or(f64::INFINITY)
    }

    /// True when the interval excludes zero.
    pub fn sign_resolved(&self) -> bool {
        self.mean.abs() > self.hw()
    }
}

/// Student-t quantile.
pub fn t_quantile(p: f64, dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

/// Generalized inverse of the empirical CDF of an ascending sample:
/// the smallest x with F_n(x) >= q.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Empirical P(X <= t) for an ascending sample.
pub fn ecdf_sorted(sorted: &[f64], t: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&x| x <= t) as f64 / sorted.len() as f64
}

pub fn sort_f64(xs: &mut [f64]) {
    xs.sort_unstable_by(f64::total_cmp);
}

/// Percentile-bootstrap interval for the mean of `xs`.
pub fn bootstrap_mean_interval<R: Rng>(
    xs: &[f64],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    sort_f64(&mut means);
    let alpha = (1.0 - confidence) / 2.0;
    (
        quantile_sorted(&means, alpha),
        quantile_sorted(&means, 1.0 - alpha),
    )
}

/// Generalized-inverse quantile of the union of equally weighted ascending
/// samples, without merging them.
pub fn pooled_quantile(parts: &[&[f64]], q: f64) -> f64 {
    let total: usize = parts.iter().map(|p| p.len()).sum();
    assert!(total > 0, "quantile of an empty sample");
    let need = ((q * total as f64).ceil() as usize).clamp(1, total);
    let count = |x: f64| -> usize { parts.iter().map(|p| p.partition_point(|&v| v <= x)).sum() };
    let mut lo = parts.iter().filter_map(|p| p.first()).copied().fold(f64::INFINITY, f64::min);
    let mut hi = parts.iter().filter_map(|p| p.last()).copied().fold(f64::NEG_INFINITY, f64::max);
    if count(lo) >= need {
        return lo;
    }
    // Invariant: count(lo) < need <= count(hi). Bisect down to adjacent
    // floats, then hi is the smallest sample value reaching `need`.
    loop {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            return hi;
        }
        if count(mid) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Kolmogorov-Smirnov distance between an ascending sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile_matches_table() {
        // two-sided 95% critical values
        assert!((t_quantile(0.975, 9.0) - 2.262).abs() < 1e-3);
        assert!((t_quantile(0.975, 29.0) - 2.045).abs() < 1e-3);
    }

    #[test]
    fn pooled_quantile_matches_merged_sample() {
        let a = [0.5, 1.0, 3.0, 7.0];
        let b = [0.2, 1.0, 2.0, 9.5];
        let c = [4.0, 4.0, 4.5, 6.0];
        let mut all: Vec<f64> = a.iter().chain(&b).chain(&c).copied().collect();
        sort_f64(&mut all);
        for q in [0.01, 0.1, 0.25, 1.0 / 3.0, 0.5, 0.74, 0.9, 0.99, 1.0] {
            assert_eq!(pooled_quantile(&[&a, &b, &c], q), quantile_sorted(&all, q), "q {q}");
        }
        assert_eq!(pooled_quantile(&[&a, &a], 0.5), 1.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_width() {
        let e = Estimate::from_samples(&[2.0; 5], 0.95);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.half_width, Some(0.0));
        assert!(Estimate::from_samples(&[1.0], 0.95).half_width.is_none());
    }

    #[test]
    fn empirical_quantile_is_generalized_inverse() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.25), 1.0);
        assert_eq!(quantile_sorted(&xs, 0.26), 2.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(ecdf_sorted(&xs, 0.5), 0.0);
        assert_eq!(ecdf_sorted(&xs, 2.0), 0.5);
        assert_eq!(ecdf_sorted(&xs, 9.0), 1.0);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.0100001, "{d}");
    }
}
