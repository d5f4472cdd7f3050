//! Small statistical helpers for distribution and variance checks.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

impl ChiSquareResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

fn upper_tail(statistic: f64, dof: f64) -> f64 {
    if dof < 1.0 {
        return 1.0;
    }
    match ChiSquared::new(dof) {
        Ok(d) => d.sf(statistic),
        Err(_) => f64::NAN,
    }
}

/// Two-sample chi-square test that both histograms come from the same
/// distribution. Sample sizes may differ. Bins empty in both are skipped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareResult {
    assert_eq!(a.len(), b.len(), "histograms differ in length");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let ka = (nb as f64 / na.max(1) as f64).sqrt();
    let kb = (na as f64 / nb.max(1) as f64).sqrt();
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        bins += 1;
        let d = ka * x as f64 - kb * y as f64;
        statistic += d * d / (x + y) as f64;
    }
    let dof = bins.saturating_sub(1) as f64;
    ChiSquareResult {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof),
    }
}

/// Goodness-of-fit test of `counts` against bin probabilities `expected`.
pub fn chi_square_goodness_of_fit(counts: &[u64], expected: &[f64]) -> ChiSquareResult {
    assert_eq!(counts.len(), expected.len(), "histograms differ in length");
    let n: u64 = counts.iter().sum();
    let total: f64 = expected.iter().sum();
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&c, &p) in counts.iter().zip(expected) {
        let e = n as f64 * p / total;
        if e <= 0.0 {
            continue;
        }
        bins += 1;
        let d = c as f64 - e;
        statistic += d * d / e;
    }
    let dof = bins.saturating_sub(1) as f64;
    ChiSquareResult {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof),
    }
}

/// One-sided sign test: probability of at least `successes` heads in
/// `trials` fair coin flips.
pub fn sign_test(successes: u64, trials: u64) -> f64 {
    if successes == 0 {
        return 1.0;
    }
    match Binomial::new(0.5, trials) {
        Ok(d) => d.sf(successes - 1),
        Err(_) => f64::NAN,
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Equal-area bins over a disk: `rings` annuli of equal area, each cut into
/// `sectors` equal angular sectors.
#[derive(Debug, Clone, Copy)]
pub struct DiskBins {
    center: Vec3,
    t: Vec3,
    b: Vec3,
    radius: f64,
    rings: usize,
    sectors: usize,
}

impl DiskBins {
    pub fn new(center: Vec3, normal: Vec3, radius: f64, rings: usize, sectors: usize) -> Self {
        let (t, b) = normal.normalized().orthonormal_basis();
        DiskBins {
            center,
            t,
            b,
            radius,
            rings,
            sectors,
        }
    }

    pub fn len(&self) -> usize {
        self.rings * self.sectors
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin of a point on the disk plane, or `None` outside the disk.
    pub fn index(&self, p: Vec3) -> Option<usize> {
        let v = p - self.center;
        let (x, y) = (v.dot(self.t) / self.radius, v.dot(self.b) / self.radius);
        let r2 = x * x + y * y;
        if r2 > 1.0 + 1e-9 {
            return None;
        }
        let ring = ((r2 * self.rings as f64) as usize).min(self.rings - 1);
        let angle = y.atan2(x).rem_euclid(std::f64::consts::TAU);
        let sector =
            ((angle / std::f64::consts::TAU * self.sectors as f64) as usize).min(self.sectors - 1);
        Some(ring * self.sectors + sector)
    }

    pub fn histogram<I: IntoIterator<Item = Vec3>>(&self, points: I) -> Vec<u64> {
        let mut counts = vec![0u64; self.len()];
        for p in points {
            if let Some(i) = self.index(p) {
                counts[i] += 1;
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_histograms_pass() {
        let a = vec![100u64; 16];
        let r = chi_square_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn different_histograms_fail() {
        let a = vec![1000u64; 16];
        let mut b = a.clone();
        b[0] = 2000;
        assert!(chi_square_two_sample(&a, &b).p_value < 1e-6);
    }

    #[test]
    fn unequal_sizes_are_scaled() {
        let a = vec![100u64; 10];
        let b = vec![300u64; 10];
        assert!(chi_square_two_sample(&a, &b).statistic.abs() < 1e-12);
    }

    #[test]
    fn sign_test_values() {
        assert!((sign_test(1, 1) - 0.5).abs() < 1e-15);
        assert!((sign_test(10, 10) - 0.5f64.powi(10)).abs() < 1e-15);
        assert_eq!(sign_test(0, 5), 1.0);
    }

    #[test]
    fn disk_bins_cover_disk() {
        let bins = DiskBins::new(Vec3::ZERO, Vec3::Z, 2.0, 4, 4);
        assert_eq!(bins.index(Vec3::new(0.1, 0.1, 0.0)), Some(0));
        assert_eq!(bins.index(Vec3::new(0.0, 3.0, 0.0)), None);
        assert!(bins.index(Vec3::new(-1.99, -0.01, 0.0)).unwrap() >= 12);
    }
}
