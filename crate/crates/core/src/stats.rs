//! Two-sample Kolmogorov-Smirnov statistic.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
    /// 1% asymptotic critical value `1.628 sqrt((n + m) / (n m))`.
    pub critical_1pct: f64,
}

impl KsResult {
    pub fn rejects(&self) -> bool {
        self.statistic > self.critical_1pct
    }
}

/// `sup |F_a - F_b|` over the pooled sample. Sorts its inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> KsResult {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    KsResult {
        statistic: d,
        n,
        m,
        critical_1pct: 1.628 * ((nf + mf) / (nf * mf)).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let mut a = vec![0.3, 0.1, 0.2];
        let mut b = a.clone();
        assert_eq!(ks_two_sample(&mut a, &mut b).statistic, 0.0);
    }

    #[test]
    fn disjoint_samples_have_unit_distance() {
        let mut a = vec![1.0, 2.0];
        let mut b = vec![3.0, 4.0, 5.0];
        let r = ks_two_sample(&mut a, &mut b);
        assert_eq!(r.statistic, 1.0);
        assert!(!r.rejects(), "too few points to reject at 1%");

        let mut a: Vec<f64> = (0..20).map(f64::from).collect();
        let mut b: Vec<f64> = (100..130).map(f64::from).collect();
        let r = ks_two_sample(&mut a, &mut b);
        assert_eq!(r.statistic, 1.0);
        assert!(r.rejects());
    }

    #[test]
    fn hand_computed_statistic() {
        // F_a - F_b peaks at x = 2: 2/3 - 0.
        let mut a = vec![1.0, 2.0, 6.0];
        let mut b = vec![3.0, 4.0];
        assert!((ks_two_sample(&mut a, &mut b).statistic - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_across_samples() {
        let mut a = vec![1.0, 1.0, 2.0];
        let mut b = vec![1.0, 2.0, 2.0];
        assert!((ks_two_sample(&mut a, &mut b).statistic - 1.0 / 3.0).abs() < 1e-15);
    }
}
