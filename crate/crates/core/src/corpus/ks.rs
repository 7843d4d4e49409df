use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains values that cannot be ordered (NaN)")]
    Unordered,
}

/// The statistic as the exact fraction `numerator / (n * m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KsFraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl KsFraction {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn sorted<T: PartialOrd + Copy>(v: &[T]) -> Result<Vec<T>, KsError> {
    if v.is_empty() {
        return Err(KsError::EmptySample);
    }
    if v.iter().any(|x| x.partial_cmp(x).is_none()) {
        return Err(KsError::Unordered);
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("checked orderable"));
    Ok(s)
}

/// Largest ECDF gap, evaluated at every observed value, in exact integer
/// arithmetic: `max |i·m − j·n| / (n·m)`.
pub fn ks_statistic_exact<T: PartialOrd + Copy>(a: &[T], b: &[T]) -> Result<KsFraction, KsError> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len() as u64, b.len() as u64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0u64;
    while i < a.len() || j < b.len() {
        // Next observed value; advance both samples past every copy of it.
        let x = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => match x.partial_cmp(y).expect("orderable") {
                Ordering::Greater => *y,
                _ => *x,
            },
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as u64 * m).abs_diff(j as u64 * n));
    }
    Ok(KsFraction {
        numerator: best,
        denominator: n * m,
    })
}

pub fn ks_statistic<T: PartialOrd + Copy>(a: &[T], b: &[T]) -> Result<f64, KsError> {
    ks_statistic_exact(a, b).map(|f| f.value())
}

const SERIES_EPS: f64 = 1e-12;

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²)`.
///
/// Below λ = 1.18 the alternating series converges slowly, so the
/// equivalent Jacobi-theta form `1 − √(2π)/λ Σ exp(−(2k−1)²π²/(8λ²))` is used.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = -std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=100u32 {
            let odd = f64::from(2 * k - 1);
            let term = (c * odd * odd).exp();
            sum += term;
            if term < SERIES_EPS {
                break;
            }
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100u32 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < SERIES_EPS {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic two-sided p-value with the small-sample correction
/// `λ = (√nₑ + 0.12 + 0.11/√nₑ)·D`, `nₑ = nm/(n+m)`.
pub fn ks_pvalue(d: f64, n: usize, m: usize) -> f64 {
    if n == 0 || m == 0 || d <= 0.0 {
        return 1.0;
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
    pub n: usize,
    pub m: usize,
}

pub fn ks_test<T: PartialOrd + Copy>(a: &[T], b: &[T]) -> Result<KsResult, KsError> {
    let d = ks_statistic(a, b)?;
    Ok(KsResult {
        d,
        p: ks_pvalue(d, a.len(), b.len()),
        n: a.len(),
        m: b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn statistic_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[1, 2, 3], &[10, 11]).unwrap(), 1.0);
        let f = ks_statistic_exact(&[1, 2, 3], &[2, 3, 4]).unwrap();
        assert_eq!((f.numerator, f.denominator), (3, 9));
        assert_eq!(ks_statistic(&[1, 2, 3], &[2, 3, 4]).unwrap(), 1.0 / 3.0);
        assert_eq!(ks_statistic::<f64>(&[], &[1.0]), Err(KsError::EmptySample));
        assert_eq!(ks_statistic(&[f64::NAN], &[1.0]), Err(KsError::Unordered));
    }

    /// Exact two-sided p-value P(D ≥ d_num/n) for n = m by lattice-path counting.
    fn exact_pvalue_equal(n: usize, d_num: usize) -> f64 {
        let mut dp = vec![vec![0f64; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n {
                if i.abs_diff(j) >= d_num {
                    continue;
                }
                dp[i][j] = if i == 0 && j == 0 {
                    1.0
                } else {
                    (if i > 0 { dp[i - 1][j] } else { 0.0 }) + (if j > 0 { dp[i][j - 1] } else { 0.0 })
                };
            }
        }
        let total: f64 = (1..=n).fold(1.0, |acc, k| acc * (n + k) as f64 / k as f64);
        1.0 - dp[n][n] / total
    }

    #[test]
    fn pvalue_examples() {
        assert_eq!(ks_pvalue(0.0, 10, 10), 1.0);
        assert!(ks_pvalue(1.0, 100, 100) < 1e-6);
        let p = ks_pvalue(0.5, 20, 20);
        assert!((p - 0.008_162).abs() < 5e-6, "{p}");
        // Same order of magnitude as the exact permutation p-value.
        let exact = exact_pvalue_equal(20, 10);
        assert!((exact - 0.0123).abs() < 5e-4, "{exact}");
        assert!(p < exact && exact < 2.0 * p);
    }

    #[test]
    fn series_forms_agree_at_switch() {
        let lo = kolmogorov_q(1.18 - 1e-9);
        let hi = kolmogorov_q(1.18);
        assert!((lo - hi).abs() < 1e-9);
        assert!((kolmogorov_q(0.5) - 0.963_945_243_664_875).abs() < 1e-9);
    }

    #[test]
    fn pvalue_monotone_in_d() {
        for (n, m) in [(5, 7), (20, 20), (100, 300)] {
            let mut prev = 1.0;
            for k in 0..=1000 {
                let p = ks_pvalue(k as f64 / 1000.0, n, m);
                assert!(p <= prev + 1e-15, "n={n} m={m} k={k}");
                prev = p;
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in proptest::collection::vec(-50i32..50, 1..30), b in proptest::collection::vec(-50i32..50, 1..30)) {
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
            prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
