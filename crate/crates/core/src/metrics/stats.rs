//! Descriptive statistics, Welch's t-test, KDE overlap and correlation.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator).
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample standard deviation; `None` below two values.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    (xs.len() >= 2).then(|| variance(xs).sqrt())
}

/// Median with the midpoint convention for even counts; `None` when empty.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid(format!("{what}: non-finite sample value")));
    }
    Ok(())
}

/// Two-sided Welch unequal-variance t-test.
///
/// When both samples have zero variance the test degenerates: equal means
/// give `t = 0, p = 1`, different means give `t = ±∞, p = 0`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid(
            "t-test needs at least two values per sample".into(),
        ));
    }
    check_finite(a, "t-test")?;
    check_finite(b, "t-test")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    let df = if se2 > 0.0 {
        se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0))
    } else {
        na + nb - 2.0
    };
    if se2 == 0.0 {
        return Ok(if diff == 0.0 {
            TTest { t: 0.0, df, p: 1.0 }
        } else {
            TTest {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let x = df / (df + t * t);
    let p = beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0);
    Ok(TTest { t, df, p })
}

/// Scott's rule bandwidth: σ̂ · n^(−1/5).
fn scott_bandwidth(xs: &[f64]) -> f64 {
    variance(xs).sqrt() * (xs.len() as f64).powf(-0.2)
}

fn kde(xs: &[f64], h: f64, at: f64) -> f64 {
    let norm = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    norm * xs
        .iter()
        .map(|x| {
            let z = (at - x) / h;
            (-0.5 * z * z).exp()
        })
        .sum::<f64>()
}

/// Number of evaluation points on the shared density grid.
pub const KDE_GRID_POINTS: usize = 512;

/// Percentage overlap of two Gaussian kernel density estimates: 100 ×
/// the trapezoidal integral of `min(f, g)` over a shared grid spanning
/// `min − 3h` to `max + 3h` (h the larger bandwidth).
pub fn kde_overlap(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid(
            "kde overlap needs at least two values per sample".into(),
        ));
    }
    check_finite(a, "kde overlap")?;
    check_finite(b, "kde overlap")?;
    let (ha, hb) = (scott_bandwidth(a), scott_bandwidth(b));
    if ha == 0.0 || hb == 0.0 {
        return Err(Error::Invalid(
            "kde overlap: a sample has zero variance".into(),
        ));
    }
    let h = ha.max(hb);
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let mins: Vec<f64> = (0..KDE_GRID_POINTS)
        .map(|i| {
            let x = lo + step * i as f64;
            kde(a, ha, x).min(kde(b, hb, x))
        })
        .collect();
    let integral: f64 = mins.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
    Ok((100.0 * integral).clamp(0.0, 100.0))
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Invalid(
            "pearson needs two equal-length samples of at least two values".into(),
        ));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Invalid(
            "pearson is undefined for a constant sample".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptive() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), Some(2.5));
        assert_eq!(mean(&v), 2.5);
        assert!((sample_std(&v).unwrap() - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(sample_std(&[1.0]), None);
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[7.0]), Some(7.0));
    }

    #[test]
    fn welch_identical_samples() {
        let a = [0.2, 0.4, 0.9];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn welch_small_example() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.t - -1.224_744_871_391_589).abs() < 1e-9);
        assert!((r.df - 4.0).abs() < 1e-12);
        // scipy.stats.ttest_ind(equal_var=False) gives 0.28786...
        assert!((r.p - 0.288).abs() < 1e-3, "{}", r.p);
    }

    #[test]
    fn welch_degenerate_cases() {
        let r = welch_t_test(&[0.0, 0.0, 0.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t < 0.0);
        let r = welch_t_test(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kde_identical_and_disjoint() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(kde_overlap(&a, &a).unwrap() >= 99.0);
        let sd = sample_std(&a).unwrap();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0 * sd).collect();
        assert!(kde_overlap(&a, &b).unwrap() <= 1.0);
        assert_eq!(kde_overlap(&a, &b).unwrap(), kde_overlap(&b, &a).unwrap());
        assert!(kde_overlap(&[1.0], &a).is_err());
        assert!(kde_overlap(&[1.0, 1.0], &a).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        let r = pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 3.0 / (2.0f64 * 14.0 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r - 0.9820).abs() < 1e-4);
        assert!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0]).is_err());
    }
}
