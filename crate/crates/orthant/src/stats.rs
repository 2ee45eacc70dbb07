//! Small statistical toolbox shared by the estimators and the verification
//! suite: mean/standard-error folds, Kolmogorov–Smirnov distances with
//! asymptotic critical values, the one-dimensional Wasserstein-1 distance of
//! equal-size samples, and least-squares line fits.

use crate::error::{Error, Result};

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_se(p_hat: f64, n: u64) -> f64 {
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against the CDF `f`.
/// Sorts a copy of the samples.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], f: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let fx = f(x);
        d = d.max(fx - i as f64 / n).max((i + 1) as f64 / n - fx);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        // consume ties on both sides before measuring the gap
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic Kolmogorov critical coefficient `c(alpha)`:
/// `P(sup > c/sqrt(n)) = alpha`. Supported levels: 0.05 and 0.01.
pub fn ks_critical_coefficient(alpha: f64) -> Result<f64> {
    if (alpha - 0.01).abs() < 1e-12 {
        Ok(1.627_62)
    } else if (alpha - 0.05).abs() < 1e-12 {
        Ok(1.358_10)
    } else {
        Err(Error::input(format!(
            "ks_critical_coefficient: unsupported level {alpha}"
        )))
    }
}

/// One-sample KS critical value at level `alpha` for sample size `n`.
pub fn ks_critical_one_sample(alpha: f64, n: usize) -> Result<f64> {
    Ok(ks_critical_coefficient(alpha)? / (n as f64).sqrt())
}

/// Two-sample KS critical value at level `alpha`.
pub fn ks_critical_two_sample(alpha: f64, n: usize, m: usize) -> Result<f64> {
    let c = ks_critical_coefficient(alpha)?;
    Ok(c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt())
}

/// Wasserstein-1 distance between two equal-size empirical laws:
/// the mean absolute difference of the sorted samples.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::input(
            "wasserstein1: samples must be nonempty and of equal size".to_string(),
        ));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    Ok(xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / xs.len() as f64)
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::input("linear_fit: need two or more paired points".to_string()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::input("linear_fit: degenerate abscissae".to_string()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_se = if xs.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LineFit {
        slope,
        intercept,
        r2,
        slope_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(se, (5.0f64 / 3.0 / 4.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn ks_against_uniform() {
        // deterministic stratified sample from U(0,1): KS ~ 1/(2n)
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn wasserstein_shift() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
        assert_relative_eq!(wasserstein1(&a, &b).unwrap(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 2.0, max_relative = 1e-12);
        assert_relative_eq!(f.intercept, -1.0, max_relative = 1e-10);
        assert_relative_eq!(f.r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn critical_values() {
        assert!(ks_critical_one_sample(0.01, 100_000).unwrap() < 0.006);
        assert!(ks_critical_coefficient(0.2).is_err());
    }
}
