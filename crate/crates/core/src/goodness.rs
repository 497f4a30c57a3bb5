//! One-sample Kolmogorov-Smirnov test against a continuous CDF.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub pvalue: f64,
    pub n: usize,
}

/// `D_n = sup |F_n(x) - F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' finite-sample adjustment of `λ`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    let statistic = ks_statistic(samples, cdf)?;
    let sqrt_n = (samples.len() as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    Ok(KsTest {
        statistic,
        pvalue: kolmogorov_sf(lambda),
        n: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistic_of_grid_against_uniform() {
        // midpoints (i + 0.5)/n are at distance 0.5/n from both steps
        let x: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_statistic(&x, |v| v).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
    }

    #[test]
    fn statistic_of_point_mass() {
        let d = ks_statistic(&[0.9; 5], |v| v).unwrap();
        assert!((d - 0.9).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // scipy.special.kolmogorov
        assert!((kolmogorov_sf(1.0) - 0.269_999_671_677_355_5).abs() < 1e-12);
        assert!((kolmogorov_sf(1.358_098_8) - 0.05).abs() < 1e-6);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert_eq!(ks_statistic(&[], |v| v), Err(Error::EmptyInput));
        assert_eq!(
            ks_statistic(&[0.1, f64::NAN], |v| v),
            Err(Error::NonFinite { index: 1 })
        );
    }
}
