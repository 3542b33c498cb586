//! Chi-square goodness of fit against the uniform law.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub counts: Vec<u64>,
    pub samples: u64,
    pub expected: f64,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub significance: f64,
    /// Upper `significance` quantile of the chi-square law.
    pub critical_value: f64,
    pub pass: bool,
}

/// Wilson–Hilferty approximation of the upper `alpha` quantile of a
/// chi-square law with `df` degrees of freedom.
pub fn chi_square_critical_value(df: u64, alpha: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("zero degrees of freedom".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("significance {alpha} outside (0, 1)")));
    }
    let z = Normal::standard().inverse_cdf(1.0 - alpha);
    let k = df as f64;
    let h = 2.0 / (9.0 * k);
    Ok(k * (1.0 - h + z * h.sqrt()).powi(3))
}

/// `sum (O_k - N/K)^2 / (N/K)` over `K = counts.len()` outcomes, compared with
/// the chi-square quantile at `significance`.
pub fn chi_square_uniformity(counts: &[u64], significance: f64) -> Result<UniformityReport> {
    if counts.len() < 2 {
        return Err(Error::Domain("uniformity needs at least two outcomes".into()));
    }
    let samples: u64 = counts.iter().sum();
    if samples == 0 {
        return Err(Error::Domain("no samples".into()));
    }
    let expected = samples as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let df = counts.len() as u64 - 1;
    let critical_value = chi_square_critical_value(df, significance)?;
    Ok(UniformityReport {
        counts: counts.to_vec(),
        samples,
        expected,
        statistic,
        degrees_of_freedom: df,
        significance,
        critical_value,
        pass: statistic <= critical_value,
    })
}
