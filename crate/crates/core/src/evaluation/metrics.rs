//! Regression metrics in millimetres and Student-t confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{EvalError, Result};

/// Tolerances for P@m, in mm.
pub const P_AT_THRESHOLDS_MM: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSet {
    pub rmse_mm: f64,
    pub mae_mm: f64,
    pub medae_mm: f64,
    /// `None` when the labels have zero variance.
    pub r2: Option<f64>,
    /// Fractions matching [`P_AT_THRESHOLDS_MM`].
    pub p_at: [f64; 5],
    pub runtime_s: f64,
}

impl MetricSet {
    pub fn p_at(&self, threshold_mm: f64) -> Option<f64> {
        P_AT_THRESHOLDS_MM
            .iter()
            .position(|&t| t == threshold_mm)
            .map(|i| self.p_at[i])
    }
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> f64 {
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    (sse / y.len() as f64).sqrt()
}

/// Median with the mean of the two central values for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn metrics(y: &[f64], y_hat: &[f64]) -> Result<MetricSet> {
    if y.len() != y_hat.len() {
        return Err(EvalError::LengthMismatch {
            labels: y.len(),
            predictions: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = y.len() as f64;
    let mut abs: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).collect();
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    let mut p_at = [0.0; 5];
    for (slot, &t) in p_at.iter_mut().zip(&P_AT_THRESHOLDS_MM) {
        *slot = abs.iter().filter(|&&e| e <= t).count() as f64 / n;
    }
    let mae = abs.iter().sum::<f64>() / n;
    Ok(MetricSet {
        rmse_mm: (ss_res / n).sqrt(),
        mae_mm: mae,
        medae_mm: median(&mut abs),
        r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
        p_at,
        runtime_s: 0.0,
    })
}

/// Two-sided 95% Student-t quantile with `n - 1` degrees of freedom.
pub fn t_quantile_975(n: usize) -> f64 {
    StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975)
}

/// `(mean, half_width)` of the 95% interval `mean ± t * s / sqrt(n)`.
pub fn confidence_interval(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(EvalError::TooFewValues(values.len()));
    }
    let n = values.len() as f64;
    let mut mean = 0.0;
    for (i, v) in values.iter().enumerate() {
        mean += (v - mean) / (i + 1) as f64;
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, t_quantile_975(values.len()) * var.sqrt() / n.sqrt()))
}
