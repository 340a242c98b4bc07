//! Small statistics helpers shared by estimators and reports.

use crate::error::{Error, Result};

/// Standard normal distribution function, accurate in the far tails.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor `n - 1`); NaN for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Sample standard deviation over sample mean.
pub fn relative_accuracy(estimates: &[f64]) -> Result<f64> {
    if estimates.len() < 2 {
        return Err(Error::Config(
            "relative accuracy needs at least two estimates".into(),
        ));
    }
    let m = mean(estimates);
    if !(m > 0.0) {
        return Err(Error::UndefinedRelativeAccuracy(m));
    }
    Ok(sample_variance(estimates).sqrt() / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Values from a 40-digit evaluation.
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        let tail = normal_cdf(-6.0);
        assert!((tail / 9.865_876_450_376_982e-10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_accuracy_arithmetic() {
        assert_eq!(relative_accuracy(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        let r = relative_accuracy(&[1.0, 3.0]).unwrap();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(
            relative_accuracy(&[0.0, 0.0]),
            Err(Error::UndefinedRelativeAccuracy(_))
        ));
        assert!(relative_accuracy(&[1.0]).is_err());
    }
}
