//! Least-squares slopes of `log value` against `log ε`, with an optional
//! `|log ε|^q` correction, and the pass/fail checks attached to them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub eps: f64,
    pub value: f64,
    /// Absolute error estimate of `value`.
    pub err: f64,
}

impl ScalingPoint {
    pub fn new(eps: f64, value: f64, err: f64) -> Self {
        ScalingPoint { eps, value, err }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Exponent `q` of the divided-out `|log ε|^q` factor.
    pub log_power: f64,
    /// Root-mean-square residual in `log value`.
    pub residual: f64,
}

fn check_points(points: &[ScalingPoint]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "slope fits need at least 4 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.value > 0.0 && p.eps > 0.0 && p.eps < 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "slope fits need 0 < ε < 1 and positive values, got ε = {}, value = {}",
            p.eps, p.value
        )));
    }
    Ok(())
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, intercept, (rss / m).sqrt())
}

/// Plain log–log fit, `log value ≈ intercept + slope · log ε`.
pub fn fit_slope(points: &[ScalingPoint]) -> Result<SlopeFit> {
    fit_with_power(points, 0.0)
}

fn fit_with_power(points: &[ScalingPoint], q: f64) -> Result<SlopeFit> {
    check_points(points)?;
    let xs: Vec<f64> = points.iter().map(|p| p.eps.ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| p.value.ln() - q * p.eps.ln().abs().ln())
        .collect();
    let (slope, intercept, residual) = line_fit(&xs, &ys);
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(Error::InvalidArgument("slope fits need distinct ε values".into()));
    }
    Ok(SlopeFit {
        slope,
        intercept,
        log_power: q,
        residual,
    })
}

/// Fit `value ≈ C ε^s |log ε|^q` for each candidate `q` and keep the one with
/// the smallest residual.
pub fn fit_slope_with_log(points: &[ScalingPoint], powers: &[f64]) -> Result<SlopeFit> {
    let mut best: Option<SlopeFit> = None;
    for &q in powers {
        let fit = fit_with_power(points, q)?;
        if best.is_none_or(|b| fit.residual < b.residual - 1e-12) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no log powers to try".into()))
}

/// What a sweep is expected to show.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalingCheck {
    /// `|slope - target| ≤ tolerance`.
    SlopeEquals { target: f64, tolerance: f64 },
    /// `slope ≥ target - tolerance`.
    SlopeAtLeast { target: f64, tolerance: f64 },
    /// `slope ≤ target + tolerance`.
    SlopeAtMost { target: f64, tolerance: f64 },
    /// `value / (ε^exponent |log ε|^log_power)` has `max/min ≤ factor`.
    Band {
        exponent: f64,
        log_power: f64,
        factor: f64,
    },
    /// Values strictly increase as ε decreases.
    IncreasingAsEpsDecreases,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub quantity: String,
    pub points: Vec<ScalingPoint>,
    pub fit: SlopeFit,
    /// Exponent the sweep is compared against.
    pub predicted: f64,
    pub check: ScalingCheck,
    /// Short statement of the expected behaviour.
    pub rationale: String,
    /// `max/min` of the normalised values for band checks.
    pub band_ratio: Option<f64>,
    pub passed: bool,
}

impl ScalingReport {
    pub fn new(
        quantity: &str,
        mut points: Vec<ScalingPoint>,
        check: ScalingCheck,
        rationale: &str,
    ) -> Result<Self> {
        check_points(&points)?;
        points.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let hi = points[0].eps;
        let lo = points[points.len() - 1].eps;
        if (hi / lo).log10() < 1.5 - 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "ε sweep spans only {:.2} decades (need 1.5)",
                (hi / lo).log10()
            )));
        }
        let (fit, predicted) = match check {
            ScalingCheck::SlopeEquals { target, .. }
            | ScalingCheck::SlopeAtLeast { target, .. }
            | ScalingCheck::SlopeAtMost { target, .. } => (fit_slope(&points)?, target),
            ScalingCheck::Band {
                exponent, log_power, ..
            } => (fit_with_power(&points, log_power)?, exponent),
            ScalingCheck::IncreasingAsEpsDecreases => (fit_slope(&points)?, f64::NAN),
        };
        let mut band_ratio = None;
        let passed = match check {
            ScalingCheck::SlopeEquals { target, tolerance } => (fit.slope - target).abs() <= tolerance,
            ScalingCheck::SlopeAtLeast { target, tolerance } => fit.slope >= target - tolerance,
            ScalingCheck::SlopeAtMost { target, tolerance } => fit.slope <= target + tolerance,
            ScalingCheck::Band {
                exponent,
                log_power,
                factor,
            } => {
                let normed: Vec<f64> = points
                    .iter()
                    .map(|p| p.value / (p.eps.powf(exponent) * p.eps.ln().abs().powf(log_power)))
                    .collect();
                let max = normed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = normed.iter().cloned().fold(f64::INFINITY, f64::min);
                band_ratio = Some(max / min);
                max / min <= factor
            }
            ScalingCheck::IncreasingAsEpsDecreases => points.windows(2).all(|w| w[1].value > w[0].value),
        };
        Ok(ScalingReport {
            quantity: quantity.to_string(),
            points,
            fit,
            predicted,
            check,
            rationale: rationale.to_string(),
            band_ratio,
            passed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sweep() -> Vec<f64> {
        vec![1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3]
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = sweep().iter().map(|&e| ScalingPoint::new(e, 3.0 * e * e, 0.0)).collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn log_correction_is_selected() {
        let pts: Vec<_> = sweep()
            .iter()
            .map(|&e| ScalingPoint::new(e, e * e * e.ln().abs(), 0.0))
            .collect();
        let fit = fit_slope_with_log(&pts, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(fit.log_power, 1.0);
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<_> = sweep()
            .iter()
            .map(|&e| ScalingPoint::new(e, e.powf(1.5) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)), 0.0))
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope / 1.5 - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn rejects_bad_sweeps() {
        let few: Vec<_> = [0.1, 0.01, 0.001].iter().map(|&e| ScalingPoint::new(e, e, 0.0)).collect();
        assert!(fit_slope(&few).is_err());
        let neg: Vec<_> = sweep().iter().map(|&e| ScalingPoint::new(e, -e, 0.0)).collect();
        assert!(fit_slope(&neg).is_err());
        let narrow: Vec<_> = [0.1, 0.08, 0.06, 0.05].iter().map(|&e| ScalingPoint::new(e, e, 0.0)).collect();
        let check = ScalingCheck::SlopeEquals {
            target: 1.0,
            tolerance: 0.05,
        };
        assert!(ScalingReport::new("x", narrow, check, "").is_err());
    }

    #[test]
    fn report_verdicts() {
        let pts: Vec<_> = sweep().iter().map(|&e| ScalingPoint::new(e, e * e, 0.0)).collect();
        let eq = |t| ScalingCheck::SlopeEquals { target: t, tolerance: 0.05 };
        assert!(ScalingReport::new("q", pts.clone(), eq(2.0), "").unwrap().passed);
        assert!(!ScalingReport::new("q", pts.clone(), eq(2.5), "").unwrap().passed);
        let at_least = ScalingCheck::SlopeAtLeast { target: 2.0, tolerance: 0.0 };
        assert!(ScalingReport::new("q", pts.clone(), at_least, "").unwrap().passed);
        let at_most = ScalingCheck::SlopeAtMost { target: 1.9, tolerance: 0.0 };
        assert!(!ScalingReport::new("q", pts.clone(), at_most, "").unwrap().passed);
        let band = ScalingCheck::Band {
            exponent: 2.0,
            log_power: 0.0,
            factor: 1.01,
        };
        let rep = ScalingReport::new("q", pts.clone(), band, "").unwrap();
        assert!(rep.passed && (rep.band_ratio.unwrap() - 1.0).abs() < 1e-12);
        let inc = ScalingReport::new("q", pts, ScalingCheck::IncreasingAsEpsDecreases, "").unwrap();
        assert!(!inc.passed);
    }
}
