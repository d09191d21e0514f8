//! Least-squares calibration of the unknown constant in the invertibility tail.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use ncconc::csfourier::InvertibilityTail;
use ncconc::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub c_hat: f64,
    /// Root-mean-square residual of the log-probabilities.
    pub residual: f64,
    pub used: usize,
}

/// Fits `Ĉ` in `log(P/s) ≈ −t²/(2Ĉ²e)` over records with a positive empirical tail.
///
/// The model is linear in `b = 1/(2Ĉ²e)`, so the fit is a one-parameter
/// regression through the origin.
pub fn fit_constant(records: &[InvertibilityTail], s: usize) -> ncconc::Result<ConstantFit> {
    if s == 0 {
        return Err(Error::Parameter("sparsity must be >= 1".into()));
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.empirical.mean > 0.0 && r.t > 0.0)
        .map(|r| (r.t * r.t, (r.empirical.mean / s as f64).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 records with a positive tail, got {}", pts.len())));
    }
    let num: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let den: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let b = -num / den;
    if !(b > 0.0) {
        return Err(Error::Degenerate("tail does not decay with t; no positive constant fits".into()));
    }
    let rss: f64 = pts.iter().map(|(x, y)| (y + b * x).powi(2)).sum();
    Ok(ConstantFit {
        c_hat: (1.0 / (2.0 * b * E)).sqrt(),
        residual: (rss / pts.len() as f64).sqrt(),
        used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncconc::ensembles::TailEstimate;

    fn record(t: f64, mean: f64) -> InvertibilityTail {
        InvertibilityTail {
            t_eps: t,
            empirical: TailEstimate { t, mean, ci_low: mean, ci_high: mean, trials: 1, seed: 0 },
            eps: 1.0,
            t,
            bound: 0.0,
            in_range: true,
        }
    }

    #[test]
    fn recovers_synthetic_constant() {
        let s = 3;
        let recs: Vec<_> = (1..=8)
            .map(|i| {
                let t = 0.5 * i as f64;
                record(t, s as f64 * (-t * t / (2.0 * 4.0 * E)).exp())
            })
            .collect();
        let fit = fit_constant(&recs, s).unwrap();
        assert!((fit.c_hat - 2.0).abs() < 0.05);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.used, 8);
    }

    #[test]
    fn zero_tails_are_unusable() {
        let recs: Vec<_> = (1..=5).map(|i| record(i as f64, 0.0)).collect();
        assert!(matches!(fit_constant(&recs, 2), Err(Error::Degenerate(_))));
        let two = vec![record(1.0, 0.5), record(2.0, 0.1), record(3.0, 0.0)];
        assert!(fit_constant(&two, 1).is_err());
    }
}
