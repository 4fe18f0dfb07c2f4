//! Log-linear performance-vs-compute fits and their inversion.
//!
//! Performance is modeled as P = m·log10(C) + b over a baseline family.
//! Inverting the fit at an enhanced model's score and dividing by its
//! compute gives a fitted CEG estimate. Slopes flatter than
//! [`SLOPE_EPSILON`] are rejected as non-invertible; negative slopes
//! invert formally but mark the estimate not meaningful.

use std::collections::BTreeSet;
use std::fmt;

use crate::estimate::{Caveat, CegEstimate, CegKind, Provenance};

/// Slopes with |m| at or below this (metric units per decade) are flat:
/// more compute does not measurably move the metric, so the inverse is
/// undefined in practice.
pub const SLOPE_EPSILON: f64 = 1e-12;

/// Least-squares line through (log10 C, P) points.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLinearFit {
    /// Metric units per decade of compute.
    pub slope: f64,
    /// Metric units at C = 1 FLOP.
    pub intercept: f64,
    /// Compute range of the fitted points, in FLOP.
    pub domain: (f64, f64),
    /// Per-point residuals, in input order.
    pub residuals: Vec<f64>,
    /// Exactly two distinct compute values backed the fit.
    pub two_point: bool,
}

impl LogLinearFit {
    pub fn n_points(&self) -> usize {
        self.residuals.len()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals
            .iter()
            .fold(0.0f64, |acc, r| acc.max(r.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    /// Fewer than two distinct compute values.
    TooFewPoints {
        distinct: usize,
    },
    NonPositiveCompute {
        value: f64,
    },
    /// |slope| <= SLOPE_EPSILON: flat scaling, CEG undefined.
    NotInvertible {
        slope: f64,
    },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::TooFewPoints { distinct } => {
                write!(f, "need at least 2 distinct compute values, got {distinct}")
            }
            FitError::NonPositiveCompute { value } => {
                write!(f, "compute must be positive, got {value}")
            }
            FitError::NotInvertible { slope } => {
                write!(f, "slope {slope} is flat; scaling does not move the metric")
            }
        }
    }
}

impl std::error::Error for FitError {}

/// Closed-form unweighted least squares of performance against log10
/// compute. Two-point inputs are allowed but flagged.
pub fn fit_log_linear(points: &[(f64, f64)]) -> Result<LogLinearFit, FitError> {
    for &(c, _) in points {
        if !(c > 0.0 && c.is_finite()) {
            return Err(FitError::NonPositiveCompute { value: c });
        }
    }
    let mut distinct: Vec<f64> = points.iter().map(|&(c, _)| c).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite compute"));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(FitError::TooFewPoints {
            distinct: distinct.len(),
        });
    }

    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(c, _)| c.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, p)| p).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    // Centered sums keep the normal equations well conditioned for the
    // narrow decade ranges these fits see.
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();

    Ok(LogLinearFit {
        slope,
        intercept,
        domain: (distinct[0], distinct[distinct.len() - 1]),
        residuals,
        two_point: distinct.len() == 2,
    })
}

/// Predicted performance at a compute budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// The budget lies outside the fitted domain.
    pub extrapolated: bool,
}

pub fn predict(fit: &LogLinearFit, compute: f64) -> Result<Prediction, FitError> {
    if !(compute > 0.0 && compute.is_finite()) {
        return Err(FitError::NonPositiveCompute { value: compute });
    }
    Ok(Prediction {
        value: fit.slope * compute.log10() + fit.intercept,
        extrapolated: compute < fit.domain.0 || compute > fit.domain.1,
    })
}

/// Compute budget needed to reach a target performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub compute: f64,
    /// Slope was negative: bigger baselines scored worse, so the budget
    /// is formally defined but meaningless as a gain.
    pub inverted_scaling: bool,
    pub extrapolated: bool,
}

pub fn invert(fit: &LogLinearFit, target: f64) -> Result<Inversion, FitError> {
    if fit.slope.abs() <= SLOPE_EPSILON {
        return Err(FitError::NotInvertible { slope: fit.slope });
    }
    let compute = 10f64.powf((target - fit.intercept) / fit.slope);
    Ok(Inversion {
        compute,
        inverted_scaling: fit.slope < 0.0,
        extrapolated: compute < fit.domain.0 || compute > fit.domain.1,
    })
}

/// CEG from a fitted law: invert the baseline at the enhanced score and
/// divide by the enhanced compute. Always carries the log-linear caveat.
pub fn fitted_ceg(fit: &LogLinearFit, enhanced: (f64, f64)) -> Result<CegEstimate, FitError> {
    let (enhanced_compute, enhanced_score) = enhanced;
    if !(enhanced_compute > 0.0 && enhanced_compute.is_finite()) {
        return Err(FitError::NonPositiveCompute {
            value: enhanced_compute,
        });
    }
    let inversion = invert(fit, enhanced_score)?;
    let mut caveats = BTreeSet::new();
    caveats.insert(Caveat::LogLinearAssumption);
    if fit.two_point {
        caveats.insert(Caveat::TwoPointFit);
    }
    if inversion.extrapolated {
        caveats.insert(Caveat::Extrapolated);
    }
    if inversion.inverted_scaling {
        caveats.insert(Caveat::NonMonotonicBaseline);
    }
    Ok(CegEstimate {
        value: inversion.compute / enhanced_compute,
        kind: CegKind::Fitted,
        provenance: Provenance::ScalingFit {
            slope: fit.slope,
            intercept: fit.intercept,
            n_points: fit.n_points(),
            enhanced_compute,
            enhanced_score,
            enhanced_eval: None,
        },
        caveats,
    })
}
