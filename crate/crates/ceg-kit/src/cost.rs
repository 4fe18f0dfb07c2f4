//! Inference-cost multipliers and cost-profile assembly.
//!
//! Published cost figures mix exact values with bounds ("<3.3%", ">64"),
//! so every reported number carries a comparator. Derivation operands are
//! echoed so a profile can be re-evaluated from what it stores.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::compute::CostFraction;
use crate::compute::{cost_fraction, LedgerError, Quantity};
use crate::registry::{CostInput, InferenceCost, OneTimeCost};

/// Qualifier attached to a reported number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Exact,
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "~")]
    Approx,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Comparator::Exact => "=",
            Comparator::Less => "<",
            Comparator::Greater => ">",
            Comparator::Approx => "~",
        };
        f.write_str(s)
    }
}

/// A number together with how literally to read it. Intervals cover
/// cells quoted only as a bounded range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reported {
    Point { cmp: Comparator, value: f64 },
    Interval { lo: f64, hi: f64 },
}

impl Reported {
    pub fn exact(value: f64) -> Self {
        Reported::Point {
            cmp: Comparator::Exact,
            value,
        }
    }

    /// Comparator column for tab-separated output; intervals print `..`.
    pub fn cmp_str(&self) -> String {
        match self {
            Reported::Point { cmp, .. } => cmp.to_string(),
            Reported::Interval { .. } => "..".to_string(),
        }
    }

    /// Value column for tab-separated output.
    pub fn value_str(&self) -> String {
        match self {
            Reported::Point { value, .. } => format!("{value}"),
            Reported::Interval { lo, hi } => format!("{lo} and {hi}"),
        }
    }
}

/// Echoed operands behind an inference multiplier.
#[derive(Debug, Clone, PartialEq)]
pub enum InferenceDerivation {
    Sampling {
        units: f64,
        calls: f64,
    },
    TokenRatio {
        tokens_with: f64,
        tokens_without: f64,
    },
    Declared,
    /// Quoted interval with no underlying operands; stored as a fixture,
    /// not a derivation.
    IntervalFixture,
    /// Enhancement adds no inference work (multiplier 1).
    None,
}

impl InferenceDerivation {
    /// Re-evaluate the stored operands; `None` when nothing to derive.
    pub fn reevaluate(&self) -> Option<f64> {
        match self {
            InferenceDerivation::Sampling { units, calls } => Some(units * calls),
            InferenceDerivation::TokenRatio {
                tokens_with,
                tokens_without,
            } => Some(tokens_with / tokens_without),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InferenceDerivation::Sampling { units, calls } => {
                format!("sampling({units}x{calls})")
            }
            InferenceDerivation::TokenRatio {
                tokens_with,
                tokens_without,
            } => {
                format!("token_ratio({tokens_with}/{tokens_without})")
            }
            InferenceDerivation::Declared => "declared".to_string(),
            InferenceDerivation::IntervalFixture => "interval_fixture".to_string(),
            InferenceDerivation::None => "none".to_string(),
        }
    }
}

/// One-time fine-tuning fraction plus inference multiplier for one
/// enhancement, with the operands that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    pub enhancement: String,
    pub one_time: Reported,
    /// Present when the fraction was derived from raw operands.
    pub one_time_fraction: Option<CostFraction>,
    pub inference: Reported,
    pub inference_derivation: InferenceDerivation,
}

impl CostProfile {
    pub fn describe_derivation(&self) -> String {
        let one_time = match &self.one_time_fraction {
            Some(frac) => format!(
                "one_time({:e}/{:e} {})",
                frac.numerator.value, frac.denominator.value, frac.numerator.unit
            ),
            None => "one_time(declared)".to_string(),
        };
        format!("{one_time} {}", self.inference_derivation.describe())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostError {
    ZeroCount { name: &'static str },
    ZeroDenominator,
    Ledger(LedgerError),
    MissingOperand { name: &'static str },
}

impl fmt::Display for CostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostError::ZeroCount { name } => write!(f, "{name} must be at least 1"),
            CostError::ZeroDenominator => {
                f.write_str("token count without enhancement must be positive")
            }
            CostError::Ledger(e) => e.fmt(f),
            CostError::MissingOperand { name } => write!(f, "missing operand: {name}"),
        }
    }
}

impl std::error::Error for CostError {}

impl From<LedgerError> for CostError {
    fn from(e: LedgerError) -> Self {
        CostError::Ledger(e)
    }
}

/// Inference multiplier for search- or sample-style enhancements:
/// explored units times model calls per unit.
pub fn sampling_multiplier(units_explored: f64, calls_per_unit: f64) -> Result<f64, CostError> {
    if units_explored.is_nan() || units_explored < 1.0 {
        return Err(CostError::ZeroCount {
            name: "units_explored",
        });
    }
    if calls_per_unit.is_nan() || calls_per_unit < 1.0 {
        return Err(CostError::ZeroCount {
            name: "calls_per_unit",
        });
    }
    Ok(units_explored * calls_per_unit)
}

/// Inference multiplier from output length: tokens with the enhancement
/// over tokens without it.
pub fn token_ratio_multiplier(tokens_with: f64, tokens_without: f64) -> Result<f64, CostError> {
    if tokens_without.is_nan() || tokens_without <= 0.0 {
        return Err(CostError::ZeroDenominator);
    }
    if tokens_with.is_nan() || tokens_with <= 0.0 {
        return Err(CostError::ZeroCount {
            name: "tokens_with",
        });
    }
    Ok(tokens_with / tokens_without)
}

/// Join a one-time fraction and an inference multiplier into a profile.
/// `one_time = None` means the enhancement needs no fine-tuning and is
/// encoded as an exact 0; a missing inference multiplier is an exact 1.
pub fn assemble_profile(
    enhancement: &str,
    one_time: Option<(CostFraction, Comparator)>,
    inference: Option<(Reported, InferenceDerivation)>,
) -> CostProfile {
    let (one_time_reported, one_time_fraction) = match one_time {
        Some((frac, cmp)) => (
            Reported::Point {
                cmp,
                value: frac.fraction,
            },
            Some(frac),
        ),
        None => (Reported::exact(0.0), None),
    };
    let (inference_reported, inference_derivation) = match inference {
        Some((reported, derivation)) => (reported, derivation),
        None => (Reported::exact(1.0), InferenceDerivation::None),
    };
    CostProfile {
        enhancement: enhancement.to_string(),
        one_time: one_time_reported,
        one_time_fraction,
        inference: inference_reported,
        inference_derivation,
    }
}

/// Evaluate a raw cost-input record into a profile.
pub fn profile_from_input(input: &CostInput) -> Result<CostProfile, CostError> {
    let (inference, derivation) = inference_from_input(&input.inference)?;
    match &input.one_time {
        Some(OneTimeCost::Ratio {
            numerator,
            denominator,
            unit,
            cmp,
        }) => {
            let frac = cost_fraction(
                Quantity {
                    value: *numerator,
                    unit: *unit,
                },
                Quantity {
                    value: *denominator,
                    unit: *unit,
                },
            )?;
            Ok(assemble_profile(
                &input.enhancement,
                Some((frac, *cmp)),
                Some((inference, derivation)),
            ))
        }
        // No operands to echo; carry the declared fraction directly.
        Some(OneTimeCost::Declared { fraction, cmp }) => Ok(CostProfile {
            enhancement: input.enhancement.clone(),
            one_time: Reported::Point {
                cmp: *cmp,
                value: *fraction,
            },
            one_time_fraction: None,
            inference,
            inference_derivation: derivation,
        }),
        None => Ok(assemble_profile(
            &input.enhancement,
            None,
            Some((inference, derivation)),
        )),
    }
}

fn inference_from_input(
    input: &Option<InferenceCost>,
) -> Result<(Reported, InferenceDerivation), CostError> {
    Ok(match input {
        Some(InferenceCost::Sampling { units, calls, cmp }) => (
            Reported::Point {
                cmp: *cmp,
                value: sampling_multiplier(*units, *calls)?,
            },
            InferenceDerivation::Sampling {
                units: *units,
                calls: *calls,
            },
        ),
        Some(InferenceCost::TokenRatio {
            tokens_with,
            tokens_without,
            cmp,
        }) => (
            Reported::Point {
                cmp: *cmp,
                value: token_ratio_multiplier(*tokens_with, *tokens_without)?,
            },
            InferenceDerivation::TokenRatio {
                tokens_with: *tokens_with,
                tokens_without: *tokens_without,
            },
        ),
        Some(InferenceCost::Declared { value, cmp }) => (
            Reported::Point {
                cmp: *cmp,
                value: *value,
            },
            InferenceDerivation::Declared,
        ),
        Some(InferenceCost::Interval { lo, hi }) => (
            Reported::Interval { lo: *lo, hi: *hi },
            InferenceDerivation::IntervalFixture,
        ),
        None => (Reported::exact(1.0), InferenceDerivation::None),
    })
}
