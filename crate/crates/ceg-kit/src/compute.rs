//! Deterministic FLOP and token accounting.
//!
//! All training-compute arithmetic funnels through here so that every
//! estimate in the pipeline traces back to one of four methods: the
//! 6·N·D convention, step/batch products, hardware-hour conversion, or a
//! declared figure taken from the source publication. Everything is pure
//! f64 arithmetic; golden tests pin the exact products.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registry::ModelSpec;

/// Training FLOP per parameter per token under the dense-transformer
/// convention (forward + backward). Fixed, not configurable.
pub const FLOP_PER_PARAM_TOKEN: f64 = 6.0;

/// Seconds per wall-clock hour, exact.
pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Hours per day, exact.
pub const HOURS_PER_DAY: f64 = 24.0;

/// How a training-FLOP figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopMethod {
    ParamsTokens,
    StepsBatch,
    HardwareHours,
    Declared,
}

impl fmt::Display for FlopMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FlopMethod::ParamsTokens => "params_tokens",
            FlopMethod::StepsBatch => "steps_batch",
            FlopMethod::HardwareHours => "hardware_hours",
            FlopMethod::Declared => "declared",
        };
        f.write_str(s)
    }
}

/// Operands echoed alongside a FLOP value so the derivation can be
/// re-evaluated or printed. The variant fixes the method.
#[derive(Debug, Clone, PartialEq)]
pub enum FlopInputs {
    ParamsTokens {
        params: f64,
        tokens: f64,
    },
    StepsBatch {
        steps: f64,
        batch: f64,
        seq_len: f64,
        params: f64,
    },
    HardwareHours {
        chips: f64,
        hours: f64,
        peak_flops: f64,
        utilization: f64,
    },
    Declared,
}

/// A training-compute figure with its derivation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopEstimate {
    pub value: f64,
    pub inputs: FlopInputs,
}

impl FlopEstimate {
    pub fn method(&self) -> FlopMethod {
        match self.inputs {
            FlopInputs::ParamsTokens { .. } => FlopMethod::ParamsTokens,
            FlopInputs::StepsBatch { .. } => FlopMethod::StepsBatch,
            FlopInputs::HardwareHours { .. } => FlopMethod::HardwareHours,
            FlopInputs::Declared => FlopMethod::Declared,
        }
    }

    /// Re-evaluate the echoed operands. Equals `value` exactly for
    /// non-declared methods.
    pub fn reevaluate(&self) -> f64 {
        match self.inputs {
            FlopInputs::ParamsTokens { params, tokens } => params * tokens * FLOP_PER_PARAM_TOKEN,
            FlopInputs::StepsBatch {
                steps,
                batch,
                seq_len,
                params,
            } => steps * batch * seq_len * params * FLOP_PER_PARAM_TOKEN,
            FlopInputs::HardwareHours {
                chips,
                hours,
                peak_flops,
                utilization,
            } => chips * hours * SECONDS_PER_HOUR * peak_flops * utilization,
            FlopInputs::Declared => self.value,
        }
    }
}

/// Unit of a cost-fraction operand. Fractions never mix units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Flop,
    Tokens,
    ChipHours,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::Flop => "flop",
            Unit::Tokens => "tokens",
            Unit::ChipHours => "chip_hours",
        };
        f.write_str(s)
    }
}

/// A positive quantity tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn flop(value: f64) -> Self {
        Quantity {
            value,
            unit: Unit::Flop,
        }
    }
    pub fn tokens(value: f64) -> Self {
        Quantity {
            value,
            unit: Unit::Tokens,
        }
    }
    pub fn chip_hours(value: f64) -> Self {
        Quantity {
            value,
            unit: Unit::ChipHours,
        }
    }
}

/// A dimensionless ratio of two same-unit quantities, e.g. fine-tuning
/// tokens over pre-training tokens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFraction {
    pub numerator: Quantity,
    pub denominator: Quantity,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LedgerError {
    /// An operand that must be strictly positive was zero or negative.
    NonPositive { name: &'static str, value: f64 },
    /// Hardware utilization must lie in (0, 1].
    UtilizationOutOfRange { value: f64 },
    /// Caller mixed units (e.g. FLOP numerator over a token denominator).
    UnitMismatch { numerator: Unit, denominator: Unit },
}

impl fmt::Display for LedgerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LedgerError::NonPositive { name, value } => {
                write!(f, "{name} must be positive, got {value}")
            }
            LedgerError::UtilizationOutOfRange { value } => {
                write!(f, "utilization must be in (0, 1], got {value}")
            }
            LedgerError::UnitMismatch {
                numerator,
                denominator,
            } => {
                write!(f, "unit mismatch: {numerator} over {denominator}")
            }
        }
    }
}

impl std::error::Error for LedgerError {}

fn require_positive(name: &'static str, value: f64) -> Result<(), LedgerError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(LedgerError::NonPositive { name, value })
    }
}

/// Training FLOP from parameter and token counts: 6·N·D.
pub fn flop_train(param_count: f64, tokens: f64) -> Result<FlopEstimate, LedgerError> {
    require_positive("param_count", param_count)?;
    require_positive("tokens", tokens)?;
    Ok(FlopEstimate {
        value: param_count * tokens * FLOP_PER_PARAM_TOKEN,
        inputs: FlopInputs::ParamsTokens {
            params: param_count,
            tokens,
        },
    })
}

/// Training FLOP from optimizer steps: steps·batch·seq_len·N·6.
///
/// `batch` is in sequences; steps·batch·seq_len is the token count, so
/// this is exactly `flop_train(N, steps·batch·seq_len)`.
pub fn flop_from_steps(
    steps: f64,
    batch: f64,
    seq_len: f64,
    param_count: f64,
) -> Result<FlopEstimate, LedgerError> {
    require_positive("steps", steps)?;
    require_positive("batch", batch)?;
    require_positive("seq_len", seq_len)?;
    require_positive("param_count", param_count)?;
    Ok(FlopEstimate {
        value: steps * batch * seq_len * param_count * FLOP_PER_PARAM_TOKEN,
        inputs: FlopInputs::StepsBatch {
            steps,
            batch,
            seq_len,
            params: param_count,
        },
    })
}

/// Training FLOP from a hardware bill: chips · hours · 3600 s/h ·
/// peak FLOP/s · utilization.
pub fn flop_from_hardware(
    chips: f64,
    hours: f64,
    peak_flops: f64,
    utilization: f64,
) -> Result<FlopEstimate, LedgerError> {
    require_positive("chips", chips)?;
    require_positive("hours", hours)?;
    require_positive("peak_flops", peak_flops)?;
    if !(utilization > 0.0 && utilization <= 1.0) {
        return Err(LedgerError::UtilizationOutOfRange { value: utilization });
    }
    Ok(FlopEstimate {
        value: chips * hours * SECONDS_PER_HOUR * peak_flops * utilization,
        inputs: FlopInputs::HardwareHours {
            chips,
            hours,
            peak_flops,
            utilization,
        },
    })
}

/// Wrap a published training-FLOP figure without rederiving it.
pub fn flop_declared(value: f64) -> Result<FlopEstimate, LedgerError> {
    require_positive("training_flop", value)?;
    Ok(FlopEstimate {
        value,
        inputs: FlopInputs::Declared,
    })
}

/// Chip-hours for a hardware allocation (chips · hours). Days convert at
/// an exact 24 h/day before calling this.
pub fn chip_hours(chips: f64, hours: f64) -> Result<f64, LedgerError> {
    require_positive("chips", chips)?;
    require_positive("hours", hours)?;
    Ok(chips * hours)
}

/// Compute-optimal token estimate for a training budget: 2·sqrt(C).
pub fn chinchilla_tokens(flop: f64) -> Result<f64, LedgerError> {
    require_positive("flop", flop)?;
    Ok(2.0 * flop.sqrt())
}

/// Exact same-unit ratio, e.g. fine-tuning cost over pre-training cost.
pub fn cost_fraction(
    numerator: Quantity,
    denominator: Quantity,
) -> Result<CostFraction, LedgerError> {
    if numerator.unit != denominator.unit {
        return Err(LedgerError::UnitMismatch {
            numerator: numerator.unit,
            denominator: denominator.unit,
        });
    }
    require_positive("numerator", numerator.value)?;
    require_positive("denominator", denominator.value)?;
    Ok(CostFraction {
        numerator,
        denominator,
        fraction: numerator.value / denominator.value,
    })
}

/// Resolve a model's training compute: the declared figure wins, else
/// 6·N·D from known parameter and token counts.
pub fn resolve_training_flop(model: &ModelSpec) -> Option<FlopEstimate> {
    if let Some(flop) = model.training_flop {
        return flop_declared(flop).ok();
    }
    let tokens = model.tokens_seen?;
    flop_train(model.param_count, tokens).ok()
}
