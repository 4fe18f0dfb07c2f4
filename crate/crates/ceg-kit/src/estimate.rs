//! Shared vocabulary for compute-equivalent-gain estimates: the estimate
//! itself, how it was derived, and the caveats attached along the way.

use std::collections::BTreeSet;
use std::fmt;

/// How a CEG value was obtained, ordered roughly by strength of claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CegKind {
    /// Smaller enhanced model strictly beats a larger baseline: the
    /// compute ratio lower-bounds the true CEG.
    LowerBound,
    /// Performance gap small relative to the scaling spread: the compute
    /// ratio is a rough point estimate.
    RoughPoint,
    /// Two-point log-linear interpolation between baseline scales.
    Interpolated,
    /// Inverted from a fitted log-linear scaling law.
    Fitted,
}

impl fmt::Display for CegKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CegKind::LowerBound => "lower_bound",
            CegKind::RoughPoint => "rough_point",
            CegKind::Interpolated => "interpolated",
            CegKind::Fitted => "fitted",
        };
        f.write_str(s)
    }
}

/// Qualifiers that weaken an estimate without invalidating it, except
/// for `NonMonotonicBaseline`, which marks the estimate not meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Caveat {
    /// The paired models differ in architecture or training data.
    CrossFamily,
    /// Baseline family known or suspected not compute-optimal.
    SuboptimalScaling,
    /// More baseline compute did not improve performance; the inversion
    /// is formally defined but tells us nothing about the enhancement.
    NonMonotonicBaseline,
    /// The scaling relation rests on exactly two data points.
    TwoPointFit,
    /// The inverted compute lies outside the fitted domain.
    Extrapolated,
    /// Fitted estimates assume a plain log-linear law; real benchmarks
    /// plateau and bend, so treat the number accordingly.
    LogLinearAssumption,
}

impl fmt::Display for Caveat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Caveat::CrossFamily => "cross_family",
            Caveat::SuboptimalScaling => "suboptimal_scaling",
            Caveat::NonMonotonicBaseline => "non_monotonic_baseline",
            Caveat::TwoPointFit => "two_point_fit",
            Caveat::Extrapolated => "extrapolated",
            Caveat::LogLinearAssumption => "log_linear_assumption",
        };
        f.write_str(s)
    }
}

/// A pairing requirement that could not be met and was recorded instead
/// of dropping the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Relaxation {
    /// The enhanced model does not strictly outperform the larger one.
    MissingPerformanceDominance,
    /// The two models come from different families.
    CrossFamily,
}

impl fmt::Display for Relaxation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relaxation::MissingPerformanceDominance => "missing_performance_dominance",
            Relaxation::CrossFamily => "cross_family",
        };
        f.write_str(s)
    }
}

/// A (larger baseline, smaller enhanced) record pairing on one benchmark.
/// Indices address the snapshot's evaluation slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair {
    pub benchmark: String,
    pub larger_model: String,
    pub enhanced_model: String,
    pub larger_eval: usize,
    pub enhanced_eval: usize,
    pub relaxations: BTreeSet<Relaxation>,
}

impl ModelPair {
    pub fn describe(&self) -> String {
        format!("me={} ml={}", self.enhanced_model, self.larger_model)
    }
}

/// What produced an estimate: a concrete record pair, a two-point
/// interpolation, or a scaling-law inversion.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Pair(ModelPair),
    TwoPointInterpolation {
        delta_enh: f64,
        delta_scale: f64,
        compute_ratio: f64,
        /// Evaluation index of the enhanced record, when derived from one.
        enhanced_eval: Option<usize>,
    },
    ScalingFit {
        slope: f64,
        intercept: f64,
        n_points: usize,
        enhanced_compute: f64,
        enhanced_score: f64,
        enhanced_eval: Option<usize>,
    },
}

impl Provenance {
    pub fn enhanced_eval(&self) -> Option<usize> {
        match self {
            Provenance::Pair(pair) => Some(pair.enhanced_eval),
            Provenance::TwoPointInterpolation { enhanced_eval, .. } => *enhanced_eval,
            Provenance::ScalingFit { enhanced_eval, .. } => *enhanced_eval,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Provenance::Pair(pair) => pair.describe(),
            Provenance::TwoPointInterpolation {
                delta_enh,
                delta_scale,
                compute_ratio,
                ..
            } => {
                format!("interp(d_enh={delta_enh} d_scale={delta_scale} ratio={compute_ratio})")
            }
            Provenance::ScalingFit {
                slope,
                intercept,
                n_points,
                enhanced_compute,
                ..
            } => {
                format!("fit(m={slope} b={intercept} n={n_points} c_e={enhanced_compute:e})")
            }
        }
    }

    /// Like [`describe`](Self::describe), with record settings resolved,
    /// so pairs that differ only in evaluation protocol stay distinct.
    pub fn describe_in(&self, snapshot: &crate::registry::RegistrySnapshot) -> String {
        let Provenance::Pair(pair) = self else {
            return self.describe();
        };
        let tag = |idx: usize, model: &str| -> String {
            let setting = snapshot.evaluations()[idx].setting_string();
            if setting.is_empty() {
                model.to_string()
            } else {
                format!("{model}[{setting}]")
            }
        };
        format!(
            "me={} ml={}",
            tag(pair.enhanced_eval, &pair.enhanced_model),
            tag(pair.larger_eval, &pair.larger_model)
        )
    }
}

/// A compute-equivalent gain: the factor by which baseline training
/// compute would have to grow to match the enhanced model's score.
#[derive(Debug, Clone, PartialEq)]
pub struct CegEstimate {
    pub value: f64,
    pub kind: CegKind,
    pub provenance: Provenance,
    pub caveats: BTreeSet<Caveat>,
}

impl CegEstimate {
    /// False when the baseline scaling was non-monotonic: the number is
    /// reported for transparency but must not be read as a gain.
    pub fn is_meaningful(&self) -> bool {
        !self.caveats.contains(&Caveat::NonMonotonicBaseline)
    }

    pub fn caveat_string(&self) -> String {
        if self.caveats.is_empty() {
            "-".to_string()
        } else {
            self.caveats
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";")
        }
    }
}
