//! Pair discovery and CEG estimation over a registry snapshot.
//!
//! The machinery walks (baseline, enhanced) record pairs on a benchmark:
//! where the smaller enhanced model strictly wins, the compute ratio is a
//! lower bound; where it roughly ties, the ratio is a rough point
//! estimate; otherwise the baseline family's scaling law (three or more
//! scales fitted, two scales interpolated) is inverted at the enhanced
//! score. Selection then keeps the strongest defensible estimate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::compute::resolve_training_flop;
use crate::estimate::{Caveat, CegEstimate, CegKind, ModelPair, Provenance, Relaxation};
use crate::registry::{EvaluationRecord, RegistrySnapshot};
use crate::scaling::{fit_log_linear, fitted_ceg};

/// Fraction of the baseline scaling spread a performance gap may occupy
/// and still count as "small" for a rough point estimate.
pub const DEFAULT_GAP_THETA: f64 = 0.10;

/// Setting key consulted by the largest-dataset selection rule.
pub const DATASET_SIZE_KEY: &str = "dataset_size";

#[derive(Debug, Clone, PartialEq)]
pub enum CegError {
    UnknownBenchmark(String),
    UnknownEnhancement(String),
    UnknownModel(String),
    /// No non-enhanced records on the benchmark.
    NoBaselines {
        benchmark: String,
    },
    /// No records carrying the enhancement on the benchmark.
    NoEnhanced {
        benchmark: String,
        enhancement: String,
    },
    /// Neither declared FLOP, 6·N·D, nor an equal-token param ratio can
    /// compare the two models.
    Incomparable {
        larger: String,
        enhanced: String,
    },
    /// The enhanced record does not strictly beat the larger baseline.
    DominanceViolated {
        larger: String,
        enhanced: String,
        shortfall: f64,
    },
    /// Performance gap too large for a rough point estimate.
    GapExceedsThreshold {
        gap: f64,
        limit: f64,
    },
    /// Baseline performance did not change across scales.
    FlatBaseline,
    /// Interpolation requires a compute ratio above one.
    RatioNotAboveOne {
        ratio: f64,
    },
    UnknownFamily(String),
    /// No compute axis: members lack FLOP and the family is not
    /// equal-token.
    UnresolvableCompute {
        family: String,
    },
    Fit(crate::scaling::FitError),
}

impl fmt::Display for CegError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CegError::UnknownBenchmark(id) => write!(f, "unknown benchmark '{id}'"),
            CegError::UnknownEnhancement(id) => write!(f, "unknown enhancement '{id}'"),
            CegError::UnknownModel(id) => write!(f, "unknown model '{id}'"),
            CegError::NoBaselines { benchmark } => {
                write!(f, "no baseline records on benchmark '{benchmark}'")
            }
            CegError::NoEnhanced {
                benchmark,
                enhancement,
            } => {
                write!(
                    f,
                    "no records with enhancement '{enhancement}' on benchmark '{benchmark}'"
                )
            }
            CegError::Incomparable { larger, enhanced } => {
                write!(
                    f,
                    "training compute of '{larger}' and '{enhanced}' is incomparable"
                )
            }
            CegError::DominanceViolated {
                larger,
                enhanced,
                shortfall,
            } => {
                write!(
                    f,
                    "'{enhanced}' does not strictly outperform '{larger}' (short by {shortfall})"
                )
            }
            CegError::GapExceedsThreshold { gap, limit } => {
                write!(f, "performance gap {gap} exceeds rough-point limit {limit}")
            }
            CegError::FlatBaseline => f.write_str("baseline performance is flat across scales"),
            CegError::RatioNotAboveOne { ratio } => {
                write!(f, "compute ratio must exceed 1, got {ratio}")
            }
            CegError::UnknownFamily(id) => write!(f, "unknown family '{id}'"),
            CegError::UnresolvableCompute { family } => {
                write!(f, "training compute of family '{family}' is unresolvable")
            }
            CegError::Fit(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CegError {}

impl From<crate::scaling::FitError> for CegError {
    fn from(e: crate::scaling::FitError) -> Self {
        CegError::Fit(e)
    }
}

/// Ratio of training compute C(larger)/C(enhanced). Declared FLOP wins,
/// then 6·N·D, then the parameter ratio inside one equal-token family.
pub fn compute_ratio(
    snapshot: &RegistrySnapshot,
    larger: &str,
    enhanced: &str,
) -> Result<f64, CegError> {
    let ml = snapshot
        .model(larger)
        .ok_or_else(|| CegError::UnknownModel(larger.to_string()))?;
    let me = snapshot
        .model(enhanced)
        .ok_or_else(|| CegError::UnknownModel(enhanced.to_string()))?;
    if let (Some(a), Some(b)) = (resolve_training_flop(ml), resolve_training_flop(me)) {
        return Ok(a.value / b.value);
    }
    if ml.family == me.family {
        if let Some(family) = snapshot.family(&ml.family) {
            if family.equal_tokens && ml.param_count > 0.0 && me.param_count > 0.0 {
                return Ok(ml.param_count / me.param_count);
            }
        }
    }
    Err(CegError::Incomparable {
        larger: larger.to_string(),
        enhanced: enhanced.to_string(),
    })
}

/// All (larger baseline, smaller enhanced) record pairs for one
/// enhancement on one benchmark. Pairs always satisfy the hard
/// requirements (baseline un-enhanced, enhanced carries the enhancement,
/// strictly more baseline compute); missing performance dominance and
/// family mismatch are recorded as relaxations instead of dropping the
/// pair.
pub fn candidate_pairs(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    enhancement: &str,
) -> Result<Vec<ModelPair>, CegError> {
    let bench = snapshot
        .benchmark(benchmark)
        .ok_or_else(|| CegError::UnknownBenchmark(benchmark.to_string()))?;
    if snapshot.enhancement(enhancement).is_none() {
        return Err(CegError::UnknownEnhancement(enhancement.to_string()));
    }

    let mut baselines: Vec<(usize, &EvaluationRecord)> = Vec::new();
    let mut enhanced: Vec<(usize, &EvaluationRecord)> = Vec::new();
    for (idx, record) in snapshot.evaluations().iter().enumerate() {
        if record.benchmark != benchmark {
            continue;
        }
        if record.is_baseline() {
            baselines.push((idx, record));
        } else if record.enhancements.contains(enhancement) {
            enhanced.push((idx, record));
        }
    }
    if baselines.is_empty() {
        return Err(CegError::NoBaselines {
            benchmark: benchmark.to_string(),
        });
    }
    if enhanced.is_empty() {
        return Err(CegError::NoEnhanced {
            benchmark: benchmark.to_string(),
            enhancement: enhancement.to_string(),
        });
    }

    let mut pairs = Vec::new();
    for &(larger_idx, larger) in &baselines {
        for &(enhanced_idx, enh) in &enhanced {
            let ratio = match compute_ratio(snapshot, &larger.model, &enh.model) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if ratio.is_nan() || ratio <= 1.0 {
                continue;
            }
            let mut relaxations = BTreeSet::new();
            if !bench.direction.better(enh.score, larger.score) {
                relaxations.insert(Relaxation::MissingPerformanceDominance);
            }
            let same_family = snapshot
                .model(&larger.model)
                .zip(snapshot.model(&enh.model))
                .map(|(a, b)| a.family == b.family)
                .unwrap_or(false);
            if !same_family {
                relaxations.insert(Relaxation::CrossFamily);
            }
            pairs.push(ModelPair {
                benchmark: benchmark.to_string(),
                larger_model: larger.model.clone(),
                enhanced_model: enh.model.clone(),
                larger_eval: larger_idx,
                enhanced_eval: enhanced_idx,
                relaxations,
            });
        }
    }
    Ok(pairs)
}

fn pair_caveats(pair: &ModelPair) -> BTreeSet<Caveat> {
    let mut caveats = BTreeSet::new();
    if pair.relaxations.contains(&Relaxation::CrossFamily) {
        caveats.insert(Caveat::CrossFamily);
    }
    caveats
}

/// Lower-bound CEG: requires the enhanced record to strictly beat the
/// larger baseline; the compute ratio then bounds the gain from below.
pub fn lower_bound_ceg(
    snapshot: &RegistrySnapshot,
    pair: &ModelPair,
) -> Result<CegEstimate, CegError> {
    let bench = snapshot
        .benchmark(&pair.benchmark)
        .ok_or_else(|| CegError::UnknownBenchmark(pair.benchmark.clone()))?;
    let larger = &snapshot.evaluations()[pair.larger_eval];
    let enhanced = &snapshot.evaluations()[pair.enhanced_eval];
    if !bench.direction.better(enhanced.score, larger.score) {
        return Err(CegError::DominanceViolated {
            larger: pair.larger_model.clone(),
            enhanced: pair.enhanced_model.clone(),
            shortfall: bench.direction.improvement(larger.score, enhanced.score),
        });
    }
    let value = compute_ratio(snapshot, &pair.larger_model, &pair.enhanced_model)?;
    Ok(CegEstimate {
        value,
        kind: CegKind::LowerBound,
        provenance: Provenance::Pair(pair.clone()),
        caveats: pair_caveats(pair),
    })
}

/// Observed spread of baseline scores across one family on a benchmark;
/// `None` with fewer than two baseline records.
pub fn baseline_scaling_range(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    family: &str,
) -> Option<f64> {
    let scores: Vec<f64> = snapshot
        .evaluations()
        .iter()
        .filter(|r| {
            r.benchmark == benchmark
                && r.is_baseline()
                && snapshot
                    .model(&r.model)
                    .map(|m| m.family == family)
                    .unwrap_or(false)
        })
        .map(|r| r.score)
        .collect();
    if scores.len() < 2 {
        return None;
    }
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = scores.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Some(max - min)
}

/// Rough point estimate: when the enhanced model roughly ties a larger
/// baseline (gap within `theta` of the scaling spread), the compute
/// ratio approximates the CEG instead of bounding it.
pub fn rough_point_ceg(
    snapshot: &RegistrySnapshot,
    pair: &ModelPair,
    scaling_range: f64,
    theta: f64,
) -> Result<CegEstimate, CegError> {
    let larger = &snapshot.evaluations()[pair.larger_eval];
    let enhanced = &snapshot.evaluations()[pair.enhanced_eval];
    let gap = (larger.score - enhanced.score).abs();
    let limit = theta * scaling_range;
    if gap > limit {
        return Err(CegError::GapExceedsThreshold { gap, limit });
    }
    let value = compute_ratio(snapshot, &pair.larger_model, &pair.enhanced_model)?;
    Ok(CegEstimate {
        value,
        kind: CegKind::RoughPoint,
        provenance: Provenance::Pair(pair.clone()),
        caveats: pair_caveats(pair),
    })
}

/// Two-point log-linear interpolation: with a compute ratio R between
/// two baseline scales and metric deltas for the enhancement and for the
/// scale step, the CEG is R^(delta_enh/delta_scale).
///
/// A negative `delta_scale` (the bigger baseline scored worse) still
/// evaluates but the estimate is marked not meaningful; a zero delta is
/// a flat baseline and refuses outright.
pub fn interpolated_ceg(
    delta_enh: f64,
    delta_scale: f64,
    compute_ratio: f64,
) -> Result<CegEstimate, CegError> {
    if compute_ratio.is_nan() || compute_ratio <= 1.0 {
        return Err(CegError::RatioNotAboveOne {
            ratio: compute_ratio,
        });
    }
    if delta_scale == 0.0 {
        return Err(CegError::FlatBaseline);
    }
    let mut caveats = BTreeSet::new();
    caveats.insert(Caveat::TwoPointFit);
    if delta_scale < 0.0 {
        caveats.insert(Caveat::NonMonotonicBaseline);
    }
    Ok(CegEstimate {
        value: compute_ratio.powf(delta_enh / delta_scale),
        kind: CegKind::Interpolated,
        provenance: Provenance::TwoPointInterpolation {
            delta_enh,
            delta_scale,
            compute_ratio,
            enhanced_eval: None,
        },
        caveats,
    })
}

/// Context for [`select_best`].
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub snapshot: &'a RegistrySnapshot,
    pub benchmark: &'a str,
    /// Discard estimates whose enhanced record stacks several
    /// enhancements (single-enhancement attribution).
    pub attribute_single: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionError {
    EmptyInput,
    /// Every estimate was eliminated; lists (estimate, rule) pairs.
    AllRejected {
        eliminations: Vec<(String, String)>,
    },
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::EmptyInput => f.write_str("no estimates to select from"),
            SelectionError::AllRejected { eliminations } => {
                writeln!(f, "all estimates rejected:")?;
                for (estimate, rule) in eliminations {
                    writeln!(f, "  {estimate} eliminated by {rule}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for SelectionError {}

/// Scale class of a baseline record's model, for grouping "the same
/// baseline cost" together: resolved FLOP when available, else the
/// parameter count.
fn scale_class(snapshot: &RegistrySnapshot, model_id: &str) -> String {
    match snapshot.model(model_id) {
        Some(model) => match resolve_training_flop(model) {
            Some(flop) => format!("f{:e}", flop.value),
            None => format!("p{:e}", model.param_count),
        },
        None => format!("?{model_id}"),
    }
}

fn dataset_size(record: &EvaluationRecord) -> Option<f64> {
    record
        .setting
        .get(DATASET_SIZE_KEY)
        .and_then(|v| v.parse::<f64>().ok())
}

/// Keep the highest CEG after the rejection rules, applied in order:
/// (a) among baselines of equal training cost, only pairs against the
/// best-scoring one survive; (b) under single-enhancement attribution,
/// stacked-enhancement records are discarded; (c) among fine-tuning
/// `dataset_size` variants only the largest survives; (d) among
/// CEG-equivalent settings the lexicographically smallest setting string
/// is canonical. Survivors are ranked meaningful-first, then by value.
pub fn select_best(
    estimates: &[CegEstimate],
    ctx: &SelectionContext<'_>,
) -> Result<CegEstimate, SelectionError> {
    if estimates.is_empty() {
        return Err(SelectionError::EmptyInput);
    }

    let snapshot = ctx.snapshot;
    let direction = snapshot.benchmark(ctx.benchmark).map(|b| b.direction);
    let mut eliminations: Vec<(String, String)> = Vec::new();
    let mut alive: Vec<&CegEstimate> = estimates.iter().collect();

    // (a) Among baseline records of equal training cost and matching
    // protocol, only pairs against the best-scoring one survive. Protocol
    // match means agreeing on every setting key the enhanced record pins
    // (e.g. sample budget); baselines differing only in keys the enhanced
    // record does not carry (e.g. which verifier variant) compete.
    if let Some(direction) = direction {
        alive.retain(|est| {
            let Provenance::Pair(pair) = &est.provenance else {
                return true;
            };
            let larger = &snapshot.evaluations()[pair.larger_eval];
            let enhanced = &snapshot.evaluations()[pair.enhanced_eval];
            let class = scale_class(snapshot, &larger.model);
            let restrict = |record: &crate::registry::EvaluationRecord| -> String {
                enhanced
                    .setting
                    .keys()
                    .filter_map(|k| record.setting.get(k).map(|v| format!("{k}={v}")))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let protocol = restrict(larger);
            let beaten = snapshot.evaluations().iter().any(|candidate| {
                candidate.benchmark == ctx.benchmark
                    && candidate.is_baseline()
                    && scale_class(snapshot, &candidate.model) == class
                    && restrict(candidate) == protocol
                    && direction.better(candidate.score, larger.score)
            });
            if beaten {
                eliminations.push((
                    est.provenance.describe(),
                    "rule_a_better_baseline".to_string(),
                ));
                false
            } else {
                true
            }
        });
    }

    // (b) Single-enhancement attribution.
    if ctx.attribute_single {
        alive.retain(|est| {
            let Some(idx) = est.provenance.enhanced_eval() else {
                return true;
            };
            if snapshot.evaluations()[idx].enhancements.len() > 1 {
                eliminations.push((
                    est.provenance.describe(),
                    "rule_b_multi_enhancement".to_string(),
                ));
                false
            } else {
                true
            }
        });
    }

    // (c) Largest fine-tuning dataset among size variants.
    let max_dataset = alive
        .iter()
        .filter_map(|est| est.provenance.enhanced_eval())
        .filter_map(|idx| dataset_size(&snapshot.evaluations()[idx]))
        .fold(f64::NEG_INFINITY, f64::max);
    if max_dataset.is_finite() {
        alive.retain(|est| {
            let size = est
                .provenance
                .enhanced_eval()
                .and_then(|idx| dataset_size(&snapshot.evaluations()[idx]));
            match size {
                Some(size) if size < max_dataset => {
                    eliminations.push((
                        est.provenance.describe(),
                        "rule_c_smaller_dataset".to_string(),
                    ));
                    false
                }
                _ => true,
            }
        });
    }

    // (d) One canonical representative per CEG-equivalent value.
    let mut canonical: BTreeMap<u64, (usize, String)> = BTreeMap::new();
    for (pos, est) in alive.iter().enumerate() {
        let setting = est
            .provenance
            .enhanced_eval()
            .map(|idx| snapshot.evaluations()[idx].setting_string())
            .unwrap_or_default();
        let bits = est.value.to_bits();
        match canonical.get(&bits) {
            Some((_, seen)) if *seen <= setting => {}
            _ => {
                canonical.insert(bits, (pos, setting));
            }
        }
    }
    let keep: BTreeSet<usize> = canonical.values().map(|(pos, _)| *pos).collect();
    let mut survivors: Vec<&CegEstimate> = Vec::new();
    for (pos, est) in alive.iter().enumerate() {
        if keep.contains(&pos) {
            survivors.push(est);
        } else {
            eliminations.push((
                est.provenance.describe(),
                "rule_d_duplicate_setting".to_string(),
            ));
        }
    }

    // Meaningful estimates outrank flagged ones; ties keep input order.
    survivors
        .into_iter()
        .max_by(|a, b| {
            (a.is_meaningful(), a.value)
                .partial_cmp(&(b.is_meaningful(), b.value))
                .expect("finite CEG values")
        })
        .cloned()
        .ok_or(SelectionError::AllRejected { eliminations })
}

/// Which estimation routes to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Lower bounds from dominant pairs.
    Bound,
    /// Rough points from near-tied pairs.
    Rough,
    /// Two-point interpolation against larger same-family baselines.
    Interp,
    /// Scaling-law inversion (needs three or more baseline scales).
    Fit,
    /// Bounds, rough points, and the scaling route the data supports.
    All,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub theta: f64,
    pub method: Method,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            theta: DEFAULT_GAP_THETA,
            method: Method::All,
        }
    }
}

/// Compute axis for a family's scaling fit: resolved FLOP when every
/// involved model has one, else parameter count inside an equal-token
/// family (compute proportional to size). Ratios are unit-free either way.
pub(crate) fn fit_compute(
    snapshot: &RegistrySnapshot,
    family: &str,
    model_ids: &[&str],
) -> Option<BTreeMap<String, f64>> {
    let mut flops = BTreeMap::new();
    let mut all_flop = true;
    for id in model_ids {
        match snapshot.model(id).and_then(resolve_training_flop) {
            Some(est) => {
                flops.insert((*id).to_string(), est.value);
            }
            None => {
                all_flop = false;
                break;
            }
        }
    }
    if all_flop {
        return Some(flops);
    }
    let fam = snapshot.family(family)?;
    if !fam.equal_tokens {
        return None;
    }
    let mut params = BTreeMap::new();
    for id in model_ids {
        let model = snapshot.model(id)?;
        if model.param_count.is_nan() || model.param_count <= 0.0 {
            return None;
        }
        params.insert((*id).to_string(), model.param_count);
    }
    Some(params)
}

/// Run the estimation cascade for one (benchmark, enhancement). The
/// cases apply per enhanced record, in order: dominant pairs give lower
/// bounds, near-tied pairs give rough points, and only records that
/// neither case covered fall through to the scaling-law route (fitted at
/// three or more baseline scales, interpolated at two). Explicitly
/// requesting `fit` or `interp` runs that route for every record.
pub fn estimate_all(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    enhancement: &str,
    opts: &EstimateOptions,
) -> Result<Vec<CegEstimate>, CegError> {
    let pairs = candidate_pairs(snapshot, benchmark, enhancement)?;
    let mut estimates = Vec::new();
    let mut covered: BTreeSet<usize> = BTreeSet::new();

    let want = |m: Method| opts.method == m || opts.method == Method::All;

    if want(Method::Bound) || want(Method::Rough) {
        for pair in &pairs {
            if !pair
                .relaxations
                .contains(&Relaxation::MissingPerformanceDominance)
            {
                if want(Method::Bound) {
                    estimates.push(lower_bound_ceg(snapshot, pair)?);
                    covered.insert(pair.enhanced_eval);
                }
            } else if want(Method::Rough) {
                let family = snapshot
                    .model(&pair.larger_model)
                    .map(|m| m.family.clone())
                    .unwrap_or_default();
                let range = baseline_scaling_range(snapshot, benchmark, &family).unwrap_or(0.0);
                if let Ok(est) = rough_point_ceg(snapshot, pair, range, opts.theta) {
                    estimates.push(est);
                    covered.insert(pair.enhanced_eval);
                }
            }
        }
    }

    if opts.method == Method::Fit || opts.method == Method::Interp || opts.method == Method::All {
        let skip = if opts.method == Method::All {
            covered
        } else {
            BTreeSet::new()
        };
        estimates.extend(scaling_estimates(
            snapshot,
            benchmark,
            enhancement,
            opts.method,
            &skip,
        )?);
    }

    Ok(estimates)
}

/// Same-family baseline records on a benchmark, with evaluation indices.
pub(crate) fn family_baselines<'a>(
    snapshot: &'a RegistrySnapshot,
    benchmark: &str,
    family: &str,
) -> Vec<(usize, &'a EvaluationRecord)> {
    snapshot
        .evaluations()
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.benchmark == benchmark
                && r.is_baseline()
                && snapshot
                    .model(&r.model)
                    .map(|m| m.family == family)
                    .unwrap_or(false)
        })
        .collect()
}

/// Fit a family's non-enhanced records on one benchmark against their
/// compute axis (FLOP, or parameter count inside an equal-token family).
pub fn baseline_fit(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    family: &str,
) -> Result<crate::scaling::LogLinearFit, CegError> {
    if snapshot.benchmark(benchmark).is_none() {
        return Err(CegError::UnknownBenchmark(benchmark.to_string()));
    }
    if snapshot.family(family).is_none() {
        return Err(CegError::UnknownFamily(family.to_string()));
    }
    let baselines = family_baselines(snapshot, benchmark, family);
    if baselines.is_empty() {
        return Err(CegError::NoBaselines {
            benchmark: benchmark.to_string(),
        });
    }
    let ids: Vec<&str> = baselines.iter().map(|(_, r)| r.model.as_str()).collect();
    let axis =
        fit_compute(snapshot, family, &ids).ok_or_else(|| CegError::UnresolvableCompute {
            family: family.to_string(),
        })?;
    let points: Vec<(f64, f64)> = baselines
        .iter()
        .map(|(_, r)| (axis[&r.model], r.score))
        .collect();
    Ok(fit_log_linear(&points)?)
}

/// Fit the enhanced record's own family baseline and invert it at the
/// record's score. `min_scales` gates how many distinct baseline scales
/// the fit needs (3 for a proper fit, 2 to allow flagged two-point fits).
/// `None` when the data cannot support the fit.
pub fn fitted_from_family_baseline(
    snapshot: &RegistrySnapshot,
    eval_idx: usize,
    min_scales: usize,
) -> Option<CegEstimate> {
    let record = snapshot.evaluations().get(eval_idx)?;
    let model = snapshot.model(&record.model)?;
    let family = model.family.clone();
    let baselines = family_baselines(snapshot, &record.benchmark, &family);
    if baselines.is_empty() {
        return None;
    }
    let mut ids: Vec<&str> = baselines.iter().map(|(_, r)| r.model.as_str()).collect();
    ids.push(&record.model);
    let axis = fit_compute(snapshot, &family, &ids)?;
    let points: Vec<(f64, f64)> = baselines
        .iter()
        .map(|(_, r)| (axis[&r.model], r.score))
        .collect();
    let mut scales: Vec<f64> = points.iter().map(|&(c, _)| c).collect();
    scales.sort_by(|a, b| a.partial_cmp(b).expect("finite compute"));
    scales.dedup();
    if scales.len() < min_scales.max(2) {
        return None;
    }
    let fit = fit_log_linear(&points).ok()?;
    let mut est = fitted_ceg(&fit, (axis[&record.model], record.score)).ok()?;
    if let Provenance::ScalingFit { enhanced_eval, .. } = &mut est.provenance {
        *enhanced_eval = Some(eval_idx);
    }
    Some(est)
}

fn scaling_estimates(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    enhancement: &str,
    method: Method,
    skip: &BTreeSet<usize>,
) -> Result<Vec<CegEstimate>, CegError> {
    let bench = snapshot
        .benchmark(benchmark)
        .ok_or_else(|| CegError::UnknownBenchmark(benchmark.to_string()))?;
    let mut out = Vec::new();

    for (idx, record) in snapshot.evaluations().iter().enumerate() {
        if record.benchmark != benchmark
            || !record.enhancements.contains(enhancement)
            || skip.contains(&idx)
        {
            continue;
        }
        let Some(model) = snapshot.model(&record.model) else {
            continue;
        };
        let family = model.family.clone();

        let baselines = family_baselines(snapshot, benchmark, &family);
        if baselines.is_empty() {
            continue;
        }
        let mut ids: Vec<&str> = baselines.iter().map(|(_, r)| r.model.as_str()).collect();
        ids.push(&record.model);
        let Some(axis) = fit_compute(snapshot, &family, &ids) else {
            continue;
        };
        let mut scales: Vec<f64> = baselines.iter().map(|(_, r)| axis[&r.model]).collect();
        scales.sort_by(|a, b| a.partial_cmp(b).expect("finite compute"));
        scales.dedup();

        let use_fit = scales.len() >= 3 && (method == Method::Fit || method == Method::All);
        let use_interp =
            !use_fit && scales.len() >= 2 && (method == Method::Interp || method == Method::All);

        if use_fit {
            if let Some(est) = fitted_from_family_baseline(snapshot, idx, 3) {
                out.push(est);
            }
        } else if use_interp {
            // Two-point route: needs a baseline of the same model for the
            // enhancement delta, and a larger baseline for the scale delta.
            let Some(&(_, same)) = baselines.iter().find(|(_, r)| r.model == record.model) else {
                continue;
            };
            let my_compute = axis[&record.model];
            for &(_, larger) in &baselines {
                let ratio = axis[&larger.model] / my_compute;
                if ratio.is_nan() || ratio <= 1.0 {
                    continue;
                }
                let delta_enh = bench.direction.improvement(record.score, same.score);
                let delta_scale = bench.direction.improvement(larger.score, same.score);
                if delta_scale == 0.0 {
                    continue;
                }
                if let Ok(mut est) = interpolated_ceg(delta_enh, delta_scale, ratio) {
                    if let Provenance::TwoPointInterpolation { enhanced_eval, .. } =
                        &mut est.provenance
                    {
                        *enhanced_eval = Some(idx);
                    }
                    out.push(est);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::ingest_str;

    fn rel_err(actual: f64, expected: f64) -> f64 {
        (actual - expected).abs() / expected.abs()
    }

    fn superglue_fixture() -> RegistrySnapshot {
        ingest_str(
            r#"{"kind":"family","id":"gpt3","equal_tokens":true}
{"kind":"model","id":"gpt3-6.7b","family":"gpt3","param_count":6.7e9,"tokens_seen":3e11}
{"kind":"model","id":"gpt3-175b","family":"gpt3","param_count":1.75e11,"tokens_seen":3e11}
{"kind":"benchmark","id":"superglue","metric_name":"accuracy","direction":"higher_better"}
{"kind":"enhancement","id":"few_shot","category":"prompting"}
{"kind":"evaluation","model":"gpt3-6.7b","benchmark":"superglue","enhancements":["few_shot"],"score":60.0}
{"kind":"evaluation","model":"gpt3-175b","benchmark":"superglue","score":58.0}
"#,
        )
        .unwrap()
    }

    #[test]
    fn superglue_pair_has_no_relaxations() {
        let snap = superglue_fixture();
        let pairs = candidate_pairs(&snap, "superglue", "few_shot").unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].relaxations.is_empty());
        assert_eq!(pairs[0].larger_model, "gpt3-175b");
        assert_eq!(pairs[0].enhanced_model, "gpt3-6.7b");

        let est = lower_bound_ceg(&snap, &pairs[0]).unwrap();
        assert!(rel_err(est.value, 175.0 / 6.7) < 1e-9);
        assert_eq!(est.kind, CegKind::LowerBound);
        // Lower bound equals the compute ratio exactly.
        assert_eq!(
            est.value,
            compute_ratio(&snap, "gpt3-175b", "gpt3-6.7b").unwrap()
        );
    }

    fn cross_family_fixture() -> RegistrySnapshot {
        ingest_str(
            r#"{"kind":"family","id":"llama","equal_tokens":false}
{"kind":"family","id":"openai","equal_tokens":false}
{"kind":"model","id":"orca-13b","family":"llama","param_count":1.3e10,"training_flop":8.2e22}
{"kind":"model","id":"chatgpt","family":"openai","param_count":1.75e11,"training_flop":8.2e23}
{"kind":"model","id":"gpt-4","family":"openai","param_count":1e12,"training_flop":2e25}
{"kind":"benchmark","id":"bigbench_hard","metric_name":"accuracy","direction":"higher_better"}
{"kind":"enhancement","id":"learning_from_teacher","category":"data"}
{"kind":"evaluation","model":"orca-13b","benchmark":"bigbench_hard","enhancements":["learning_from_teacher"],"score":49.7}
{"kind":"evaluation","model":"chatgpt","benchmark":"bigbench_hard","score":48.9}
{"kind":"evaluation","model":"gpt-4","benchmark":"bigbench_hard","score":67.4}
"#,
        )
        .unwrap()
    }

    #[test]
    fn cross_family_pair_is_flagged() {
        let snap = cross_family_fixture();
        let pairs = candidate_pairs(&snap, "bigbench_hard", "learning_from_teacher").unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs
            .iter()
            .all(|p| p.relaxations.contains(&Relaxation::CrossFamily)));
    }

    #[test]
    fn enhanced_larger_than_every_baseline_yields_empty() {
        let snap = ingest_str(
            r#"{"kind":"family","id":"f","equal_tokens":true}
{"kind":"model","id":"small","family":"f","param_count":1e9,"tokens_seen":3e11}
{"kind":"model","id":"big","family":"f","param_count":1e11,"tokens_seen":3e11}
{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"tool"}
{"kind":"evaluation","model":"big","benchmark":"b","enhancements":["e"],"score":80.0}
{"kind":"evaluation","model":"small","benchmark":"b","score":50.0}
"#,
        )
        .unwrap();
        let pairs = candidate_pairs(&snap, "b", "e").unwrap();
        assert!(pairs.is_empty());
    }

    #[test]
    fn missing_partition_sides_are_errors() {
        let snap = ingest_str(
            r#"{"kind":"family","id":"f","equal_tokens":true}
{"kind":"model","id":"m","family":"f","param_count":1e9,"tokens_seen":3e11}
{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"tool"}
{"kind":"evaluation","model":"m","benchmark":"b","enhancements":["e"],"score":80.0}
"#,
        )
        .unwrap();
        assert!(matches!(
            candidate_pairs(&snap, "b", "e"),
            Err(CegError::NoBaselines { .. })
        ));
        let snap = ingest_str(
            r#"{"kind":"family","id":"f","equal_tokens":true}
{"kind":"model","id":"m","family":"f","param_count":1e9,"tokens_seen":3e11}
{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"tool"}
{"kind":"evaluation","model":"m","benchmark":"b","score":80.0}
"#,
        )
        .unwrap();
        assert!(matches!(
            candidate_pairs(&snap, "b", "e"),
            Err(CegError::NoEnhanced { .. })
        ));
    }

    #[test]
    fn compute_ratio_resolution_order() {
        let snap = ingest_str(
            r#"{"kind":"family","id":"gpt3","equal_tokens":true}
{"kind":"family","id":"alphacode","equal_tokens":false}
{"kind":"model","id":"gpt3-6.7b","family":"gpt3","param_count":6.7e9,"tokens_seen":3e11}
{"kind":"model","id":"gpt3-175b","family":"gpt3","param_count":1.75e11,"tokens_seen":3e11}
{"kind":"model","id":"ac-300m","family":"alphacode","param_count":2.84e8,"tokens_seen":3.54e11}
{"kind":"model","id":"ac-1b","family":"alphacode","param_count":1.1e9,"tokens_seen":5.9e11}
"#,
        )
        .unwrap();
        // Equal-token family: param ratio and 6·N·D coincide.
        let r = compute_ratio(&snap, "gpt3-175b", "gpt3-6.7b").unwrap();
        assert!(rel_err(r, 26.11940298507463) < 1e-12);
        // Different token counts: the 6·N·D products matter.
        let r = compute_ratio(&snap, "ac-1b", "ac-300m").unwrap();
        assert!(rel_err(r, (1.1e9 * 5.9e11) / (2.84e8 * 3.54e11)) < 1e-12);
        assert!(rel_err(r, 6.456) < 1e-3);
        // Identical models compare at exactly 1.
        assert_eq!(compute_ratio(&snap, "gpt3-6.7b", "gpt3-6.7b").unwrap(), 1.0);
    }

    #[test]
    fn equal_token_shortcut_without_token_counts() {
        // Neither model resolves to FLOP (one has tokens, one has
        // nothing), but both sit in an equal-token family, so the
        // parameter ratio stands in for the compute ratio.
        let snap = ingest_str(
            r#"{"kind":"family","id":"palm","equal_tokens":true}
{"kind":"model","id":"palm-62b","family":"palm","param_count":6.2e10,"tokens_seen":7.8e11}
{"kind":"model","id":"palm-540b","family":"palm","param_count":5.4e11,"tokens_seen":7.8e11}
"#,
        )
        .unwrap();
        let r = compute_ratio(&snap, "palm-540b", "palm-62b").unwrap();
        assert!(rel_err(r, (5.4e11 * 7.8e11) / (6.2e10 * 7.8e11)) < 1e-12);
        assert!(rel_err(r, 5.4e11 / 6.2e10) < 1e-12);
    }

    #[test]
    fn dominance_violation_refuses_bound() {
        let snap = ingest_str(
            r#"{"kind":"family","id":"f","equal_tokens":true}
{"kind":"model","id":"small","family":"f","param_count":1e9,"tokens_seen":3e11}
{"kind":"model","id":"big","family":"f","param_count":1e10,"tokens_seen":3e11}
{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"tool"}
{"kind":"evaluation","model":"small","benchmark":"b","enhancements":["e"],"score":50.0}
{"kind":"evaluation","model":"big","benchmark":"b","score":50.0}
"#,
        )
        .unwrap();
        let pairs = candidate_pairs(&snap, "b", "e").unwrap();
        assert_eq!(pairs.len(), 1);
        // Equal scores: dominance is strict, so the bound refuses.
        assert!(matches!(
            lower_bound_ceg(&snap, &pairs[0]),
            Err(CegError::DominanceViolated { .. })
        ));
        // But the gap is zero, so a rough point works even with zero range.
        let est = rough_point_ceg(&snap, &pairs[0], 0.0, DEFAULT_GAP_THETA).unwrap();
        assert_eq!(est.kind, CegKind::RoughPoint);
        assert_eq!(est.value, 10.0);
    }

    #[test]
    fn perplexity_direction_lower_bound() {
        // Perplexity: lower is better. 172M enhanced beats the 7.5B baseline.
        let snap = ingest_str(
            r#"{"kind":"family","id":"retro","equal_tokens":true}
{"kind":"model","id":"retro-172m","family":"retro","param_count":1.72e8,"tokens_seen":4.2e11}
{"kind":"model","id":"retro-7.5b","family":"retro","param_count":7.5e9,"tokens_seen":4.2e11}
{"kind":"benchmark","id":"wikitext103","metric_name":"perplexity","direction":"lower_better"}
{"kind":"enhancement","id":"memory_retrieval","category":"tool"}
{"kind":"evaluation","model":"retro-172m","benchmark":"wikitext103","enhancements":["memory_retrieval"],"score":3.21}
{"kind":"evaluation","model":"retro-7.5b","benchmark":"wikitext103","score":3.92}
"#,
        )
        .unwrap();
        let pairs = candidate_pairs(&snap, "wikitext103", "memory_retrieval").unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].relaxations.is_empty());
        let est = lower_bound_ceg(&snap, &pairs[0]).unwrap();
        assert!(rel_err(est.value, 7.5e9 / 1.72e8) < 1e-12);
    }

    #[test]
    fn rough_point_respects_threshold() {
        let snap = ingest_str(
            r#"{"kind":"family","id":"palm","equal_tokens":true}
{"kind":"model","id":"palm-8b","family":"palm","param_count":8e9,"tokens_seen":7.8e11}
{"kind":"model","id":"palm-62b","family":"palm","param_count":6.2e10,"tokens_seen":7.8e11}
{"kind":"model","id":"palm-540b","family":"palm","param_count":5.4e11,"tokens_seen":7.8e11}
{"kind":"benchmark","id":"gsm8k","metric_name":"accuracy","direction":"higher_better"}
{"kind":"enhancement","id":"data_cleaning","category":"data"}
{"kind":"evaluation","model":"palm-8b","benchmark":"gsm8k","score":10.0}
{"kind":"evaluation","model":"palm-540b","benchmark":"gsm8k","score":56.5}
{"kind":"evaluation","model":"palm-62b","benchmark":"gsm8k","enhancements":["data_cleaning"],"score":52.4}
"#,
        )
        .unwrap();
        let pairs = candidate_pairs(&snap, "gsm8k", "data_cleaning").unwrap();
        let pair = pairs
            .iter()
            .find(|p| p.larger_model == "palm-540b")
            .expect("pair against the 540B baseline");
        let range = baseline_scaling_range(&snap, "gsm8k", "palm").unwrap();
        assert_eq!(range, 46.5);

        // Gap 4.1 within 10% of the 46.5 spread: rough point accepted.
        let est = rough_point_ceg(&snap, pair, range, DEFAULT_GAP_THETA).unwrap();
        assert!(rel_err(est.value, 5.4e11 / 6.2e10) < 1e-12);

        // Gap equal to the full range: refused.
        let err = rough_point_ceg(
            &snap,
            pair,
            4.1 / DEFAULT_GAP_THETA * 0.5,
            DEFAULT_GAP_THETA,
        );
        assert!(matches!(err, Err(CegError::GapExceedsThreshold { .. })));
    }

    #[test]
    fn interpolated_ceg_examples() {
        let est = interpolated_ceg(8.0, 20.0, 200.0).unwrap();
        assert!(rel_err(est.value, 200f64.powf(0.4)) < 1e-12);
        assert!(rel_err(est.value, 8.3255) < 1e-4);
        assert!(est.caveats.contains(&Caveat::TwoPointFit));

        let est = interpolated_ceg(39.0, 15.0, 10.0).unwrap();
        assert!(rel_err(est.value, 10f64.powf(39.0 / 15.0)) < 1e-12);
        assert!(rel_err(est.value, 398.1) < 1e-3);

        // Exponent identities.
        for (d, r) in [(3.0, 7.0), (12.5, 200.0)] {
            assert!(rel_err(interpolated_ceg(0.0, d, r).unwrap().value, 1.0) < 1e-12);
            assert!(rel_err(interpolated_ceg(d, d, r).unwrap().value, r) < 1e-12);
        }
    }

    #[test]
    fn interpolated_ceg_pathologies() {
        // Bigger baseline scored worse: value still computed, flagged
        // not meaningful.
        let est = interpolated_ceg(0.10, -0.05, 175.0 / 52.0).unwrap();
        assert!(!est.is_meaningful());
        assert!(est.caveats.contains(&Caveat::NonMonotonicBaseline));
        assert!(est.value < 1.0);

        assert!(matches!(
            interpolated_ceg(1.0, 0.0, 2.0),
            Err(CegError::FlatBaseline)
        ));
        assert!(matches!(
            interpolated_ceg(1.0, 2.0, 1.0),
            Err(CegError::RatioNotAboveOne { .. })
        ));
    }

    #[test]
    fn interpolated_ceg_is_multiplicative_in_delta() {
        let (ds, r) = (15.0, 10.0);
        for (d1, d2) in [(3.0, 5.0), (10.0, 29.0), (-2.0, 6.0)] {
            let whole = interpolated_ceg(d1 + d2, ds, r).unwrap().value;
            let split = interpolated_ceg(d1, ds, r).unwrap().value
                * interpolated_ceg(d2, ds, r).unwrap().value;
            assert!(rel_err(whole, split) < 1e-12);
        }
    }

    fn selection_fixture() -> RegistrySnapshot {
        // Two baseline records at the same scale with different settings
        // (rule a), one multi-enhancement record (rule b), dataset-size
        // variants (rule c), and CEG-equivalent settings (rule d).
        ingest_str(
            r#"{"kind":"family","id":"f","equal_tokens":true}
{"kind":"model","id":"m-1b","family":"f","param_count":1e9,"tokens_seen":3e11}
{"kind":"model","id":"m-10b","family":"f","param_count":1e10,"tokens_seen":3e11}
{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"solution_choice"}
{"kind":"enhancement","id":"x","category":"prompting"}
{"kind":"evaluation","model":"m-10b","benchmark":"b","setting":{"variant":"weak"},"score":50.0}
{"kind":"evaluation","model":"m-10b","benchmark":"b","setting":{"variant":"strong"},"score":60.0}
{"kind":"evaluation","model":"m-1b","benchmark":"b","enhancements":["e"],"setting":{"samples":"1000"},"score":62.0}
{"kind":"evaluation","model":"m-1b","benchmark":"b","enhancements":["e"],"setting":{"samples":"10000"},"score":62.0}
{"kind":"evaluation","model":"m-1b","benchmark":"b","enhancements":["e","x"],"score":70.0}
"#,
        )
        .unwrap()
    }

    #[test]
    fn select_best_applies_rules_in_order() {
        let snap = selection_fixture();
        let estimates = estimate_all(&snap, "b", "e", &EstimateOptions::default()).unwrap();
        // Pairs against both baseline records and both sample settings.
        assert!(estimates.len() >= 4);

        let ctx = SelectionContext {
            snapshot: &snap,
            benchmark: "b",
            attribute_single: true,
        };
        let best = select_best(&estimates, &ctx).unwrap();
        // All surviving pairs share the 10x ratio; the multi-enhancement
        // record was discarded, weak-baseline pairs were discarded.
        assert_eq!(best.value, 10.0);
        let Provenance::Pair(pair) = &best.provenance else {
            panic!("expected pair")
        };
        let larger = &snap.evaluations()[pair.larger_eval];
        assert_eq!(larger.setting.get("variant").unwrap(), "strong");
        // Canonical setting: lexicographically smallest setting string.
        let enhanced = &snap.evaluations()[pair.enhanced_eval];
        assert_eq!(enhanced.setting.get("samples").unwrap(), "1000");
    }

    #[test]
    fn select_best_reports_eliminations() {
        let snap = selection_fixture();
        let estimates = estimate_all(&snap, "b", "e", &EstimateOptions::default()).unwrap();
        // Keep only estimates from the multi-enhancement record, then ask
        // for single attribution: everything is rejected.
        let multi_only: Vec<_> = estimates
            .into_iter()
            .filter(|e| {
                e.provenance
                    .enhanced_eval()
                    .map(|i| snap.evaluations()[i].enhancements.len() > 1)
                    .unwrap_or(false)
            })
            .collect();
        assert!(!multi_only.is_empty());
        let ctx = SelectionContext {
            snapshot: &snap,
            benchmark: "b",
            attribute_single: true,
        };
        match select_best(&multi_only, &ctx) {
            Err(SelectionError::AllRejected { eliminations }) => {
                // Pairs against the weak baseline fall to rule (a) first;
                // the rest fall to single-enhancement attribution.
                assert_eq!(eliminations.len(), multi_only.len());
                assert!(eliminations
                    .iter()
                    .any(|(_, rule)| rule == "rule_b_multi_enhancement"));
            }
            other => panic!("expected AllRejected, got {other:?}"),
        }
        assert!(matches!(
            select_best(&[], &ctx),
            Err(SelectionError::EmptyInput)
        ));
    }

    #[test]
    fn rule_c_keeps_largest_dataset() {
        let snap = ingest_str(
            r#"{"kind":"family","id":"f","equal_tokens":true}
{"kind":"model","id":"m-1b","family":"f","param_count":1e9,"tokens_seen":3e11}
{"kind":"model","id":"m-10b","family":"f","param_count":1e10,"tokens_seen":3e11}
{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"data"}
{"kind":"evaluation","model":"m-10b","benchmark":"b","score":50.0}
{"kind":"evaluation","model":"m-1b","benchmark":"b","enhancements":["e"],"setting":{"dataset_size":"750"},"score":52.0}
{"kind":"evaluation","model":"m-1b","benchmark":"b","enhancements":["e"],"setting":{"dataset_size":"7500"},"score":58.0}
"#,
        )
        .unwrap();
        let estimates = estimate_all(&snap, "b", "e", &EstimateOptions::default()).unwrap();
        let ctx = SelectionContext {
            snapshot: &snap,
            benchmark: "b",
            attribute_single: false,
        };
        let best = select_best(&estimates, &ctx).unwrap();
        let idx = best.provenance.enhanced_eval().unwrap();
        assert_eq!(
            snap.evaluations()[idx].setting.get("dataset_size").unwrap(),
            "7500"
        );
    }

    #[test]
    fn direction_symmetry() {
        // Negating scores and flipping the direction flag leaves pairs
        // and CEG values identical.
        let snap = superglue_fixture();
        let flipped = ingest_str(
            r#"{"kind":"family","id":"gpt3","equal_tokens":true}
{"kind":"model","id":"gpt3-6.7b","family":"gpt3","param_count":6.7e9,"tokens_seen":3e11}
{"kind":"model","id":"gpt3-175b","family":"gpt3","param_count":1.75e11,"tokens_seen":3e11}
{"kind":"benchmark","id":"superglue","metric_name":"accuracy","direction":"lower_better"}
{"kind":"enhancement","id":"few_shot","category":"prompting"}
{"kind":"evaluation","model":"gpt3-6.7b","benchmark":"superglue","enhancements":["few_shot"],"score":-60.0}
{"kind":"evaluation","model":"gpt3-175b","benchmark":"superglue","score":-58.0}
"#,
        )
        .unwrap();
        let a = candidate_pairs(&snap, "superglue", "few_shot").unwrap();
        let b = candidate_pairs(&flipped, "superglue", "few_shot").unwrap();
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.relaxations, pb.relaxations);
            let ea = lower_bound_ceg(&snap, pa).unwrap();
            let eb = lower_bound_ceg(&flipped, pb).unwrap();
            assert_eq!(ea.value, eb.value);
        }
    }

    #[test]
    fn scale_invariance_of_ceg_values() {
        // Multiplying every declared FLOP by k changes no CEG value.
        let base = r#"{"kind":"family","id":"f","equal_tokens":false}
{"kind":"model","id":"a","family":"f","param_count":1e9,"training_flop":FLOP_A}
{"kind":"model","id":"b","family":"f","param_count":1e10,"training_flop":FLOP_B}
{"kind":"benchmark","id":"t","metric_name":"acc","direction":"higher_better"}
{"kind":"enhancement","id":"e","category":"tool"}
{"kind":"evaluation","model":"a","benchmark":"t","enhancements":["e"],"score":61.0}
{"kind":"evaluation","model":"b","benchmark":"t","score":60.0}
"#;
        let make = |k: f64| {
            let text = base
                .replace("FLOP_A", &format!("{:e}", 2e22 * k))
                .replace("FLOP_B", &format!("{:e}", 9e23 * k));
            ingest_str(&text).unwrap()
        };
        let reference = make(1.0);
        let pairs = candidate_pairs(&reference, "t", "e").unwrap();
        let value = lower_bound_ceg(&reference, &pairs[0]).unwrap().value;
        for k in [1e-3, 17.0, 1e6] {
            let scaled = make(k);
            let pairs_k = candidate_pairs(&scaled, "t", "e").unwrap();
            let value_k = lower_bound_ceg(&scaled, &pairs_k[0]).unwrap().value;
            assert!(rel_err(value_k, value) < 1e-12);
        }
    }

    #[test]
    fn improving_enhanced_score_is_monotone() {
        let make = |enh_score: f64| {
            ingest_str(&format!(
                r#"{{"kind":"family","id":"f","equal_tokens":true}}
{{"kind":"model","id":"m-1b","family":"f","param_count":1e9,"tokens_seen":3e11}}
{{"kind":"model","id":"m-10b","family":"f","param_count":1e10,"tokens_seen":3e11}}
{{"kind":"model","id":"m-40b","family":"f","param_count":4e10,"tokens_seen":3e11}}
{{"kind":"benchmark","id":"b","metric_name":"acc","direction":"higher_better"}}
{{"kind":"enhancement","id":"e","category":"tool"}}
{{"kind":"evaluation","model":"m-1b","benchmark":"b","enhancements":["e"],"score":{enh_score}}}
{{"kind":"evaluation","model":"m-10b","benchmark":"b","score":55.0}}
{{"kind":"evaluation","model":"m-40b","benchmark":"b","score":70.0}}
"#
            ))
            .unwrap()
        };
        let mut last_pairs = 0usize;
        let mut last_best = 0.0f64;
        for enh_score in [50.0, 56.0, 64.0, 71.0, 90.0] {
            let snap = make(enh_score);
            let pairs = candidate_pairs(&snap, "b", "e").unwrap();
            assert!(pairs.len() >= last_pairs);
            last_pairs = pairs.len();

            let estimates = estimate_all(&snap, "b", "e", &EstimateOptions::default()).unwrap();
            let ctx = SelectionContext {
                snapshot: &snap,
                benchmark: "b",
                attribute_single: false,
            };
            if let Ok(best) = select_best(&estimates, &ctx) {
                assert!(best.value >= last_best);
                last_best = best.value;
            }
        }
    }
}
