//! Table and plot-data emission.
//!
//! Reports are pure functions of a snapshot: identical input bytes give
//! identical output bytes. Machine output uses `\n` line endings, `.`
//! decimals, and no thousands separators; every numeric cell re-derives
//! from the estimate or profile that produced it.

use std::fmt;

use crate::ceg::{
    estimate_all, fitted_from_family_baseline, select_best, EstimateOptions, SelectionContext,
};
use crate::cost::{profile_from_input, Comparator, Reported};
use crate::estimate::{CegEstimate, CegKind, Provenance, Relaxation};
use crate::registry::RegistrySnapshot;
use crate::scaling::{fit_log_linear, predict};

/// Enhancement ids the named tables look for. The shipped fixtures use
/// these ids; user data must follow suit to populate the tables.
pub const FINE_TUNE_ENHANCEMENT: &str = "data_cleaning";
pub const MAJORITY_VOTE_ENHANCEMENT: &str = "majority_voting";
pub const COT_ENHANCEMENT: &str = "chain_of_thought";

/// Significant digits used in table cells.
pub const TABLE_SIG_DIGITS: u32 = 2;

/// Number of fitted-line samples in plot output.
const PLOT_LINE_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// One row per enhancement: category, best CEG, costs.
    Main,
    /// Fine-tune and fine-tune+majority rows, one CEG column per benchmark.
    Minerva,
    /// Per-benchmark two-point CEG re-estimates for chain of thought.
    CotAppendix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportError {
    UnknownBenchmark,
    UnknownFamily,
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::UnknownBenchmark => f.write_str("unknown benchmark id"),
            ReportError::UnknownFamily => f.write_str("unknown family id"),
        }
    }
}

impl std::error::Error for ReportError {}

/// Round to `sig` significant digits, half away from zero.
///
/// Works on the shortest decimal representation rather than by scaling,
/// so exact display values come back bit-equal to their literals
/// (round_sig(1.1088e23, 2) == 1.1e23) and re-rounding is the identity.
pub fn round_sig(x: f64, sig: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let sig = sig.max(1) as usize;
    let formatted = format!("{:e}", x.abs());
    let (mantissa, exp) = formatted.split_once('e').expect("exponent in {:e} output");
    let mut exp: i32 = exp.parse().expect("numeric exponent");
    let digits: Vec<u8> = mantissa
        .bytes()
        .filter(u8::is_ascii_digit)
        .map(|b| b - b'0')
        .collect();

    let mut rounded: Vec<u8> = digits.iter().copied().take(sig).collect();
    while rounded.len() < sig {
        rounded.push(0);
    }
    if digits.len() > sig && digits[sig] >= 5 {
        let mut i = sig;
        loop {
            if i == 0 {
                // 9.99... rolled over into a new leading digit.
                rounded.insert(0, 1);
                rounded.pop();
                exp += 1;
                break;
            }
            if rounded[i - 1] == 9 {
                rounded[i - 1] = 0;
                i -= 1;
            } else {
                rounded[i - 1] += 1;
                break;
            }
        }
    }

    let digit_str: String = rounded.iter().map(|d| (d + b'0') as char).collect();
    let (head, tail) = digit_str.split_at(1);
    let rebuilt = if tail.is_empty() {
        format!("{head}e{exp}")
    } else {
        format!("{head}.{tail}e{exp}")
    };
    let value: f64 = rebuilt.parse().expect("rebuilt decimal parses");
    if x < 0.0 {
        -value
    } else {
        value
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_cell(x: f64) -> String {
    fmt_num(round_sig(x, TABLE_SIG_DIGITS))
}

/// Comparator + rounded value, e.g. `<0.033`; exact values print bare.
fn fmt_reported(reported: &Reported) -> String {
    match reported {
        Reported::Point {
            cmp: Comparator::Exact,
            value,
        } => fmt_cell(*value),
        Reported::Point { cmp, value } => format!("{cmp}{}", fmt_cell(*value)),
        Reported::Interval { lo, hi } => format!(">{} and <{}", fmt_num(*lo), fmt_num(*hi)),
    }
}

/// Display comparator for a CEG estimate: lower bounds are `>`, a rough
/// point against a baseline the enhanced model failed to beat is a
/// ceiling `<`, everything else is `~`.
fn ceg_comparator(est: &CegEstimate) -> &'static str {
    match est.kind {
        CegKind::LowerBound => ">",
        CegKind::RoughPoint => match &est.provenance {
            Provenance::Pair(pair)
                if pair
                    .relaxations
                    .contains(&Relaxation::MissingPerformanceDominance) =>
            {
                "<"
            }
            _ => "~",
        },
        CegKind::Interpolated | CegKind::Fitted => "~",
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub delimiter: char,
    pub theta: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            delimiter: ',',
            theta: crate::ceg::DEFAULT_GAP_THETA,
        }
    }
}

/// Render one of the named tables. Rows whose inputs are missing say
/// INSUFFICIENT_DATA rather than disappearing.
pub fn run_report(snapshot: &RegistrySnapshot, table: TableKind, opts: &ReportOptions) -> String {
    match table {
        TableKind::Main => main_table(snapshot, opts),
        TableKind::Minerva => minerva_table(snapshot, opts),
        TableKind::CotAppendix => cot_table(snapshot, opts),
    }
}

/// Best defensible estimate for one (benchmark, enhancement) under a
/// fixed attribution policy: the full cascade plus selection.
fn best_for(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    enhancement: &str,
    theta: f64,
    attribute_single: bool,
) -> Option<CegEstimate> {
    let opts = EstimateOptions {
        theta,
        method: crate::ceg::Method::All,
    };
    let estimates = estimate_all(snapshot, benchmark, enhancement, &opts).ok()?;
    if estimates.is_empty() {
        return None;
    }
    let ctx = SelectionContext {
        snapshot,
        benchmark,
        attribute_single,
    };
    select_best(&estimates, &ctx).ok()
}

/// Best estimate across benchmarks, meaningful first, then value, ties
/// to the lexicographically first benchmark.
fn best_across_benchmarks(
    snapshot: &RegistrySnapshot,
    enhancement: &str,
    theta: f64,
    attribute_single: bool,
) -> Option<(String, CegEstimate)> {
    let mut best: Option<(String, CegEstimate)> = None;
    for benchmark in snapshot.benchmarks() {
        if let Some(est) = best_for(
            snapshot,
            &benchmark.id,
            enhancement,
            theta,
            attribute_single,
        ) {
            let better = match &best {
                None => true,
                Some((_, current)) => {
                    (est.is_meaningful(), est.value) > (current.is_meaningful(), current.value)
                }
            };
            if better {
                best = Some((benchmark.id.clone(), est));
            }
        }
    }
    best
}

fn main_table(snapshot: &RegistrySnapshot, opts: &ReportOptions) -> String {
    let d = opts.delimiter;
    let mut out = String::new();
    out.push_str(&join(
        d,
        [
            "enhancement",
            "category",
            "ceg",
            "benchmark",
            "one_time",
            "inference",
            "caveats",
        ],
    ));
    out.push('\n');

    for enhancement in snapshot.enhancements() {
        // Single-enhancement attribution first; an enhancement measured
        // only in combination falls back to the stacked evidence, marked.
        let best = best_across_benchmarks(snapshot, &enhancement.id, opts.theta, true)
            .map(|(bench, est)| (bench, est, false))
            .or_else(|| {
                best_across_benchmarks(snapshot, &enhancement.id, opts.theta, false).map(
                    |(bench, est)| {
                        let combined = est
                            .provenance
                            .enhanced_eval()
                            .map(|i| snapshot.evaluations()[i].enhancements.len() > 1)
                            .unwrap_or(false);
                        (bench, est, combined)
                    },
                )
            });

        let (ceg_cell, bench_cell, caveat_cell) = match &best {
            Some((bench, est, combined)) => {
                let mut caveats = est.caveat_string();
                if *combined {
                    if caveats == "-" {
                        caveats = "combined_enhancements".to_string();
                    } else {
                        caveats.push_str(";combined_enhancements");
                    }
                }
                (
                    format!("{}{}", ceg_comparator(est), fmt_cell(est.value)),
                    bench.clone(),
                    caveats,
                )
            }
            None => (
                "INSUFFICIENT_DATA".to_string(),
                "-".to_string(),
                "-".to_string(),
            ),
        };

        let (one_time_cell, inference_cell) = match snapshot.cost_input(&enhancement.id) {
            Some(input) => match profile_from_input(input) {
                Ok(profile) => (
                    fmt_reported(&profile.one_time),
                    fmt_reported(&profile.inference),
                ),
                Err(_) => ("-".to_string(), "-".to_string()),
            },
            None => ("-".to_string(), "-".to_string()),
        };

        out.push_str(&join(
            d,
            [
                enhancement.id.as_str(),
                &enhancement.category.to_string(),
                &ceg_cell,
                &bench_cell,
                &one_time_cell,
                &inference_cell,
                &caveat_cell,
            ],
        ));
        out.push('\n');
    }
    out
}

/// Highest fitted CEG among records whose enhancement set is exactly
/// `enhancements`, on one benchmark. Needs three baseline scales.
fn fitted_cell(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    enhancements: &[&str],
) -> Option<CegEstimate> {
    let mut want: Vec<&str> = enhancements.to_vec();
    want.sort_unstable();
    let mut best: Option<CegEstimate> = None;
    for (idx, record) in snapshot.evaluations().iter().enumerate() {
        if record.benchmark != benchmark {
            continue;
        }
        let have: Vec<&str> = record.enhancements.iter().map(String::as_str).collect();
        if have != want {
            continue;
        }
        if let Some(est) = fitted_from_family_baseline(snapshot, idx, 3) {
            let better = match &best {
                None => true,
                Some(current) => {
                    (est.is_meaningful(), est.value) > (current.is_meaningful(), current.value)
                }
            };
            if better {
                best = Some(est);
            }
        }
    }
    best
}

fn minerva_table(snapshot: &RegistrySnapshot, opts: &ReportOptions) -> String {
    let d = opts.delimiter;
    let rows: [(&str, Vec<&str>); 2] = [
        ("fine_tuning", vec![FINE_TUNE_ENHANCEMENT]),
        (
            "fine_tuning_and_majority_voting",
            vec![FINE_TUNE_ENHANCEMENT, MAJORITY_VOTE_ENHANCEMENT],
        ),
    ];

    // Columns: benchmarks with records matching either row, sorted.
    let mut columns: Vec<String> = Vec::new();
    for benchmark in snapshot.benchmarks() {
        let relevant = snapshot.evaluations().iter().any(|r| {
            r.benchmark == benchmark.id
                && rows.iter().any(|(_, set)| {
                    let have: Vec<&str> = r.enhancements.iter().map(String::as_str).collect();
                    let mut want = set.clone();
                    want.sort_unstable();
                    have == want
                })
        });
        if relevant {
            columns.push(benchmark.id.clone());
        }
    }

    let mut out = String::new();
    let mut header = vec!["enhancements".to_string()];
    header.extend(columns.iter().cloned());
    out.push_str(&join_owned(d, &header));
    out.push('\n');

    for (label, set) in &rows {
        let mut cells = vec![label.to_string()];
        for benchmark in &columns {
            let cell = match fitted_cell(snapshot, benchmark, set) {
                Some(est) if est.is_meaningful() => fmt_cell(est.value),
                Some(est) => format!("{} (not_meaningful)", fmt_cell(est.value)),
                None => "INSUFFICIENT_DATA".to_string(),
            };
            cells.push(cell);
        }
        out.push_str(&join_owned(d, &cells));
        out.push('\n');
    }
    out
}

fn cot_table(snapshot: &RegistrySnapshot, opts: &ReportOptions) -> String {
    let d = opts.delimiter;
    let mut out = String::new();
    out.push_str(&join(d, ["benchmark", "ceg", "flag"]));
    out.push('\n');

    for benchmark in snapshot.benchmarks() {
        // The re-estimation reads the smallest-scale enhanced record and
        // fits whatever baseline scales exist (two-point allowed).
        let mut candidates: Vec<(f64, CegEstimate)> = Vec::new();
        for (idx, record) in snapshot.evaluations().iter().enumerate() {
            if record.benchmark != benchmark.id
                || !record.enhancements.contains(COT_ENHANCEMENT)
                || record.enhancements.len() != 1
            {
                continue;
            }
            if let Some(est) = fitted_from_family_baseline(snapshot, idx, 2) {
                let scale = snapshot
                    .model(&record.model)
                    .map(|m| m.param_count)
                    .unwrap_or(f64::INFINITY);
                candidates.push((scale, est));
            }
        }
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scale"));
        let est = &candidates[0].1;
        let flag = if est.is_meaningful() {
            "-"
        } else {
            "not_meaningful"
        };
        out.push_str(&join_owned(
            d,
            &[benchmark.id.clone(), fmt_cell(est.value), flag.to_string()],
        ));
        out.push('\n');
    }
    out
}

/// Point and fitted-line series for one (benchmark, family), as
/// `log10_compute,score,series` rows. The line spans the baseline fit
/// domain with evenly spaced log-compute samples; a family that cannot
/// support a fit emits points only.
pub fn emit_plot_data(
    snapshot: &RegistrySnapshot,
    benchmark: &str,
    family: &str,
) -> Result<String, ReportError> {
    if snapshot.benchmark(benchmark).is_none() {
        return Err(ReportError::UnknownBenchmark);
    }
    if snapshot.family(family).is_none() {
        return Err(ReportError::UnknownFamily);
    }

    let member_ids: Vec<&str> = snapshot
        .family_members(family)
        .into_iter()
        .map(|m| m.id.as_str())
        .collect();
    let axis = crate::ceg::fit_compute(snapshot, family, &member_ids);

    let mut baseline: Vec<(f64, f64)> = Vec::new();
    let mut enhanced: Vec<(f64, f64)> = Vec::new();
    for record in snapshot.evaluations() {
        if record.benchmark != benchmark {
            continue;
        }
        let Some(axis) = &axis else { continue };
        let Some(&compute) = axis.get(&record.model) else {
            continue;
        };
        if record.is_baseline() {
            baseline.push((compute, record.score));
        } else {
            enhanced.push((compute, record.score));
        }
    }
    let by_compute = |a: &(f64, f64), b: &(f64, f64)| {
        (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("finite points")
    };
    baseline.sort_by(by_compute);
    enhanced.sort_by(by_compute);

    let mut out = String::from("log10_compute,score,series\n");
    for &(c, p) in &baseline {
        out.push_str(&format!("{},{},baseline\n", fmt_num(c.log10()), fmt_num(p)));
    }
    for &(c, p) in &enhanced {
        out.push_str(&format!("{},{},enhanced\n", fmt_num(c.log10()), fmt_num(p)));
    }

    if let Ok(fit) = fit_log_linear(&baseline) {
        let (lo, hi) = (fit.domain.0.log10(), fit.domain.1.log10());
        for i in 0..PLOT_LINE_SAMPLES {
            let x = lo + (hi - lo) * (i as f64) / ((PLOT_LINE_SAMPLES - 1) as f64);
            let c = 10f64.powf(x);
            let p = predict(&fit, c).expect("positive sample compute");
            out.push_str(&format!("{},{},fit\n", fmt_num(x), fmt_num(p.value)));
        }
    }
    Ok(out)
}

fn join<'a>(delimiter: char, cells: impl IntoIterator<Item = &'a str>) -> String {
    cells
        .into_iter()
        .collect::<Vec<_>>()
        .join(&delimiter.to_string())
}

fn join_owned(delimiter: char, cells: &[String]) -> String {
    cells.join(&delimiter.to_string())
}
