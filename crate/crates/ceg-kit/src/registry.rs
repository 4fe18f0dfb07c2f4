//! Canonical data model and ingestion for models, families, benchmarks,
//! enhancements, evaluations, and cost inputs.
//!
//! The input format is UTF-8 JSON Lines: one self-describing object per
//! line with a `kind` field in {family, model, benchmark, enhancement,
//! evaluation, cost_input}. Lines starting with `#` are comments. The
//! schema is this project's own; the evidence it encodes comes from
//! published evaluation tables and has no standard machine-readable form.
//!
//! Snapshots are immutable once built and safe to share across threads
//! for read-only analysis. Ingestion is single-writer; nothing mutates a
//! snapshot in place.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::compute::Unit;
use crate::cost::Comparator;

/// A group of models sharing architecture and training recipe, differing
/// in scale. `equal_tokens` asserts every member saw the same token
/// count, which licenses treating compute as proportional to parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFamily {
    pub id: String,
    pub equal_tokens: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub architecture_note: String,
}

/// One trained model. Training compute is either declared outright or
/// derived lazily as 6·N·D from `param_count` and `tokens_seen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    pub family: String,
    pub param_count: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens_seen: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_flop: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

/// Whether larger scores mean better performance (accuracy) or worse
/// (perplexity, loss). Always explicit; scores stay in native units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    /// True when `a` is strictly better than `b` under this metric.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::HigherBetter => a > b,
            Direction::LowerBetter => a < b,
        }
    }

    /// Signed improvement of `a` over `b` (positive = better).
    pub fn improvement(self, a: f64, b: f64) -> f64 {
        match self {
            Direction::HigherBetter => a - b,
            Direction::LowerBetter => b - a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub id: String,
    pub metric_name: String,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub units: String,
}

/// The five enhancement categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Tool,
    Prompting,
    Scaffolding,
    SolutionChoice,
    Data,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Category::Tool => "tool",
            Category::Prompting => "prompting",
            Category::Scaffolding => "scaffolding",
            Category::SolutionChoice => "solution_choice",
            Category::Data => "data",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnhancementSpec {
    pub id: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

/// One (model, benchmark, enhancement-set) → score observation.
/// An empty enhancement set marks a non-enhanced baseline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationRecord {
    pub model: String,
    pub benchmark: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub enhancements: BTreeSet<String>,
    pub score: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub setting: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl EvaluationRecord {
    pub fn is_baseline(&self) -> bool {
        self.enhancements.is_empty()
    }

    /// Canonical `key=value,...` rendering of the setting map, sorted by
    /// key. Used for duplicate detection and canonical-setting tie-breaks.
    pub fn setting_string(&self) -> String {
        self.setting
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Identity tuple: duplicates of this key are rejected at ingest.
    pub fn dedup_key(&self) -> String {
        let enh = self
            .enhancements
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join("+");
        format!(
            "{}|{}|{}|{}",
            self.model,
            self.benchmark,
            enh,
            self.setting_string()
        )
    }
}

/// One-time fine-tuning cost for an enhancement, either as a same-unit
/// ratio of raw operands or as a fraction declared by the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OneTimeCost {
    Ratio {
        numerator: f64,
        denominator: f64,
        unit: Unit,
        cmp: Comparator,
    },
    Declared {
        fraction: f64,
        cmp: Comparator,
    },
}

/// Per-task inference-cost multiplier for an enhancement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum InferenceCost {
    /// Explored units times model calls per unit (search trees, best-of-n).
    Sampling {
        units: f64,
        calls: f64,
        cmp: Comparator,
    },
    /// Output-length ratio with vs without the enhancement.
    TokenRatio {
        tokens_with: f64,
        tokens_without: f64,
        cmp: Comparator,
    },
    /// A figure taken as-is from the source.
    Declared { value: f64, cmp: Comparator },
    /// A bounded interval quoted without underlying operands.
    Interval { lo: f64, hi: f64 },
}

/// Raw cost evidence for one enhancement; at most one record per
/// enhancement id. Missing `one_time` means no fine-tuning (cost 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostInput {
    pub enhancement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_time: Option<OneTimeCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inference: Option<InferenceCost>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityKind {
    Family,
    Model,
    Benchmark,
    Enhancement,
    Evaluation,
    CostInput,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityKind::Family => "family",
            EntityKind::Model => "model",
            EntityKind::Benchmark => "benchmark",
            EntityKind::Enhancement => "enhancement",
            EntityKind::Evaluation => "evaluation",
            EntityKind::CostInput => "cost_input",
        };
        f.write_str(s)
    }
}

/// A broken invariant, named by entity and rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: EntityKind,
    pub entity: String,
    pub rule: String,
    pub message: String,
}

impl Violation {
    fn new(kind: EntityKind, entity: &str, rule: &str, message: String) -> Self {
        Violation {
            kind,
            entity: entity.to_string(),
            rule: rule.to_string(),
            message,
        }
    }

    /// `ENTITY-ID<TAB>RULE<TAB>MESSAGE`, one per line.
    pub fn tsv_line(&self) -> String {
        format!("{}\t{}\t{}", self.entity, self.rule, self.message)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tsv_line())
    }
}

/// A violation pinned to the input line that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LineIssue {
    pub source: String,
    pub line: u64,
    pub violation: Violation,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}\t{}",
            self.source,
            self.line,
            self.violation.tsv_line()
        )
    }
}

/// Overall ingest failure: the input stream was read to the end and every
/// problem collected; the snapshot is withheld because at least one
/// record was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestError {
    pub issues: Vec<LineIssue>,
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ingest issue(s):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for IngestError {}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryError {
    UnknownBenchmark(String),
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::UnknownBenchmark(id) => write!(f, "unknown benchmark '{id}'"),
        }
    }
}

impl std::error::Error for QueryError {}

/// Immutable, referentially consistent view of all ingested entities.
/// Iteration order is stable (sorted by id / dedup key).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegistrySnapshot {
    families: BTreeMap<String, ModelFamily>,
    models: BTreeMap<String, ModelSpec>,
    benchmarks: BTreeMap<String, BenchmarkSpec>,
    enhancements: BTreeMap<String, EnhancementSpec>,
    cost_inputs: BTreeMap<String, CostInput>,
    evaluations: Vec<EvaluationRecord>,
}

impl RegistrySnapshot {
    /// Build a snapshot directly from entity lists, e.g. for synthetic
    /// data. No checks run here; call [`validate`] to audit the result.
    pub fn from_entities(
        families: Vec<ModelFamily>,
        models: Vec<ModelSpec>,
        benchmarks: Vec<BenchmarkSpec>,
        enhancements: Vec<EnhancementSpec>,
        evaluations: Vec<EvaluationRecord>,
        cost_inputs: Vec<CostInput>,
    ) -> Self {
        let mut snap = RegistrySnapshot {
            families: families.into_iter().map(|e| (e.id.clone(), e)).collect(),
            models: models.into_iter().map(|e| (e.id.clone(), e)).collect(),
            benchmarks: benchmarks.into_iter().map(|e| (e.id.clone(), e)).collect(),
            enhancements: enhancements
                .into_iter()
                .map(|e| (e.id.clone(), e))
                .collect(),
            cost_inputs: cost_inputs
                .into_iter()
                .map(|e| (e.enhancement.clone(), e))
                .collect(),
            evaluations,
        };
        snap.evaluations.sort_by_key(EvaluationRecord::dedup_key);
        snap
    }

    pub fn family(&self, id: &str) -> Option<&ModelFamily> {
        self.families.get(id)
    }
    pub fn model(&self, id: &str) -> Option<&ModelSpec> {
        self.models.get(id)
    }
    pub fn benchmark(&self, id: &str) -> Option<&BenchmarkSpec> {
        self.benchmarks.get(id)
    }
    pub fn enhancement(&self, id: &str) -> Option<&EnhancementSpec> {
        self.enhancements.get(id)
    }
    pub fn cost_input(&self, enhancement: &str) -> Option<&CostInput> {
        self.cost_inputs.get(enhancement)
    }

    pub fn families(&self) -> impl Iterator<Item = &ModelFamily> {
        self.families.values()
    }
    pub fn models(&self) -> impl Iterator<Item = &ModelSpec> {
        self.models.values()
    }
    pub fn benchmarks(&self) -> impl Iterator<Item = &BenchmarkSpec> {
        self.benchmarks.values()
    }
    pub fn enhancements(&self) -> impl Iterator<Item = &EnhancementSpec> {
        self.enhancements.values()
    }
    pub fn cost_inputs(&self) -> impl Iterator<Item = &CostInput> {
        self.cost_inputs.values()
    }
    pub fn evaluations(&self) -> &[EvaluationRecord] {
        &self.evaluations
    }

    /// Models belonging to a family, sorted by id.
    pub fn family_members(&self, family: &str) -> Vec<&ModelSpec> {
        self.models
            .values()
            .filter(|m| m.family == family)
            .collect()
    }

    pub fn entity_count(&self) -> usize {
        self.families.len()
            + self.models.len()
            + self.benchmarks.len()
            + self.enhancements.len()
            + self.cost_inputs.len()
            + self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_count() == 0
    }

    /// Serialize back to JSON Lines. `ingest(to_jsonl(snapshot))` is the
    /// identity on snapshots that ingest accepted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |kind: &str, value: serde_json::Value| {
            let mut obj = serde_json::Map::new();
            obj.insert(
                "kind".to_string(),
                serde_json::Value::String(kind.to_string()),
            );
            if let serde_json::Value::Object(fields) = value {
                for (k, v) in fields {
                    obj.insert(k, v);
                }
            }
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        };
        for e in self.families.values() {
            push("family", serde_json::to_value(e).expect("serialize family"));
        }
        for e in self.models.values() {
            push("model", serde_json::to_value(e).expect("serialize model"));
        }
        for e in self.benchmarks.values() {
            push(
                "benchmark",
                serde_json::to_value(e).expect("serialize benchmark"),
            );
        }
        for e in self.enhancements.values() {
            push(
                "enhancement",
                serde_json::to_value(e).expect("serialize enhancement"),
            );
        }
        for e in self.cost_inputs.values() {
            push(
                "cost_input",
                serde_json::to_value(e).expect("serialize cost_input"),
            );
        }
        for e in &self.evaluations {
            push(
                "evaluation",
                serde_json::to_value(e).expect("serialize evaluation"),
            );
        }
        out
    }
}

/// Evaluation records on one benchmark split by an enhancement filter.
#[derive(Debug, Clone)]
pub struct Partition<'a> {
    pub enhanced: Vec<&'a EvaluationRecord>,
    pub baseline: Vec<&'a EvaluationRecord>,
}

/// Which enhanced records to admit when pairing.
#[derive(Debug, Clone, Copy)]
pub struct EnhancementFilter<'a> {
    pub enhancement: &'a str,
    /// Drop records that stack this enhancement with others.
    pub single_only: bool,
}

/// Split a benchmark's records into enhanced (carrying the filtered
/// enhancement) and baseline (no enhancements at all). Records carrying
/// only other enhancements match neither side.
pub fn query<'a>(
    snapshot: &'a RegistrySnapshot,
    benchmark: &str,
    filter: &EnhancementFilter<'_>,
) -> Result<Partition<'a>, QueryError> {
    if snapshot.benchmark(benchmark).is_none() {
        return Err(QueryError::UnknownBenchmark(benchmark.to_string()));
    }
    let mut enhanced = Vec::new();
    let mut baseline = Vec::new();
    for record in &snapshot.evaluations {
        if record.benchmark != benchmark {
            continue;
        }
        if record.is_baseline() {
            baseline.push(record);
        } else if record.enhancements.contains(filter.enhancement)
            && (!filter.single_only || record.enhancements.len() == 1)
        {
            enhanced.push(record);
        }
    }
    Ok(Partition { enhanced, baseline })
}

fn check_quantity(
    out: &mut Vec<Violation>,
    kind: EntityKind,
    entity: &str,
    name: &str,
    value: f64,
) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::new(
            kind,
            entity,
            "quantity_positive",
            format!("{name} must be positive, got {value}"),
        ));
    }
}

/// Audit every type invariant over a snapshot. Empty result means the
/// snapshot is consistent; violations are data, not errors.
pub fn validate(snapshot: &RegistrySnapshot) -> Vec<Violation> {
    let mut out = Vec::new();

    for model in snapshot.models.values() {
        if !(model.param_count > 0.0 && model.param_count.is_finite()) {
            out.push(Violation::new(
                EntityKind::Model,
                &model.id,
                "param_count_positive",
                format!("param_count must be positive, got {}", model.param_count),
            ));
        }
        if model.training_flop.is_none() && model.tokens_seen.is_none() {
            out.push(Violation::new(
                EntityKind::Model,
                &model.id,
                "compute_representation",
                "needs training_flop or (param_count and tokens_seen)".to_string(),
            ));
        }
        if let Some(tokens) = model.tokens_seen {
            check_quantity(
                &mut out,
                EntityKind::Model,
                &model.id,
                "tokens_seen",
                tokens,
            );
        }
        if let Some(flop) = model.training_flop {
            check_quantity(
                &mut out,
                EntityKind::Model,
                &model.id,
                "training_flop",
                flop,
            );
        }
        if snapshot.family(&model.family).is_none() {
            out.push(Violation::new(
                EntityKind::Model,
                &model.id,
                "dangling_reference",
                format!("dangling family reference '{}'", model.family),
            ));
        }
    }

    for family in snapshot.families.values() {
        if !family.equal_tokens {
            continue;
        }
        let token_counts: Vec<(&str, f64)> = snapshot
            .family_members(&family.id)
            .into_iter()
            .filter_map(|m| m.tokens_seen.map(|t| (m.id.as_str(), t)))
            .collect();
        if let Some(&(_, first)) = token_counts.first() {
            for &(id, tokens) in &token_counts[1..] {
                if tokens != first {
                    out.push(Violation::new(
                        EntityKind::Family,
                        &family.id,
                        "equal_tokens",
                        format!(
                            "equal_tokens family has members at {first} and {tokens} tokens (e.g. '{id}')"
                        ),
                    ));
                    break;
                }
            }
        }
    }

    let mut seen_eval_keys = BTreeSet::new();
    for record in &snapshot.evaluations {
        let key = record.dedup_key();
        if !seen_eval_keys.insert(key.clone()) {
            out.push(Violation::new(
                EntityKind::Evaluation,
                &key,
                "duplicate_key",
                "duplicate (model, benchmark, enhancements, setting) tuple".to_string(),
            ));
        }
        if snapshot.model(&record.model).is_none() {
            out.push(Violation::new(
                EntityKind::Evaluation,
                &key,
                "dangling_reference",
                format!("dangling model reference '{}'", record.model),
            ));
        }
        if snapshot.benchmark(&record.benchmark).is_none() {
            out.push(Violation::new(
                EntityKind::Evaluation,
                &key,
                "dangling_reference",
                format!("dangling benchmark reference '{}'", record.benchmark),
            ));
        }
        for enh in &record.enhancements {
            if snapshot.enhancement(enh).is_none() {
                out.push(Violation::new(
                    EntityKind::Evaluation,
                    &key,
                    "dangling_reference",
                    format!("dangling enhancement reference '{enh}'"),
                ));
            }
        }
        if !record.score.is_finite() {
            out.push(Violation::new(
                EntityKind::Evaluation,
                &key,
                "score_finite",
                format!("score must be finite, got {}", record.score),
            ));
        }
    }

    for input in snapshot.cost_inputs.values() {
        let entity = input.enhancement.as_str();
        if snapshot.enhancement(entity).is_none() {
            out.push(Violation::new(
                EntityKind::CostInput,
                entity,
                "dangling_reference",
                format!("dangling enhancement reference '{entity}'"),
            ));
        }
        match &input.one_time {
            Some(OneTimeCost::Ratio {
                numerator,
                denominator,
                ..
            }) => {
                check_quantity(
                    &mut out,
                    EntityKind::CostInput,
                    entity,
                    "numerator",
                    *numerator,
                );
                check_quantity(
                    &mut out,
                    EntityKind::CostInput,
                    entity,
                    "denominator",
                    *denominator,
                );
            }
            Some(OneTimeCost::Declared { fraction, .. })
                if !(*fraction >= 0.0 && fraction.is_finite()) =>
            {
                out.push(Violation::new(
                    EntityKind::CostInput,
                    entity,
                    "quantity_positive",
                    format!("fraction must be non-negative, got {fraction}"),
                ));
            }
            Some(OneTimeCost::Declared { .. }) | None => {}
        }
        match &input.inference {
            Some(InferenceCost::Sampling { units, calls, .. }) => {
                if *units < 1.0 || *calls < 1.0 {
                    out.push(Violation::new(
                        EntityKind::CostInput,
                        entity,
                        "cost_operand",
                        format!("sampling counts must be >= 1, got {units} x {calls}"),
                    ));
                }
            }
            Some(InferenceCost::TokenRatio {
                tokens_with,
                tokens_without,
                ..
            }) => {
                check_quantity(
                    &mut out,
                    EntityKind::CostInput,
                    entity,
                    "tokens_with",
                    *tokens_with,
                );
                check_quantity(
                    &mut out,
                    EntityKind::CostInput,
                    entity,
                    "tokens_without",
                    *tokens_without,
                );
            }
            Some(InferenceCost::Declared { value, .. }) => {
                if !(*value >= 0.0 && value.is_finite()) {
                    out.push(Violation::new(
                        EntityKind::CostInput,
                        entity,
                        "quantity_positive",
                        format!("inference multiplier must be non-negative, got {value}"),
                    ));
                }
            }
            Some(InferenceCost::Interval { lo, hi })
                if !(lo.is_finite() && hi.is_finite() && lo < hi) =>
            {
                out.push(Violation::new(
                    EntityKind::CostInput,
                    entity,
                    "cost_operand",
                    format!("interval requires lo < hi, got [{lo}, {hi}]"),
                ));
            }
            Some(InferenceCost::Interval { .. }) | None => {}
        }
    }

    out
}

enum ParsedRecord {
    Family(ModelFamily),
    Model(ModelSpec),
    Benchmark(BenchmarkSpec),
    Enhancement(EnhancementSpec),
    Evaluation(EvaluationRecord),
    CostInput(CostInput),
}

fn parse_line(text: &str) -> Result<ParsedRecord, (String, String)> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ("syntax".to_string(), format!("invalid JSON: {e}")))?;
    let obj = value.as_object().ok_or((
        "syntax".to_string(),
        "record must be a JSON object".to_string(),
    ))?;
    let kind = obj
        .get("kind")
        .and_then(|v| v.as_str())
        .ok_or(("syntax".to_string(), "missing 'kind' field".to_string()))?
        .to_string();
    let mut rest = obj.clone();
    rest.remove("kind");
    let rest = serde_json::Value::Object(rest);
    let schema_err = |e: serde_json::Error| ("schema".to_string(), format!("invalid {kind}: {e}"));
    match kind.as_str() {
        "family" => Ok(ParsedRecord::Family(
            serde_json::from_value(rest).map_err(schema_err)?,
        )),
        "model" => Ok(ParsedRecord::Model(
            serde_json::from_value(rest).map_err(schema_err)?,
        )),
        "benchmark" => Ok(ParsedRecord::Benchmark(
            serde_json::from_value(rest).map_err(schema_err)?,
        )),
        "enhancement" => Ok(ParsedRecord::Enhancement(
            serde_json::from_value(rest).map_err(schema_err)?,
        )),
        "evaluation" => Ok(ParsedRecord::Evaluation(
            serde_json::from_value(rest).map_err(schema_err)?,
        )),
        "cost_input" => Ok(ParsedRecord::CostInput(
            serde_json::from_value(rest).map_err(schema_err)?,
        )),
        other => Err(("syntax".to_string(), format!("unknown kind '{other}'"))),
    }
}

/// Read every source to the end, keep whatever forms a consistent
/// snapshot, and report everything else with its source line. Records
/// that would break referential consistency or duplicate a key are
/// dropped; semantically invalid but representable entities are kept and
/// reported, so `ceg-kit validate` can show them.
pub fn ingest_lenient<R: BufRead>(
    sources: impl IntoIterator<Item = (String, R)>,
) -> (RegistrySnapshot, Vec<LineIssue>) {
    let mut issues: Vec<LineIssue> = Vec::new();
    // (source, line, record) triples, in input order.
    let mut records: Vec<(String, u64, ParsedRecord)> = Vec::new();

    for (label, mut reader) in sources {
        let mut line_no: u64 = 0;
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = match reader.read_line(&mut buf) {
                Ok(n) => n,
                Err(e) => {
                    issues.push(LineIssue {
                        source: label.clone(),
                        line: line_no + 1,
                        violation: Violation::new(
                            EntityKind::Evaluation,
                            "-",
                            "io",
                            format!("read failure: {e}"),
                        ),
                    });
                    break;
                }
            };
            if n == 0 {
                break;
            }
            line_no += 1;
            let text = buf.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            match parse_line(text) {
                Ok(record) => records.push((label.clone(), line_no, record)),
                Err((rule, message)) => issues.push(LineIssue {
                    source: label.clone(),
                    line: line_no,
                    violation: Violation::new(EntityKind::Evaluation, "-", &rule, message),
                }),
            }
        }
    }

    // First pass: entity tables, rejecting duplicate keys.
    let mut snap = RegistrySnapshot::default();
    let mut lines: BTreeMap<(EntityKind, String), (String, u64)> = BTreeMap::new();
    let mut eval_entries: Vec<(String, u64, EvaluationRecord)> = Vec::new();

    let duplicate =
        |issues: &mut Vec<LineIssue>, source: &str, line: u64, kind: EntityKind, id: &str| {
            issues.push(LineIssue {
                source: source.to_string(),
                line,
                violation: Violation::new(
                    kind,
                    id,
                    "duplicate_key",
                    format!("duplicate {kind} '{id}'"),
                ),
            });
        };

    for (source, line, record) in records {
        match record {
            ParsedRecord::Family(e) => {
                if snap.families.contains_key(&e.id) {
                    duplicate(&mut issues, &source, line, EntityKind::Family, &e.id);
                } else {
                    lines.insert((EntityKind::Family, e.id.clone()), (source, line));
                    snap.families.insert(e.id.clone(), e);
                }
            }
            ParsedRecord::Model(e) => {
                if snap.models.contains_key(&e.id) {
                    duplicate(&mut issues, &source, line, EntityKind::Model, &e.id);
                } else {
                    lines.insert((EntityKind::Model, e.id.clone()), (source, line));
                    snap.models.insert(e.id.clone(), e);
                }
            }
            ParsedRecord::Benchmark(e) => {
                if snap.benchmarks.contains_key(&e.id) {
                    duplicate(&mut issues, &source, line, EntityKind::Benchmark, &e.id);
                } else {
                    lines.insert((EntityKind::Benchmark, e.id.clone()), (source, line));
                    snap.benchmarks.insert(e.id.clone(), e);
                }
            }
            ParsedRecord::Enhancement(e) => {
                if snap.enhancements.contains_key(&e.id) {
                    duplicate(&mut issues, &source, line, EntityKind::Enhancement, &e.id);
                } else {
                    lines.insert((EntityKind::Enhancement, e.id.clone()), (source, line));
                    snap.enhancements.insert(e.id.clone(), e);
                }
            }
            ParsedRecord::CostInput(e) => {
                if snap.cost_inputs.contains_key(&e.enhancement) {
                    duplicate(
                        &mut issues,
                        &source,
                        line,
                        EntityKind::CostInput,
                        &e.enhancement,
                    );
                } else {
                    lines.insert(
                        (EntityKind::CostInput, e.enhancement.clone()),
                        (source, line),
                    );
                    snap.cost_inputs.insert(e.enhancement.clone(), e);
                }
            }
            ParsedRecord::Evaluation(e) => eval_entries.push((source, line, e)),
        }
    }

    let mut seen_eval_keys = BTreeSet::new();
    for (source, line, record) in eval_entries {
        let key = record.dedup_key();
        if !seen_eval_keys.insert(key.clone()) {
            duplicate(&mut issues, &source, line, EntityKind::Evaluation, &key);
            continue;
        }
        lines.insert((EntityKind::Evaluation, key), (source, line));
        snap.evaluations.push(record);
    }
    snap.evaluations.sort_by_key(EvaluationRecord::dedup_key);

    // Second pass: full invariant audit, attributing each violation back
    // to the line that introduced the entity. Referentially inconsistent
    // records are removed so the surviving snapshot is consistent.
    let violations = validate(&snap);
    let mut drop_models: BTreeSet<String> = BTreeSet::new();
    let mut drop_evals: BTreeSet<String> = BTreeSet::new();
    let mut drop_costs: BTreeSet<String> = BTreeSet::new();
    for v in violations {
        let loc = lines.get(&(v.kind, v.entity.clone())).cloned();
        let (source, line) = loc.unwrap_or(("<built>".to_string(), 0));
        if v.rule == "dangling_reference" {
            match v.kind {
                EntityKind::Model => drop_models.insert(v.entity.clone()),
                EntityKind::Evaluation => drop_evals.insert(v.entity.clone()),
                EntityKind::CostInput => drop_costs.insert(v.entity.clone()),
                _ => false,
            };
        }
        issues.push(LineIssue {
            source,
            line,
            violation: v,
        });
    }
    snap.models.retain(|id, _| !drop_models.contains(id));
    snap.evaluations
        .retain(|e| !drop_evals.contains(&e.dedup_key()));
    snap.cost_inputs.retain(|id, _| !drop_costs.contains(id));
    // Dropping a model can orphan evaluations that referenced it; sweep
    // until stable.
    loop {
        let orphans: Vec<String> = snap
            .evaluations
            .iter()
            .filter(|e| snap.model(&e.model).is_none())
            .map(EvaluationRecord::dedup_key)
            .collect();
        if orphans.is_empty() {
            break;
        }
        snap.evaluations
            .retain(|e| !orphans.contains(&e.dedup_key()));
    }

    issues.sort_by(|a, b| (&a.source, a.line).cmp(&(&b.source, b.line)));
    (snap, issues)
}

/// Strict ingest: returns the snapshot only when every record was
/// accepted; otherwise fails with the full issue list.
pub fn ingest<R: BufRead>(
    sources: impl IntoIterator<Item = (String, R)>,
) -> Result<RegistrySnapshot, IngestError> {
    let (snap, issues) = ingest_lenient(sources);
    if issues.is_empty() {
        Ok(snap)
    } else {
        Err(IngestError { issues })
    }
}

/// Strict ingest of a single in-memory document.
pub fn ingest_str(input: &str) -> Result<RegistrySnapshot, IngestError> {
    ingest([("<memory>".to_string(), input.as_bytes())])
}
