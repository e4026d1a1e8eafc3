//! Text organization: from a report request to a plan of IR statements.
//!
//! A report skeleton is instantiated into assertion specifications, which
//! are augmented with report-wide and entailed values, restructured into
//! the IR shape by mapping schemata, and finally aggregated over a
//! discourse memory that elides repeated optional constituents and marks
//! corresponding adjacent assertions.

mod resources;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::diagnostics::ValidationReport;
use crate::ir::schema::{Alternative, ValueSpec};
use crate::ir::{
    validate, Edit, EditError, FeaturePath, FeatureStructure, IrSchema, Number, Symbol, Value,
};
use crate::tgl::language_tag;

pub use resources::{
    parse_aggregation, parse_edit, parse_schemata, parse_skeletons, AggregationRule,
    AggregationRules, Condition, ResourceError, RestructuringSchema, Skeleton, SkeletonItem,
    SkeletonSet,
};

/// Report-wide parameters and the values bound for them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportContext {
    pub report_type: Symbol,
    /// IR language value, e.g. FRENCH.
    pub language: Symbol,
    pub bindings: BTreeMap<Symbol, Value>,
    pub flags: BTreeSet<Symbol>,
    pub diagrams: usize,
}

impl ReportContext {
    pub fn binding(&self, name: &str) -> Option<&Value> {
        self.bindings.get(&Symbol::new(name))
    }

    pub fn has_flag(&self, flag: &Symbol) -> bool {
        self.flags.contains(flag)
    }
}

/// Measurement-derived content for one statement.
#[derive(Debug, Clone, PartialEq)]
pub enum AssertionData {
    /// Slots merged into the statement payload.
    Record(FeatureStructure),
    /// The assertion needs no measurements.
    Nothing,
    /// No measurements cover the period.
    NoData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdInfo {
    pub law_name: Symbol,
    pub threshold_type: Symbol,
    pub amount: Number,
    pub unit: Symbol,
    pub hours: i64,
}

/// What the organizer needs from the data layer.
pub trait DataSource {
    fn assertion_data(
        &self,
        assertion: &Symbol,
        ctx: &ReportContext,
        period: &Value,
    ) -> Result<AssertionData, String>;
    /// Unit symbol of a pollutant given by its IR symbol.
    fn pollutant_unit(&self, pollutant: &Symbol) -> Option<Symbol>;
    fn threshold(&self, legislation: &Symbol, pollutant: &Symbol) -> Option<ThresholdInfo>;
    /// Canned text by key and language tag.
    fn canned(&self, key: &str, language: &Symbol) -> Option<String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionSpec {
    pub assertion: Symbol,
    pub payload: FeatureStructure,
    /// Context bindings the statement refers to.
    pub refs: Vec<Symbol>,
    /// Skeleton slot label for messages.
    pub slot: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Draft {
    Spec(AssertionSpec),
    Canned { key: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanItem {
    Statement(FeatureStructure),
    CannedBlock {
        key: String,
        language: Symbol,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPlan {
    pub items: Vec<PlanItem>,
    /// The statements as restructured, before aggregation.
    pub pre_aggregation: Vec<FeatureStructure>,
}

impl ReportPlan {
    pub fn statements(&self) -> impl Iterator<Item = &FeatureStructure> {
        self.items.iter().filter_map(|i| match i {
            PlanItem::Statement(fs) => Some(fs),
            PlanItem::CannedBlock { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextOrgError {
    #[error("no skeleton for report type {0}")]
    UnknownReportType(Symbol),
    #[error("instantiate: skeleton slot {slot} needs binding {binding}")]
    MissingBinding { slot: String, binding: Symbol },
    #[error("instantiate: no data for skeleton slot {slot} and no fallback")]
    NoData { slot: String },
    #[error("instantiate: data source failed for {slot}: {message}")]
    Data { slot: String, message: String },
    #[error("augment: {slot}: {message}")]
    Metadata { slot: String, message: String },
    #[error("restructure: schema {schema}: {error}")]
    Edit { schema: String, error: EditError },
    #[error("restructure: schema {schema} does not yield its declared pattern")]
    Yield { schema: String },
    #[error("{stage}: statement {index} is not valid IR:\n{report}")]
    Invalid {
        stage: &'static str,
        index: usize,
        report: ValidationReport,
    },
    #[error("aggregate: rule {rule}: {error}")]
    AggregationEdit { rule: String, error: EditError },
    #[error("aggregate: rule {rule} produced invalid IR:\n{report}")]
    AggregationInvalid {
        rule: String,
        report: ValidationReport,
    },
    #[error("canned text {key} is missing for language {language}")]
    MissingCanned { key: String, language: Symbol },
}

fn flag_ok(ctx: &ReportContext, when: &Option<Symbol>) -> bool {
    when.as_ref().is_none_or(|f| ctx.has_flag(f))
}

/// Builds one draft per applicable skeleton slot. Statement payloads carry
/// COOP, the internal PERIOD record and the data record.
pub fn instantiate(
    skeleton: &Skeleton,
    ctx: &ReportContext,
    data: &dyn DataSource,
) -> Result<Vec<Draft>, TextOrgError> {
    let period_name = Symbol::new("PERIOD");
    let mut out = Vec::new();
    for (i, item) in skeleton.items.iter().enumerate() {
        match item {
            SkeletonItem::Canned { binding, when } => {
                if !flag_ok(ctx, when) {
                    continue;
                }
                let key = match ctx.bindings.get(binding) {
                    Some(Value::Symbol(s)) => s.to_string(),
                    Some(Value::Text(t)) => t.clone(),
                    _ => {
                        return Err(TextOrgError::MissingBinding {
                            slot: format!("{} #{}", skeleton.report_type, i + 1),
                            binding: binding.clone(),
                        })
                    }
                };
                out.push(Draft::Canned { key });
            }
            SkeletonItem::Statement {
                assertion,
                when,
                period,
                uses,
                fallback,
            } => {
                if !flag_ok(ctx, when) {
                    continue;
                }
                let slot = format!("{} #{} ({assertion})", skeleton.report_type, i + 1);
                let period_value = ctx.bindings.get(period);
                if period_value.is_none() && *period != period_name {
                    continue;
                }
                for b in uses {
                    let bound = if *b == period_name {
                        period_value.is_some()
                    } else {
                        ctx.bindings.contains_key(b)
                    };
                    if !bound {
                        return Err(TextOrgError::MissingBinding {
                            slot,
                            binding: b.clone(),
                        });
                    }
                }
                let mut payload =
                    FeatureStructure::new().with("COOP", Value::Symbol(assertion.clone()));
                let mut assertion = assertion.clone();
                let mut refs = uses.clone();
                if let Some(p) = period_value.filter(|_| uses.contains(&period_name)) {
                    payload = payload.with("PERIOD", p.clone());
                }
                let period_arg = period_value
                    .cloned()
                    .unwrap_or(Value::Struct(FeatureStructure::new()));
                match data
                    .assertion_data(&assertion, ctx, &period_arg)
                    .map_err(|message| TextOrgError::Data {
                        slot: slot.clone(),
                        message,
                    })? {
                    AssertionData::Record(rec) => {
                        for (k, v) in rec.iter() {
                            payload = payload.with(k.as_str(), v.clone());
                        }
                    }
                    AssertionData::Nothing => {}
                    AssertionData::NoData => match fallback {
                        Some(fb) => {
                            assertion = fb.clone();
                            payload = payload.with("COOP", Value::Symbol(fb.clone()));
                            refs.retain(|r| r != "LEGISLATION");
                        }
                        None => return Err(TextOrgError::NoData { slot }),
                    },
                }
                out.push(Draft::Spec(AssertionSpec {
                    assertion,
                    payload,
                    refs,
                    slot,
                }));
            }
        }
    }
    Ok(out)
}

/// Copies report-wide values in and computes entailed ones: threshold
/// details from the legislation, the unit of measured values and the
/// diagram count of introductory statements.
pub fn augment(
    spec: AssertionSpec,
    ctx: &ReportContext,
    data: &dyn DataSource,
) -> Result<AssertionSpec, TextOrgError> {
    let mut fs = spec.payload.clone();
    let err = |message: String| TextOrgError::Metadata {
        slot: spec.slot.clone(),
        message,
    };
    fs = fs.with("LANGUAGE", Value::Symbol(ctx.language.clone()));
    let pollutant = ctx.binding("POLLUTANT").and_then(Value::as_symbol).cloned();
    for r in &spec.refs {
        match r.as_str() {
            "SITE" | "POLLUTANT" => {
                let v = ctx
                    .bindings
                    .get(r)
                    .ok_or_else(|| err(format!("binding {r} is unset")))?;
                fs = fs.with(r.as_str(), v.clone());
            }
            "LEGISLATION" => {
                let law = ctx
                    .binding("LEGISLATION")
                    .and_then(Value::as_symbol)
                    .ok_or_else(|| err("binding LEGISLATION is unset".into()))?;
                let pol = pollutant
                    .as_ref()
                    .ok_or_else(|| err("binding POLLUTANT is unset".into()))?;
                let t = data
                    .threshold(law, pol)
                    .ok_or_else(|| err(format!("no {law} threshold for {pol}")))?;
                fs = fs
                    .with("AMOUNT", Value::Number(t.amount))
                    .with("UNIT", Value::Symbol(t.unit.clone()))
                    .with(
                        "SOURCE",
                        Value::Struct(FeatureStructure::from_pairs([
                            ("LAW-NAME", Value::Symbol(t.law_name.clone())),
                            ("THRESHOLD-TYPE", Value::Symbol(t.threshold_type.clone())),
                        ])),
                    )
                    .with(
                        "DURATION",
                        Value::Struct(FeatureStructure::from_pairs([(
                            "HOUR",
                            Value::int(t.hours),
                        )])),
                    );
            }
            _ => {}
        }
    }
    if fs
        .get_path(&FeaturePath::parse("RESULT.MEASURED").expect("literal"))
        .is_some()
    {
        let pol = pollutant
            .as_ref()
            .ok_or_else(|| err("binding POLLUTANT is unset".into()))?;
        let unit = data
            .pollutant_unit(pol)
            .ok_or_else(|| err(format!("pollutant {pol} has no unit")))?;
        fs = fs.with("UNIT", Value::Symbol(unit));
    }
    if spec.assertion == "META-COMMENT" {
        fs = fs.with("COUNT", Value::int(ctx.diagrams as i64));
    }
    Ok(AssertionSpec {
        payload: fs,
        ..spec
    })
}

/// Evaluates a schema or rule condition. Memory conditions are false
/// without a memory.
pub fn condition_holds(
    c: &Condition,
    fs: &FeatureStructure,
    memory: Option<&DiscourseMemory>,
) -> bool {
    let here = fs.get_path(c.path());
    match c {
        Condition::Present(_) => here.is_some(),
        Condition::Absent(_) => here.is_none(),
        Condition::Eq(_, v) => here == Some(v),
        Condition::MemoryEq(p) => here.is_some() && memory.and_then(|m| m.values.get(p)) == here,
        Condition::PreviousEq(p) => {
            here.is_some()
                && memory
                    .and_then(|m| m.previous.as_ref())
                    .and_then(|prev| prev.get_path(p))
                    == here
        }
    }
}

/// Applies each matching schema once, in declared order, then orders the
/// top-level slots as the schema lists them and validates the result.
pub fn restructure(
    payload: &FeatureStructure,
    schemata: &[RestructuringSchema],
    schema: &IrSchema,
) -> Result<FeatureStructure, TextOrgError> {
    let fs = apply_schemata(payload, schemata)?;
    let fs = schema_order(&fs, schema);
    let report = validate(&fs, schema);
    if report.has_errors() {
        return Err(TextOrgError::Invalid {
            stage: "restructure",
            index: 0,
            report,
        });
    }
    Ok(fs)
}

/// The edit part of [`restructure`], without ordering or validation.
pub fn apply_schemata(
    payload: &FeatureStructure,
    schemata: &[RestructuringSchema],
) -> Result<FeatureStructure, TextOrgError> {
    let mut fs = payload.clone();
    for s in schemata {
        if !s.matches.iter().all(|c| condition_holds(c, &fs, None)) {
            continue;
        }
        for e in &s.edits {
            fs = fs.edit(e).map_err(|error| TextOrgError::Edit {
                schema: s.name.clone(),
                error,
            })?;
        }
        if !s.yields.iter().all(|c| condition_holds(c, &fs, None)) {
            return Err(TextOrgError::Yield {
                schema: s.name.clone(),
            });
        }
    }
    Ok(fs)
}

/// Reorders top-level slots by their first listing among the root
/// alternatives; unlisted slots keep their relative order at the end.
pub fn schema_order(fs: &FeatureStructure, schema: &IrSchema) -> FeatureStructure {
    let mut order: Vec<Symbol> = Vec::new();
    for alt in schema.expand(&[ValueSpec::NonTerminal(schema.root().clone())]) {
        if let Alternative::Structure(slots) = alt {
            for s in slots {
                if !order.contains(&s.slot) {
                    order.push(s.slot);
                }
            }
        }
    }
    let mut pairs: Vec<(&Symbol, &Value)> = fs.iter().collect();
    pairs.sort_by_key(|(k, _)| order.iter().position(|o| o == *k).unwrap_or(usize::MAX));
    FeatureStructure::from_pairs(
        pairs
            .into_iter()
            .map(|(k, v)| (k.as_str().to_string(), v.clone())),
    )
}

/// Values of the designated optional constituents last seen in the report,
/// plus the previous statement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscourseMemory {
    pub values: BTreeMap<FeaturePath, Value>,
    pub previous: Option<FeatureStructure>,
}

impl DiscourseMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.values.clear();
        self.previous = None;
    }

    fn record(&mut self, tracked: &[FeaturePath], fs: &FeatureStructure) {
        for p in tracked {
            if let Some(v) = fs.get_path(p) {
                self.values.insert(p.clone(), v.clone());
            }
        }
        self.previous = Some(fs.clone());
    }
}

/// Runs the aggregation rules over adjacent statements. Conditions see the
/// statement as it was before aggregation; the memory is updated from it.
pub fn aggregate(
    statements: &[FeatureStructure],
    rules: &AggregationRules,
    memory: &mut DiscourseMemory,
    schema: &IrSchema,
) -> Result<Vec<FeatureStructure>, TextOrgError> {
    let mut out = Vec::with_capacity(statements.len());
    for original in statements {
        let mut fs = original.clone();
        for rule in &rules.rules {
            if !rule
                .when
                .iter()
                .all(|c| condition_holds(c, original, Some(memory)))
            {
                continue;
            }
            for e in &rule.edits {
                if matches!(e, Edit::Delete(p) if fs.get_path(p).is_none()) {
                    continue;
                }
                fs = fs.edit(e).map_err(|error| TextOrgError::AggregationEdit {
                    rule: rule.name.clone(),
                    error,
                })?;
            }
            let report = validate(&fs, schema);
            if report.has_errors() {
                return Err(TextOrgError::AggregationInvalid {
                    rule: rule.name.clone(),
                    report,
                });
            }
        }
        memory.record(&rules.memory, original);
        out.push(fs);
    }
    Ok(out)
}

/// Resources the organizer works from.
#[derive(Debug, Clone, Copy)]
pub struct Organizer<'a> {
    pub skeletons: &'a SkeletonSet,
    pub schemata: &'a [RestructuringSchema],
    pub rules: &'a AggregationRules,
    pub schema: &'a IrSchema,
}

/// Full pipeline: instantiate, augment, restructure, aggregate. Canned
/// blocks stay in skeleton order and do not separate adjacent statements.
pub fn organize_report(
    ctx: &ReportContext,
    data: &dyn DataSource,
    org: Organizer<'_>,
) -> Result<ReportPlan, TextOrgError> {
    let skeleton = org
        .skeletons
        .get(&ctx.report_type)
        .ok_or_else(|| TextOrgError::UnknownReportType(ctx.report_type.clone()))?;
    let drafts = instantiate(skeleton, ctx, data)?;
    let lang_tag =
        language_tag(&Value::Symbol(ctx.language.clone())).unwrap_or_else(|| ctx.language.clone());
    enum Slot {
        Statement(usize),
        Canned(String, String),
    }
    let mut layout = Vec::new();
    let mut statements = Vec::new();
    for draft in drafts {
        match draft {
            Draft::Spec(spec) => {
                let spec = augment(spec, ctx, data)?;
                let index = statements.len();
                let fs =
                    restructure(&spec.payload, org.schemata, org.schema).map_err(|e| match e {
                        TextOrgError::Invalid { stage, report, .. } => TextOrgError::Invalid {
                            stage,
                            index,
                            report,
                        },
                        other => other,
                    })?;
                statements.push(fs);
                layout.push(Slot::Statement(index));
            }
            Draft::Canned { key } => {
                let text =
                    data.canned(&key, &lang_tag)
                        .ok_or_else(|| TextOrgError::MissingCanned {
                            key: key.clone(),
                            language: lang_tag.clone(),
                        })?;
                layout.push(Slot::Canned(key, text));
            }
        }
    }
    let mut memory = DiscourseMemory::new();
    let aggregated = aggregate(&statements, org.rules, &mut memory, org.schema)?;
    let items = layout
        .into_iter()
        .map(|s| match s {
            Slot::Statement(i) => PlanItem::Statement(aggregated[i].clone()),
            Slot::Canned(key, text) => PlanItem::CannedBlock {
                key,
                language: lang_tag.clone(),
                text,
            },
        })
        .collect();
    Ok(ReportPlan {
        items,
        pre_aggregation: statements,
    })
}
