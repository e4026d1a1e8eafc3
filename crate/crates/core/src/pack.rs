//! Grammar packs: the on-disk bundle of IR schema, per-language grammars
//! and text-organization resources, described by `pack.manifest`.
//!
//! ```text
//! name = temsis
//! schema = schema.bnf
//! start = DECL
//! common = grammar/common.tgl
//! grammar FR = grammar/fr.tgl
//! skeletons = textorg/skeletons.sexp
//! schemata = textorg/schemata.sexp
//! aggregation = textorg/aggregation.sexp
//! fixtures = fixtures
//! corpus = corpus
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::airquality::{AirQualityError, ReportRequest, TemsisData};
use crate::diagnostics::ValidationReport;
use crate::engine::{derive, derive_all, DeriveError, Options};
use crate::ir::schema::ValueSpec;
use crate::ir::{
    parse_ir, parse_schema, validate, FeaturePath, FeatureStructure, IrError, IrSchema,
    SchemaError, Symbol, Value,
};
use crate::textorg::{
    organize_report, parse_aggregation, parse_schemata, parse_skeletons, AggregationRules,
    Condition, Organizer, PlanItem, ReportPlan, ResourceError, RestructuringSchema, SkeletonItem,
    SkeletonSet, TextOrgError,
};
use crate::tgl::{language_tag, lint_grammar, Grammar, Registry, TglError};

pub const MANIFEST: &str = "pack.manifest";

#[derive(Debug, Error)]
pub enum PackError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Schema {
        path: String,
        #[source]
        source: SchemaError,
    },
    #[error("{path}: {source}")]
    Grammar {
        path: String,
        #[source]
        source: TglError,
    },
    #[error("{path}: {source}")]
    Resource {
        path: String,
        #[source]
        source: ResourceError,
    },
    #[error("{path}: {source}")]
    Ir {
        path: String,
        #[source]
        source: IrError,
    },
    #[error("pack has no grammar for language {0}")]
    UnknownLanguage(Symbol),
}

impl PackError {
    /// True for missing or unreadable files.
    pub fn is_io(&self) -> bool {
        matches!(self, PackError::Io { .. })
    }
}

pub(crate) fn read(path: &Path) -> Result<String, PackError> {
    std::fs::read_to_string(path).map_err(|source| PackError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackManifest {
    pub dir: PathBuf,
    pub name: String,
    pub schema: PathBuf,
    pub start: Symbol,
    /// Grammar files added to every language.
    pub common: Vec<PathBuf>,
    pub grammars: BTreeMap<Symbol, PathBuf>,
    pub skeletons: PathBuf,
    pub schemata: PathBuf,
    pub aggregation: PathBuf,
    pub fixtures: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
}

pub fn parse_manifest(dir: &Path, text: &str) -> Result<PackManifest, PackError> {
    let mpath = dir.join(MANIFEST).display().to_string();
    let err = |line: usize, message: String| PackError::Manifest {
        path: mpath.clone(),
        line,
        message,
    };
    let mut fields: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut common = Vec::new();
    let mut grammars = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key = value, found {content:?}")))?;
        let (k, v) = (k.trim(), v.trim().to_string());
        let words: Vec<&str> = k.split_whitespace().collect();
        match words.as_slice() {
            ["grammar", lang] => {
                if grammars.insert(Symbol::new(lang), dir.join(&v)).is_some() {
                    return Err(err(line, format!("second grammar for {lang}")));
                }
            }
            ["common"] => common.push(dir.join(&v)),
            [key @ ("name" | "schema" | "start" | "skeletons" | "schemata" | "aggregation"
            | "fixtures" | "corpus")] => {
                if fields.insert(key.to_string(), (v, line)).is_some() {
                    return Err(err(line, format!("repeated key {key}")));
                }
            }
            _ => return Err(err(line, format!("unknown key {k}"))),
        }
    }
    let mut take = |key: &str| fields.remove(key).map(|(v, _)| v);
    let mut need = |key: &str| take(key).ok_or_else(|| err(0, format!("missing key {key}")));
    if grammars.is_empty() {
        return Err(err(0, "no grammar entries".into()));
    }
    let start = need("start")?;
    if !Symbol::is_valid(&start) {
        return Err(err(0, format!("bad start category {start}")));
    }
    Ok(PackManifest {
        dir: dir.to_path_buf(),
        name: need("name")?,
        schema: dir.join(need("schema")?),
        start: Symbol::new(&start),
        common,
        grammars,
        skeletons: dir.join(need("skeletons")?),
        schemata: dir.join(need("schemata")?),
        aggregation: dir.join(need("aggregation")?),
        fixtures: take("fixtures").map(|p| dir.join(p)),
        corpus: take("corpus").map(|p| dir.join(p)),
    })
}

pub fn read_manifest(dir: &Path) -> Result<PackManifest, PackError> {
    parse_manifest(dir, &read(&dir.join(MANIFEST))?)
}

/// IR files (`*.ir`) in a directory, sorted by name.
pub fn ir_files(dir: &Path) -> Result<Vec<PathBuf>, PackError> {
    let entries = std::fs::read_dir(dir).map_err(|source| PackError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ir"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn load_ir(path: &Path) -> Result<FeatureStructure, PackError> {
    parse_ir(&read(path)?).map_err(|source| PackError::Ir {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Data(#[from] AirQualityError),
    #[error(transparent)]
    Organize(#[from] TextOrgError),
    #[error(transparent)]
    Pack(#[from] PackError),
    #[error("statement {index}: {source}")]
    Derive {
        index: usize,
        #[source]
        source: DeriveError,
    },
}

/// A loaded pack.
#[derive(Debug, Clone)]
pub struct Pack {
    pub manifest: PackManifest,
    pub schema: IrSchema,
    pub grammars: BTreeMap<Symbol, Grammar>,
    pub skeletons: SkeletonSet,
    pub schemata: Vec<RestructuringSchema>,
    pub aggregation: AggregationRules,
}

impl Pack {
    pub fn load(dir: &Path) -> Result<Pack, PackError> {
        let manifest = read_manifest(dir)?;
        let shown = |p: &Path| p.display().to_string();
        let schema =
            parse_schema(&read(&manifest.schema)?).map_err(|source| PackError::Schema {
                path: shown(&manifest.schema),
                source,
            })?;
        let registry = Arc::new(Registry::with_builtins());
        let mut common = Vec::new();
        for p in &manifest.common {
            common.push((p, read(p)?));
        }
        let mut grammars = BTreeMap::new();
        for (lang, path) in &manifest.grammars {
            let mut g = Grammar::new(registry.clone());
            for (p, text) in common
                .iter()
                .map(|(p, t)| (*p, t.clone()))
                .chain([(path, read(path)?)])
            {
                g.add_source(&text).map_err(|source| PackError::Grammar {
                    path: shown(p),
                    source,
                })?;
            }
            grammars.insert(lang.clone(), g);
        }
        let resource = |p: &Path, e: ResourceError| PackError::Resource {
            path: shown(p),
            source: e,
        };
        Ok(Pack {
            skeletons: parse_skeletons(&read(&manifest.skeletons)?)
                .map_err(|e| resource(&manifest.skeletons, e))?,
            schemata: parse_schemata(&read(&manifest.schemata)?)
                .map_err(|e| resource(&manifest.schemata, e))?,
            aggregation: parse_aggregation(&read(&manifest.aggregation)?)
                .map_err(|e| resource(&manifest.aggregation, e))?,
            manifest,
            schema,
            grammars,
        })
    }

    pub fn languages(&self) -> impl Iterator<Item = &Symbol> {
        self.grammars.keys()
    }

    pub fn grammar(&self, lang: &Symbol) -> Result<&Grammar, PackError> {
        self.grammars
            .get(lang)
            .ok_or_else(|| PackError::UnknownLanguage(lang.clone()))
    }

    pub fn organizer(&self) -> Organizer<'_> {
        Organizer {
            skeletons: &self.skeletons,
            schemata: &self.schemata,
            rules: &self.aggregation,
            schema: &self.schema,
        }
    }

    /// Language tag for an IR: the override if given, else its LANGUAGE.
    pub fn language_for(
        &self,
        ir: &FeatureStructure,
        over: Option<&Symbol>,
    ) -> Result<Symbol, PackError> {
        let lang = match over {
            Some(l) => l.clone(),
            None => ir
                .get("LANGUAGE")
                .and_then(language_tag)
                .ok_or_else(|| PackError::UnknownLanguage(Symbol::new("NONE")))?,
        };
        self.grammar(&lang)?;
        Ok(lang)
    }

    /// Lints every grammar and cross-checks the organizer resources and
    /// bundled IR files against the schema.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::new();
        for (lang, g) in &self.grammars {
            for mut f in lint_grammar(g, &self.schema, Some(&self.manifest.start)).findings {
                f.location = format!("grammar {lang}: {}", f.location);
                rep.findings.push(f);
            }
        }
        self.check_skeletons(&mut rep);
        self.check_resource_paths(&mut rep);
        for dir in [&self.manifest.fixtures, &self.manifest.corpus]
            .into_iter()
            .flatten()
        {
            match ir_files(dir) {
                Ok(files) => {
                    for file in files {
                        let loc = file.display().to_string();
                        match load_ir(&file) {
                            Ok(fs) => {
                                for mut f in validate(&fs, &self.schema).findings {
                                    f.location = format!(
                                        "{loc}: {}",
                                        if f.location.is_empty() {
                                            "<root>"
                                        } else {
                                            &f.location
                                        }
                                    );
                                    rep.findings.push(f);
                                }
                            }
                            Err(e) => rep.error(loc, e.to_string()),
                        }
                    }
                }
                Err(e) => rep.error(dir.display().to_string(), e.to_string()),
            }
        }
        rep
    }

    fn check_skeletons(&self, rep: &mut ValidationReport) {
        let coops = self.schema.enumerated_values("COOP");
        for sk in self.skeletons.iter() {
            for (i, item) in sk.items.iter().enumerate() {
                let loc = format!("skeleton {} item {}", sk.report_type, i + 1);
                if let SkeletonItem::Statement {
                    assertion,
                    fallback,
                    ..
                } = item
                {
                    for a in std::iter::once(assertion).chain(fallback) {
                        if !coops.contains(a) {
                            rep.error(
                                &loc,
                                format!("assertion {a} is not a COOP value of the schema"),
                            );
                        }
                    }
                }
            }
        }
    }

    fn check_resource_paths(&self, rep: &mut ValidationReport) {
        let root = [ValueSpec::NonTerminal(self.schema.root().clone())];
        let legal = |p: &FeaturePath| !self.schema.resolve_path(&root, p).is_empty();
        for p in &self.aggregation.memory {
            if !legal(p) {
                rep.error("aggregation memory", format!("path {p} is not legal IR"));
            }
        }
        for rule in &self.aggregation.rules {
            for c in &rule.when {
                if !legal(c.path()) {
                    rep.error(
                        format!("aggregation rule {}", rule.name),
                        format!("path {} is not legal IR", c.path()),
                    );
                }
            }
        }
        for s in &self.schemata {
            for c in &s.yields {
                if !legal(c.path()) {
                    rep.error(
                        format!("schema {}", s.name),
                        format!("yielded path {} is not legal IR", c.path()),
                    );
                }
                if let Condition::Eq(p, v) = c {
                    if !self
                        .schema
                        .resolve_path(&root, p)
                        .iter()
                        .any(|spec| spec_admits(spec, v))
                    {
                        rep.warning(
                            format!("schema {}", s.name),
                            format!("{p} can never equal {v}"),
                        );
                    }
                }
            }
        }
    }

    /// Realizes one statement with the given language's grammar.
    pub fn realize(&self, ir: &FeatureStructure, lang: &Symbol) -> Result<String, ReportError> {
        let g = self.grammar(lang)?;
        derive(
            g,
            &self.manifest.start,
            &Value::Struct(ir.clone()),
            &Options::for_language(lang.as_str()),
        )
        .map(|d| d.output())
        .map_err(|source| ReportError::Derive { index: 0, source })
    }

    /// Distinct surface strings of all derivations, in search order.
    pub fn realize_all(
        &self,
        ir: &FeatureStructure,
        lang: &Symbol,
        limit: usize,
    ) -> Result<Vec<String>, ReportError> {
        let g = self.grammar(lang)?;
        let all = derive_all(
            g,
            &self.manifest.start,
            &Value::Struct(ir.clone()),
            &Options::for_language(lang.as_str()),
            limit,
        )
        .map_err(|source| ReportError::Derive { index: 0, source })?;
        let mut seen = BTreeSet::new();
        Ok(all
            .into_iter()
            .map(|d| d.output())
            .filter(|s| seen.insert(s.clone()))
            .collect())
    }

    /// Statement sentences of a paragraph are joined by one space; a canned
    /// block forms its own paragraph. Paragraphs are separated by a blank
    /// line.
    pub fn render_plan(&self, plan: &ReportPlan, lang: &Symbol) -> Result<String, ReportError> {
        let mut paragraphs: Vec<String> = Vec::new();
        let mut current: Vec<String> = Vec::new();
        let mut index = 0;
        for item in &plan.items {
            match item {
                PlanItem::Statement(fs) => {
                    let text = self.realize(fs, lang).map_err(|e| match e {
                        ReportError::Derive { source, .. } => ReportError::Derive { index, source },
                        other => other,
                    })?;
                    current.push(text);
                    index += 1;
                }
                PlanItem::CannedBlock { text, .. } => {
                    if !current.is_empty() {
                        paragraphs.push(current.join(" "));
                        current.clear();
                    }
                    paragraphs.push(text.clone());
                }
            }
        }
        if !current.is_empty() {
            paragraphs.push(current.join(" "));
        }
        Ok(paragraphs.join("\n\n"))
    }

    /// Organizes and realizes a report for a request.
    pub fn report(
        &self,
        data: &TemsisData,
        req: &ReportRequest,
    ) -> Result<(ReportPlan, String), ReportError> {
        let ctx = data.report_context(req)?;
        let lang = Symbol::new(&req.language);
        self.grammar(&lang)?;
        let plan = organize_report(&ctx, data, self.organizer())?;
        let text = self.render_plan(&plan, &lang)?;
        Ok((plan, text))
    }
}

fn spec_admits(spec: &ValueSpec, v: &Value) -> bool {
    match (spec, v) {
        (ValueSpec::Enum(syms), Value::Symbol(s)) => syms.contains(s),
        (ValueSpec::Symbol, Value::Symbol(_)) => true,
        (ValueSpec::Enum(_) | ValueSpec::Symbol, _) => false,
        _ => true,
    }
}
