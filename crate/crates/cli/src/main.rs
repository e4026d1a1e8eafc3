//! `shallowgen` command-line front end.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 no derivation,
//! 3 I/O error, 4 no data for a statement without fallback.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shallowgen::airquality::{load_data_dir, parse_request, AirQualityError};
use shallowgen::engine::{
    derive_all_with_trace, format_trace, format_trace_json, run_with_trace, Options, TraceEvent,
};
use shallowgen::ir::{serialize_pretty, validate, Symbol, Value};
use shallowgen::pack::{ir_files, load_ir, Pack, PackError, ReportError};
use shallowgen::textorg::TextOrgError;

const EXIT_INVALID: u8 = 1;
const EXIT_DERIVATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NO_DATA: u8 = 4;

#[derive(Parser)]
#[command(
    name = "shallowgen",
    version,
    propagate_version = true,
    about = "Template-based report generator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize one IR file as a sentence.
    Realize(RealizeArgs),
    /// Generate a report from a request over a measurement data directory.
    Report(ReportArgs),
    /// Lint a grammar pack.
    Validate(ValidateArgs),
    /// Count distinct realizations over a corpus of IR files.
    Enumerate(EnumerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Json,
}

#[derive(Args)]
struct RealizeArgs {
    #[arg(long)]
    pack: PathBuf,
    #[arg(long)]
    ir: PathBuf,
    /// Language tag such as FR, EN or DE.
    #[arg(long)]
    lang: String,
    /// Print the search trace to standard error.
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "text", require_equals = true)]
    trace: Option<TraceFormat>,
    /// Print up to N derivations, one per line.
    #[arg(long, value_name = "N")]
    all: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    pack: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    request: PathBuf,
    /// Print the planned statement IRs instead of text.
    #[arg(long)]
    plan: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    pack: PathBuf,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    pack: PathBuf,
    #[arg(long)]
    lang: String,
    /// Start category; defaults to the pack's.
    #[arg(long)]
    cat: Option<String>,
    /// Directory of IR files; defaults to the pack's corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

fn pack_failure(e: PackError) -> Failure {
    let code = if e.is_io() { EXIT_IO } else { EXIT_INVALID };
    Failure::new(code, e)
}

fn data_failure(e: AirQualityError) -> Failure {
    let code = match e {
        AirQualityError::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID,
    };
    Failure::new(code, e)
}

fn report_failure(e: ReportError) -> Failure {
    match e {
        ReportError::Data(e) => data_failure(e),
        ReportError::Pack(e) => pack_failure(e),
        ReportError::Derive { .. } => Failure::new(EXIT_DERIVATION, e),
        ReportError::Organize(TextOrgError::NoData { .. }) => Failure::new(EXIT_NO_DATA, e),
        ReportError::Organize(_) => Failure::new(EXIT_INVALID, e),
    }
}

fn load_pack(dir: &Path) -> Result<Pack, Failure> {
    Pack::load(dir).map_err(pack_failure)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn emit_trace(format: Option<TraceFormat>, events: &[TraceEvent]) {
    match format {
        Some(TraceFormat::Text) => eprint!("{}", format_trace(events)),
        Some(TraceFormat::Json) => eprint!("{}", format_trace_json(events)),
        None => {}
    }
}

fn realize(args: RealizeArgs) -> Result<String, Failure> {
    let pack = load_pack(&args.pack)?;
    let ir = load_ir(&args.ir).map_err(pack_failure)?;
    let report = validate(&ir, &pack.schema);
    if !report.is_clean() {
        return Err(Failure::new(
            EXIT_INVALID,
            format!("{}: invalid IR\n{}", args.ir.display(), report).trim_end(),
        ));
    }
    let lang = Symbol::new(&args.lang);
    let grammar = pack.grammar(&lang).map_err(pack_failure)?;
    let start = &pack.manifest.start;
    let input = Value::Struct(ir);
    let opts = Options::for_language(lang.as_str());
    let derivation = |e| Failure::new(EXIT_DERIVATION, e);
    match args.all {
        None => {
            let (res, events) = run_with_trace(grammar, start, &input, &opts);
            emit_trace(args.trace, &events);
            Ok(res.map_err(derivation)?.output() + "\n")
        }
        Some(n) => {
            let strict = Options {
                strict: true,
                ..opts
            };
            let (res, events) = derive_all_with_trace(grammar, start, &input, &strict, n);
            emit_trace(args.trace, &events);
            Ok(res
                .map_err(derivation)?
                .iter()
                .map(|d| d.output() + "\n")
                .collect())
        }
    }
}

fn report(args: ReportArgs) -> Result<String, Failure> {
    let pack = load_pack(&args.pack)?;
    let request = parse_request(&read_text(&args.request)?).map_err(data_failure)?;
    let data = load_data_dir(&args.data).map_err(data_failure)?;
    let (plan, text) = pack.report(&data, &request).map_err(report_failure)?;
    if args.plan {
        Ok(plan
            .pre_aggregation
            .iter()
            .map(|fs| serialize_pretty(fs) + "\n")
            .collect::<Vec<_>>()
            .join("\n"))
    } else {
        Ok(text + "\n")
    }
}

fn validate_pack(args: ValidateArgs) -> Result<String, Failure> {
    let pack = load_pack(&args.pack)?;
    let report = pack.validate();
    if report.is_clean() {
        Ok(String::new())
    } else {
        Err(Failure::new(EXIT_INVALID, report.to_string().trim_end()))
    }
}

fn enumerate(args: EnumerateArgs) -> Result<String, Failure> {
    let pack = load_pack(&args.pack)?;
    let lang = Symbol::new(&args.lang);
    pack.grammar(&lang).map_err(pack_failure)?;
    let start = args
        .cat
        .as_deref()
        .map(Symbol::new)
        .unwrap_or(pack.manifest.start.clone());
    let corpus = args
        .corpus
        .or(pack.manifest.corpus.clone())
        .ok_or_else(|| {
            Failure::new(
                EXIT_INVALID,
                "no corpus directory given and the pack names none",
            )
        })?;
    let files = ir_files(&corpus).map_err(pack_failure)?;
    let results: Vec<(PathBuf, Result<Vec<String>, Failure>)> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|f| {
                let (pack, lang, start) = (&pack, &lang, &start);
                s.spawn(move || (f.clone(), enumerate_file(pack, lang, start, f)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("enumeration thread"))
            .collect()
    });
    let mut out = String::new();
    let mut seen = BTreeSet::new();
    let mut first_error: Option<u8> = None;
    let mut failed = 0;
    for (file, res) in results {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match res {
            Ok(outputs) => {
                for o in outputs {
                    out.push_str(&format!("{name}\t{o}\n"));
                    seen.insert((name.clone(), o));
                }
            }
            Err(f) => {
                eprintln!("{}: {}", file.display(), f.message);
                first_error.get_or_insert(f.code);
                failed += 1;
            }
        }
    }
    out.push_str(&format!("{}\n", seen.len()));
    match first_error {
        Some(code) => {
            print!("{out}");
            Err(Failure::new(
                code,
                format!("{failed} of {} files failed", files.len()),
            ))
        }
        None => Ok(out),
    }
}

const ENUMERATION_LIMIT: usize = 1000;

fn enumerate_file(
    pack: &Pack,
    lang: &Symbol,
    start: &Symbol,
    file: &Path,
) -> Result<Vec<String>, Failure> {
    let ir = load_ir(file).map_err(pack_failure)?;
    let report = validate(&ir, &pack.schema);
    if !report.is_clean() {
        return Err(Failure::new(EXIT_INVALID, report.to_string().trim_end()));
    }
    let grammar = pack.grammar(lang).map_err(pack_failure)?;
    let opts = Options {
        strict: true,
        ..Options::for_language(lang.as_str())
    };
    let all = shallowgen::engine::derive_all(
        grammar,
        start,
        &Value::Struct(ir),
        &opts,
        ENUMERATION_LIMIT,
    )
    .map_err(|e| Failure::new(EXIT_DERIVATION, e))?;
    let mut seen = BTreeSet::new();
    Ok(all
        .into_iter()
        .map(|d| d.output())
        .filter(|o| seen.insert(o.clone()))
        .collect())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Realize(a) => realize(a),
        Command::Report(a) => report(a),
        Command::Validate(a) => validate_pack(a),
        Command::Enumerate(a) => enumerate(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("shallowgen: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
