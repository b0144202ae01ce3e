use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use prism_core::dictionary::{build_dictionary, save_dictionary, BuildConfig, DictionaryMode};
use prism_core::engine::MockLexicon;
use prism_core::evaluation::{
    aupqc, default_grid, generate_synthetic_corpus, qs_at, sweep, CurveReport, EvalContext, MechanismKind,
    OracleEvaluator, TradeoffCurve,
};
use prism_core::mechanisms::{decode, encode, MechanismParams, Method, SubstitutionHistory};
use prism_core::text::{tokenize, Vocabulary};

use crate::config::{ServiceConfig, CONFIG_ENV, SEED_ENV};
use crate::session::{EncodeRequest, Service, SessionExport};
use crate::ServiceError;

#[derive(Debug, Parser)]
#[command(
    name = "prism",
    version,
    about = "Translate text without showing the engine its sensitive words"
)]
pub struct Cli {
    /// Service config file (TOML).
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step. Overrides the config file.
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Induce a word translation dictionary by probing an engine.
    BuildDict(BuildDictArgs),
    /// Replace words of the input and print the public text.
    Encode(EncodeArgs),
    /// Send the input to an engine and print its translation.
    Translate(TranslateArgs),
    /// Undo recorded substitutions in a translation.
    Decode(DecodeArgs),
    /// Encode, translate and decode in one go, exporting the session.
    Run(RunArgs),
    /// Score a mechanism over a ratio grid on a synthetic QA corpus.
    EvalSweep(SweepArgs),
    /// Area under a `param,pps,qs` curve.
    Aupqc(AupqcArgs),
    /// Start the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    /// Read the text from this file. Standard input when neither this nor
    /// `--text` is given.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub ratio: f64,
    /// Probability of the guided branch, mixed method only.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Plain,
    PosKeyed,
}

#[derive(Debug, Args)]
pub struct BuildDictArgs {
    #[arg(long)]
    pub engine: String,
    /// One sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// One word per line. Defaults to every word of the corpus.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = BuildConfig::default().samples_per_word)]
    pub samples: usize,
    #[arg(long, default_value_t = BuildConfig::default().top_k)]
    pub top_k: usize,
    #[arg(long, default_value_t = BuildConfig::default().min_support)]
    pub min_support: usize,
    #[arg(long, default_value_t = BuildConfig::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = BuildConfig::default().max_in_flight)]
    pub max_in_flight: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub input: Input,
    /// Where to keep the substitution history needed by `decode`.
    #[arg(long)]
    pub history_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[arg(long)]
    pub engine: String,
    #[command(flatten)]
    pub input: Input,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// History written by `encode`, or a session export.
    #[arg(long)]
    pub history: PathBuf,
    /// The translated public text.
    #[command(flatten)]
    pub input: Input,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub engine: String,
    #[command(flatten)]
    pub input: Input,
    /// Print the raw translation instead of decoding it.
    #[arg(long)]
    pub no_decode: bool,
    /// Do not write the session to the session directory.
    #[arg(long)]
    pub no_export: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// identity, prism-r, prism-star, no-decode or mixed-<beta>.
    #[arg(long, value_parser = parse_mechanism)]
    pub mechanism: MechanismKind,
    #[arg(long, default_value = "mock-en-fr")]
    pub engine: String,
    /// Number of synthetic documents.
    #[arg(long, default_value_t = 100)]
    pub docs: usize,
    /// Comma-separated ratios. Defaults to 0.1 through 0.9.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Lexicon that maps question words into the target language.
    /// Defaults to the bundled one.
    #[arg(long)]
    pub probe_lexicon: Option<PathBuf>,
    /// Curve CSV destination. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub qs_at: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct AupqcArgs {
    pub curve: PathBuf,
    /// Also print QS at these privacy levels.
    #[arg(long, value_delimiter = ',')]
    pub qs_at: Vec<f64>,
    /// Print the full JSON report instead.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Overrides the configured address.
    #[arg(long)]
    pub bind: Option<SocketAddr>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_mechanism(s: &str) -> Result<MechanismKind, String> {
    s.parse()
}

fn read_file(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::io(format!("reading {}", path.display()), e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ServiceError> {
    std::fs::write(path, contents).map_err(|e| ServiceError::io(format!("writing {}", path.display()), e))
}

fn strip_newline(mut s: String) -> String {
    if s.ends_with('\n') {
        s.pop();
        if s.ends_with('\r') {
            s.pop();
        }
    }
    s
}

impl Input {
    fn read(&self) -> Result<String, ServiceError> {
        let text = match (&self.text, &self.input) {
            (Some(text), _) => text.clone(),
            (None, Some(path)) => strip_newline(read_file(path)?),
            (None, None) => {
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| ServiceError::io("reading standard input", e))?;
                strip_newline(buf)
            }
        };
        if text.trim().is_empty() {
            return Err(ServiceError::Invalid("input text is empty".into()));
        }
        Ok(text)
    }
}

impl MethodArgs {
    fn request(&self, seed: u64) -> EncodeRequest {
        EncodeRequest {
            method: self.method,
            ratio: self.ratio,
            seed: Some(seed),
            beta: self.beta,
        }
    }

    fn params(&self, seed: u64) -> Result<MechanismParams, ServiceError> {
        Ok(match (self.method, self.beta) {
            (Method::Mixed, Some(beta)) => MechanismParams::mixed(self.ratio, beta, seed)?,
            (Method::Mixed, None) => return Err(ServiceError::Invalid("--method mixed needs --beta".into())),
            (method, None) => MechanismParams::new(method, self.ratio, seed)?,
            (_, Some(_)) => return Err(ServiceError::Invalid("--beta only applies to --method mixed".into())),
        })
    }
}

/// A bare history, or the `history` field of a session export.
fn load_history(path: &Path) -> Result<SubstitutionHistory, ServiceError> {
    let source = read_file(path)?;
    if let Ok(export) = serde_json::from_str::<SessionExport>(&source) {
        return Ok(export.history);
    }
    serde_json::from_str(&source)
        .map_err(|e| ServiceError::Invalid(format!("{} is not a substitution history: {e}", path.display())))
}

fn build_dict(svc: &Service, args: &BuildDictArgs, seed: u64) -> Result<(), ServiceError> {
    let corpus: Vec<String> = read_file(&args.corpus)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    let words: BTreeSet<String> = match &args.vocab {
        Some(path) => read_file(path)?
            .lines()
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect(),
        None => corpus
            .iter()
            .flat_map(|s| tokenize(s).word_keys().collect::<Vec<_>>())
            .collect(),
    };
    let vocab = Vocabulary::new(words.iter().map(String::as_str))?;
    let config = BuildConfig {
        mode: match args.mode {
            ModeArg::Plain => DictionaryMode::Plain,
            ModeArg::PosKeyed => DictionaryMode::PosKeyed,
        },
        samples_per_word: args.samples,
        seed,
        alpha: args.alpha,
        top_k: args.top_k,
        min_support: args.min_support,
        max_in_flight: args.max_in_flight,
    };
    let engine = svc.registry().engine(&args.engine)?;
    let (dict, _, report) = build_dictionary(&corpus, &engine, &vocab, svc.tagger(), &config)?;
    save_dictionary(&dict, &args.out)?;
    eprintln!(
        "{} keys, {} entries, {} dropped, {} engine calls",
        dict.len(),
        dict.entry_count(),
        report.dropped.len(),
        report.engine_calls
    );
    Ok(())
}

fn encode_cmd(svc: &Service, args: &EncodeArgs, seed: u64, out: &mut dyn Write) -> Result<(), ServiceError> {
    let params = args.method.params(seed)?;
    let text = args.input.read()?;
    let result = encode(&text, svc.dictionaries(), svc.tagger(), &params)?;
    if let Some(path) = &args.history_out {
        write_file(
            path,
            &(serde_json::to_string_pretty(&result.history).expect("history serializes") + "\n"),
        )?;
    }
    writeln!(out, "{}", result.x_pub).map_err(|e| ServiceError::io("writing output", e))?;
    match result.epsilon {
        Some(eps) => eprintln!("{} substitutions, epsilon {eps}", result.history.len()),
        None => eprintln!("{} substitutions, no formal bound", result.history.len()),
    }
    if let Some(warning) = result.warning {
        eprintln!("warning: {warning:?}");
    }
    Ok(())
}

fn decode_cmd(svc: &Service, args: &DecodeArgs, out: &mut dyn Write) -> Result<(), ServiceError> {
    let history = load_history(&args.history)?;
    let y_pub = args.input.read()?;
    let dicts = svc.dictionaries();
    let dict = if history.records.iter().any(|r| r.tag.is_some()) {
        &dicts.pos_keyed
    } else {
        &dicts.plain
    };
    let result = decode(&y_pub, &history, dict);
    writeln!(out, "{}", result.y_pri).map_err(|e| ServiceError::io("writing output", e))?;
    for miss in &result.misses {
        eprintln!(
            "miss: {} -> {} at {} ({:?})",
            miss.record.original, miss.record.substitute, miss.record.position, miss.reason
        );
    }
    Ok(())
}

fn run_cmd(svc: &Service, args: &RunArgs, seed: u64, out: &mut dyn Write) -> Result<(), ServiceError> {
    let request = args.method.request(seed);
    args.method.params(seed)?;
    let text = args.input.read()?;
    let id = svc.create_session(&text)?;
    let encoded = svc.encode(&id, &request)?;
    let sent = svc.send(&id, &args.engine)?;
    let printed = if args.no_decode {
        sent.y_pub
    } else {
        let decoded = svc.decode(&id)?;
        for miss in &decoded.misses {
            eprintln!(
                "miss: {} -> {} ({:?})",
                miss.record.original, miss.record.substitute, miss.reason
            );
        }
        decoded.y_pri
    };
    writeln!(out, "{printed}").map_err(|e| ServiceError::io("writing output", e))?;
    eprintln!("public text: {}", encoded.x_pub);
    if !args.no_export {
        eprintln!("session written to {}", svc.export(&id)?.display());
    }
    Ok(())
}

fn sweep_cmd(svc: &Service, args: &SweepArgs, seed: u64, out: &mut dyn Write) -> Result<(), ServiceError> {
    let probe_lexicon = match &args.probe_lexicon {
        Some(path) => MockLexicon::load(path)?,
        None => MockLexicon::fixture(),
    };
    let corpus = generate_synthetic_corpus(args.docs, seed)?;
    let engine = svc.registry().engine(&args.engine)?;
    let ctx = EvalContext {
        dicts: svc.dictionaries(),
        tagger: svc.tagger(),
        engine: &engine,
        engine_id: &args.engine,
        probe_lexicon: &probe_lexicon,
        evaluator: &OracleEvaluator,
        seed,
    };
    let grid = if args.grid.is_empty() {
        default_grid()
    } else {
        args.grid.clone()
    };
    let curve = sweep(args.mechanism, &grid, &corpus, &ctx)?;
    match &args.out {
        Some(path) => write_file(path, &curve.to_csv())?,
        None => write!(out, "{}", curve.to_csv()).map_err(|e| ServiceError::io("writing output", e))?,
    }
    let report = CurveReport::new(&curve, &args.qs_at)?;
    if let Some(path) = &args.report {
        write_file(path, &(report.to_json() + "\n"))?;
    }
    eprintln!("{} aupqc {}", report.mechanism, report.aupqc);
    Ok(())
}

fn aupqc_cmd(args: &AupqcArgs, out: &mut dyn Write) -> Result<(), ServiceError> {
    let source = read_file(&args.curve)?;
    let name = args
        .curve
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let curve = TradeoffCurve::read_csv(&source, name, "unknown")?;
    let write_err = |e| ServiceError::io("writing output", e);
    if args.json {
        let report = CurveReport::new(&curve, &args.qs_at)?;
        return writeln!(out, "{}", report.to_json()).map_err(write_err);
    }
    writeln!(out, "{}", aupqc(&curve)?).map_err(write_err)?;
    for &p in &args.qs_at {
        let at = qs_at(&curve, p)?;
        let note = if at.extrapolated { " (extrapolated)" } else { "" };
        writeln!(out, "qs@{p} {}{note}", at.value).map_err(write_err)?;
    }
    Ok(())
}

fn serve_cmd(config: &ServiceConfig, svc: Service, args: &ServeArgs) -> Result<(), ServiceError> {
    let addr = args.bind.unwrap_or(config.bind);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ServiceError::io("starting runtime", e))?;
    runtime.block_on(crate::http::serve(Arc::new(svc), addr))
}

/// Execute a parsed command line, writing results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), ServiceError> {
    let config = ServiceConfig::discover(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(config.seed);
    if let Command::Aupqc(args) = &cli.command {
        return aupqc_cmd(args, out);
    }
    let svc = Service::from_config(&config)?;
    match &cli.command {
        Command::BuildDict(args) => build_dict(&svc, args, seed),
        Command::Encode(args) => encode_cmd(&svc, args, seed, out),
        Command::Translate(args) => {
            let text = args.input.read()?;
            let y_pub = svc.registry().translate(&args.engine, &text)?;
            writeln!(out, "{y_pub}").map_err(|e| ServiceError::io("writing output", e))
        }
        Command::Decode(args) => decode_cmd(&svc, args, out),
        Command::Run(args) => run_cmd(&svc, args, seed, out),
        Command::EvalSweep(args) => sweep_cmd(&svc, args, seed, out),
        Command::Serve(args) => serve_cmd(&config, svc, args),
        Command::Aupqc(_) => unreachable!("handled above"),
    }
}

/// Parse `args` and run. Usage errors exit 1, engine failures 2.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
