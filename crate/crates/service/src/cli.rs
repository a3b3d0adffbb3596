//! The `versetune` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | internal error |
//! | 2 | usage error, unknown key, missing input file |
//! | 3 | empty lyrics, malformed or unscorable score, unreadable corpus |
//! | 4 | lyrics provider failure, listen address unavailable |
//! | 5 | lyric mismatch between a score and its reference |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand};
use versetune::config::Config;
use versetune::corpus::{compare, load_corpus};
use versetune::image::LengthPreference;
use versetune::musicxml::parse_musicxml;
use versetune::{evaluate_score, Error, EvaluationReport, KeyChoice, OutputKind, KEY_CATALOG};

use crate::generate::{file_stem, generate, GenerateInput, Source};
use crate::store::Store;

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_PROVIDER: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

#[derive(Parser)]
#[command(name = "versetune", version, about = "Compose melodies for lyrics and score them")]
struct Cli {
    /// TOML file overriding the pitch sampler and tempo.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Human-friendly output instead of key=value lines.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose a song and write .musicxml, .mid and a report.
    Generate(GenerateArgs),
    /// Print the metrics of a MusicXML file.
    Evaluate {
        file: PathBuf,
        /// Score whose lyric rhythm the file is matched against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Regenerate every original in a directory and compare the statistics.
    Compare {
        #[arg(long)]
        originals: PathBuf,
        /// Variants per original; the first keeps the original's key.
        #[arg(long, default_value_t = 3)]
        regenerate: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit one JSON document instead of CSV tables.
        #[arg(long)]
        json: bool,
    },
    /// Print the keys generation can use.
    ListKeys,
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value = "versetune.db")]
        store: PathBuf,
        /// Answer image requests with the bundled stub lyrics.
        #[arg(long)]
        stub: bool,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["lyrics", "image"])))]
struct GenerateArgs {
    #[arg(long)]
    lyrics: Option<PathBuf>,
    /// PNG or JPEG turned into lyrics by the configured provider.
    #[arg(long)]
    image: Option<PathBuf>,
    /// A key name such as "D major", or "random".
    #[arg(long, default_value = "random")]
    key: String,
    /// Drawn from the operating system when absent; always reported.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "song")]
    output: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// General MIDI program, 0-127.
    #[arg(long, default_value_t = 0)]
    instrument: u8,
    /// Lyric length requested for images: short, medium or long.
    #[arg(long, default_value = "medium")]
    length: String,
    #[arg(long)]
    title: Option<String>,
    /// Use the bundled stub lyrics for --image.
    #[arg(long)]
    stub: bool,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnknownKey(_) | Error::InvalidRequest(_) | Error::UnsupportedMeter(_) | Error::Config(_) => EXIT_USAGE,
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
            Error::EmptyLyrics
            | Error::MalformedScore(_)
            | Error::NoPitches
            | Error::ZeroVariance
            | Error::TooShort(_)
            | Error::Undefined(_) => EXIT_INPUT,
            Error::ProviderUnavailable(_) | Error::AuthFailure(_) | Error::EmptyGeneration => EXIT_PROVIDER,
            Error::LyricMismatch(_) => EXIT_MISMATCH,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read_input(path)?).map_err(|_| fail(EXIT_INPUT, format!("{} is not UTF-8", path.display())))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    match execute(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(f) => {
            eprintln!("versetune: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: Cli) -> Result<String, Failure> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Generate(args) => run_generate(args, &config, cli.pretty),
        Command::Evaluate { file, reference } => run_evaluate(&file, reference.as_deref(), cli.pretty),
        Command::Compare { originals, regenerate, seed, json } => run_compare(&originals, regenerate, seed, json, &config),
        Command::ListKeys => Ok(list_keys(cli.pretty)),
        Command::Serve { addr, store, stub } => run_serve(&addr, &store, stub, config).map(|()| String::new()),
    }
}

fn report_lines(report: Option<&EvaluationReport>) -> String {
    report.map_or_else(|| "report=none\n".to_string(), EvaluationReport::to_key_values)
}

fn pretty_report(report: &EvaluationReport) -> String {
    let mut out = String::new();
    for line in report.to_key_values().lines() {
        if let Some((k, v)) = line.split_once('=') {
            let _ = writeln!(out, "{:<24} {v}", k.replace('_', " "));
        }
    }
    out
}

fn run_generate(args: GenerateArgs, config: &Config, pretty: bool) -> Result<String, Failure> {
    let key: KeyChoice = args.key.parse()?;
    let output: OutputKind = args.output.parse()?;
    let length: LengthPreference = args.length.parse()?;
    if args.instrument > 127 {
        return Err(fail(EXIT_USAGE, "instrument must be 0-127"));
    }
    let source = match (&args.lyrics, &args.image) {
        (Some(path), _) => Source::Lyrics(read_text(path)?),
        (None, Some(path)) => Source::Image { bytes: read_input(path)?, length, style_hint: None },
        (None, None) => return Err(fail(EXIT_USAGE, "give --lyrics or --image")),
    };
    let provider = match source {
        Source::Image { .. } => crate::lyrics_provider(args.stub),
        Source::Lyrics(_) => None,
    };
    let input = GenerateInput { source, key, output, instrument: args.instrument, seed: args.seed, title: args.title };
    let record = generate(input, provider.as_deref(), config)?;

    std::fs::create_dir_all(&args.out).map_err(|e| fail(EXIT_USAGE, format!("cannot create {}: {e}", args.out.display())))?;
    let stem = args.out.join(file_stem(&record));
    let paths = [stem.with_extension("musicxml"), stem.with_extension("mid"), stem.with_extension("report.txt")];
    let mut report = format!("seed={}\nkey={}\ntime_signature={}\n", record.seed, record.key, record.time_signature);
    report.push_str(&report_lines(record.report.as_ref()));
    for (path, bytes) in paths.iter().zip([record.musicxml.as_slice(), record.midi.as_slice(), report.as_bytes()]) {
        std::fs::write(path, bytes).map_err(|e| fail(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display())))?;
    }
    let confidence = record.report.as_ref().map_or_else(|| "none".into(), |r| format!("{:.6}", r.key_confidence));
    Ok(if pretty {
        format!(
            "Wrote {}\n      {}\n      {}\nKey {} in {}, seed {}, key confidence {confidence}\n",
            paths[0].display(),
            paths[1].display(),
            paths[2].display(),
            record.key,
            record.time_signature,
            record.seed
        )
    } else {
        format!(
            "musicxml={} midi={} report={} key={} time_signature={} seed={} key_confidence={confidence}\n",
            paths[0].display(),
            paths[1].display(),
            paths[2].display(),
            record.key.slug(),
            record.time_signature,
            record.seed
        )
    })
}

fn run_evaluate(file: &Path, reference: Option<&Path>, pretty: bool) -> Result<String, Failure> {
    let score = parse_musicxml(&read_text(file)?)?;
    let reference = match reference {
        Some(path) => Some(parse_musicxml(&read_text(path)?)?),
        None => None,
    };
    let report = evaluate_score(&score, reference.as_ref())?;
    Ok(if pretty { pretty_report(&report) } else { report.to_key_values() })
}

fn run_compare(dir: &Path, k: usize, seed: u64, json: bool, config: &Config) -> Result<String, Failure> {
    if k == 0 {
        return Err(fail(EXIT_USAGE, "--regenerate must be at least 1"));
    }
    let corpus = load_corpus(dir).map_err(|e| fail(EXIT_INPUT, format!("cannot read corpus {}: {e}", dir.display())))?;
    if corpus.is_empty() {
        return Err(fail(EXIT_INPUT, format!("no MusicXML files in {}", dir.display())));
    }
    let originals: Vec<_> = corpus.into_iter().map(|(_, score)| score).collect();
    let comparison = compare(&originals, k, seed, &config.sampler);
    Ok(if json {
        serde_json::to_string_pretty(&comparison).expect("comparison serializes") + "\n"
    } else {
        format!("{}\n{}", comparison.variant_table(), comparison.plot_table())
    })
}

fn list_keys(pretty: bool) -> String {
    let mut out = String::new();
    for key in KEY_CATALOG {
        if pretty {
            let _ = writeln!(out, "{:<10} {:+} fifths", key.to_string(), key.fifths());
        } else {
            let _ = writeln!(out, "{key}");
        }
    }
    out
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {},
        () = terminate => {},
    }
    log::info!("shutting down");
}

fn run_serve(addr: &str, store_path: &Path, stub: bool, config: Config) -> Result<(), Failure> {
    let store = Store::open(store_path).map_err(|e| fail(EXIT_INTERNAL, format!("cannot open store {}: {e}", store_path.display())))?;
    let state = crate::AppState { store: Arc::new(store), provider: crate::lyrics_provider(stub), config };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| fail(EXIT_INTERNAL, e.to_string()))?;
    runtime.block_on(async {
        let listener =
            tokio::net::TcpListener::bind(addr).await.map_err(|e| fail(EXIT_PROVIDER, format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| fail(EXIT_INTERNAL, e.to_string()))?;
        eprintln!("versetune listening on http://{local}");
        crate::serve(listener, state, shutdown_signal()).await.map_err(|e| fail(EXIT_INTERNAL, e.to_string()))
    })
}
