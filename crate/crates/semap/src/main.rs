use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semap::corpus::Granularity;
use semap::factors::Retention;
use semap::layout::EdgeLengthMode;
use semap::pipeline::{compare_runs, run_pipeline, PipelineConfig};
use semap::semgraph::DiscourseMode;
use semap::vsm::{MatrixMode, Measure};

#[derive(Parser)]
#[command(
    name = "semap",
    version,
    about = "Turn a document corpus into a positioned semantic word map"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a corpus manifest.
    Run(Box<RunArgs>),
    /// Diff the graph statistics of two run reports.
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus manifest: one `path<TAB>media<TAB>label` record per line.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Analysis unit: document, paragraph, sentence, or title.
    #[arg(long)]
    unit: Option<String>,
    /// Discourse mode: restricted (threshold 0.5) or elaborate (0.1).
    #[arg(long)]
    mode: Option<String>,
    /// Minimum word occurrence count considered for selection.
    #[arg(long = "min-freq")]
    min_freq: Option<u32>,
    /// Cap on the number of analysed words.
    #[arg(long = "max-words")]
    max_words: Option<usize>,
    /// Explicit similarity threshold, overriding the mode default.
    #[arg(long)]
    threshold: Option<f64>,
    /// Similarity measure: cosine or pearson.
    #[arg(long)]
    measure: Option<String>,
    /// Matrix mode: counts or binary.
    #[arg(long)]
    matrix: Option<String>,
    /// Spring length mode: unit or inverse-weight.
    #[arg(long = "edge-length")]
    edge_length: Option<String>,
    /// Layout initialization seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Stop-word file overriding the bundled USPTO list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Retain exactly k factors instead of the Kaiser criterion.
    #[arg(long = "factors-k")]
    factors_k: Option<usize>,
    /// Scale map vertices with the number of units containing the word.
    #[arg(long = "size-nodes")]
    size_nodes: bool,
    /// Worker threads (outputs are identical for any value).
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config_file(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}: line {}: expected key=value", path.display(), idx + 1))?;
        map.insert(key.trim().to_owned(), value.trim().to_owned());
    }
    Ok(map)
}

fn parse_with<T>(
    value: Option<String>,
    what: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Option<T>, String> {
    match value {
        None => Ok(None),
        Some(s) => parse(&s)
            .map(Some)
            .ok_or_else(|| format!("invalid {what}: '{s}'")),
    }
}

fn build_pipeline_config(args: RunArgs) -> Result<PipelineConfig, String> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => HashMap::new(),
    };
    let from_file = |key: &str| file.get(key).cloned();
    let manifest = args
        .manifest
        .or_else(|| from_file("manifest").map(PathBuf::from))
        .ok_or("missing --manifest (or manifest= in the config file)")?;
    let out_dir = args
        .out
        .or_else(|| from_file("out").map(PathBuf::from))
        .ok_or("missing --out (or out= in the config file)")?;

    let mut config = PipelineConfig::new(manifest, out_dir);
    if let Some(g) = parse_with(
        args.unit.or_else(|| from_file("unit")),
        "unit granularity",
        Granularity::parse,
    )? {
        config.granularity = g;
    }
    if let Some(m) = parse_with(
        args.mode.or_else(|| from_file("mode")),
        "discourse mode",
        DiscourseMode::parse,
    )? {
        config.mode = m;
    }
    if let Some(m) = parse_with(
        args.measure.or_else(|| from_file("measure")),
        "measure",
        Measure::parse,
    )? {
        config.measure = m;
    }
    if let Some(m) = parse_with(
        args.matrix.or_else(|| from_file("matrix")),
        "matrix mode",
        MatrixMode::parse,
    )? {
        config.matrix_mode = m;
    }
    if let Some(m) = parse_with(
        args.edge_length.or_else(|| from_file("edge-length")),
        "edge length mode",
        EdgeLengthMode::parse,
    )? {
        config.layout.edge_length_mode = m;
    }
    let numeric = |flag: Option<String>, key: &str| flag.or_else(|| from_file(key));
    if let Some(v) = parse_with(
        numeric(args.min_freq.map(|v| v.to_string()), "min-freq"),
        "min-freq",
        |s| s.parse().ok(),
    )? {
        config.min_freq = v;
    }
    if let Some(v) = parse_with(
        numeric(args.max_words.map(|v| v.to_string()), "max-words"),
        "max-words",
        |s| s.parse().ok(),
    )? {
        config.max_words = v;
    }
    if let Some(v) = parse_with(
        numeric(args.threshold.map(|v| v.to_string()), "threshold"),
        "threshold",
        |s| s.parse().ok(),
    )? {
        config.threshold = Some(v);
    }
    if let Some(v) = parse_with(
        numeric(args.seed.map(|v| v.to_string()), "seed"),
        "seed",
        |s| s.parse().ok(),
    )? {
        config.layout.seed = v;
    }
    if let Some(v) = parse_with(
        numeric(args.threads.map(|v| v.to_string()), "threads"),
        "threads",
        |s| s.parse().ok(),
    )? {
        config.threads = Some(v);
    }
    if let Some(k) = parse_with(
        numeric(args.factors_k.map(|v| v.to_string()), "factors-k"),
        "factors-k",
        |s| s.parse().ok(),
    )? {
        config.retention = Retention::Fixed(k);
    }
    if let Some(path) = args
        .stopwords
        .or_else(|| from_file("stopwords").map(PathBuf::from))
    {
        config.stopwords = Some(path);
    }
    if args.size_nodes {
        config.size_nodes = true;
    } else if let Some(v) = from_file("size-nodes") {
        config.size_nodes = v == "true" || v == "1";
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let config = match build_pipeline_config(*args) {
                Ok(config) => config,
                Err(message) => {
                    eprintln!("semap: {message}");
                    return ExitCode::from(2);
                }
            };
            match run_pipeline(&config) {
                Ok(report) => {
                    println!(
                        "wrote {} ({} nodes, {} edges, {} component(s), {} warning(s))",
                        config.out_dir.display(),
                        report.graph.nodes,
                        report.graph.edges,
                        report.graph.components,
                        report.warnings.len()
                    );
                    ExitCode::SUCCESS
                }
                Err(error) => {
                    eprintln!("semap: {error}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Compare { report_a, report_b } => match compare_runs(&report_a, &report_b) {
            Ok(diff) => {
                print!("{diff}");
                ExitCode::SUCCESS
            }
            Err(error) => {
                eprintln!("semap: {error}");
                ExitCode::FAILURE
            }
        },
    }
}
