use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rugscan_core::config::{OutputFormat, RunConfig};
use rugscan_core::manifest::Manifest;
use rugscan_core::pipeline::{self, breaches, Analyzer, Mode};
use rugscan_core::risk::RiskTier;

const EXIT_CLEAN: u8 = 0;
const EXIT_BREACH: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "rugscan", version, about = "Scan Solidity NFT contracts for rug-pull backdoors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one file and print a record per contract.
    Scan {
        file: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Analyze every .sol file under a directory.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tier {
    High,
    Medium,
    Low,
}

#[derive(Args)]
struct Options {
    /// Flat key = value config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    workers: Option<usize>,
    /// Exit 1 when any contract reaches this tier.
    #[arg(long, value_enum)]
    fail_on_tier: Option<Tier>,
    /// CSV with columns file,address,compiler_version,optimization.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Require interface or inheritance evidence for NFT relevance.
    #[arg(long)]
    strict_nft: bool,
    /// Add a pattern's weight for every finding instead of once.
    #[arg(long)]
    per_occurrence_scoring: bool,
    /// Flag pragmas admitting versions below this one.
    #[arg(long, value_name = "VERSION")]
    deprecated_below: Option<String>,
}

impl Options {
    fn build(&self) -> Result<RunConfig, String> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path).map_err(|e| e.to_string())?;
        }
        let mut set = |key: &str, value: String| config.set(key, &value, None).map_err(|e| e.to_string());
        if let Some(out) = &self.out {
            set("out", out.display().to_string())?;
        }
        if let Some(format) = self.format {
            set("format", match format { Format::Json => "json", Format::Csv => "csv" }.into())?;
        }
        if let Some(workers) = self.workers {
            set("workers", workers.to_string())?;
        }
        if let Some(tier) = self.fail_on_tier {
            set("fail_on_tier", match tier { Tier::High => "high", Tier::Medium => "medium", Tier::Low => "low" }.into())?;
        }
        if let Some(manifest) = &self.manifest {
            set("manifest", manifest.display().to_string())?;
        }
        if self.strict_nft {
            set("strict_nft", "true".into())?;
        }
        if self.per_occurrence_scoring {
            set("per_occurrence_scoring", "true".into())?;
        }
        if let Some(v) = &self.deprecated_below {
            set("deprecated_below", v.clone())?;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn load_manifest(config: &RunConfig) -> Result<Option<Manifest>, String> {
    config.manifest.as_deref().map(Manifest::load).transpose().map_err(|e| e.to_string())
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("rugscan: {message}");
    ExitCode::from(EXIT_INPUT)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Scan { file, opts } => scan(&file, &opts),
        Command::Corpus { dir, opts } => corpus(&dir, &opts),
    }
}

fn scan(file: &Path, opts: &Options) -> ExitCode {
    let config = match opts.build() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let manifest = match load_manifest(&config) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    if !file.is_file() {
        return fail(format!("{} is not a readable file", file.display()));
    }
    let analyzer = Analyzer { config: &config, manifest: manifest.as_ref(), corpus: None };
    let analysis = match analyzer.analyze_file(file, &file.display().to_string(), Mode::Scan) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let records = analysis.records();
    let text = match config.format {
        OutputFormat::Json => pipeline::records_jsonl(&records),
        OutputFormat::Csv => match pipeline::records_csv(&records) {
            Ok(t) => t,
            Err(e) => return fail(e),
        },
    };
    print!("{text}");
    let _ = std::io::stdout().flush();
    if let Some(dir) = &config.out_dir {
        let name = match config.format {
            OutputFormat::Json => "records.jsonl",
            OutputFormat::Csv => "records.csv",
        };
        if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join(name), &text)) {
            return fail(format!("cannot write {}: {e}", dir.display()));
        }
    }
    if analysis.parse_failed() {
        eprintln!("rugscan: {}: syntax check failed", file.display());
        return ExitCode::from(EXIT_INPUT);
    }
    exit_for(breaches(std::slice::from_ref(&analysis), config.fail_on_tier), config.fail_on_tier)
}

fn corpus(dir: &Path, opts: &Options) -> ExitCode {
    let config = match opts.build() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let manifest = match load_manifest(&config) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    if !dir.is_dir() {
        return fail(format!("{} is not a directory", dir.display()));
    }
    let run = match pipeline::run_corpus(dir, &config, manifest.as_ref()) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("rugscan-report"));
    if let Err(e) = pipeline::write_corpus_outputs(&run, &out_dir, config.format) {
        return fail(e);
    }
    let r = &run.report;
    eprintln!(
        "rugscan: {} files, {} excluded by gates, {} not NFT-relevant, {} contracts analyzed",
        r.total_files_seen, r.excluded_files, r.excluded_not_nft, r.analyzed_contracts
    );
    let tiers: Vec<String> = RiskTier::ALL.iter().map(|t| format!("{t} {}", r.tier_count(*t))).collect();
    eprintln!("rugscan: tiers: {}; reports in {}", tiers.join(", "), out_dir.display());
    exit_for(breaches(&run.files, config.fail_on_tier), config.fail_on_tier)
}

fn exit_for(breached: bool, threshold: Option<RiskTier>) -> ExitCode {
    if breached {
        eprintln!("rugscan: at least one contract reached tier {}", threshold.unwrap_or_default());
        ExitCode::from(EXIT_BREACH)
    } else {
        ExitCode::from(EXIT_CLEAN)
    }
}
