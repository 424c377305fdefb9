//! End-to-end analysis of single files and whole corpora.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::aggregate::CorpusReport;
use crate::charts::emit_chart_data;
use crate::classifier::{classify, NftClassification};
use crate::config::{OutputFormat, RunConfig};
use crate::detectors::run_all;
use crate::error::{AggregateError, PipelineError};
use crate::frontend::parse;
use crate::manifest::Manifest;
use crate::risk::{findings_for, profile, profile_targets, RiskProfile, RiskTier};
use crate::sanitizer::{sanitize, CorpusIndex, EligibilityReport, GateKind, GateStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Detect on every parseable file, whatever the gates say.
    Scan,
    /// Detect only on files passing every gate and the NFT filter.
    Corpus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FileAnalysis {
    pub file: String,
    pub eligibility: EligibilityReport,
    /// `None` when the file was not parsed or not eligible for classification.
    pub classification: Option<NftClassification>,
    pub profiles: Vec<RiskProfile>,
    pub opaque_statements: usize,
}

impl FileAnalysis {
    pub fn parse_failed(&self) -> bool {
        self.eligibility.gate(GateKind::SyntaxCheck).status == GateStatus::Fail
    }

    pub fn nft_relevant(&self) -> Option<bool> {
        self.classification.as_ref().map(|c| c.is_nft_relevant)
    }

    /// One record per profile, or a single file-level record when there is
    /// nothing to profile.
    pub fn records(&self) -> Vec<ContractRecord<'_>> {
        if self.profiles.is_empty() {
            return vec![ContractRecord {
                contract_id: &self.file,
                file: &self.file,
                contract: None,
                address: None,
                eligibility: &self.eligibility,
                classification: self.classification.as_ref(),
                findings: &[],
                distinct_patterns: Vec::new(),
                score: 0,
                tier: RiskTier::None,
                opaque_statements: self.opaque_statements,
            }];
        }
        self.profiles.iter().map(|p| self.record(p)).collect()
    }

    fn record<'a>(&'a self, p: &'a RiskProfile) -> ContractRecord<'a> {
        ContractRecord {
            contract_id: &p.contract_id,
            file: &self.file,
            contract: Some(&p.contract),
            address: p.address.as_deref(),
            eligibility: &self.eligibility,
            classification: self.classification.as_ref(),
            findings: &p.findings,
            distinct_patterns: p.distinct_patterns.iter().map(|k| k.as_str()).collect(),
            score: p.score,
            tier: p.tier,
            opaque_statements: self.opaque_statements,
        }
    }

    pub fn max_tier(&self) -> RiskTier {
        self.profiles.iter().map(|p| p.tier).max().unwrap_or_default()
    }
}

/// The per-contract output record.
#[derive(Clone, Debug, Serialize)]
pub struct ContractRecord<'a> {
    pub contract_id: &'a str,
    pub file: &'a str,
    pub contract: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub address: Option<&'a str>,
    pub eligibility: &'a EligibilityReport,
    pub classification: Option<&'a NftClassification>,
    pub findings: &'a [crate::detectors::Finding],
    pub distinct_patterns: Vec<&'static str>,
    pub score: u32,
    pub tier: RiskTier,
    /// Statements the parser could not model; findings inside them are missed.
    pub opaque_statements: usize,
}

pub struct Analyzer<'a> {
    pub config: &'a RunConfig,
    pub manifest: Option<&'a Manifest>,
    pub corpus: Option<&'a CorpusIndex>,
}

impl Analyzer<'_> {
    pub fn analyze_source(&self, source: &str, file: &str, mode: Mode) -> FileAnalysis {
        let parsed = parse(source, file);
        let eligibility = sanitize(&parsed, &self.config.sanitizer, self.corpus);
        let mut analysis = FileAnalysis {
            file: file.to_string(),
            eligibility,
            classification: None,
            profiles: Vec::new(),
            opaque_statements: 0,
        };
        let Ok(unit) = parsed else { return analysis };
        analysis.opaque_statements = unit.opaque_statements;
        if mode == Mode::Corpus && !analysis.eligibility.passed {
            return analysis;
        }
        let classification = classify(&unit, &self.config.catalogs, self.config.strict_nft);
        let relevant = classification.is_nft_relevant;
        analysis.classification = Some(classification);
        if mode == Mode::Corpus && !relevant {
            return analysis;
        }
        let findings = run_all(&unit, &self.config.detectors);
        let entry = self.manifest.and_then(|m| m.lookup(file));
        analysis.profiles = profile_targets(&unit)
            .into_iter()
            .map(|c| profile(file, &c.name, findings_for(&unit, c, &findings), entry, self.config.scoring))
            .collect();
        analysis
    }

    pub fn analyze_file(&self, path: &Path, display: &str, mode: Mode) -> Result<FileAnalysis, PipelineError> {
        let bytes = fs::read(path).map_err(|source| PipelineError::Read { path: path.to_path_buf(), source })?;
        Ok(self.analyze_source(&String::from_utf8_lossy(&bytes), display, mode))
    }
}

/// True when any profile reaches `threshold`.
pub fn breaches(analyses: &[FileAnalysis], threshold: Option<RiskTier>) -> bool {
    threshold.is_some_and(|t| analyses.iter().any(|a| a.max_tier() >= t))
}

/// `.sol` files under `root`, sorted, paired with their `/`-separated
/// path relative to `root`.
pub fn discover(root: &Path) -> Vec<(PathBuf, String)> {
    let mut files: Vec<(PathBuf, String)> = WalkDir::new(root)
        .follow_links(true)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .filter(|e| e.path().extension().is_some_and(|x| x.eq_ignore_ascii_case("sol")))
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap_or(e.path());
            let display = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            (e.path().to_path_buf(), display)
        })
        .collect();
    files.sort_by(|a, b| a.1.cmp(&b.1));
    files
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusRun {
    /// In discovery order.
    pub files: Vec<FileAnalysis>,
    pub report: CorpusReport,
}

impl CorpusRun {
    pub fn excluded(&self) -> impl Iterator<Item = &FileAnalysis> {
        self.files.iter().filter(|f| !f.eligibility.passed || f.nft_relevant() == Some(false))
    }

    /// Records of analyzed contracts, sorted by contract id.
    pub fn records(&self) -> Vec<ContractRecord<'_>> {
        let mut records: Vec<ContractRecord<'_>> =
            self.files.iter().flat_map(|f| f.profiles.iter().map(move |p| f.record(p))).collect();
        records.sort_by(|a, b| a.contract_id.cmp(b.contract_id));
        records
    }
}

/// Analyzes every `.sol` file under `root` on `config.workers` threads.
/// Unreadable or unparseable files are recorded as exclusions.
pub fn run_corpus(root: &Path, config: &RunConfig, manifest: Option<&Manifest>) -> Result<CorpusRun, PipelineError> {
    let files = discover(root);
    if files.is_empty() {
        return Err(PipelineError::NoInputs(root.to_path_buf()));
    }
    let index = CorpusIndex::new(files.iter().map(|(_, d)| d.as_str()));
    let analyzer = Analyzer { config, manifest, corpus: Some(&index) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool construction");
    pool.install(|| {
        let analyses: Vec<FileAnalysis> = files
            .par_iter()
            .map(|(path, display)| match analyzer.analyze_file(path, display, Mode::Corpus) {
                Ok(a) => a,
                // unreadable file: same path as a parse failure
                Err(e) => analyzer.analyze_source("", display, Mode::Corpus).with_read_error(e),
            })
            .collect();
        let report = analyses
            .par_iter()
            .map(|a| partial_report(a, config))
            .try_reduce(|| CorpusReport::empty(config.aggregate), CorpusReport::merge)?;
        Ok(CorpusRun { files: analyses, report })
    })
}

fn partial_report(a: &FileAnalysis, config: &RunConfig) -> Result<CorpusReport, AggregateError> {
    let mut r = CorpusReport::empty(config.aggregate);
    r.add_file(&a.eligibility, a.nft_relevant());
    for p in &a.profiles {
        r.add_profile(p)?;
    }
    Ok(r)
}

impl FileAnalysis {
    fn with_read_error(mut self, e: PipelineError) -> Self {
        use crate::sanitizer::GateResult;
        for result in self.eligibility.gate_results.values_mut() {
            *result = GateResult::skipped();
        }
        self.eligibility.gate_results.insert(GateKind::SyntaxCheck, GateResult::fail(e.to_string()));
        self.eligibility.passed = false;
        self
    }
}

/// Writes records, the corpus report, the exclusion log and chart data.
/// Returns the written paths.
pub fn write_corpus_outputs(run: &CorpusRun, out_dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, PipelineError> {
    let werr = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| PipelineError::Write { path, source }
    };
    fs::create_dir_all(out_dir).map_err(werr(out_dir))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<(), PipelineError> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(werr(&path))?;
        written.push(path);
        Ok(())
    };
    let records = run.records();
    match format {
        OutputFormat::Json => put("records.jsonl", records_jsonl(&records))?,
        OutputFormat::Csv => {
            put("records.csv", records_csv(&records).map_err(werr(out_dir))?)?;
            put("findings.csv", findings_csv(&records).map_err(werr(out_dir))?)?;
        }
    }
    put("report.json", to_json_pretty(&run.report))?;
    put("exclusions.csv", exclusions_csv(run).map_err(werr(out_dir))?)?;
    let charts = out_dir.join("charts");
    written.extend(emit_chart_data(&run.report, &charts).map_err(werr(&charts))?);
    Ok(written)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn records_jsonl(records: &[ContractRecord<'_>]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn records_csv(records: &[ContractRecord<'_>]) -> std::io::Result<String> {
    csv_string(
        &["contract_id", "file", "contract", "address", "eligible", "nft_relevant", "score", "tier", "patterns", "findings"],
        records.iter().map(|r| {
            vec![
                r.contract_id.to_string(),
                r.file.to_string(),
                r.contract.unwrap_or_default().to_string(),
                r.address.unwrap_or_default().to_string(),
                r.eligibility.passed.to_string(),
                r.classification.map(|c| c.is_nft_relevant.to_string()).unwrap_or_default(),
                r.score.to_string(),
                r.tier.to_string(),
                r.distinct_patterns.join(";"),
                r.findings.len().to_string(),
            ]
        }),
    )
}

pub fn findings_csv(records: &[ContractRecord<'_>]) -> std::io::Result<String> {
    csv_string(
        &["contract_id", "pattern", "sub_kind", "severity", "contract", "function", "line_start", "line_end", "description", "evidence"],
        records.iter().flat_map(|r| {
            r.findings.iter().map(move |f| {
                vec![
                    r.contract_id.to_string(),
                    f.pattern.to_string(),
                    f.sub_kind.map(|s| s.to_string()).unwrap_or_default(),
                    f.weight().to_string(),
                    f.contract_name.clone(),
                    f.function_name.clone(),
                    f.span.start.to_string(),
                    f.span.end.to_string(),
                    f.description.clone(),
                    f.evidence.clone(),
                ]
            })
        }),
    )
}

pub fn exclusions_csv(run: &CorpusRun) -> std::io::Result<String> {
    csv_string(
        &["file", "reason", "failed_gates", "detail"],
        run.excluded().map(|f| {
            if f.eligibility.passed {
                return vec![f.file.clone(), "not_nft_relevant".into(), String::new(), String::new()];
            }
            let gates: Vec<&str> = f.eligibility.failed_gates().map(GateKind::as_str).collect();
            let detail: Vec<String> = f
                .eligibility
                .failed_gates()
                .filter_map(|g| f.eligibility.gate(g).reason.clone())
                .collect();
            vec![f.file.clone(), "gate_failure".into(), gates.join(";"), detail.join("; ")]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUG: &str = "pragma solidity ^0.8.4;
contract Drop {
    address impl;
    function ownerOf(uint256) external view returns (address) {}
    function mint(address to) external { to; }
    function upgrade(bytes calldata d) external { impl.delegatecall(d); }
    function close() external { selfdestruct(payable(msg.sender)); }
}
";

    fn analyzer(config: &RunConfig) -> Analyzer<'_> {
        Analyzer { config, manifest: None, corpus: None }
    }

    #[test]
    fn scan_scores_rug() {
        let cfg = RunConfig::default();
        let a = analyzer(&cfg).analyze_source(RUG, "rug.sol", Mode::Scan);
        assert_eq!(a.profiles.len(), 1);
        assert_eq!(a.profiles[0].score, 8);
        assert_eq!(a.profiles[0].tier, RiskTier::High);
        assert!(breaches(std::slice::from_ref(&a), Some(RiskTier::High)));
        assert!(!breaches(std::slice::from_ref(&a), None));
    }

    #[test]
    fn parse_failure_yields_file_record() {
        let cfg = RunConfig::default();
        let a = analyzer(&cfg).analyze_source("contract A { function f( }", "bad.sol", Mode::Scan);
        assert!(a.parse_failed());
        let recs = a.records();
        assert_eq!(recs.len(), 1);
        let json = serde_json::to_value(&recs[0]).unwrap();
        assert_eq!(json["eligibility"]["gates"]["syntax_check"]["status"], "fail");
        assert_eq!(json["tier"], "None");
    }

    #[test]
    fn corpus_mode_skips_ineligible_and_non_nft() {
        let cfg = RunConfig::default();
        let gated = analyzer(&cfg).analyze_source("import \"./x.sol\"; contract NFT {}", "g.sol", Mode::Corpus);
        assert!(gated.profiles.is_empty() && gated.classification.is_none());
        let vault = analyzer(&cfg).analyze_source("contract Vault { function sweep() external { selfdestruct(payable(msg.sender)); } }", "v.sol", Mode::Corpus);
        assert_eq!(vault.nft_relevant(), Some(false));
        assert!(vault.profiles.is_empty());
    }

    #[test]
    fn corpus_run_is_worker_independent() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..12 {
            fs::write(dir.path().join(format!("f{i:02}.sol")), RUG.replace("Drop", &format!("Drop{i}"))).unwrap();
        }
        fs::write(dir.path().join("bad.sol"), "contract {").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let mut cfg = RunConfig::default();
        let one = run_corpus(dir.path(), &cfg, None).unwrap();
        cfg.workers = 4;
        let four = run_corpus(dir.path(), &cfg, None).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.report.total_files_seen, 13);
        assert_eq!(one.report.analyzed_contracts, 12);
        assert_eq!(one.excluded().count(), 1);
        let out1 = tempfile::tempdir().unwrap();
        let out4 = tempfile::tempdir().unwrap();
        let w1 = write_corpus_outputs(&one, out1.path(), OutputFormat::Json).unwrap();
        write_corpus_outputs(&four, out4.path(), OutputFormat::Json).unwrap();
        for p in w1 {
            let rel = p.strip_prefix(out1.path()).unwrap();
            assert_eq!(fs::read(&p).unwrap(), fs::read(out4.path().join(rel)).unwrap(), "{rel:?}");
        }
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run_corpus(dir.path(), &RunConfig::default(), None), Err(PipelineError::NoInputs(_))));
    }
}
