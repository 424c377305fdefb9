//! Eligibility gates that decide whether a file is fit for analysis.
//!
//! A file must be standalone (no unresolved imports or bases), declare a
//! compiler range overlapping the supported window, parse, and contain at
//! least one deployable contract or library.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::ConfigError;
use crate::frontend::{ParseError, SourceUnit, Version, VersionRange};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    ImportResolution,
    PragmaCompatibility,
    StandaloneViability,
    SyntaxCheck,
    AbstractOnlyExclusion,
}

impl GateKind {
    pub const ALL: [GateKind; 5] = [
        GateKind::ImportResolution,
        GateKind::PragmaCompatibility,
        GateKind::StandaloneViability,
        GateKind::SyntaxCheck,
        GateKind::AbstractOnlyExclusion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::ImportResolution => "import_resolution",
            GateKind::PragmaCompatibility => "pragma_compatibility",
            GateKind::StandaloneViability => "standalone_viability",
            GateKind::SyntaxCheck => "syntax_check",
            GateKind::AbstractOnlyExclusion => "abstract_only_exclusion",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateStatus {
    Pass,
    Fail,
    /// Not evaluated because the file did not parse.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateResult {
    pub status: GateStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl GateResult {
    pub fn pass() -> Self {
        Self { status: GateStatus::Pass, reason: None }
    }

    pub fn fail(reason: impl Into<String>) -> Self {
        Self { status: GateStatus::Fail, reason: Some(reason.into()) }
    }

    pub fn skipped() -> Self {
        Self { status: GateStatus::Skipped, reason: None }
    }

    pub fn passed(&self) -> bool {
        self.status == GateStatus::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EligibilityReport {
    pub file_path: String,
    pub passed: bool,
    #[serde(rename = "gates")]
    pub gate_results: BTreeMap<GateKind, GateResult>,
}

impl EligibilityReport {
    pub fn gate(&self, kind: GateKind) -> &GateResult {
        &self.gate_results[&kind]
    }

    pub fn failed_gates(&self) -> impl Iterator<Item = GateKind> + '_ {
        self.gate_results
            .iter()
            .filter(|(_, r)| r.status == GateStatus::Fail)
            .map(|(k, _)| *k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SanitizerConfig {
    pub supported_version_floor: Version,
    pub supported_version_ceiling: Version,
    /// When false, exact pins are exempt from the window check.
    pub reject_exact_pins_outside_range: bool,
    pub allow_relative_imports_resolvable_in_corpus: bool,
}

impl Default for SanitizerConfig {
    fn default() -> Self {
        Self {
            supported_version_floor: Version::new(0, 4, 0),
            supported_version_ceiling: Version::new(0, 8, 19),
            reject_exact_pins_outside_range: true,
            allow_relative_imports_resolvable_in_corpus: false,
        }
    }
}

impl SanitizerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.supported_version_floor > self.supported_version_ceiling {
            return Err(ConfigError::Invalid {
                key: "supported_version_floor".into(),
                message: format!(
                    "floor {} is above ceiling {}",
                    self.supported_version_floor, self.supported_version_ceiling
                ),
            });
        }
        Ok(())
    }

    fn window(&self) -> VersionRange {
        VersionRange::window(self.supported_version_floor, self.supported_version_ceiling)
    }
}

/// Set of corpus-relative file paths, used to resolve imports in permissive mode.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusIndex {
    files: BTreeSet<String>,
}

impl CorpusIndex {
    pub fn new<I, S>(paths: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self { files: paths.into_iter().map(|p| normalize_path(p.as_ref())).collect() }
    }

    pub fn contains(&self, path: &str) -> bool {
        self.files.contains(&normalize_path(path))
    }
}

/// Collapses `.` and `..` components and unifies separators.
fn normalize_path(path: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for part in path.split(['/', '\\']) {
        match part {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            p => parts.push(p),
        }
    }
    parts.join("/")
}

fn resolve_import(importer: &str, import: &str) -> String {
    if import.starts_with("./") || import.starts_with("../") {
        let dir = match importer.rfind(['/', '\\']) {
            Some(i) => &importer[..i],
            None => "",
        };
        normalize_path(&format!("{dir}/{import}"))
    } else {
        normalize_path(import)
    }
}

pub fn check_imports(unit: &SourceUnit, config: &SanitizerConfig, corpus: Option<&CorpusIndex>) -> GateResult {
    let unresolved: Vec<&str> = unit
        .imports
        .iter()
        .filter(|imp| match (config.allow_relative_imports_resolvable_in_corpus, corpus) {
            (true, Some(index)) => !index.contains(&resolve_import(&unit.file_path, &imp.path)),
            _ => true,
        })
        .map(|imp| imp.path.as_str())
        .collect();
    if unresolved.is_empty() {
        GateResult::pass()
    } else {
        let quoted: Vec<String> = unresolved.iter().map(|p| format!("\"{p}\"")).collect();
        GateResult::fail(format!("unresolved import {}", quoted.join(", ")))
    }
}

pub fn check_pragma(unit: &SourceUnit, config: &SanitizerConfig) -> GateResult {
    let window = config.window();
    for pragma in unit.solidity_pragmas() {
        let Some(range) = &pragma.version_range else { continue };
        if pragma.is_exact_pin && !config.reject_exact_pins_outside_range {
            continue;
        }
        if !range.intersects(&window) {
            let what = if pragma.is_exact_pin { "exact pin" } else { "version range" };
            return GateResult::fail(format!(
                "{what} `{}` outside supported window {}..={}",
                pragma.constraint_text, config.supported_version_floor, config.supported_version_ceiling
            ));
        }
    }
    GateResult::pass()
}

pub fn check_standalone(unit: &SourceUnit) -> GateResult {
    let mut defined: HashSet<&str> = HashSet::new();
    let mut reasons: Vec<String> = Vec::new();
    for c in &unit.contracts {
        if !defined.insert(c.name.as_str()) {
            reasons.push(format!("{} declared twice", c.name));
        }
    }
    let mut missing: Vec<&str> = Vec::new();
    for c in &unit.contracts {
        for base in &c.bases {
            if !defined.contains(base.as_str()) && !missing.contains(&base.as_str()) {
                missing.push(base);
            }
        }
    }
    reasons.extend(missing.iter().map(|b| format!("unresolved base {b}")));
    if reasons.is_empty() {
        GateResult::pass()
    } else {
        GateResult::fail(reasons.join("; "))
    }
}

pub fn check_abstract_only(unit: &SourceUnit) -> GateResult {
    if unit.contracts.iter().any(|c| c.kind.is_concrete()) {
        GateResult::pass()
    } else {
        GateResult::fail("file defines only abstract contracts or interfaces")
    }
}

/// Evaluates every gate. Never fails: parse errors become a failed
/// `syntax_check` with the remaining gates skipped.
pub fn sanitize(
    outcome: &Result<SourceUnit, ParseError>,
    config: &SanitizerConfig,
    corpus: Option<&CorpusIndex>,
) -> EligibilityReport {
    let mut gates = BTreeMap::new();
    let file_path = match outcome {
        Err(e) => {
            for kind in GateKind::ALL {
                gates.insert(kind, GateResult::skipped());
            }
            gates.insert(GateKind::SyntaxCheck, GateResult::fail(e.to_string()));
            e.file.clone()
        }
        Ok(unit) if unit.contracts.is_empty() => {
            for kind in GateKind::ALL {
                gates.insert(kind, GateResult::skipped());
            }
            gates.insert(GateKind::SyntaxCheck, GateResult::fail("no contracts"));
            unit.file_path.clone()
        }
        Ok(unit) => {
            gates.insert(GateKind::SyntaxCheck, GateResult::pass());
            gates.insert(GateKind::ImportResolution, check_imports(unit, config, corpus));
            gates.insert(GateKind::PragmaCompatibility, check_pragma(unit, config));
            gates.insert(GateKind::StandaloneViability, check_standalone(unit));
            gates.insert(GateKind::AbstractOnlyExclusion, check_abstract_only(unit));
            unit.file_path.clone()
        }
    };
    let passed = gates.values().all(GateResult::passed);
    EligibilityReport { file_path, passed, gate_results: gates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn unit(src: &str) -> SourceUnit {
        parse(src, "dir/t.sol").unwrap()
    }

    fn cfg() -> SanitizerConfig {
        SanitizerConfig::default()
    }

    #[test]
    fn imports() {
        let r = check_imports(&unit("import \"../utils/SafeMath.sol\"; contract A {}"), &cfg(), None);
        assert_eq!(r.status, GateStatus::Fail);
        assert!(r.reason.unwrap().contains("../utils/SafeMath.sol"));
        assert!(check_imports(&unit("contract A {}"), &cfg(), None).passed());
    }

    #[test]
    fn permissive_imports_resolve_against_corpus() {
        let permissive = SanitizerConfig { allow_relative_imports_resolvable_in_corpus: true, ..cfg() };
        let index = CorpusIndex::new(["dir/t.sol", "dir/Lib.sol", "shared/Base.sol"]);
        let u = unit("import \"./Lib.sol\"; import \"../shared/Base.sol\"; contract A {}");
        assert!(check_imports(&u, &permissive, Some(&index)).passed());
        let missing = unit("import \"./Missing.sol\"; contract A {}");
        assert!(!check_imports(&missing, &permissive, Some(&index)).passed());
        // permissive flag without a corpus index behaves like the default
        assert!(!check_imports(&u, &permissive, None).passed());
    }

    #[test]
    fn pragma_window() {
        let pass = |src: &str| check_pragma(&unit(src), &cfg()).passed();
        assert!(pass("pragma solidity ^0.8.0; contract A {}"));
        assert!(pass("pragma solidity >=0.8.0; contract A {}"));
        assert!(pass("pragma solidity >=0.4.22 <0.6.0; contract A {}"));
        assert!(pass("pragma solidity 0.8.17; contract A {}"));
        assert!(pass("contract A {}"));
        assert!(!pass("pragma solidity 0.9.1; contract A {}"));
        assert!(!pass("pragma solidity ^0.9.0; contract A {}"));
        assert!(!pass("pragma solidity <0.4.0; contract A {}"));
    }

    #[test]
    fn exact_pin_exemption_flag() {
        let lenient = SanitizerConfig { reject_exact_pins_outside_range: false, ..cfg() };
        let u = unit("pragma solidity 0.9.1; contract A {}");
        assert!(check_pragma(&u, &lenient).passed());
        assert!(!check_pragma(&u, &cfg()).passed());
    }

    #[test]
    fn standalone_bases() {
        let r = check_standalone(&unit("contract A is B {}"));
        assert_eq!(r.reason.as_deref(), Some("unresolved base B"));
        assert!(check_standalone(&unit("contract B {} contract A is B {}")).passed());
        let dup = check_standalone(&unit("contract A {} contract A {}"));
        assert_eq!(dup.reason.as_deref(), Some("A declared twice"));
        assert!(check_standalone(&unit(
            "contract D {} contract B is D {} contract C is D {} contract A is B, C {}"
        ))
        .passed());
    }

    #[test]
    fn abstract_only() {
        assert!(!check_abstract_only(&unit("interface IERC165 { function supportsInterface(bytes4) external view returns (bool); }")).passed());
        assert!(!check_abstract_only(&unit("abstract contract A {} interface I {}")).passed());
        assert!(check_abstract_only(&unit("interface I {} interface J {} interface K {} contract A {}")).passed());
        assert!(check_abstract_only(&unit("library L { function f() internal {} }")).passed());
    }

    #[test]
    fn parse_failure_skips_other_gates() {
        let outcome = parse("contract {", "bad.sol");
        let report = sanitize(&outcome, &cfg(), None);
        assert!(!report.passed);
        assert_eq!(report.file_path, "bad.sol");
        assert_eq!(report.gate(GateKind::SyntaxCheck).status, GateStatus::Fail);
        for kind in GateKind::ALL.into_iter().filter(|k| *k != GateKind::SyntaxCheck) {
            assert_eq!(report.gate(kind).status, GateStatus::Skipped);
        }
    }

    #[test]
    fn no_contracts_fails_syntax_check() {
        let report = sanitize(&parse("pragma solidity ^0.8.0;", "empty.sol"), &cfg(), None);
        assert_eq!(report.gate(GateKind::SyntaxCheck).reason.as_deref(), Some("no contracts"));
    }

    #[test]
    fn multiple_failures_are_all_listed() {
        let src = "pragma solidity 0.9.1;\nimport \"../utils/SafeMath.sol\";\ncontract A {}";
        let report = sanitize(&parse(src, "two.sol"), &cfg(), None);
        let failed: Vec<GateKind> = report.failed_gates().collect();
        assert_eq!(failed, [GateKind::ImportResolution, GateKind::PragmaCompatibility]);
        assert!(report.gate_results.values().all(|g| g.status != GateStatus::Fail || g.reason.is_some()));
    }

    #[test]
    fn clean_file_passes() {
        let report = sanitize(&parse("pragma solidity ^0.8.0; contract A {}", "ok.sol"), &cfg(), None);
        assert!(report.passed);
        assert!(report.gate_results.values().all(GateResult::passed));
    }

    #[test]
    fn floor_above_ceiling_is_rejected() {
        let bad = SanitizerConfig { supported_version_floor: Version::new(0, 9, 0), ..cfg() };
        assert!(bad.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn serializes_skipped_state() {
        let report = sanitize(&parse("contract {", "bad.sol"), &cfg(), None);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["gates"]["pragma_compatibility"]["status"], "skipped");
        assert_eq!(json["gates"]["syntax_check"]["status"], "fail");
    }
}
