//! Weighted risk score and tier per contract.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::detectors::{hierarchy, Finding, PatternKind};
use crate::frontend::{ContractDef, ContractKind, SourceUnit};
use crate::manifest::ManifestEntry;

/// Highest presence-based score: every pattern once.
pub const MAX_SCORE: u32 = 13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RiskTier {
    #[default]
    None,
    Low,
    Medium,
    High,
}

impl RiskTier {
    /// Descending severity, the order used in reports.
    pub const ALL: [RiskTier; 4] = [RiskTier::High, RiskTier::Medium, RiskTier::Low, RiskTier::None];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskTier::None => "None",
            RiskTier::Low => "Low",
            RiskTier::Medium => "Medium",
            RiskTier::High => "High",
        }
    }
}

impl fmt::Display for RiskTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskTier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(RiskTier::High),
            "medium" => Ok(RiskTier::Medium),
            "low" => Ok(RiskTier::Low),
            "none" => Ok(RiskTier::None),
            _ => Err(format!("unknown tier `{s}` (expected high, medium, low or none)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Each distinct pattern counts once.
    #[default]
    Presence,
    /// Every finding adds its weight.
    PerOccurrence,
}

pub fn tier(score: u32) -> RiskTier {
    match score {
        0 => RiskTier::None,
        1..=2 => RiskTier::Low,
        3..=4 => RiskTier::Medium,
        _ => RiskTier::High,
    }
}

pub fn score(findings: &[Finding], mode: ScoringMode) -> (u32, BTreeSet<PatternKind>) {
    let distinct: BTreeSet<PatternKind> = findings.iter().map(|f| f.pattern).collect();
    let total = match mode {
        ScoringMode::Presence => distinct.iter().map(|p| p.weight()).sum(),
        ScoringMode::PerOccurrence => findings.iter().map(Finding::weight).sum(),
    };
    (total, distinct)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RiskProfile {
    pub contract_id: String,
    pub file: String,
    pub contract: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
    pub findings: Vec<Finding>,
    pub distinct_patterns: BTreeSet<PatternKind>,
    pub score: u32,
    pub tier: RiskTier,
}

/// `file::Contract`, suffixed with `@address` when the manifest has one.
pub fn contract_id(file: &str, contract: &str, address: Option<&str>) -> String {
    match address {
        Some(a) => format!("{file}::{contract}@{a}"),
        None => format!("{file}::{contract}"),
    }
}

pub fn profile(
    file: &str,
    contract: &str,
    findings: Vec<Finding>,
    manifest_entry: Option<&ManifestEntry>,
    mode: ScoringMode,
) -> RiskProfile {
    let (score, distinct_patterns) = score(&findings, mode);
    let address = manifest_entry.map(|m| m.address.clone());
    RiskProfile {
        contract_id: contract_id(file, contract, address.as_deref()),
        file: file.to_string(),
        contract: contract.to_string(),
        address,
        findings,
        distinct_patterns,
        score,
        tier: tier(score),
    }
}

/// Contracts that receive a profile: concrete contracts no other contract in
/// the file inherits from. Library-only files profile their libraries.
pub fn profile_targets(unit: &SourceUnit) -> Vec<&ContractDef> {
    let inherited: BTreeSet<&str> = unit.contracts.iter().flat_map(|c| c.bases.iter().map(String::as_str)).collect();
    let leaves: Vec<&ContractDef> = unit
        .contracts
        .iter()
        .filter(|c| c.kind == ContractKind::Contract && !inherited.contains(c.name.as_str()))
        .collect();
    if !leaves.is_empty() {
        return leaves;
    }
    unit.contracts.iter().filter(|c| c.kind == ContractKind::Library).collect()
}

/// Findings that apply to `contract`: its own, those of in-file ancestors
/// whose function is not overridden further down, and file-level ones.
pub fn findings_for(unit: &SourceUnit, contract: &ContractDef, findings: &[Finding]) -> Vec<Finding> {
    let lineage = hierarchy(unit, contract);
    let defines = |c: &ContractDef, name: &str| {
        c.functions.iter().any(|f| f.display_name() == name) || c.modifiers.iter().any(|m| m.name == name)
    };
    findings
        .iter()
        .filter(|f| {
            if f.is_file_level() {
                return true;
            }
            let Some(depth) = lineage.iter().position(|c| c.name == f.contract_name) else { return false };
            !lineage[..depth].iter().any(|c| defines(c, &f.function_name))
        })
        .cloned()
        .collect()
}
