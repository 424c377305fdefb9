//! Rug-pull pattern detectors.
//!
//! Each detector is a pure function from a [`SourceUnit`] to the findings it
//! recognises. Detectors are lossless: every occurrence is reported and
//! de-duplication for scoring happens in [`crate::risk`].

mod delegatecall;
mod loops;
mod pragma;
mod privileged;
mod selfdestruct;
mod tx_origin;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::frontend::{Block, ContractDef, LineSpan, SourceUnit, Span, Version};

pub use delegatecall::detect_delegatecall;
pub use loops::detect_external_call_in_loop;
pub use pragma::detect_deprecated_pragma;
pub use privileged::detect_privileged_mint_withdraw;
pub use selfdestruct::detect_selfdestruct;
pub use tx_origin::detect_tx_origin_auth;

/// Maximum length of a finding's source excerpt, in characters.
pub const EVIDENCE_MAX_CHARS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    SelfDestruct,
    DelegateCall,
    ExternalCallInLoop,
    PrivilegedMintWithdraw,
    TxOriginAuth,
    DeprecatedPragma,
}

impl PatternKind {
    pub const ALL: [PatternKind; 6] = [
        PatternKind::SelfDestruct,
        PatternKind::DelegateCall,
        PatternKind::ExternalCallInLoop,
        PatternKind::PrivilegedMintWithdraw,
        PatternKind::TxOriginAuth,
        PatternKind::DeprecatedPragma,
    ];

    /// Heuristic risk weight of the pattern.
    pub const fn weight(self) -> u32 {
        match self {
            PatternKind::SelfDestruct | PatternKind::DelegateCall => 3,
            PatternKind::ExternalCallInLoop | PatternKind::PrivilegedMintWithdraw | PatternKind::TxOriginAuth => 2,
            PatternKind::DeprecatedPragma => 1,
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::SelfDestruct => "self_destruct",
            PatternKind::DelegateCall => "delegate_call",
            PatternKind::ExternalCallInLoop => "external_call_in_loop",
            PatternKind::PrivilegedMintWithdraw => "privileged_mint_withdraw",
            PatternKind::TxOriginAuth => "tx_origin_auth",
            PatternKind::DeprecatedPragma => "deprecated_pragma",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        PatternKind::ALL
            .into_iter()
            .find(|p| p.as_str().replace('_', "") == wanted)
            .ok_or_else(|| format!("unknown pattern `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubKind {
    Direct,
    Assembly,
    ExternalTarget,
    ConstantTarget,
    Unrestricted,
    OwnerOnly,
}

impl SubKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubKind::Direct => "direct",
            SubKind::Assembly => "assembly",
            SubKind::ExternalTarget => "external_target",
            SubKind::ConstantTarget => "constant_target",
            SubKind::Unrestricted => "unrestricted",
            SubKind::OwnerOnly => "owner_only",
        }
    }
}

impl fmt::Display for SubKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub pattern: PatternKind,
    pub sub_kind: Option<SubKind>,
    /// Empty for file-level findings.
    pub contract_name: String,
    /// Function or modifier name; empty for file-level findings.
    pub function_name: String,
    pub span: LineSpan,
    pub description: String,
    /// Verbatim source excerpt, at most [`EVIDENCE_MAX_CHARS`] characters.
    pub evidence: String,
    pub location: Span,
}

#[derive(Serialize)]
struct FindingRecord<'a> {
    pattern: PatternKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    sub_kind: Option<SubKind>,
    severity: u32,
    contract: &'a str,
    function: &'a str,
    lines: [usize; 2],
    description: &'a str,
    evidence: &'a str,
}

impl Serialize for Finding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FindingRecord {
            pattern: self.pattern,
            sub_kind: self.sub_kind,
            severity: self.weight(),
            contract: &self.contract_name,
            function: &self.function_name,
            lines: [self.span.start, self.span.end],
            description: &self.description,
            evidence: &self.evidence,
        }
        .serialize(s)
    }
}

impl Finding {
    pub fn weight(&self) -> u32 {
        self.pattern.weight()
    }

    pub fn is_file_level(&self) -> bool {
        self.contract_name.is_empty()
    }

    fn sort_key(&self) -> (&str, usize, PatternKind, usize, &str, usize, &str) {
        (
            &self.contract_name,
            self.span.start,
            self.pattern,
            self.span.end,
            &self.function_name,
            self.location.start,
            &self.evidence,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorConfig {
    pub enabled: BTreeSet<PatternKind>,
    /// Modifiers that restrict a function to one privileged account.
    pub owner_modifiers: Vec<String>,
    /// Pragmas admitting any version below this are deprecated.
    pub deprecated_below: Version,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            enabled: PatternKind::ALL.into_iter().collect(),
            owner_modifiers: vec!["onlyOwner".into(), "onlyRole".into(), "onlyAdmin".into()],
            deprecated_below: Version::new(0, 8, 0),
        }
    }
}

/// Runs every enabled detector; findings sorted by contract, line, pattern.
pub fn run_all(unit: &SourceUnit, config: &DetectorConfig) -> Vec<Finding> {
    let mut findings = Vec::new();
    for pattern in &config.enabled {
        let found = match pattern {
            PatternKind::SelfDestruct => detect_selfdestruct(unit),
            PatternKind::DelegateCall => detect_delegatecall(unit),
            PatternKind::ExternalCallInLoop => detect_external_call_in_loop(unit),
            PatternKind::PrivilegedMintWithdraw => detect_privileged_mint_withdraw(unit, &config.owner_modifiers),
            PatternKind::TxOriginAuth => detect_tx_origin_auth(unit),
            PatternKind::DeprecatedPragma => detect_deprecated_pragma(unit, config.deprecated_below),
        };
        findings.extend(found);
    }
    sort_findings(&mut findings);
    findings
}

pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// `contract` followed by its in-file ancestors, depth-first, without repeats.
pub fn hierarchy<'u>(unit: &'u SourceUnit, contract: &'u ContractDef) -> Vec<&'u ContractDef> {
    let mut out: Vec<&ContractDef> = Vec::new();
    let mut stack = vec![contract];
    while let Some(c) = stack.pop() {
        if out.iter().any(|seen| seen.name == c.name) {
            continue;
        }
        out.push(c);
        for base in c.bases.iter().rev() {
            if let Some(b) = unit.contract(base) {
                stack.push(b);
            }
        }
    }
    out
}

/// A function or modifier body together with its owner.
pub(crate) struct Body<'u> {
    pub contract: &'u ContractDef,
    pub name: &'u str,
    pub is_modifier: bool,
    pub block: &'u Block,
}

pub(crate) fn bodies(unit: &SourceUnit) -> impl Iterator<Item = Body<'_>> {
    unit.contracts.iter().flat_map(|contract| {
        let functions = contract.functions.iter().filter_map(move |f| {
            f.body.as_ref().map(|block| Body { contract, name: f.display_name(), is_modifier: false, block })
        });
        let modifiers = contract.modifiers.iter().filter_map(move |m| {
            m.body.as_ref().map(|block| Body { contract, name: &m.name, is_modifier: true, block })
        });
        functions.chain(modifiers)
    })
}

/// Source excerpt for `span`, trimmed and truncated on a char boundary.
pub(crate) fn excerpt(unit: &SourceUnit, span: Span) -> String {
    let text = unit.text(span).trim();
    match text.char_indices().nth(EVIDENCE_MAX_CHARS) {
        Some((cut, _)) => text[..cut].to_string(),
        None => text.to_string(),
    }
}

/// Trimmed text of the source line containing `offset`.
pub(crate) fn line_excerpt(unit: &SourceUnit, offset: usize) -> String {
    let line = unit.line_of(offset);
    let text = unit.line_range_text(LineSpan { start: line, end: line }).trim();
    match text.char_indices().nth(EVIDENCE_MAX_CHARS) {
        Some((cut, _)) => text[..cut].to_string(),
        None => text.to_string(),
    }
}

pub(crate) struct FindingBuilder<'u> {
    pub unit: &'u SourceUnit,
    pub contract: &'u str,
    pub function: &'u str,
}

impl FindingBuilder<'_> {
    pub fn at(&self, pattern: PatternKind, sub_kind: Option<SubKind>, span: Span, description: String) -> Finding {
        Finding {
            pattern,
            sub_kind,
            contract_name: self.contract.to_string(),
            function_name: self.function.to_string(),
            span: self.unit.lines(span),
            description,
            evidence: excerpt(self.unit, span),
            location: span,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_match_scoring_table() {
        let weights: Vec<u32> = PatternKind::ALL.iter().map(|p| p.weight()).collect();
        assert_eq!(weights, [3, 3, 2, 2, 2, 1]);
        assert_eq!(weights.iter().sum::<u32>(), 13);
    }

    #[test]
    fn pattern_names_round_trip() {
        for p in PatternKind::ALL {
            assert_eq!(p.as_str().parse::<PatternKind>().unwrap(), p);
        }
        assert_eq!("SelfDestruct".parse::<PatternKind>().unwrap(), PatternKind::SelfDestruct);
        assert!("reentrancy".parse::<PatternKind>().is_err());
    }
}
