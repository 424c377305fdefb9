//! NFT relevance filter.
//!
//! Three independent stages look for evidence that a file belongs to an NFT
//! project: ERC-721/1155 function signatures, inheritance from well-known
//! NFT or ownership bases, and NFT vocabulary in names and string literals.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::frontend::{canonical_signature, SourceUnit};

pub const DEFAULT_SIGNATURES: &[&str] = &[
    "ownerOf(uint256)",
    "balanceOf(address)",
    "tokenURI(uint256)",
    "safeTransferFrom(address,address,uint256)",
    "safeTransferFrom(address,address,uint256,bytes)",
    "supportsInterface(bytes4)",
    // ERC-1155
    "uri(uint256)",
    "balanceOf(address,uint256)",
    "safeTransferFrom(address,address,uint256,uint256,bytes)",
];

pub const DEFAULT_BASES: &[&str] = &["ERC721", "ERC1155", "Ownable", "AccessControl"];

pub const DEFAULT_KEYWORDS: &[&str] = &["NFT", "mint", "tokenId", "URI", "burn", "OpenSea", "Rarible"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalogs {
    pub signatures: BTreeSet<String>,
    /// Matched as case-sensitive substrings of declared base names.
    pub bases: BTreeSet<String>,
    /// Matched case-insensitively.
    pub keywords: BTreeSet<String>,
}

impl Default for Catalogs {
    fn default() -> Self {
        Self {
            signatures: DEFAULT_SIGNATURES.iter().map(|s| s.to_string()).collect(),
            bases: DEFAULT_BASES.iter().map(|s| s.to_string()).collect(),
            keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Catalogs {
    /// Adds a signature written as `name(type,...)`, normalizing type aliases.
    pub fn add_signature(&mut self, signature: &str) -> bool {
        let Some(open) = signature.find('(') else { return false };
        let Some(inner) = signature[open + 1..].strip_suffix(')') else { return false };
        let params: Vec<String> = inner
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect();
        self.signatures.insert(canonical_signature(signature[..open].trim(), &params));
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    InterfaceSignature,
    Inheritance,
    Keyword,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Evidence {
    pub stage: Stage,
    pub item: String,
    /// Where the match was found: `Contract`, `Contract.function`, or
    /// `string literal`.
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NftClassification {
    pub is_nft_relevant: bool,
    pub matched_signatures: BTreeSet<String>,
    pub matched_bases: BTreeSet<String>,
    pub matched_keywords: BTreeSet<String>,
    pub stage_hits: BTreeSet<Stage>,
    pub evidence: Vec<Evidence>,
}

impl NftClassification {
    pub fn fired(&self, stage: Stage) -> bool {
        self.stage_hits.contains(&stage)
    }
}

/// Classifies `unit`. With `strict`, relevance requires the signature or
/// inheritance stage; keyword hits alone are recorded but not sufficient.
pub fn classify(unit: &SourceUnit, catalogs: &Catalogs, strict: bool) -> NftClassification {
    let mut evidence = Vec::new();
    let mut matched_signatures = BTreeSet::new();
    let mut matched_bases = BTreeSet::new();
    let mut matched_keywords = BTreeSet::new();

    for contract in &unit.contracts {
        for f in &contract.functions {
            if catalogs.signatures.contains(&f.canonical_signature) {
                matched_signatures.insert(f.canonical_signature.clone());
                evidence.push(Evidence {
                    stage: Stage::InterfaceSignature,
                    item: f.canonical_signature.clone(),
                    location: format!("{}.{}", contract.name, f.display_name()),
                });
            }
        }
        for base in &contract.bases {
            for fragment in catalogs.bases.iter().filter(|frag| base.contains(frag.as_str())) {
                matched_bases.insert(fragment.clone());
                evidence.push(Evidence {
                    stage: Stage::Inheritance,
                    item: fragment.clone(),
                    location: format!("{} is {}", contract.name, base),
                });
            }
        }
    }

    let keywords: Vec<(String, &String)> = catalogs.keywords.iter().map(|k| (k.to_lowercase(), k)).collect();
    let mut match_text = |text: &str, location: String| {
        let lower = text.to_lowercase();
        for (needle, keyword) in &keywords {
            if lower.contains(needle.as_str()) {
                matched_keywords.insert((*keyword).clone());
                evidence.push(Evidence { stage: Stage::Keyword, item: (*keyword).clone(), location: location.clone() });
            }
        }
    };
    for contract in &unit.contracts {
        match_text(&contract.name, contract.name.clone());
        for f in contract.functions.iter().filter(|f| !f.name.is_empty()) {
            match_text(&f.name, format!("{}.{}", contract.name, f.name));
        }
    }
    for literal in &unit.string_literals {
        match_text(literal, "string literal".to_string());
    }

    evidence.sort();
    evidence.dedup();

    let mut stage_hits = BTreeSet::new();
    if !matched_signatures.is_empty() {
        stage_hits.insert(Stage::InterfaceSignature);
    }
    if !matched_bases.is_empty() {
        stage_hits.insert(Stage::Inheritance);
    }
    if !matched_keywords.is_empty() {
        stage_hits.insert(Stage::Keyword);
    }
    let is_nft_relevant = if strict {
        stage_hits.contains(&Stage::InterfaceSignature) || stage_hits.contains(&Stage::Inheritance)
    } else {
        !stage_hits.is_empty()
    };

    NftClassification { is_nft_relevant, matched_signatures, matched_bases, matched_keywords, stage_hits, evidence }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn run(src: &str, strict: bool) -> NftClassification {
        classify(&parse(src, "t.sol").unwrap(), &Catalogs::default(), strict)
    }

    #[test]
    fn interface_signatures_fire_stage_one() {
        let c = run(
            "contract Token {
                function ownerOf(uint256 id) public view returns (address) {}
                function tokenURI(uint id) public view returns (string memory) {}
            }",
            false,
        );
        assert!(c.is_nft_relevant);
        assert!(c.fired(Stage::InterfaceSignature));
        let expected: BTreeSet<String> = ["ownerOf(uint256)", "tokenURI(uint256)"].iter().map(|s| s.to_string()).collect();
        assert_eq!(c.matched_signatures, expected);
    }

    #[test]
    fn negative_vault() {
        let c = run("contract Vault { function sweep() external {} }", false);
        assert!(!c.is_nft_relevant);
        assert!(c.stage_hits.is_empty());
        assert!(c.evidence.is_empty());
    }

    #[test]
    fn base_substring_match() {
        let c = run("abstract contract ERC721A {} contract MyDrop is ERC721A {}", true);
        assert!(c.fired(Stage::Inheritance));
        assert!(c.matched_bases.contains("ERC721"));
        assert!(c.is_nft_relevant);
        // case-sensitive
        let lower = run("contract erc721lite {} contract D is erc721lite {}", true);
        assert!(!lower.fired(Stage::Inheritance));
    }

    #[test]
    fn keywords_are_case_insensitive_and_skip_comments() {
        let c = run("contract Drop { function airdropMINT() external {} }", false);
        assert!(c.matched_keywords.contains("mint"));
        let commented = run("// NFT mint OpenSea\ncontract Vault { function sweep() external {} }", false);
        assert!(commented.matched_keywords.is_empty());
        let literal = run("contract Vault { function f() external { emit Log(\"listed on OpenSea\"); } }", false);
        assert!(literal.matched_keywords.contains("OpenSea"));
    }

    #[test]
    fn strict_mode_ignores_keyword_only_hits() {
        let src = "contract NFTVault { function sweep() external {} }";
        assert!(run(src, false).is_nft_relevant);
        let strict = run(src, true);
        assert!(strict.fired(Stage::Keyword));
        assert!(!strict.is_nft_relevant);
    }

    #[test]
    fn catalog_additions_normalize() {
        let mut cat = Catalogs::default();
        assert!(cat.add_signature("royaltyInfo(uint, uint)"));
        assert!(cat.signatures.contains("royaltyInfo(uint256,uint256)"));
        assert!(!cat.add_signature("broken"));
        let u = parse("contract R { function royaltyInfo(uint256 a, uint256 b) external {} }", "r.sol").unwrap();
        assert!(classify(&u, &cat, true).is_nft_relevant);
    }

    #[test]
    fn erc1155_signatures() {
        let c = run(
            "contract Multi {
                function balanceOf(address a, uint256 id) external view returns (uint256) {}
                function uri(uint256) external view returns (string memory) {}
            }",
            true,
        );
        assert!(c.matched_signatures.contains("balanceOf(address,uint256)"));
        assert!(c.matched_signatures.contains("uri(uint256)"));
    }
}
