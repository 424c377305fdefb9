//! Corpus-level statistics over risk profiles.

use std::collections::{BTreeMap, BTreeSet};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::detectors::{PatternKind, SubKind};
use crate::error::AggregateError;
use crate::risk::{RiskProfile, RiskTier, MAX_SCORE};
use crate::sanitizer::{EligibilityReport, GateKind};

pub const DEFAULT_TOP_N: usize = 10;
const PATTERNS: usize = PatternKind::ALL.len();

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AggregateOptions {
    pub top_n: usize,
    /// Count only weight-3 patterns in `multi_pattern_counts`.
    pub multi_pattern_high_weight_only: bool,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self { top_n: DEFAULT_TOP_N, multi_pattern_high_weight_only: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TopEntry {
    pub contract_id: String,
    pub score: u32,
    pub tier: RiskTier,
    pub distinct_patterns: BTreeSet<PatternKind>,
}

/// Contracts with at least 2, 3 and 4 distinct patterns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MultiPatternCounts(pub [u64; 3]);

impl MultiPatternCounts {
    pub const KEYS: [&'static str; 3] = ["2", "3", "4+"];

    pub fn at_least(&self, k: usize) -> u64 {
        match k {
            0..=1 => panic!("multi-pattern counts start at 2"),
            2 | 3 => self.0[k - 2],
            _ => self.0[2],
        }
    }
}

impl Serialize for MultiPatternCounts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(3))?;
        for (k, v) in Self::KEYS.iter().zip(self.0) {
            map.serialize_entry(k, &v)?;
        }
        map.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusReport {
    pub options: AggregateOptions,
    pub total_files_seen: u64,
    /// Files failing at least one sanitizer gate.
    pub excluded_files: u64,
    /// Per gate; a file failing two gates counts under both.
    pub excluded_by_gate: BTreeMap<GateKind, u64>,
    /// Eligible files where the NFT filter found no evidence.
    pub excluded_not_nft: u64,
    pub analyzed_contracts: u64,
    pub pattern_counts: BTreeMap<PatternKind, u64>,
    pub sub_kind_counts: BTreeMap<PatternKind, BTreeMap<SubKind, u64>>,
    pub tier_counts: BTreeMap<RiskTier, u64>,
    pub tier_percentages: BTreeMap<RiskTier, f64>,
    pub cooccurrence_matrix: [[u64; PATTERNS]; PATTERNS],
    pub multi_pattern_counts: MultiPatternCounts,
    pub top_n: Vec<TopEntry>,
    pub score_histogram: BTreeMap<u32, u64>,
    #[serde(skip)]
    contract_ids: BTreeSet<String>,
}

impl CorpusReport {
    pub fn empty(options: AggregateOptions) -> Self {
        let mut report = Self {
            options,
            total_files_seen: 0,
            excluded_files: 0,
            excluded_by_gate: GateKind::ALL.into_iter().map(|g| (g, 0)).collect(),
            excluded_not_nft: 0,
            analyzed_contracts: 0,
            pattern_counts: PatternKind::ALL.into_iter().map(|p| (p, 0)).collect(),
            sub_kind_counts: BTreeMap::new(),
            tier_counts: RiskTier::ALL.into_iter().map(|t| (t, 0)).collect(),
            tier_percentages: BTreeMap::new(),
            cooccurrence_matrix: [[0; PATTERNS]; PATTERNS],
            multi_pattern_counts: MultiPatternCounts::default(),
            top_n: Vec::new(),
            score_histogram: (0..=MAX_SCORE).map(|s| (s, 0)).collect(),
            contract_ids: BTreeSet::new(),
        };
        report.refresh_percentages();
        report
    }

    pub fn contract_ids(&self) -> &BTreeSet<String> {
        &self.contract_ids
    }

    /// Records one input file. `nft_relevant` is `None` when the file never
    /// reached classification.
    pub fn add_file(&mut self, eligibility: &EligibilityReport, nft_relevant: Option<bool>) {
        self.total_files_seen += 1;
        if !eligibility.passed {
            self.excluded_files += 1;
            for gate in eligibility.failed_gates() {
                *self.excluded_by_gate.entry(gate).or_default() += 1;
            }
        } else if nft_relevant == Some(false) {
            self.excluded_not_nft += 1;
        }
    }

    pub fn add_profile(&mut self, profile: &RiskProfile) -> Result<(), AggregateError> {
        if !self.contract_ids.insert(profile.contract_id.clone()) {
            return Err(AggregateError::DuplicateContract(profile.contract_id.clone()));
        }
        self.analyzed_contracts += 1;
        let patterns: Vec<PatternKind> = profile.distinct_patterns.iter().copied().collect();
        for &p in &patterns {
            *self.pattern_counts.entry(p).or_default() += 1;
            for &q in &patterns {
                self.cooccurrence_matrix[p.index()][q.index()] += 1;
            }
        }
        let sub_kinds: BTreeSet<(PatternKind, SubKind)> =
            profile.findings.iter().filter_map(|f| f.sub_kind.map(|s| (f.pattern, s))).collect();
        for (p, s) in sub_kinds {
            *self.sub_kind_counts.entry(p).or_default().entry(s).or_default() += 1;
        }
        *self.tier_counts.entry(profile.tier).or_default() += 1;
        *self.score_histogram.entry(profile.score).or_default() += 1;

        let counted = patterns
            .iter()
            .filter(|p| !self.options.multi_pattern_high_weight_only || p.weight() == 3)
            .count();
        for k in 2..=4 {
            if counted >= k {
                self.multi_pattern_counts.0[k - 2] += 1;
            }
        }

        self.top_n.push(TopEntry {
            contract_id: profile.contract_id.clone(),
            score: profile.score,
            tier: profile.tier,
            distinct_patterns: profile.distinct_patterns.clone(),
        });
        self.rank();
        self.refresh_percentages();
        Ok(())
    }

    /// Combines two reports over disjoint contract sets. Associative and
    /// commutative.
    pub fn merge(mut self, other: CorpusReport) -> Result<CorpusReport, AggregateError> {
        if let Some(dup) = self.contract_ids.intersection(&other.contract_ids).next() {
            return Err(AggregateError::DuplicateContract(dup.clone()));
        }
        self.contract_ids.extend(other.contract_ids);
        self.total_files_seen += other.total_files_seen;
        self.excluded_files += other.excluded_files;
        self.excluded_not_nft += other.excluded_not_nft;
        self.analyzed_contracts += other.analyzed_contracts;
        add_maps(&mut self.excluded_by_gate, other.excluded_by_gate);
        add_maps(&mut self.pattern_counts, other.pattern_counts);
        add_maps(&mut self.tier_counts, other.tier_counts);
        add_maps(&mut self.score_histogram, other.score_histogram);
        for (p, subs) in other.sub_kind_counts {
            add_maps(self.sub_kind_counts.entry(p).or_default(), subs);
        }
        for i in 0..PATTERNS {
            for j in 0..PATTERNS {
                self.cooccurrence_matrix[i][j] += other.cooccurrence_matrix[i][j];
            }
        }
        for k in 0..3 {
            self.multi_pattern_counts.0[k] += other.multi_pattern_counts.0[k];
        }
        self.top_n.extend(other.top_n);
        self.rank();
        self.refresh_percentages();
        Ok(self)
    }

    pub fn pattern_count(&self, p: PatternKind) -> u64 {
        self.pattern_counts.get(&p).copied().unwrap_or(0)
    }

    pub fn tier_count(&self, t: RiskTier) -> u64 {
        self.tier_counts.get(&t).copied().unwrap_or(0)
    }

    pub fn cooccurrence(&self, a: PatternKind, b: PatternKind) -> u64 {
        self.cooccurrence_matrix[a.index()][b.index()]
    }

    fn rank(&mut self) {
        self.top_n.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.contract_id.cmp(&b.contract_id)));
        self.top_n.truncate(self.options.top_n);
    }

    fn refresh_percentages(&mut self) {
        let total = self.analyzed_contracts;
        self.tier_percentages = RiskTier::ALL
            .into_iter()
            .map(|t| {
                let pct = if total == 0 { 0.0 } else { 100.0 * self.tier_count(t) as f64 / total as f64 };
                (t, pct)
            })
            .collect();
    }
}

fn add_maps<K: Ord>(into: &mut BTreeMap<K, u64>, from: BTreeMap<K, u64>) {
    for (k, v) in from {
        *into.entry(k).or_default() += v;
    }
}

/// Builds a report from profiles and per-file eligibility. Eligibility
/// reports carry no classification, so `excluded_not_nft` stays zero; use
/// [`CorpusReport::add_file`] directly to record it.
pub fn aggregate<'a>(
    profiles: impl IntoIterator<Item = &'a RiskProfile>,
    eligibility: impl IntoIterator<Item = &'a EligibilityReport>,
    options: AggregateOptions,
) -> Result<CorpusReport, AggregateError> {
    let mut report = CorpusReport::empty(options);
    for e in eligibility {
        report.add_file(e, None);
    }
    for p in profiles {
        report.add_profile(p)?;
    }
    Ok(report)
}
