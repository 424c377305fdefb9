//! Property tests for scoring, aggregation, versions and parser robustness.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rugscan_core::aggregate::{aggregate, AggregateOptions, CorpusReport};
use rugscan_core::detectors::{Finding, PatternKind, SubKind};
use rugscan_core::frontend::{parse, tokenize, LineSpan, Span, Version, VersionRange};
use rugscan_core::risk::{profile, score, tier, RiskProfile, RiskTier, ScoringMode};

fn finding(pattern: PatternKind, sub_kind: Option<SubKind>, line: usize) -> Finding {
    Finding {
        pattern,
        sub_kind,
        contract_name: "C".into(),
        function_name: "f".into(),
        span: LineSpan { start: line, end: line },
        description: String::new(),
        evidence: String::new(),
        location: Span::default(),
    }
}

fn arb_pattern() -> impl Strategy<Value = PatternKind> {
    prop::sample::select(PatternKind::ALL.to_vec())
}

fn arb_findings(max: usize) -> impl Strategy<Value = Vec<Finding>> {
    prop::collection::vec((arb_pattern(), 1usize..500), 0..max)
        .prop_map(|v| v.into_iter().map(|(p, l)| finding(p, None, l)).collect())
}

/// Thresholds written out independently of the library.
fn expected_tier(score: u32) -> RiskTier {
    if score >= 5 {
        RiskTier::High
    } else if score >= 3 {
        RiskTier::Medium
    } else if score >= 1 {
        RiskTier::Low
    } else {
        RiskTier::None
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn duplicate_findings_leave_profile_unchanged(findings in arb_findings(20), pick in any::<prop::sample::Index>()) {
        prop_assume!(!findings.is_empty());
        let base = profile("f.sol", "C", findings.clone(), None, ScoringMode::Presence);
        let mut dup = findings.clone();
        dup.push(findings[pick.index(findings.len())].clone());
        let again = profile("f.sol", "C", dup, None, ScoringMode::Presence);
        prop_assert_eq!(base.score, again.score);
        prop_assert_eq!(base.tier, again.tier);
        prop_assert_eq!(base.distinct_patterns, again.distinct_patterns);
        prop_assert_eq!(base.contract_id, again.contract_id);
    }

    #[test]
    fn new_pattern_raises_score(findings in arb_findings(12), extra in arb_pattern()) {
        let findings: Vec<Finding> = findings.into_iter().filter(|f| f.pattern != extra).collect();
        let (before, _) = score(&findings, ScoringMode::Presence);
        let mut more = findings.clone();
        more.push(finding(extra, None, 1));
        let (after, _) = score(&more, ScoringMode::Presence);
        prop_assert!(after > before);
        prop_assert!(tier(after) >= tier(before));
    }

    #[test]
    fn presence_score_is_weight_sum(findings in arb_findings(30)) {
        let (s, distinct) = score(&findings, ScoringMode::Presence);
        let weights = [3u32, 3, 2, 2, 2, 1];
        let mut seen = [false; 6];
        for f in &findings {
            seen[PatternKind::ALL.iter().position(|p| *p == f.pattern).unwrap()] = true;
        }
        let oracle: u32 = seen.iter().zip(weights).filter(|(s, _)| **s).map(|(_, w)| w).sum();
        prop_assert_eq!(s, oracle);
        prop_assert!(s <= 13);
        prop_assert_eq!(distinct.len(), seen.iter().filter(|s| **s).count());
        prop_assert_eq!(tier(s), expected_tier(s));
    }

    #[test]
    fn tiers_partition_scores(s in 0u32..10_000) {
        prop_assert_eq!(tier(s), expected_tier(s));
    }
}

fn arb_profiles(max: usize) -> impl Strategy<Value = Vec<RiskProfile>> {
    let subs = prop::sample::select(vec![None, Some(SubKind::Direct), Some(SubKind::Assembly)]);
    prop::collection::vec(prop::collection::vec((arb_pattern(), subs), 0..8), 0..=max).prop_map(|contracts| {
        contracts
            .into_iter()
            .enumerate()
            .map(|(i, fs)| {
                let findings = fs.into_iter().map(|(p, s)| finding(p, s, 1)).collect();
                profile(&format!("f{}.sol", i % 7), &format!("C{i}"), findings, None, ScoringMode::Presence)
            })
            .collect()
    })
}

struct Recount {
    pattern_counts: BTreeMap<PatternKind, u64>,
    tier_counts: BTreeMap<RiskTier, u64>,
    cooccurrence: [[u64; 6]; 6],
    multi: [u64; 3],
    top: Vec<(String, u32)>,
}

fn recount(profiles: &[RiskProfile], top_n: usize) -> Recount {
    let mut r = Recount {
        pattern_counts: PatternKind::ALL.iter().map(|p| (*p, 0)).collect(),
        tier_counts: [RiskTier::High, RiskTier::Medium, RiskTier::Low, RiskTier::None].iter().map(|t| (*t, 0)).collect(),
        cooccurrence: [[0; 6]; 6],
        multi: [0; 3],
        top: Vec::new(),
    };
    for p in profiles {
        let set: BTreeSet<PatternKind> = p.findings.iter().map(|f| f.pattern).collect();
        for (i, a) in PatternKind::ALL.iter().enumerate() {
            if set.contains(a) {
                *r.pattern_counts.get_mut(a).unwrap() += 1;
            }
            for (j, b) in PatternKind::ALL.iter().enumerate() {
                if set.contains(a) && set.contains(b) {
                    r.cooccurrence[i][j] += 1;
                }
            }
        }
        let s: u32 = set.iter().map(|p| p.weight()).sum();
        *r.tier_counts.get_mut(&expected_tier(s)).unwrap() += 1;
        if set.len() >= 2 {
            r.multi[0] += 1;
        }
        if set.len() >= 3 {
            r.multi[1] += 1;
        }
        if set.len() >= 4 {
            r.multi[2] += 1;
        }
        r.top.push((p.contract_id.clone(), s));
    }
    r.top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    r.top.truncate(top_n);
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn aggregate_matches_brute_force(profiles in arb_profiles(50)) {
        let opts = AggregateOptions::default();
        let report = aggregate(&profiles, [], opts).unwrap();
        let oracle = recount(&profiles, opts.top_n);
        prop_assert_eq!(&report.pattern_counts, &oracle.pattern_counts);
        prop_assert_eq!(&report.tier_counts, &oracle.tier_counts);
        prop_assert_eq!(report.cooccurrence_matrix, oracle.cooccurrence);
        prop_assert_eq!(report.multi_pattern_counts.0, oracle.multi);
        let top: Vec<(String, u32)> = report.top_n.iter().map(|e| (e.contract_id.clone(), e.score)).collect();
        prop_assert_eq!(top, oracle.top);
        check_invariants(&report);
    }

    #[test]
    fn merge_over_partitions(profiles in arb_profiles(50), labels in prop::collection::vec(0usize..5, 50), order in any::<u64>()) {
        let opts = AggregateOptions::default();
        let whole = aggregate(&profiles, [], opts).unwrap();
        let mut parts: Vec<Vec<&RiskProfile>> = vec![Vec::new(); 5];
        for (i, p) in profiles.iter().enumerate() {
            parts[labels[i]].push(p);
        }
        let mut reports: Vec<CorpusReport> = parts.into_iter().map(|ps| aggregate(ps, [], opts).unwrap()).collect();
        reports.rotate_left((order % 5) as usize);
        if order % 2 == 0 {
            reports.reverse();
        }
        let merged = reports.into_iter().try_fold(CorpusReport::empty(opts), CorpusReport::merge).unwrap();
        prop_assert_eq!(merged, whole);
    }

    #[test]
    fn merge_is_associative(a in arb_profiles(10), b in arb_profiles(10), c in arb_profiles(10)) {
        let opts = AggregateOptions { top_n: 4, ..Default::default() };
        let tag = |ps: Vec<RiskProfile>, t: &str| -> Vec<RiskProfile> {
            ps.into_iter().map(|mut p| { p.contract_id = format!("{t}/{}", p.contract_id); p }).collect()
        };
        let (a, b, c) = (tag(a, "a"), tag(b, "b"), tag(c, "c"));
        let ra = aggregate(&a, [], opts).unwrap();
        let rb = aggregate(&b, [], opts).unwrap();
        let rc = aggregate(&c, [], opts).unwrap();
        let left = ra.clone().merge(rb.clone()).unwrap().merge(rc.clone()).unwrap();
        let right = ra.merge(rb.merge(rc).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }
}

fn check_invariants(r: &CorpusReport) {
    assert_eq!(r.tier_counts.values().sum::<u64>(), r.analyzed_contracts);
    if r.analyzed_contracts > 0 {
        let total: f64 = r.tier_percentages.values().sum();
        assert!((total - 100.0).abs() <= 0.1);
    }
    for a in PatternKind::ALL {
        assert_eq!(r.cooccurrence(a, a), r.pattern_count(a));
        for b in PatternKind::ALL {
            assert_eq!(r.cooccurrence(a, b), r.cooccurrence(b, a));
            assert!(r.cooccurrence(a, b) <= r.pattern_count(a).min(r.pattern_count(b)));
        }
    }
    let m = r.multi_pattern_counts;
    assert!(m.at_least(2) >= m.at_least(3) && m.at_least(3) >= m.at_least(4));
    assert!(r.top_n.windows(2).all(|w| (w[0].score, &w[1].contract_id) >= (w[1].score, &w[0].contract_id)));
}

fn arb_version() -> impl Strategy<Value = Version> {
    (0u64..2, 0u64..12, 0u64..30).prop_map(|(a, b, c)| Version::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn lower_bound_ranges_are_monotone(lo in arb_version(), v in arb_version(), w in arb_version()) {
        let range = VersionRange::parse(&format!(">={lo}")).unwrap();
        prop_assert_eq!(range.contains(v), v >= lo);
        if range.contains(v) && w >= v {
            prop_assert!(range.contains(w));
        }
    }

    #[test]
    fn caret_stays_within_minor_for_zero_major(base in arb_version(), v in arb_version()) {
        prop_assume!(base.major == 0 && base.minor > 0);
        let range = VersionRange::parse(&format!("^{base}")).unwrap();
        let oracle = v >= base && v.major == 0 && v.minor == base.minor;
        prop_assert_eq!(range.contains(v), oracle);
    }

    #[test]
    fn admits_below_is_monotone_in_threshold(lo in arb_version(), t1 in arb_version(), t2 in arb_version()) {
        let range = VersionRange::parse(&format!(">={lo}")).unwrap();
        let (small, large) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        if range.admits_below(small) {
            prop_assert!(range.admits_below(large));
        }
        prop_assert_eq!(range.admits_below(large), lo < large);
    }

    #[test]
    fn exact_pin_is_single_version(v in arb_version(), w in arb_version()) {
        let range = VersionRange::parse(&v.to_string()).unwrap();
        prop_assert_eq!(range.contains(w), v == w);
    }
}

const SOUP: &[&str] = &[
    "contract", "C", "{", "}", "(", ")", "function", "f", "public", "external", "returns", ";", "uint256", "x", "=",
    "1", "if", "for", "while", "selfdestruct", "tx", ".", "origin", "==", "msg", "sender", "require", "modifier",
    "_", "assembly", "\"s\"", "pragma", "solidity", "^0.8.0", "import", "is", ",", "[", "]", "mapping", "=>", "emit",
    "unchecked", "try", "catch", "new", "delegatecall", "interface", "library", "using", "for", "//c\n", "/*x*/",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn parser_never_panics_on_token_soup(tokens in prop::collection::vec(prop::sample::select(SOUP.to_vec()), 0..80)) {
        let src = tokens.join(" ");
        if let Ok(unit) = parse(&src, "soup.sol") {
            let _ = rugscan_core::detectors::run_all(&unit, &Default::default());
        }
    }

    #[test]
    fn lexer_never_panics(src in "\\PC{0,200}") {
        let _ = tokenize(&src);
        let _ = parse(&src, "any.sol");
    }
}
