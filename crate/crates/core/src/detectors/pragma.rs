use crate::frontend::{SourceUnit, Version};

use super::{excerpt, Finding, PatternKind};

/// One file-level finding when any `pragma solidity` admits a version below
/// `threshold`. Unparseable constraints are not reported.
pub fn detect_deprecated_pragma(unit: &SourceUnit, threshold: Version) -> Vec<Finding> {
    let Some(p) = unit
        .solidity_pragmas()
        .find(|p| p.version_range.as_ref().is_some_and(|r| r.admits_below(threshold)))
    else {
        return Vec::new();
    };
    vec![Finding {
        pattern: PatternKind::DeprecatedPragma,
        sub_kind: None,
        contract_name: String::new(),
        function_name: String::new(),
        span: unit.lines(p.span),
        description: format!("compiler constraint `{}` admits versions below {threshold}", p.constraint_text),
        evidence: excerpt(unit, p.span),
        location: p.span,
    }]
}
