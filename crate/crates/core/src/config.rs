//! Run configuration: defaults, flat `key = value` files, and overrides.
//!
//! ```text
//! # comments start with '#'
//! workers = 4
//! owner_modifiers = onlyOwner, onlyAdmin, onlyDev
//! fail_on_tier = high
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::aggregate::AggregateOptions;
use crate::classifier::Catalogs;
use crate::detectors::{DetectorConfig, PatternKind};
use crate::error::ConfigError;
use crate::frontend::Version;
use crate::risk::{RiskTier, ScoringMode};
use crate::sanitizer::SanitizerConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub sanitizer: SanitizerConfig,
    pub detectors: DetectorConfig,
    pub catalogs: Catalogs,
    pub strict_nft: bool,
    pub scoring: ScoringMode,
    pub workers: usize,
    pub format: OutputFormat,
    pub out_dir: Option<PathBuf>,
    pub fail_on_tier: Option<RiskTier>,
    pub manifest: Option<PathBuf>,
    pub aggregate: AggregateOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sanitizer: SanitizerConfig::default(),
            detectors: DetectorConfig::default(),
            catalogs: Catalogs::default(),
            strict_nft: false,
            scoring: ScoringMode::Presence,
            workers: 1,
            format: OutputFormat::Json,
            out_dir: None,
            fail_on_tier: None,
            manifest: None,
            aggregate: AggregateOptions::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "workers",
    "format",
    "out",
    "fail_on_tier",
    "manifest",
    "strict_nft",
    "per_occurrence_scoring",
    "deprecated_below",
    "owner_modifiers",
    "disabled_patterns",
    "supported_version_floor",
    "supported_version_ceiling",
    "reject_exact_pins_outside_range",
    "allow_relative_imports_resolvable_in_corpus",
    "extra_signatures",
    "extra_bases",
    "extra_keywords",
    "top_n",
    "multi_pattern_high_weight_only",
];

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Splits on commas outside parentheses, for signature lists.
fn signature_list(value: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    for (i, ch) in value.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(value[start..i].trim().to_string());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(value[start..].trim().to_string());
    out.retain(|s| !s.is_empty());
    out
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(invalid(key, format!("`{other}` is not a boolean"))),
    }
}

fn parse_with<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    value.trim().parse::<T>().map_err(|e| invalid(key, e.to_string()))
}

impl RunConfig {
    /// Sets one option. Keys accept `-` or `_` as separators. Relative paths
    /// are resolved against `base_dir` when given.
    pub fn set(&mut self, key: &str, value: &str, base_dir: Option<&Path>) -> Result<(), ConfigError> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        let path = |v: &str| {
            let p = PathBuf::from(v.trim());
            match base_dir {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        };
        match k {
            "workers" => self.workers = parse_with(k, value)?,
            "format" => self.format = parse_with(k, value)?,
            "out" => self.out_dir = Some(path(value)),
            "fail_on_tier" => {
                self.fail_on_tier = match value.trim().to_ascii_lowercase().as_str() {
                    "" | "off" => None,
                    _ => Some(parse_with(k, value)?),
                }
            }
            "manifest" => self.manifest = Some(path(value)),
            "strict_nft" => self.strict_nft = parse_bool(k, value)?,
            "per_occurrence_scoring" => {
                self.scoring = if parse_bool(k, value)? { ScoringMode::PerOccurrence } else { ScoringMode::Presence }
            }
            "deprecated_below" => self.detectors.deprecated_below = parse_with::<Version>(k, value)?,
            "owner_modifiers" => self.detectors.owner_modifiers = list(value),
            "disabled_patterns" => {
                self.detectors.enabled = PatternKind::ALL.into_iter().collect();
                for name in list(value) {
                    let p: PatternKind = parse_with(k, &name)?;
                    self.detectors.enabled.remove(&p);
                }
            }
            "supported_version_floor" => self.sanitizer.supported_version_floor = parse_with(k, value)?,
            "supported_version_ceiling" => self.sanitizer.supported_version_ceiling = parse_with(k, value)?,
            "reject_exact_pins_outside_range" => self.sanitizer.reject_exact_pins_outside_range = parse_bool(k, value)?,
            "allow_relative_imports_resolvable_in_corpus" => {
                self.sanitizer.allow_relative_imports_resolvable_in_corpus = parse_bool(k, value)?
            }
            "extra_signatures" => {
                for sig in signature_list(value) {
                    if !self.catalogs.add_signature(&sig) {
                        return Err(invalid(k, format!("`{sig}` is not of the form name(type,...)")));
                    }
                }
            }
            "extra_bases" => self.catalogs.bases.extend(list(value)),
            "extra_keywords" => self.catalogs.keywords.extend(list(value)),
            "top_n" => self.aggregate.top_n = parse_with(k, value)?,
            "multi_pattern_high_weight_only" => self.aggregate.multi_pattern_high_weight_only = parse_bool(k, value)?,
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
        Ok(())
    }

    /// Applies a config file on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        self.apply_text(&text, &path.display().to_string(), path.parent())
    }

    pub fn apply_text(&mut self, text: &str, origin: &str, base_dir: Option<&Path>) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { path: origin.to_string(), line: i + 1, message: "expected `key = value`".into() });
            };
            self.set(key, value, base_dir).map_err(|e| match e {
                ConfigError::UnknownKey(_) | ConfigError::Invalid { .. } => {
                    ConfigError::Syntax { path: origin.to_string(), line: i + 1, message: e.to_string() }
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.fail_on_tier == Some(RiskTier::None) {
            return Err(invalid("fail_on_tier", "must be high, medium or low"));
        }
        if self.aggregate.top_n == 0 {
            return Err(invalid("top_n", "must be at least 1"));
        }
        self.sanitizer.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# demo\nworkers = 4\nowner_modifiers = onlyOwner, onlyDev\nfail-on-tier = medium\n\
             per_occurrence_scoring = true\ndisabled_patterns = deprecated_pragma\nextra_signatures = royaltyInfo(uint,uint), name()\n",
            "c.conf",
            None,
        )
        .unwrap();
        assert_eq!(c.workers, 4);
        assert_eq!(c.detectors.owner_modifiers, ["onlyOwner", "onlyDev"]);
        assert_eq!(c.fail_on_tier, Some(RiskTier::Medium));
        assert_eq!(c.scoring, ScoringMode::PerOccurrence);
        assert!(!c.detectors.enabled.contains(&PatternKind::DeprecatedPragma));
        assert!(c.catalogs.signatures.contains("royaltyInfo(uint256,uint256)"));
        c.validate().unwrap();
    }

    #[test]
    fn later_settings_win() {
        let mut c = RunConfig::default();
        c.apply_text("workers = 4", "c", None).unwrap();
        c.set("workers", "2", None).unwrap();
        assert_eq!(c.workers, 2);
    }

    #[test]
    fn errors_report_line() {
        let mut c = RunConfig::default();
        match c.apply_text("workers = 2\nnonsense\n", "c.conf", None).unwrap_err() {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 2),
            e => panic!("{e:?}"),
        }
        match c.apply_text("colour = blue", "c.conf", None).unwrap_err() {
            ConfigError::Syntax { message, .. } => assert!(message.contains("colour")),
            e => panic!("{e:?}"),
        }
        assert!(c.set("workers", "many", None).is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig { workers: 0, ..Default::default() };
        assert!(c.validate().is_err());
        c.workers = 1;
        c.fail_on_tier = Some(RiskTier::None);
        assert!(c.validate().is_err());
        c.fail_on_tier = None;
        c.set("supported_version_floor", "0.9.0", None).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut c = RunConfig::default();
        c.apply_text("manifest = m.csv\nout = /tmp/x", "c", Some(Path::new("/etc/scan"))).unwrap();
        assert_eq!(c.manifest.unwrap(), PathBuf::from("/etc/scan/m.csv"));
        assert_eq!(c.out_dir.unwrap(), PathBuf::from("/tmp/x"));
    }
}
