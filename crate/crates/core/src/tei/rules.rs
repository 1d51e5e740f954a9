use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pattern::PathPattern;
use crate::error::{Error, Result};
use crate::region::RegionType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoteResolution {
    /// Notes are transcribed near their reference marks.
    Inline,
    /// Notes live in a separate section and are linked by IDREF.
    LinkedIdref,
}

#[derive(Debug, Clone)]
pub struct SelectorRule {
    pub region: RegionType,
    pub pattern: PathPattern,
}

/// Corpus-specific selectors mapping markup to region types.
#[derive(Debug, Clone)]
pub struct SelectorRuleSet {
    pub corpus: String,
    pub text_root: String,
    pub rules: Vec<SelectorRule>,
    pub page_break: PathPattern,
    pub column_break: Option<PathPattern>,
    pub note_resolution: NoteResolution,
    pub notes_container: Option<PathPattern>,
    pub note_reference_attributes: Vec<String>,
    /// Attributes whose presence marks a note as the continuation of an earlier one.
    pub run_on_attributes: Vec<String>,
    pub drop: Vec<PathPattern>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    region: String,
    path: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRuleSet {
    corpus: String,
    #[serde(default = "default_text_root")]
    text_root: String,
    page_break: String,
    column_break: Option<String>,
    #[serde(default = "default_resolution")]
    note_resolution: NoteResolution,
    notes_container: Option<String>,
    #[serde(default = "default_ref_attrs")]
    note_reference_attributes: Vec<String>,
    #[serde(default)]
    run_on_attributes: Vec<String>,
    #[serde(default)]
    drop: Vec<String>,
    #[serde(default)]
    rules: Vec<RawRule>,
}

fn default_text_root() -> String {
    "text".into()
}

fn default_resolution() -> NoteResolution {
    NoteResolution::Inline
}

fn default_ref_attrs() -> Vec<String> {
    vec!["target".into(), "corresp".into()]
}

const DTA: &str = include_str!("../../rules/dta.toml");
const TCP: &str = include_str!("../../rules/tcp.toml");
const WWO: &str = include_str!("../../rules/wwo.toml");

impl SelectorRuleSet {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawRuleSet = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    /// One of the bundled rule sets: `dta`, `tcp` or `wwo`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "dta" => Self::from_toml_str(DTA),
            "tcp" => Self::from_toml_str(TCP),
            "wwo" => Self::from_toml_str(WWO),
            other => Err(Error::Config(format!("no builtin rule set `{other}`"))),
        }
    }

    fn from_raw(raw: RawRuleSet) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut rules = Vec::with_capacity(raw.rules.len());
        for r in raw.rules {
            let region: RegionType = r.region.parse()?;
            if region == RegionType::Body {
                return Err(Error::Config(
                    "body is everything not selected by another rule; it takes no selector".into(),
                ));
            }
            if region != RegionType::Figure && !seen.insert(region) {
                return Err(Error::Config(format!("more than one rule for region `{region}`")));
            }
            rules.push(SelectorRule {
                region,
                pattern: PathPattern::parse(&r.path)?,
            });
        }
        let parse_all = |v: Vec<String>| -> Result<Vec<PathPattern>> {
            v.iter().map(|s| PathPattern::parse(s)).collect()
        };
        let set = SelectorRuleSet {
            corpus: raw.corpus,
            text_root: raw.text_root,
            rules,
            page_break: PathPattern::parse(&raw.page_break)?,
            column_break: raw.column_break.as_deref().map(PathPattern::parse).transpose()?,
            note_resolution: raw.note_resolution,
            notes_container: raw.notes_container.as_deref().map(PathPattern::parse).transpose()?,
            note_reference_attributes: raw.note_reference_attributes,
            run_on_attributes: raw.run_on_attributes,
            drop: parse_all(raw.drop)?,
        };
        if set.note_resolution == NoteResolution::LinkedIdref && set.rule_for(RegionType::Note).is_none() {
            return Err(Error::Config("linked-idref note resolution requires a note rule".into()));
        }
        Ok(set)
    }

    pub fn rule_for(&self, region: RegionType) -> Option<&SelectorRule> {
        self.rules.iter().find(|r| r.region == region)
    }
}
